//! TOML configuration: the universe to enumerate and the output format.

use std::path::Path;

use anyhow::{Context, Result};
use seclab_core::universe::VarDecl;
use seclab_core::{Universe, Value};
use serde::{Deserialize, Serialize};

/// The shipped fixture configuration.
pub const FIXTURE: &str = include_str!("../../../fixtures/fixture.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub output: Output,
    pub universe: UniverseConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseConfig {
    pub vars: Vec<VarDecl>,
    pub vmax: Value,
    pub fuel: usize,
    pub term_depth: usize,
    pub ctx_depth: usize,
    pub literal_pool: Option<Vec<Value>>,
    #[serde(default)]
    pub term_expr_depth: usize,
    pub enum_cap: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let config: Config = toml::from_str(text).context("invalid configuration")?;
        config.universe()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn fixture() -> Config {
        Config::parse(FIXTURE).expect("shipped fixture is valid")
    }

    pub fn universe(&self) -> Result<Universe> {
        let c = &self.universe;
        let mut b = Universe::builder()
            .vars(c.vars.clone())
            .vmax(c.vmax)
            .fuel(c.fuel)
            .term_depth(c.term_depth)
            .ctx_depth(c.ctx_depth)
            .term_expr_depth(c.term_expr_depth);
        if let Some(pool) = &c.literal_pool {
            b = b.literals(pool.iter().copied());
        }
        if let Some(cap) = c.enum_cap {
            b = b.enum_cap(cap);
        }
        Ok(b.build()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_the_core_fixture() {
        let c = Config::fixture();
        assert_eq!(c.output, Output::Text);
        assert_eq!(c.universe().unwrap(), Universe::fixture());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_vmax = FIXTURE.replace("vmax = 63", "vmax = 0");
        assert!(Config::parse(&bad_vmax).is_err());
        let unknown = FIXTURE.replace("fuel = 64", "fuel = 64\nspeed = 3");
        assert!(Config::parse(&unknown).is_err());
        assert!(Config::parse("output = \"json\"").is_err());
        let lit = FIXTURE.replace("[0, 1, 2, 42]", "[0, 64]");
        let e = Config::parse(&lit).unwrap_err();
        assert!(format!("{e:#}").contains("literal 64 exceeds vmax 63"), "{e:#}");
    }
}
