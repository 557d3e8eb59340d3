//! The finite world every check runs in: security-labelled variables, the
//! value bound, fuel and enumeration depths.
//!
//! Stores are total maps from the declared variables to `0..=vmax`. Since the
//! store space is finite they are represented by their mixed-radix index, the
//! first declared variable being the most significant digit. That keeps
//! traces and behaviour tables compact and makes `Store` a `Copy` key.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Value = u32;

/// Scratch buffer holding the decoded values of a store.
pub type Values = SmallVec<[Value; 4]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lang {
    Source,
    Target,
}

impl Lang {
    pub fn name(self) -> &'static str {
        match self {
            Lang::Source => "source",
            Lang::Target => "target",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u16);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub level: Level,
}

/// A store, identified by its index in the universe's store space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Store(pub u32);

impl Store {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub const DEFAULT_LITERALS: [Value; 4] = [0, 1, 2, 42];
pub const DEFAULT_ENUM_CAP: usize = 20_000_000;

const KEYWORDS: [&str; 6] = ["skip", "while", "obs", "sandbox", "hole", "not"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    vars: Vec<VarDecl>,
    vmax: Value,
    fuel: usize,
    term_depth: usize,
    ctx_depth: usize,
    literal_pool: Vec<Value>,
    term_expr_depth: usize,
    enum_cap: usize,
    // derived
    strides: Vec<u64>,
    store_count: u64,
    // bit offsets of each variable when the modulus is a power of two
    shifts: Option<Vec<u32>>,
}

impl Universe {
    pub fn builder() -> UniverseBuilder {
        UniverseBuilder::default()
    }

    /// `{h: High, l: Low}`, vmax 63, fuel 64, term depth 4, context depth 2,
    /// literals `{0, 1, 2, 42}`.
    pub fn fixture() -> Universe {
        Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(63)
            .fuel(64)
            .term_depth(4)
            .ctx_depth(2)
            .build()
            .expect("fixture universe is valid")
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn vmax(&self) -> Value {
        self.vmax
    }

    pub fn modulus(&self) -> u64 {
        self.vmax as u64 + 1
    }

    pub fn fuel(&self) -> usize {
        self.fuel
    }

    pub fn term_depth(&self) -> usize {
        self.term_depth
    }

    pub fn ctx_depth(&self) -> usize {
        self.ctx_depth
    }

    pub fn literal_pool(&self) -> &[Value] {
        &self.literal_pool
    }

    pub fn term_expr_depth(&self) -> usize {
        self.term_expr_depth
    }

    pub fn enum_cap(&self) -> usize {
        self.enum_cap
    }

    pub fn store_count(&self) -> u64 {
        self.store_count
    }

    /// Copy of this universe with a different fuel.
    pub fn with_fuel(&self, fuel: usize) -> Result<Universe> {
        self.to_builder().fuel(fuel).build()
    }

    pub fn with_term_depth(&self, depth: usize) -> Result<Universe> {
        self.to_builder().term_depth(depth).build()
    }

    pub fn with_ctx_depth(&self, depth: usize) -> Result<Universe> {
        self.to_builder().ctx_depth(depth).build()
    }

    pub fn to_builder(&self) -> UniverseBuilder {
        UniverseBuilder {
            vars: self.vars.clone(),
            vmax: self.vmax,
            fuel: self.fuel,
            term_depth: self.term_depth,
            ctx_depth: self.ctx_depth,
            literal_pool: Some(self.literal_pool.clone()),
            term_expr_depth: self.term_expr_depth,
            enum_cap: self.enum_cap,
        }
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .map(|i| VarId(i as u16))
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn level(&self, v: VarId) -> Level {
        self.vars[v.index()].level
    }

    pub fn is_high(&self, v: VarId) -> bool {
        self.level(v) == Level::High
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len()).map(|i| VarId(i as u16))
    }

    pub fn stores(&self) -> impl ExactSizeIterator<Item = Store> {
        (0..self.store_count as u32).map(Store)
    }

    #[inline]
    pub fn get(&self, s: Store, v: VarId) -> Value {
        match &self.shifts {
            Some(shifts) => (s.0 >> shifts[v.index()]) & self.vmax,
            None => (s.0 / self.strides[v.index()] as u32) % (self.vmax + 1),
        }
    }

    pub fn set(&self, s: Store, v: VarId, value: Value) -> Store {
        debug_assert!(value <= self.vmax);
        let stride = self.strides[v.index()];
        let old = self.get(s, v) as u64;
        Store((s.0 as u64 - old * stride + value as u64 * stride) as u32)
    }

    pub fn stride(&self, v: VarId) -> u64 {
        self.strides[v.index()]
    }

    pub fn decode(&self, s: Store) -> Values {
        self.var_ids().map(|v| self.get(s, v)).collect()
    }

    pub fn encode(&self, values: &[Value]) -> Store {
        let idx: u64 = values
            .iter()
            .zip(&self.strides)
            .map(|(&x, &stride)| x as u64 * stride)
            .sum();
        Store(idx as u32)
    }

    pub fn store_from(&self, values: &[Value]) -> Result<Store> {
        if values.len() != self.vars.len() {
            return Err(Error::InvalidStore(format!(
                "expected {} values, got {}",
                self.vars.len(),
                values.len()
            )));
        }
        if let Some(&x) = values.iter().find(|&&x| x > self.vmax) {
            return Err(Error::InvalidStore(format!("value {x} exceeds vmax {}", self.vmax)));
        }
        Ok(self.encode(values))
    }

    /// Builds a store from `(name, value)` pairs; every variable must be given.
    pub fn store_of(&self, pairs: &[(&str, Value)]) -> Result<Store> {
        let mut values: Vec<Option<Value>> = vec![None; self.vars.len()];
        for &(name, x) in pairs {
            let v = self
                .var(name)
                .ok_or_else(|| Error::UndeclaredVariable(name.to_string()))?;
            if values[v.index()].replace(x).is_some() {
                return Err(Error::InvalidStore(format!("`{name}` assigned twice")));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                x.ok_or_else(|| {
                    Error::InvalidStore(format!("missing variable `{}`", self.vars[i].name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.store_from(&values)
    }

    pub fn low_eq(&self, a: Store, b: Store) -> bool {
        self.var_ids()
            .filter(|&v| !self.is_high(v))
            .all(|v| self.get(a, v) == self.get(b, v))
    }

    /// Index of the low projection of a store; two stores are low-equivalent
    /// iff their low keys coincide.
    pub fn low_key(&self, s: Store) -> u64 {
        self.var_ids()
            .filter(|&v| !self.is_high(v))
            .fold(0, |acc, v| acc * self.modulus() + self.get(s, v) as u64)
    }

    /// `{h=1,l=0}`
    pub fn show_store(&self, s: Store) -> String {
        let mut out = String::from("{");
        for (i, v) in self.var_ids().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(self.var_name(v));
            out.push('=');
            out.push_str(&self.get(s, v).to_string());
        }
        out.push('}');
        out
    }

    pub fn is_keyword(word: &str) -> bool {
        KEYWORDS.contains(&word)
    }
}

#[derive(Debug, Clone)]
pub struct UniverseBuilder {
    vars: Vec<VarDecl>,
    vmax: Value,
    fuel: usize,
    term_depth: usize,
    ctx_depth: usize,
    literal_pool: Option<Vec<Value>>,
    term_expr_depth: usize,
    enum_cap: usize,
}

impl Default for UniverseBuilder {
    fn default() -> Self {
        UniverseBuilder {
            vars: Vec::new(),
            vmax: 63,
            fuel: 64,
            term_depth: 4,
            ctx_depth: 2,
            literal_pool: None,
            term_expr_depth: 0,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

impl UniverseBuilder {
    pub fn var(mut self, name: &str, level: Level) -> Self {
        self.vars.push(VarDecl {
            name: name.to_string(),
            level,
        });
        self
    }

    pub fn vars(mut self, vars: Vec<VarDecl>) -> Self {
        self.vars = vars;
        self
    }

    pub fn vmax(mut self, vmax: Value) -> Self {
        self.vmax = vmax;
        self
    }

    pub fn fuel(mut self, fuel: usize) -> Self {
        self.fuel = fuel;
        self
    }

    pub fn term_depth(mut self, depth: usize) -> Self {
        self.term_depth = depth;
        self
    }

    pub fn ctx_depth(mut self, depth: usize) -> Self {
        self.ctx_depth = depth;
        self
    }

    /// Constants available to the enumerators. Defaults to `{0, 1, 2, 42}`
    /// restricted to `0..=vmax`.
    pub fn literals(mut self, pool: impl IntoIterator<Item = Value>) -> Self {
        self.literal_pool = Some(pool.into_iter().collect());
        self
    }

    /// Operator depth of the expressions used inside enumerated terms
    /// (0: literals and variables only, 1: one operator layer).
    pub fn term_expr_depth(mut self, depth: usize) -> Self {
        self.term_expr_depth = depth;
        self
    }

    pub fn enum_cap(mut self, cap: usize) -> Self {
        self.enum_cap = cap;
        self
    }

    pub fn build(self) -> Result<Universe> {
        let bad = |msg: String| Err(Error::InvalidUniverse(msg));
        if self.vars.is_empty() {
            return bad("at least one variable is required".into());
        }
        for (i, v) in self.vars.iter().enumerate() {
            let mut chars = v.name.chars();
            let ident = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ident || Universe::is_keyword(&v.name) {
                return bad(format!("`{}` is not a valid variable name", v.name));
            }
            if self.vars[..i].iter().any(|w| w.name == v.name) {
                return bad(format!("variable `{}` declared twice", v.name));
            }
        }
        if self.vmax < 1 {
            return bad("vmax must be at least 1".into());
        }
        if self.fuel < 1 {
            return bad("fuel must be at least 1".into());
        }
        if self.term_expr_depth > 1 {
            return bad("term_expr_depth must be 0 or 1".into());
        }
        let literal_pool = match self.literal_pool {
            Some(pool) => {
                if let Some(&x) = pool.iter().find(|&&x| x > self.vmax) {
                    return bad(format!("literal {x} exceeds vmax {}", self.vmax));
                }
                let mut seen = Vec::new();
                for x in pool {
                    if !seen.contains(&x) {
                        seen.push(x);
                    }
                }
                seen
            }
            None => DEFAULT_LITERALS
                .iter()
                .copied()
                .filter(|&x| x <= self.vmax)
                .collect(),
        };
        let modulus = self.vmax as u64 + 1;
        let n = self.vars.len() as u32;
        let store_count = match modulus.checked_pow(n) {
            Some(c) if c <= u32::MAX as u64 => c,
            _ => return bad(format!("{modulus}^{n} stores do not fit a 32-bit index")),
        };
        let strides: Vec<u64> = (0..n).map(|i| modulus.pow(n - 1 - i)).collect();
        let shifts = modulus
            .is_power_of_two()
            .then(|| strides.iter().map(|s| s.trailing_zeros()).collect());
        Ok(Universe {
            vars: self.vars,
            vmax: self.vmax,
            fuel: self.fuel,
            term_depth: self.term_depth,
            ctx_depth: self.ctx_depth,
            literal_pool,
            term_expr_depth: self.term_expr_depth,
            enum_cap: self.enum_cap,
            strides,
            store_count,
            shifts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hl(vmax: Value) -> Universe {
        Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(vmax)
            .build()
            .unwrap()
    }

    #[test]
    fn store_index_roundtrip() {
        let u = hl(63);
        assert_eq!(u.store_count(), 4096);
        for s in u.stores() {
            assert_eq!(u.encode(&u.decode(s)), s);
        }
        let s = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        assert_eq!(s, Store(64));
        assert_eq!(u.show_store(s), "{h=1,l=0}");
        let t = u.set(s, u.var("h").unwrap(), 42);
        assert_eq!(u.show_store(t), "{h=42,l=0}");
    }

    #[test]
    fn low_equivalence_ignores_high_vars() {
        let u = hl(63);
        let a = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        let b = u.store_of(&[("h", 42), ("l", 0)]).unwrap();
        let c = u.store_of(&[("h", 1), ("l", 3)]).unwrap();
        assert!(u.low_eq(a, b));
        assert!(!u.low_eq(a, c));
        assert_eq!(u.low_key(a), u.low_key(b));
    }

    #[test]
    fn invalid_universes_are_rejected() {
        assert!(Universe::builder().build().is_err());
        assert!(Universe::builder().var("h", Level::High).vmax(0).build().is_err());
        assert!(Universe::builder().var("h", Level::High).fuel(0).build().is_err());
        assert!(Universe::builder()
            .var("h", Level::High)
            .var("h", Level::Low)
            .build()
            .is_err());
        assert!(Universe::builder()
            .var("h", Level::High)
            .vmax(3)
            .literals([0, 7])
            .build()
            .is_err());
        assert!(Universe::builder().var("skip", Level::Low).build().is_err());
    }

    #[test]
    fn default_literals_respect_vmax() {
        let u = hl(1);
        assert_eq!(u.literal_pool(), &[0, 1]);
        assert_eq!(hl(63).literal_pool(), &[0, 1, 2, 42]);
    }

    #[test]
    fn store_of_requires_totality() {
        let u = hl(3);
        assert!(u.store_of(&[("h", 1)]).is_err());
        assert!(u.store_of(&[("h", 1), ("l", 4)]).is_err());
        assert!(u.store_of(&[("h", 1), ("x", 0)]).is_err());
    }
}
