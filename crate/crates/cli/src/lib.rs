//! The `seclab` command line: argument parsing, dispatch to the core checks
//! and report rendering.

pub mod config;
pub mod repro;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use seclab_core::compilers::{check_preservation, check_rhp, BackTranslation, BehaviorMap, Compiler, RhpMode, SyntaxMap};
use seclab_core::gsos::{check_layered, check_mmodl, check_modl};
use seclab_core::hyperprops::{check_fac, ctx_equiv, robust_sat, Direction};
use seclab_core::parse::{parse_ctx, parse_store, parse_term};
use seclab_core::registry::Registry;
use seclab_core::tau_tilde::{check_inclusion, tau_tilde};
use seclab_core::traces::{self, TraceBound};
use seclab_core::{Event, Lang, Universe};
use serde_json::json;

use config::{Config, Output};
use report::{CheckReport, Report};

#[derive(Debug, Parser)]
#[command(name = "seclab", version, about = "Exhaustive checks of secure compilation criteria for a toy While language")]
pub struct Cli {
    /// Configuration file (TOML); the shipped fixture when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Override the configured fuel.
    #[arg(long, global = true)]
    pub fuel: Option<usize>,
    /// Override the configured term depth.
    #[arg(long, global = true)]
    pub term_depth: Option<usize>,
    /// Override the configured context depth.
    #[arg(long, global = true)]
    pub ctx_depth: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LangArg {
    Source,
    Target,
}

impl From<LangArg> for Lang {
    fn from(l: LangArg) -> Lang {
        match l {
            LangArg::Source => Lang::Source,
            LangArg::Target => Lang::Target,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a program from one store and print its trace.
    Run {
        #[arg(long, value_enum, default_value = "source")]
        lang: LangArg,
        #[arg(long)]
        term: String,
        #[arg(long)]
        store: String,
        /// Context to plug the program into.
        #[arg(long, default_value = "hole")]
        ctx: String,
    },
    /// Print the behaviour of a program: one trace per initial store.
    Beh {
        #[arg(long, value_enum, default_value = "source")]
        lang: LangArg,
        #[arg(long)]
        term: String,
        #[arg(long, default_value = "hole")]
        ctx: String,
    },
    /// Run one of the exhaustive checks.
    Check {
        #[command(subcommand)]
        check: Check,
    },
    /// Build the explicit tau-tilde of a hyperproperty and decide both
    /// sides of the preservation/inclusion equivalence.
    TauTilde {
        #[command(flatten)]
        maps: MapArgs,
        #[arg(long, default_value = "ni")]
        hyperprop: String,
        /// Include every member's behaviour, not just its realizer.
        #[arg(long)]
        behaviors: bool,
    },
    /// Run the reproduction table, or one row of it.
    Repro {
        /// `all` or a row id.
        #[arg(default_value = "all")]
        scope: String,
        /// List the row ids and exit.
        #[arg(long)]
        list: bool,
    },
}

/// A compiler by name, optionally with some of its maps replaced.
#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[arg(long, default_value = "sandbox")]
    pub compiler: String,
    /// Syntax map replacing the compiler's.
    #[arg(long)]
    pub s: Option<String>,
    /// Behaviour map replacing the compiler's.
    #[arg(long)]
    pub b: Option<String>,
    /// Back-translation replacing the compiler's.
    #[arg(long)]
    pub t: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Check {
    /// Robust satisfaction of a hyperproperty by one program.
    NiRobust {
        #[arg(long, value_enum, default_value = "source")]
        lang: LangArg,
        #[arg(long)]
        term: String,
        #[arg(long, default_value = "ni")]
        hyperprop: String,
    },
    /// Contextual equivalence of two programs.
    Ctxeq {
        #[arg(long, value_enum, default_value = "source")]
        lang: LangArg,
        #[arg(long)]
        term: String,
        #[arg(long)]
        term2: String,
    },
    /// Full abstraction over all enumerated program pairs.
    Fac {
        #[command(flatten)]
        maps: MapArgs,
        #[arg(long, default_value = "both")]
        direction: String,
    },
    /// The map-of-distributive-laws square on every enumerated node.
    Modl {
        #[command(flatten)]
        maps: MapArgs,
    },
    /// The many-layers square on every enumerated node.
    Mmodl {
        #[command(flatten)]
        maps: MapArgs,
    },
    /// Robust hyperproperty preservation up to the compiler's trace map.
    Rhp {
        #[command(flatten)]
        maps: MapArgs,
        #[arg(long, default_value = "backtranslation")]
        mode: String,
    },
    /// Robust preservation of a hyperproperty.
    Preserve {
        #[command(flatten)]
        maps: MapArgs,
        #[arg(long, default_value = "ni")]
        hyperprop: String,
    },
    /// The layered-term coalgebra: Blue, Purple and bisimulation.
    Layered {
        #[command(flatten)]
        maps: MapArgs,
        /// Unfolding depth of the coalgebras.
        #[arg(long, default_value_t = 16)]
        unfold: usize,
    },
    /// The Galois insertion law on the configured universe.
    Insertion {
        #[arg(long, value_enum, default_value = "target")]
        lang: LangArg,
        /// Check this many random trace sets instead of every subset.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Custom {
    base: Box<dyn Compiler>,
    s: Option<Box<dyn SyntaxMap>>,
    b: Option<Box<dyn BehaviorMap>>,
    t: Option<Box<dyn BackTranslation>>,
}

impl Compiler for Custom {
    fn name(&self) -> &'static str {
        if self.s.is_none() && self.b.is_none() && self.t.is_none() {
            self.base.name()
        } else {
            "custom"
        }
    }

    fn syntax(&self) -> &dyn SyntaxMap {
        self.s.as_deref().unwrap_or(self.base.syntax())
    }

    fn behavior(&self) -> &dyn BehaviorMap {
        self.b.as_deref().unwrap_or(self.base.behavior())
    }

    fn back(&self) -> &dyn BackTranslation {
        self.t.as_deref().unwrap_or(self.base.back())
    }
}

impl MapArgs {
    fn resolve(&self, r: &Registry) -> Result<Box<dyn Compiler>> {
        Ok(Box::new(Custom {
            base: r.compiler(&self.compiler)?,
            s: self.s.as_deref().map(|n| r.syntax(n)).transpose()?,
            b: self.b.as_deref().map(|n| r.behavior(n)).transpose()?,
            t: self.t.as_deref().map(|n| r.back(n)).transpose()?,
        }))
    }
}

fn event_name(e: Event) -> &'static str {
    match e {
        Event::Silent => "silent",
        Event::Internal => "#H",
        Event::Bang => "!",
    }
}

fn label(c: &dyn Compiler) -> String {
    if c.name() == "custom" {
        format!("{}/{}/{}", c.syntax().name(), c.behavior().name(), c.back().name())
    } else {
        c.name().to_string()
    }
}

/// The universe after command-line overrides.
pub fn universe(cli: &Cli, config: &Config) -> Result<Universe> {
    let mut u = config.universe()?;
    if let Some(f) = cli.fuel {
        u = u.with_fuel(f)?;
    }
    if let Some(d) = cli.term_depth {
        u = u.with_term_depth(d)?;
    }
    if let Some(d) = cli.ctx_depth {
        u = u.with_ctx_depth(d)?;
    }
    Ok(u)
}

/// Parses arguments, runs the command and renders the report. Errors are
/// usage or configuration errors.
pub fn execute(cli: &Cli) -> Result<(String, i32)> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::fixture(),
    };
    let json = cli.json || config.output == Output::Json;
    if let Command::Repro { list: true, .. } = &cli.command {
        let ids: Vec<String> = repro::rows().iter().map(|r| r.id.to_string()).collect();
        return Ok((ids.join("\n") + "\n", 0));
    }
    let u = universe(cli, &config)?;
    let start = Instant::now();
    let mut report = dispatch(&cli.command, &u)?;
    if cli.timing {
        report.wall_time_ms = Some(start.elapsed().as_millis());
    }
    let text = if json { report.to_json() } else { report.to_text() };
    Ok((text, report.exit_code()))
}

fn dispatch(command: &Command, u: &Universe) -> Result<Report> {
    let r = Registry::default();
    match command {
        Command::Run { lang, term, store, ctx } => {
            let lang = Lang::from(*lang);
            let p = parse_term(u, lang, term)?;
            let c = parse_ctx(u, lang, ctx)?;
            let s = parse_store(u, store)?;
            let (trace, steps) = traces::run_detailed(u, lang, s, &c.plug(&p), u.fuel())?;
            let mut report = Report::new("run", u);
            let steps: Vec<_> = steps
                .iter()
                .map(|st| {
                    let rules: Vec<&str> = st.derivation.iter().map(|r| r.name()).collect();
                    json!({"event": event_name(st.event), "store": u.show_store(st.store), "rules": rules.join(" <- ")})
                })
                .collect();
            report.data = json!({"trace": trace.render(u), "steps": steps});
            Ok(report)
        }
        Command::Beh { lang, term, ctx } => {
            let lang = Lang::from(*lang);
            let p = parse_term(u, lang, term)?;
            let c = parse_ctx(u, lang, ctx)?;
            let b = traces::beh(u, lang, &c, &p)?;
            let mut report = Report::new("beh", u);
            report.data = json!({"fuel_limited": b.is_fuel_limited(), "behavior": b.render(u)});
            Ok(report)
        }
        Command::Check { check } => dispatch_check(check, u, &r),
        Command::TauTilde { maps, hyperprop, behaviors } => {
            let c = maps.resolve(&r)?;
            let h = r.hyperprop(u, hyperprop)?;
            let preservation = check_preservation(u, c.as_ref(), h.as_ref())?;
            let tt = tau_tilde(u, c.as_ref(), h.as_ref())?;
            let inclusion = check_inclusion(u, &tt, h.as_ref())?;
            let mut members = Vec::new();
            for m in &tt.members {
                let mut v = json!({
                    "program": m.program.render(u),
                    "context": m.context.render(),
                    "target": m.target.render(u),
                });
                if *behaviors {
                    v["behavior"] = json!(m.behavior(u)?.render(u));
                }
                members.push(v);
            }
            let name = format!("{}, {}", label(c.as_ref()), h.name());
            let mut report = Report::new("tau-tilde", u);
            report.data = json!({
                "hyperprop": h.name(),
                "robust_programs": tt.robust.len(),
                "member_count": tt.len(),
                "members": members,
            });
            let agree = preservation.holds == inclusion.holds;
            report.checks.push(CheckReport::new(format!("preserve({name})"), u, &preservation));
            report.checks.push(CheckReport::new(format!("tau-tilde-included({name})"), u, &inclusion));
            let mut a = CheckReport::new(format!("corollary-agrees({name})"), u, &seclab_core::Verdict::pass(1));
            a.holds = agree;
            report.checks.push(a);
            Ok(report)
        }
        Command::Repro { scope, .. } => repro::run(u, scope),
    }
}

fn dispatch_check(check: &Check, u: &Universe, r: &Registry) -> Result<Report> {
    let mut report = Report::new("check", u);
    let (name, v) = match check {
        Check::NiRobust { lang, term, hyperprop } => {
            let lang = Lang::from(*lang);
            let p = parse_term(u, lang, term)?;
            let h = r.hyperprop(u, hyperprop)?;
            (format!("robust({}, {})", h.name(), lang), robust_sat(u, lang, &p, h.as_ref())?)
        }
        Check::Ctxeq { lang, term, term2 } => {
            let lang = Lang::from(*lang);
            let p = parse_term(u, lang, term)?;
            let q = parse_term(u, lang, term2)?;
            (format!("ctxeq({lang})"), ctx_equiv(u, lang, &p, &q)?)
        }
        Check::Fac { maps, direction } => {
            let c = maps.resolve(r)?;
            let d = Direction::parse(direction)?;
            (format!("fac({}, {direction})", label(c.as_ref())), check_fac(u, c.as_ref(), d)?)
        }
        Check::Modl { maps } => {
            let c = maps.resolve(r)?;
            let name = format!("modl({}, {})", c.syntax().name(), c.behavior().name());
            (name, check_modl(u, c.syntax(), c.behavior())?)
        }
        Check::Mmodl { maps } => {
            let c = maps.resolve(r)?;
            let name = format!("mmodl({}, {})", c.back().name(), c.behavior().name());
            (name, check_mmodl(u, c.back(), c.behavior())?)
        }
        Check::Rhp { maps, mode } => {
            let c = maps.resolve(r)?;
            let m = RhpMode::parse(mode)?;
            (format!("rhp({}, {mode})", label(c.as_ref())), check_rhp(u, c.as_ref(), m)?)
        }
        Check::Preserve { maps, hyperprop } => {
            let c = maps.resolve(r)?;
            let h = r.hyperprop(u, hyperprop)?;
            let name = format!("preserve({}, {})", label(c.as_ref()), h.name());
            (name, check_preservation(u, c.as_ref(), h.as_ref())?)
        }
        Check::Layered { maps, unfold } => {
            let c = maps.resolve(r)?;
            let lv = check_layered(u, c.as_ref(), *unfold)?;
            let l = label(c.as_ref());
            for (part, v) in [("blue", &lv.blue), ("purple", &lv.purple), ("bisimulation", &lv.bisimulation)] {
                report.checks.push(CheckReport::new(format!("layered-{part}({l}, unfold {unfold})"), u, v));
            }
            return Ok(report);
        }
        Check::Insertion { lang, samples, seed } => {
            let bound = TraceBound::new(u.clone(), u.fuel(), (*lang).into());
            match samples {
                Some(n) => ("insertion(sampled)".to_string(), traces::check_insertion_sampled(&bound, *n, *seed)?),
                None => ("insertion(exhaustive)".to_string(), traces::check_insertion_exhaustive(&bound)?),
            }
        }
    };
    report.checks.push(CheckReport::new(name, u, &v));
    Ok(report)
}

/// Entry point shared by the binary and the tests: output, and the exit code.
pub fn main_with<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { (text, String::new(), 0) } else { (String::new(), text, 2) };
        }
    };
    match execute(&cli) {
        Ok((out, code)) => (out, String::new(), code),
        Err(e) => (String::new(), format!("error: {e:#}\n"), 2),
    }
}
