//! The reproduction table: one row per published result, each a check with
//! its expected outcome. Rows expected to fail also confirm that the
//! counterexample is the known one.

use anyhow::{anyhow, Result};
use seclab_core::compilers::{check_preservation, check_preservation_on, check_rhp, check_rhp_on, identity, sandbox, BErase, BIncl, RhpMode, SEmbed, SSandbox, TId};
use seclab_core::gsos::{check_beh_psi, check_layered, check_mmodl, check_mmodl_on, check_modl, check_tau_coherence};
use seclab_core::hyperprops::{check_fac, Direction, Hyperproperty, NeverEvent, Ni, Top};
use seclab_core::opsem::check_determinacy;
use seclab_core::parse::{check_roundtrip, parse_term};
use seclab_core::tau_tilde::{check_corollary, check_inclusion, tau_tilde};
use seclab_core::traces::{self, check_insertion_exhaustive, check_insertion_sampled, Behavior, Terminator, Trace, TraceBound, TraceItem};
use seclab_core::{Ctx, Event, Lang, Layer, Level, Term, Universe, Verdict, Witness};

use crate::report::{Bounds, CheckReport, Report};

/// Depth used where the fixture depth makes a row too slow.
pub const REDUCED_TERM_DEPTH: usize = 3;

pub struct Row {
    pub id: &'static str,
    pub expected: bool,
    /// Runs at term depth at most [`REDUCED_TERM_DEPTH`].
    pub reduced: bool,
    run: fn(&Universe) -> Result<CheckReport>,
}

const fn row(id: &'static str, expected: bool, reduced: bool, run: fn(&Universe) -> Result<CheckReport>) -> Row {
    Row { id, expected, reduced, run }
}

pub fn rows() -> Vec<Row> {
    vec![
        row("behaviors-h42", true, false, behaviors_h42),
        row("fac-identity", true, true, |u| report(u, check_fac(u, &identity(), Direction::Preserve)?)),
        row("lemma-identity-ni", false, false, lemma_identity_ni),
        row("preserve-sandbox-ni", true, true, |u| report(u, check_preservation(u, &sandbox(), &Ni)?)),
        row("modl-sandbox", true, false, |u| report(u, check_modl(u, &SSandbox, &BErase)?)),
        row("modl-embed", true, false, |u| report(u, check_modl(u, &SEmbed, &BIncl)?)),
        row("modl-sandbox-incl", false, false, modl_sandbox_incl),
        row("mmodl-sandbox", true, false, |u| report(u, check_mmodl(u, &TId, &BErase)?)),
        row("mmodl-identity", false, false, mmodl_identity),
        row("rhp-sandbox", true, false, |u| report(u, check_rhp(u, &sandbox(), RhpMode::Backtranslation)?)),
        row("rhp-identity", false, false, rhp_identity),
        row("corollary-identity-ni", true, true, |u| corollary(u, "identity", &Ni)),
        row("corollary-identity-top", true, true, |u| corollary(u, "identity", &Top)),
        row("corollary-identity-never-bang", true, true, |u| corollary(u, "identity", &NeverEvent(Event::Bang))),
        row("corollary-sandbox-ni", true, true, |u| corollary(u, "sandbox", &Ni)),
        row("corollary-sandbox-top", true, true, |u| corollary(u, "sandbox", &Top)),
        row("corollary-sandbox-never-bang", true, true, |u| corollary(u, "sandbox", &NeverEvent(Event::Bang))),
        row("tau-tilde-identity-ni", false, true, tau_tilde_identity_ni),
        row("tau-tilde-sandbox-ni", true, true, |u| {
            report(u, check_inclusion(u, &tau_tilde(u, &sandbox(), &Ni)?, &Ni)?)
        }),
        row("beh-psi-source", true, false, |u| report(u, check_beh_psi(u, Lang::Source)?)),
        row("beh-psi-target", true, false, |u| report(u, check_beh_psi(u, Lang::Target)?)),
        row("tau-coherence", true, false, |u| report(u, check_tau_coherence(u, &BErase)?)),
        row("insertion-exhaustive", true, false, |_| {
            let u = Universe::builder().var("l", Level::Low).vmax(1).fuel(1).build()?;
            let v = check_insertion_exhaustive(&TraceBound::new(u.clone(), 1, Lang::Target))?;
            report(&u, v)
        }),
        row("insertion-sampled", true, false, |_| {
            let u = Universe::builder().var("h", Level::High).var("l", Level::Low).vmax(1).fuel(8).build()?;
            let v = check_insertion_sampled(&TraceBound::new(u.clone(), 8, Lang::Target), 1000, 0)?;
            report(&u, v)
        }),
        row("layered-sandbox", true, false, layered_sandbox),
        row("determinacy-source", true, false, |u| report(u, check_determinacy(u, Lang::Source)?)),
        row("determinacy-target", true, false, |u| report(u, check_determinacy(u, Lang::Target)?)),
        row("roundtrip", true, false, |u| report(u, check_roundtrip(u)?)),
    ]
}

fn report(u: &Universe, v: Verdict) -> Result<CheckReport> {
    let mut r = CheckReport::new("", u, &v);
    r.bounds = Some(Bounds::of(u));
    Ok(r)
}

fn h42(u: &Universe, lang: Lang) -> Result<Term> {
    Ok(parse_term(u, lang, "h := 42")?)
}

fn observer() -> Ctx {
    Ctx::with_layers(1)
}

/// The behaviour of `h := 42` in the empty Source context and under the
/// observer, against the closed form: an event and the updated store when
/// `h` changes, a bare silent step otherwise.
fn behaviors_h42(u: &Universe) -> Result<CheckReport> {
    let h = u.var("h").ok_or_else(|| anyhow!("the configuration declares no variable `h`"))?;
    let mut checked = 0;
    for (lang, ctx, event) in [(Lang::Source, Ctx::Hole, TraceItem::Internal), (Lang::Target, observer(), TraceItem::Bang)] {
        let expected = Behavior::from_traces(u.stores().map(|s| {
            let items = if u.get(s, h) != 42 {
                vec![TraceItem::State(s), event, TraceItem::State(u.set(s, h, 42))]
            } else {
                vec![TraceItem::State(s), TraceItem::State(s)]
            };
            Trace { items, end: Terminator::Tick }
        }));
        let b = traces::beh(u, lang, &ctx, &h42(u, lang)?)?;
        checked += b.len() as u64;
        if b != expected {
            let w = Witness {
                lang: Some(lang),
                program: Some(h42(u, lang)?),
                context: Some(ctx),
                note: "behaviour differs from the closed form".into(),
                ..Witness::default()
            };
            return report(u, Verdict::fail(w, checked));
        }
    }
    report(u, Verdict::pass(checked))
}

fn lemma_identity_ni(u: &Universe) -> Result<CheckReport> {
    let mut r = report(u, check_preservation(u, &identity(), &Ni)?)?;
    let p = h42(u, Lang::Source)?;
    let v = check_preservation_on(u, &identity(), &Ni, std::slice::from_ref(&p))?;
    let w = v.witness.unwrap_or_default();
    let b = traces::beh(u, Lang::Target, &observer(), &p)?;
    let pair = (u.store_of(&[("h", 1), ("l", 0)])?, u.store_of(&[("h", 42), ("l", 0)])?);
    let confirmed = !v.holds
        && w.context == Some(observer())
        && w.program == Some(p)
        && Ni::is_violating_pair(u, &b, pair.0, pair.1);
    r.witness_confirmed = Some(confirmed);
    r.detail = "h := 42 under obs(hole): stores {h=1,l=0} and {h=42,l=0} violate NI".into();
    Ok(r)
}

fn modl_sandbox_incl(u: &Universe) -> Result<CheckReport> {
    let v = check_modl(u, &SSandbox, &BIncl)?;
    let high_assignment = match v.witness.as_ref().and_then(|w| w.program.as_ref()).map(Term::layer) {
        Some(Layer::Assign(x, _)) => u.is_high(*x),
        _ => false,
    };
    let mut r = report(u, v)?;
    r.witness_confirmed = Some(high_assignment);
    Ok(r)
}

fn mmodl_identity(u: &Universe) -> Result<CheckReport> {
    let mut r = report(u, check_mmodl(u, &TId, &BIncl)?)?;
    let v = check_mmodl_on(u, &TId, &BIncl, &[h42(u, Lang::Source)?])?;
    let w = v.witness.unwrap_or_default();
    let confirmed = !v.holds
        && w.context == Some(observer())
        && w.traces.len() == 2
        && w.traces[0].items.contains(&TraceItem::Internal)
        && w.traces[1].items.contains(&TraceItem::Bang);
    r.witness_confirmed = Some(confirmed);
    r.detail = "h := 42: upper path steps with #H, lower path with !".into();
    Ok(r)
}

fn rhp_identity(u: &Universe) -> Result<CheckReport> {
    let mut r = report(u, check_rhp(u, &identity(), RhpMode::Search)?)?;
    let p = h42(u, Lang::Source)?;
    let v = check_rhp_on(u, &identity(), RhpMode::Search, std::slice::from_ref(&p))?;
    let w = v.witness.unwrap_or_default();
    r.witness_confirmed = Some(!v.holds && w.program == Some(p) && w.context == Some(observer()));
    r.detail = "h := 42 under obs(hole) has no source counterpart".into();
    Ok(r)
}

fn corollary(u: &Universe, compiler: &str, h: &dyn Hyperproperty) -> Result<CheckReport> {
    let c = if compiler == "identity" { identity() } else { sandbox() };
    let v = check_corollary(u, &c, h)?;
    let checked = v.preservation.checked + v.inclusion.checked;
    let agree = if v.agree() {
        Verdict::pass(checked)
    } else {
        Verdict::fail(Witness::note("preservation and inclusion disagree"), checked)
    };
    let mut r = report(u, agree.fuel_limited(v.preservation.fuel_limited || v.inclusion.fuel_limited))?;
    r.detail = format!(
        "preservation {}, inclusion {}, {} members",
        v.preservation.holds, v.inclusion.holds, v.members
    );
    Ok(r)
}

fn tau_tilde_identity_ni(u: &Universe) -> Result<CheckReport> {
    let tt = tau_tilde(u, &identity(), &Ni)?;
    let v = check_inclusion(u, &tt, &Ni)?;
    let confirmed = match &v.witness {
        Some(Witness { program: Some(p), context: Some(c), .. }) => {
            !Ni.sat(u, &traces::beh(u, Lang::Target, c, p)?)
        }
        _ => false,
    };
    let mut r = report(u, v)?;
    r.witness_confirmed = Some(confirmed);
    r.detail = format!("{} members", tt.len());
    Ok(r)
}

fn layered_sandbox(u: &Universe) -> Result<CheckReport> {
    let lv = check_layered(u, &sandbox(), 16)?;
    let parts = [("blue", &lv.blue), ("purple", &lv.purple), ("bisimulation", &lv.bisimulation)];
    let checked = parts.iter().map(|(_, v)| v.checked).sum();
    let v = match parts.iter().find(|(_, v)| !v.holds) {
        None => Verdict::pass(checked),
        Some((name, v)) => {
            let mut w = v.witness.clone().unwrap_or_default();
            w.note = format!("{name}: {}", w.note);
            Verdict::fail(w, checked)
        }
    };
    let mut r = report(u, v)?;
    r.detail = "blue, purple and bisimulation at unfolding depth 16".into();
    Ok(r)
}

/// Runs every row, or the one named by `scope`.
pub fn run(u: &Universe, scope: &str) -> Result<Report> {
    let all = rows();
    let selected: Vec<&Row> = all.iter().filter(|r| scope == "all" || r.id == scope).collect();
    if selected.is_empty() {
        let known: Vec<&str> = all.iter().map(|r| r.id).collect();
        return Err(anyhow!("unknown repro row `{scope}` (known: all, {})", known.join(", ")));
    }
    let mut report = Report::new(format!("repro {scope}"), u);
    for row in selected {
        let ur = if row.reduced && u.term_depth() > REDUCED_TERM_DEPTH {
            u.with_term_depth(REDUCED_TERM_DEPTH)?
        } else {
            u.clone()
        };
        let mut r = (row.run)(&ur)?;
        r.name = row.id.to_string();
        r.expected = Some(row.expected);
        report.checks.push(r);
    }
    Ok(report)
}
