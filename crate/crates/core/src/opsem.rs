//! Small-step semantics of Source and Target.
//!
//! [`step`] is the reference interpreter. [`derivations`] independently
//! enumerates every rule instance whose premises hold, which is what the
//! determinacy check counts; the two are required to agree.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::enumerate;
use crate::error::Result;
use crate::syntax::{Expr, Layer, Term};
use crate::universe::{Lang, Store, Universe, VarId};
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Event {
    Silent,
    /// The internal leak event: a high variable changed value.
    Internal,
    /// A publicly observable report.
    Bang,
}

impl Event {
    /// Event seen through an observer: leaks become reports.
    pub fn observed(self) -> Event {
        match self {
            Event::Internal | Event::Bang => Event::Bang,
            Event::Silent => Event::Silent,
        }
    }

    /// Event seen through a sandbox: leaks are suppressed.
    pub fn sandboxed(self) -> Event {
        match self {
            Event::Internal => Event::Silent,
            e => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    Skip,
    AsnL,
    AsnLHi,
    AsnH,
    AsnHEq,
    Seq1,
    Seq2,
    While1,
    While2,
    Bang1,
    Bang2,
    ObsSilent,
    ObsRelay,
    Sb1,
    Sb2,
    SbSilent,
}

impl Rule {
    pub const ALL: [Rule; 16] = [
        Rule::Skip,
        Rule::AsnL,
        Rule::AsnLHi,
        Rule::AsnH,
        Rule::AsnHEq,
        Rule::Seq1,
        Rule::Seq2,
        Rule::While1,
        Rule::While2,
        Rule::Bang1,
        Rule::Bang2,
        Rule::ObsSilent,
        Rule::ObsRelay,
        Rule::Sb1,
        Rule::Sb2,
        Rule::SbSilent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Skip => "skip",
            Rule::AsnL => "asnL",
            Rule::AsnLHi => "asnL-hi",
            Rule::AsnH => "asnH",
            Rule::AsnHEq => "asnH-eq",
            Rule::Seq1 => "seq1",
            Rule::Seq2 => "seq2",
            Rule::While1 => "while1",
            Rule::While2 => "while2",
            Rule::Bang1 => "bang1",
            Rule::Bang2 => "bang2",
            Rule::ObsSilent => "obs-silent",
            Rule::ObsRelay => "obs-relay",
            Rule::Sb1 => "sb1",
            Rule::Sb2 => "sb2",
            Rule::SbSilent => "sb-silent",
        }
    }

    pub fn is_target_only(self) -> bool {
        matches!(
            self,
            Rule::Bang1
                | Rule::Bang2
                | Rule::ObsSilent
                | Rule::ObsRelay
                | Rule::Sb1
                | Rule::Sb2
                | Rule::SbSilent
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a configuration steps to: `✓` or a residual program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Next<R> {
    Done,
    Residual(R),
}

impl<R> Next<R> {
    pub fn map<S>(self, f: impl FnOnce(R) -> S) -> Next<S> {
        match self {
            Next::Done => Next::Done,
            Next::Residual(r) => Next::Residual(f(r)),
        }
    }

    pub fn residual(&self) -> Option<&R> {
        match self {
            Next::Done => None,
            Next::Residual(r) => Some(r),
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self, Next::Done)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub store: Store,
    pub event: Event,
    pub next: Next<Term>,
    /// Rules of the derivation, conclusion first.
    pub derivation: Vec<Rule>,
}

impl StepOutcome {
    pub fn rule(&self) -> Rule {
        self.derivation[0]
    }
}

fn assign(u: &Universe, s: Store, v: VarId, e: &Expr) -> (Store, Event, Rule) {
    let x = e.eval(u, s);
    if u.is_high(v) {
        if u.get(s, v) != x {
            (u.set(s, v, x), Event::Internal, Rule::AsnH)
        } else {
            (s, Event::Silent, Rule::AsnHEq)
        }
    } else if e.reads_high(u) {
        (u.set(s, v, x), Event::Silent, Rule::AsnLHi)
    } else {
        (u.set(s, v, x), Event::Silent, Rule::AsnL)
    }
}

/// One step of `p` from `s`. Validates `p` against `lang` first.
pub fn step(u: &Universe, lang: Lang, s: Store, p: &Term) -> Result<StepOutcome> {
    p.validate(u, lang)?;
    Ok(step_unchecked(u, s, p))
}

/// [`step`] for a term already known to be valid.
pub fn step_unchecked(u: &Universe, s: Store, p: &Term) -> StepOutcome {
    match p.layer() {
        Layer::Skip => StepOutcome {
            store: s,
            event: Event::Silent,
            next: Next::Done,
            derivation: vec![Rule::Skip],
        },
        Layer::Assign(v, e) => {
            let (store, event, rule) = assign(u, s, *v, e);
            StepOutcome {
                store,
                event,
                next: Next::Done,
                derivation: vec![rule],
            }
        }
        Layer::Seq(p1, q) => {
            let mut o = step_unchecked(u, s, p1);
            let rule = match o.next {
                Next::Done => {
                    o.next = Next::Residual(q.clone());
                    Rule::Seq1
                }
                Next::Residual(r) => {
                    o.next = Next::Residual(Term::seq(r, q.clone()));
                    Rule::Seq2
                }
            };
            o.derivation.insert(0, rule);
            o
        }
        Layer::While(e, body) => {
            let (next, rule) = if e.eval(u, s) == 0 {
                (Term::skip(), Rule::While1)
            } else {
                (Term::seq(body.clone(), p.clone()), Rule::While2)
            };
            StepOutcome {
                store: s,
                event: Event::Silent,
                next: Next::Residual(next),
                derivation: vec![rule],
            }
        }
        Layer::Obs(inner) => {
            let mut o = step_unchecked(u, s, inner);
            let rule = match (o.event, o.next.is_done()) {
                (Event::Internal, true) => Rule::Bang1,
                (Event::Internal, false) => Rule::Bang2,
                (Event::Silent, _) => Rule::ObsSilent,
                (Event::Bang, _) => Rule::ObsRelay,
            };
            o.event = o.event.observed();
            o.next = o.next.map(Term::obs);
            o.derivation.insert(0, rule);
            o
        }
        Layer::Sandbox(inner) => {
            let mut o = step_unchecked(u, s, inner);
            let rule = match (o.event, o.next.is_done()) {
                (Event::Internal, true) => Rule::Sb1,
                (Event::Internal, false) => Rule::Sb2,
                _ => Rule::SbSilent,
            };
            o.event = o.event.sandboxed();
            o.derivation.insert(0, rule);
            o
        }
    }
}

/// A rule instance: the conclusion produced by one derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub store: Store,
    pub event: Event,
    pub next: Next<Term>,
    pub derivation: Vec<Rule>,
}

/// Every derivable conclusion for `(s, p)`, found by trying each rule's
/// side conditions separately rather than by case analysis on the term.
///
/// The semantics is deterministic iff this always has exactly one element.
pub fn derivations(u: &Universe, lang: Lang, s: Store, p: &Term) -> Vec<Derivation> {
    let mut out = Vec::new();
    for rule in Rule::ALL {
        if lang == Lang::Source && rule.is_target_only() {
            continue;
        }
        instances(u, lang, rule, s, p, &mut out);
    }
    out
}

fn leaf(out: &mut Vec<Derivation>, store: Store, event: Event, next: Next<Term>, rule: Rule) {
    out.push(Derivation {
        store,
        event,
        next,
        derivation: vec![rule],
    });
}

fn instances(u: &Universe, lang: Lang, rule: Rule, s: Store, p: &Term, out: &mut Vec<Derivation>) {
    match (rule, p.layer()) {
        (Rule::Skip, Layer::Skip) => leaf(out, s, Event::Silent, Next::Done, rule),
        (Rule::AsnL, Layer::Assign(v, e)) if !u.is_high(*v) && !e.reads_high(u) => {
            leaf(out, u.set(s, *v, e.eval(u, s)), Event::Silent, Next::Done, rule)
        }
        (Rule::AsnLHi, Layer::Assign(v, e)) if !u.is_high(*v) && e.reads_high(u) => {
            leaf(out, u.set(s, *v, e.eval(u, s)), Event::Silent, Next::Done, rule)
        }
        (Rule::AsnH, Layer::Assign(v, e)) if u.is_high(*v) && u.get(s, *v) != e.eval(u, s) => {
            leaf(out, u.set(s, *v, e.eval(u, s)), Event::Internal, Next::Done, rule)
        }
        (Rule::AsnHEq, Layer::Assign(v, e)) if u.is_high(*v) && u.get(s, *v) == e.eval(u, s) => {
            leaf(out, s, Event::Silent, Next::Done, rule)
        }
        (Rule::While1, Layer::While(e, _)) if e.eval(u, s) == 0 => {
            leaf(out, s, Event::Silent, Next::Residual(Term::skip()), rule)
        }
        (Rule::While2, Layer::While(e, body)) if e.eval(u, s) != 0 => leaf(
            out,
            s,
            Event::Silent,
            Next::Residual(Term::seq(body.clone(), p.clone())),
            rule,
        ),
        (Rule::Seq1 | Rule::Seq2, Layer::Seq(p1, q)) => {
            for d in derivations(u, lang, s, p1) {
                let next = match (rule, d.next) {
                    (Rule::Seq1, Next::Done) => q.clone(),
                    (Rule::Seq2, Next::Residual(r)) => Term::seq(r, q.clone()),
                    _ => continue,
                };
                out.push(wrap(rule, d.store, d.event, Next::Residual(next), d.derivation));
            }
        }
        (
            Rule::Bang1 | Rule::Bang2 | Rule::ObsSilent | Rule::ObsRelay,
            Layer::Obs(inner),
        ) => {
            for d in derivations(u, lang, s, inner) {
                let fires = match rule {
                    Rule::Bang1 => d.event == Event::Internal && d.next.is_done(),
                    Rule::Bang2 => d.event == Event::Internal && !d.next.is_done(),
                    Rule::ObsSilent => d.event == Event::Silent,
                    _ => d.event == Event::Bang,
                };
                if fires {
                    let event = if d.event == Event::Silent {
                        Event::Silent
                    } else {
                        Event::Bang
                    };
                    out.push(wrap(rule, d.store, event, d.next.map(Term::obs), d.derivation));
                }
            }
        }
        (Rule::Sb1 | Rule::Sb2 | Rule::SbSilent, Layer::Sandbox(inner)) => {
            for d in derivations(u, lang, s, inner) {
                let fires = match rule {
                    Rule::Sb1 => d.event == Event::Internal && d.next.is_done(),
                    Rule::Sb2 => d.event == Event::Internal && !d.next.is_done(),
                    _ => d.event != Event::Internal,
                };
                if fires {
                    let event = if d.event == Event::Internal {
                        Event::Silent
                    } else {
                        d.event
                    };
                    out.push(wrap(rule, d.store, event, d.next, d.derivation));
                }
            }
        }
        _ => {}
    }
}

fn wrap(rule: Rule, store: Store, event: Event, next: Next<Term>, mut premise: Vec<Rule>) -> Derivation {
    premise.insert(0, rule);
    Derivation {
        store,
        event,
        next,
        derivation: premise,
    }
}

/// Determinacy over every enumerated program of `lang` and every store:
/// exactly one derivation, and it is the one [`step`] builds.
pub fn check_determinacy(u: &Universe, lang: Lang) -> Result<Verdict> {
    let programs = enumerate::terms(u, lang)?;
    let mut checked = 0;
    for p in &programs {
        for s in u.stores() {
            checked += 1;
            let ds = derivations(u, lang, s, p);
            let o = step_unchecked(u, s, p);
            let agrees = |d: &Derivation| {
                d.store == o.store && d.event == o.event && d.next == o.next && d.derivation == o.derivation
            };
            let note = match ds.as_slice() {
                [d] if agrees(d) => continue,
                [_] => "the only derivation differs from the interpreter's step".to_string(),
                _ => format!(
                    "{} derivations: {}",
                    ds.len(),
                    ds.iter().map(|d| d.derivation[0].name()).collect::<Vec<_>>().join(", ")
                ),
            };
            let w = Witness {
                lang: Some(lang),
                program: Some(p.clone()),
                stores: vec![s],
                note,
                ..Witness::default()
            };
            return Ok(Verdict::fail(w, checked));
        }
    }
    Ok(Verdict::pass(checked))
}
