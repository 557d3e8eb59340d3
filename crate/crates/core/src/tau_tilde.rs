//! The relation between source and target behaviour families induced by a
//! compiler, and the explicit least `τ̃` over the bounded enumeration.
//!
//! Members of `τ̃(H)` are kept as realizers, a robust source program and a
//! target context, one per distinct behaviour. A fixture-sized behaviour
//! runs to megabytes, so behaviours are only materialised on demand.

use crate::compilers::{check_preservation_on, Compiler};
use crate::enumerate;
use crate::error::Result;
use crate::hyperprops::{behavior_classes, ctx_equiv, fac_classes, first_unpreserved, robust_sat, Explicit, Hyperproperty};
use crate::machine::Machine;
use crate::syntax::{Ctx, Term};
use crate::traces::{self, Behavior};
use crate::universe::{Lang, Universe};
use crate::verdict::{Verdict, Witness};

/// `⌢`: each enumerated source program's context-indexed source behaviour
/// family paired with that of its compilation. Families are identified by
/// exact equality and numbered in order of first occurrence.
#[derive(Debug, Clone)]
pub struct Comprel {
    pub programs: Vec<Term>,
    pub source_family: Vec<u32>,
    pub target_family: Vec<u32>,
    /// Equal source families never relate to distinct target families.
    pub functional: Verdict,
    /// Distinct source families never relate to the same target family.
    pub injective: Verdict,
}

impl Comprel {
    /// The distinct related pairs of family ids.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self.source_family.iter().copied().zip(self.target_family.iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn comprel_build(u: &Universe, compiler: &dyn Compiler) -> Result<Comprel> {
    comprel_build_on(u, compiler, &enumerate::terms(u, Lang::Source)?)
}

pub fn comprel_build_on(u: &Universe, compiler: &dyn Compiler, programs: &[Term]) -> Result<Comprel> {
    let (src, tgt) = fac_classes(u, compiler, programs)?;
    let n = programs.len() as u64;
    let functional = match first_unpreserved(&src, &tgt) {
        None => Verdict::pass(n),
        Some((i, j)) => {
            let (a, b) = (compiler.compile(&programs[i]), compiler.compile(&programs[j]));
            let mut w = ctx_equiv(u, Lang::Target, &a, &b)?.witness.unwrap_or_default();
            w.program = Some(programs[i].clone());
            w.other_program = Some(programs[j].clone());
            w.note = "equal source families relate to distinct target families".into();
            Verdict::fail(w, n)
        }
    };
    let injective = match first_unpreserved(&tgt, &src) {
        None => Verdict::pass(n),
        Some((i, j)) => {
            let mut w = ctx_equiv(u, Lang::Source, &programs[i], &programs[j])?.witness.unwrap_or_default();
            w.program = Some(programs[i].clone());
            w.other_program = Some(programs[j].clone());
            w.note = "distinct source families relate to the same target family".into();
            Verdict::fail(w, n)
        }
    };
    Ok(Comprel {
        programs: programs.to_vec(),
        source_family: src,
        target_family: tgt,
        functional,
        injective,
    })
}

/// A member of `τ̃(H)`: the behaviour of `context[target]`, where `target`
/// compiles the robust source program `program`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realizer {
    pub program: Term,
    pub context: Ctx,
    pub target: Term,
}

impl Realizer {
    pub fn behavior(&self, u: &Universe) -> Result<Behavior> {
        traces::beh(u, Lang::Target, &self.context, &self.target)
    }
}

/// `τ̃(H)` relative to the enumeration: one realizer per distinct behaviour.
#[derive(Debug, Clone)]
pub struct TauTilde {
    pub hyperprop: String,
    /// Source programs robustly satisfying the hyperproperty.
    pub robust: Vec<Term>,
    pub members: Vec<Realizer>,
    pub fuel_limited: bool,
}

impl TauTilde {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Is `b` one of the members?
    pub fn contains(&self, u: &Universe, b: &Behavior) -> Result<bool> {
        for r in &self.members {
            if r.behavior(u)? == *b {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Every member materialised, as a hyperproperty.
    pub fn to_explicit(&self, u: &Universe) -> Result<Explicit> {
        let members = self.members.iter().map(|r| r.behavior(u)).collect::<Result<Vec<_>>>()?;
        Ok(Explicit::new(format!("tau-tilde({})", self.hyperprop), members))
    }
}

/// `τ̃(H) = { beh(C_T[⟦P⟧]) | C_T enumerated, P enumerated, ∀C_S. C_S[P] ⊨ H }`
pub fn tau_tilde(u: &Universe, compiler: &dyn Compiler, h: &dyn Hyperproperty) -> Result<TauTilde> {
    tau_tilde_on(u, compiler, h, &enumerate::terms(u, Lang::Source)?)
}

pub fn tau_tilde_on(u: &Universe, compiler: &dyn Compiler, h: &dyn Hyperproperty, programs: &[Term]) -> Result<TauTilde> {
    let tctx = enumerate::contexts(u, Lang::Target)?;
    let mut robust = Vec::new();
    let mut fuel_limited = false;
    for p in programs {
        let v = robust_sat(u, Lang::Source, p, h)?;
        fuel_limited |= v.fuel_limited;
        if v.holds {
            robust.push(p.clone());
        }
    }
    let mut candidates = Vec::new();
    let mut machines = Vec::new();
    for p in &robust {
        let target = compiler.compile(p);
        for c in &tctx {
            machines.push(vec![Machine::new(u, &c.plug(&target))]);
            candidates.push(Realizer {
                program: p.clone(),
                context: c.clone(),
                target: target.clone(),
            });
        }
    }
    let classes = behavior_classes(u, &machines)?;
    let mut members = Vec::new();
    for (r, &c) in candidates.into_iter().zip(&classes) {
        // classes are numbered by first occurrence
        if c as usize == members.len() {
            members.push(r);
        }
    }
    Ok(TauTilde {
        hyperprop: h.name(),
        robust,
        members,
        fuel_limited,
    })
}

/// Both sides of "robust preservation of `H` iff `τ̃(H) ⊆ H`".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorollaryVerdict {
    pub preservation: Verdict,
    pub inclusion: Verdict,
    /// Number of distinct behaviours in `τ̃(H)`.
    pub members: usize,
}

impl CorollaryVerdict {
    pub fn agree(&self) -> bool {
        self.preservation.holds == self.inclusion.holds
    }
}

/// Decides robust preservation and `τ̃(H) ⊆ H` independently.
pub fn check_corollary(u: &Universe, compiler: &dyn Compiler, h: &dyn Hyperproperty) -> Result<CorollaryVerdict> {
    check_corollary_on(u, compiler, h, &enumerate::terms(u, Lang::Source)?)
}

pub fn check_corollary_on(
    u: &Universe,
    compiler: &dyn Compiler,
    h: &dyn Hyperproperty,
    programs: &[Term],
) -> Result<CorollaryVerdict> {
    let preservation = check_preservation_on(u, compiler, h, programs)?;
    let tt = tau_tilde_on(u, compiler, h, programs)?;
    let inclusion = check_inclusion(u, &tt, h)?;
    Ok(CorollaryVerdict {
        preservation,
        inclusion,
        members: tt.len(),
    })
}

/// `τ̃(H) ⊆ H`, with the first member outside `H` as witness.
pub fn check_inclusion(u: &Universe, tt: &TauTilde, h: &dyn Hyperproperty) -> Result<Verdict> {
    let mut fuel_limited = tt.fuel_limited;
    for (i, r) in tt.members.iter().enumerate() {
        let b = r.behavior(u)?;
        fuel_limited |= b.is_fuel_limited();
        let m = h.check(u, &b);
        if !m.holds {
            let w = Witness {
                lang: Some(Lang::Target),
                program: Some(r.program.clone()),
                context: Some(r.context.clone()),
                stores: m.stores,
                traces: m.traces,
                note: format!("member of tau-tilde outside {}: {}", h.name(), m.note),
                ..Witness::default()
            };
            return Ok(Verdict::fail(w, i as u64 + 1).fuel_limited(fuel_limited));
        }
    }
    Ok(Verdict::pass(tt.len() as u64).fuel_limited(fuel_limited))
}
