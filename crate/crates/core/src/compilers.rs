//! Compilers from Source to Target, built from three pluggable maps:
//! a syntax map `s` (one Source layer to a Target free term), a behaviour
//! map `b` (per-step event translation) and a back-translation `t` of
//! Target contexts.

use crate::enumerate;
use crate::error::{Error, Result};
use crate::hyperprops::{first_difference, robust_sat, Hyperproperty, EVENT_ID};
use crate::machine::Machine;
use crate::opsem::Event;
use crate::syntax::{Ctx, Free, Layer, Term};
use crate::traces::{Behavior, Trace, TraceItem};
use crate::universe::{Lang, Universe};
use crate::verdict::{Verdict, Witness};

/// `s: Σ_S ⇒ Σ_T*`, a natural transformation on syntax.
///
/// Implementations see the children of a layer only as numbered slots, which
/// makes naturality hold by construction: the image cannot inspect them.
pub trait SyntaxMap: Send + Sync {
    fn name(&self) -> &'static str;

    fn apply_slots(&self, layer: &Layer<usize>) -> Free<usize>;
}

impl dyn SyntaxMap + '_ {
    /// `s_X` on one layer with arbitrary children.
    pub fn apply<X: Clone>(&self, layer: Layer<X>) -> Free<X> {
        let mut children = Vec::new();
        let slots = layer.map(|x| {
            children.push(x);
            children.len() - 1
        });
        self.apply_slots(&slots).map(&mut |i| children[i].clone())
    }

    /// `s*` on free terms: translate every layer, keep the variables.
    pub fn extend<X: Clone>(&self, t: Free<X>) -> Free<X> {
        match t {
            Free::Pure(x) => Free::Pure(x),
            Free::Roll(l) => self.apply(l.map(|c| self.extend(c))).join(),
        }
    }

    /// `s*_∅`: the compiler on closed terms.
    pub fn compile(&self, p: &Term) -> Term {
        p.fold(&mut |l: Layer<Term>| self.apply(l).flatten())
    }
}

/// `s = i₁`: the embedding.
#[derive(Debug, Clone, Copy, Default)]
pub struct SEmbed;

impl SyntaxMap for SEmbed {
    fn name(&self) -> &'static str {
        "s_embed"
    }

    fn apply_slots(&self, layer: &Layer<usize>) -> Free<usize> {
        Free::layer(layer.clone())
    }
}

/// Wraps assignments in the sandbox; identity on every other constructor.
#[derive(Debug, Clone, Copy, Default)]
pub struct SSandbox;

impl SyntaxMap for SSandbox {
    fn name(&self) -> &'static str {
        "s_sandbox"
    }

    fn apply_slots(&self, layer: &Layer<usize>) -> Free<usize> {
        match layer {
            Layer::Assign(v, e) => Free::roll(Layer::Sandbox(Free::roll(Layer::Assign(*v, e.clone())))),
            other => Free::layer(other.clone()),
        }
    }
}

/// `b: B_S ⇒ B_T`. Both functors share stores and continuations, so `b` is
/// determined by what it does to the event of a step.
pub trait BehaviorMap: Send + Sync {
    fn name(&self) -> &'static str;

    fn map_event(&self, e: Event) -> Result<Event>;
}

impl dyn BehaviorMap + '_ {
    /// Per-event table usable by the machine runners.
    pub(crate) fn table(&self) -> [Option<Event>; 3] {
        [Event::Silent, Event::Internal, Event::Bang].map(|e| self.map_event(e).ok())
    }

    /// The map induced on traces: every step's event is translated.
    pub fn map_trace(&self, t: &Trace) -> Result<Trace> {
        let mut items = Vec::with_capacity(t.items.len());
        for &i in &t.items {
            let e = match i {
                TraceItem::State(_) => {
                    items.push(i);
                    continue;
                }
                TraceItem::Internal => Event::Internal,
                TraceItem::Bang => Event::Bang,
            };
            match self.map_event(e)? {
                Event::Silent => {}
                Event::Internal => items.push(TraceItem::Internal),
                Event::Bang => items.push(TraceItem::Bang),
            }
        }
        Ok(Trace { items, end: t.end })
    }

    pub fn map_behavior(&self, b: &Behavior) -> Result<Behavior> {
        Ok(Behavior::from_traces(
            b.traces().map(|t| self.map_trace(&t.to_owned())).collect::<Result<Vec<_>>>()?,
        ))
    }
}

/// `b = (S × (Maybe i₁) × (id ⊎ ✓))^S`: Source behaviours viewed as Target.
#[derive(Debug, Clone, Copy, Default)]
pub struct BIncl;

impl BehaviorMap for BIncl {
    fn name(&self) -> &'static str {
        "b_incl"
    }

    fn map_event(&self, e: Event) -> Result<Event> {
        Ok(e)
    }
}

/// Erases internal events.
#[derive(Debug, Clone, Copy, Default)]
pub struct BErase;

impl BehaviorMap for BErase {
    fn name(&self) -> &'static str {
        "b_erase"
    }

    fn map_event(&self, e: Event) -> Result<Event> {
        match e {
            Event::Silent | Event::Internal => Ok(Event::Silent),
            Event::Bang => Err(Error::BangInSource),
        }
    }
}

/// `t: Cfun_T ⇒ Cfun_S*`, the back-translation of context constructors.
///
/// Source has no context constructors besides the hole, so `Cfun_S* X ≅ X`
/// and a back-translation only decides how many Source layers an observer
/// becomes; with none available every layer maps to the identity context.
pub trait BackTranslation: Send + Sync {
    fn name(&self) -> &'static str;

    /// `t!`: a Target context to a Source context.
    fn translate(&self, c: &Ctx) -> Ctx;
}

/// Maps every Target context to the identity context.
#[derive(Debug, Clone, Copy, Default)]
pub struct TId;

impl BackTranslation for TId {
    fn name(&self) -> &'static str {
        "t_id"
    }

    fn translate(&self, _: &Ctx) -> Ctx {
        Ctx::Hole
    }
}

/// A compiler together with the maps that justify it.
pub trait Compiler: Send + Sync {
    fn name(&self) -> &'static str;

    fn syntax(&self) -> &dyn SyntaxMap;

    fn behavior(&self) -> &dyn BehaviorMap;

    fn back(&self) -> &dyn BackTranslation;

    fn compile(&self, p: &Term) -> Term {
        self.syntax().compile(p)
    }
}

/// A compiler assembled from registered parts.
pub struct Assembled {
    pub name: &'static str,
    pub s: Box<dyn SyntaxMap>,
    pub b: Box<dyn BehaviorMap>,
    pub t: Box<dyn BackTranslation>,
}

impl Compiler for Assembled {
    fn name(&self) -> &'static str {
        self.name
    }

    fn syntax(&self) -> &dyn SyntaxMap {
        self.s.as_ref()
    }

    fn behavior(&self) -> &dyn BehaviorMap {
        self.b.as_ref()
    }

    fn back(&self) -> &dyn BackTranslation {
        self.t.as_ref()
    }
}

pub fn identity() -> Assembled {
    Assembled {
        name: "identity",
        s: Box::new(SEmbed),
        b: Box::new(BIncl),
        t: Box::new(TId),
    }
}

pub fn sandbox() -> Assembled {
    Assembled {
        name: "sandbox",
        s: Box::new(SSandbox),
        b: Box::new(BErase),
        t: Box::new(TId),
    }
}

/// `τ`: erase every internal event of a Source behaviour.
pub fn tau(b: &Behavior) -> Result<Behavior> {
    if b.contains_item(TraceItem::Bang) {
        return Err(Error::BangInSource);
    }
    (&BErase as &dyn BehaviorMap).map_behavior(b)
}

/// Every Target context back-translates to the identity context.
pub fn backtranslate(c: &Ctx) -> Ctx {
    TId.translate(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhpMode {
    Search,
    Backtranslation,
}

impl RhpMode {
    pub fn parse(s: &str) -> Result<RhpMode> {
        match s {
            "search" => Ok(RhpMode::Search),
            "backtranslation" => Ok(RhpMode::Backtranslation),
            _ => Err(Error::Unknown {
                kind: "mode",
                name: s.into(),
                known: "search, backtranslation".into(),
            }),
        }
    }
}

/// `∀P ∀C_T ∃C_S. beh_T(C_T[⟦P⟧]) = τ(beh_S(C_S[P]))`, with `τ` the trace
/// lifting of the compiler's behaviour map.
pub fn check_rhp(u: &Universe, compiler: &dyn Compiler, mode: RhpMode) -> Result<Verdict> {
    let programs = enumerate::terms(u, Lang::Source)?;
    check_rhp_on(u, compiler, mode, &programs)
}

pub fn check_rhp_on(u: &Universe, compiler: &dyn Compiler, mode: RhpMode, programs: &[Term]) -> Result<Verdict> {
    let tctx = enumerate::contexts(u, Lang::Target)?;
    let sctx = enumerate::contexts(u, Lang::Source)?;
    let bmap = compiler.behavior().table();
    let mut checked = 0;
    for p in programs {
        p.validate(u, Lang::Source)?;
        let q = compiler.compile(p);
        let sources: Vec<(Ctx, Machine)> = sctx.iter().map(|c| (c.clone(), Machine::new(u, &c.plug(p)))).collect();
        for ct in &tctx {
            checked += 1;
            let mt = Machine::new(u, &ct.plug(&q));
            let candidates: Vec<&(Ctx, Machine)> = match mode {
                RhpMode::Search => sources.iter().collect(),
                RhpMode::Backtranslation => {
                    let cs = compiler.back().translate(ct);
                    sources.iter().filter(|(c, _)| *c == cs).collect()
                }
            };
            let mut first_mismatch = None;
            let mut ok = false;
            for (_, ms) in &candidates {
                match first_difference(u, &mt, &EVENT_ID, ms, &bmap)? {
                    None => {
                        ok = true;
                        break;
                    }
                    Some(d) => {
                        first_mismatch.get_or_insert(d);
                    }
                }
            }
            if !ok {
                let mut w = Witness {
                    lang: Some(Lang::Target),
                    program: Some(p.clone()),
                    context: Some(ct.clone()),
                    note: "no source context yields the translated target behaviour".into(),
                    ..Witness::default()
                };
                if let Some((s, tt, ts)) = first_mismatch {
                    w.stores = vec![s];
                    w.traces = vec![tt, ts];
                }
                return Ok(Verdict::fail(w, checked));
            }
        }
    }
    Ok(Verdict::pass(checked))
}

/// For every source program robustly satisfying `h`, its compilation
/// robustly satisfies `h` too.
pub fn check_preservation(u: &Universe, compiler: &dyn Compiler, h: &dyn Hyperproperty) -> Result<Verdict> {
    let programs = enumerate::terms(u, Lang::Source)?;
    check_preservation_on(u, compiler, h, &programs)
}

pub fn check_preservation_on(
    u: &Universe,
    compiler: &dyn Compiler,
    h: &dyn Hyperproperty,
    programs: &[Term],
) -> Result<Verdict> {
    let mut fuel_limited = false;
    let mut checked = 0;
    for p in programs {
        let vs = robust_sat(u, Lang::Source, p, h)?;
        fuel_limited |= vs.fuel_limited;
        if !vs.holds {
            continue;
        }
        checked += 1;
        let vt = robust_sat(u, Lang::Target, &compiler.compile(p), h)?;
        fuel_limited |= vt.fuel_limited;
        if !vt.holds {
            let mut w = vt.witness.expect("failing verdict has a witness");
            w.program = Some(p.clone());
            w.note = format!("source robustly satisfies {}, compilation does not: {}", h.name(), w.note);
            return Ok(Verdict::fail(w, checked).fuel_limited(fuel_limited));
        }
    }
    Ok(Verdict::pass(checked).fuel_limited(fuel_limited))
}
