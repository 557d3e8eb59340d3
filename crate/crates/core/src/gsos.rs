//! One-step behaviour tables, GSOS laws and the diagram checks built on them.
//!
//! `B X = (S × Maybe E × (X ⊎ ✓))^S` is a [`BehaviorTable`]: one entry per
//! store of the universe. Continuations are indices into a small pool of
//! residuals, so mapping over `X` touches the pool only and a table over
//! 4096 stores stays cheap to transform.
//!
//! The law `ρ` of Target is implemented once by [`rho_apply`]; Source's law
//! is its restriction to the Source constructors. The law reads the
//! children's tables and never their syntax, except to build residuals.
//!
//! The final coalgebra is approximated by [`CoalgElem`], a fuel-bounded
//! unfolding whose frontier is marked as cut.

use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

use crate::compilers::{BackTranslation, BehaviorMap, Compiler, SyntaxMap};
use crate::enumerate;
use crate::error::{Error, Result};
use crate::machine::{Machine, NodeId};
use crate::opsem::{step_unchecked, Event, Next};
use crate::syntax::{Ctx, Free, Layer, Term};
use crate::hyperprops::{trace_into, EVENT_ID};
use crate::traces::{Behavior, BehaviorBuilder, Terminator, Trace, TraceItem};
use crate::universe::{Lang, Store, Universe};
use crate::verdict::{Verdict, Witness};

/// One entry of a table; `next` indexes the table's residual pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Entry {
    pub store: Store,
    pub event: Event,
    pub next: Next<u32>,
}

/// An element of `B X`, total over the stores of one universe.
#[derive(Debug, Clone)]
pub struct BehaviorTable<R> {
    entries: Vec<Entry>,
    pool: Vec<R>,
}

impl<R> BehaviorTable<R> {
    /// Builds a table from one entry per store, in store order.
    pub fn from_fn(u: &Universe, mut f: impl FnMut(Store) -> (Store, Event, Next<R>)) -> BehaviorTable<R>
    where
        R: PartialEq,
    {
        let mut pool: Vec<R> = Vec::new();
        let entries = u
            .stores()
            .map(|s| {
                let (store, event, next) = f(s);
                let next = next.map(|r| match pool.iter().position(|x| *x == r) {
                    Some(i) => i as u32,
                    None => {
                        pool.push(r);
                        pool.len() as u32 - 1
                    }
                });
                Entry { store, event, next }
            })
            .collect();
        BehaviorTable { entries, pool }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn pool(&self) -> &[R] {
        &self.pool
    }

    pub fn entry(&self, s: Store) -> Entry {
        self.entries[s.0 as usize]
    }

    /// The entry for `s` with its residual resolved.
    pub fn get(&self, s: Store) -> (Store, Event, Next<&R>) {
        let e = self.entry(s);
        (e.store, e.event, e.next.map(|i| &self.pool[i as usize]))
    }

    /// `B f`: transform every residual.
    pub fn map_residuals<S>(self, f: impl FnMut(R) -> S) -> BehaviorTable<S> {
        BehaviorTable {
            entries: self.entries,
            pool: self.pool.into_iter().map(f).collect(),
        }
    }

    pub fn try_map_events(mut self, f: impl Fn(Event) -> Result<Event>) -> Result<BehaviorTable<R>> {
        for e in &mut self.entries {
            e.event = f(e.event)?;
        }
        Ok(self)
    }

    /// First input store whose entries differ, comparing residuals by value.
    pub fn first_difference(&self, other: &BehaviorTable<R>) -> Option<Store>
    where
        R: PartialEq,
    {
        if self.len() != other.len() {
            return Some(Store(self.len().min(other.len()) as u32));
        }
        let same: Vec<Vec<bool>> = self
            .pool
            .iter()
            .map(|a| other.pool.iter().map(|b| a == b).collect())
            .collect();
        self.entries.iter().zip(&other.entries).position(|(a, b)| {
            a.store != b.store
                || a.event != b.event
                || match (a.next, b.next) {
                    (Next::Done, Next::Done) => false,
                    (Next::Residual(i), Next::Residual(j)) => !same[i as usize][j as usize],
                    _ => true,
                }
        })
        .map(|i| Store(i as u32))
    }

    pub fn contains_event(&self, event: Event) -> bool {
        self.entries.iter().any(|e| e.event == event)
    }

    /// `s ↦ (s′, event, residual)` in the trace syntax.
    pub fn render_entry(&self, u: &Universe, s: Store, render: impl Fn(&R) -> String) -> String {
        let (store, event, next) = self.get(s);
        let ev = match event {
            Event::Silent => "-",
            Event::Internal => "#H",
            Event::Bang => "!",
        };
        let next = match next {
            Next::Done => "OK".to_string(),
            Next::Residual(r) => render(r),
        };
        format!("{} -> ({}, {}, {})", u.show_store(s), u.show_store(store), ev, next)
    }
}

impl<R: PartialEq> PartialEq for BehaviorTable<R> {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.first_difference(other).is_none()
    }
}

impl<R: Eq> Eq for BehaviorTable<R> {}

/// `h: A → BA` at one term: [`crate::opsem::step`] tabulated over every store.
pub fn one_step(u: &Universe, lang: Lang, p: &Term) -> Result<BehaviorTable<Term>> {
    p.validate(u, lang)?;
    Ok(one_step_unchecked(u, p))
}

fn one_step_unchecked(u: &Universe, p: &Term) -> BehaviorTable<Term> {
    // The machine agrees with the interpreter and avoids allocating a
    // residual per store.
    let m = Machine::new(u, p);
    let mut slot: HashMap<NodeId, u32> = HashMap::new();
    let mut pool = Vec::new();
    let entries = u
        .stores()
        .map(|s| {
            let t = m.step(u, 0, s);
            let next = t.next.map(|id| {
                *slot.entry(id).or_insert_with(|| {
                    pool.push(m.term(id).clone());
                    pool.len() as u32 - 1
                })
            });
            Entry {
                store: t.store,
                event: t.event,
                next,
            }
        })
        .collect();
    BehaviorTable { entries, pool }
}

/// [`one_step`] computed directly by the reference interpreter, one store at
/// a time.
pub fn one_step_reference(u: &Universe, lang: Lang, p: &Term) -> Result<BehaviorTable<Term>> {
    p.validate(u, lang)?;
    Ok(BehaviorTable::from_fn(u, |s| {
        let o = step_unchecked(u, s, p);
        (o.store, o.event, o.next)
    }))
}

/// `ρ: Σ(Id × B) ⇒ BΣ*`, the GSOS law of `lang`.
///
/// Every child table must be total over `u`.
pub fn rho_apply<X: Clone>(
    u: &Universe,
    lang: Lang,
    node: Layer<(X, &BehaviorTable<X>)>,
) -> Result<BehaviorTable<Free<X>>> {
    if lang == Lang::Source && node.is_target_only() {
        return Err(Error::TargetOnly(node.constructor()));
    }
    for (_, t) in node.children() {
        if t.len() as u64 != u.store_count() {
            return Err(Error::ShapeMismatch(format!(
                "child table has {} entries, the universe has {} stores",
                t.len(),
                u.store_count()
            )));
        }
    }
    Ok(rho_unchecked(u, node))
}

fn constant_next(u: &Universe, next: Next<u32>, event: impl Fn(Store) -> (Store, Event)) -> Vec<Entry> {
    u.stores()
        .map(|s| {
            let (store, event) = event(s);
            Entry { store, event, next }
        })
        .collect()
}

fn rho_unchecked<X: Clone>(u: &Universe, node: Layer<(X, &BehaviorTable<X>)>) -> BehaviorTable<Free<X>> {
    match node {
        Layer::Skip => BehaviorTable {
            entries: constant_next(u, Next::Done, |s| (s, Event::Silent)),
            pool: vec![],
        },
        Layer::Assign(v, e) => BehaviorTable {
            entries: constant_next(u, Next::Done, |s| {
                let x = e.eval(u, s);
                let event = if u.is_high(v) && u.get(s, v) != x {
                    Event::Internal
                } else {
                    Event::Silent
                };
                (u.set(s, v, x), event)
            }),
            pool: vec![],
        },
        // (s′, δ, p′ ; q) when p steps to p′, (s′, δ, q) when p terminates
        Layer::Seq((_, tp), (q, _)) => {
            let k = tp.pool.len() as u32;
            let mut pool: Vec<Free<X>> = tp
                .pool
                .iter()
                .map(|p2| Free::roll(Layer::Seq(Free::Pure(p2.clone()), Free::Pure(q.clone()))))
                .collect();
            pool.push(Free::Pure(q));
            let entries = tp
                .entries
                .iter()
                .map(|e| Entry {
                    next: Next::Residual(match e.next {
                        Next::Done => k,
                        Next::Residual(i) => i,
                    }),
                    ..*e
                })
                .collect();
            BehaviorTable { entries, pool }
        }
        Layer::While(e, (body, _)) => {
            let entries = u
                .stores()
                .map(|s| Entry {
                    store: s,
                    event: Event::Silent,
                    next: Next::Residual(if e.eval(u, s) == 0 { 0 } else { 1 }),
                })
                .collect();
            let again = Free::roll(Layer::While(e, Free::Pure(body.clone())));
            let pool = vec![Free::roll(Layer::Skip), Free::roll(Layer::Seq(Free::Pure(body), again))];
            BehaviorTable { entries, pool }
        }
        Layer::Obs((_, tp)) => BehaviorTable {
            entries: tp
                .entries
                .iter()
                .map(|e| Entry {
                    event: e.event.observed(),
                    ..*e
                })
                .collect(),
            pool: tp
                .pool
                .iter()
                .map(|p2| Free::roll(Layer::Obs(Free::Pure(p2.clone()))))
                .collect(),
        },
        Layer::Sandbox((_, tp)) => BehaviorTable {
            entries: tp
                .entries
                .iter()
                .map(|e| Entry {
                    event: e.event.sandboxed(),
                    ..*e
                })
                .collect(),
            pool: tp.pool.iter().cloned().map(Free::Pure).collect(),
        },
    }
}

/// The law extended to free terms: evaluates `t` bottom-up, applying `ρ` at
/// every layer and flattening the nested residuals.
pub fn lambda<X: Clone>(
    u: &Universe,
    lang: Lang,
    t: Free<(X, &BehaviorTable<X>)>,
) -> Result<(Free<X>, BehaviorTable<Free<X>>)> {
    match t {
        Free::Pure((x, table)) => Ok((Free::Pure(x), table.clone().map_residuals(Free::Pure))),
        Free::Roll(layer) => {
            let children = layer.try_map(|c| lambda(u, lang, c))?;
            let term = Free::roll(children.as_ref().map(|(f, _)| f.clone()));
            let node = children.as_ref().map(|(f, table)| (f.clone(), table));
            let table = rho_apply(u, lang, node)?.map_residuals(Free::join);
            Ok((term, table))
        }
    }
}

/// The one-step table of a closed term computed compositionally by the law.
pub fn law_table(u: &Universe, p: &Term) -> BehaviorTable<Term> {
    let placeholder = BehaviorTable { entries: vec![], pool: vec![] };
    let children: Layer<(Term, BehaviorTable<Term>)> = match p.layer() {
        // a loop's body is not run by the loop's own step
        Layer::While(e, body) => Layer::While(e.clone(), (body.clone(), placeholder)),
        l => l.as_ref().map(|c| (c.clone(), law_table(u, c))),
    };
    let node = children.as_ref().map(|(c, t)| (c.clone(), t));
    rho_unchecked(u, node).map_residuals(Free::flatten)
}

/// `b` on a table: translate every event.
pub fn b_table<R>(b: &dyn BehaviorMap, t: BehaviorTable<R>) -> Result<BehaviorTable<R>> {
    t.try_map_events(|e| b.map_event(e))
}

fn render_free(u: &Universe, f: &Free<Term>) -> String {
    f.clone().flatten().render(u)
}

fn diagram_witness(p: &Term, s: Store, upper: String, lower: String, traces: Vec<Trace>) -> Witness {
    Witness {
        lang: Some(if p.is_source() { Lang::Source } else { Lang::Target }),
        program: Some(p.clone()),
        stores: vec![s],
        traces,
        note: format!("upper path {upper}; lower path {lower}"),
        ..Witness::default()
    }
}

/// A finished entry as the one-step trace it stands for.
fn entry_trace<R>(t: &BehaviorTable<R>, s: Store) -> Option<Trace> {
    let e = t.entry(s);
    if !e.next.is_done() {
        return None;
    }
    let mut items = vec![TraceItem::State(s)];
    match e.event {
        Event::Silent => {}
        Event::Internal => items.push(TraceItem::Internal),
        Event::Bang => items.push(TraceItem::Bang),
    }
    items.push(TraceItem::State(e.store));
    Some(Trace {
        items,
        end: Terminator::Tick,
    })
}

fn mismatch_traces<R>(upper: &BehaviorTable<R>, lower: &BehaviorTable<R>, s: Store) -> Vec<Trace> {
    entry_trace(upper, s).into_iter().chain(entry_trace(lower, s)).collect()
}

/// The upper and lower composites of a square, at one node.
pub type Paths = (BehaviorTable<Free<Term>>, BehaviorTable<Free<Term>>);

/// The two composites of the MoDL square at one node.
pub fn modl_paths(
    u: &Universe,
    s: &dyn SyntaxMap,
    b: &dyn BehaviorMap,
    node: Layer<(Term, &BehaviorTable<Term>)>,
) -> Result<Paths> {
    // b ∘ B s* ∘ ρ_S
    let upper = rho_apply(u, Lang::Source, node.clone())?.map_residuals(|r| s.extend(r));
    let upper = b_table(b, upper)?;
    // ρ_T ∘ s* ∘ Σ(id × b)
    let mapped = node.try_map(|(p, t)| Ok::<_, Error>((p, b_table(b, t.clone())?)))?;
    let image = s.apply(mapped.as_ref().map(|(p, t)| (p.clone(), t)));
    let (_, lower) = lambda(u, Lang::Target, image)?;
    Ok((upper, lower))
}

/// Does `(s, b)` make the MoDL square commute on every enumerated node?
///
/// The nodes are the top layers of the enumerated Source terms, with each
/// child paired with its real one-step table.
pub fn check_modl(u: &Universe, s: &dyn SyntaxMap, b: &dyn BehaviorMap) -> Result<Verdict> {
    check_modl_on(u, s, b, &enumerate::terms(u, Lang::Source)?)
}

pub fn check_modl_on(u: &Universe, s: &dyn SyntaxMap, b: &dyn BehaviorMap, programs: &[Term]) -> Result<Verdict> {
    let mut tables: HashMap<Term, BehaviorTable<Term>> = HashMap::new();
    for (i, p) in programs.iter().enumerate() {
        p.validate(u, Lang::Source)?;
        for c in p.layer().children() {
            if !tables.contains_key(c) {
                tables.insert(c.clone(), one_step_unchecked(u, c));
            }
        }
        let node = p.layer().as_ref().map(|c| (c.clone(), &tables[c]));
        let (upper, lower) = modl_paths(u, s, b, node)?;
        if let Some(st) = upper.first_difference(&lower) {
            let r = |f: &Free<Term>| render_free(u, f);
            let w = diagram_witness(
                p,
                st,
                upper.render_entry(u, st, r),
                lower.render_entry(u, st, r),
                mismatch_traces(&upper, &lower, st),
            );
            return Ok(Verdict::fail(w, i as u64 + 1));
        }
    }
    Ok(Verdict::pass(programs.len() as u64))
}

/// A Source term under a chain of Target observers: `m(C_T, P)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayeredTerm {
    pub layers: usize,
    pub term: Term,
}

/// `m`: plug a Source term into a Target context without compiling it.
pub fn cross_plug(c: &Ctx, p: &Term) -> LayeredTerm {
    LayeredTerm {
        layers: c.layers(),
        term: p.clone(),
    }
}

impl LayeredTerm {
    pub fn validate(&self, u: &Universe) -> Result<()> {
        Ctx::with_layers(self.layers).validate(u, Lang::Target)?;
        self.term.validate(u, Lang::Source)
    }

    pub fn context(&self) -> Ctx {
        Ctx::with_layers(self.layers)
    }

    /// Compile the Source term in place, keeping the layers.
    pub fn compile_inside(&self, compiler: &dyn Compiler) -> LayeredTerm {
        LayeredTerm {
            layers: self.layers,
            term: compiler.compile(&self.term),
        }
    }

    /// Read the layers as Target syntax.
    pub fn plug_target(&self) -> Term {
        self.context().plug(&self.term)
    }

    /// `t*`: collapse the layers through a back-translation.
    pub fn collapse(&self, t: &dyn BackTranslation) -> Term {
        t.translate(&self.context()).plug(&self.term)
    }
}

/// The two composites of the MMoDL square for one observer around `p`.
///
/// Both start from `p`'s Source table. The upper path back-translates the
/// observer and runs Source's (trivial) context law before `b`; the lower
/// path applies `b`, runs the observer's law and collapses the layer.
pub fn mmodl_paths(
    t: &dyn BackTranslation,
    b: &dyn BehaviorMap,
    table: &BehaviorTable<Term>,
) -> Result<(BehaviorTable<Term>, BehaviorTable<Term>)> {
    let source_ctx = t.translate(&Ctx::with_layers(1));
    if source_ctx != Ctx::Hole {
        // Source has no context constructors
        return Err(Error::ShapeMismatch(format!("back-translation produced {source_ctx}")));
    }
    let upper = b_table(b, table.clone())?;
    let lower = b_table(b, table.clone())?
        .try_map_events(|e| Ok(e.observed()))?
        .map_residuals(|p| LayeredTerm { layers: 1, term: p }.collapse(t));
    Ok((upper, lower))
}

/// Does `(t, b)` make the MMoDL square commute for every observer around
/// every enumerated Source term?
pub fn check_mmodl(u: &Universe, t: &dyn BackTranslation, b: &dyn BehaviorMap) -> Result<Verdict> {
    check_mmodl_on(u, t, b, &enumerate::terms(u, Lang::Source)?)
}

pub fn check_mmodl_on(u: &Universe, t: &dyn BackTranslation, b: &dyn BehaviorMap, programs: &[Term]) -> Result<Verdict> {
    for (i, p) in programs.iter().enumerate() {
        let table = one_step(u, Lang::Source, p)?;
        let (upper, lower) = mmodl_paths(t, b, &table)?;
        if let Some(st) = upper.first_difference(&lower) {
            let r = |x: &Term| x.render(u);
            let mut w = diagram_witness(
                p,
                st,
                upper.render_entry(u, st, r),
                lower.render_entry(u, st, r),
                mismatch_traces(&upper, &lower, st),
            );
            w.context = Some(Ctx::with_layers(1));
            return Ok(Verdict::fail(w, i as u64 + 1));
        }
    }
    Ok(Verdict::pass(programs.len() as u64))
}

#[derive(Debug)]
struct Graph {
    rows: Vec<Option<BehaviorTable<NodeId>>>,
    terms: Vec<Option<Term>>,
}

/// A fuel-bounded element of the final coalgebra: the unfolding of some
/// node of a behaviour graph to `depth` more steps.
#[derive(Debug, Clone)]
pub struct CoalgElem {
    graph: Arc<Graph>,
    node: NodeId,
    depth: usize,
}

/// What an element continues with after one step.
#[derive(Debug, Clone)]
pub enum Cont {
    Done,
    /// The fuel frontier: nothing more is known.
    Cut,
    Elem(CoalgElem),
}

impl CoalgElem {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// This element as a state of its own graph.
    pub fn root(&self) -> NodeId {
        self.node
    }

    pub fn is_cut(&self) -> bool {
        self.depth == 0
    }

    /// The program this element unfolds, if it came from one.
    pub fn term(&self) -> Option<&Term> {
        self.graph.terms[self.node as usize].as_ref()
    }

    /// One step from `s`; `None` at the frontier.
    pub fn observe(&self, s: Store) -> Option<(Store, Event, Cont)> {
        let (store, event, next) = self.observe_raw(s)?;
        let cont = match next {
            Next::Done => Cont::Done,
            Next::Residual(_) if self.depth == 1 => Cont::Cut,
            Next::Residual(n) => Cont::Elem(CoalgElem {
                graph: self.graph.clone(),
                node: n,
                depth: self.depth - 1,
            }),
        };
        Some((store, event, cont))
    }

    fn observe_raw(&self, s: Store) -> Option<(Store, Event, Next<NodeId>)> {
        if self.depth == 0 {
            return None;
        }
        let row = self.graph.rows[self.node as usize].as_ref().expect("rows exist inside the fuel bound");
        let (store, event, next) = row.get(s);
        Some((store, event, next.map(|n| *n)))
    }

    /// `b^∞`: translate the events of the whole unfolding.
    pub fn map_events(&self, b: &dyn BehaviorMap) -> Result<CoalgElem> {
        let rows = self
            .graph
            .rows
            .iter()
            .map(|r| r.clone().map(|t| b_table(b, t)).transpose())
            .collect::<Result<_>>()?;
        Ok(CoalgElem {
            graph: Arc::new(Graph {
                rows,
                terms: self.graph.terms.clone(),
            }),
            node: self.node,
            depth: self.depth,
        })
    }

    pub fn with_depth(&self, depth: usize) -> CoalgElem {
        CoalgElem {
            depth: depth.min(self.depth),
            ..self.clone()
        }
    }
}

/// `f: A → Z`: unfold `p` by the law to `fuel` steps.
pub fn f_unfold(u: &Universe, lang: Lang, p: &Term, fuel: usize) -> Result<CoalgElem> {
    p.validate(u, lang)?;
    let mut index: HashMap<Term, NodeId> = HashMap::new();
    let mut terms = vec![Some(p.clone())];
    let mut rows: Vec<Option<BehaviorTable<NodeId>>> = vec![None];
    index.insert(p.clone(), 0);
    let mut frontier = vec![0 as NodeId];
    for _ in 0..fuel {
        let mut next_frontier = Vec::new();
        for id in frontier {
            let term = terms[id as usize].clone().expect("unfolded nodes carry terms");
            let table = law_table(u, &term);
            let ids: Vec<NodeId> = table
                .pool
                .iter()
                .map(|r| {
                    *index.entry(r.clone()).or_insert_with(|| {
                        terms.push(Some(r.clone()));
                        rows.push(None);
                        next_frontier.push(terms.len() as NodeId - 1);
                        terms.len() as NodeId - 1
                    })
                })
                .collect();
            rows[id as usize] = Some(table.map_residuals(|_| 0).with_pool(ids));
        }
        frontier = next_frontier;
    }
    Ok(CoalgElem {
        graph: Arc::new(Graph { rows, terms }),
        node: 0,
        depth: fuel,
    })
}

impl<R> BehaviorTable<R> {
    fn with_pool<S>(self, pool: Vec<S>) -> BehaviorTable<S> {
        debug_assert_eq!(pool.len(), self.pool.len());
        BehaviorTable {
            entries: self.entries,
            pool,
        }
    }
}

/// `Ψ: Z → prop`: one trace per initial store, following continuations;
/// the frontier becomes `TIMEOUT`.
pub fn psi(u: &Universe, z: &CoalgElem) -> Behavior {
    let mut b = BehaviorBuilder::new();
    for s0 in u.stores() {
        b.begin(s0);
        let end = psi_walk(z, s0, |e, s| b.step(e, s));
        b.end(end);
    }
    b.finish()
}

/// The trace of [`psi`] starting at `s0`.
pub fn psi_trace(z: &CoalgElem, s0: Store) -> Trace {
    let mut items = Vec::new();
    let end = psi_into(z, s0, &mut items);
    Trace { items, end }
}

fn psi_into(z: &CoalgElem, s0: Store, buf: &mut Vec<TraceItem>) -> Terminator {
    buf.clear();
    buf.push(TraceItem::State(s0));
    psi_walk(z, s0, |e, s| {
        match e {
            Event::Silent => {}
            Event::Internal => buf.push(TraceItem::Internal),
            Event::Bang => buf.push(TraceItem::Bang),
        }
        buf.push(TraceItem::State(s));
    })
}

fn psi_walk(z: &CoalgElem, s0: Store, mut on_step: impl FnMut(Event, Store)) -> Terminator {
    let (mut node, mut depth, mut s) = (z.node, z.depth, s0);
    loop {
        if depth == 0 {
            return Terminator::Timeout;
        }
        let row = z.graph.rows[node as usize].as_ref().expect("rows exist inside the fuel bound");
        let e = row.entry(s);
        on_step(e.event, e.store);
        s = e.store;
        match e.next {
            Next::Done => return Terminator::Tick,
            Next::Residual(i) => {
                node = row.pool[i as usize];
                depth -= 1;
            }
        }
    }
}

/// `φ: Trace → Z`: the store-oblivious element replaying `t`'s steps.
///
/// The initial store of `t` is not recorded, so `φ` is injective on traces
/// that share their first store.
pub fn phi(u: &Universe, t: &Trace) -> Result<CoalgElem> {
    t.validate(None)?;
    if t.end == Terminator::Timeout {
        return Err(Error::TimeoutTrace);
    }
    let mut steps = Vec::new();
    let mut event = Event::Silent;
    for item in &t.items[1..] {
        match item {
            TraceItem::Internal => event = Event::Internal,
            TraceItem::Bang => event = Event::Bang,
            TraceItem::State(s) => {
                if (s.0 as u64) >= u.store_count() {
                    return Err(Error::CrossUniverse);
                }
                steps.push((*s, event));
                event = Event::Silent;
            }
        }
    }
    let n = steps.len();
    let rows = steps
        .iter()
        .enumerate()
        .map(|(i, &(store, event))| {
            let next = if i + 1 == n { Next::Done } else { Next::Residual(0) };
            let pool = if i + 1 == n { vec![] } else { vec![i as NodeId + 1] };
            Some(BehaviorTable {
                entries: constant_next(u, next, |_| (store, event)),
                pool,
            })
        })
        .collect();
    Ok(CoalgElem {
        graph: Arc::new(Graph {
            rows,
            terms: vec![None; n],
        }),
        node: 0,
        depth: n,
    })
}

/// One observed step: the next store, the event and the continuation.
pub type Observation<X> = Option<(Store, Event, Next<X>)>;

/// A deterministic labelled transition system over the stores of a universe.
pub trait Coalgebra {
    type State: Clone + Eq + Hash;

    /// One step of `x` from `s`; `None` beyond the fuel frontier.
    fn observe(&self, u: &Universe, x: &Self::State, s: Store) -> Result<Observation<Self::State>>;
}

/// States are graph nodes. A node has a row iff it lies inside the fuel
/// bound of the unfolding; outside it the element is cut.
impl Coalgebra for CoalgElem {
    type State = NodeId;

    fn observe(&self, _: &Universe, x: &NodeId, s: Store) -> Result<Observation<NodeId>> {
        Ok(self.graph.rows[*x as usize].as_ref().map(|row| {
            let (store, event, next) = row.get(s);
            (store, event, next.map(|n| *n))
        }))
    }
}

/// Programs stepped by the reference interpreter.
pub struct Interpreter;

impl Coalgebra for Interpreter {
    type State = Term;

    fn observe(&self, u: &Universe, x: &Term, s: Store) -> Result<Observation<Term>> {
        let o = step_unchecked(u, s, x);
        Ok(Some((o.store, o.event, o.next)))
    }
}

/// A compiled machine; node 0 is the root.
impl Coalgebra for Machine {
    type State = NodeId;

    #[inline]
    fn observe(&self, u: &Universe, x: &NodeId, s: Store) -> Result<Observation<NodeId>> {
        let t = self.step(u, *x, s);
        Ok(Some((t.store, t.event, t.next)))
    }
}

/// Another coalgebra with its events translated by `b`.
pub struct Mapped<'a, C> {
    pub inner: &'a C,
    pub b: &'a dyn BehaviorMap,
}

impl<C: Coalgebra> Coalgebra for Mapped<'_, C> {
    type State = C::State;

    fn observe(&self, u: &Universe, x: &C::State, s: Store) -> Result<Observation<C::State>> {
        match self.inner.observe(u, x, s)? {
            Some((st, e, n)) => Ok(Some((st, self.b.map_event(e)?, n))),
            None => Ok(None),
        }
    }
}

/// The `B_T`-coalgebra on layered terms: step the Source term, translate
/// the event by `b`, then pass it through the Target observers.
///
/// The Source term is given by a machine; states are its nodes and stand for
/// `LayeredTerm { layers, term: machine.term(node) }`.
pub struct Layered<'a> {
    pub layers: usize,
    pub machine: &'a Machine,
    pub b: &'a dyn BehaviorMap,
}

impl Layered<'_> {
    pub fn state(&self, node: NodeId) -> LayeredTerm {
        LayeredTerm {
            layers: self.layers,
            term: self.machine.term(node).clone(),
        }
    }
}

impl Coalgebra for Layered<'_> {
    type State = NodeId;

    fn observe(&self, u: &Universe, x: &NodeId, s: Store) -> Result<Observation<NodeId>> {
        let t = self.machine.step(u, *x, s);
        let mut e = self.b.map_event(t.event)?;
        for _ in 0..self.layers {
            e = e.observed();
        }
        Ok(Some((t.store, e, t.next)))
    }
}

/// Another coalgebra with its events translated by a per-event table, as
/// produced by [`BehaviorMap::table`]; `None` entries reject the event.
pub(crate) struct Remapped<'a, C> {
    pub inner: &'a C,
    pub table: &'a [Option<Event>; 3],
}

impl<C: Coalgebra> Coalgebra for Remapped<'_, C> {
    type State = C::State;

    #[inline]
    fn observe(&self, u: &Universe, x: &C::State, s: Store) -> Result<Observation<C::State>> {
        match self.inner.observe(u, x, s)? {
            Some((st, e, n)) => Ok(Some((st, self.table[e as usize].ok_or(Error::BangInSource)?, n))),
            None => Ok(None),
        }
    }
}

/// Do `x` and `y` produce the same trace from `s0` when both run for at
/// most `fuel` steps?
///
/// The two systems are run in lockstep. Both are deterministic, so once the
/// joint configuration (both states and the common store) repeats, every
/// later step repeats an already compared one and the runs agree up to the
/// fuel bound. Repetition is detected with Brent's method.
pub fn same_run<A: Coalgebra, B: Coalgebra>(
    u: &Universe,
    a: &A,
    x: A::State,
    b: &B,
    y: B::State,
    s0: Store,
    fuel: usize,
) -> Result<bool> {
    let (mut x, mut y, mut s) = (x, y, s0);
    let mut saved = (x.clone(), y.clone(), s);
    let (mut power, mut lam) = (1usize, 0usize);
    for _ in 0..fuel {
        let (ox, oy) = (a.observe(u, &x, s)?, b.observe(u, &y, s)?);
        let (Some((sx, ex, nx)), Some((sy, ey, ny))) = (ox, oy) else {
            return Ok(false);
        };
        if sx != sy || ex != ey {
            return Ok(false);
        }
        s = sx;
        match (nx, ny) {
            (Next::Done, Next::Done) => return Ok(true),
            (Next::Residual(x2), Next::Residual(y2)) => {
                x = x2;
                y = y2;
            }
            _ => return Ok(false),
        }
        if saved.2 == s && saved.0 == x && saved.1 == y {
            return Ok(true);
        }
        lam += 1;
        if lam == power {
            saved = (x.clone(), y.clone(), s);
            power *= 2;
            lam = 0;
        }
    }
    Ok(true)
}

/// One side of a failed bisimulation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepView {
    pub store: Store,
    pub event: Event,
    pub done: bool,
}

/// Where two coalgebra states first disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    /// Input store at every step from the roots to the disagreement.
    pub path: Vec<Store>,
    /// `None` marks the fuel frontier.
    pub left: Option<StepView>,
    pub right: Option<StepView>,
}

/// Are `x` and `y` bisimilar up to `depth` steps? Returns the first
/// divergence in breadth-first order.
pub fn bisimilar_to_depth<A: Coalgebra, B: Coalgebra>(
    u: &Universe,
    a: &A,
    x: A::State,
    b: &B,
    y: B::State,
    depth: usize,
) -> Result<Option<Divergence>> {
    // (pair, parent index, input store that led here)
    let mut nodes: Vec<(A::State, B::State, usize, Store)> = Vec::new();
    let mut seen: HashSet<(A::State, B::State)> = HashSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    seen.insert((x.clone(), y.clone()));
    nodes.push((x, y, usize::MAX, Store(0)));
    queue.push_back((0, 0));
    let path_to = |nodes: &[(A::State, B::State, usize, Store)], mut i: usize, last: Store| {
        let mut path = vec![last];
        while nodes[i].2 != usize::MAX {
            path.push(nodes[i].3);
            i = nodes[i].2;
        }
        path.reverse();
        path
    };
    let mut succ: Vec<(A::State, B::State, Store)> = Vec::new();
    while let Some((i, level)) = queue.pop_front() {
        if level == depth {
            continue;
        }
        for s in u.stores() {
            let (ox, oy) = {
                let (px, py) = (&nodes[i].0, &nodes[i].1);
                (a.observe(u, px, s)?, b.observe(u, py, s)?)
            };
            let (vx, vy) = (step_view(&ox), step_view(&oy));
            if vx != vy {
                return Ok(Some(Divergence {
                    path: path_to(&nodes, i, s),
                    left: vx,
                    right: vy,
                }));
            }
            if let (Some((_, _, Next::Residual(nx))), Some((_, _, Next::Residual(ny)))) = (ox, oy) {
                if !succ.iter().any(|(a, b, _)| *a == nx && *b == ny) {
                    succ.push((nx, ny, s));
                }
            }
        }
        // successors are few; the global set is consulted once per pair
        for (nx, ny, s) in succ.drain(..) {
            if seen.insert((nx.clone(), ny.clone())) {
                nodes.push((nx, ny, i, s));
                queue.push_back((nodes.len() - 1, level + 1));
            }
        }
    }
    Ok(None)
}

fn step_view<X>(o: &Option<(Store, Event, Next<X>)>) -> Option<StepView> {
    o.as_ref().map(|(store, event, n)| StepView {
        store: *store,
        event: *event,
        done: n.is_done(),
    })
}

fn render_view(u: &Universe, v: Option<StepView>) -> String {
    match v {
        None => "cut".into(),
        Some(v) => {
            let ev = match v.event {
                Event::Silent => "-",
                Event::Internal => "#H",
                Event::Bang => "!",
            };
            format!("({}, {}, {})", u.show_store(v.store), ev, if v.done { "OK" } else { "..." })
        }
    }
}

fn divergence_witness(u: &Universe, c: &Ctx, p: &Term, d: &Divergence, what: &str) -> Witness {
    Witness {
        lang: Some(Lang::Target),
        program: Some(p.clone()),
        context: Some(c.clone()),
        stores: d.path.clone(),
        note: format!(
            "{what}: after {} steps, {} vs {}",
            d.path.len() - 1,
            render_view(u, d.left),
            render_view(u, d.right)
        ),
        ..Witness::default()
    }
}

/// Sub-verdicts of [`check_layered`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredVerdict {
    pub blue: Verdict,
    pub purple: Verdict,
    pub bisimulation: Verdict,
}

impl LayeredVerdict {
    pub fn holds(&self) -> bool {
        self.blue.holds && self.purple.holds && self.bisimulation.holds
    }
}

/// Checks the layered-term squares for `compiler` over every enumerated
/// Target context and Source program, to depth `fuel`:
///
/// * blue: compiling inside `m(C, P)` and reading the layers as Target is
///   `C[⟦P⟧]`, and its law-based unfolding agrees with the machine;
/// * purple: collapsing `m(C, P)` through `t*` is `t(C)[P]`;
/// * bisimulation: the layered coalgebra at `m(C, P)` agrees with `b ∘ h`
///   at the collapse and with the Target semantics of `C[⟦P⟧]`.
pub fn check_layered(u: &Universe, compiler: &dyn Compiler, fuel: usize) -> Result<LayeredVerdict> {
    check_layered_on(u, compiler, fuel, &enumerate::terms(u, Lang::Source)?)
}

pub fn check_layered_on(u: &Universe, compiler: &dyn Compiler, fuel: usize, programs: &[Term]) -> Result<LayeredVerdict> {
    let ctxs = enumerate::contexts(u, Lang::Target)?;
    let (t, b) = (compiler.back(), compiler.behavior());
    let mut blue: Option<Verdict> = None;
    let mut purple: Option<Verdict> = None;
    let mut bisim: Option<Verdict> = None;
    let mut checked = 0;
    for p in programs {
        p.validate(u, Lang::Source)?;
        let compiled = compiler.compile(p);
        let source = Machine::new(u, p);
        for c in &ctxs {
            checked += 1;
            let m = cross_plug(c, p);
            m.validate(u)?;
            let target = c.plug(&compiled);
            let tm = Machine::new(u, &target);

            if blue.is_none() {
                let inside = m.compile_inside(compiler).plug_target();
                if inside != target {
                    let w = Witness {
                        note: format!("compiling inside gives {}", inside.render(u)),
                        ..divergence_witness(u, c, p, &Divergence { path: vec![], left: None, right: None }, "blue")
                    };
                    blue = Some(Verdict::fail(w, checked));
                } else {
                    let z = f_unfold(u, Lang::Target, &inside, fuel)?;
                    if let Some(d) = bisimilar_to_depth(u, &z, z.root(), &tm, 0, fuel)? {
                        blue = Some(Verdict::fail(divergence_witness(u, c, p, &d, "blue"), checked));
                    }
                }
            }

            if purple.is_none() {
                let plugged = t.translate(c).plug(p);
                let collapsed = m.collapse(t);
                if plugged != collapsed {
                    let mut w = divergence_witness(u, c, p, &Divergence { path: vec![], left: None, right: None }, "purple");
                    w.note = format!("t(C)[P] is {}, t*(m(C,P)) is {}", plugged.render(u), collapsed.render(u));
                    purple = Some(Verdict::fail(w, checked));
                }
            }

            if bisim.is_none() {
                let layered = Layered {
                    layers: m.layers,
                    machine: &source,
                    b,
                };
                let collapsed = m.collapse(t);
                let cm = Machine::new(u, &collapsed);
                let bh = Mapped { inner: &cm, b };
                if let Some(d) = bisimilar_to_depth(u, &layered, 0, &bh, 0, fuel)? {
                    bisim = Some(Verdict::fail(
                        divergence_witness(u, c, p, &d, "layered step vs b after the source step"),
                        checked,
                    ));
                } else if let Some(d) = bisimilar_to_depth(u, &layered, 0, &tm, 0, fuel)? {
                    bisim = Some(Verdict::fail(
                        divergence_witness(u, c, p, &d, "layered step vs the compiled program"),
                        checked,
                    ));
                }
            }
            if blue.is_some() && purple.is_some() && bisim.is_some() {
                break;
            }
        }
    }
    let done = |v: Option<Verdict>| v.unwrap_or_else(|| Verdict::pass(checked));
    Ok(LayeredVerdict {
        blue: done(blue),
        purple: done(purple),
        bisimulation: done(bisim),
    })
}

/// `beh = Ψ ∘ f` on every enumerated context and program of `lang`.
///
/// Both sides hold exactly one trace per initial store, so they are compared
/// store by store without materialising either behaviour.
pub fn check_beh_psi(u: &Universe, lang: Lang) -> Result<Verdict> {
    check_beh_psi_on(u, lang, &enumerate::terms(u, lang)?)
}

pub fn check_beh_psi_on(u: &Universe, lang: Lang, programs: &[Term]) -> Result<Verdict> {
    let ctxs = enumerate::contexts(u, lang)?;
    let mut checked = 0;
    for p in programs {
        p.validate(u, lang)?;
        for c in &ctxs {
            checked += 1;
            let whole = c.plug(p);
            let m = Machine::new(u, &whole);
            let z = f_unfold(u, lang, &whole, u.fuel())?;
            if let Some((s, a, b)) = first_psi_difference(u, &m, &EVENT_ID, &z)? {
                let w = Witness {
                    lang: Some(lang),
                    program: Some(p.clone()),
                    context: Some(c.clone()),
                    stores: vec![s],
                    traces: vec![a, b],
                    note: "beh differs from psi(f(P))".into(),
                    ..Witness::default()
                };
                return Ok(Verdict::fail(w, checked));
            }
        }
    }
    Ok(Verdict::pass(checked))
}

fn first_psi_difference(
    u: &Universe,
    m: &Machine,
    emap: &[Option<Event>; 3],
    z: &CoalgElem,
) -> Result<Option<(Store, Trace, Trace)>> {
    debug_assert_eq!(z.depth(), u.fuel());
    let mapped = Remapped { inner: m, table: emap };
    for s in u.stores() {
        if !same_run(u, &mapped, 0, z, z.root(), s, u.fuel())? {
            let mut buf = Vec::new();
            let end = trace_into(u, m, s, u.fuel(), emap, &mut buf)?;
            return Ok(Some((s, Trace { items: buf, end }, psi_trace(z, s))));
        }
    }
    Ok(None)
}

/// Trace-level `τ` (the trace lifting of `b` applied to `beh_S`) against
/// `Ψ ∘ b^∞ ∘ f_S` on every enumerated Source program.
pub fn check_tau_coherence(u: &Universe, b: &dyn BehaviorMap) -> Result<Verdict> {
    check_tau_coherence_on(u, b, &enumerate::terms(u, Lang::Source)?)
}

pub fn check_tau_coherence_on(u: &Universe, b: &dyn BehaviorMap, programs: &[Term]) -> Result<Verdict> {
    let bmap = b.table();
    for (i, p) in programs.iter().enumerate() {
        let z = f_unfold(u, Lang::Source, p, u.fuel())?.map_events(b)?;
        let m = Machine::new(u, p);
        if let Some((s, a, c)) = first_psi_difference(u, &m, &bmap, &z)? {
            let w = Witness {
                lang: Some(Lang::Source),
                program: Some(p.clone()),
                stores: vec![s],
                traces: vec![a, c],
                note: "trace-level tau differs from the coalgebraic one".into(),
                ..Witness::default()
            };
            return Ok(Verdict::fail(w, i as u64 + 1));
        }
    }
    Ok(Verdict::pass(programs.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compilers::{identity, sandbox, BErase, BIncl, SEmbed, SSandbox, TId};
    use crate::parse::parse_term;
    use crate::syntax::Expr;
    use crate::traces;
    use crate::universe::Level;

    fn small() -> Universe {
        Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(2)
            .literals([0, 1, 2])
            .term_depth(3)
            .build()
            .unwrap()
    }

    fn fx() -> Universe {
        Universe::fixture()
    }

    fn term(u: &Universe, lang: Lang, s: &str) -> Term {
        parse_term(u, lang, s).unwrap()
    }

    #[test]
    fn one_step_of_the_observer_example() {
        let u = fx();
        let h = u.var("h").unwrap();
        let t = one_step(&u, Lang::Source, &term(&u, Lang::Source, "h := 42")).unwrap();
        for s in u.stores() {
            let (st, ev, next) = t.get(s);
            assert_eq!(st, u.set(s, h, 42));
            assert!(next.is_done());
            let want = if u.get(s, h) != 42 { Event::Internal } else { Event::Silent };
            assert_eq!(ev, want);
        }
        let t = one_step(&u, Lang::Target, &term(&u, Lang::Target, "obs(h := 42)")).unwrap();
        let s = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        assert_eq!(t.get(s), (u.set(s, h, 42), Event::Bang, Next::Done));
        let skip = one_step(&u, Lang::Source, &Term::skip()).unwrap();
        assert!(u.stores().all(|s| skip.get(s) == (s, Event::Silent, Next::Done)));
    }

    #[test]
    fn seq_clauses() {
        let u = fx();
        let p = term(&u, Lang::Source, "while l { l := l - 1 }");
        let q = term(&u, Lang::Source, "h := 1");
        let tp = one_step(&u, Lang::Source, &p).unwrap();
        let out = rho_apply(&u, Lang::Source, Layer::Seq((p.clone(), &tp), (q.clone(), &tp))).unwrap();
        let s = u.store_of(&[("h", 0), ("l", 0)]).unwrap();
        let (_, _, next) = out.get(s);
        assert_eq!(next, Next::Residual(&Free::roll(Layer::Seq(Free::Pure(Term::skip()), Free::Pure(q.clone())))));
        let skip = one_step(&u, Lang::Source, &Term::skip()).unwrap();
        let out = rho_apply(&u, Lang::Source, Layer::Seq((Term::skip(), &skip), (q.clone(), &skip))).unwrap();
        assert_eq!(out.get(s), (s, Event::Silent, Next::Residual(&Free::Pure(q))));
    }

    #[test]
    fn source_law_rejects_target_nodes() {
        let u = small();
        let t = one_step(&u, Lang::Source, &Term::skip()).unwrap();
        assert_eq!(
            rho_apply(&u, Lang::Source, Layer::Obs((Term::skip(), &t))).unwrap_err(),
            Error::TargetOnly("obs")
        );
    }

    #[test]
    fn law_agrees_with_interpreter() {
        let u = small();
        for lang in [Lang::Source, Lang::Target] {
            for p in enumerate::terms(&u, lang).unwrap() {
                let reference = one_step_reference(&u, lang, &p).unwrap();
                assert_eq!(one_step(&u, lang, &p).unwrap(), reference);
                let tables: Vec<BehaviorTable<Term>> =
                    p.layer().children().into_iter().map(|c| one_step(&u, lang, c).unwrap()).collect();
                let mut k = 0;
                let node = p.layer().as_ref().map(|c| {
                    k += 1;
                    (c.clone(), &tables[k - 1])
                });
                let via_law = rho_apply(&u, lang, node).unwrap().map_residuals(Free::flatten);
                assert_eq!(via_law, reference, "{}", p.render(&u));
                assert_eq!(law_table(&u, &p), reference);
            }
        }
    }

    #[test]
    fn syntax_maps_are_natural() {
        let u = small();
        let f = |t: Term| Term::seq(t, Term::skip());
        for s in [&SEmbed as &dyn SyntaxMap, &SSandbox] {
            for p in enumerate::terms(&u, Lang::Source).unwrap() {
                let layer = p.layer().clone();
                let left = s.apply(layer.clone().map(f));
                let right = s.apply(layer).map(&mut |t| f(t));
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn behavior_maps_are_natural() {
        let u = small();
        let f = |t: Term| Term::obs(t);
        for b in [&BIncl as &dyn BehaviorMap, &BErase] {
            for p in enumerate::terms(&u, Lang::Source).unwrap() {
                let t = one_step(&u, Lang::Source, &p).unwrap();
                let left = b_table(b, t.clone().map_residuals(f)).unwrap();
                let right = b_table(b, t).unwrap().map_residuals(f);
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn b_erase_and_b_incl_on_tables() {
        let u = fx();
        let t = one_step(&u, Lang::Source, &term(&u, Lang::Source, "h := 42")).unwrap();
        let erased = b_table(&BErase, t.clone()).unwrap();
        assert!(!erased.contains_event(Event::Internal));
        assert_eq!(b_table(&BIncl, t.clone()).unwrap(), t);
    }

    #[test]
    fn modl_verdicts() {
        let u = small();
        assert!(check_modl(&u, &SSandbox, &BErase).unwrap().holds);
        assert!(check_modl(&u, &SEmbed, &BIncl).unwrap().holds);
        let v = check_modl(&u, &SSandbox, &BIncl).unwrap();
        assert!(!v.holds);
        let p = v.witness.unwrap().program.unwrap();
        assert!(matches!(p.layer(), Layer::Assign(x, _) if u.is_high(*x)));
    }

    #[test]
    fn modl_assignment_square() {
        let u = fx();
        let p = term(&u, Lang::Source, "h := 42");
        let node = Layer::Assign(u.var("h").unwrap(), Expr::Lit(42));
        let node: Layer<(Term, &BehaviorTable<Term>)> = node;
        let (upper, lower) = modl_paths(&u, &SSandbox, &BErase, node).unwrap();
        assert_eq!(upper, lower);
        assert!(upper.entries().iter().all(|e| e.event == Event::Silent && e.next.is_done()));
        assert!(check_modl_on(&u, &SSandbox, &BErase, &[p]).unwrap().holds);
    }

    #[test]
    fn mmodl_verdicts() {
        let u = small();
        assert!(check_mmodl(&u, &TId, &BErase).unwrap().holds);
        assert!(!check_mmodl(&u, &TId, &BIncl).unwrap().holds);
        let u = fx();
        let p = term(&u, Lang::Source, "h := 42");
        let v = check_mmodl_on(&u, &TId, &BIncl, std::slice::from_ref(&p)).unwrap();
        let w = v.witness.unwrap();
        let rendered: Vec<String> = w.traces.iter().map(|t| t.render(&u)).collect();
        assert!(rendered[0].contains("#H"));
        assert!(rendered[1].contains('!'));
        assert!(check_mmodl_on(&u, &TId, &BErase, &[Term::skip(), p]).unwrap().holds);
    }

    #[test]
    fn unfolding_examples() {
        let u = fx();
        let h = u.var("h").unwrap();
        let z = f_unfold(&u, Lang::Source, &term(&u, Lang::Source, "h := 42"), 5).unwrap();
        let s = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        assert!(matches!(z.observe(s), Some((st, Event::Internal, Cont::Done)) if st == u.set(s, h, 42)));
        let z = f_unfold(&u, Lang::Target, &term(&u, Lang::Target, "obs(h := 42)"), 5).unwrap();
        assert!(matches!(z.observe(s), Some((_, Event::Bang, Cont::Done))));

        let z = f_unfold(&u, Lang::Source, &term(&u, Lang::Source, "while 1 { skip }"), 2).unwrap();
        let Some((_, Event::Silent, Cont::Elem(z1))) = z.observe(s) else { panic!() };
        assert!(matches!(z1.observe(s), Some((_, Event::Silent, Cont::Cut))));
    }

    #[test]
    fn deeper_unfolding_refines() {
        let u = small();
        for p in enumerate::terms(&u, Lang::Source).unwrap() {
            for k in 1..6 {
                let a = f_unfold(&u, Lang::Source, &p, k).unwrap();
                let b = f_unfold(&u, Lang::Source, &p, k + 1).unwrap();
                assert_eq!(bisimilar_to_depth(&u, &a, a.root(), &b, b.root(), k).unwrap(), None);
            }
        }
    }

    #[test]
    fn beh_is_psi_after_f() {
        let u = small();
        for lang in [Lang::Source, Lang::Target] {
            assert!(check_beh_psi(&u, lang).unwrap().holds);
        }
        let u = fx();
        let p = term(&u, Lang::Source, "h := 42");
        let z = f_unfold(&u, Lang::Source, &p, u.fuel()).unwrap();
        assert_eq!(psi(&u, &z), traces::beh(&u, Lang::Source, &Ctx::Hole, &p).unwrap());
    }

    #[test]
    fn tau_realizations_agree() {
        let u = small();
        assert!(check_tau_coherence(&u, &BErase).unwrap().holds);
    }

    #[test]
    fn phi_replays() {
        let u = small();
        let t = Trace::parse(&u, "{h=1,l=0} {h=1,l=0} OK").unwrap();
        let z = phi(&u, &t).unwrap();
        assert_eq!(z.depth(), 1);
        let s = u.store_of(&[("h", 2), ("l", 2)]).unwrap();
        assert!(matches!(z.observe(s), Some((st, Event::Silent, Cont::Done)) if st == t.initial()));

        let t = Trace::parse(&u, "{h=1,l=0} #H {h=2,l=0} {h=2,l=1} OK").unwrap();
        let out = psi(&u, &phi(&u, &t).unwrap());
        assert_eq!(out.len() as u64, u.store_count());
        for r in out.traces() {
            let mut items = t.items.clone();
            items[0] = TraceItem::State(r.initial());
            assert_eq!(r.to_owned(), Trace { items, end: Terminator::Tick });
        }
        let timeout = Trace::parse(&u, "{h=1,l=0} {h=1,l=0} TIMEOUT").unwrap();
        assert_eq!(phi(&u, &timeout).unwrap_err(), Error::TimeoutTrace);
    }

    #[test]
    fn phi_is_injective_for_a_fixed_head() {
        let u = small();
        let s0 = u.store_of(&[("h", 0), ("l", 0)]).unwrap();
        let mut traces: Vec<Trace> = Vec::new();
        for p in enumerate::terms(&u, Lang::Target).unwrap() {
            let t = traces::run(&u, Lang::Target, s0, &p, u.fuel()).unwrap();
            if t.end == Terminator::Tick && !traces.contains(&t) {
                traces.push(t);
            }
        }
        let zs: Vec<CoalgElem> = traces.iter().map(|t| phi(&u, t).unwrap()).collect();
        for i in 0..zs.len() {
            for j in i + 1..zs.len() {
                let d = zs[i].depth().max(zs[j].depth());
                let diff = bisimilar_to_depth(&u, &zs[i], zs[i].root(), &zs[j], zs[j].root(), d).unwrap();
                assert!(diff.is_some(), "{} vs {}", traces[i].render(&u), traces[j].render(&u));
            }
        }
    }

    #[test]
    fn cross_plug_shapes() {
        let u = fx();
        let p = term(&u, Lang::Source, "h := 42");
        let m = cross_plug(&Ctx::with_layers(1), &p);
        assert_eq!(m, LayeredTerm { layers: 1, term: p.clone() });
        assert_eq!(cross_plug(&Ctx::Hole, &p).layers, 0);
        assert_eq!(cross_plug(&Ctx::with_layers(2), &Term::skip()).layers, 2);
        assert_eq!(m.collapse(&TId), p);
        assert_eq!(m.compile_inside(&sandbox()).plug_target().render(&u), "obs(sandbox{ h := 42 })");
        assert!(cross_plug(&Ctx::with_layers(3), &p).validate(&u).is_err());
    }

    #[test]
    fn layered_checks() {
        let u = small();
        let v = check_layered(&u, &sandbox(), 16).unwrap();
        assert!(v.holds(), "{v:?}");
        let v = check_layered(&u, &identity(), 16).unwrap();
        assert!(v.blue.holds && v.purple.holds);
        assert!(!v.bisimulation.holds);
    }

    #[test]
    fn layered_bisimulation_on_double_observer() {
        let u = fx();
        let p = term(&u, Lang::Source, "h := 42");
        let source = Machine::new(&u, &p);
        let layered = Layered {
            layers: 2,
            machine: &source,
            b: &BErase,
        };
        let bh = Mapped { inner: &source, b: &BErase };
        assert_eq!(bisimilar_to_depth(&u, &layered, 0, &bh, 0, 2).unwrap(), None);
        let s = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        let step = layered.observe(&u, &0, s).unwrap().unwrap();
        assert_eq!(step, (u.set(s, u.var("h").unwrap(), 42), Event::Silent, Next::Done));
    }

    #[test]
    fn lockstep_comparison_matches_full_traces() {
        let u = small().with_fuel(7).unwrap();
        let ps = enumerate::terms(&u, Lang::Target).unwrap();
        let ms: Vec<Machine> = ps.iter().step_by(7).map(|p| Machine::new(&u, p)).collect();
        for a in &ms {
            for b in &ms {
                for s in u.stores() {
                    let same = traces::machine_trace(&u, a, s, u.fuel()) == traces::machine_trace(&u, b, s, u.fuel());
                    assert_eq!(same_run(&u, a, 0, b, 0, s, u.fuel()).unwrap(), same);
                }
            }
        }
    }
}
