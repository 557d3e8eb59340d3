//! Fuel-bounded traces, whole-program behaviours and the abstraction that
//! hides internal events.
//!
//! A trace starts with the initial store; every step appends its event (if
//! not silent) and the resulting store, even when the store is unchanged.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::machine::Machine;
use crate::opsem::{step_unchecked, Event, Next, Rule};
use crate::syntax::{Ctx, Term};
use crate::universe::{Lang, Store, Universe};
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceItem {
    State(Store),
    Internal,
    Bang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminator {
    Tick,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trace {
    pub items: Vec<TraceItem>,
    pub end: Terminator,
}

/// Borrowed view of a trace stored inside a [`Behavior`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRef<'a> {
    pub items: &'a [TraceItem],
    pub end: Terminator,
}

impl<'a> PartialOrd for TraceRef<'a> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Ord for TraceRef<'a> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.items, self.end).cmp(&(other.items, other.end))
    }
}

impl<'a> TraceRef<'a> {
    pub fn to_owned(self) -> Trace {
        Trace {
            items: self.items.to_vec(),
            end: self.end,
        }
    }

    pub fn initial(self) -> Store {
        match self.items.first() {
            Some(TraceItem::State(s)) => *s,
            _ => panic!("trace does not start with a state"),
        }
    }

    pub fn contains(self, item: TraceItem) -> bool {
        self.items.contains(&item)
    }

    pub fn steps(self) -> usize {
        self.items
            .iter()
            .filter(|i| matches!(i, TraceItem::State(_)))
            .count()
            .saturating_sub(1)
    }

    pub fn render(self, u: &Universe) -> String {
        self.tokens(u).join(" ")
    }

    pub fn tokens(self, u: &Universe) -> Vec<String> {
        let mut out: Vec<String> = self
            .items
            .iter()
            .map(|i| match i {
                TraceItem::State(s) => u.show_store(*s),
                TraceItem::Internal => "#H".into(),
                TraceItem::Bang => "!".into(),
            })
            .collect();
        out.push(
            match self.end {
                Terminator::Tick => "OK",
                Terminator::Timeout => "TIMEOUT",
            }
            .into(),
        );
        out
    }
}

impl Trace {
    pub fn as_ref(&self) -> TraceRef<'_> {
        TraceRef {
            items: &self.items,
            end: self.end,
        }
    }

    pub fn initial(&self) -> Store {
        self.as_ref().initial()
    }

    pub fn render(&self, u: &Universe) -> String {
        self.as_ref().render(u)
    }

    pub fn tokens(&self, u: &Universe) -> Vec<String> {
        self.as_ref().tokens(u)
    }

    pub fn steps(&self) -> usize {
        self.as_ref().steps()
    }

    /// Checks the shape invariants: starts with a state, every event is
    /// followed by a state, no two events in a row.
    pub fn validate(&self, lang: Option<Lang>) -> Result<()> {
        let bad = |m: &str| Err(Error::MalformedTrace(m.into()));
        if !matches!(self.items.first(), Some(TraceItem::State(_))) {
            return bad("must start with a state");
        }
        let mut prev_event = false;
        for item in &self.items {
            match item {
                TraceItem::State(_) => prev_event = false,
                TraceItem::Internal | TraceItem::Bang => {
                    if prev_event {
                        return bad("two events in a row");
                    }
                    if *item == TraceItem::Bang && lang == Some(Lang::Source) {
                        return Err(Error::BangInSource);
                    }
                    prev_event = true;
                }
            }
        }
        if prev_event {
            return bad("must end with a state");
        }
        if self.steps() == 0 {
            return bad("needs at least one step");
        }
        Ok(())
    }

    /// Parses the text format, e.g. `{h=1,l=0} #H {h=42,l=0} OK`.
    pub fn parse(u: &Universe, text: &str) -> Result<Trace> {
        let mut items = Vec::new();
        let mut end = None;
        let mut rest = text.trim();
        while !rest.is_empty() {
            if end.is_some() {
                return Err(Error::Syntax {
                    pos: text.len() - rest.len(),
                    msg: "trailing input after terminator".into(),
                });
            }
            if let Some(r) = rest.strip_prefix('{') {
                let close = r.find('}').ok_or(Error::Syntax {
                    pos: text.len() - rest.len(),
                    msg: "unclosed store".into(),
                })?;
                let store = crate::parse::parse_store(u, &r[..close])?;
                items.push(TraceItem::State(store));
                rest = r[close + 1..].trim_start();
                continue;
            }
            let word_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            match &rest[..word_end] {
                "#H" => items.push(TraceItem::Internal),
                "!" => items.push(TraceItem::Bang),
                "OK" => end = Some(Terminator::Tick),
                "TIMEOUT" => end = Some(Terminator::Timeout),
                w => {
                    return Err(Error::Syntax {
                        pos: text.len() - rest.len(),
                        msg: format!("unexpected trace token `{w}`"),
                    })
                }
            }
            rest = rest[word_end..].trim_start();
        }
        let end = end.ok_or(Error::Syntax {
            pos: text.len(),
            msg: "trace must end with OK or TIMEOUT".into(),
        })?;
        let t = Trace { items, end };
        t.validate(None)?;
        Ok(t)
    }
}

/// A finite set of traces, kept sorted and duplicate-free.
///
/// Traces live in one flat buffer; the behaviours of whole programs have one
/// trace per initial store and are built in store order, which is already
/// the canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Behavior {
    items: Vec<TraceItem>,
    spans: Vec<(u32, u32, Terminator)>,
}

impl Behavior {
    pub fn new() -> Behavior {
        Behavior::default()
    }

    pub fn from_traces(traces: impl IntoIterator<Item = Trace>) -> Behavior {
        let set: BTreeSet<Trace> = traces.into_iter().collect();
        let mut b = Behavior::new();
        for t in &set {
            b.push_unchecked(t.as_ref());
        }
        b
    }

    fn push_unchecked(&mut self, t: TraceRef<'_>) {
        let start = self.items.len() as u32;
        self.items.extend_from_slice(t.items);
        self.spans.push((start, self.items.len() as u32, t.end));
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn get(&self, i: usize) -> TraceRef<'_> {
        let (a, b, end) = self.spans[i];
        TraceRef {
            items: &self.items[a as usize..b as usize],
            end,
        }
    }

    pub fn traces(&self) -> impl ExactSizeIterator<Item = TraceRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn to_traces(&self) -> Vec<Trace> {
        self.traces().map(TraceRef::to_owned).collect()
    }

    pub fn contains(&self, t: TraceRef<'_>) -> bool {
        (0..self.len()).any(|i| self.get(i) == t)
    }

    pub fn is_fuel_limited(&self) -> bool {
        self.spans.iter().any(|&(_, _, e)| e == Terminator::Timeout)
    }

    pub fn contains_item(&self, item: TraceItem) -> bool {
        self.items.contains(&item)
    }

    pub fn render(&self, u: &Universe) -> Vec<String> {
        self.traces().map(|t| t.render(u)).collect()
    }
}

/// Builds a behaviour one trace at a time; traces must arrive in canonical
/// order (checked in debug builds).
pub(crate) struct BehaviorBuilder {
    b: Behavior,
}

impl BehaviorBuilder {
    pub(crate) fn new() -> Self {
        BehaviorBuilder { b: Behavior::new() }
    }

    pub(crate) fn begin(&mut self, s0: Store) {
        self.b.items.push(TraceItem::State(s0));
    }

    pub(crate) fn step(&mut self, event: Event, s: Store) {
        match event {
            Event::Silent => {}
            Event::Internal => self.b.items.push(TraceItem::Internal),
            Event::Bang => self.b.items.push(TraceItem::Bang),
        }
        self.b.items.push(TraceItem::State(s));
    }

    pub(crate) fn end(&mut self, end: Terminator) {
        let start = self.b.spans.last().map_or(0, |s| s.1);
        self.b.spans.push((start, self.b.items.len() as u32, end));
        debug_assert!(self.b.len() < 2 || self.b.get(self.b.len() - 2) < self.b.get(self.b.len() - 1));
    }

    pub(crate) fn finish(self) -> Behavior {
        self.b
    }
}

fn push_event(items: &mut Vec<TraceItem>, event: Event) {
    match event {
        Event::Silent => {}
        Event::Internal => items.push(TraceItem::Internal),
        Event::Bang => items.push(TraceItem::Bang),
    }
}

/// One row of a detailed run: the event, the store after the step and the
/// derivation that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub event: Event,
    pub store: Store,
    pub derivation: Vec<Rule>,
}

/// Runs the reference interpreter, recording derivations.
pub fn run_detailed(u: &Universe, lang: Lang, s0: Store, p: &Term, fuel: usize) -> Result<(Trace, Vec<StepRecord>)> {
    p.validate(u, lang)?;
    let mut items = vec![TraceItem::State(s0)];
    let mut records = Vec::new();
    let mut cur = p.clone();
    let mut s = s0;
    for _ in 0..fuel {
        let o = step_unchecked(u, s, &cur);
        s = o.store;
        push_event(&mut items, o.event);
        items.push(TraceItem::State(s));
        records.push(StepRecord {
            event: o.event,
            store: s,
            derivation: o.derivation,
        });
        match o.next {
            Next::Done => {
                return Ok((
                    Trace {
                        items,
                        end: Terminator::Tick,
                    },
                    records,
                ))
            }
            Next::Residual(r) => cur = r,
        }
    }
    Ok((
        Trace {
            items,
            end: Terminator::Timeout,
        },
        records,
    ))
}

/// `run`: the trace of `p` from `s0` under the reference interpreter.
pub fn run(u: &Universe, lang: Lang, s0: Store, p: &Term, fuel: usize) -> Result<Trace> {
    Ok(run_detailed(u, lang, s0, p, fuel)?.0)
}

/// The trace of a compiled machine from `s0`.
pub fn machine_trace(u: &Universe, m: &Machine, s0: Store, fuel: usize) -> Trace {
    let mut items = vec![TraceItem::State(s0)];
    let done = m.run_with(u, s0, fuel, |e, s| {
        push_event(&mut items, e);
        items.push(TraceItem::State(s));
    });
    Trace {
        items,
        end: if done { Terminator::Tick } else { Terminator::Timeout },
    }
}

/// The behaviour of a compiled machine over every initial store.
pub fn machine_behavior(u: &Universe, m: &Machine, fuel: usize) -> Behavior {
    let mut b = BehaviorBuilder::new();
    for s0 in u.stores() {
        b.begin(s0);
        let done = m.run_with(u, s0, fuel, |e, s| b.step(e, s));
        b.end(if done { Terminator::Tick } else { Terminator::Timeout });
    }
    b.finish()
}

/// `beh(C[P])`: one trace per initial store, with the universe's fuel.
pub fn beh(u: &Universe, lang: Lang, c: &Ctx, p: &Term) -> Result<Behavior> {
    c.validate(u, lang)?;
    let whole = c.plug(p);
    whole.validate(u, lang)?;
    Ok(machine_behavior(u, &Machine::new(u, &whole), u.fuel()))
}

/// Deletes every internal event.
pub fn erase(t: TraceRef<'_>) -> Trace {
    Trace {
        items: t.items.iter().copied().filter(|&i| i != TraceItem::Internal).collect(),
        end: t.end,
    }
}

/// `α` lifted to a set of traces.
pub fn alpha(traces: &BTreeSet<Trace>) -> BTreeSet<Trace> {
    traces.iter().map(|t| erase(t.as_ref())).collect()
}

/// The finite universe of abstract traces that runs can produce: at most
/// `fuel` steps over the universe's stores, `TIMEOUT` only after exactly
/// `fuel` steps, events drawn from `lang`'s alphabet.
#[derive(Debug, Clone)]
pub struct TraceBound {
    pub universe: Universe,
    pub fuel: usize,
    pub lang: Lang,
}

impl TraceBound {
    pub fn new(universe: Universe, fuel: usize, lang: Lang) -> TraceBound {
        TraceBound { universe, fuel, lang }
    }

    pub fn admits(&self, t: &Trace) -> bool {
        let n = t.steps();
        let stores_ok = t.items.iter().all(|i| match i {
            TraceItem::State(s) => (s.0 as u64) < self.universe.store_count(),
            TraceItem::Bang => self.lang == Lang::Target,
            TraceItem::Internal => true,
        });
        let len_ok = match t.end {
            Terminator::Tick => (1..=self.fuel).contains(&n),
            Terminator::Timeout => n == self.fuel,
        };
        stores_ok && len_ok && t.validate(None).is_ok()
    }
}

/// `γ`: every bounded abstract trace whose erasure lies in `y`.
///
/// An observable trace's preimages differ only in which silent steps carried
/// an internal event, so they are generated directly instead of filtering
/// the whole bounded universe.
pub fn gamma(y: &BTreeSet<Trace>, bound: Option<&TraceBound>) -> Result<BTreeSet<Trace>> {
    let bound = bound.ok_or(Error::MissingTraceBound)?;
    let mut out = BTreeSet::new();
    for t in y {
        if t.items.contains(&TraceItem::Internal) || !bound.admits(t) {
            continue;
        }
        // positions of stores reached by a silent step
        let silent: Vec<usize> = (1..t.items.len())
            .filter(|&i| {
                matches!(t.items[i], TraceItem::State(_)) && matches!(t.items[i - 1], TraceItem::State(_))
            })
            .collect();
        for mask in 0u64..(1u64 << silent.len()) {
            let mut items = Vec::with_capacity(t.items.len() + silent.len());
            let mut k = 0;
            for (i, item) in t.items.iter().enumerate() {
                if k < silent.len() && silent[k] == i {
                    if mask >> k & 1 == 1 {
                        items.push(TraceItem::Internal);
                    }
                    k += 1;
                }
                items.push(*item);
            }
            out.insert(Trace { items, end: t.end });
        }
    }
    Ok(out)
}

impl fmt::Display for Terminator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminator::Tick => "OK",
            Terminator::Timeout => "TIMEOUT",
        })
    }
}

/// Every observable trace the bound admits, in canonical order.
pub fn observable_traces(bound: &TraceBound, cap: usize) -> Result<Vec<Trace>> {
    let stores: Vec<Store> = bound.universe.stores().collect();
    let events: &[bool] = if bound.lang == Lang::Target { &[false, true] } else { &[false] };
    let branch = (stores.len() * events.len()) as u128;
    let mut count = 0u128;
    let mut paths = stores.len() as u128;
    for _ in 0..bound.fuel {
        paths = paths.saturating_mul(branch);
        count = count.saturating_add(paths);
    }
    // the longest traces also end in TIMEOUT
    count = count.saturating_add(paths);
    if count > cap as u128 {
        return Err(Error::CapExceeded { kind: "observable traces", count, cap });
    }
    let mut out = Vec::new();
    let mut level: Vec<Vec<TraceItem>> = stores.iter().map(|&s| vec![TraceItem::State(s)]).collect();
    for n in 1..=bound.fuel {
        let mut next = Vec::with_capacity(level.len() * stores.len() * events.len());
        for items in &level {
            for &bang in events {
                for &s in &stores {
                    let mut it = items.clone();
                    if bang {
                        it.push(TraceItem::Bang);
                    }
                    it.push(TraceItem::State(s));
                    next.push(it);
                }
            }
        }
        level = next;
        let ends: &[Terminator] = if n == bound.fuel { &[Terminator::Tick, Terminator::Timeout] } else { &[Terminator::Tick] };
        for items in &level {
            for &end in ends {
                out.push(Trace { items: items.clone(), end });
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// A uniformly shaped random observable trace within the bound.
pub fn random_observable(bound: &TraceBound, rng: &mut impl Rng) -> Trace {
    let count = bound.universe.store_count() as u32;
    let mut store = || TraceItem::State(Store(rng.gen_range(0..count)));
    let mut items = vec![store()];
    let n = rng.gen_range(1..=bound.fuel);
    for _ in 0..n {
        if bound.lang == Lang::Target && rng.gen_bool(0.5) {
            items.push(TraceItem::Bang);
        }
        items.push(TraceItem::State(Store(rng.gen_range(0..count))));
    }
    let end = if n == bound.fuel && rng.gen_bool(0.5) { Terminator::Timeout } else { Terminator::Tick };
    Trace { items, end }
}

/// `ᾱ(γ̄(y)) = y`, for `y` a set of observable traces inside the bound.
pub fn insertion_holds(y: &BTreeSet<Trace>, bound: &TraceBound) -> Result<bool> {
    Ok(alpha(&gamma(y, Some(bound))?) == *y)
}

fn insertion_failure(bound: &TraceBound, y: &BTreeSet<Trace>, checked: u64) -> Verdict {
    let w = Witness {
        lang: Some(bound.lang),
        traces: y.iter().cloned().collect(),
        note: "alpha(gamma(Y)) differs from Y".into(),
        ..Witness::default()
    };
    Verdict::fail(w, checked)
}

/// The insertion law on every subset of the bound's observable traces.
pub fn check_insertion_exhaustive(bound: &TraceBound) -> Result<Verdict> {
    let obs = observable_traces(bound, 20)?;
    let mut checked = 0;
    for mask in 0u64..(1u64 << obs.len()) {
        checked += 1;
        let y: BTreeSet<Trace> = (0..obs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| obs[i].clone()).collect();
        if !insertion_holds(&y, bound)? {
            return Ok(insertion_failure(bound, &y, checked));
        }
    }
    Ok(Verdict::pass(checked))
}

/// The insertion law on `samples` random sets of up to 8 observable traces.
pub fn check_insertion_sampled(bound: &TraceBound, samples: u64, seed: u64) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..samples {
        let k = rng.gen_range(0..=8);
        let y: BTreeSet<Trace> = (0..k).map(|_| random_observable(bound, &mut rng)).collect();
        if !insertion_holds(&y, bound)? {
            return Ok(insertion_failure(bound, &y, i + 1));
        }
    }
    Ok(Verdict::pass(samples))
}
