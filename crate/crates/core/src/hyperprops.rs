//! Low-equivalence, hyperproperties, robust satisfaction, contextual
//! equivalence and full abstraction.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::compilers::Compiler;
use crate::enumerate;
use crate::gsos::{same_run, Remapped};
use crate::error::{Error, Result};
use crate::machine::Machine;
use crate::opsem::Event;
use crate::syntax::{Ctx, Term};
use crate::traces::{self, Behavior, Terminator, Trace, TraceItem, TraceRef};
use crate::universe::{Lang, Store, Universe};
use crate::verdict::{Verdict, Witness};

fn in_universe(u: &Universe, s: Store) -> Result<()> {
    if (s.0 as u64) < u.store_count() {
        Ok(())
    } else {
        Err(Error::CrossUniverse)
    }
}

/// `s₁ =_L s₂`
pub fn low_eq_stores(u: &Universe, a: Store, b: Store) -> Result<bool> {
    in_universe(u, a)?;
    in_universe(u, b)?;
    Ok(u.low_eq(a, b))
}

/// Low-equivalence of single trace elements; internal events are not
/// observable elements and compare equal only to themselves.
pub fn low_eq_items(u: &Universe, a: TraceItem, b: TraceItem) -> Result<bool> {
    match (a, b) {
        (TraceItem::State(x), TraceItem::State(y)) => low_eq_stores(u, x, y),
        (x, y) => Ok(x == y),
    }
}

// Observable view of a trace element: low projection of states, markers
// for reports. Internal events are dropped by the caller.
const BANG_KEY: u64 = u64::MAX;

fn low_view<'a>(u: &'a Universe, t: TraceRef<'a>) -> impl Iterator<Item = u64> + 'a {
    t.items.iter().filter_map(move |i| match i {
        TraceItem::State(s) => Some(u.low_key(*s)),
        TraceItem::Bang => Some(BANG_KEY),
        TraceItem::Internal => None,
    })
}

/// Trace low-equivalence: erase internal events from both, then require
/// equal length, pointwise low-equivalent elements and equal terminators.
pub fn low_eq_traces(u: &Universe, a: TraceRef<'_>, b: TraceRef<'_>) -> Result<bool> {
    for t in [a, b] {
        for i in t.items {
            if let TraceItem::State(s) = i {
                in_universe(u, *s)?;
            }
        }
    }
    Ok(a.end == b.end && low_view(u, a).eq(low_view(u, b)))
}

/// Outcome of a membership test, with the evidence for a failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub holds: bool,
    pub stores: Vec<Store>,
    pub traces: Vec<Trace>,
    pub note: String,
}

impl Membership {
    pub fn yes() -> Membership {
        Membership {
            holds: true,
            stores: vec![],
            traces: vec![],
            note: String::new(),
        }
    }

    pub fn no(stores: Vec<Store>, traces: Vec<Trace>, note: impl Into<String>) -> Membership {
        Membership {
            holds: false,
            stores,
            traces,
            note: note.into(),
        }
    }
}

/// A decidable predicate over behaviours.
pub trait Hyperproperty: Send + Sync {
    fn name(&self) -> String;

    fn check(&self, u: &Universe, b: &Behavior) -> Membership;

    fn sat(&self, u: &Universe, b: &Behavior) -> bool {
        self.check(u, b).holds
    }
}

impl fmt::Debug for dyn Hyperproperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Noninterference: runs from low-equivalent initial stores are
/// low-equivalent traces.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ni;

impl Ni {
    /// Finds the lexicographically first violating pair of traces (by index
    /// in the behaviour), if any.
    ///
    /// Low-equivalence of traces is an equivalence relation, so each group
    /// of traces with low-equivalent initial stores is compared against its
    /// first member only.
    pub fn first_violation(u: &Universe, b: &Behavior) -> Option<(usize, usize)> {
        // group key -> (first member, first member differing from it)
        let mut groups: HashMap<u64, (usize, Option<usize>)> = HashMap::new();
        for (j, t) in b.traces().enumerate() {
            let key = u.low_key(t.initial());
            match groups.get_mut(&key) {
                None => {
                    groups.insert(key, (j, None));
                }
                Some((first, diff @ None)) => {
                    let rep = b.get(*first);
                    if !(rep.end == t.end && low_view(u, rep).eq(low_view(u, t))) {
                        *diff = Some(j);
                    }
                }
                Some(_) => {}
            }
        }
        groups
            .into_values()
            .filter_map(|(i, d)| d.map(|j| (i, j)))
            .min()
    }

    /// Whether `(s1, s2)` is a violating pair: low-equivalent initial stores
    /// whose traces in `b` are not low-equivalent.
    pub fn is_violating_pair(u: &Universe, b: &Behavior, s1: Store, s2: Store) -> bool {
        let find = |s| b.traces().find(|t| t.initial() == s);
        match (find(s1), find(s2)) {
            (Some(t1), Some(t2)) => u.low_eq(s1, s2) && !low_eq_traces(u, t1, t2).unwrap_or(false),
            _ => false,
        }
    }
}

impl Hyperproperty for Ni {
    fn name(&self) -> String {
        "ni".into()
    }

    fn check(&self, u: &Universe, b: &Behavior) -> Membership {
        match Ni::first_violation(u, b) {
            None => Membership::yes(),
            Some((i, j)) => {
                let (t1, t2) = (b.get(i), b.get(j));
                Membership::no(
                    vec![t1.initial(), t2.initial()],
                    vec![t1.to_owned(), t2.to_owned()],
                    "low-equivalent initial stores, traces not low-equivalent",
                )
            }
        }
    }
}

/// The trivial hyperproperty.
#[derive(Debug, Clone, Copy, Default)]
pub struct Top;

impl Hyperproperty for Top {
    fn name(&self) -> String {
        "top".into()
    }

    fn check(&self, _: &Universe, _: &Behavior) -> Membership {
        Membership::yes()
    }
}

/// No trace ever contains the given event.
#[derive(Debug, Clone, Copy)]
pub struct NeverEvent(pub Event);

impl Hyperproperty for NeverEvent {
    fn name(&self) -> String {
        match self.0 {
            Event::Internal => "never:H".into(),
            Event::Bang => "never:!".into(),
            Event::Silent => "never:silent".into(),
        }
    }

    fn check(&self, _: &Universe, b: &Behavior) -> Membership {
        let item = match self.0 {
            Event::Internal => TraceItem::Internal,
            Event::Bang => TraceItem::Bang,
            // silent steps leave no marker; every trace takes a step
            Event::Silent => {
                return match b.traces().next() {
                    Some(t) => Membership::no(vec![t.initial()], vec![t.to_owned()], "trace takes a silent step"),
                    None => Membership::yes(),
                };
            }
        };
        match b.traces().find(|t| t.contains(item)) {
            None => Membership::yes(),
            Some(t) => Membership::no(vec![t.initial()], vec![t.to_owned()], format!("trace contains {}", self.name())),
        }
    }
}

/// An explicitly listed set of behaviours.
#[derive(Debug, Clone, Default)]
pub struct Explicit {
    pub name: String,
    pub members: BTreeSet<Behavior>,
}

impl Explicit {
    pub fn new(name: impl Into<String>, members: impl IntoIterator<Item = Behavior>) -> Explicit {
        Explicit {
            name: name.into(),
            members: members.into_iter().collect(),
        }
    }
}

impl Hyperproperty for Explicit {
    fn name(&self) -> String {
        format!("explicit:{}", self.name)
    }

    fn check(&self, _: &Universe, b: &Behavior) -> Membership {
        if self.members.contains(b) {
            Membership::yes()
        } else {
            Membership::no(vec![], vec![], "behaviour is not a member of the explicit set")
        }
    }
}

/// `C[P] ⊨ H`
pub fn sat(u: &Universe, b: &Behavior, h: &dyn Hyperproperty) -> bool {
    h.sat(u, b)
}

/// Checks `h` on `beh(C[P])` for one context.
pub fn sat_in(u: &Universe, lang: Lang, c: &Ctx, p: &Term, h: &dyn Hyperproperty) -> Result<Verdict> {
    let b = traces::beh(u, lang, c, p)?;
    let m = h.check(u, &b);
    let v = if m.holds {
        Verdict::pass(1)
    } else {
        Verdict::fail(
            Witness {
                lang: Some(lang),
                program: Some(p.clone()),
                context: Some(c.clone()),
                stores: m.stores,
                traces: m.traces,
                note: m.note,
                ..Witness::default()
            },
            1,
        )
    };
    Ok(v.fuel_limited(b.is_fuel_limited()))
}

/// `∀C. C[P] ⊨ H` over the enumerated contexts of `lang`.
pub fn robust_sat(u: &Universe, lang: Lang, p: &Term, h: &dyn Hyperproperty) -> Result<Verdict> {
    p.validate(u, lang)?;
    let mut fuel_limited = false;
    let ctxs = enumerate::contexts(u, lang)?;
    for (i, c) in ctxs.iter().enumerate() {
        let v = sat_in(u, lang, c, p, h)?;
        fuel_limited |= v.fuel_limited;
        if !v.holds {
            let mut v = v.fuel_limited(fuel_limited);
            v.checked = i as u64 + 1;
            return Ok(v);
        }
    }
    Ok(Verdict::pass(ctxs.len() as u64).fuel_limited(fuel_limited))
}

/// Fills `buf` with the trace of `m` from `s0`, mapping events through
/// `emap` (indexed by event; `None` rejects the event).
pub(crate) fn trace_into(
    u: &Universe,
    m: &Machine,
    s0: Store,
    fuel: usize,
    emap: &[Option<Event>; 3],
    buf: &mut Vec<TraceItem>,
) -> Result<Terminator> {
    buf.clear();
    buf.push(TraceItem::State(s0));
    let mut bad = None;
    let done = m.run_with(u, s0, fuel, |e, s| {
        match emap[e as usize] {
            Some(Event::Silent) => {}
            Some(Event::Internal) => buf.push(TraceItem::Internal),
            Some(Event::Bang) => buf.push(TraceItem::Bang),
            None => bad = Some(e),
        }
        buf.push(TraceItem::State(s));
    });
    if bad.is_some() {
        return Err(Error::BangInSource);
    }
    Ok(if done { Terminator::Tick } else { Terminator::Timeout })
}

pub(crate) const EVENT_ID: [Option<Event>; 3] = [Some(Event::Silent), Some(Event::Internal), Some(Event::Bang)];

/// First initial store on which two machines' (event-mapped) traces differ.
pub(crate) fn first_difference(
    u: &Universe,
    a: &Machine,
    amap: &[Option<Event>; 3],
    b: &Machine,
    bmap: &[Option<Event>; 3],
) -> Result<Option<(Store, Trace, Trace)>> {
    let (ra, rb) = (Remapped { inner: a, table: amap }, Remapped { inner: b, table: bmap });
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    for s in u.stores() {
        if same_run(u, &ra, 0, &rb, 0, s, u.fuel())? {
            continue;
        }
        let ea = trace_into(u, a, s, u.fuel(), amap, &mut ba)?;
        let eb = trace_into(u, b, s, u.fuel(), bmap, &mut bb)?;
        if ea != eb || ba != bb {
            return Ok(Some((
                s,
                Trace { items: ba, end: ea },
                Trace { items: bb, end: eb },
            )));
        }
    }
    Ok(None)
}

/// `P₁ ≈ P₂`: equal behaviours under every enumerated context.
pub fn ctx_equiv(u: &Universe, lang: Lang, p1: &Term, p2: &Term) -> Result<Verdict> {
    p1.validate(u, lang)?;
    p2.validate(u, lang)?;
    let ctxs = enumerate::contexts(u, lang)?;
    for (i, c) in ctxs.iter().enumerate() {
        let m1 = Machine::new(u, &c.plug(p1));
        let m2 = Machine::new(u, &c.plug(p2));
        if let Some((s, t1, t2)) = first_difference(u, &m1, &EVENT_ID, &m2, &EVENT_ID)? {
            return Ok(Verdict::fail(
                Witness {
                    lang: Some(lang),
                    program: Some(p1.clone()),
                    other_program: Some(p2.clone()),
                    context: Some(c.clone()),
                    stores: vec![s],
                    traces: vec![t1, t2],
                    note: "behaviours differ".into(),
                },
                i as u64 + 1,
            ));
        }
    }
    Ok(Verdict::pass(ctxs.len() as u64))
}

/// Partitions items by exact behaviour equality.
///
/// Each item is a list of machines (one per context); two items are equal
/// iff, for every initial store, every machine produces the same trace.
/// The partition is refined one store at a time, so only one trace per item
/// is held in memory. Returns a class id per item, numbered in order of
/// first occurrence.
pub fn behavior_classes(u: &Universe, items: &[Vec<Machine>]) -> Result<Vec<u32>> {
    const SEP: u64 = u64::MAX;
    let encode = |buf: &mut Vec<u64>, t: &[TraceItem], end: Terminator| {
        for i in t {
            buf.push(match i {
                TraceItem::State(s) => s.0 as u64,
                TraceItem::Internal => SEP - 1,
                TraceItem::Bang => SEP - 2,
            });
        }
        buf.push(match end {
            Terminator::Tick => SEP - 3,
            Terminator::Timeout => SEP - 4,
        });
        buf.push(SEP);
    };
    let mut class = vec![0u32; items.len()];
    let mut n_classes = if items.is_empty() { 0 } else { 1 };
    let mut trace = Vec::new();
    let mut key = Vec::new();
    for s in u.stores() {
        if n_classes as usize == items.len() {
            break;
        }
        let mut maps: Vec<HashMap<Vec<u64>, u32>> = vec![HashMap::new(); n_classes as usize];
        let mut next = 0u32;
        for (i, ms) in items.iter().enumerate() {
            key.clear();
            for m in ms {
                let end = trace_into(u, m, s, u.fuel(), &EVENT_ID, &mut trace)?;
                encode(&mut key, &trace, end);
            }
            let map = &mut maps[class[i] as usize];
            class[i] = match map.get(key.as_slice()) {
                Some(&c) => c,
                None => {
                    map.insert(key.clone(), next);
                    next += 1;
                    next - 1
                }
            };
        }
        n_classes = next;
    }
    // renumber by first occurrence
    let mut seen: HashMap<u32, u32> = HashMap::new();
    for c in class.iter_mut() {
        let n = seen.len() as u32;
        *c = *seen.entry(*c).or_insert(n);
    }
    Ok(class)
}

/// Lexicographically first pair `(i, j)`, `i < j`, equal under `a` but not
/// under `b`.
pub fn first_unpreserved(a: &[u32], b: &[u32]) -> Option<(usize, usize)> {
    let mut first: HashMap<u32, usize> = HashMap::new();
    let mut best: Option<(usize, usize)> = None;
    for j in 0..a.len() {
        match first.get(&a[j]) {
            None => {
                first.insert(a[j], j);
            }
            Some(&i) => {
                if b[i] != b[j] && best.is_none_or(|(bi, _)| i < bi) {
                    best = Some((i, j));
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Preserve,
    Reflect,
    Both,
}

impl Direction {
    pub fn parse(s: &str) -> Result<Direction> {
        match s {
            "preserve" => Ok(Direction::Preserve),
            "reflect" => Ok(Direction::Reflect),
            "both" => Ok(Direction::Both),
            _ => Err(Error::Unknown {
                kind: "direction",
                name: s.into(),
                known: "preserve, reflect, both".into(),
            }),
        }
    }
}

/// Source and target equivalence classes of the given programs.
pub fn fac_classes(u: &Universe, compiler: &dyn Compiler, programs: &[Term]) -> Result<(Vec<u32>, Vec<u32>)> {
    let sctx = enumerate::contexts(u, Lang::Source)?;
    let tctx = enumerate::contexts(u, Lang::Target)?;
    let mut src = Vec::with_capacity(programs.len());
    let mut tgt = Vec::with_capacity(programs.len());
    for p in programs {
        p.validate(u, Lang::Source)?;
        let q = compiler.compile(p);
        src.push(sctx.iter().map(|c| Machine::new(u, &c.plug(p))).collect());
        tgt.push(tctx.iter().map(|c| Machine::new(u, &c.plug(&q))).collect());
    }
    Ok((behavior_classes(u, &src)?, behavior_classes(u, &tgt)?))
}

/// Full abstraction over every pair of enumerated source programs.
pub fn check_fac(u: &Universe, compiler: &dyn Compiler, direction: Direction) -> Result<Verdict> {
    let programs = enumerate::terms(u, Lang::Source)?;
    check_fac_on(u, compiler, direction, &programs)
}

pub fn check_fac_on(u: &Universe, compiler: &dyn Compiler, direction: Direction, programs: &[Term]) -> Result<Verdict> {
    let (src, tgt) = fac_classes(u, compiler, programs)?;
    let n = programs.len() as u64;
    let pairs = n * n.saturating_sub(1) / 2;
    let mut found = None;
    if matches!(direction, Direction::Preserve | Direction::Both) {
        found = first_unpreserved(&src, &tgt).map(|p| (p, Lang::Target, "source-equivalent, compilations distinguishable"));
    }
    if found.is_none() && matches!(direction, Direction::Reflect | Direction::Both) {
        found = first_unpreserved(&tgt, &src).map(|p| (p, Lang::Source, "compilations equivalent, sources distinguishable"));
    }
    let Some(((i, j), lang, note)) = found else {
        return Ok(Verdict::pass(pairs));
    };
    // replay to find the distinguishing context
    let (p1, p2) = (&programs[i], &programs[j]);
    let (a, b) = match lang {
        Lang::Source => (p1.clone(), p2.clone()),
        Lang::Target => (compiler.compile(p1), compiler.compile(p2)),
    };
    let eq = ctx_equiv(u, lang, &a, &b)?;
    let mut w = eq.witness.unwrap_or_default();
    w.program = Some(p1.clone());
    w.other_program = Some(p2.clone());
    w.note = note.into();
    Ok(Verdict::fail(w, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;
    use crate::universe::Level;

    fn fixture() -> Universe {
        Universe::fixture()
    }

    fn beh_of(u: &Universe, lang: Lang, ctx: &Ctx, text: &str) -> Behavior {
        traces::beh(u, lang, ctx, &parse_term(u, lang, text).unwrap()).unwrap()
    }

    #[test]
    fn store_low_equivalence() {
        let u = fixture();
        let a = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        let b = u.store_of(&[("h", 42), ("l", 0)]).unwrap();
        assert!(low_eq_stores(&u, a, b).unwrap());
        assert_eq!(low_eq_stores(&u, a, Store(1 << 20)), Err(Error::CrossUniverse));
    }

    #[test]
    fn trace_low_equivalence_ignores_internal_events() {
        let u = fixture();
        let t1 = Trace::parse(&u, "{h=1,l=0} #H {h=42,l=0} OK").unwrap();
        let t2 = Trace::parse(&u, "{h=1,l=0} {h=42,l=0} OK").unwrap();
        assert!(low_eq_traces(&u, t1.as_ref(), t2.as_ref()).unwrap());
        let t3 = Trace::parse(&u, "{h=1,l=0} ! {h=42,l=0} OK").unwrap();
        let t4 = Trace::parse(&u, "{h=42,l=0} {h=42,l=0} OK").unwrap();
        assert!(!low_eq_traces(&u, t3.as_ref(), t4.as_ref()).unwrap());
    }

    #[test]
    fn ni_on_source_and_observed_leak() {
        let u = fixture();
        let b = beh_of(&u, Lang::Source, &Ctx::Hole, "h := 42");
        assert!(Ni.sat(&u, &b));
        let b = beh_of(&u, Lang::Target, &Ctx::with_layers(1), "h := 42");
        let m = Ni.check(&u, &b);
        assert!(!m.holds);
        let s1 = u.store_of(&[("h", 1), ("l", 0)]).unwrap();
        let s42 = u.store_of(&[("h", 42), ("l", 0)]).unwrap();
        assert!(Ni::is_violating_pair(&u, &b, s1, s42));
        assert!(!Ni::is_violating_pair(&u, &b, s1, u.store_of(&[("h", 2), ("l", 0)]).unwrap()));
        assert!(Ni.sat(&u, &Behavior::new()));
    }

    #[test]
    fn ni_first_violation_matches_brute_force() {
        let u = Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(3)
            .literals([0, 1, 2])
            .fuel(6)
            .term_depth(3)
            .build()
            .unwrap();
        for lang in [Lang::Source, Lang::Target] {
            for p in enumerate::terms(&u, lang).unwrap().iter().step_by(7) {
                for c in enumerate::contexts(&u, lang).unwrap() {
                    let b = traces::beh(&u, lang, &c, p).unwrap();
                    let mut brute = None;
                    'outer: for i in 0..b.len() {
                        for j in i + 1..b.len() {
                            let (t1, t2) = (b.get(i), b.get(j));
                            if u.low_eq(t1.initial(), t2.initial()) && !low_eq_traces(&u, t1, t2).unwrap() {
                                brute = Some((i, j));
                                break 'outer;
                            }
                        }
                    }
                    assert_eq!(Ni::first_violation(&u, &b), brute);
                }
            }
        }
    }

    #[test]
    fn never_and_top() {
        let u = fixture();
        let b = beh_of(&u, Lang::Target, &Ctx::with_layers(1), "h := 42");
        assert!(Top.sat(&u, &b));
        assert!(!NeverEvent(Event::Bang).sat(&u, &b));
        assert!(NeverEvent(Event::Internal).sat(&u, &b));
    }

    #[test]
    fn explicit_membership() {
        let u = fixture();
        let b = beh_of(&u, Lang::Source, &Ctx::Hole, "skip");
        let h = Explicit::new("one", [b.clone()]);
        assert!(h.sat(&u, &b));
        assert!(!Explicit::new("none", []).sat(&u, &b));
    }

    #[test]
    fn robust_satisfaction() {
        let u = fixture();
        let p = parse_term(&u, Lang::Source, "h := 42").unwrap();
        assert!(robust_sat(&u, Lang::Source, &p, &Ni).unwrap().holds);
        let v = robust_sat(&u, Lang::Target, &p, &Ni).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.unwrap().context, Some(Ctx::with_layers(1)));
        let q = parse_term(&u, Lang::Target, "sandbox{ h := 42 }").unwrap();
        assert!(robust_sat(&u, Lang::Target, &q, &Ni).unwrap().holds);
    }

    #[test]
    fn contextual_equivalence() {
        let u = fixture();
        let t = |lang, s| parse_term(&u, lang, s).unwrap();
        assert!(ctx_equiv(&u, Lang::Source, &t(Lang::Source, "skip"), &t(Lang::Source, "l := l")).unwrap().holds);
        let v = ctx_equiv(&u, Lang::Source, &t(Lang::Source, "h := 42"), &t(Lang::Source, "skip")).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_ne!(u.get(w.stores[0], u.var("h").unwrap()), 42);
        assert!(ctx_equiv(&u, Lang::Target, &t(Lang::Target, "obs(skip)"), &t(Lang::Target, "skip")).unwrap().holds);
    }

    #[test]
    fn classes_match_pairwise_equality() {
        let u = Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(2)
            .literals([0, 1])
            .fuel(6)
            .term_depth(3)
            .build()
            .unwrap();
        let ps = enumerate::terms(&u, Lang::Source).unwrap();
        let items: Vec<Vec<Machine>> = ps.iter().map(|p| vec![Machine::new(&u, p)]).collect();
        let classes = behavior_classes(&u, &items).unwrap();
        let behs: Vec<Behavior> = ps.iter().map(|p| traces::beh(&u, Lang::Source, &Ctx::Hole, p).unwrap()).collect();
        for i in (0..ps.len()).step_by(5) {
            for j in 0..ps.len() {
                assert_eq!(classes[i] == classes[j], behs[i] == behs[j]);
            }
        }
    }

    #[test]
    fn first_unpreserved_pair() {
        assert_eq!(first_unpreserved(&[0, 1, 0, 1], &[0, 1, 0, 2]), Some((1, 3)));
        assert_eq!(first_unpreserved(&[0, 0, 0], &[0, 0, 0]), None);
        assert_eq!(first_unpreserved(&[0, 1, 1, 0], &[0, 1, 2, 3]), Some((0, 3)));
    }
}
