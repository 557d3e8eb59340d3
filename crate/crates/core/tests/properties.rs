//! Property tests over randomly generated programs, stores and traces.

use proptest::prelude::*;
use seclab_core::compilers::{identity, sandbox, tau, Compiler};
use seclab_core::gsos::{f_unfold, law_table, one_step_reference, psi};
use seclab_core::hyperprops::{low_eq_traces, robust_sat, Explicit, Hyperproperty, Ni, Top};
use seclab_core::opsem::{derivations, step};
use seclab_core::parse::{parse_ctx, parse_expr, parse_store, parse_term};
use seclab_core::traces::{self, erase, Behavior, Terminator, TraceItem};
use seclab_core::{BinOp, Ctx, Event, Expr, Lang, Level, Store, Term, Universe, VarId};

fn fixture() -> Universe {
    Universe::fixture()
}

/// h, l over 0..=2: small enough to compute whole behaviours per case.
fn small() -> Universe {
    Universe::builder()
        .var("h", Level::High)
        .var("l", Level::Low)
        .vmax(2)
        .literals([0, 1, 2])
        .fuel(24)
        .term_depth(3)
        .build()
        .unwrap()
}

fn expr(vmax: u32) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0..=vmax).prop_map(Expr::Lit), (0u16..2).prop_map(|v| Expr::Var(VarId(v)))];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (prop::sample::select(BinOp::ALL.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            inner.prop_map(Expr::not),
        ]
    })
}

fn assign(vmax: u32) -> impl Strategy<Value = Term> {
    ((0u16..2), expr(vmax)).prop_map(|(v, e)| Term::assign(VarId(v), e))
}

fn term(lang: Lang, vmax: u32) -> BoxedStrategy<Term> {
    let leaf = prop_oneof![Just(Term::skip()), assign(vmax)];
    let leaf = match lang {
        Lang::Source => leaf.boxed(),
        Lang::Target => prop_oneof![leaf, assign(vmax).prop_map(Term::sandbox)].boxed(),
    };
    leaf.prop_recursive(4, 16, 2, move |inner| {
        let common = prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(p, q)| Term::seq(p, q)),
            (expr(vmax), inner.clone()).prop_map(|(e, p)| Term::while_(e, p)),
        ];
        match lang {
            Lang::Source => common.boxed(),
            Lang::Target => prop_oneof![common, inner.prop_map(Term::obs)].boxed(),
        }
    })
    .boxed()
}

fn lang() -> impl Strategy<Value = Lang> {
    prop_oneof![Just(Lang::Source), Just(Lang::Target)]
}

fn lang_term(vmax: u32) -> impl Strategy<Value = (Lang, Term)> {
    lang().prop_flat_map(move |l| term(l, vmax).prop_map(move |p| (l, p)))
}

fn store(u: &Universe) -> impl Strategy<Value = Store> {
    (0..u.store_count() as u32).prop_map(Store)
}

proptest! {
    #[test]
    fn render_parse_round_trip((lang, p) in lang_term(63), e in expr(63), s in store(&fixture()), layers in 0usize..3) {
        let u = fixture();
        prop_assert_eq!(parse_term(&u, lang, &p.render(&u)).unwrap(), p);
        prop_assert_eq!(parse_expr(&u, &e.render(&u)).unwrap(), e);
        prop_assert_eq!(parse_store(&u, &u.show_store(s)).unwrap(), s);
        let c = Ctx::with_layers(layers);
        prop_assert_eq!(parse_ctx(&u, Lang::Target, &c.render()).unwrap(), c);
    }

    #[test]
    fn evaluation_stays_in_range(e in expr(63), s in store(&fixture())) {
        let u = fixture();
        let x = e.eval(&u, s);
        prop_assert!(x <= u.vmax());
        prop_assert_eq!(e.eval_values(u.modulus() as u32, &u.decode(s)), x);
    }

    #[test]
    fn hole_is_the_identity_context((_, p) in lang_term(63)) {
        prop_assert_eq!(Ctx::Hole.plug(&p), p);
    }

    #[test]
    fn exactly_one_rule_fires((lang, p) in lang_term(63), s in store(&fixture())) {
        let u = fixture();
        let ds = derivations(&u, lang, s, &p);
        prop_assert_eq!(ds.len(), 1);
        let o = step(&u, lang, s, &p).unwrap();
        prop_assert_eq!((ds[0].store, ds[0].event, &ds[0].next), (o.store, o.event, &o.next));
    }

    #[test]
    fn event_discipline(p in term(Lang::Source, 63), a in assign(63), s in store(&fixture())) {
        let u = fixture();
        prop_assert_ne!(step(&u, Lang::Source, s, &p).unwrap().event, Event::Bang);
        let sb = step(&u, Lang::Target, s, &Term::sandbox(a.clone())).unwrap();
        prop_assert_eq!(sb.event, Event::Silent);
        prop_assert_eq!(sb.store, step(&u, Lang::Target, s, &a).unwrap().store);
    }

    #[test]
    fn observer_is_transparent(p in term(Lang::Target, 63), s in store(&fixture())) {
        let u = fixture();
        let inner = step(&u, Lang::Target, s, &p).unwrap();
        let outer = step(&u, Lang::Target, s, &Term::obs(p)).unwrap();
        prop_assert_eq!(outer.store, inner.store);
        let want = if inner.event == Event::Internal { Event::Bang } else { inner.event };
        prop_assert_eq!(outer.event, want);
        prop_assert_eq!(outer.next.is_done(), inner.next.is_done());
    }

    #[test]
    fn fuel_is_monotone((lang, p) in lang_term(63), s in store(&fixture()), f in 1usize..12, extra in 1usize..12) {
        let u = fixture();
        let short = traces::run(&u, lang, s, &p, f).unwrap();
        let long = traces::run(&u, lang, s, &p, f + extra).unwrap();
        match short.end {
            Terminator::Tick => prop_assert_eq!(short, long),
            Terminator::Timeout => prop_assert!(long.items.starts_with(&short.items)),
        }
    }

    #[test]
    fn low_equivalence_is_an_equivalence((lang, p) in lang_term(2), q in term(Lang::Source, 2), r in term(Lang::Source, 2), s in store(&small())) {
        let u = small();
        let [a, b, c] = [(lang, &p), (Lang::Source, &q), (Lang::Source, &r)]
            .map(|(l, t)| traces::run(&u, l, s, t, u.fuel()).unwrap());
        let eq = |x: &traces::Trace, y: &traces::Trace| low_eq_traces(&u, x.as_ref(), y.as_ref()).unwrap();
        prop_assert!(eq(&a, &a));
        prop_assert_eq!(eq(&a, &b), eq(&b, &a));
        if eq(&a, &b) && eq(&b, &c) {
            prop_assert!(eq(&a, &c));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_trace_per_initial_store((lang, p) in lang_term(2)) {
        let u = small();
        let b = traces::beh(&u, lang, &Ctx::Hole, &p).unwrap();
        let initials: Vec<Store> = b.traces().map(|t| t.initial()).collect();
        prop_assert_eq!(initials, u.stores().collect::<Vec<_>>());
        if lang == Lang::Source {
            prop_assert!(!b.contains_item(TraceItem::Bang));
        }
    }

    #[test]
    fn ni_ignores_internal_events((lang, p) in lang_term(2), layers in 0usize..3) {
        let u = small();
        let c = if lang == Lang::Target { Ctx::with_layers(layers) } else { Ctx::Hole };
        let b = traces::beh(&u, lang, &c, &p).unwrap();
        let erased = Behavior::from_traces(b.traces().map(erase));
        prop_assert_eq!(Ni.sat(&u, &b), Ni.sat(&u, &erased));
        prop_assert!(Top.sat(&u, &b));
    }

    #[test]
    fn source_robustness_is_plain_satisfaction(p in term(Lang::Source, 2)) {
        let u = small();
        let b = traces::beh(&u, Lang::Source, &Ctx::Hole, &p).unwrap();
        prop_assert_eq!(robust_sat(&u, Lang::Source, &p, &Ni).unwrap().holds, Ni.sat(&u, &b));
    }

    #[test]
    fn explicit_membership_is_monotone(p in term(Lang::Source, 2), q in term(Lang::Source, 2)) {
        let u = small();
        let bp = traces::beh(&u, Lang::Source, &Ctx::Hole, &p).unwrap();
        let bq = traces::beh(&u, Lang::Source, &Ctx::Hole, &q).unwrap();
        let one = Explicit::new("p", [bp.clone()]);
        let two = Explicit::new("pq", [bp.clone(), bq]);
        prop_assert!(one.sat(&u, &bp) && two.sat(&u, &bp));
    }

    #[test]
    fn sandboxed_programs_never_leak(p in term(Lang::Source, 2), layers in 0usize..3) {
        let u = small();
        let b = traces::beh(&u, Lang::Target, &Ctx::with_layers(layers), &sandbox().compile(&p)).unwrap();
        prop_assert!(!b.contains_item(TraceItem::Internal) && !b.contains_item(TraceItem::Bang));
    }

    #[test]
    fn tau_is_erasure(p in term(Lang::Source, 2)) {
        let u = small();
        let b = traces::beh(&u, Lang::Source, &Ctx::Hole, &p).unwrap();
        prop_assert_eq!(tau(&b).unwrap(), Behavior::from_traces(b.traces().map(erase)));
    }

    #[test]
    fn compilers_are_homomorphic(p in term(Lang::Source, 2), q in term(Lang::Source, 2), e in expr(2)) {
        for c in [identity(), sandbox()] {
            prop_assert_eq!(c.compile(&Term::seq(p.clone(), q.clone())), Term::seq(c.compile(&p), c.compile(&q)));
            prop_assert_eq!(c.compile(&Term::while_(e.clone(), p.clone())), Term::while_(e.clone(), c.compile(&p)));
        }
    }

    #[test]
    fn law_agrees_with_interpreter((lang, p) in lang_term(2)) {
        let u = small();
        prop_assert_eq!(law_table(&u, &p), one_step_reference(&u, lang, &p).unwrap());
    }

    #[test]
    fn beh_factors_through_the_unfolding((lang, p) in lang_term(2)) {
        let u = small();
        let z = f_unfold(&u, lang, &p, u.fuel()).unwrap();
        prop_assert_eq!(psi(&u, &z), traces::beh(&u, lang, &Ctx::Hole, &p).unwrap());
    }
}
