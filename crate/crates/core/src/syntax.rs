//! Abstract syntax of the Source and Target WHILE languages.
//!
//! The term syntax is split into a one-layer signature [`Layer`] and its
//! fixed point [`Term`], so the same constructor type serves as closed terms,
//! as GSOS nodes whose children carry behaviour tables, and as the layers of
//! [`Free`] terms over an arbitrary set of variables.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::universe::{Lang, Universe, Value, VarId, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Monus,
    Mul,
}

impl BinOp {
    pub const ALL: [BinOp; 3] = [BinOp::Add, BinOp::Monus, BinOp::Mul];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Monus => "-",
            BinOp::Mul => "*",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Monus => 1,
            BinOp::Mul => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Lit(Value),
    Var(VarId),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Un(UnOp, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Un(UnOp::Not, Box::new(e))
    }

    /// `[e]_s`: arithmetic modulo `vmax + 1`, truncated subtraction.
    pub fn eval(&self, u: &Universe, s: Store) -> Value {
        match self {
            Expr::Lit(n) => *n,
            Expr::Var(v) => u.get(s, *v),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(u, s) as u64, b.eval(u, s) as u64);
                let r = match op {
                    BinOp::Add => (x + y) % u.modulus(),
                    BinOp::Monus => x.saturating_sub(y),
                    BinOp::Mul => (x * y) % u.modulus(),
                };
                r as Value
            }
            Expr::Un(UnOp::Not, a) => (a.eval(u, s) == 0) as Value,
        }
    }

    /// [`Expr::eval`] over an already decoded store.
    #[inline]
    pub fn eval_values(&self, modulus: u32, vals: &[Value]) -> Value {
        match self {
            Expr::Lit(n) => *n,
            Expr::Var(v) => vals[v.index()],
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_values(modulus, vals), b.eval_values(modulus, vals));
                match op {
                    BinOp::Add => {
                        let r = x + y;
                        if r >= modulus {
                            r - modulus
                        } else {
                            r
                        }
                    }
                    BinOp::Monus => x.saturating_sub(y),
                    BinOp::Mul => ((x as u64 * y as u64) % modulus as u64) as Value,
                }
            }
            Expr::Un(UnOp::Not, a) => (a.eval_values(modulus, vals) == 0) as Value,
        }
    }

    pub fn reads_high(&self, u: &Universe) -> bool {
        match self {
            Expr::Lit(_) => false,
            Expr::Var(v) => u.is_high(*v),
            Expr::Bin(_, a, b) => a.reads_high(u) || b.reads_high(u),
            Expr::Un(_, a) => a.reads_high(u),
        }
    }

    pub fn validate(&self, u: &Universe) -> Result<()> {
        match self {
            Expr::Lit(n) if *n > u.vmax() => Err(Error::LiteralTooLarge {
                value: *n as u64,
                vmax: u.vmax(),
            }),
            Expr::Lit(_) => Ok(()),
            Expr::Var(v) if v.index() >= u.vars().len() => {
                Err(Error::UndeclaredVariable(format!("#{}", v.0)))
            }
            Expr::Var(_) => Ok(()),
            Expr::Bin(_, a, b) => {
                a.validate(u)?;
                b.validate(u)
            }
            Expr::Un(_, a) => a.validate(u),
        }
    }

    pub fn render(&self, u: &Universe) -> String {
        let mut out = String::new();
        self.write(u, 0, &mut out);
        out
    }

    // `min` is the loosest precedence that may appear unparenthesised here.
    fn write(&self, u: &Universe, min: u8, out: &mut String) {
        match self {
            Expr::Lit(n) => out.push_str(&n.to_string()),
            Expr::Var(v) => out.push_str(u.var_name(*v)),
            Expr::Un(UnOp::Not, a) => {
                if min > 3 {
                    out.push('(');
                }
                out.push_str("not ");
                a.write(u, 3, out);
                if min > 3 {
                    out.push(')');
                }
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                let paren = p < min;
                if paren {
                    out.push('(');
                }
                a.write(u, p, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                b.write(u, p + 1, out);
                if paren {
                    out.push(')');
                }
            }
        }
    }
}

/// One layer of term syntax over children of type `X`.
///
/// `Obs` and `Sandbox` exist only in Target. A well-formed `Sandbox` wraps a
/// single assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer<X> {
    Skip,
    Assign(VarId, Expr),
    Seq(X, X),
    While(Expr, X),
    Obs(X),
    Sandbox(X),
}

impl<X> Layer<X> {
    pub fn map<Y>(self, mut f: impl FnMut(X) -> Y) -> Layer<Y> {
        match self {
            Layer::Skip => Layer::Skip,
            Layer::Assign(v, e) => Layer::Assign(v, e),
            Layer::Seq(p, q) => {
                let p = f(p);
                Layer::Seq(p, f(q))
            }
            Layer::While(e, p) => Layer::While(e, f(p)),
            Layer::Obs(p) => Layer::Obs(f(p)),
            Layer::Sandbox(p) => Layer::Sandbox(f(p)),
        }
    }

    pub fn as_ref(&self) -> Layer<&X> {
        match self {
            Layer::Skip => Layer::Skip,
            Layer::Assign(v, e) => Layer::Assign(*v, e.clone()),
            Layer::Seq(p, q) => Layer::Seq(p, q),
            Layer::While(e, p) => Layer::While(e.clone(), p),
            Layer::Obs(p) => Layer::Obs(p),
            Layer::Sandbox(p) => Layer::Sandbox(p),
        }
    }

    pub fn try_map<Y, E>(self, mut f: impl FnMut(X) -> Result<Y, E>) -> Result<Layer<Y>, E> {
        Ok(match self {
            Layer::Skip => Layer::Skip,
            Layer::Assign(v, e) => Layer::Assign(v, e),
            Layer::Seq(p, q) => {
                let p = f(p)?;
                Layer::Seq(p, f(q)?)
            }
            Layer::While(e, p) => Layer::While(e, f(p)?),
            Layer::Obs(p) => Layer::Obs(f(p)?),
            Layer::Sandbox(p) => Layer::Sandbox(f(p)?),
        })
    }

    pub fn children(&self) -> Vec<&X> {
        match self {
            Layer::Skip | Layer::Assign(..) => vec![],
            Layer::Seq(p, q) => vec![p, q],
            Layer::While(_, p) | Layer::Obs(p) | Layer::Sandbox(p) => vec![p],
        }
    }

    pub fn constructor(&self) -> &'static str {
        match self {
            Layer::Skip => "skip",
            Layer::Assign(..) => "assign",
            Layer::Seq(..) => "seq",
            Layer::While(..) => "while",
            Layer::Obs(_) => "obs",
            Layer::Sandbox(_) => "sandbox",
        }
    }

    pub fn is_target_only(&self) -> bool {
        matches!(self, Layer::Obs(_) | Layer::Sandbox(_))
    }
}

/// A closed program: the least fixed point of [`Layer`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<Layer<Term>>);

impl Term {
    pub fn roll(layer: Layer<Term>) -> Term {
        Term(Arc::new(layer))
    }

    pub fn layer(&self) -> &Layer<Term> {
        &self.0
    }

    pub fn skip() -> Term {
        Term::roll(Layer::Skip)
    }

    pub fn assign(v: VarId, e: Expr) -> Term {
        Term::roll(Layer::Assign(v, e))
    }

    pub fn seq(p: Term, q: Term) -> Term {
        Term::roll(Layer::Seq(p, q))
    }

    pub fn while_(e: Expr, p: Term) -> Term {
        Term::roll(Layer::While(e, p))
    }

    pub fn obs(p: Term) -> Term {
        Term::roll(Layer::Obs(p))
    }

    pub fn sandbox(p: Term) -> Term {
        Term::roll(Layer::Sandbox(p))
    }

    /// Number of AST nodes; a sandboxed assignment counts two.
    pub fn size(&self) -> usize {
        1 + self
            .layer()
            .children()
            .into_iter()
            .map(Term::size)
            .sum::<usize>()
    }

    /// Catamorphism: fold the term bottom-up with an algebra `Layer<A> -> A`.
    pub fn fold<A>(&self, alg: &mut impl FnMut(Layer<A>) -> A) -> A {
        let layer = self.layer().as_ref().map(|c| c.fold(alg));
        alg(layer)
    }

    pub fn is_source(&self) -> bool {
        self.fold(&mut |l: Layer<bool>| match l {
            Layer::Obs(_) | Layer::Sandbox(_) => false,
            Layer::Seq(a, b) => a && b,
            Layer::While(_, a) => a,
            Layer::Skip | Layer::Assign(..) => true,
        })
    }

    /// Checks the term against the universe and the language's grammar.
    pub fn validate(&self, u: &Universe, lang: Lang) -> Result<()> {
        match self.layer() {
            Layer::Skip => Ok(()),
            Layer::Assign(v, e) => {
                if v.index() >= u.vars().len() {
                    return Err(Error::UndeclaredVariable(format!("#{}", v.0)));
                }
                e.validate(u)
            }
            Layer::Seq(p, q) => {
                p.validate(u, lang)?;
                q.validate(u, lang)
            }
            Layer::While(e, p) => {
                e.validate(u)?;
                p.validate(u, lang)
            }
            Layer::Obs(p) => {
                if lang == Lang::Source {
                    return Err(Error::TargetOnly("obs"));
                }
                p.validate(u, lang)
            }
            Layer::Sandbox(p) => {
                if lang == Lang::Source {
                    return Err(Error::TargetOnly("sandbox"));
                }
                if !matches!(p.layer(), Layer::Assign(..)) {
                    return Err(Error::IllFormed("sandbox must wrap a single assignment".into()));
                }
                p.validate(u, lang)
            }
        }
    }

    pub fn render(&self, u: &Universe) -> String {
        let mut out = String::new();
        self.write(u, &mut out);
        out
    }

    fn write(&self, u: &Universe, out: &mut String) {
        match self.layer() {
            Layer::Skip => out.push_str("skip"),
            Layer::Assign(v, e) => {
                out.push_str(u.var_name(*v));
                out.push_str(" := ");
                out.push_str(&e.render(u));
            }
            Layer::Seq(p, q) => {
                // `;` associates to the right, so only a left-nested
                // sequence needs grouping.
                if matches!(p.layer(), Layer::Seq(..)) {
                    out.push('(');
                    p.write(u, out);
                    out.push(')');
                } else {
                    p.write(u, out);
                }
                out.push_str(" ; ");
                q.write(u, out);
            }
            Layer::While(e, p) => {
                out.push_str("while ");
                out.push_str(&e.render(u));
                out.push_str(" { ");
                p.write(u, out);
                out.push_str(" }");
            }
            Layer::Obs(p) => {
                out.push_str("obs(");
                p.write(u, out);
                out.push(')');
            }
            Layer::Sandbox(p) => {
                out.push_str("sandbox{ ");
                p.write(u, out);
                out.push_str(" }");
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.layer().fmt(f)
    }
}

/// Free terms over variables `X`: `Σ*X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Free<X> {
    Pure(X),
    Roll(Box<Layer<Free<X>>>),
}

impl<X> Free<X> {
    pub fn roll(layer: Layer<Free<X>>) -> Free<X> {
        Free::Roll(Box::new(layer))
    }

    /// The free term consisting of one layer over variables.
    pub fn layer(layer: Layer<X>) -> Free<X> {
        Free::roll(layer.map(Free::Pure))
    }

    pub fn map<Y>(self, f: &mut impl FnMut(X) -> Y) -> Free<Y> {
        match self {
            Free::Pure(x) => Free::Pure(f(x)),
            Free::Roll(l) => Free::roll(l.map(|c| c.map(f))),
        }
    }

    /// Monadic bind: substitute a free term for every variable.
    pub fn bind<Y>(self, f: &mut impl FnMut(X) -> Free<Y>) -> Free<Y> {
        match self {
            Free::Pure(x) => f(x),
            Free::Roll(l) => Free::roll(l.map(|c| c.bind(f))),
        }
    }

    pub fn try_bind<Y, E>(self, f: &mut impl FnMut(X) -> Result<Free<Y>, E>) -> Result<Free<Y>, E> {
        match self {
            Free::Pure(x) => f(x),
            Free::Roll(l) => Ok(Free::roll(l.try_map(|c| c.try_bind(f))?)),
        }
    }

    pub fn vars(&self) -> Vec<&X> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a X>) {
        match self {
            Free::Pure(x) => out.push(x),
            Free::Roll(l) => {
                for c in l.children() {
                    c.collect_vars(out);
                }
            }
        }
    }
}

impl<X> Free<Free<X>> {
    pub fn join(self) -> Free<X> {
        self.bind(&mut |x| x)
    }
}

impl Free<Term> {
    /// Collapses a free term over closed terms into a closed term.
    pub fn flatten(self) -> Term {
        match self {
            Free::Pure(t) => t,
            Free::Roll(l) => Term::roll(l.map(Free::flatten)),
        }
    }
}

impl From<&Term> for Free<Term> {
    fn from(t: &Term) -> Self {
        Free::Pure(t.clone())
    }
}

/// Program contexts: a chain of observers around a hole.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ctx {
    Hole,
    Obs(Box<Ctx>),
}

impl Ctx {
    pub fn with_layers(n: usize) -> Ctx {
        (0..n).fold(Ctx::Hole, |c, _| Ctx::Obs(Box::new(c)))
    }

    pub fn layers(&self) -> usize {
        match self {
            Ctx::Hole => 0,
            Ctx::Obs(c) => 1 + c.layers(),
        }
    }

    pub fn plug(&self, p: &Term) -> Term {
        match self {
            Ctx::Hole => p.clone(),
            Ctx::Obs(c) => Term::obs(c.plug(p)),
        }
    }

    pub fn validate(&self, u: &Universe, lang: Lang) -> Result<()> {
        match (self, lang) {
            (Ctx::Hole, _) => Ok(()),
            (Ctx::Obs(_), Lang::Source) => Err(Error::TargetOnly("obs")),
            (Ctx::Obs(_), Lang::Target) if self.layers() > u.ctx_depth() => Err(Error::IllFormed(
                format!("context has {} layers, ctx_depth is {}", self.layers(), u.ctx_depth()),
            )),
            (Ctx::Obs(_), Lang::Target) => Ok(()),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Ctx::Hole => "hole".into(),
            Ctx::Obs(c) => format!("obs({})", c.render()),
        }
    }
}

impl fmt::Display for Ctx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::Level;

    fn u() -> Universe {
        Universe::fixture()
    }

    #[test]
    fn eval_is_modular_and_truncated() {
        let u = u();
        let h = u.var("h").unwrap();
        let s = u.store_of(&[("h", 7), ("l", 0)]).unwrap();
        assert_eq!(Expr::Lit(42).eval(&u, s), 42);
        assert_eq!(Expr::Var(h).eval(&u, s), 7);
        assert_eq!(Expr::bin(BinOp::Monus, Expr::Lit(2), Expr::Lit(5)).eval(&u, s), 0);
        assert_eq!(Expr::bin(BinOp::Add, Expr::Lit(42), Expr::Lit(42)).eval(&u, s), 20);
        assert_eq!(Expr::bin(BinOp::Mul, Expr::Lit(42), Expr::Lit(2)).eval(&u, s), 20);
        assert_eq!(Expr::not(Expr::Lit(0)).eval(&u, s), 1);
        assert_eq!(Expr::not(Expr::Var(h)).eval(&u, s), 0);
    }

    #[test]
    fn plug_builds_observer_chain() {
        let p = Term::skip();
        assert_eq!(Ctx::Hole.plug(&p), p);
        assert_eq!(Ctx::with_layers(1).plug(&p), Term::obs(Term::skip()));
        assert_eq!(
            Ctx::with_layers(2).plug(&p),
            Term::obs(Term::obs(Term::skip()))
        );
    }

    #[test]
    fn rendering() {
        let u = u();
        let h = u.var("h").unwrap();
        assert_eq!(Term::assign(h, Expr::Lit(42)).render(&u), "h := 42");
        assert_eq!(Term::seq(Term::skip(), Term::skip()).render(&u), "skip ; skip");
        assert_eq!(
            Term::sandbox(Term::assign(h, Expr::Lit(2))).render(&u),
            "sandbox{ h := 2 }"
        );
        let left = Term::seq(Term::seq(Term::skip(), Term::skip()), Term::skip());
        assert_eq!(left.render(&u), "(skip ; skip) ; skip");
        let e = Expr::bin(
            BinOp::Mul,
            Expr::bin(BinOp::Add, Expr::Var(h), Expr::Lit(1)),
            Expr::not(Expr::Lit(0)),
        );
        assert_eq!(e.render(&u), "(h + 1) * not 0");
        let e = Expr::bin(
            BinOp::Monus,
            Expr::Lit(1),
            Expr::bin(BinOp::Monus, Expr::Lit(2), Expr::Lit(3)),
        );
        assert_eq!(e.render(&u), "1 - (2 - 3)");
        assert_eq!(Ctx::with_layers(1).render(), "obs(hole)");
    }

    #[test]
    fn sandbox_must_wrap_assignment() {
        let u = u();
        let bad = Term::sandbox(Term::skip());
        assert!(bad.validate(&u, Lang::Target).is_err());
        let h = u.var("h").unwrap();
        let good = Term::sandbox(Term::assign(h, Expr::Lit(1)));
        assert!(good.validate(&u, Lang::Target).is_ok());
        assert_eq!(good.validate(&u, Lang::Source), Err(Error::TargetOnly("sandbox")));
        assert_eq!(good.size(), 2);
    }

    #[test]
    fn free_join_and_flatten() {
        let inner: Free<Term> = Free::layer(Layer::Seq(Term::skip(), Term::skip()));
        let outer: Free<Free<Term>> = Free::layer(Layer::Obs(inner));
        let t = outer.join().flatten();
        assert_eq!(t, Term::obs(Term::seq(Term::skip(), Term::skip())));
    }

    #[test]
    fn reads_high() {
        let u = Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .build()
            .unwrap();
        let h = u.var("h").unwrap();
        let l = u.var("l").unwrap();
        assert!(Expr::bin(BinOp::Add, Expr::Var(l), Expr::Var(h)).reads_high(&u));
        assert!(!Expr::not(Expr::Var(l)).reads_high(&u));
    }
}
