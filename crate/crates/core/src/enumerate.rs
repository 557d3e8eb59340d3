//! Bounded, deterministic enumerators for stores, expressions, terms and
//! contexts.
//!
//! Terms are enumerated by AST node count, smallest first; within a size the
//! order is skip, assignments, sequences (by left size), loops, then the
//! Target-only observer and sandbox. Every enumeration is counted before it
//! is materialised so oversized requests fail fast with
//! [`Error::CapExceeded`].

use crate::error::{Error, Result};
use crate::syntax::{BinOp, Ctx, Expr, Term};
use crate::universe::{Lang, Store, Universe};

fn guard(kind: &'static str, count: u128, cap: usize) -> Result<()> {
    if count > cap as u128 {
        return Err(Error::CapExceeded { kind, count, cap });
    }
    Ok(())
}

pub fn stores(u: &Universe) -> Result<Vec<Store>> {
    guard("stores", u.store_count() as u128, u.enum_cap())?;
    Ok(u.stores().collect())
}

/// Literals from the pool, then variables in declaration order.
pub fn atoms(u: &Universe) -> Vec<Expr> {
    u.literal_pool()
        .iter()
        .map(|&n| Expr::Lit(n))
        .chain(u.var_ids().map(Expr::Var))
        .collect()
}

/// Atoms, `not` of each atom, then every binary operator over atom pairs.
pub fn exprs(u: &Universe) -> Vec<Expr> {
    let atoms = atoms(u);
    let mut out = atoms.clone();
    out.extend(atoms.iter().cloned().map(Expr::not));
    for op in BinOp::ALL {
        for a in &atoms {
            for b in &atoms {
                out.push(Expr::bin(op, a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Expressions that may occur inside enumerated terms.
pub fn term_exprs(u: &Universe) -> Vec<Expr> {
    if u.term_expr_depth() == 0 {
        atoms(u)
    } else {
        exprs(u)
    }
}

/// Number of terms of each exact size `0..=depth` (index 0 is always 0).
pub fn term_counts(u: &Universe, lang: Lang, depth: usize) -> Vec<u128> {
    let e = term_exprs(u).len() as u128;
    let vars = u.vars().len() as u128;
    let assigns = vars * e;
    let mut n = vec![0u128; depth + 1];
    for size in 1..=depth {
        let mut c: u128 = 0;
        if size == 1 {
            c += 1 + assigns;
        }
        for left in 1..size.saturating_sub(1) {
            let right = size - 1 - left;
            c = c.saturating_add(n[left].saturating_mul(n[right]));
        }
        if size >= 2 {
            c = c.saturating_add(e.saturating_mul(n[size - 1]));
            if lang == Lang::Target {
                c = c.saturating_add(n[size - 1]);
                if size == 2 {
                    c += assigns;
                }
            }
        }
        n[size] = c;
    }
    n
}

pub fn term_count(u: &Universe, lang: Lang) -> u128 {
    term_counts(u, lang, u.term_depth()).iter().sum()
}

/// All terms with at most `term_depth` nodes.
pub fn terms(u: &Universe, lang: Lang) -> Result<Vec<Term>> {
    let depth = u.term_depth();
    guard("terms", term_count(u, lang), u.enum_cap())?;
    let es = term_exprs(u);
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); depth + 1];
    for size in 1..=depth {
        let mut out = Vec::new();
        if size == 1 {
            out.push(Term::skip());
            for v in u.var_ids() {
                for e in &es {
                    out.push(Term::assign(v, e.clone()));
                }
            }
        }
        for left in 1..size.saturating_sub(1) {
            let right = size - 1 - left;
            for p in &by_size[left] {
                for q in &by_size[right] {
                    out.push(Term::seq(p.clone(), q.clone()));
                }
            }
        }
        if size >= 2 {
            for e in &es {
                for p in &by_size[size - 1] {
                    out.push(Term::while_(e.clone(), p.clone()));
                }
            }
            if lang == Lang::Target {
                for p in &by_size[size - 1] {
                    out.push(Term::obs(p.clone()));
                }
                if size == 2 {
                    for v in u.var_ids() {
                        for e in &es {
                            out.push(Term::sandbox(Term::assign(v, e.clone())));
                        }
                    }
                }
            }
        }
        by_size[size] = out;
    }
    Ok(by_size.into_iter().flatten().collect())
}

/// Source: only the hole. Target: observer chains of length `0..=ctx_depth`.
pub fn contexts(u: &Universe, lang: Lang) -> Result<Vec<Ctx>> {
    match lang {
        Lang::Source => Ok(vec![Ctx::Hole]),
        Lang::Target => {
            guard("contexts", u.ctx_depth() as u128 + 1, u.enum_cap())?;
            Ok((0..=u.ctx_depth()).map(Ctx::with_layers).collect())
        }
    }
}
