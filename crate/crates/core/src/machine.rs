//! Pre-compiled stepping for bulk runs.
//!
//! The shape of every residual reachable from a term does not depend on the
//! store, so a term is compiled once into a small graph: one node per
//! reachable residual, each holding its redex (the leftmost innermost
//! skip, assignment or loop), the effect of the surrounding frames on a
//! leak event, and its successors. Running a node is then an expression
//! evaluation plus an array lookup. The machine must agree with
//! [`crate::opsem::step`] exactly; the tests check this.

use std::collections::HashMap;

use crate::opsem::{Event, Next};
use crate::syntax::{Expr, Layer, Term};
use crate::universe::{Store, Universe, VarId};

pub type NodeId = u32;

#[derive(Debug, Clone)]
enum Redex {
    Skip,
    Assign { var: VarId, expr: Expr, high: bool },
    While { guard: Expr },
}

#[derive(Debug, Clone)]
struct Node {
    redex: Redex,
    /// What a leak at the redex looks like after passing the frames.
    leak: Event,
    /// Successor when the redex terminates, or when a loop guard is zero.
    first: Next<NodeId>,
    /// Successor when a loop guard is nonzero.
    second: Next<NodeId>,
}

#[derive(Debug, Clone, Copy)]
enum Frame<'a> {
    SeqLeft(&'a Term),
    Obs,
    Sandbox,
}

#[derive(Debug, Clone)]
pub struct Machine {
    nodes: Vec<Node>,
    terms: Vec<Term>,
}

/// Result of one machine step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub store: Store,
    pub event: Event,
    pub next: Next<NodeId>,
}

impl Machine {
    /// Compiles `root`, which must already be valid. Node 0 is the root.
    pub fn new(u: &Universe, root: &Term) -> Machine {
        let mut index: HashMap<Term, NodeId> = HashMap::new();
        let mut terms: Vec<Term> = Vec::new();
        let mut nodes: Vec<Option<Node>> = Vec::new();
        let mut work = vec![0u32];
        index.insert(root.clone(), 0);
        terms.push(root.clone());
        nodes.push(None);

        let mut intern = |t: Term, work: &mut Vec<NodeId>, terms: &mut Vec<Term>, nodes: &mut Vec<Option<Node>>| {
            *index.entry(t.clone()).or_insert_with(|| {
                let id = terms.len() as NodeId;
                terms.push(t);
                nodes.push(None);
                work.push(id);
                id
            })
        };

        while let Some(id) = work.pop() {
            let term = terms[id as usize].clone();
            let mut frames = Vec::new();
            let mut cur = &term;
            loop {
                match cur.layer() {
                    Layer::Seq(p, q) => {
                        frames.push(Frame::SeqLeft(q));
                        cur = p;
                    }
                    Layer::Obs(p) => {
                        frames.push(Frame::Obs);
                        cur = p;
                    }
                    Layer::Sandbox(p) => {
                        frames.push(Frame::Sandbox);
                        cur = p;
                    }
                    _ => break,
                }
            }
            let leak = frames.iter().rev().fold(Event::Internal, |e, f| match f {
                Frame::SeqLeft(_) => e,
                Frame::Obs => e.observed(),
                Frame::Sandbox => e.sandboxed(),
            });
            let (redex, first, second) = match cur.layer() {
                Layer::Skip => (Redex::Skip, unwind(&frames, Next::Done), Next::Done),
                Layer::Assign(v, e) => (
                    Redex::Assign {
                        var: *v,
                        expr: e.clone(),
                        high: u.is_high(*v),
                    },
                    unwind(&frames, Next::Done),
                    Next::Done,
                ),
                Layer::While(e, body) => (
                    Redex::While { guard: e.clone() },
                    unwind(&frames, Next::Residual(Term::skip())),
                    unwind(&frames, Next::Residual(Term::seq(body.clone(), cur.clone()))),
                ),
                _ => unreachable!("frames are peeled above"),
            };
            let first = match first {
                Next::Done => Next::Done,
                Next::Residual(t) => Next::Residual(intern(t, &mut work, &mut terms, &mut nodes)),
            };
            let second = match second {
                Next::Done => Next::Done,
                Next::Residual(t) => Next::Residual(intern(t, &mut work, &mut terms, &mut nodes)),
            };
            nodes[id as usize] = Some(Node {
                redex,
                leak,
                first,
                second,
            });
        }
        Machine {
            nodes: nodes.into_iter().map(|n| n.expect("every node is compiled")).collect(),
            terms,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The residual program a node stands for.
    pub fn term(&self, id: NodeId) -> &Term {
        &self.terms[id as usize]
    }

    #[inline]
    pub fn step(&self, u: &Universe, id: NodeId, s: Store) -> Transition {
        let node = &self.nodes[id as usize];
        match &node.redex {
            Redex::Skip => Transition {
                store: s,
                event: Event::Silent,
                next: node.first,
            },
            Redex::Assign { var, expr, high } => {
                let x = expr.eval(u, s);
                let event = if *high && u.get(s, *var) != x {
                    node.leak
                } else {
                    Event::Silent
                };
                Transition {
                    store: u.set(s, *var, x),
                    event,
                    next: node.first,
                }
            }
            Redex::While { guard } => Transition {
                store: s,
                event: Event::Silent,
                next: if guard.eval(u, s) == 0 { node.first } else { node.second },
            },
        }
    }

    /// Runs from the root for at most `fuel` steps, reporting each step.
    /// Returns whether the run terminated.
    ///
    /// Works on the decoded store and updates the store index incrementally,
    /// which avoids the divisions of [`Universe::get`].
    #[inline]
    pub fn run_with(&self, u: &Universe, s0: Store, fuel: usize, mut on_step: impl FnMut(Event, Store)) -> bool {
        let modulus = u.modulus() as u32;
        let mut vals = u.decode(s0);
        let mut idx = s0.0;
        let mut node = 0;
        for _ in 0..fuel {
            let n = &self.nodes[node as usize];
            let (event, next) = match &n.redex {
                Redex::Skip => (Event::Silent, n.first),
                Redex::Assign { var, expr, high } => {
                    let x = expr.eval_values(modulus, &vals);
                    let old = vals[var.index()];
                    let event = if *high && old != x { n.leak } else { Event::Silent };
                    if old != x {
                        vals[var.index()] = x;
                        let stride = u.stride(*var) as u32;
                        idx = idx - old * stride + x * stride;
                    }
                    (event, n.first)
                }
                Redex::While { guard } => {
                    let next = if guard.eval_values(modulus, &vals) == 0 { n.first } else { n.second };
                    (Event::Silent, next)
                }
            };
            on_step(event, Store(idx));
            match next {
                Next::Done => return true,
                Next::Residual(r) => node = r,
            }
        }
        false
    }
}

fn unwind(frames: &[Frame<'_>], mut next: Next<Term>) -> Next<Term> {
    for f in frames.iter().rev() {
        next = match (f, next) {
            (Frame::SeqLeft(q), Next::Done) => Next::Residual((*q).clone()),
            (Frame::SeqLeft(q), Next::Residual(r)) => Next::Residual(Term::seq(r, (*q).clone())),
            (Frame::Obs, n) => n.map(Term::obs),
            (Frame::Sandbox, n) => n,
        };
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate;
    use crate::opsem::step_unchecked;
    use crate::universe::{Lang, Level};

    fn small() -> Universe {
        Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(2)
            .literals([0, 1, 2])
            .term_depth(4)
            .build()
            .unwrap()
    }

    #[test]
    fn agrees_with_reference_step() {
        let u = small();
        for lang in [Lang::Source, Lang::Target] {
            for p in enumerate::terms(&u, lang).unwrap() {
                let m = Machine::new(&u, &p);
                for id in 0..m.len() as NodeId {
                    let term = m.term(id).clone();
                    for s in u.stores() {
                        let o = step_unchecked(&u, s, &term);
                        let t = m.step(&u, id, s);
                        assert_eq!(t.store, o.store);
                        assert_eq!(t.event, o.event);
                        assert_eq!(t.next.map(|n| m.term(n).clone()), o.next, "{}", term.render(&u));
                    }
                }
            }
        }
    }

    #[test]
    fn loop_compiles_to_a_cycle() {
        let u = small();
        let p = crate::parse::parse_term(&u, Lang::Source, "while 1 { skip }").unwrap();
        let m = Machine::new(&u, &p);
        // while, skip ; while
        assert_eq!(m.len(), 3);
        assert!(!m.run_with(&u, Store(0), 10, |_, _| {}));
    }
}
