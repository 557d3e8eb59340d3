//! Named strategies: compilers, their component maps and hyperproperties,
//! looked up by the names used on the command line.

use std::collections::BTreeMap;

use crate::compilers::{self, Assembled, BErase, BIncl, BackTranslation, BehaviorMap, Compiler, SEmbed, SSandbox, SyntaxMap, TId};
use crate::error::{Error, Result};
use crate::hyperprops::{Explicit, Hyperproperty, NeverEvent, Ni, Top};
use crate::opsem::Event;
use crate::traces::{Behavior, Trace};
use crate::universe::Universe;

type Ctor<T> = fn() -> Box<T>;

/// Constructors keyed by name. [`Registry::default`] holds the built-ins;
/// more can be registered before lookup.
pub struct Registry {
    compilers: BTreeMap<&'static str, Ctor<dyn Compiler>>,
    syntax: BTreeMap<&'static str, Ctor<dyn SyntaxMap>>,
    behavior: BTreeMap<&'static str, Ctor<dyn BehaviorMap>>,
    back: BTreeMap<&'static str, Ctor<dyn BackTranslation>>,
    hyperprops: BTreeMap<&'static str, Ctor<dyn Hyperproperty>>,
}

impl Default for Registry {
    fn default() -> Registry {
        let mut r = Registry::empty();
        r.register_compiler("identity", || Box::new(compilers::identity()));
        r.register_compiler("sandbox", || Box::new(compilers::sandbox()));
        r.register_syntax("s_embed", || Box::new(SEmbed));
        r.register_syntax("s_sandbox", || Box::new(SSandbox));
        r.register_behavior("b_incl", || Box::new(BIncl));
        r.register_behavior("b_erase", || Box::new(BErase));
        r.register_back("t_id", || Box::new(TId));
        r.register_hyperprop("ni", || Box::new(Ni));
        r.register_hyperprop("top", || Box::new(Top));
        r.register_hyperprop("never:H", || Box::new(NeverEvent(Event::Internal)));
        r.register_hyperprop("never:!", || Box::new(NeverEvent(Event::Bang)));
        r
    }
}

fn lookup<T: ?Sized>(map: &BTreeMap<&'static str, Ctor<T>>, kind: &'static str, name: &str) -> Result<Box<T>> {
    match map.get(name) {
        Some(ctor) => Ok(ctor()),
        None => Err(Error::Unknown {
            kind,
            name: name.into(),
            known: map.keys().copied().collect::<Vec<_>>().join(", "),
        }),
    }
}

impl Registry {
    pub fn empty() -> Registry {
        Registry {
            compilers: BTreeMap::new(),
            syntax: BTreeMap::new(),
            behavior: BTreeMap::new(),
            back: BTreeMap::new(),
            hyperprops: BTreeMap::new(),
        }
    }

    pub fn register_compiler(&mut self, name: &'static str, ctor: Ctor<dyn Compiler>) {
        self.compilers.insert(name, ctor);
    }

    pub fn register_syntax(&mut self, name: &'static str, ctor: Ctor<dyn SyntaxMap>) {
        self.syntax.insert(name, ctor);
    }

    pub fn register_behavior(&mut self, name: &'static str, ctor: Ctor<dyn BehaviorMap>) {
        self.behavior.insert(name, ctor);
    }

    pub fn register_back(&mut self, name: &'static str, ctor: Ctor<dyn BackTranslation>) {
        self.back.insert(name, ctor);
    }

    pub fn register_hyperprop(&mut self, name: &'static str, ctor: Ctor<dyn Hyperproperty>) {
        self.hyperprops.insert(name, ctor);
    }

    pub fn compiler(&self, name: &str) -> Result<Box<dyn Compiler>> {
        lookup(&self.compilers, "compiler", name)
    }

    pub fn syntax(&self, name: &str) -> Result<Box<dyn SyntaxMap>> {
        lookup(&self.syntax, "syntax map", name)
    }

    pub fn behavior(&self, name: &str) -> Result<Box<dyn BehaviorMap>> {
        lookup(&self.behavior, "behaviour map", name)
    }

    pub fn back(&self, name: &str) -> Result<Box<dyn BackTranslation>> {
        lookup(&self.back, "back-translation", name)
    }

    /// A compiler from separately named maps.
    pub fn assemble(&self, s: &str, b: &str, t: &str) -> Result<Assembled> {
        Ok(Assembled {
            name: "assembled",
            s: self.syntax(s)?,
            b: self.behavior(b)?,
            t: self.back(t)?,
        })
    }

    /// A registered hyperproperty, or `explicit:<path>` read through
    /// [`parse_explicit`].
    pub fn hyperprop(&self, u: &Universe, name: &str) -> Result<Box<dyn Hyperproperty>> {
        if let Some(path) = name.strip_prefix("explicit:") {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.into(),
                msg: e.to_string(),
            })?;
            return Ok(Box::new(parse_explicit(u, path, &text)?));
        }
        lookup(&self.hyperprops, "hyperproperty", name).map_err(|e| match e {
            Error::Unknown { kind, name, known } => Error::Unknown {
                kind,
                name,
                known: known + ", explicit:<file>",
            },
            e => e,
        })
    }

    pub fn compiler_names(&self) -> Vec<&'static str> {
        self.compilers.keys().copied().collect()
    }

    pub fn hyperprop_names(&self) -> Vec<&'static str> {
        self.hyperprops.keys().copied().collect()
    }
}

/// An explicit hyperproperty in text form: one trace per line, behaviours
/// separated by blank lines. A line holding only `EMPTY` is the empty
/// behaviour.
pub fn parse_explicit(u: &Universe, name: &str, text: &str) -> Result<Explicit> {
    let mut members = Vec::new();
    let mut block: Vec<Trace> = Vec::new();
    let mut empty = false;
    for line in text.lines().map(str::trim).chain([""]) {
        if line.is_empty() {
            if empty || !block.is_empty() {
                members.push(Behavior::from_traces(block.drain(..)));
            }
            empty = false;
        } else if line == "EMPTY" {
            empty = true;
        } else {
            block.push(Trace::parse(u, line)?);
        }
    }
    Ok(Explicit::new(name, members))
}

/// Inverse of [`parse_explicit`].
pub fn render_explicit(u: &Universe, h: &Explicit) -> String {
    let blocks: Vec<String> = h
        .members
        .iter()
        .map(|b| if b.is_empty() { "EMPTY".into() } else { b.render(u).join("\n") })
        .collect();
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}
