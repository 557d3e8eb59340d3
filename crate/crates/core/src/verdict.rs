//! Results of the exhaustive checks.

use serde::Serialize;

use crate::syntax::{Ctx, Term};
use crate::traces::Trace;
use crate::universe::{Lang, Store, Universe};

/// Evidence that a check failed. Which fields are set depends on the check.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Witness {
    pub lang: Option<Lang>,
    pub program: Option<Term>,
    pub other_program: Option<Term>,
    pub context: Option<Ctx>,
    pub stores: Vec<Store>,
    pub traces: Vec<Trace>,
    pub note: String,
}

impl Witness {
    pub fn note(note: impl Into<String>) -> Witness {
        Witness {
            note: note.into(),
            ..Witness::default()
        }
    }

    pub fn report(&self, u: &Universe) -> WitnessReport {
        WitnessReport {
            lang: self.lang.map(|l| l.name().to_string()),
            program: self.program.as_ref().map(|p| p.render(u)),
            other_program: self.other_program.as_ref().map(|p| p.render(u)),
            context: self.context.as_ref().map(Ctx::render),
            stores: self.stores.iter().map(|&s| u.show_store(s)).collect(),
            traces: self.traces.iter().map(|t| t.render(u)).collect(),
            note: self.note.clone(),
        }
    }
}

/// A witness with every AST rendered in the concrete syntax.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_program: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stores: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    /// Some behaviour involved in the verdict hit the fuel bound.
    pub fuel_limited: bool,
    /// Number of cases examined.
    pub checked: u64,
}

impl Verdict {
    pub fn pass(checked: u64) -> Verdict {
        Verdict {
            holds: true,
            witness: None,
            fuel_limited: false,
            checked,
        }
    }

    pub fn fail(witness: Witness, checked: u64) -> Verdict {
        Verdict {
            holds: false,
            witness: Some(witness),
            fuel_limited: false,
            checked,
        }
    }

    pub fn fuel_limited(mut self, flag: bool) -> Verdict {
        self.fuel_limited |= flag;
        self
    }
}
