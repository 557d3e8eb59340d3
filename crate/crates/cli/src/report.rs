//! Reports: what a command found, rendered as text or JSON.
//!
//! The JSON form carries everything the text form shows. Wall time is only
//! included on request so that reports are reproducible byte for byte.

use std::fmt::Write;

use seclab_core::verdict::WitnessReport;
use seclab_core::{Universe, Verdict};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub vars: Vec<String>,
    pub vmax: u32,
    pub fuel: usize,
    pub term_depth: usize,
    pub ctx_depth: usize,
    pub literal_pool: Vec<u32>,
    pub term_expr_depth: usize,
}

impl Bounds {
    pub fn of(u: &Universe) -> Bounds {
        Bounds {
            vars: u.vars().iter().map(|v| format!("{}:{:?}", v.name, v.level)).collect(),
            vmax: u.vmax(),
            fuel: u.fuel(),
            term_depth: u.term_depth(),
            ctx_depth: u.ctx_depth(),
            literal_pool: u.literal_pool().to_vec(),
            term_expr_depth: u.term_expr_depth(),
        }
    }
}

/// One verdict, or one row of the reproduction table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub holds: bool,
    /// For reproduction rows: whether the check is expected to hold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<bool>,
    pub checked: u64,
    pub fuel_limited: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    /// For expected failures: whether the witness is the known counterexample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_confirmed: Option<bool>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, u: &Universe, v: &Verdict) -> CheckReport {
        CheckReport {
            name: name.into(),
            holds: v.holds,
            expected: None,
            checked: v.checked,
            fuel_limited: v.fuel_limited,
            witness: v.witness.as_ref().map(|w| w.report(u)),
            witness_confirmed: None,
            detail: String::new(),
            bounds: None,
        }
    }

    /// Did the check come out as expected (or hold, with no expectation)?
    pub fn ok(&self) -> bool {
        self.holds == self.expected.unwrap_or(true) && self.witness_confirmed != Some(false)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub bounds: Bounds,
    pub checks: Vec<CheckReport>,
    /// Command output other than verdicts (traces, behaviours, members).
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

impl Report {
    pub fn new(command: impl Into<String>, u: &Universe) -> Report {
        Report {
            command: command.into(),
            bounds: Bounds::of(u),
            checks: Vec::new(),
            data: serde_json::Value::Null,
            wall_time_ms: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckReport::ok)
    }

    pub fn exit_code(&self) -> i32 {
        if self.ok() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let b = &self.bounds;
        let _ = writeln!(
            out,
            "{} [vars {}; vmax {}; fuel {}; term_depth {}; ctx_depth {}]",
            self.command,
            b.vars.join(","),
            b.vmax,
            b.fuel,
            b.term_depth,
            b.ctx_depth
        );
        text_data(&mut out, &self.data);
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let status = match (c.holds, c.expected) {
                (true, None | Some(true)) => "HOLDS",
                (false, None) => "FAILS",
                (false, Some(false)) => "FAILS (expected)",
                (true, Some(false)) => "HOLDS (expected to fail)",
                (false, Some(true)) => "FAILS (expected to hold)",
            };
            let _ = write!(out, "{:width$}  {status}  [{} checked", c.name, c.checked);
            if c.fuel_limited {
                out.push_str(", fuel-limited");
            }
            out.push(']');
            if let Some(b) = &c.bounds {
                let _ = write!(out, " at term_depth {}, fuel {}", b.term_depth, b.fuel);
            }
            out.push('\n');
            match c.witness_confirmed {
                Some(true) => out.push_str("    known counterexample confirmed\n"),
                Some(false) => out.push_str("    known counterexample NOT confirmed\n"),
                None => {}
            }
            if !c.detail.is_empty() {
                let _ = writeln!(out, "    {}", c.detail);
            }
            if let Some(w) = &c.witness {
                text_witness(&mut out, w);
            }
        }
        if let Some(ms) = self.wall_time_ms {
            let _ = writeln!(out, "wall time: {ms} ms");
        }
        out
    }
}

fn text_witness(out: &mut String, w: &WitnessReport) {
    let _ = writeln!(out, "    witness: {}", w.note);
    let fields = [
        ("lang", w.lang.as_ref()),
        ("program", w.program.as_ref()),
        ("other", w.other_program.as_ref()),
        ("context", w.context.as_ref()),
    ];
    for (k, v) in fields {
        if let Some(v) = v {
            let _ = writeln!(out, "      {k}: {v}");
        }
    }
    if !w.stores.is_empty() {
        let _ = writeln!(out, "      stores: {}", w.stores.join(" "));
    }
    for t in &w.traces {
        let _ = writeln!(out, "      trace: {t}");
    }
}

fn text_data(out: &mut String, data: &serde_json::Value) {
    use serde_json::Value;
    let scalar = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(_) | Value::Bool(_) => Some(v.to_string()),
        _ => None,
    };
    match data {
        Value::Null => {}
        Value::Array(items) => {
            for v in items {
                match v {
                    Value::Object(map) => {
                        let fields: Vec<String> = map
                            .iter()
                            .map(|(k, v)| format!("{k}={}", scalar(v).unwrap_or_else(|| v.to_string())))
                            .collect();
                        let _ = writeln!(out, "  {}", fields.join("  "));
                    }
                    v => {
                        let _ = writeln!(out, "  {}", scalar(v).unwrap_or_else(|| v.to_string()));
                    }
                }
            }
        }
        Value::Object(map) => {
            for (k, v) in map.iter().filter(|(_, v)| scalar(v).is_some()) {
                let _ = writeln!(out, "{k}: {}", scalar(v).unwrap_or_default());
            }
            for (k, v) in map.iter().filter(|(_, v)| scalar(v).is_none()) {
                let _ = writeln!(out, "{k}:");
                text_data(out, v);
            }
        }
        v => {
            let _ = writeln!(out, "{}", scalar(v).unwrap_or_else(|| v.to_string()));
        }
    }
}
