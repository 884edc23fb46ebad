use std::collections::BTreeMap;
use std::fmt::Write as _;

use hamflow::densities::{DensitySequence, Status};
use hamflow::expr::Expr;
use hamflow::syntax::{print_latex, print_text};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Latex,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Violated,
    Undecided,
    Resource,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Violated => "violated",
            Outcome::Undecided => "undecided",
            Outcome::Resource => "resource",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Violated => 1,
            Outcome::Undecided | Outcome::Resource => 3,
        }
    }

    pub fn of(status: &Status) -> Self {
        match status {
            Status::Ok => Outcome::Ok,
            Status::Violated { .. } => Outcome::Violated,
            Status::Undecided { .. } => Outcome::Undecided,
            Status::Resource { .. } => Outcome::Resource,
        }
    }

    /// The worse of two outcomes.
    pub fn and(self, other: Outcome) -> Outcome {
        let rank = |o: Outcome| match o {
            Outcome::Ok => 0,
            Outcome::Undecided => 1,
            Outcome::Resource => 2,
            Outcome::Violated => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Debug)]
pub struct Condition {
    pub n: i64,
    pub rho: Expr,
    pub theta: Option<Expr>,
    pub residual: Option<Expr>,
}

/// A failure that never produced a report: usage, parse or resource errors.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn resource(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub outcome: Outcome,
    pub conditions: Vec<Condition>,
    pub trail: Option<Value>,
    pub id: Option<String>,
    pub bindings: BTreeMap<String, Expr>,
    pub results: Vec<(String, Expr)>,
    pub notes: Vec<String>,
    /// Command-specific JSON payload.
    pub details: Option<Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            outcome: Outcome::Ok,
            conditions: Vec::new(),
            trail: None,
            id: None,
            bindings: BTreeMap::new(),
            results: Vec::new(),
            notes: Vec::new(),
            details: None,
        }
    }

    pub fn result(mut self, name: &str, e: Expr) -> Self {
        self.results.push((name.to_string(), e));
        self
    }

    pub fn with_sequence(mut self, seq: &DensitySequence) -> Self {
        let failing = match &seq.status {
            Status::Violated { n, residual } => Some((*n, residual.clone())),
            _ => None,
        };
        for e in &seq.entries {
            let residual = failing.as_ref().filter(|(n, _)| *n == e.n).map(|(_, r)| r.clone());
            self.conditions.push(Condition { n: e.n, rho: e.rho.clone(), theta: e.theta.clone(), residual });
        }
        self.outcome = self.outcome.and(Outcome::of(&seq.status));
        match &seq.status {
            Status::Ok => {}
            Status::Violated { n, .. } => self.notes.push(format!("condition n = {n} violated")),
            Status::Undecided { n, reason } => self.notes.push(format!("condition n = {n} undecided: {reason}")),
            Status::Resource { n, reason } => self.notes.push(format!("condition n = {n} ran out of resources: {reason}")),
        }
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    pub fn to_json(&self) -> Value {
        let conditions: Vec<Value> = self
            .conditions
            .iter()
            .map(|c| {
                json!({
                    "n": c.n,
                    "rho": c.rho.to_string(),
                    "theta": c.theta.as_ref().map(|t| t.to_string()),
                    "residual": c.residual.as_ref().map(|r| r.to_string()),
                })
            })
            .collect();
        let mut bindings = Map::new();
        for (k, v) in &self.bindings {
            bindings.insert(k.clone(), json!(v.to_string()));
        }
        let mut results = Map::new();
        for (k, v) in &self.results {
            results.insert(k.clone(), json!(v.to_string()));
        }
        let mut doc = json!({
            "schema": "1",
            "command": self.command,
            "status": self.outcome.label(),
            "conditions": conditions,
            "trail": self.trail.clone().unwrap_or_else(|| json!([])),
            "id": self.id,
            "bindings": bindings,
            "results": results,
            "notes": self.notes,
        });
        if let Some(d) = &self.details {
            doc["details"] = d.clone();
        }
        doc
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize");
                s.push('\n');
                s
            }
            Format::Text => self.render_with(print_text, |name, e| format!("{name} = {e}")),
            Format::Latex => self.render_with(print_latex, |name, e| format!("\\mathrm{{{}}} = {e}", latex_name(name))),
        }
    }

    fn render_with(&self, print: fn(&Expr) -> String, line: impl Fn(&str, &str) -> String) -> String {
        let mut out = String::new();
        for (name, e) in &self.results {
            let _ = writeln!(out, "{}", line(name, &print(e)));
        }
        for c in &self.conditions {
            let _ = writeln!(out, "{}", line(&format!("rho_{}", c.n), &print(&c.rho)));
            if let Some(t) = &c.theta {
                let _ = writeln!(out, "{}", line(&format!("theta_{}", c.n), &print(t)));
            }
            if let Some(r) = &c.residual {
                let _ = writeln!(out, "{}", line(&format!("residual_{}", c.n), &print(r)));
            }
        }
        if let Some(id) = &self.id {
            let _ = writeln!(out, "id: {id}");
        }
        for (k, v) in &self.bindings {
            let _ = writeln!(out, "{}", line(k, &print(v)));
        }
        if let Some(Value::Array(steps)) = &self.trail {
            for (i, s) in steps.iter().enumerate() {
                let _ = writeln!(out, "step {}: {}", i + 1, s);
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let _ = writeln!(out, "status: {}", self.outcome.label());
        out
    }
}

fn latex_name(name: &str) -> String {
    name.replace('_', "\\_")
}
