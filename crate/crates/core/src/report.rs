//! The `IndexReport` artifact emitted by every index computation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::maslov::CrossingSummary;

/// Outcome of an index computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Finite { value: i64 },
    Infinite,
    Undetermined { reason: String },
}

impl Verdict {
    pub fn finite(&self) -> Option<i64> {
        match self {
            Verdict::Finite { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_undetermined(&self) -> bool {
        matches!(self, Verdict::Undetermined { .. })
    }
}

/// Standing hypotheses behind an index computation; reported, never verified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub id: String,
    pub status: AssumptionStatus,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionStatus {
    /// Holds by construction of the input (e.g. catalog coefficients).
    Declared,
    /// Needed by the computation but not checked.
    Assumed,
    NotApplicable,
}

impl Assumption {
    pub fn new(id: &str, status: AssumptionStatus, note: &str) -> Self {
        Self { id: id.to_string(), status, note: note.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaCount {
    pub delta: f64,
    pub count: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest per-step symplectic residual of any integrated propagator.
    pub max_drift: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub delta_trace: Vec<DeltaCount>,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit: String,
    pub version: String,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub command: String,
    /// Which index was computed.
    pub index: String,
    pub verdict: Verdict,
    pub crossings: Vec<CrossingSummary>,
    pub assumptions: Vec<Assumption>,
    pub diagnostics: Diagnostics,
    pub provenance: Option<Provenance>,
}

impl IndexReport {
    pub fn new(index: &str, verdict: Verdict) -> Self {
        Self {
            command: String::new(),
            index: index.to_string(),
            verdict,
            crossings: Vec::new(),
            assumptions: Vec::new(),
            diagnostics: Diagnostics::default(),
            provenance: None,
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.diagnostics.notes.push(s.into());
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.diagnostics.values.insert(key.to_string(), v);
    }
}
