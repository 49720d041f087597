//! Result document shared by both synthesis engines.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dsl::{Program, Registry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoundProgram {
    pub tokens: Program,
    pub text: String,
}

impl FoundProgram {
    pub fn new(tokens: Program, registry: &Registry) -> Self {
        let text = tokens.display(registry).to_string();
        FoundProgram { tokens, text }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Solved,
    TimeBudget,
    GenerationCap,
    EvaluationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub engine: String,
    pub found: Option<FoundProgram>,
    pub stop: StopReason,
    pub generations: u64,
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns_invocations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<u64>,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SynthesisReport {
    pub fn is_found(&self) -> bool {
        self.found.is_some()
    }

    /// Pretty JSON. Wall time is included only when `timing` is set, so that
    /// reports of seeded runs are byte-identical by default.
    pub fn to_json(&self, timing: bool) -> String {
        let mut doc = serde_json::to_value(self).expect("report serializes");
        if timing {
            doc["wall_time_s"] = serde_json::json!(self.wall_time.as_secs_f64());
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }
}
