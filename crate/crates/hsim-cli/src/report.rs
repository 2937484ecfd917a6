//! Report schema (versioned) and the CSV companion file.
//!
//! Reports must be bit-for-bit reproducible from `(inputs, seed)`, so wall
//! times are written as zero unless timing is explicitly requested — a
//! measured duration can never be part of a deterministic artifact.

use std::path::{Path, PathBuf};

use serde::Serialize;

use hsim_core::lcu::SegmentInfo;
use hsim_core::nystrom::SimulationPlan;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed_stream: u64,
    pub error: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub schema: u32,
    pub algorithm: String,
    pub plan: SimulationPlan,
    pub trial_count: usize,
    /// Worst error over all trials.
    pub achieved_error: f64,
    /// True only when every trial satisfied its bound.
    pub bound_satisfied: bool,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentInfo>>,
    pub trials: Vec<TrialRecord>,
}

impl SimulationReport {
    pub fn from_trials(
        algorithm: &str,
        plan: SimulationPlan,
        trials: Vec<TrialRecord>,
        segments: Option<Vec<SegmentInfo>>,
        wall_time_ms: u64,
    ) -> Self {
        let achieved_error = trials.iter().map(|t| t.error).fold(0.0, f64::max);
        let bound_satisfied = trials.iter().all(|t| t.satisfied);
        Self {
            schema: REPORT_SCHEMA,
            algorithm: algorithm.to_string(),
            plan,
            trial_count: trials.len(),
            achieved_error,
            bound_satisfied,
            wall_time_ms,
            segments,
            trials,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,seed_stream,error,bound,satisfied,wall_ms\n");
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.trial, t.seed_stream, t.error, t.bound, t.satisfied, t.wall_ms
            ));
        }
        out
    }
}

/// The CSV lands next to the JSON report with the extension swapped.
pub fn csv_sibling(path: &Path) -> PathBuf {
    path.with_extension("csv")
}
