//! Per-step execution records and their CSV exports.
//!
//! CSV layouts are stable: fixed column order, deterministic row order,
//! ratios printed with three decimals, continuous values with six.

use crate::belief::SceId;
use crate::geometry::VisionState;
use crate::sim::humanoid::PartName;
use crate::sim::run::{CoverageReport, Policy};

/// One simulation step of a policy run.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    /// Executed optical axes, one per camera.
    pub axes: Vec<VisionState>,
    /// Any-camera validity per humanoid part.
    pub part_observed: Vec<[bool; 5]>,
    /// Certainty per known obstacle, sorted by id.
    pub known_us: Vec<(SceId, f64)>,
    /// Collision probability per known obstacle, sorted by id.
    pub known_ps: Vec<(SceId, f64)>,
    /// Number of potential obstacles spawned this step.
    pub potential_count: usize,
    /// Largest collision probability among the potentials.
    pub potential_max_p: f64,
    /// Aggregate collision probability over all obstacles.
    pub aggregate_p: f64,
    /// The pointing the policy asked for (before slew limiting).
    pub desired: Vec<VisionState>,
    /// Safe-region depth snapshots (per rig, per cell) when tracing.
    pub sr_depths: Option<Vec<Vec<f64>>>,
    /// Planner diagnostics (per camera) when tracing a cease run.
    pub plans: Option<Vec<PlanSummary>>,
}

/// One camera's search diagnostics for the planner trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PlanSummary {
    pub camera: usize,
    pub target_count: usize,
    pub targets: Vec<TargetSummary>,
    pub candidate_count: usize,
    pub candidate_scores: Vec<f64>,
    pub chosen: Vec<(f64, f64)>,
    pub chosen_score: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TargetSummary {
    pub kind: String,
    pub source: String,
    pub azimuth: f64,
    pub elevation: f64,
}

/// Full log of one policy run.
#[derive(Debug, Clone)]
pub struct WorldTrace {
    pub scenario_name: String,
    pub policy: Policy,
    pub seed: u64,
    pub dt: f64,
    pub humanoid_count: usize,
    pub camera_count: usize,
    /// Stable ids of every trackable part, whether or not it was ever seen.
    pub known_ids: Vec<SceId>,
    pub grid_n_az: usize,
    pub records: Vec<StepRecord>,
}

fn known_column(id: SceId) -> String {
    match id {
        SceId::Known(v) => {
            let part = PartName::from_index(v as usize % 5).expect("id encodes a part");
            format!("h{}_{}", v / 5, part.label())
        }
        SceId::Potential(v) => format!("p{v}"),
    }
}

impl WorldTrace {
    /// `coverage.csv`: part,ratio rows in Body, RA, RH, LA, LH order plus
    /// the Avg row, three decimals.
    pub fn coverage_csv(&self, report: &CoverageReport) -> String {
        let mut out = String::from("part,ratio\n");
        for (part, ratio) in PartName::ALL.iter().zip(report.parts.iter()) {
            out.push_str(&format!("{},{:.3}\n", part.label(), ratio));
        }
        out.push_str(&format!("Avg,{:.3}\n", report.avg));
        out
    }

    /// `cpe_trace.csv`: time, aggregate probability, per-known-obstacle
    /// probability columns (blank until first sighting), and the potentials'
    /// maximum.
    pub fn cpe_csv(&self) -> String {
        let mut out = String::from("t,p_c");
        for id in &self.known_ids {
            out.push_str(&format!(",p_{}", known_column(*id)));
        }
        out.push_str(",p_potential_max\n");
        for r in &self.records {
            out.push_str(&format!("{:.3},{:.6}", r.t, r.aggregate_p));
            for id in &self.known_ids {
                match r.known_ps.iter().find(|(pid, _)| pid == id) {
                    Some((_, p)) => out.push_str(&format!(",{p:.6}")),
                    None => out.push(','),
                }
            }
            out.push_str(&format!(",{:.6}\n", r.potential_max_p));
        }
        out
    }

    /// `axes.csv`: one row per (step, camera) with azimuth and elevation.
    pub fn axes_csv(&self) -> String {
        let mut out = String::from("t,camera,azimuth,elevation\n");
        for r in &self.records {
            for (c, axis) in r.axes.iter().enumerate() {
                out.push_str(&format!(
                    "{:.3},{c},{:.6},{:.6}\n",
                    r.t, axis.azimuth, axis.elevation
                ));
            }
        }
        out
    }

    /// `planner_trace.jsonl`: one JSON line per traced replan step with the
    /// candidate count, per-candidate scores, and chosen trajectory states.
    pub fn planner_trace_jsonl(&self) -> Option<String> {
        self.records.first()?.plans.as_ref()?;
        let mut out = String::new();
        for r in &self.records {
            let plans = r.plans.as_ref()?;
            let line = serde_json::json!({ "t": r.t, "plans": plans });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        Some(out)
    }

    /// `sr_depth.csv`: per-step depth field dump, present when the run was
    /// traced. Columns: t, rig, az_index, el_index, depth_m.
    pub fn sr_depth_csv(&self) -> Option<String> {
        self.records.first()?.sr_depths.as_ref()?;
        let mut out = String::from("t,rig,az_index,el_index,depth_m\n");
        for r in &self.records {
            let depths = r.sr_depths.as_ref()?;
            for (rig, field) in depths.iter().enumerate() {
                for (k, d) in field.iter().enumerate() {
                    out.push_str(&format!(
                        "{:.3},{rig},{},{},{:.6}\n",
                        r.t,
                        k % self.grid_n_az,
                        k / self.grid_n_az,
                        d
                    ));
                }
            }
        }
        Some(out)
    }
}

/// `compare.csv`: one row per policy with the coverage table columns.
pub fn compare_csv(rows: &[(Policy, CoverageReport)]) -> String {
    let mut out = String::from("policy,Body,RA,RH,LA,LH,Avg\n");
    for (policy, report) in rows {
        out.push_str(&policy.to_string());
        for p in report.parts {
            out.push_str(&format!(",{p:.3}"));
        }
        out.push_str(&format!(",{:.3}\n", report.avg));
    }
    out
}
