//! Closed-loop execution: pointing policy, observation, safe-region and
//! belief updates, collision probability, and the temporal-coverage metric.
//!
//! The per-step cycle is: decide axes from the current belief, observe with
//! the new axes, update safe regions and beliefs from the observations,
//! spawn potentials, evaluate collision probability, record. Identical
//! scenarios (including the seed) produce bit-identical traces.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::{
    certainty_observed, evolve_known, fuse_measurement, Sce, SceId, SceKind, SphereShape,
    WorldBelief,
};
use crate::collision::CpeReport;
use crate::geometry::{direction_to_vision_state, step_toward, VisionState};
use crate::planner::{plan_rig, planning_sees};
use crate::safe_region::SafeRegion;
use crate::planner::{ActionKind, TargetSource};
use crate::sim::humanoid::{step_world, PartName};
use crate::sim::observe::{executed_mask, observe, world_spheres};
use crate::sim::trace::{PlanSummary, StepRecord, TargetSummary, WorldTrace};
use crate::sim::Scenario;
use crate::Result;

/// Pointing policy under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Cameras never move from their configured states.
    Fixed,
    /// Cameras chase the arm's end effector (slew-limited).
    Tcp,
    /// Receding-horizon view-trajectory search.
    Cease,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Fixed, Policy::Tcp, Policy::Cease];
}

impl std::str::FromStr for Policy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Policy::Fixed),
            "tcp" => Ok(Policy::Tcp),
            "cease" => Ok(Policy::Cease),
            other => Err(crate::Error::Scenario(format!(
                "unknown policy '{other}' (expected fixed, tcp, or cease)"
            ))),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Fixed => "fixed",
            Policy::Tcp => "tcp",
            Policy::Cease => "cease",
        })
    }
}

/// Stable known-obstacle id for a humanoid part.
pub fn part_sce_id(humanoid: usize, part: PartName) -> SceId {
    SceId::Known((humanoid * 5 + part.index()) as u32)
}

/// Runs one policy over the whole scenario.
pub fn run_policy(scenario: &Scenario, policy: Policy, trace_depths: bool) -> Result<WorldTrace> {
    let n_steps = scenario.steps();
    let dt = scenario.dt;
    let n_cams = scenario.cameras.len();
    let grid_len = scenario.grid.len();
    let bp = &scenario.belief_params;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut axes: Vec<VisionState> = match policy {
        Policy::Fixed => scenario.cameras.iter().map(|c| c.fixed).collect(),
        _ => scenario.cameras.iter().map(|c| c.initial).collect(),
    };
    let mut srs: Vec<SafeRegion> = scenario
        .cameras
        .iter()
        .map(|c| {
            SafeRegion::with_floor(
                scenario.grid.clone(),
                c.model.origin,
                c.model.d_max,
                scenario.v_max,
                scenario.floor_z,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut belief = WorldBelief::default();

    let known_ids: Vec<SceId> = (0..scenario.humanoids.len())
        .flat_map(|h| PartName::ALL.map(|p| part_sce_id(h, p)))
        .collect();

    let mut records = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let truth = step_world(scenario, t)?;
        let robot_now = scenario.robot.config_at(t).clone();

        // 1. Decide where to point.
        let mut plan_summaries: Option<Vec<PlanSummary>> = None;
        let desired: Vec<VisionState> = match policy {
            Policy::Fixed => scenario.cameras.iter().map(|c| c.fixed).collect(),
            Policy::Tcp => {
                let ee = robot_now.end_effector();
                scenario
                    .cameras
                    .iter()
                    .zip(&axes)
                    .map(|(c, &cur)| {
                        direction_to_vision_state(&ee, &c.model.origin).unwrap_or(cur)
                    })
                    .collect()
            }
            Policy::Cease => {
                let cameras: Vec<_> =
                    scenario.cameras.iter().map(|c| c.model.clone()).collect();
                let outcomes = plan_rig(
                    &cameras,
                    &axes,
                    &srs,
                    &belief,
                    &scenario.robot,
                    t,
                    &scenario.planner_params,
                    bp,
                    &scenario.spawn_params,
                )?;
                if trace_depths {
                    plan_summaries = Some(
                        outcomes
                            .iter()
                            .enumerate()
                            .map(|(c, o)| PlanSummary {
                                camera: c,
                                target_count: o.targets.len(),
                                targets: o
                                    .targets
                                    .iter()
                                    .map(|t| TargetSummary {
                                        kind: match t.kind {
                                            ActionKind::Trajectory => "a_traj".into(),
                                            ActionKind::Obstacle => "a_obs".into(),
                                            ActionKind::SafeCell => "a_safe".into(),
                                        },
                                        source: match t.source {
                                            TargetSource::EndEffector { step } => {
                                                format!("ee@{step}")
                                            }
                                            TargetSource::Obstacle(id) => id.to_string(),
                                            TargetSource::SafeCell(cell) => {
                                                format!("cell{cell}")
                                            }
                                        },
                                        azimuth: t.aim.azimuth,
                                        elevation: t.aim.elevation,
                                    })
                                    .collect(),
                                candidate_count: o.candidate_scores.len(),
                                candidate_scores: o.candidate_scores.clone(),
                                chosen: o
                                    .chosen
                                    .states
                                    .iter()
                                    .map(|s| (s.azimuth, s.elevation))
                                    .collect(),
                                chosen_score: o.chosen.score,
                            })
                            .collect(),
                    );
                }
                outcomes.iter().map(|o| o.chosen.states[0]).collect()
            }
        };
        for c in 0..n_cams {
            let step = scenario.cameras[c].model.max_slew_rate * dt;
            axes[c] = scenario.cameras[c]
                .model
                .clamp_to_limits(step_toward(axes[c], desired[c], step));
        }

        // 2. Observe with the new axes.
        let observations = observe(scenario, &truth, &robot_now, &axes, &mut rng);
        let mut part_observed: Vec<[bool; 5]> = vec![[false; 5]; scenario.humanoids.len()];
        for o in &observations {
            if o.valid {
                part_observed[o.humanoid][o.part.index()] = true;
            }
        }

        // 3. Safe regions evolve under the executed masks.
        let spheres = world_spheres(&truth);
        for r in 0..n_cams {
            let mask = executed_mask(scenario, r, &axes, &robot_now, &spheres, &srs[r]);
            srs[r] = srs[r].evolve(&mask, dt)?;
        }

        // 4. Belief: evolve existing, then fuse this step's measurements
        //    (camera order; later cameras overwrite earlier ones), then
        //    insert first sightings.
        let flags: BTreeMap<SceId, bool> = belief
            .sces
            .iter()
            .map(|s| {
                let v = match s.id {
                    SceId::Known(v) => v as usize,
                    SceId::Potential(_) => unreachable!("belief holds known obstacles only"),
                };
                (s.id, part_observed[v / 5][v % 5])
            })
            .collect();
        belief = evolve_known(&belief, &flags, dt, bp)?;
        for o in &observations {
            if !o.valid {
                continue;
            }
            let id = part_sce_id(o.humanoid, o.part);
            if let Some(pos) = belief.sces.iter().position(|s| s.id == id) {
                belief.sces[pos] = fuse_measurement(&belief.sces[pos], &o.measurement, bp)?;
            } else {
                let mut state = o.measurement;
                state.certainty = certainty_observed(&bp.sensor_cov, bp)?;
                belief.sces.push(Sce {
                    id,
                    kind: SceKind::Known,
                    state,
                    cov: bp.sensor_cov.clone(),
                    geometry: vec![SphereShape {
                        offset: nalgebra::Vector3::zeros(),
                        radius: truth[o.humanoid][o.part.index()].radius,
                    }],
                });
            }
        }
        belief.sces.sort_by_key(|s| s.id);

        // 5. Worst-case potentials from every rig's region.
        let window = scenario.robot_window(t, scenario.planner_params.t_p);
        let potentials: Vec<Sce> = srs
            .iter()
            .enumerate()
            .flat_map(|(r, sr)| {
                sr.spawn_potentials(
                    &window,
                    scenario.planner_params.t_p,
                    bp,
                    &scenario.spawn_params,
                    (r * grid_len) as u32,
                )
            })
            .collect();

        // 6. Collision probability for the coming interval.
        let robot_next = scenario.robot.config_at(t + dt);
        let observed_of = |sce: &Sce| -> bool {
            match sce.id {
                SceId::Known(v) => part_observed[v as usize / 5][v as usize % 5],
                SceId::Potential(_) => scenario
                    .cameras
                    .iter()
                    .zip(&axes)
                    .any(|(c, &axis)| planning_sees(&c.model, axis, &sce.state.position, &robot_now)),
            }
        };
        let cpe = CpeReport::evaluate(
            belief
                .sces
                .iter()
                .map(|s| (s, observed_of(s)))
                .chain(potentials.iter().map(|p| (p, observed_of(p)))),
            robot_next,
            dt,
            bp,
        )?;

        let known_us: Vec<(SceId, f64)> = belief
            .sces
            .iter()
            .map(|s| (s.id, s.state.certainty))
            .collect();
        let (known_ps, potential_ps): (Vec<_>, Vec<_>) = cpe
            .per_sce
            .iter()
            .partition(|(id, _)| matches!(id, SceId::Known(_)));
        let potential_max_p = potential_ps
            .iter()
            .map(|(_, p)| *p)
            .fold(0.0_f64, f64::max);

        records.push(StepRecord {
            t,
            axes: axes.clone(),
            part_observed,
            known_us,
            known_ps,
            potential_count: potentials.len(),
            potential_max_p,
            aggregate_p: cpe.aggregate,
            desired: desired.clone(),
            sr_depths: trace_depths
                .then(|| srs.iter().map(|s| s.depth().to_vec()).collect()),
            plans: plan_summaries,
        });
    }

    Ok(WorldTrace {
        scenario_name: scenario.name.clone(),
        policy,
        seed: scenario.seed,
        dt,
        humanoid_count: scenario.humanoids.len(),
        camera_count: n_cams,
        known_ids,
        grid_n_az: scenario.grid.n_az,
        records,
    })
}

/// Temporal coverage: for each part, the fraction of steps in which at least
/// one camera validly observed it (averaged across humanoids), plus the mean
/// over the five parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Ratios in part order Body, RA, RH, LA, LH.
    pub parts: [f64; 5],
    pub avg: f64,
}

pub fn temporal_coverage(trace: &WorldTrace) -> CoverageReport {
    let steps = trace.records.len().max(1) as f64;
    let humanoids = trace.humanoid_count.max(1) as f64;
    let mut parts = [0.0_f64; 5];
    for record in &trace.records {
        for per_humanoid in &record.part_observed {
            for (i, seen) in per_humanoid.iter().enumerate() {
                if *seen {
                    parts[i] += 1.0;
                }
            }
        }
    }
    for p in parts.iter_mut() {
        *p /= steps * humanoids;
    }
    let avg = parts.iter().sum::<f64>() / 5.0;
    CoverageReport { parts, avg }
}
