//! Receding-horizon search for the camera view trajectory that maximizes
//! discounted log-safety plus log transition probability.
//!
//! Candidate pointing targets come from the robot's future end-effector
//! positions, the tracked obstacles, and the most threatening safe-region
//! cells. Candidate trajectories step toward one target per planning
//! interval under the servo slew limit. Each candidate is scored by rolling
//! out clones of the safe region and belief under the hypothesized
//! visibility, accumulating
//!
//!   J = Σ_{j=1..n_p} γ^j·ln(1 − p̂_c) + α^j·ln p(s_j | s_{j−1})
//!
//! and the argmax is returned (ties: first in enumeration order). The search
//! never mutates its inputs. Rollout visibility uses the camera's own view
//! cone only; occlusion and cross-camera cone unions are applied by the
//! simulator at execution time, where exactness is cheap.

use std::collections::BTreeSet;

use crate::belief::{
    certainty_observed, certainty_unobserved, predict_covariance, predict_state, BeliefParams,
    Sce, SceId, WorldBelief,
};
use crate::collision::{
    combine_collision_probabilities, estimate_collision_probability, segment_segment_distance,
    RobotConfig, RobotTrajectory,
};
use crate::geometry::{
    angular_distance, direction_to_vision_state, in_fov, step_toward, CameraModel, VisionState,
};
use crate::safe_region::{SafeRegion, SpawnParams, VisibilityMask};
use crate::{Error, Result};

/// Search parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    /// Planning horizon, seconds.
    pub t_p: f64,
    /// Steps per horizon.
    pub n_p: usize,
    /// Risk decay base, in (0, 1).
    pub gamma: f64,
    /// Transition decay base, in (0, 1).
    pub alpha: f64,
    /// Transition softness, radians.
    pub sigma_t: f64,
    /// Cap on enumerated candidate trajectories.
    pub max_trajectories: usize,
    /// Number of safe-region cells offered as pointing targets.
    pub k_safe: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            t_p: 1.0,
            n_p: 5,
            gamma: 0.9,
            alpha: 0.6,
            sigma_t: 0.5,
            max_trajectories: 64,
            k_safe: 4,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_p > 0.0) {
            return Err(Error::contract("t_p must be positive"));
        }
        if self.n_p == 0 {
            return Err(Error::contract("n_p must be at least 1"));
        }
        for (name, v) in [("gamma", self.gamma), ("alpha", self.alpha)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::contract(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.sigma_t > 0.0) {
            return Err(Error::contract("sigma_t must be positive"));
        }
        if self.max_trajectories == 0 {
            return Err(Error::contract("max_trajectories must be at least 1"));
        }
        Ok(())
    }

    pub fn step_dt(&self) -> f64 {
        self.t_p / self.n_p as f64
    }
}

/// What a pointing target refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSource {
    /// End effector at planning step `step`.
    EndEffector { step: usize },
    /// A tracked obstacle's predicted position.
    Obstacle(SceId),
    /// A threatening safe-region cell.
    SafeCell(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Trajectory,
    Obstacle,
    SafeCell,
}

/// One candidate pointing target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionTarget {
    pub kind: ActionKind,
    pub aim: VisionState,
    pub source: TargetSource,
}

/// A candidate view trajectory with its rollout score.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewTrajectory {
    pub states: Vec<VisionState>,
    pub score: f64,
}

/// Another camera whose pointing is taken as given during this search:
/// one assumed axis per planning step.
#[derive(Debug, Clone)]
pub struct AssumedCamera<'a> {
    pub camera: &'a CameraModel,
    pub axes: Vec<VisionState>,
}

/// Everything one single-camera search needs.
pub struct PlanRequest<'a> {
    pub camera: &'a CameraModel,
    pub current: VisionState,
    pub others: &'a [AssumedCamera<'a>],
    pub sr: &'a SafeRegion,
    pub belief: &'a WorldBelief,
    pub robot: &'a RobotTrajectory,
    /// Current simulation time, seconds; the rollout covers [t0, t0 + t_p].
    pub t0: f64,
    pub params: &'a PlannerParams,
    pub belief_params: &'a BeliefParams,
    pub spawn: &'a SpawnParams,
    /// Id offset for potentials spawned from this rig's safe region.
    pub potential_id_offset: u32,
    /// Obstacle targets already covered by a previously planned camera.
    pub excluded_obstacles: &'a BTreeSet<SceId>,
    /// Safe-region cells already covered by a previously planned camera.
    pub excluded_cells: &'a BTreeSet<usize>,
}

/// Search result: the chosen trajectory plus per-candidate diagnostics.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub chosen: ViewTrajectory,
    pub candidate_scores: Vec<f64>,
    pub targets: Vec<ActionTarget>,
}

impl PlanOutcome {
    pub fn target_count(&self) -> usize {
        self.targets.len()
    }
}

/// Pointing targets for one camera, in deterministic order: end-effector
/// targets, then tracked obstacles by id, then threatening safe-region cells
/// by cell index, deduplicated within half a grid-cell radius.
pub fn generate_targets(req: &PlanRequest) -> Vec<ActionTarget> {
    let params = req.params;
    let delta = params.step_dt();
    let mut raw = Vec::new();

    for j in 1..=params.n_p {
        let ee = req.robot.config_at(req.t0 + j as f64 * delta).end_effector();
        if let Ok(aim) = direction_to_vision_state(&ee, &req.camera.origin) {
            raw.push(ActionTarget {
                kind: ActionKind::Trajectory,
                aim: req.camera.clamp_to_limits(aim),
                source: TargetSource::EndEffector { step: j },
            });
        }
    }

    // Aim one planning step ahead; longer leads overshoot badly for parts
    // on oscillating joints.
    let mut sces: Vec<&Sce> = req.belief.sces.iter().collect();
    sces.sort_by_key(|s| s.id);
    for sce in sces {
        if req.excluded_obstacles.contains(&sce.id) {
            continue;
        }
        let predicted = sce.state.position + sce.state.velocity * delta;
        if let Ok(aim) = direction_to_vision_state(&predicted, &req.camera.origin) {
            raw.push(ActionTarget {
                kind: ActionKind::Obstacle,
                aim: req.camera.clamp_to_limits(aim),
                source: TargetSource::Obstacle(sce.id),
            });
        }
    }

    // Safe-cell targets are limited to actionable threats: cells whose ray
    // the camera could actually clear. Rays blocked by the robot's own links
    // never reset no matter where the camera points, and fully collapsed
    // cells re-collapse immediately; a look at either buys nothing.
    let spawn_window = planning_window(req);
    let robot_now = &spawn_window.samples[0];
    let mut threats = req.sr.threat_cells(&spawn_window, params.t_p, req.spawn);
    threats.retain(|t| {
        if t.position == req.sr.origin || (t.position - req.sr.origin).norm() < req.spawn.r_h {
            return false;
        }
        let far = req.sr.origin + req.sr.cell_unit(t.cell) * req.sr.cap(t.cell);
        robot_now.links.iter().all(|l| {
            segment_segment_distance(&req.sr.origin, &far, &l.a, &l.b) >= l.radius
        })
    });
    threats.truncate(params.k_safe);
    threats.sort_by_key(|t| t.cell);
    for t in threats {
        if req.excluded_cells.contains(&t.cell) {
            continue;
        }
        if let Ok(aim) = direction_to_vision_state(&t.position, &req.camera.origin) {
            raw.push(ActionTarget {
                kind: ActionKind::SafeCell,
                aim: req.camera.clamp_to_limits(aim),
                source: TargetSource::SafeCell(t.cell),
            });
        }
    }

    let threshold = 0.5 * req.sr.grid.cell_angular_radius();
    let mut out: Vec<ActionTarget> = Vec::new();
    for t in raw {
        if out
            .iter()
            .all(|kept| angular_distance(kept.aim, t.aim) > threshold)
        {
            out.push(t);
        }
    }
    out
}

/// The robot trajectory restricted to the planning window [t0, t0 + t_p],
/// sampled at the planning step.
fn planning_window(req: &PlanRequest) -> RobotTrajectory {
    let delta = req.params.step_dt();
    let samples = (0..=req.params.n_p)
        .map(|j| req.robot.config_at(req.t0 + j as f64 * delta).clone())
        .collect();
    RobotTrajectory { samples, dt: delta }
}

/// Candidate state sequences: the hold trajectory first, then every target
/// committed for the whole horizon, then the full per-step enumeration in
/// lexicographic order; exact duplicates dropped, capped at
/// `max_trajectories` keeping the earliest.
pub fn enumerate_trajectories(
    targets: &[ActionTarget],
    start: VisionState,
    camera: &CameraModel,
    params: &PlannerParams,
) -> Vec<Vec<VisionState>> {
    let step_angle = camera.max_slew_rate * params.step_dt();
    let n_p = params.n_p;
    let cap = params.max_trajectories;
    let mut out: Vec<Vec<VisionState>> = Vec::new();

    let push_if_new = |out: &mut Vec<Vec<VisionState>>, traj: Vec<VisionState>| {
        if out.len() < cap && !out.contains(&traj) {
            out.push(traj);
        }
    };

    push_if_new(&mut out, vec![start; n_p]);

    let materialize = |choices: &[usize]| -> Vec<VisionState> {
        let mut state = start;
        choices
            .iter()
            .map(|&c| {
                state = step_toward(state, targets[c].aim, step_angle);
                state
            })
            .collect()
    };

    for i in 0..targets.len() {
        let traj = materialize(&vec![i; n_p]);
        push_if_new(&mut out, traj);
    }

    if targets.is_empty() {
        return out;
    }
    // Lexicographic over target choices, step 0 most significant.
    let m = targets.len();
    let mut choices = vec![0usize; n_p];
    'outer: loop {
        if out.len() >= cap {
            break;
        }
        push_if_new(&mut out, materialize(&choices));
        // Increment the mixed-radix counter.
        let mut pos = n_p;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            choices[pos] += 1;
            if choices[pos] < m {
                break;
            }
            choices[pos] = 0;
        }
    }
    out
}

/// Softmax-style transition probability: exp(−angle/σ) normalized over the
/// candidate set. `next` must be one of the candidates (exact equality).
pub fn transition_probability(
    prev: VisionState,
    next: VisionState,
    candidates: &[VisionState],
    sigma_t: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut chosen = None;
    for c in candidates {
        let w = (-angular_distance(prev, *c) / sigma_t).exp();
        total += w;
        if chosen.is_none() && *c == next {
            chosen = Some(w);
        }
    }
    let w = chosen.ok_or_else(|| Error::contract("next state not among transition candidates"))?;
    Ok(w / total)
}

/// Reachable states from `from` in one step: hold first, then one step
/// toward each target, exact duplicates dropped.
pub fn step_candidates(
    from: VisionState,
    targets: &[ActionTarget],
    step_angle: f64,
) -> Vec<VisionState> {
    let mut out = vec![from];
    for t in targets {
        let s = step_toward(from, t.aim, step_angle);
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Certainty values precomputed once per search: the constant observed-case
/// value and, per obstacle, the certainty after its m-th consecutive
/// unobserved step. Valid because the covariance path depends only on how
/// many unobserved steps have elapsed, not on their placement.
struct CertaintyMemo {
    u_observed: f64,
    u_unobserved: Vec<Vec<f64>>,
}

impl CertaintyMemo {
    fn build(sces: &[Sce], delta: f64, n_p: usize, bp: &BeliefParams) -> Result<Self> {
        let u_observed = certainty_observed(&bp.sensor_cov, bp)?;
        let mut u_unobserved = Vec::with_capacity(sces.len());
        for sce in sces {
            let mut cov = sce.cov.clone();
            let mut us = Vec::with_capacity(n_p);
            for _ in 0..n_p {
                us.push(certainty_unobserved(&cov, delta, bp)?);
                cov = predict_covariance(&cov, false, delta, bp);
            }
            u_unobserved.push(us);
        }
        Ok(Self {
            u_observed,
            u_unobserved,
        })
    }
}

/// True iff the camera at `axis` can estimate the state of a point obstacle
/// at `point`: inside the view cone and range, sight line clear of the
/// robot's own links.
pub fn planning_sees(
    camera: &CameraModel,
    axis: VisionState,
    point: &nalgebra::Vector3<f64>,
    robot: &RobotConfig,
) -> bool {
    if !in_fov(camera, axis, point) {
        return false;
    }
    robot.links.iter().all(|l| {
        segment_segment_distance(&camera.origin, point, &l.a, &l.b) >= l.radius
    })
}

/// Hypothesized visibility of this rig's cells, mirroring the executed
/// union semantics: the rig's own camera covers a cell when its direction
/// lies in the view cone and the ray clears the robot's own links; any other
/// camera covers it when sample points along the ray fall inside that
/// camera's assumed cone. Cells shadowed by the arm can never be
/// hypothesized clear, so candidates get no credit for staring at them;
/// occlusion by obstacles is deliberately not modeled, so directions
/// shadowed by an obstacle stay worth re-visiting.
fn hypothesized_mask(
    sr: &SafeRegion,
    camera: &CameraModel,
    axis: VisionState,
    others: &[AssumedCamera],
    step: usize,
    robot: &RobotConfig,
) -> VisibilityMask {
    const RAY_FRACTIONS: [f64; 4] = [0.125, 0.375, 0.625, 0.875];
    // Cone membership via dot products; this mask runs once per candidate
    // step over every cell.
    let own_axis = axis.unit_vector();
    let own_cos = camera.fov_half_angle.cos();
    let other_axes: Vec<(nalgebra::Vector3<f64>, f64, nalgebra::Vector3<f64>, f64)> = others
        .iter()
        .map(|o| {
            (
                o.axes[step].unit_vector(),
                o.camera.fov_half_angle.cos(),
                o.camera.origin,
                o.camera.d_max,
            )
        })
        .collect();
    let visible = (0..sr.grid.len())
        .map(|k| {
            let unit = sr.cell_unit(k);
            if own_axis.dot(&unit) >= own_cos {
                let far = sr.origin + unit * sr.cap(k);
                let clear = robot.links.iter().all(|l| {
                    segment_segment_distance(&sr.origin, &far, &l.a, &l.b) >= l.radius
                });
                if clear {
                    return true;
                }
            }
            other_axes.iter().any(|(o_axis, o_cos, o_origin, o_dmax)| {
                RAY_FRACTIONS.iter().all(|f| {
                    let p = sr.origin + unit * (sr.cap(k) * f);
                    let off = p - o_origin;
                    let dist = off.norm();
                    dist <= *o_dmax && (dist < 1e-12 || o_axis.dot(&off) >= *o_cos * dist)
                })
            })
        })
        .collect();
    VisibilityMask { visible }
}

/// Rolls out one candidate trajectory on clones of the safe region and
/// belief and accumulates its score. Inputs are never mutated.
pub fn score_trajectory(
    req: &PlanRequest,
    targets: &[ActionTarget],
    states: &[VisionState],
) -> Result<f64> {
    let mut knowns: Vec<Sce> = req.belief.sces.clone();
    knowns.sort_by_key(|s| s.id);
    let memo = CertaintyMemo::build(&knowns, req.params.step_dt(), req.params.n_p, req.belief_params)?;
    score_with_memo(req, targets, states, &memo)
}

/// The rollout proper, with the per-search certainty memo supplied by the
/// caller so candidates can share it.
fn score_with_memo(
    req: &PlanRequest,
    targets: &[ActionTarget],
    states: &[VisionState],
    memo: &CertaintyMemo,
) -> Result<f64> {
    let params = req.params;
    let delta = params.step_dt();
    let step_angle = req.camera.max_slew_rate * delta;
    let window = planning_window(req);

    let mut knowns: Vec<Sce> = req.belief.sces.clone();
    knowns.sort_by_key(|s| s.id);

    let mut sr = req.sr.clone();
    let mut unobserved_steps = vec![0usize; knowns.len()];
    let mut prev = req.current;
    let mut score = 0.0;

    for j in 1..=params.n_p {
        let axis = states[j - 1];
        let robot_now = &window.samples[j];

        sr = sr.evolve(
            &hypothesized_mask(&sr, req.camera, axis, req.others, j - 1, robot_now),
            delta,
        )?;

        let mut flags = Vec::with_capacity(knowns.len());
        for (i, sce) in knowns.iter_mut().enumerate() {
            let mut st = predict_state(&sce.state, delta);
            let observed = planning_sees(req.camera, axis, &st.position, robot_now)
                || req.others.iter().any(|other| {
                    planning_sees(other.camera, other.axes[j - 1], &st.position, robot_now)
                });
            st.certainty = if observed {
                memo.u_observed
            } else {
                unobserved_steps[i] += 1;
                memo.u_unobserved[i][unobserved_steps[i] - 1]
            };
            sce.state = st;
            flags.push(observed);
        }

        let potentials = sr.spawn_potentials(
            &window,
            params.t_p,
            req.belief_params,
            req.spawn,
            req.potential_id_offset,
        );

        let mut per_sce = Vec::with_capacity(knowns.len() + potentials.len());
        for (sce, &observed) in knowns.iter().zip(&flags) {
            per_sce.push(estimate_collision_probability(
                sce,
                observed,
                robot_now,
                delta,
                req.belief_params,
            ));
        }
        for p in &potentials {
            let observed = planning_sees(req.camera, axis, &p.state.position, robot_now)
                || req.others.iter().any(|other| {
                    planning_sees(other.camera, other.axes[j - 1], &p.state.position, robot_now)
                });
            per_sce.push(estimate_collision_probability(
                p,
                observed,
                robot_now,
                delta,
                req.belief_params,
            ));
        }
        let p_c = combine_collision_probabilities(&per_sce)?.min(1.0 - 1e-9);

        let candidates = step_candidates(prev, targets, step_angle);
        let p_trans = transition_probability(prev, axis, &candidates, params.sigma_t)?;

        score += params.gamma.powi(j as i32) * (1.0 - p_c).ln()
            + params.alpha.powi(j as i32) * p_trans.ln();
        prev = axis;
    }
    Ok(score)
}

/// Full single-camera search: generate targets, enumerate candidates, score
/// each on clones, return the argmax (first wins on ties). Deterministic for
/// identical inputs.
pub fn search(req: &PlanRequest) -> Result<PlanOutcome> {
    req.params.validate()?;
    let targets = generate_targets(req);
    let trajectories = enumerate_trajectories(&targets, req.current, req.camera, req.params);
    let mut sorted_knowns: Vec<Sce> = req.belief.sces.clone();
    sorted_knowns.sort_by_key(|s| s.id);
    let memo = CertaintyMemo::build(
        &sorted_knowns,
        req.params.step_dt(),
        req.params.n_p,
        req.belief_params,
    )?;
    let mut candidate_scores = Vec::with_capacity(trajectories.len());
    let mut best_idx = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, states) in trajectories.iter().enumerate() {
        let s = score_with_memo(req, &targets, states, &memo)?;
        candidate_scores.push(s);
        if s > best_score {
            best_score = s;
            best_idx = i;
        }
    }
    Ok(PlanOutcome {
        chosen: ViewTrajectory {
            states: trajectories[best_idx].clone(),
            score: best_score,
        },
        candidate_scores,
        targets,
    })
}

/// Plans every camera of a rig sequentially: camera 0 over all targets, each
/// later camera with the obstacle and safe-cell targets already covered by
/// previously planned cameras removed (end-effector targets are always
/// retained). Earlier cameras follow their chosen trajectories in later
/// cameras' rollouts; later cameras are assumed to hold their current axis
/// in earlier cameras' rollouts.
#[allow(clippy::too_many_arguments)]
pub fn plan_rig(
    cameras: &[CameraModel],
    current: &[VisionState],
    srs: &[SafeRegion],
    belief: &WorldBelief,
    robot: &RobotTrajectory,
    t0: f64,
    params: &PlannerParams,
    belief_params: &BeliefParams,
    spawn: &SpawnParams,
) -> Result<Vec<PlanOutcome>> {
    assert_eq!(cameras.len(), current.len());
    assert_eq!(cameras.len(), srs.len());
    let n_p = params.n_p;
    let delta = params.step_dt();
    let grid_len = srs.first().map(|s| s.grid.len()).unwrap_or(0);

    let mut outcomes: Vec<PlanOutcome> = Vec::with_capacity(cameras.len());
    let mut planned: Vec<Vec<VisionState>> = Vec::with_capacity(cameras.len());
    let mut covered_obstacles: BTreeSet<SceId> = BTreeSet::new();

    for c in 0..cameras.len() {
        // Covered safe cells of this rig's own region.
        let mut excluded_cells: BTreeSet<usize> = BTreeSet::new();
        if !planned.is_empty() {
            let window_req_threats = {
                let samples = (0..=n_p)
                    .map(|j| robot.config_at(t0 + j as f64 * delta).clone())
                    .collect();
                RobotTrajectory { samples, dt: delta }
            };
            let threats = srs[c].threat_cells(&window_req_threats, params.t_p, spawn);
            for t in threats {
                let seen = planned.iter().enumerate().any(|(p, states)| {
                    states
                        .iter()
                        .any(|&axis| in_fov(&cameras[p], axis, &t.position))
                });
                if seen {
                    excluded_cells.insert(t.cell);
                }
            }
        }

        let others: Vec<AssumedCamera> = (0..cameras.len())
            .filter(|&o| o != c)
            .map(|o| AssumedCamera {
                camera: &cameras[o],
                axes: planned
                    .get(o)
                    .cloned()
                    .unwrap_or_else(|| vec![current[o]; n_p]),
            })
            .collect();

        let req = PlanRequest {
            camera: &cameras[c],
            current: current[c],
            others: &others,
            sr: &srs[c],
            belief,
            robot,
            t0,
            params,
            belief_params,
            spawn,
            potential_id_offset: (c * grid_len) as u32,
            excluded_obstacles: &covered_obstacles,
            excluded_cells: &excluded_cells,
        };
        let outcome = search(&req)?;

        // Record the obstacles this camera's chosen trajectory covers, with
        // occlusion honored so a later camera still takes blocked targets.
        for sce in &belief.sces {
            let predicted = sce.state.position + sce.state.velocity * delta;
            let seen = outcome.chosen.states.iter().enumerate().any(|(j, &axis)| {
                let robot_j = robot.config_at(t0 + (j + 1) as f64 * delta);
                planning_sees(&cameras[c], axis, &predicted, robot_j)
            });
            if seen {
                covered_obstacles.insert(sce.id);
            }
        }
        planned.push(outcome.chosen.states.clone());
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
