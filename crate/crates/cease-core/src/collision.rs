//! Collision predicates and the per-obstacle collision probability estimate.
//!
//! The robot is a chain of capsules; obstacles are unions of spheres carried
//! by an SCE. The probability estimate combines two boolean collision checks
//! (nominal motion and worst-case accelerated motion), observation validity,
//! and the obstacle's certainty into a value that is always 0, 1−u, or 1.

use nalgebra::Vector3;

use crate::belief::{BeliefParams, Sce, SceId, SceState, SphereShape};
use crate::geometry::rodrigues_rotate;
use crate::{Error, Result};

/// One robot link as a capsule: the segment [a, b] inflated by `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

/// Workspace realization of one robot configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub links: Vec<Capsule>,
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::contract("robot needs at least one link"));
        }
        if self.links.iter().any(|l| !(l.radius > 0.0)) {
            return Err(Error::contract("link radii must be positive"));
        }
        Ok(())
    }

    /// End-effector position: the far endpoint of the last link.
    pub fn end_effector(&self) -> Vector3<f64> {
        self.links.last().expect("validated non-empty").b
    }
}

/// A uniformly sampled robot trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotTrajectory {
    pub samples: Vec<RobotConfig>,
    pub dt: f64,
}

impl RobotTrajectory {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::contract("trajectory needs at least one sample"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::contract("trajectory sample spacing must be positive"));
        }
        for s in &self.samples {
            s.validate()?;
        }
        Ok(())
    }

    /// Sample index nearest to time `t`, clamped to the trajectory.
    pub fn index_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let i = (t / self.dt).round() as usize;
        i.min(self.samples.len() - 1)
    }

    pub fn config_at(&self, t: f64) -> &RobotConfig {
        &self.samples[self.index_at(t)]
    }

    /// The contiguous window of samples covering [t0, t0 + horizon].
    pub fn window(&self, t0: f64, horizon: f64) -> &[RobotConfig] {
        let lo = self.index_at(t0);
        let hi = self.index_at(t0 + horizon.max(0.0));
        &self.samples[lo..=hi]
    }
}

/// Distance from point `p` to the segment [a, b].
pub fn segment_point_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 < 1e-24 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance between two segments [p1, q1] and [p2, q2].
pub fn segment_segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    // Closest-point computation after Ericson, clamped to both segments.
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a < 1e-24 && e < 1e-24 {
        return (p1 - p2).norm();
    }
    if a < 1e-24 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e < 1e-24 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_ = if denom > 1e-24 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t_raw = (b * s_ + f) / e;
            let t_ = if t_raw < 0.0 {
                s_ = (-c / a).clamp(0.0, 1.0);
                0.0
            } else if t_raw > 1.0 {
                s_ = ((b - c) / a).clamp(0.0, 1.0);
                1.0
            } else {
                t_raw
            };
            s = s_;
            t = t_;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

/// World-frame centers of an obstacle's geometry spheres: local offsets
/// rotated by the state's rotation vector and translated by its position.
pub fn sphere_centers(state: &SceState, geometry: &[SphereShape]) -> Vec<(Vector3<f64>, f64)> {
    let angle = state.rotation.norm();
    geometry
        .iter()
        .map(|s| {
            let offset = if angle < 1e-12 {
                s.offset
            } else {
                let axis = state.rotation / angle;
                rodrigues_rotate(&s.offset, &axis, angle).expect("normalized axis")
            };
            (state.position + offset, s.radius)
        })
        .collect()
}

/// True iff any obstacle sphere intersects any robot capsule.
pub fn collides(state: &SceState, geometry: &[SphereShape], robot: &RobotConfig) -> bool {
    for (center, radius) in sphere_centers(state, geometry) {
        for link in &robot.links {
            if segment_point_distance(&center, &link.a, &link.b) < radius + link.radius {
                return true;
            }
        }
    }
    false
}

/// Velocity inflated along its own direction by the worst-case acceleration
/// term: v·(1 + a_max·t²/(2‖v‖)). A near-zero velocity has no direction to
/// accelerate along and is returned unchanged.
pub fn inflate_velocity(v: &Vector3<f64>, a_max: f64, t: f64) -> Vector3<f64> {
    let n = v.norm();
    if n < 1e-9 {
        return *v;
    }
    v * (1.0 + a_max * t * t / (2.0 * n))
}

/// The four-branch collision probability estimate:
///
/// p̂ = (1−l)·l′·(O−1)·(u−1) + l·(−O·u + 1)
///
/// where `l` is the nominal collision check, `l_acc` the accelerated one,
/// and `observed` the observation validity. The value is exactly 0, 1−u,
/// or 1.
pub fn cpe_value(l: bool, l_acc: bool, observed: bool, u: f64) -> f64 {
    let l = if l { 1.0 } else { 0.0 };
    let l_acc = if l_acc { 1.0 } else { 0.0 };
    let o = if observed { 1.0 } else { 0.0 };
    (1.0 - l) * l_acc * (o - 1.0) * (u - 1.0) + l * (-o * u + 1.0)
}

/// Collision probability estimate for one obstacle over one interval.
///
/// `sce` must already be advanced to the interval end; the accelerated check
/// displaces it by the extra distance a worst-case acceleration along its
/// velocity direction would have added over `dt`.
pub fn estimate_collision_probability(
    sce: &Sce,
    observed: bool,
    robot_next: &RobotConfig,
    dt: f64,
    params: &BeliefParams,
) -> f64 {
    let l = collides(&sce.state, &sce.geometry, robot_next);
    let v = sce.state.velocity;
    let v_acc = inflate_velocity(&v, params.a_max, dt);
    let mut accelerated = sce.state;
    accelerated.position += (v_acc - v) * dt;
    let l_acc = collides(&accelerated, &sce.geometry, robot_next);
    cpe_value(l, l_acc, observed, sce.state.certainty)
}

/// Independence combination of per-obstacle estimates: 1 − ∏(1 − p̂).
pub fn combine_collision_probabilities(per_sce: &[f64]) -> Result<f64> {
    let mut survive = 1.0;
    for &p in per_sce {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::contract(format!("probability {p} outside [0, 1]")));
        }
        survive *= 1.0 - p;
    }
    Ok(1.0 - survive)
}

/// Per-obstacle and aggregate collision probability for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CpeReport {
    pub per_sce: Vec<(SceId, f64)>,
    pub aggregate: f64,
}

impl CpeReport {
    /// Evaluates every obstacle against the next robot configuration.
    /// `sces` pairs each obstacle with its observation validity this step.
    pub fn evaluate<'a>(
        sces: impl Iterator<Item = (&'a Sce, bool)>,
        robot_next: &RobotConfig,
        dt: f64,
        params: &BeliefParams,
    ) -> Result<Self> {
        let mut per_sce = Vec::new();
        for (sce, observed) in sces {
            let p = estimate_collision_probability(sce, observed, robot_next, dt, params);
            per_sce.push((sce.id, p));
        }
        let aggregate = combine_collision_probabilities(
            &per_sce.iter().map(|(_, p)| *p).collect::<Vec<_>>(),
        )?;
        Ok(Self { per_sce, aggregate })
    }
}
