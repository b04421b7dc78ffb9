//! Observation synthesis: per-camera validity of each humanoid part (view
//! cone, range, occlusion by the robot and by other body spheres) and
//! noisy measurements drawn from a deterministic stream.
//!
//! The noise stream is consumed for every (camera, humanoid, part) triple in
//! fixed order each step, whether or not the observation is valid, so the
//! pointing policy never perturbs the noise other entities receive.

use nalgebra::{Matrix3, Vector3};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::belief::SceState;
use crate::belief::SceCovariance;
use crate::collision::{segment_point_distance, segment_segment_distance, RobotConfig};
use crate::geometry::{angular_distance, in_fov, VisionState};
use crate::safe_region::VisibilityMask;
use crate::sim::humanoid::{PartName, PartState};
use crate::sim::Scenario;

/// One synthesized observation attempt.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub camera: usize,
    pub humanoid: usize,
    pub part: PartName,
    pub valid: bool,
    /// Ground truth plus sensor noise; meaningful only when `valid`.
    pub measurement: SceState,
}

/// True iff the straight sight line from `from` to the sphere at `target`
/// (radius `target_radius`) is blocked by a robot link or by any other
/// sphere in `spheres` (the target itself is `skip`).
pub fn sight_blocked(
    from: &Vector3<f64>,
    target: &Vector3<f64>,
    target_radius: f64,
    robot: &RobotConfig,
    spheres: &[(Vector3<f64>, f64)],
    skip: Option<usize>,
) -> bool {
    for link in &robot.links {
        if segment_segment_distance(from, target, &link.a, &link.b) < link.radius {
            return true;
        }
    }
    let to_target = target - from;
    let dist = to_target.norm();
    if dist < 1e-12 {
        return false;
    }
    let dir = to_target / dist;
    let cutoff = dist - target_radius;
    for (i, (center, radius)) in spheres.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        // First intersection of the ray with this sphere, if any.
        let oc = center - from;
        let proj = oc.dot(&dir);
        let closest2 = oc.norm_squared() - proj * proj;
        let r2 = radius * radius;
        if closest2 >= r2 {
            continue;
        }
        let entry = proj - (r2 - closest2).sqrt();
        if entry >= 0.0 && entry < cutoff {
            return true;
        }
    }
    false
}

fn sample_block(
    block: &Matrix3<f64>,
    rng: &mut ChaCha8Rng,
) -> Vector3<f64> {
    let z = Vector3::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    );
    let scale = block.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale < 1e-30 {
        return Vector3::zeros();
    }
    match nalgebra::Cholesky::new(*block) {
        Some(chol) => chol.l() * z,
        // Semidefinite blocks fall back to per-axis standard deviations.
        None => Vector3::new(
            block[(0, 0)].max(0.0).sqrt() * z.x,
            block[(1, 1)].max(0.0).sqrt() * z.y,
            block[(2, 2)].max(0.0).sqrt() * z.z,
        ),
    }
}

fn noisy_measurement(
    truth: &PartState,
    cov: &SceCovariance,
    rng: &mut ChaCha8Rng,
) -> SceState {
    SceState {
        position: truth.position + sample_block(&cov.position, rng),
        rotation: truth.rotation + sample_block(&cov.rotation, rng),
        velocity: truth.velocity + sample_block(&cov.velocity, rng),
        angular_velocity: truth.angular_velocity + sample_block(&cov.angular_velocity, rng),
        certainty: 0.0,
    }
}

/// Flattened world spheres in (humanoid, part) order.
pub fn world_spheres(truth: &[[PartState; 5]]) -> Vec<(Vector3<f64>, f64)> {
    truth
        .iter()
        .flat_map(|parts| parts.iter().map(|p| (p.position, p.radius)))
        .collect()
}

/// Synthesizes this step's observations: camera-major, humanoid then part
/// minor. Noise is drawn unconditionally in that order.
pub fn observe(
    scenario: &Scenario,
    truth: &[[PartState; 5]],
    robot_now: &RobotConfig,
    axes: &[VisionState],
    rng: &mut ChaCha8Rng,
) -> Vec<Observation> {
    let spheres = world_spheres(truth);
    let mut out = Vec::with_capacity(scenario.cameras.len() * truth.len() * 5);
    for (c, rig) in scenario.cameras.iter().enumerate() {
        for (h, parts) in truth.iter().enumerate() {
            for part in parts.iter() {
                let measurement =
                    noisy_measurement(part, &scenario.belief_params.sensor_cov, rng);
                let sphere_index = h * 5 + part.name.index();
                let valid = in_fov(&rig.model, axes[c], &part.position)
                    && !sight_blocked(
                        &rig.model.origin,
                        &part.position,
                        part.radius,
                        robot_now,
                        &spheres,
                        Some(sphere_index),
                    );
                out.push(Observation {
                    camera: c,
                    humanoid: h,
                    part: part.name,
                    valid,
                    measurement,
                });
            }
        }
    }
    out
}

/// Executed visibility mask for one rig's safe region.
///
/// A cell is visible when any camera fully observes its ray: the rig's own
/// camera must hold the cell direction inside its view cone with the ray
/// clear of the robot and of humanoid spheres out to d_max; another camera
/// must see four sample points spread along the ray, each unoccluded.
pub fn executed_mask(
    scenario: &Scenario,
    rig: usize,
    axes: &[VisionState],
    robot_now: &RobotConfig,
    spheres: &[(Vector3<f64>, f64)],
    sr: &crate::safe_region::SafeRegion,
) -> VisibilityMask {
    const RAY_FRACTIONS: [f64; 4] = [0.125, 0.375, 0.625, 0.875];
    let own = &scenario.cameras[rig];
    let n = sr.grid.len();
    let mut visible = vec![false; n];
    for (k, vis) in visible.iter_mut().enumerate() {
        let center = sr.grid.center(k);
        // Own camera: direction in cone, whole ray unoccluded.
        if angular_distance(axes[rig], center) <= own.model.fov_half_angle {
            let far = sr.origin + sr.cell_unit(k) * sr.cap(k);
            let ray_clear = robot_now.links.iter().all(|l| {
                segment_segment_distance(&sr.origin, &far, &l.a, &l.b) >= l.radius
            }) && spheres.iter().all(|(c, r)| {
                segment_point_distance(c, &sr.origin, &far) >= *r
            });
            if ray_clear {
                *vis = true;
                continue;
            }
        }
        // Any other camera: sampled coverage of the ray.
        for (c, other) in scenario.cameras.iter().enumerate() {
            if c == rig {
                continue;
            }
            let covered = RAY_FRACTIONS.iter().all(|f| {
                let p = sr.origin + sr.cell_unit(k) * (sr.cap(k) * f);
                in_fov(&other.model, axes[c], &p)
                    && !sight_blocked(&other.model.origin, &p, 0.0, robot_now, spheres, None)
            });
            if covered {
                *vis = true;
                break;
            }
        }
    }
    VisibilityMask { visible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::Capsule;
    use crate::sim::scenario::tests::minimal_json;
    use crate::sim::scenario::ScenarioFile;
    use crate::sim::step_world;
    use rand::SeedableRng;

    fn scenario() -> Scenario {
        ScenarioFile::parse(&minimal_json().to_string())
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn part_on_axis_is_valid() {
        let scn = scenario();
        let truth = step_world(&scn, 0.0).unwrap();
        let robot = scn.robot.config_at(0.0).clone();
        let body = truth[0][0].position;
        let axis = crate::geometry::direction_to_vision_state(
            &body,
            &scn.cameras[0].model.origin,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        let obs = observe(&scn, &truth, &robot, &[axis], &mut rng);
        let body_obs = obs
            .iter()
            .find(|o| o.part == PartName::Body)
            .unwrap();
        assert!(body_obs.valid);
    }

    #[test]
    fn out_of_range_part_is_invalid() {
        let mut scn = scenario();
        // Shrink the range below the humanoid distance.
        scn.cameras[0].model.d_max = 0.5;
        let truth = step_world(&scn, 0.0).unwrap();
        let robot = scn.robot.config_at(0.0).clone();
        let body = truth[0][0].position;
        let axis = crate::geometry::direction_to_vision_state(
            &body,
            &scn.cameras[0].model.origin,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        let obs = observe(&scn, &truth, &robot, &[axis], &mut rng);
        assert!(obs.iter().all(|o| !o.valid));
    }

    #[test]
    fn robot_capsule_occludes_sight_line() {
        let from = Vector3::zeros();
        let target = Vector3::new(2.0, 0.0, 0.0);
        let blocking = RobotConfig {
            links: vec![Capsule {
                a: Vector3::new(1.0, 0.0, -0.5),
                b: Vector3::new(1.0, 0.0, 0.5),
                radius: 0.05,
            }],
        };
        assert!(sight_blocked(&from, &target, 0.1, &blocking, &[], None));
        let off_side = RobotConfig {
            links: vec![Capsule {
                a: Vector3::new(1.0, 0.4, -0.5),
                b: Vector3::new(1.0, 0.4, 0.5),
                radius: 0.05,
            }],
        };
        assert!(!sight_blocked(&from, &target, 0.1, &off_side, &[], None));
    }

    #[test]
    fn sphere_occludes_only_in_front() {
        let from = Vector3::zeros();
        let target = Vector3::new(2.0, 0.0, 0.0);
        let empty = RobotConfig {
            links: vec![Capsule {
                a: Vector3::new(0.0, 5.0, 0.0),
                b: Vector3::new(0.0, 5.0, 1.0),
                radius: 0.01,
            }],
        };
        // Blocking sphere halfway.
        let front = [(Vector3::new(1.0, 0.0, 0.0), 0.2)];
        assert!(sight_blocked(&from, &target, 0.1, &empty, &front, None));
        // Sphere behind the target does not block.
        let behind = [(Vector3::new(3.0, 0.0, 0.0), 0.2)];
        assert!(!sight_blocked(&from, &target, 0.1, &empty, &behind, None));
        // The target itself is skipped.
        let selfish = [(Vector3::new(2.0, 0.0, 0.0), 0.3)];
        assert!(!sight_blocked(&from, &target, 0.3, &empty, &selfish, Some(0)));
    }

    #[test]
    fn zero_noise_measurements_equal_ground_truth() {
        let mut scn = scenario();
        scn.belief_params.sensor_cov = SceCovariance::zeros();
        let truth = step_world(&scn, 0.3).unwrap();
        let robot = scn.robot.config_at(0.3).clone();
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        let obs = observe(&scn, &truth, &robot, &[VisionState::new(0.0, 0.0)], &mut rng);
        for o in obs {
            let t = truth[o.humanoid][o.part.index()];
            assert_eq!(o.measurement.position, t.position);
            assert_eq!(o.measurement.velocity, t.velocity);
        }
    }

    #[test]
    fn noise_stream_is_policy_independent() {
        let scn = scenario();
        let truth = step_world(&scn, 0.0).unwrap();
        let robot = scn.robot.config_at(0.0).clone();
        let mut rng_a = ChaCha8Rng::seed_from_u64(scn.seed);
        let mut rng_b = ChaCha8Rng::seed_from_u64(scn.seed);
        // Different axes, same seed: identical measurement noise.
        let a = observe(&scn, &truth, &robot, &[VisionState::new(0.0, 0.0)], &mut rng_a);
        let b = observe(&scn, &truth, &robot, &[VisionState::new(2.0, 0.4)], &mut rng_b);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.measurement.position, y.measurement.position);
        }
    }

    #[test]
    fn enlarging_fov_never_invalidates() {
        let scn = scenario();
        let truth = step_world(&scn, 0.0).unwrap();
        let robot = scn.robot.config_at(0.0).clone();
        let axis = VisionState::new(0.3, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        let narrow = observe(&scn, &truth, &robot, &[axis], &mut rng);
        let mut wide_scn = scenario();
        wide_scn.cameras[0].model.fov_half_angle = 1.4;
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        let wide = observe(&wide_scn, &truth, &robot, &[axis], &mut rng);
        for (n, w) in narrow.iter().zip(wide.iter()) {
            if n.valid {
                assert!(w.valid, "widening the cone lost {:?}", n.part);
            }
        }
    }
}
