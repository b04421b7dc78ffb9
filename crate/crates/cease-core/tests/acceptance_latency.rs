//! Replanning-latency criterion, kept in its own test binary so the timing
//! is not skewed by the heavier simulation criteria running on sibling
//! threads (cargo executes test binaries one at a time).

use std::time::Instant;

use nalgebra::Vector3;

use cease_core::belief::{Sce, SceId, SceKind, SceState, SphereShape, WorldBelief};
use cease_core::geometry::{CameraModel, VisionState};
use cease_core::planner::plan_rig;
use cease_core::safe_region::{SafeRegion, VisibilityMask};
use cease_core::sim::load_scenario;

fn verdict(name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {name} failed: {detail}");
}

fn scenario_path(file: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(file)
}
// ---------------------------------------------------------------------------
// 8. Replanning latency
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_replan_latency() {
    let scenario = load_scenario(&scenario_path("exp1_arm_swing.json")).expect("scenario loads");
    assert_eq!(scenario.grid.len(), 512);
    let cameras: Vec<CameraModel> = scenario.cameras.iter().map(|c| c.model.clone()).collect();
    let axes: Vec<VisionState> = scenario.cameras.iter().map(|c| c.initial).collect();

    // Two tracked obstacles and partially contracted regions, as after a
    // stretch of closed-loop running.
    let bp = &scenario.belief_params;
    let mut belief = WorldBelief::default();
    for (i, position) in [Vector3::new(0.4, 0.3, 1.2), Vector3::new(0.4, 0.05, 0.95)]
        .iter()
        .enumerate()
    {
        belief.sces.push(Sce {
            id: SceId::Known(i as u32),
            kind: SceKind::Known,
            state: SceState {
                position: *position,
                rotation: Vector3::zeros(),
                velocity: Vector3::new(-0.2, -0.3, 0.0),
                angular_velocity: Vector3::zeros(),
                certainty: 0.9,
            },
            cov: bp.sensor_cov.scaled(3.0),
            geometry: vec![SphereShape {
                offset: Vector3::zeros(),
                radius: 0.1,
            }],
        });
    }
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
            .unwrap()
        })
        .collect();
    let dark = VisibilityMask::all(scenario.grid.len(), false);
    for sr in srs.iter_mut() {
        for _ in 0..30 {
            *sr = sr.evolve(&dark, scenario.dt).unwrap();
        }
    }

    let mut timings: Vec<f64> = (0..21)
        .map(|_| {
            let started = Instant::now();
            let outcomes = plan_rig(
                &cameras,
                &axes,
                &srs,
                &belief,
                &scenario.robot,
                1.0,
                &scenario.planner_params,
                bp,
                &scenario.spawn_params,
            )
            .expect("replanning succeeds");
            assert!(outcomes
                .iter()
                .all(|o| o.candidate_scores.len() <= scenario.planner_params.max_trajectories));
            started.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    timings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = timings[timings.len() / 2];
    verdict(
        "8 (replan latency)",
        median <= 100.0,
        &format!("median {median:.1} ms over {} replans (both cameras)", timings.len()),
    );
}
