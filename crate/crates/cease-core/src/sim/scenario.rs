//! Scenario files: a versioned JSON schema describing the world (cameras,
//! robot trajectory keyframes, scripted humanoids) plus every model
//! parameter, with defaults materialized at load time so a run is fully
//! reproducible from its manifest.
//!
//! Angles in scenario files are degrees (suffix `_deg`); everything internal
//! is radians. Robot keyframes hold sampled link endpoints and are resampled
//! to the simulation step by linear interpolation.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefParams, SceCovariance};
use crate::collision::{Capsule, RobotConfig, RobotTrajectory};
use crate::geometry::{CameraModel, SphericalGrid, VisionState};
use crate::planner::PlannerParams;
use crate::safe_region::SpawnParams;
use crate::sim::humanoid::{HumanoidScript, PartDef, Swing};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn d2r(deg: f64) -> f64 {
    deg.to_radians()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub duration_s: f64,
    pub dt_s: f64,
    pub seed: u64,
    /// Horizontal ground plane; rays below it are truncated.
    #[serde(default)]
    pub floor_z_m: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    pub priors: PriorSpec,
    #[serde(default)]
    pub belief: BeliefSpec,
    #[serde(default)]
    pub planner: PlannerSpec,
    #[serde(default)]
    pub spawn: SpawnSpec,
    pub cameras: Vec<CameraSpec>,
    pub robot: RobotSpec,
    pub humanoids: Vec<HumanoidSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_az: usize,
    pub n_el: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_az: 32, n_el: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Worst-case obstacle speed, m/s.
    pub v_max_m_s: f64,
    /// Worst-case obstacle acceleration, m/s².
    pub a_max_m_s2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefSpec {
    pub r_p_m: f64,
    pub r_o_deg: f64,
    pub sensor_sd_position_m: f64,
    pub sensor_sd_rotation_deg: f64,
    pub sensor_sd_velocity_m_s: f64,
    pub sensor_sd_angular_deg_s: f64,
}

impl Default for BeliefSpec {
    fn default() -> Self {
        let d = BeliefParams::default();
        Self {
            r_p_m: d.r_p,
            r_o_deg: d.r_o.to_degrees(),
            sensor_sd_position_m: 0.02,
            sensor_sd_rotation_deg: 0.05_f64.to_degrees(),
            sensor_sd_velocity_m_s: 0.05,
            sensor_sd_angular_deg_s: 0.1_f64.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerSpec {
    pub t_p_s: f64,
    pub n_p: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub sigma_t_deg: f64,
    pub max_trajectories: usize,
    pub k_safe: usize,
}

impl Default for PlannerSpec {
    fn default() -> Self {
        let d = PlannerParams::default();
        Self {
            t_p_s: d.t_p,
            n_p: d.n_p,
            gamma: d.gamma,
            alpha: d.alpha,
            sigma_t_deg: d.sigma_t.to_degrees(),
            max_trajectories: d.max_trajectories,
            k_safe: d.k_safe,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpawnSpec {
    pub r_h_m: f64,
    pub prior_scale: f64,
    pub max_spawn: usize,
}

impl Default for SpawnSpec {
    fn default() -> Self {
        let d = SpawnParams::default();
        Self {
            r_h_m: d.r_h,
            prior_scale: d.prior_scale,
            max_spawn: d.max_spawn,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisSpec {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl AxisSpec {
    pub fn to_vision_state(&self) -> VisionState {
        VisionState::new(d2r(self.azimuth_deg), d2r(self.elevation_deg))
    }
}

fn default_fov_half_angle_deg() -> f64 {
    36.0
}
fn default_d_max_m() -> f64 {
    3.0
}
fn default_slew_deg_s() -> f64 {
    180.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraSpec {
    pub origin: [f64; 3],
    #[serde(default = "default_fov_half_angle_deg")]
    pub fov_half_angle_deg: f64,
    #[serde(default = "default_d_max_m")]
    pub d_max_m: f64,
    #[serde(default = "default_slew_deg_s")]
    pub max_slew_rate_deg_s: f64,
    pub initial: AxisSpec,
    /// Pointing used by the fixed-camera policy; defaults to `initial`.
    #[serde(default)]
    pub fixed: Option<AxisSpec>,
    #[serde(default)]
    pub azimuth_limits_deg: Option<(f64, f64)>,
    #[serde(default)]
    pub elevation_limits_deg: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobotSpec {
    pub link_radius_m: Vec<f64>,
    pub keyframes: Vec<KeyframeSpec>,
    /// Repeat the keyframe cycle for the whole scenario duration.
    #[serde(default, rename = "loop")]
    pub loop_motion: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyframeSpec {
    pub t_s: f64,
    /// One [a, b] endpoint pair per link, meters.
    pub links: Vec<[[f64; 3]; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumanoidSpec {
    pub base_waypoints: Vec<WaypointSpec>,
    #[serde(default, rename = "loop")]
    pub loop_motion: bool,
    pub parts: PartsSpec,
    pub right_shoulder: [f64; 3],
    pub left_shoulder: [f64; 3],
    pub swing_axis: [f64; 3],
    pub right_swing: SwingSpec,
    pub left_swing: SwingSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaypointSpec {
    pub t_s: f64,
    pub position: [f64; 3],
}

/// The five body parts. Body offset is relative to the base; arm and hand
/// offsets are relative to their shoulder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartsSpec {
    pub body: PartSpec,
    pub ra: PartSpec,
    pub rh: PartSpec,
    pub la: PartSpec,
    pub lh: PartSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartSpec {
    pub offset: [f64; 3],
    pub radius_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwingSpec {
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

/// A loaded, validated scenario with all defaults materialized.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub grid: SphericalGrid,
    pub floor_z: Option<f64>,
    pub v_max: f64,
    pub belief_params: BeliefParams,
    pub planner_params: PlannerParams,
    pub spawn_params: SpawnParams,
    pub cameras: Vec<CameraRig>,
    pub robot: RobotTrajectory,
    pub humanoids: Vec<HumanoidScript>,
    /// The file contents with defaults filled in, echoed into run manifests.
    pub file: ScenarioFile,
}

#[derive(Debug, Clone)]
pub struct CameraRig {
    pub model: CameraModel,
    pub initial: VisionState,
    pub fixed: VisionState,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Robot trajectory restricted to [t0, t0 + horizon] at the simulation
    /// sample rate.
    pub fn robot_window(&self, t0: f64, horizon: f64) -> RobotTrajectory {
        RobotTrajectory {
            samples: self.robot.window(t0, horizon).to_vec(),
            dt: self.robot.dt,
        }
    }
}

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn scenario_err(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            scenario_err(format!(
                "parse error at line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(scenario_err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if !(self.dt_s > 0.0) {
            return Err(scenario_err("dt_s: must be positive"));
        }
        if self.duration_s < self.dt_s {
            return Err(scenario_err("duration_s: must be at least dt_s"));
        }
        if self.grid.n_az == 0 || self.grid.n_el == 0 {
            return Err(scenario_err("grid: n_az and n_el must be positive"));
        }
        if !(self.priors.v_max_m_s > 0.0) {
            return Err(scenario_err("priors.v_max_m_s: must be positive"));
        }
        if !(self.priors.a_max_m_s2 > 0.0) {
            return Err(scenario_err("priors.a_max_m_s2: must be positive"));
        }
        if !(self.belief.r_p_m > 0.0) || !(self.belief.r_o_deg > 0.0) {
            return Err(scenario_err("belief: r_p_m and r_o_deg must be positive"));
        }
        if self.cameras.is_empty() || self.cameras.len() > 2 {
            return Err(scenario_err(format!(
                "cameras: expected 1 or 2 rigs, got {}",
                self.cameras.len()
            )));
        }
        for (i, cam) in self.cameras.iter().enumerate() {
            if !(cam.fov_half_angle_deg > 0.0 && cam.fov_half_angle_deg < 90.0) {
                return Err(scenario_err(format!(
                    "cameras[{i}].fov_half_angle_deg: must lie in (0, 90)"
                )));
            }
            if !(cam.d_max_m > 0.0) {
                return Err(scenario_err(format!("cameras[{i}].d_max_m: must be positive")));
            }
            if !(cam.max_slew_rate_deg_s > 0.0) {
                return Err(scenario_err(format!(
                    "cameras[{i}].max_slew_rate_deg_s: must be positive"
                )));
            }
        }
        if self.robot.link_radius_m.is_empty() {
            return Err(scenario_err("robot.link_radius_m: need at least one link"));
        }
        if self.robot.link_radius_m.iter().any(|r| !(*r > 0.0)) {
            return Err(scenario_err("robot.link_radius_m: radii must be positive"));
        }
        if self.robot.keyframes.is_empty() {
            return Err(scenario_err("robot.keyframes: need at least one keyframe"));
        }
        let n_links = self.robot.link_radius_m.len();
        let mut prev_t = f64::NEG_INFINITY;
        for (i, kf) in self.robot.keyframes.iter().enumerate() {
            if kf.links.len() != n_links {
                return Err(scenario_err(format!(
                    "robot.keyframes[{i}].links: expected {n_links} links, got {}",
                    kf.links.len()
                )));
            }
            if kf.t_s <= prev_t {
                return Err(scenario_err(format!(
                    "robot.keyframes[{i}].t_s: keyframe times must strictly increase"
                )));
            }
            prev_t = kf.t_s;
        }
        if self.robot.keyframes[0].t_s != 0.0 {
            return Err(scenario_err("robot.keyframes[0].t_s: must be 0"));
        }
        for (h, hum) in self.humanoids.iter().enumerate() {
            if hum.base_waypoints.is_empty() {
                return Err(scenario_err(format!(
                    "humanoids[{h}].base_waypoints: need at least one waypoint"
                )));
            }
            let mut prev = f64::NEG_INFINITY;
            for (i, wp) in hum.base_waypoints.iter().enumerate() {
                if wp.t_s <= prev {
                    return Err(scenario_err(format!(
                        "humanoids[{h}].base_waypoints[{i}].t_s: times must strictly increase"
                    )));
                }
                prev = wp.t_s;
            }
            for (name, p) in [
                ("body", &hum.parts.body),
                ("ra", &hum.parts.ra),
                ("rh", &hum.parts.rh),
                ("la", &hum.parts.la),
                ("lh", &hum.parts.lh),
            ] {
                if !(p.radius_m > 0.0) {
                    return Err(scenario_err(format!(
                        "humanoids[{h}].parts.{name}.radius_m: must be positive"
                    )));
                }
            }
            if vec3(hum.swing_axis).norm() < 1e-9 {
                return Err(scenario_err(format!(
                    "humanoids[{h}].swing_axis: must be a nonzero vector"
                )));
            }
            for (name, s) in [("right_swing", &hum.right_swing), ("left_swing", &hum.left_swing)] {
                if s.amplitude_deg < 0.0 || s.amplitude_deg >= 180.0 {
                    return Err(scenario_err(format!(
                        "humanoids[{h}].{name}.amplitude_deg: must lie in [0, 180)"
                    )));
                }
                if s.frequency_hz < 0.0 {
                    return Err(scenario_err(format!(
                        "humanoids[{h}].{name}.frequency_hz: must be nonnegative"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validates and builds the runtime scenario.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;

        let grid = SphericalGrid::new(self.grid.n_az, self.grid.n_el)?;
        let b = &self.belief;
        let belief_params = BeliefParams {
            r_p: b.r_p_m,
            r_o: d2r(b.r_o_deg),
            a_max: self.priors.a_max_m_s2,
            sensor_cov: SceCovariance::isotropic(
                b.sensor_sd_position_m,
                d2r(b.sensor_sd_rotation_deg),
                b.sensor_sd_velocity_m_s,
                d2r(b.sensor_sd_angular_deg_s),
            ),
        };
        let p = &self.planner;
        let planner_params = PlannerParams {
            t_p: p.t_p_s,
            n_p: p.n_p,
            gamma: p.gamma,
            alpha: p.alpha,
            sigma_t: d2r(p.sigma_t_deg),
            max_trajectories: p.max_trajectories,
            k_safe: p.k_safe,
        };
        planner_params.validate()?;
        let spawn_params = SpawnParams {
            r_h: self.spawn.r_h_m,
            prior_scale: self.spawn.prior_scale,
            max_spawn: self.spawn.max_spawn,
        };

        let cameras = self
            .cameras
            .iter()
            .map(|c| {
                let model = CameraModel {
                    origin: vec3(c.origin),
                    fov_half_angle: d2r(c.fov_half_angle_deg),
                    d_max: c.d_max_m,
                    max_slew_rate: d2r(c.max_slew_rate_deg_s),
                    azimuth_limits: c.azimuth_limits_deg.map(|(a, b)| (d2r(a), d2r(b))),
                    elevation_limits: c.elevation_limits_deg.map(|(a, b)| (d2r(a), d2r(b))),
                };
                model.validate()?;
                Ok(CameraRig {
                    initial: c.initial.to_vision_state(),
                    fixed: c
                        .fixed
                        .as_ref()
                        .unwrap_or(&c.initial)
                        .to_vision_state(),
                    model,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let robot = self.resample_robot()?;
        let humanoids = self
            .humanoids
            .iter()
            .map(|h| HumanoidScript {
                waypoints: h
                    .base_waypoints
                    .iter()
                    .map(|w| (w.t_s, vec3(w.position)))
                    .collect(),
                loop_motion: h.loop_motion,
                parts: [
                    PartDef { offset: vec3(h.parts.body.offset), radius: h.parts.body.radius_m },
                    PartDef { offset: vec3(h.parts.ra.offset), radius: h.parts.ra.radius_m },
                    PartDef { offset: vec3(h.parts.rh.offset), radius: h.parts.rh.radius_m },
                    PartDef { offset: vec3(h.parts.la.offset), radius: h.parts.la.radius_m },
                    PartDef { offset: vec3(h.parts.lh.offset), radius: h.parts.lh.radius_m },
                ],
                right_shoulder: vec3(h.right_shoulder),
                left_shoulder: vec3(h.left_shoulder),
                swing_axis: vec3(h.swing_axis).normalize(),
                right_swing: Swing {
                    amplitude: d2r(h.right_swing.amplitude_deg),
                    omega: std::f64::consts::TAU * h.right_swing.frequency_hz,
                    phase: d2r(h.right_swing.phase_deg),
                },
                left_swing: Swing {
                    amplitude: d2r(h.left_swing.amplitude_deg),
                    omega: std::f64::consts::TAU * h.left_swing.frequency_hz,
                    phase: d2r(h.left_swing.phase_deg),
                },
            })
            .collect();

        Ok(Scenario {
            name: self.name.clone(),
            duration: self.duration_s,
            dt: self.dt_s,
            seed: self.seed,
            grid,
            floor_z: self.floor_z_m,
            v_max: self.priors.v_max_m_s,
            belief_params,
            planner_params,
            spawn_params,
            cameras,
            robot,
            humanoids,
            file: self.clone(),
        })
    }

    /// Piecewise-linear resampling of the keyframed link endpoints onto the
    /// simulation grid; extra samples cover the post-horizon lookahead.
    fn resample_robot(&self) -> Result<RobotTrajectory> {
        let kfs = &self.robot.keyframes;
        let period = kfs.last().expect("validated nonempty").t_s;
        let n_steps = (self.duration_s / self.dt_s).round() as usize;
        // Cover CPE lookahead (t + dt) and planning windows (t + t_p).
        let lookahead = ((self.planner.t_p_s / self.dt_s).ceil() as usize).max(1);
        let links_at = |t: f64| -> Vec<Capsule> {
            let t = if self.robot.loop_motion && period > 0.0 {
                t.rem_euclid(period)
            } else {
                t.min(period)
            };
            // Bracketing keyframes.
            let mut hi = kfs.len() - 1;
            for (i, kf) in kfs.iter().enumerate() {
                if kf.t_s >= t {
                    hi = i;
                    break;
                }
            }
            let (k0, k1, w) = if hi == 0 {
                (0, 0, 0.0)
            } else {
                let lo = hi - 1;
                let span = kfs[hi].t_s - kfs[lo].t_s;
                (lo, hi, ((t - kfs[lo].t_s) / span).clamp(0.0, 1.0))
            };
            kfs[k0]
                .links
                .iter()
                .zip(&kfs[k1].links)
                .zip(&self.robot.link_radius_m)
                .map(|((l0, l1), &radius)| Capsule {
                    a: vec3(l0[0]).lerp(&vec3(l1[0]), w),
                    b: vec3(l0[1]).lerp(&vec3(l1[1]), w),
                    radius,
                })
                .collect()
        };
        let samples: Vec<RobotConfig> = (0..=n_steps + lookahead)
            .map(|k| RobotConfig {
                links: links_at(k as f64 * self.dt_s),
            })
            .collect();
        let traj = RobotTrajectory {
            samples,
            dt: self.dt_s,
        };
        traj.validate()?;
        Ok(traj)
    }
}

/// Loads a scenario from a file path, with diagnostics naming the path.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| scenario_err(format!("{}: {e}", path.display())))?;
    let file = ScenarioFile::parse(&text)
        .map_err(|e| scenario_err(format!("{}: {e}", path.display())))?;
    file.build()
        .map_err(|e| scenario_err(format!("{}: {e}", path.display())))
}
