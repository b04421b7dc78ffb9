//! Directional math: pointing states on the unit sphere, a discretized
//! spherical grid, rotation-vector propagation, and field-of-view tests.
//!
//! Conventions: azimuth 0 lies along world +x, azimuth grows toward +y, and
//! elevation is positive toward +z. Azimuth wraps modulo 2π into [−π, π);
//! elevation is clamped to [−π/2, π/2].

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A camera pointing direction: the two perpendicular servo angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisionState {
    /// Azimuth in radians, normalized to [−π, π).
    pub azimuth: f64,
    /// Elevation in radians, in [−π/2, π/2].
    pub elevation: f64,
}

/// Wraps an angle into [−π, π).
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    if w < 0.0 {
        w += std::f64::consts::TAU;
    }
    w - std::f64::consts::PI
}

impl VisionState {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self {
            azimuth: wrap_angle(azimuth),
            elevation: elevation.clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        }
    }

    /// Unit direction vector for this pointing state.
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (sin_el, cos_el) = self.elevation.sin_cos();
        let (sin_az, cos_az) = self.azimuth.sin_cos();
        Vector3::new(cos_el * cos_az, cos_el * sin_az, sin_el)
    }

    /// Pointing state of a unit (or any nonzero) direction vector.
    pub fn from_vector(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::contract("cannot derive a direction from a zero vector"));
        }
        let azimuth = v.y.atan2(v.x);
        let elevation = (v.z / n).clamp(-1.0, 1.0).asin();
        Ok(Self::new(azimuth, elevation))
    }
}

/// Great-circle angle between two pointing directions, in [0, π].
///
/// Computed as atan2(‖u×v‖, u·v), which stays accurate for nearly parallel
/// and nearly antipodal directions.
pub fn angular_distance(a: VisionState, b: VisionState) -> f64 {
    let u = a.unit_vector();
    let v = b.unit_vector();
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Rotates `o` about the unit `axis` by `theta` radians.
pub fn rodrigues_rotate(o: &Vector3<f64>, axis: &Vector3<f64>, theta: f64) -> Result<Vector3<f64>> {
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::contract(format!(
            "rotation axis must be unit length, got norm {}",
            axis.norm()
        )));
    }
    let (sin_t, cos_t) = theta.sin_cos();
    Ok(o * cos_t + axis * ((1.0 - cos_t) * o.dot(axis)) + axis.cross(o) * sin_t)
}

/// Pointing state of `point` as seen from `origin`.
pub fn direction_to_vision_state(point: &Vector3<f64>, origin: &Vector3<f64>) -> Result<VisionState> {
    VisionState::from_vector(&(point - origin))
}

/// Camera rig parameters: mount position, view cone, range, and servo limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Mount position in world coordinates, meters.
    pub origin: Vector3<f64>,
    /// Half-angle of the view cone, radians, in (0, π/2).
    pub fov_half_angle: f64,
    /// Maximum sensing range, meters.
    pub d_max: f64,
    /// Maximum servo slew rate, radians per second.
    pub max_slew_rate: f64,
    /// Optional azimuth travel limits (min, max), radians.
    #[serde(default)]
    pub azimuth_limits: Option<(f64, f64)>,
    /// Optional elevation travel limits (min, max), radians.
    #[serde(default)]
    pub elevation_limits: Option<(f64, f64)>,
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::contract("fov_half_angle must lie in (0, π/2)"));
        }
        if !(self.d_max > 0.0) {
            return Err(Error::contract("d_max must be positive"));
        }
        if !(self.max_slew_rate > 0.0) {
            return Err(Error::contract("max_slew_rate must be positive"));
        }
        Ok(())
    }

    /// Clamps a pointing state into the servo travel limits, if any.
    pub fn clamp_to_limits(&self, s: VisionState) -> VisionState {
        let mut az = s.azimuth;
        let mut el = s.elevation;
        if let Some((lo, hi)) = self.azimuth_limits {
            az = az.clamp(lo, hi);
        }
        if let Some((lo, hi)) = self.elevation_limits {
            el = el.clamp(lo, hi);
        }
        VisionState::new(az, el)
    }
}

/// True iff `point` lies inside the view cone around `optical_axis` and
/// within sensing range.
pub fn in_fov(camera: &CameraModel, optical_axis: VisionState, point: &Vector3<f64>) -> bool {
    let offset = point - camera.origin;
    let dist = offset.norm();
    if dist > camera.d_max {
        return false;
    }
    if dist < 1e-12 {
        // A point at the mount itself has no direction; treat as visible.
        return true;
    }
    let dir = VisionState::from_vector(&offset).expect("nonzero offset");
    angular_distance(optical_axis, dir) <= camera.fov_half_angle
}

/// Moves `from` toward `to` along the great circle, traveling at most
/// `max_angle` radians. Reaches `to` exactly when it is within reach.
pub fn step_toward(from: VisionState, to: VisionState, max_angle: f64) -> VisionState {
    let d = angular_distance(from, to);
    if d <= max_angle {
        return to;
    }
    if max_angle <= 0.0 {
        return from;
    }
    let u = from.unit_vector();
    let v = to.unit_vector();
    let sin_d = d.sin();
    if sin_d < 1e-9 {
        // Antipodal: the great circle is ambiguous. Detour via a fixed
        // perpendicular so repeated calls still converge deterministically.
        let mut perp = u.cross(&Vector3::z());
        if perp.norm() < 1e-9 {
            perp = u.cross(&Vector3::x());
        }
        let w = perp.normalize();
        let stepped = u * max_angle.cos() + w * max_angle.sin();
        return VisionState::from_vector(&stepped).expect("unit result");
    }
    let s = max_angle;
    let stepped = u * ((d - s).sin() / sin_d) + v * (s.sin() / sin_d);
    VisionState::from_vector(&stepped).expect("unit result")
}

/// Equirectangular partition of the direction sphere into `n_az × n_el`
/// cells. Azimuth neighbors wrap; elevation rows clamp at the poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalGrid {
    pub n_az: usize,
    pub n_el: usize,
}

impl SphericalGrid {
    pub fn new(n_az: usize, n_el: usize) -> Result<Self> {
        if n_az == 0 || n_el == 0 {
            return Err(Error::contract("grid dimensions must be positive"));
        }
        Ok(Self { n_az, n_el })
    }

    /// Total cell count.
    pub fn len(&self) -> usize {
        self.n_az * self.n_el
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn delta_az(&self) -> f64 {
        std::f64::consts::TAU / self.n_az as f64
    }

    pub fn delta_el(&self) -> f64 {
        std::f64::consts::PI / self.n_el as f64
    }

    /// Upper bound on the angular distance from any cell center to any
    /// direction inside that cell (half the cell diagonal at the equator).
    pub fn cell_angular_radius(&self) -> f64 {
        0.5 * self.delta_az().hypot(self.delta_el())
    }

    fn index(&self, az_idx: usize, el_idx: usize) -> usize {
        el_idx * self.n_az + az_idx
    }

    /// Cell containing a pointing direction. Total: every direction maps to
    /// exactly one cell.
    pub fn cell_of(&self, s: VisionState) -> usize {
        let az = wrap_angle(s.azimuth);
        let az_idx = (((az + std::f64::consts::PI) / self.delta_az()) as usize).min(self.n_az - 1);
        let el = s.elevation + std::f64::consts::FRAC_PI_2;
        let el_idx = ((el / self.delta_el()) as usize).min(self.n_el - 1);
        self.index(az_idx, el_idx)
    }

    /// Center direction of cell `k`.
    pub fn center(&self, k: usize) -> VisionState {
        let az_idx = k % self.n_az;
        let el_idx = k / self.n_az;
        VisionState::new(
            -std::f64::consts::PI + (az_idx as f64 + 0.5) * self.delta_az(),
            -std::f64::consts::FRAC_PI_2 + (el_idx as f64 + 0.5) * self.delta_el(),
        )
    }

    /// Centers of all cells, in index order.
    pub fn centers(&self) -> Vec<VisionState> {
        (0..self.len()).map(|k| self.center(k)).collect()
    }

    /// 8-connected neighbors of cell `k`: azimuth wraps around, elevation
    /// rows beyond the poles are dropped.
    pub fn neighbors8(&self, k: usize) -> Vec<usize> {
        let az = (k % self.n_az) as isize;
        let el = (k / self.n_az) as isize;
        let mut out = Vec::with_capacity(8);
        for del in -1..=1_isize {
            let e = el + del;
            if e < 0 || e >= self.n_el as isize {
                continue;
            }
            for daz in -1..=1_isize {
                if del == 0 && daz == 0 {
                    continue;
                }
                let a = (az + daz).rem_euclid(self.n_az as isize);
                out.push(self.index(a as usize, e as usize));
            }
        }
        out
    }
}
