//! Obstacle beliefs: the state confidence envelope (SCE) and its
//! observation-driven evolution.
//!
//! An SCE carries a 13-dimensional state (position, rotation vector,
//! velocity, angular velocity, certainty) plus four 3×3 covariance blocks.
//! A valid observation pins certainty to the sensor's accuracy; an invalid
//! one lets the position/velocity covariance diverge under a worst-case
//! acceleration prior and certainty decay accordingly.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::geometry::rodrigues_rotate;
use crate::{Error, Result};

/// Identifier of a tracked obstacle. Known obstacles come from observations;
/// potential ones are hypothesized at the safe-region boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SceId {
    Known(u32),
    /// Index of the safe-region cell the hypothesis was spawned from.
    Potential(u32),
}

impl fmt::Display for SceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceId::Known(i) => write!(f, "k{i}"),
            SceId::Potential(i) => write!(f, "p{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceKind {
    Known,
    Potential,
}

/// Kinematic state and certainty of one obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceState {
    /// Position, meters.
    pub position: Vector3<f64>,
    /// Orientation as a rotation vector, radians.
    pub rotation: Vector3<f64>,
    /// Velocity, m/s.
    pub velocity: Vector3<f64>,
    /// Angular velocity, rad/s.
    pub angular_velocity: Vector3<f64>,
    /// Certainty that the true state lies in the (r_p, r_o) neighborhood of
    /// this estimate, in [0, 1].
    pub certainty: f64,
}

impl SceState {
    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.rotation.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self.certainty.is_finite()
    }
}

/// Block covariance of an SCE: position, rotation, velocity and angular
/// velocity blocks, each symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct SceCovariance {
    pub position: Matrix3<f64>,
    pub rotation: Matrix3<f64>,
    pub velocity: Matrix3<f64>,
    pub angular_velocity: Matrix3<f64>,
}

impl SceCovariance {
    pub fn zeros() -> Self {
        Self {
            position: Matrix3::zeros(),
            rotation: Matrix3::zeros(),
            velocity: Matrix3::zeros(),
            angular_velocity: Matrix3::zeros(),
        }
    }

    /// Isotropic covariance from per-block standard deviations.
    pub fn isotropic(sd_position: f64, sd_rotation: f64, sd_velocity: f64, sd_angular: f64) -> Self {
        Self {
            position: Matrix3::identity() * sd_position * sd_position,
            rotation: Matrix3::identity() * sd_rotation * sd_rotation,
            velocity: Matrix3::identity() * sd_velocity * sd_velocity,
            angular_velocity: Matrix3::identity() * sd_angular * sd_angular,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            position: self.position * k,
            rotation: self.rotation * k,
            velocity: self.velocity * k,
            angular_velocity: self.angular_velocity * k,
        }
    }

    /// Checks each block for symmetry (1e-9) and positive semidefiniteness
    /// (eigenvalues ≥ −1e-9).
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [
            ("position", &self.position),
            ("rotation", &self.rotation),
            ("velocity", &self.velocity),
            ("angular_velocity", &self.angular_velocity),
        ] {
            validate_psd(m).map_err(|e| Error::contract(format!("{name} block: {e}")))?;
        }
        Ok(())
    }
}

fn validate_psd(m: &Matrix3<f64>) -> std::result::Result<(), String> {
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(format!("asymmetric at ({i},{j})"));
            }
        }
    }
    let eigs = m.symmetric_eigenvalues();
    if eigs.iter().any(|&l| l < -1e-9 * scale) {
        return Err(format!("negative eigenvalue {}", eigs.min()));
    }
    Ok(())
}

/// One sphere of an obstacle's collision geometry, in the obstacle frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereShape {
    pub offset: Vector3<f64>,
    pub radius: f64,
}

/// One obstacle belief: identity, kinematic state, covariance, and the
/// spheres realizing its collision geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Sce {
    pub id: SceId,
    pub kind: SceKind,
    pub state: SceState,
    pub cov: SceCovariance,
    pub geometry: Vec<SphereShape>,
}

impl Sce {
    pub fn validate(&self) -> Result<()> {
        if self.geometry.is_empty() {
            return Err(Error::contract("SCE needs at least one geometry sphere"));
        }
        if self.geometry.iter().any(|s| !(s.radius > 0.0)) {
            return Err(Error::contract("geometry sphere radii must be positive"));
        }
        if !self.state.is_finite() {
            return Err(Error::contract("SCE state must be finite"));
        }
        if !(0.0..=1.0).contains(&self.state.certainty) {
            return Err(Error::contract("certainty must lie in [0, 1]"));
        }
        self.cov.validate()
    }
}

/// The set of tracked obstacles at one instant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldBelief {
    pub sces: Vec<Sce>,
    pub timestamp: f64,
}

impl WorldBelief {
    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<SceId> = self.sces.iter().map(|s| s.id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.sces.len() {
            return Err(Error::contract("duplicate SCE ids in belief"));
        }
        for s in &self.sces {
            s.validate()?;
        }
        Ok(())
    }

    pub fn get(&self, id: SceId) -> Option<&Sce> {
        self.sces.iter().find(|s| s.id == id)
    }
}

/// Priors of the belief model.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefParams {
    /// Position neighborhood radius for the certainty definition, meters.
    pub r_p: f64,
    /// Orientation neighborhood radius, radians.
    pub r_o: f64,
    /// Worst-case obstacle acceleration, m/s².
    pub a_max: f64,
    /// Covariance of a single sensor measurement.
    pub sensor_cov: SceCovariance,
}

impl Default for BeliefParams {
    fn default() -> Self {
        Self {
            r_p: 0.10,
            r_o: 0.20,
            a_max: 2.0,
            sensor_cov: SceCovariance::isotropic(0.02, 0.05, 0.05, 0.1),
        }
    }
}

/// Wraps a rotation vector to the equivalent one with magnitude ≤ π.
pub fn normalize_rotation_vector(o: &Vector3<f64>) -> Vector3<f64> {
    let n = o.norm();
    if n <= std::f64::consts::PI || n < 1e-12 {
        return *o;
    }
    let mut wrapped = n.rem_euclid(std::f64::consts::TAU);
    if wrapped > std::f64::consts::PI {
        wrapped -= std::f64::consts::TAU;
    }
    o * (wrapped / n)
}

/// Constant-velocity state prediction over `dt` seconds. The rotation vector
/// is advanced by rotating it about the angular-velocity axis; certainty is
/// carried through unchanged (callers reassign it per observation outcome).
pub fn predict_state(s: &SceState, dt: f64) -> SceState {
    let omega_norm = s.angular_velocity.norm();
    let rotation = if omega_norm < 1e-9 {
        s.rotation
    } else {
        let axis = s.angular_velocity / omega_norm;
        let rotated = rodrigues_rotate(&s.rotation, &axis, omega_norm * dt)
            .expect("normalized axis is unit length");
        normalize_rotation_vector(&rotated)
    };
    SceState {
        position: s.position + s.velocity * dt,
        rotation,
        velocity: s.velocity,
        angular_velocity: s.angular_velocity,
        certainty: s.certainty,
    }
}

/// Covariance prediction over `dt` seconds. Observed obstacles keep their
/// covariance; unobserved ones diverge under the worst-case acceleration
/// prior: Σ_v grows by dt²·aaᵀ with a = a_max·[1 1 1]ᵀ, then Σ_x grows by
/// dt²·Σ_v (pre-update). Rotation blocks are held constant.
pub fn predict_covariance(
    c: &SceCovariance,
    observed: bool,
    dt: f64,
    params: &BeliefParams,
) -> SceCovariance {
    if observed {
        return c.clone();
    }
    let aat = Matrix3::from_element(params.a_max * params.a_max);
    SceCovariance {
        position: c.position + c.velocity * (dt * dt),
        rotation: c.rotation,
        velocity: c.velocity + aat * (dt * dt),
        angular_velocity: c.angular_velocity,
    }
}

const GAUSS_INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7; // 1/√(2π)

fn gauss_pdf(z: f64) -> f64 {
    GAUSS_INV_SQRT_TAU * (-0.5 * z * z).exp()
}

/// Adaptive Simpson quadrature with the usual Richardson acceptance test.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// P(‖X‖ < r) for X ~ N(0, σ²I) in 3 dimensions (chi distribution, 3 dof).
fn ball_mass_isotropic3(sigma2: f64, r: f64) -> f64 {
    let t = r / sigma2.sqrt();
    libm::erf(t / std::f64::consts::SQRT_2)
        - (2.0 / std::f64::consts::PI).sqrt() * t * (-0.5 * t * t).exp()
}

/// P(a·Z₁² + b·Z₂² < s²) for independent standard normals, a, b > 0.
fn ball_mass_2d(a: f64, b: f64, s2: f64) -> f64 {
    if s2 <= 0.0 {
        return 0.0;
    }
    if (a - b).abs() <= 1e-12 * a.max(b) {
        // Rayleigh closed form.
        return -(-0.5 * s2 / a).exp_m1();
    }
    let integrand = move |phi: f64| {
        let (sin_p, cos_p) = phi.sin_cos();
        let q = cos_p * cos_p / a + sin_p * sin_p / b;
        -(-0.5 * s2 * q).exp_m1() / q
    };
    // The result divides by √(ab), so the quadrature tolerance must scale
    // with it or tiny eigenvalues amplify the error.
    let prefactor = 2.0 / (std::f64::consts::PI * (a * b).sqrt());
    let integral = adaptive_simpson(
        &integrand,
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-10 / prefactor,
    );
    (prefactor * integral).clamp(0.0, 1.0)
}

/// Probability that a zero-mean Gaussian vector with covariance `cov` lands
/// inside the origin-centered ball of the given radius.
///
/// Computed deterministically in the covariance's principal-axis frame:
/// eigenvalues below radius²·1e-9 are treated as exact (their axes carry no
/// mass at the radius scale) and the remaining one-, two- or
/// three-dimensional ball mass is evaluated by adaptive quadrature with
/// analytic radial/degenerate reductions. Documented absolute accuracy is
/// 5e-3 against a 10⁶-sample Monte-Carlo reference; in practice the
/// quadrature is accurate to better than 1e-6.
pub fn neighborhood_probability(cov: &Matrix3<f64>, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::contract("radius must be positive"));
    }
    validate_psd(cov).map_err(|e| Error::contract(format!("covariance not PSD: {e}")))?;

    let eigs = cov.symmetric_eigenvalues();
    let mut lambda: Vec<f64> = eigs.iter().map(|&l| l.max(0.0)).collect();
    lambda.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));

    // Axes whose spread is negligible at the radius scale carry all their
    // mass well inside the ball; drop them from the integral.
    let floor = radius * radius * 1e-9;
    let active: Vec<f64> = lambda.into_iter().filter(|&l| l > floor).collect();
    let r2 = radius * radius;

    let p = match active.len() {
        0 => 1.0,
        1 => libm::erf(radius / (2.0 * active[0]).sqrt()),
        2 => ball_mass_2d(active[0], active[1], r2),
        _ => {
            let (l1, l2, l3) = (active[0], active[1], active[2]);
            if (l1 - l3).abs() <= 1e-12 * l1 {
                ball_mass_isotropic3(l1, radius)
            } else {
                // Integrate the largest axis explicitly; the remaining two
                // dimensions reduce to a planar ball mass.
                let z_max = (radius / l1.sqrt()).min(8.0);
                let integrand =
                    move |z: f64| gauss_pdf(z) * ball_mass_2d(l2, l3, r2 - l1 * z * z);
                2.0 * adaptive_simpson(&integrand, 0.0, z_max, 1e-9)
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Certainty after a valid observation with measurement covariance
/// `meas_cov`: the product of the position and orientation neighborhood
/// masses.
pub fn certainty_observed(meas_cov: &SceCovariance, params: &BeliefParams) -> Result<f64> {
    let p_pos = neighborhood_probability(&meas_cov.position, params.r_p)?;
    let p_rot = neighborhood_probability(&meas_cov.rotation, params.r_o)?;
    Ok(p_pos * p_rot)
}

/// Certainty after `dt` seconds without an observation: the position
/// neighborhood mass under Σ_x + dt²·Σ_v and the orientation mass under
/// dt²·Σ_ω. At dt = 0 the orientation factor is 1 by the zero-covariance
/// convention.
pub fn certainty_unobserved(cov: &SceCovariance, dt: f64, params: &BeliefParams) -> Result<f64> {
    let pos_cov = cov.position + cov.velocity * (dt * dt);
    let rot_cov = cov.angular_velocity * (dt * dt);
    let p_pos = neighborhood_probability(&pos_cov, params.r_p)?;
    let p_rot = neighborhood_probability(&rot_cov, params.r_o)?;
    Ok(p_pos * p_rot)
}

/// Advances every obstacle of `belief` by one step: constant-velocity state
/// prediction, covariance prediction per the observation flag, and certainty
/// reassignment (sensor-level when observed, decaying when not).
///
/// `flags` must contain an entry for every obstacle id.
pub fn evolve_known(
    belief: &WorldBelief,
    flags: &BTreeMap<SceId, bool>,
    dt: f64,
    params: &BeliefParams,
) -> Result<WorldBelief> {
    let mut sces = Vec::with_capacity(belief.sces.len());
    for sce in &belief.sces {
        let observed = *flags
            .get(&sce.id)
            .ok_or_else(|| Error::MissingFlag(sce.id.to_string()))?;
        let mut state = predict_state(&sce.state, dt);
        state.certainty = if observed {
            certainty_observed(&params.sensor_cov, params)?
        } else {
            certainty_unobserved(&sce.cov, dt, params)?
        };
        let cov = predict_covariance(&sce.cov, observed, dt, params);
        sces.push(Sce {
            id: sce.id,
            kind: sce.kind,
            state,
            cov,
            geometry: sce.geometry.clone(),
        });
    }
    Ok(WorldBelief {
        sces,
        timestamp: belief.timestamp + dt,
    })
}

/// Replaces an obstacle's state with a fresh measurement: kinematics from the
/// measurement (its certainty field is ignored), covariance reset to the
/// sensor covariance, certainty set to the sensor-level value.
pub fn fuse_measurement(sce: &Sce, meas: &SceState, params: &BeliefParams) -> Result<Sce> {
    if !meas.is_finite() {
        return Err(Error::contract("measurement must be finite"));
    }
    let mut state = *meas;
    state.certainty = certainty_observed(&params.sensor_cov, params)?;
    Ok(Sce {
        id: sce.id,
        kind: sce.kind,
        state,
        cov: params.sensor_cov.clone(),
        geometry: sce.geometry.clone(),
    })
}
