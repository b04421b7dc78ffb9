//! The safe region: a per-direction depth field bounding how close an
//! unseen, velocity-bounded adversary could possibly be to the camera rig.
//!
//! Every cell of a spherical grid stores the remaining guaranteed-clear
//! depth along that direction. Visible cells reset to the sensing range;
//! invisible cells shrink radially at the adversary's top speed and laterally
//! by inheriting the shallowest depth any neighbor could slide over from.
//! Cells whose boundary sits within striking distance of the robot
//! trajectory spawn worst-case "potential" obstacles aimed at the arm.

use std::sync::Arc;

use nalgebra::Vector3;

use crate::belief::{BeliefParams, Sce, SceId, SceKind, SceState, SphereShape};
use crate::collision::{segment_point_distance, RobotTrajectory};
use crate::geometry::{angular_distance, SphericalGrid, VisionState};
use crate::{Error, Result};

/// Why a cell's depth took its current value after the last evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionCause {
    /// Visible this step; reset to full depth.
    Reset,
    /// Radial contraction won.
    Contracted,
    /// Lateral expansion from the given cell won.
    ExpandedFrom(usize),
}

/// Per-cell visibility flags for one evolution step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMask {
    pub visible: Vec<bool>,
}

impl VisibilityMask {
    pub fn all(n: usize, visible: bool) -> Self {
        Self {
            visible: vec![visible; n],
        }
    }
}

/// Precomputed per-grid geometry shared by all clones of a safe region:
/// cell unit vectors, 8-connected rings, and per-cell neighbor lists sorted
/// by angular distance (for the lateral-expansion sweep).
#[derive(Debug)]
struct GridCache {
    units: Vec<Vector3<f64>>,
    ring8: Vec<Vec<u32>>,
    by_angle: Vec<Vec<(f64, u32)>>,
}

impl GridCache {
    fn build(grid: &SphericalGrid) -> Self {
        let n = grid.len();
        let centers: Vec<VisionState> = grid.centers();
        let units: Vec<Vector3<f64>> = centers.iter().map(|c| c.unit_vector()).collect();
        let ring8 = (0..n)
            .map(|k| grid.neighbors8(k).into_iter().map(|j| j as u32).collect())
            .collect();
        let by_angle = (0..n)
            .map(|j| {
                let mut row: Vec<(f64, u32)> = (0..n)
                    .map(|k| (angular_distance(centers[j], centers[k]), k as u32))
                    .collect();
                row.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
                row
            })
            .collect();
        Self {
            units,
            ring8,
            by_angle,
        }
    }
}

/// Depth field over a spherical grid centered at a camera rig.
#[derive(Debug, Clone)]
pub struct SafeRegion {
    pub grid: SphericalGrid,
    pub origin: Vector3<f64>,
    pub d_max: f64,
    pub v_max: f64,
    depth: Vec<f64>,
    /// Per-cell depth ceiling: d_max, shortened where static scene geometry
    /// (the floor) truncates the ray. Resets restore to the cap.
    caps: Vec<f64>,
    causes: Vec<EvolutionCause>,
    cache: Arc<GridCache>,
}

/// Parameters for spawning potential obstacles from the region boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SpawnParams {
    /// Radius of a hypothesized obstacle, meters.
    pub r_h: f64,
    /// Potential-obstacle covariance as a multiple of the sensor covariance.
    pub prior_scale: f64,
    /// Spawn at most this many obstacles per step, keeping the
    /// smallest-clearance cells.
    pub max_spawn: usize,
}

impl Default for SpawnParams {
    fn default() -> Self {
        Self {
            r_h: 0.15,
            prior_scale: 10.0,
            max_spawn: 16,
        }
    }
}

/// A cell whose boundary point threatens the robot trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatCell {
    pub cell: usize,
    /// Surface-to-surface clearance between the boundary point (inflated by
    /// r_h) and the nearest trajectory capsule, meters.
    pub clearance: f64,
    /// Boundary point: origin + depth·cell direction.
    pub position: Vector3<f64>,
    /// Closest point on the nearest capsule axis.
    pub aim: Vector3<f64>,
}

impl SafeRegion {
    /// Fresh region: every direction clear out to `d_max`.
    pub fn new(grid: SphericalGrid, origin: Vector3<f64>, d_max: f64, v_max: f64) -> Result<Self> {
        Self::with_floor(grid, origin, d_max, v_max, None)
    }

    /// Fresh region above a horizontal floor plane: rays that hit the floor
    /// are capped at the intersection, since nothing can approach from
    /// underground. Depth resets restore to the per-cell cap.
    pub fn with_floor(
        grid: SphericalGrid,
        origin: Vector3<f64>,
        d_max: f64,
        v_max: f64,
        floor_z: Option<f64>,
    ) -> Result<Self> {
        if !(d_max > 0.0) || !(v_max > 0.0) {
            return Err(Error::contract("d_max and v_max must be positive"));
        }
        if let Some(floor) = floor_z {
            if origin.z < floor {
                return Err(Error::contract("rig origin must sit above the floor"));
            }
        }
        let n = grid.len();
        let cache = Arc::new(GridCache::build(&grid));
        let caps: Vec<f64> = (0..n)
            .map(|k| match floor_z {
                Some(floor) if cache.units[k].z < -1e-12 => {
                    ((floor - origin.z) / cache.units[k].z).min(d_max)
                }
                _ => d_max,
            })
            .collect();
        Ok(Self {
            grid,
            origin,
            d_max,
            v_max,
            depth: caps.clone(),
            caps,
            causes: vec![EvolutionCause::Reset; n],
            cache,
        })
    }

    /// Region with an explicit depth field, e.g. restored from a dump.
    pub fn from_depths(
        grid: SphericalGrid,
        origin: Vector3<f64>,
        d_max: f64,
        v_max: f64,
        depth: Vec<f64>,
    ) -> Result<Self> {
        let mut sr = Self::new(grid, origin, d_max, v_max)?;
        if depth.len() != sr.depth.len() {
            return Err(Error::contract(format!(
                "depth field has {} cells, grid has {}",
                depth.len(),
                sr.depth.len()
            )));
        }
        if depth.iter().any(|d| !(0.0..=d_max).contains(d)) {
            return Err(Error::contract("depths must lie in [0, d_max]"));
        }
        sr.depth = depth;
        Ok(sr)
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    /// Per-cell reset ceiling.
    pub fn cap(&self, k: usize) -> f64 {
        self.caps[k]
    }

    pub fn causes(&self) -> &[EvolutionCause] {
        &self.causes
    }

    pub fn cell_unit(&self, k: usize) -> Vector3<f64> {
        self.cache.units[k]
    }

    /// Radial contraction candidates: depth shrinks by v_max·dt, floored at
    /// the origin.
    pub fn contract_candidates(&self, dt: f64) -> Vec<f64> {
        let shrink = self.v_max * dt;
        self.depth.iter().map(|d| (d - shrink).max(0.0)).collect()
    }

    /// Lateral expansion candidates: each cell inherits the minimum depth
    /// over its neighborhood. The neighborhood always contains the cell
    /// itself; for any positive v_max·dt it contains the 8-connected ring
    /// (an adversary at a shared cell boundary crosses in arbitrarily little
    /// time), plus every cell j with angular_distance(k, j)·depth[j] <
    /// v_max·dt (shallow cells reach farther around the sphere).
    pub fn expand_candidates(&self, dt: f64) -> Vec<f64> {
        self.expand_with_sources(dt).0
    }

    fn expand_with_sources(&self, dt: f64) -> (Vec<f64>, Vec<usize>) {
        let n = self.depth.len();
        let vdt = self.v_max * dt;
        let mut value: Vec<f64> = self.depth.clone();
        let mut source: Vec<usize> = (0..n).collect();
        if vdt <= 0.0 {
            return (value, source);
        }
        // 8-connected inheritance.
        for k in 0..n {
            for &j in &self.cache.ring8[k] {
                let d = self.depth[j as usize];
                if d < value[k] {
                    value[k] = d;
                    source[k] = j as usize;
                }
            }
        }
        // Long-range inheritance via the distance-scaled predicate. Sources
        // are processed shallow-first so the first source to reach a cell is
        // its minimum.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.depth[a]
                .partial_cmp(&self.depth[b])
                .expect("finite depths")
                .then(a.cmp(&b))
        });
        let mut reached = vec![false; n];
        let mut remaining = n;
        for &j in &order {
            if remaining == 0 {
                break;
            }
            let dj = self.depth[j];
            for &(ang, k) in &self.cache.by_angle[j] {
                if ang * dj >= vdt {
                    break;
                }
                let k = k as usize;
                if !reached[k] {
                    reached[k] = true;
                    remaining -= 1;
                    if dj < value[k] {
                        value[k] = dj;
                        source[k] = j;
                    }
                }
            }
        }
        (value, source)
    }

    /// One evolution step: visible cells reset to full depth, invisible
    /// cells take the minimum of radial contraction and lateral expansion.
    pub fn evolve(&self, mask: &VisibilityMask, dt: f64) -> Result<SafeRegion> {
        let n = self.depth.len();
        if mask.visible.len() != n {
            return Err(Error::contract(format!(
                "visibility mask has {} cells, grid has {n}",
                mask.visible.len()
            )));
        }
        if !(dt >= 0.0) {
            return Err(Error::contract("dt must be nonnegative"));
        }
        let contracted = self.contract_candidates(dt);
        let (expanded, sources) = self.expand_with_sources(dt);
        let mut next = self.clone();
        for k in 0..n {
            if mask.visible[k] {
                next.depth[k] = self.caps[k];
                next.causes[k] = EvolutionCause::Reset;
            } else if contracted[k] <= expanded[k] {
                next.depth[k] = contracted[k];
                next.causes[k] = EvolutionCause::Contracted;
            } else {
                next.depth[k] = expanded[k];
                next.causes[k] = EvolutionCause::ExpandedFrom(sources[k]);
            }
        }
        Ok(next)
    }

    /// Cells whose boundary point could reach the robot within `horizon`
    /// seconds at v_max, sorted by (clearance, cell index) and capped at
    /// `max_spawn`.
    pub fn threat_cells(
        &self,
        robot_traj: &RobotTrajectory,
        horizon: f64,
        spawn: &SpawnParams,
    ) -> Vec<ThreatCell> {
        if horizon <= 0.0 || robot_traj.samples.is_empty() {
            return Vec::new();
        }
        let budget = self.v_max * horizon;
        let configs = robot_traj.window(0.0, horizon);

        // Bounding sphere of the trajectory for a cheap per-cell lower bound.
        let mut centroid = Vector3::zeros();
        let mut count = 0.0;
        for c in configs {
            for l in &c.links {
                centroid += l.a + l.b;
                count += 2.0;
            }
        }
        centroid /= count;
        let mut r_bound: f64 = 0.0;
        for c in configs {
            for l in &c.links {
                r_bound = r_bound
                    .max((l.a - centroid).norm() + l.radius)
                    .max((l.b - centroid).norm() + l.radius);
            }
        }

        let mut threats = Vec::new();
        for k in 0..self.depth.len() {
            let pos = self.origin + self.cache.units[k] * self.depth[k];
            let lower_bound = (pos - centroid).norm() - r_bound - spawn.r_h;
            if lower_bound > budget {
                continue;
            }
            let mut clearance = f64::INFINITY;
            let mut aim = centroid;
            for c in configs {
                for l in &c.links {
                    let d = segment_point_distance(&pos, &l.a, &l.b) - l.radius - spawn.r_h;
                    if d < clearance {
                        clearance = d;
                        // Closest point on the capsule axis.
                        let ab = l.b - l.a;
                        let len2 = ab.norm_squared();
                        let t = if len2 < 1e-24 {
                            0.0
                        } else {
                            ((pos - l.a).dot(&ab) / len2).clamp(0.0, 1.0)
                        };
                        aim = l.a + ab * t;
                    }
                }
            }
            if clearance <= budget {
                threats.push(ThreatCell {
                    cell: k,
                    clearance,
                    position: pos,
                    aim,
                });
            }
        }
        threats.sort_by(|a, b| {
            a.clearance
                .partial_cmp(&b.clearance)
                .expect("finite clearances")
                .then(a.cell.cmp(&b.cell))
        });
        threats.truncate(spawn.max_spawn);
        threats
    }

    /// Worst-case obstacles at the region boundary, one per threatening
    /// cell, aimed at the nearest trajectory point at v_max, with zero
    /// certainty and an inflated prior covariance. Output is in cell order;
    /// ids are `Potential(id_offset + cell)`.
    pub fn spawn_potentials(
        &self,
        robot_traj: &RobotTrajectory,
        horizon: f64,
        params: &BeliefParams,
        spawn: &SpawnParams,
        id_offset: u32,
    ) -> Vec<Sce> {
        let mut threats = self.threat_cells(robot_traj, horizon, spawn);
        threats.sort_by_key(|t| t.cell);
        threats
            .into_iter()
            .map(|t| {
                let to_target = t.aim - t.position;
                let dir = if to_target.norm() < 1e-9 {
                    -self.cache.units[t.cell]
                } else {
                    to_target.normalize()
                };
                Sce {
                    id: SceId::Potential(id_offset + t.cell as u32),
                    kind: SceKind::Potential,
                    state: SceState {
                        position: t.position,
                        rotation: Vector3::zeros(),
                        velocity: dir * self.v_max,
                        angular_velocity: Vector3::zeros(),
                        certainty: 0.0,
                    },
                    cov: params.sensor_cov.scaled(spawn.prior_scale),
                    geometry: vec![SphereShape {
                        offset: Vector3::zeros(),
                        radius: spawn.r_h,
                    }],
                }
            })
            .collect()
    }

    /// (azimuth index, elevation index, depth) rows for the depth-field dump.
    pub fn depth_rows(&self) -> Vec<(usize, usize, f64)> {
        (0..self.depth.len())
            .map(|k| (k % self.grid.n_az, k / self.grid.n_az, self.depth[k]))
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn set_depth_for_test(&mut self, k: usize, d: f64) {
        self.depth[k] = d;
    }
}
