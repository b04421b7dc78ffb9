//! Scripted humanoid obstacles: five spheres on a rigid frame with a
//! piecewise-linear base motion and sinusoidal one-joint arm swings.
//! Positions and velocities are closed-form in time.

use nalgebra::Vector3;

use crate::geometry::rodrigues_rotate;
use crate::{Error, Result};

/// The five tracked body parts, in id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartName {
    Body,
    RightArm,
    RightHand,
    LeftArm,
    LeftHand,
}

impl PartName {
    pub const ALL: [PartName; 5] = [
        PartName::Body,
        PartName::RightArm,
        PartName::RightHand,
        PartName::LeftArm,
        PartName::LeftHand,
    ];

    pub fn index(self) -> usize {
        match self {
            PartName::Body => 0,
            PartName::RightArm => 1,
            PartName::RightHand => 2,
            PartName::LeftArm => 3,
            PartName::LeftHand => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<PartName> {
        PartName::ALL.get(i).copied()
    }

    /// The short labels used in coverage tables.
    pub fn label(self) -> &'static str {
        match self {
            PartName::Body => "Body",
            PartName::RightArm => "RA",
            PartName::RightHand => "RH",
            PartName::LeftArm => "LA",
            PartName::LeftHand => "LH",
        }
    }
}

impl std::fmt::Display for PartName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One sphere of the humanoid: Body offsets are relative to the base,
/// arm/hand offsets relative to their shoulder pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartDef {
    pub offset: Vector3<f64>,
    pub radius: f64,
}

/// Sinusoidal joint swing: angle(t) = amplitude·sin(omega·t + phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swing {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Swing {
    fn angle(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).sin()
    }

    fn rate(&self, t: f64) -> f64 {
        self.amplitude * self.omega * (self.omega * t + self.phase).cos()
    }
}

/// Ground-truth state of one part at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartState {
    pub name: PartName,
    pub position: Vector3<f64>,
    /// Rotation vector of the part frame, radians.
    pub rotation: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct HumanoidScript {
    /// (time, base position) waypoints, strictly increasing in time.
    pub waypoints: Vec<(f64, Vector3<f64>)>,
    pub loop_motion: bool,
    /// Body, RA, RH, LA, LH.
    pub parts: [PartDef; 5],
    pub right_shoulder: Vector3<f64>,
    pub left_shoulder: Vector3<f64>,
    /// Unit axis the arms swing about, in the base frame.
    pub swing_axis: Vector3<f64>,
    pub right_swing: Swing,
    pub left_swing: Swing,
}

impl HumanoidScript {
    /// Base position and velocity at time `t` (piecewise linear).
    pub fn base_at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let first = self.waypoints.first().expect("validated nonempty");
        let last = self.waypoints.last().expect("validated nonempty");
        let period = last.0 - first.0;
        let t = if self.loop_motion && period > 0.0 {
            first.0 + (t - first.0).rem_euclid(period)
        } else {
            t
        };
        if t <= first.0 || self.waypoints.len() == 1 {
            return (first.1, Vector3::zeros());
        }
        if t >= last.0 {
            return (last.1, Vector3::zeros());
        }
        let hi = self
            .waypoints
            .iter()
            .position(|(wt, _)| *wt > t)
            .expect("t below last waypoint");
        let (t0, p0) = self.waypoints[hi - 1];
        let (t1, p1) = self.waypoints[hi];
        let span = t1 - t0;
        let w = (t - t0) / span;
        (p0.lerp(&p1, w), (p1 - p0) / span)
    }

    /// All five part states at time `t`.
    pub fn parts_at(&self, t: f64) -> [PartState; 5] {
        let (base, v_base) = self.base_at(t);
        let body = PartState {
            name: PartName::Body,
            position: base + self.parts[0].offset,
            rotation: Vector3::zeros(),
            velocity: v_base,
            angular_velocity: Vector3::zeros(),
            radius: self.parts[0].radius,
        };
        let arm = |shoulder: Vector3<f64>, swing: &Swing, def: &PartDef, name: PartName| {
            let phi = swing.angle(t);
            let phi_dot = swing.rate(t);
            let rotated = if phi.abs() < 1e-12 {
                def.offset
            } else {
                rodrigues_rotate(&def.offset, &self.swing_axis, phi).expect("unit swing axis")
            };
            let omega = self.swing_axis * phi_dot;
            PartState {
                name,
                position: base + shoulder + rotated,
                rotation: self.swing_axis * phi,
                velocity: v_base + omega.cross(&rotated),
                angular_velocity: omega,
                radius: def.radius,
            }
        };
        [
            body,
            arm(self.right_shoulder, &self.right_swing, &self.parts[1], PartName::RightArm),
            arm(self.right_shoulder, &self.right_swing, &self.parts[2], PartName::RightHand),
            arm(self.left_shoulder, &self.left_swing, &self.parts[3], PartName::LeftArm),
            arm(self.left_shoulder, &self.left_swing, &self.parts[4], PartName::LeftHand),
        ]
    }
}

/// Ground truth of every humanoid at time `t`; errors outside [0, duration].
pub fn step_world(
    scenario: &crate::sim::Scenario,
    t: f64,
) -> Result<Vec<[PartState; 5]>> {
    if t < 0.0 || t > scenario.duration + 1e-9 {
        return Err(Error::TimeOutOfRange {
            t,
            duration: scenario.duration,
        });
    }
    Ok(scenario.humanoids.iter().map(|h| h.parts_at(t)).collect())
}
