//! Input mapping for the two teleoperation front ends: the 6-axis 3D mouse
//! (moving average + dominant axis) and the CoP-deadzone locomotion mapper,
//! plus the button and arm-gesture mode machines.
//!
//! All mappers are deterministic: the full [`MapperState`] is serializable
//! and replaying the same inputs from the same state yields the same
//! commands.

mod cop;
mod gesture;
mod logs;
mod mouse;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use cop::{cop_step, Admittance, CopMapperParams};
pub use gesture::{gesture_mode_event, Gesture, GesturePhase};
pub use logs::{read_cop_log, read_mouse_log, write_command_log, CommandLogRow, CopSample};
pub use mouse::{mouse_mode_event, mouse_step, MouseConfig, MouseMapper, RawMouseSample};

/// Maximum Cartesian step per command in manipulation mode (m).
pub const MAX_TRANSLATION_STEP: f64 = 0.01;
/// Maximum rotation step per command in manipulation mode (0.5 deg, in rad).
pub const MAX_ROTATION_STEP: f64 = 0.5 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Locomotion,
    Manipulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionMode {
    Translation,
    Rotation,
}

/// Planar base velocity limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistLimits {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

impl Default for TwistLimits {
    fn default() -> Self {
        TwistLimits { vx: 0.20, vy: 0.20, wz: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwistCommand {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

/// End-effector displacement `[dx, dy, dz, rx, ry, rz]` with at most one
/// non-zero entry, at `dominant_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisplacementCommand {
    pub dx_d: [f64; 6],
    pub dominant_axis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapperCommand {
    Displacement(DisplacementCommand),
    Twist(TwistCommand),
}

impl MapperCommand {
    /// Six-slot view used by the command log: displacements as is, twists
    /// in the x, y and yaw slots.
    pub fn axes(&self) -> [f64; 6] {
        match self {
            MapperCommand::Displacement(d) => d.dx_d,
            MapperCommand::Twist(t) => [t.vx, t.vy, 0.0, 0.0, 0.0, t.wz],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MapperCommand::Displacement(_) => "disp",
            MapperCommand::Twist(_) => "twist",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperState {
    pub control_mode: ControlMode,
    pub motion_mode: MotionMode,
    /// Last normalized (and mode-masked) mouse samples, oldest first.
    pub window: VecDeque<[f64; 6]>,
    /// Left arm raised in manipulation; N-pose next returns to locomotion.
    pub exit_pending: bool,
    /// CoP at session start; set by the first CoP sample.
    pub cop_anchor: Option<[f64; 2]>,
    pub deadzone_halfwidths: [f64; 2],
    /// Output of the first-order admittance, when that variant is used.
    pub admittance_velocity: [f64; 2],
}

impl Default for MapperState {
    fn default() -> Self {
        MapperState {
            control_mode: ControlMode::Locomotion,
            motion_mode: MotionMode::Translation,
            window: VecDeque::new(),
            exit_pending: false,
            cop_anchor: None,
            deadzone_halfwidths: [0.03, 0.03],
            admittance_velocity: [0.0; 2],
        }
    }
}

impl MapperState {
    pub fn with_deadzone(halfwidths: [f64; 2]) -> Self {
        MapperState { deadzone_halfwidths: halfwidths, ..Default::default() }
    }
}
