//! 3D-mouse motion-axis processor and button mode machine.

use serde::{Deserialize, Serialize};

use super::{
    ControlMode, DisplacementCommand, MapperCommand, MapperState, MotionMode, TwistCommand, TwistLimits,
    MAX_ROTATION_STEP, MAX_TRANSLATION_STEP,
};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawMouseSample {
    pub t: f64,
    /// Translational counts along x, y, z.
    pub dp_raw: [f64; 3],
    /// Rotational counts about x, y, z.
    pub de_raw: [f64; 3],
    /// Press edges, already debounced.
    pub left_button: bool,
    pub right_button: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MouseConfig {
    /// Raw count mapped to 100 %.
    pub fullscale: f64,
    /// Moving-average window length N.
    pub window: usize,
    pub max_translation_step: f64,
    pub max_rotation_step: f64,
    pub twist: TwistLimits,
}

/// Applies the button edges of `sample`: left toggles the control mode,
/// right toggles the motion mode in manipulation only. Any accepted toggle
/// clears the filter window.
pub fn mouse_mode_event(state: &MapperState, sample: &RawMouseSample) -> MapperState {
    let mut next = state.clone();
    if sample.left_button {
        next.control_mode = match next.control_mode {
            ControlMode::Locomotion => ControlMode::Manipulation,
            ControlMode::Manipulation => ControlMode::Locomotion,
        };
        next.window.clear();
    }
    if sample.right_button && next.control_mode == ControlMode::Manipulation {
        next.motion_mode = match next.motion_mode {
            MotionMode::Translation => MotionMode::Rotation,
            MotionMode::Rotation => MotionMode::Translation,
        };
        next.window.clear();
    }
    next
}

fn normalize(sample: &RawMouseSample, fullscale: f64) -> [f64; 6] {
    let raw =
        [sample.dp_raw[0], sample.dp_raw[1], sample.dp_raw[2], sample.de_raw[0], sample.de_raw[1], sample.de_raw[2]];
    raw.map(|c| (c / fullscale).clamp(-1.0, 1.0))
}

/// Index of the largest `|v|`, lowest index on ties.
pub(crate) fn dominant_axis(v: &[f64; 6]) -> usize {
    let mut best = 0;
    for j in 1..6 {
        if v[j].abs() > v[best].abs() {
            best = j;
        }
    }
    best
}

/// Per-axis mean of the window, summed oldest to newest.
pub(crate) fn window_mean(window: impl ExactSizeIterator<Item = [f64; 6]>) -> [f64; 6] {
    let n = window.len();
    if n == 0 {
        return [0.0; 6];
    }
    let mut sum = [0.0; 6];
    for s in window {
        for j in 0..6 {
            sum[j] += s[j];
        }
    }
    sum.map(|v| v / n as f64)
}

/// Motion stage of the mouse pipeline (buttons are not consulted).
pub fn mouse_step(cfg: &MouseConfig, state: &MapperState, sample: &RawMouseSample) -> (MapperState, MapperCommand) {
    let mut next = state.clone();
    let cmd = step_in_place(cfg, &mut next, sample);
    (next, cmd)
}

fn step_in_place(cfg: &MouseConfig, state: &mut MapperState, sample: &RawMouseSample) -> MapperCommand {
    let mut x = normalize(sample, cfg.fullscale);
    if state.control_mode == ControlMode::Manipulation {
        let masked = match state.motion_mode {
            MotionMode::Translation => 3..6,
            MotionMode::Rotation => 0..3,
        };
        x[masked].fill(0.0);
    }
    let cap = cfg.window.max(1);
    while state.window.len() >= cap {
        state.window.pop_front();
    }
    state.window.push_back(x);

    let mean = window_mean(state.window.iter().copied());
    let j = dominant_axis(&mean);
    let m = mean[j];
    match state.control_mode {
        ControlMode::Manipulation => {
            let step = if j < 3 { cfg.max_translation_step } else { cfg.max_rotation_step };
            let mut dx_d = [0.0; 6];
            dx_d[j] = m * step;
            MapperCommand::Displacement(DisplacementCommand { dx_d, dominant_axis: j })
        }
        ControlMode::Locomotion => {
            let mut tw = TwistCommand::default();
            match j {
                0 => tw.vx = m * cfg.twist.vx,
                1 => tw.vy = m * cfg.twist.vy,
                5 => tw.wz = m * cfg.twist.wz,
                _ => {}
            }
            MapperCommand::Twist(tw)
        }
    }
}

/// Stateful wrapper running buttons then motion for each sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MouseMapper {
    pub config: MouseConfig,
    pub state: MapperState,
}

impl Default for MouseConfig {
    fn default() -> Self {
        MouseConfig::DEFAULT
    }
}

impl MouseConfig {
    pub const DEFAULT: MouseConfig = MouseConfig {
        fullscale: 350.0,
        window: 10,
        max_translation_step: MAX_TRANSLATION_STEP,
        max_rotation_step: MAX_ROTATION_STEP,
        twist: TwistLimits { vx: 0.20, vy: 0.20, wz: 0.25 },
    };
}

impl MouseMapper {
    pub fn new(config: MouseConfig) -> Self {
        MouseMapper { config, state: MapperState::default() }
    }

    pub fn process(&mut self, sample: &RawMouseSample) -> MapperCommand {
        if sample.left_button || sample.right_button {
            self.state = mouse_mode_event(&self.state, sample);
        }
        step_in_place(&self.config, &mut self.state, sample)
    }
}
