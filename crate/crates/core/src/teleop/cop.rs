//! CoP-deadzone locomotion mapper of the motion-capture interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{MapperState, TwistCommand, TwistLimits};

type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn is_psd(m: &Mat2) -> bool {
    // Quadratic form of the symmetric part.
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    a >= 0.0 && d >= 0.0 && a * d - b * b >= -1e-12 * (a * d).abs().max(1.0)
}

/// Torque to velocity stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Admittance {
    /// `v = G·τ`.
    #[default]
    Static,
    /// `v ← v + dt/T·(G·τ − v)`, stepped once per call.
    FirstOrder { time_constant: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopMapperParams {
    pub stiffness: Mat2,
    pub damping: Mat2,
    pub admittance_gain: Mat2,
    #[serde(default)]
    pub admittance: Admittance,
    #[serde(default)]
    pub twist: TwistLimits,
}

impl Default for CopMapperParams {
    fn default() -> Self {
        CopMapperParams {
            stiffness: [[100.0, 0.0], [0.0, 100.0]],
            damping: [[5.0, 0.0], [0.0, 5.0]],
            admittance_gain: [[0.01, 0.0], [0.0, 0.01]],
            admittance: Admittance::Static,
            twist: TwistLimits::default(),
        }
    }
}

impl CopMapperParams {
    /// Parses and validates a TOML parameter table.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: CopMapperParams = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_psd(&self.stiffness) {
            return Err(Error::Config("stiffness matrix is not positive semidefinite".into()));
        }
        if !is_psd(&self.damping) {
            return Err(Error::Config("damping matrix is not positive semidefinite".into()));
        }
        if let Admittance::FirstOrder { time_constant, dt } = self.admittance {
            if !(time_constant > 0.0 && dt > 0.0) {
                return Err(Error::Config("admittance time constant and dt must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Signed distance past the deadzone boundary, zero inside.
fn shrink(d: f64, hw: f64) -> f64 {
    d.signum() * (d.abs() - hw).max(0.0)
}

/// Maps one CoP sample to a planar twist. The first call with no anchor
/// stores `cop` as the anchor.
pub fn cop_step(params: &CopMapperParams, state: &mut MapperState, cop: [f64; 2], cop_rate: [f64; 2]) -> TwistCommand {
    let anchor = *state.cop_anchor.get_or_insert(cop);
    let hw = state.deadzone_halfwidths;
    let excess = [shrink(cop[0] - anchor[0], hw[0]), shrink(cop[1] - anchor[1], hw[1])];
    let outside = excess != [0.0, 0.0];

    let k = mat_vec(&params.stiffness, excess);
    let b = if outside { mat_vec(&params.damping, cop_rate) } else { [0.0; 2] };
    let tau = [k[0] + b[0], k[1] + b[1]];
    let target = mat_vec(&params.admittance_gain, tau);

    let v = match params.admittance {
        Admittance::Static => target,
        Admittance::FirstOrder { time_constant, dt } => {
            let a = (dt / time_constant).min(1.0);
            let prev = state.admittance_velocity;
            [prev[0] + a * (target[0] - prev[0]), prev[1] + a * (target[1] - prev[1])]
        }
    };
    let lim = params.twist;
    let v = [v[0].clamp(-lim.vx, lim.vx), v[1].clamp(-lim.vy, lim.vy)];
    state.admittance_velocity = v;
    TwistCommand { vx: v[0], vy: v[1], wz: 0.0 }
}
