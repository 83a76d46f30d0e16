//! Arm-gesture control-mode machine of the motion-capture interface.
//!
//! Raising the right arm enters manipulation; leaving it takes the left arm
//! raised followed by a return to N-pose. Gesture classification happens
//! upstream.

use serde::{Deserialize, Serialize};

use super::{ControlMode, MapperState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    NPose,
    RightArmRaised,
    LeftArmRaised,
}

impl Gesture {
    pub const ALL: [Gesture; 3] = [Gesture::NPose, Gesture::RightArmRaised, Gesture::LeftArmRaised];
}

/// The machine's view of a [`MapperState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GesturePhase {
    Locomotion,
    Manipulation,
    ExitPending,
}

impl GesturePhase {
    pub const ALL: [GesturePhase; 3] =
        [GesturePhase::Locomotion, GesturePhase::Manipulation, GesturePhase::ExitPending];

    pub fn of(state: &MapperState) -> Self {
        match (state.control_mode, state.exit_pending) {
            (ControlMode::Locomotion, _) => GesturePhase::Locomotion,
            (ControlMode::Manipulation, false) => GesturePhase::Manipulation,
            (ControlMode::Manipulation, true) => GesturePhase::ExitPending,
        }
    }

    fn apply(self, state: &mut MapperState) {
        let (mode, pending) = match self {
            GesturePhase::Locomotion => (ControlMode::Locomotion, false),
            GesturePhase::Manipulation => (ControlMode::Manipulation, false),
            GesturePhase::ExitPending => (ControlMode::Manipulation, true),
        };
        if state.control_mode != mode {
            state.window.clear();
        }
        state.control_mode = mode;
        state.exit_pending = pending;
    }

    pub fn next(self, gesture: Gesture) -> GesturePhase {
        use Gesture::*;
        use GesturePhase::*;
        match (self, gesture) {
            (Locomotion, RightArmRaised) => Manipulation,
            (Manipulation, LeftArmRaised) => ExitPending,
            (ExitPending, NPose) => Locomotion,
            (phase, _) => phase,
        }
    }
}

pub fn gesture_mode_event(state: &MapperState, gesture: Gesture) -> MapperState {
    let mut next = state.clone();
    GesturePhase::of(state).next(gesture).apply(&mut next);
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_sequences() {
        let loco = MapperState::default();
        let s = gesture_mode_event(&loco, Gesture::RightArmRaised);
        assert_eq!(s.control_mode, ControlMode::Manipulation);

        let s2 = gesture_mode_event(&s, Gesture::NPose);
        assert_eq!(s2.control_mode, ControlMode::Manipulation);

        let s3 = gesture_mode_event(&gesture_mode_event(&s, Gesture::LeftArmRaised), Gesture::NPose);
        assert_eq!(s3.control_mode, ControlMode::Locomotion);
        assert!(!s3.exit_pending);
    }

    #[test]
    fn pending_survives_other_gestures() {
        let mut s = gesture_mode_event(&MapperState::default(), Gesture::RightArmRaised);
        s = gesture_mode_event(&s, Gesture::LeftArmRaised);
        s = gesture_mode_event(&s, Gesture::RightArmRaised);
        assert_eq!(GesturePhase::of(&s), GesturePhase::ExitPending);
    }
}
