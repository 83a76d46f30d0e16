//! Motion recordings: in-memory frame types, the line-delimited `.ergframes`
//! text format, and datagram streaming/replay.

mod format;
mod stream;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Quat, Vec3};

pub use format::{
    emit_recording, format_frame_line, parse_frame_line, parse_recording, read_recording, write_recording,
    ParseOptions, QUAT_REJECT_TOL, QUAT_RENORM_TOL,
};
pub use stream::{
    listen_stream, replay, send_recording, FrameSink, Speed, StreamOptions, StreamSession, StreamStats, END_OF_STREAM,
    MAX_DATAGRAM,
};

pub const DEFAULT_RATE_HZ: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPose {
    pub position: Vec3,
    pub orientation: Quat,
}

/// One timestamped sample of joint angles and link poses.
///
/// Optional channels are `None` when absent from the source; they are never
/// zero-filled.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionFrame {
    pub t: f64,
    pub angles: BTreeMap<String, Vec<f64>>,
    pub poses: BTreeMap<String, LinkPose>,
    pub velocities: Option<BTreeMap<String, Vec<f64>>>,
    pub accelerations: Option<BTreeMap<String, Vec<f64>>>,
    pub com: Option<Vec3>,
}

impl MotionFrame {
    pub fn at(t: f64) -> Self {
        MotionFrame { t, ..Default::default() }
    }

    pub fn joint_angles(&self, joint_id: &str) -> Result<&[f64]> {
        self.angles
            .get(joint_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::IncompleteFrame(format!("angles of joint `{joint_id}` at t={}", self.t)))
    }

    pub fn link_pose(&self, link_id: &str) -> Result<&LinkPose> {
        self.poses
            .get(link_id)
            .ok_or_else(|| Error::IncompleteFrame(format!("pose of link `{link_id}` at t={}", self.t)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMark {
    pub t: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub frames: Vec<MotionFrame>,
    pub nominal_rate: f64,
    pub subject_id: String,
    pub ui_label: String,
    pub task_marks: Vec<TaskMark>,
}

/// Which frames of a recording the session averages are taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisWindow {
    #[default]
    Full,
    /// From the first to the last task mark, inclusive.
    Marks,
}

impl Recording {
    pub fn new(subject_id: impl Into<String>, ui_label: impl Into<String>) -> Self {
        Recording {
            frames: Vec::new(),
            nominal_rate: DEFAULT_RATE_HZ,
            subject_id: subject_id.into(),
            ui_label: ui_label.into(),
            task_marks: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn window(&self, window: AnalysisWindow) -> Result<&[MotionFrame]> {
        match window {
            AnalysisWindow::Full => Ok(&self.frames),
            AnalysisWindow::Marks => {
                let (first, last) = match (self.task_marks.first(), self.task_marks.last()) {
                    (Some(a), Some(b)) if self.task_marks.len() >= 2 => (a.t.min(b.t), a.t.max(b.t)),
                    _ => {
                        return Err(Error::data(format!(
                            "recording `{}`/`{}` needs at least two task marks for a mark window",
                            self.subject_id, self.ui_label
                        )))
                    }
                };
                let lo = self.frames.partition_point(|f| f.t < first);
                let hi = self.frames.partition_point(|f| f.t <= last);
                Ok(&self.frames[lo..hi])
            }
        }
    }

    /// Durations between consecutive task marks.
    pub fn subtask_durations(&self) -> Vec<f64> {
        self.task_marks.windows(2).map(|w| w[1].t - w[0].t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mark_window_selects_inclusive_range() {
        let mut rec = Recording::new("s1", "mocap");
        rec.frames = (0..10).map(|k| MotionFrame::at(k as f64)).collect();
        assert!(rec.window(AnalysisWindow::Marks).is_err());
        rec.task_marks = vec![
            TaskMark { t: 2.0, label: "start".into() },
            TaskMark { t: 4.5, label: "grasp".into() },
            TaskMark { t: 6.0, label: "end".into() },
        ];
        let w = rec.window(AnalysisWindow::Marks).unwrap();
        assert_eq!(w.first().unwrap().t, 2.0);
        assert_eq!(w.last().unwrap().t, 6.0);
        assert_eq!(rec.subtask_durations(), vec![2.5, 1.5]);
        assert_eq!(rec.window(AnalysisWindow::Full).unwrap().len(), 10);
    }
}
