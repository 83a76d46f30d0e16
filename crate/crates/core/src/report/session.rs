//! Session-level reduction of one recording into metric aggregates, plus the
//! qualitative session records (timings, NASA-TLX sheets).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AnalysisWindow, Recording};
use crate::metrics::{com_divergence, joints_usage, posture_comfort, rom_comfort};
use crate::skeleton::SkeletonDescriptor;
use crate::stats::{mean_std, time_average, trapezoid_integral, AggregateKind, MetricAggregate};

/// Tolerance on `t_exec = sum(subtasks)`.
pub const TIMING_TOL: f64 = 1e-6;

/// Time-averaged comfort per link and joint, and integrated usage and CoM
/// divergence, over the selected window of one recording.
pub fn session_aggregates(
    rec: &Recording,
    desc: &SkeletonDescriptor,
    window: AnalysisWindow,
    w_eta: f64,
) -> Result<Vec<MetricAggregate>> {
    let frames = rec.window(window)?;
    if frames.len() < 2 {
        return Err(Error::data(format!(
            "recording `{}`/`{}` has {} frame(s) in the analysis window, need 2",
            rec.subject_id,
            rec.ui_label,
            frames.len()
        )));
    }
    let agg = |target: &str, kind, value| MetricAggregate {
        subject_id: rec.subject_id.clone(),
        ui_label: rec.ui_label.clone(),
        target: target.to_string(),
        kind,
        value,
    };
    let mut out = Vec::new();

    let posture: Vec<_> = frames.iter().map(|f| posture_comfort(f, &desc.reference, w_eta)).collect::<Result<_>>()?;
    for (i, pose) in desc.reference.poses.iter().enumerate() {
        let series: Vec<_> = frames.iter().zip(&posture).map(|(f, s)| (f.t, s[i].zeta)).collect();
        out.push(agg(&pose.link_id, AggregateKind::PostureComfort, time_average(&series)?));
    }

    let rom: Vec<_> = frames.iter().map(|f| rom_comfort(f, desc)).collect::<Result<_>>()?;
    let usage = joints_usage(frames, desc)?;
    for (i, joint) in desc.joints.iter().enumerate() {
        let r: Vec<_> = frames.iter().zip(&rom).map(|(f, s)| (f.t, s[i].joint_normalized)).collect();
        out.push(agg(&joint.joint_id, AggregateKind::RomComfort, time_average(&r)?));
        let bar: Vec<_> = frames.iter().zip(&usage).map(|(f, s)| (f.t, s[i].psi_bar)).collect();
        out.push(agg(&joint.joint_id, AggregateKind::JointsUsage, trapezoid_integral(&bar)?));
        let step: Vec<_> = frames.iter().zip(&usage).map(|(f, s)| (f.t, s[i].psi)).collect();
        out.push(agg(&joint.joint_id, AggregateKind::JointsStep, trapezoid_integral(&step)?));
    }

    let com = com_divergence(frames, desc)?;
    let star: Vec<_> = frames.iter().zip(&com).map(|(f, c)| (f.t, c.delta_star)).collect();
    out.push(agg("com", AggregateKind::ComDivergence, trapezoid_integral(&star)?));
    let prev: Vec<_> = frames.iter().zip(&com).map(|(f, c)| (f.t, c.delta_prev)).collect();
    out.push(agg("com", AggregateKind::ComStep, trapezoid_integral(&prev)?));
    Ok(out)
}

/// Setup, learning and execution times of one session (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTiming")]
pub struct SessionTiming {
    pub t_setup: f64,
    pub t_learn: f64,
    pub subtask_durations: Vec<f64>,
    pub t_exec: f64,
}

#[derive(Deserialize)]
struct RawTiming {
    t_setup: f64,
    t_learn: f64,
    #[serde(default)]
    subtask_durations: Vec<f64>,
    t_exec: Option<f64>,
}

impl TryFrom<RawTiming> for SessionTiming {
    type Error = Error;

    fn try_from(r: RawTiming) -> Result<Self> {
        SessionTiming::new(r.t_setup, r.t_learn, r.subtask_durations, r.t_exec)
    }
}

impl SessionTiming {
    /// With subtasks present, `t_exec` defaults to their sum and must match
    /// it when given.
    pub fn new(t_setup: f64, t_learn: f64, subtask_durations: Vec<f64>, t_exec: Option<f64>) -> Result<Self> {
        let all = [t_setup, t_learn].into_iter().chain(subtask_durations.iter().copied()).chain(t_exec);
        for v in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::data(format!("durations must be finite and >= 0, got {v}")));
            }
        }
        let sum: f64 = subtask_durations.iter().sum();
        let t_exec = match (t_exec, subtask_durations.is_empty()) {
            (Some(t), false) if (t - sum).abs() > TIMING_TOL => {
                return Err(Error::data(format!("t_exec {t} differs from the subtask sum {sum}")));
            }
            (Some(t), _) => t,
            (None, false) => sum,
            (None, true) => return Err(Error::data("t_exec missing and no subtasks to derive it from")),
        };
        Ok(SessionTiming { t_setup, t_learn, subtask_durations, t_exec })
    }
}

/// One NASA-TLX sheet; every scale is an integer in `1..=21`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u8; 6]", into = "[u8; 6]")]
pub struct NasaTlxRecord {
    pub md: u8,
    pub pd: u8,
    pub td: u8,
    pub pe: u8,
    pub ef: u8,
    pub fr: u8,
}

pub const TLX_SCALES: [&str; 6] = ["MD", "PD", "TD", "PE", "EF", "FR"];

impl NasaTlxRecord {
    pub fn new(md: u8, pd: u8, td: u8, pe: u8, ef: u8, fr: u8) -> Result<Self> {
        Self::try_from([md, pd, td, pe, ef, fr])
    }

    pub fn scales(&self) -> [u8; 6] {
        [self.md, self.pd, self.td, self.pe, self.ef, self.fr]
    }
}

impl TryFrom<[u8; 6]> for NasaTlxRecord {
    type Error = Error;

    fn try_from(v: [u8; 6]) -> Result<Self> {
        if let Some(i) = v.iter().position(|s| !(1..=21).contains(s)) {
            return Err(Error::data(format!("TLX scale {} = {} outside 1..=21", TLX_SCALES[i], v[i])));
        }
        let [md, pd, td, pe, ef, fr] = v;
        Ok(NasaTlxRecord { md, pd, td, pe, ef, fr })
    }
}

impl From<NasaTlxRecord> for [u8; 6] {
    fn from(r: NasaTlxRecord) -> Self {
        r.scales()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl std::fmt::Display for MeanStd {
    /// `mean ± std` with two decimals.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} \u{b1} {:.2}", self.mean, self.std)
    }
}

/// Per-scale mean and sample standard deviation, in MD PD TD PE EF FR order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxSummary {
    pub n: usize,
    pub md: MeanStd,
    pub pd: MeanStd,
    pub td: MeanStd,
    pub pe: MeanStd,
    pub ef: MeanStd,
    pub fr: MeanStd,
}

impl TlxSummary {
    pub fn scales(&self) -> [MeanStd; 6] {
        [self.md, self.pd, self.td, self.pe, self.ef, self.fr]
    }
}

pub fn summarize_tlx(records: &[NasaTlxRecord]) -> Result<TlxSummary> {
    if records.is_empty() {
        return Err(Error::data("no TLX records to summarize"));
    }
    let col = |i: usize| -> Result<MeanStd> {
        let v: Vec<f64> = records.iter().map(|r| f64::from(r.scales()[i])).collect();
        let (mean, std) = mean_std(&v)?;
        Ok(MeanStd { mean, std })
    };
    Ok(TlxSummary { n: records.len(), md: col(0)?, pd: col(1)?, td: col(2)?, pe: col(3)?, ef: col(4)?, fr: col(5)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DEFAULT_W_ETA;
    use crate::synth::SyntheticSubject;

    #[test]
    fn timing_consistency() {
        let t = SessionTiming::new(10.0, 60.0, vec![1.5, 2.5], None).unwrap();
        assert_eq!(t.t_exec, 4.0);
        assert!(SessionTiming::new(10.0, 60.0, vec![1.5, 2.5], Some(4.0 + 5e-7)).is_ok());
        assert!(SessionTiming::new(10.0, 60.0, vec![1.5, 2.5], Some(4.1)).is_err());
        assert!(SessionTiming::new(-1.0, 60.0, vec![], Some(3.0)).is_err());
        assert!(SessionTiming::new(1.0, 60.0, vec![], None).is_err());
        let json = r#"{"t_setup":1,"t_learn":2,"subtask_durations":[1,1],"t_exec":5}"#;
        assert!(serde_json::from_str::<SessionTiming>(json).is_err());
    }

    #[test]
    fn tlx_examples() {
        let sevens = vec![NasaTlxRecord::new(7, 7, 7, 7, 7, 7).unwrap(); 3];
        let s = summarize_tlx(&sevens).unwrap();
        assert!(s.scales().iter().all(|m| *m == MeanStd { mean: 7.0, std: 0.0 }));
        assert_eq!(s.md.to_string(), "7.00 \u{b1} 0.00");

        let one = summarize_tlx(&[NasaTlxRecord::new(5, 1, 1, 1, 1, 1).unwrap()]).unwrap();
        assert_eq!(one.md, MeanStd { mean: 5.0, std: 0.0 });

        assert!(NasaTlxRecord::new(0, 1, 1, 1, 1, 1).is_err());
        assert!(NasaTlxRecord::new(1, 1, 1, 1, 1, 22).is_err());
        assert!(serde_json::from_str::<NasaTlxRecord>("[1,2,3,4,5,30]").is_err());
        assert!(summarize_tlx(&[]).is_err());
    }

    #[test]
    fn aggregates_cover_every_target() {
        let desc = SkeletonDescriptor::default_model();
        let rec = SyntheticSubject::new("s01", 3).recording(&desc, "mocap", 1.0, 2.0);
        let aggs = session_aggregates(&rec, &desc, AnalysisWindow::Full, DEFAULT_W_ETA).unwrap();
        let count = |k| aggs.iter().filter(|a| a.kind == k).count();
        assert_eq!(count(AggregateKind::PostureComfort), desc.reference.poses.len());
        assert_eq!(count(AggregateKind::RomComfort), desc.joints.len());
        assert_eq!(count(AggregateKind::JointsUsage), desc.joints.len());
        assert_eq!(count(AggregateKind::ComDivergence), 1);
        assert!(aggs.iter().all(|a| a.value.is_finite() && a.value >= 0.0));
        assert!(aggs.iter().filter(|a| a.kind == AggregateKind::RomComfort).all(|a| a.value <= 1.0));
    }
}
