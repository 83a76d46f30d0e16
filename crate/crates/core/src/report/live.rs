//! Live score panel: per-frame scores from a frame stream.
//!
//! Joints' usage and CoM divergence need whole-session means, so the live
//! path substitutes the running mean up to the current frame. These values
//! are provisional; the batch pipeline is authoritative.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Vec3};
use crate::ingest::MotionFrame;
use crate::metrics::{frame_com, posture_comfort, rom_comfort, score, ComfortLevel, MetricSense, Thresholds};
use crate::skeleton::SkeletonDescriptor;
use crate::stats::{AggregateKind, MetricAggregate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub target: String,
    pub metric: AggregateKind,
    /// Normalized value that was graded.
    pub value: f64,
    pub level: ComfortLevel,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEvent {
    pub t: f64,
    pub frame_index: usize,
    /// Always true: usage and divergence entries use running means.
    pub provisional: bool,
    pub entries: Vec<PanelEntry>,
}

impl ScoreEvent {
    pub fn entry(&self, metric: AggregateKind, target: &str) -> Option<&PanelEntry> {
        self.entries.iter().find(|e| e.metric == metric && e.target == target)
    }
}

/// Trapezoid accumulator over a stream.
#[derive(Debug, Clone, Default)]
struct Integral {
    last: Option<(f64, f64)>,
    area: f64,
}

impl Integral {
    fn push(&mut self, t: f64, v: f64) {
        if let Some((t0, v0)) = self.last {
            self.area += (t - t0) * (v0 + v) / 2.0;
        }
        self.last = Some((t, v));
    }
}

#[derive(Debug, Clone)]
pub struct LiveScorer {
    desc: Arc<SkeletonDescriptor>,
    thresholds: Thresholds,
    w_eta: f64,
    n: usize,
    t0: Option<f64>,
    last_t: f64,
    angle_sums: Vec<Vec<f64>>,
    com_sum: Vec3,
    prev_angles: Option<Vec<Vec<f64>>>,
    prev_com: Option<Vec3>,
    scales: LiveScales,
    rom_widths: Vec<f64>,
    posture_int: Vec<Integral>,
    rom_int: Vec<Integral>,
    usage_int: Vec<Integral>,
    step_int: Vec<Integral>,
    com_int: Integral,
    com_step_int: Integral,
}

/// Full-scale values that map unbounded live metrics onto `[0, 1]`.
/// Joints' usage is scaled by the joint's summed RoM width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiveScales {
    /// Link displacement (m) added to `w_eta` for the posture full scale.
    pub rho: f64,
    /// CoM distance from its running mean (m).
    pub com: f64,
}

impl Default for LiveScales {
    fn default() -> Self {
        LiveScales { rho: 0.5, com: 0.25 }
    }
}

fn ratio(v: f64, full: f64) -> f64 {
    if full > 0.0 {
        (v / full).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

impl LiveScorer {
    pub fn new(desc: Arc<SkeletonDescriptor>, thresholds: Thresholds, w_eta: f64) -> Self {
        let nj = desc.joints.len();
        let nl = desc.reference.poses.len();
        let rom_widths = desc.joints.iter().map(|j| j.limits.iter().map(|l| l.width()).sum()).collect();
        LiveScorer {
            angle_sums: desc.joints.iter().map(|j| vec![0.0; j.dof_count]).collect(),
            desc,
            thresholds,
            w_eta,
            n: 0,
            t0: None,
            last_t: f64::NEG_INFINITY,
            com_sum: [0.0; 3],
            prev_angles: None,
            prev_com: None,
            scales: LiveScales::default(),
            rom_widths,
            posture_int: vec![Integral::default(); nl],
            rom_int: vec![Integral::default(); nj],
            usage_int: vec![Integral::default(); nj],
            step_int: vec![Integral::default(); nj],
            com_int: Integral::default(),
            com_step_int: Integral::default(),
        }
    }

    pub fn with_scales(mut self, scales: LiveScales) -> Self {
        self.scales = scales;
        self
    }

    pub fn frames_seen(&self) -> usize {
        self.n
    }

    /// Scores one frame; frames must arrive in time order.
    pub fn push(&mut self, frame: &MotionFrame) -> Result<ScoreEvent> {
        if !(frame.t > self.last_t) {
            return Err(Error::data(format!("live frame at t={} does not follow t={}", frame.t, self.last_t)));
        }
        let desc = Arc::clone(&self.desc);
        // Everything fallible first so a bad frame leaves the state untouched.
        let posture = posture_comfort(frame, &desc.reference, self.w_eta)?;
        let rom = rom_comfort(frame, &desc)?;
        let com = frame_com(frame, &desc)?;
        let angles: Vec<Vec<f64>> = desc
            .joints
            .iter()
            .map(|j| {
                let a = frame.joint_angles(&j.joint_id)?;
                if a.len() != j.dof_count {
                    return Err(Error::data(format!("joint `{}` has {} angles", j.joint_id, a.len())));
                }
                Ok(a.to_vec())
            })
            .collect::<Result<_>>()?;

        self.n += 1;
        self.last_t = frame.t;
        self.t0.get_or_insert(frame.t);
        let n = self.n as f64;
        let t = frame.t;
        let mut entries = Vec::new();
        let grade = |v: f64, sense| score(v, self.thresholds, sense);

        for (s, int) in posture.iter().zip(&mut self.posture_int) {
            int.push(t, s.zeta);
            let v = ratio(s.zeta, self.scales.rho + self.w_eta);
            let sc = grade(v, MetricSense::Divergence)?;
            entries.push(PanelEntry {
                target: s.link_id.clone(),
                metric: AggregateKind::PostureComfort,
                value: v,
                level: sc.level,
                percent: sc.percent,
            });
        }

        for (s, int) in rom.iter().zip(&mut self.rom_int) {
            int.push(t, s.joint_normalized);
            let sc = grade(s.joint_normalized, MetricSense::Comfort)?;
            entries.push(PanelEntry {
                target: s.joint_id.clone(),
                metric: AggregateKind::RomComfort,
                value: s.joint_normalized,
                level: sc.level,
                percent: sc.percent,
            });
        }

        let mut psi_bars = Vec::with_capacity(angles.len());
        for (i, a) in angles.iter().enumerate() {
            for (s, v) in self.angle_sums[i].iter_mut().zip(a) {
                *s += v;
            }
            let psi_bar: f64 = a.iter().zip(&self.angle_sums[i]).map(|(v, s)| (v - s / n).abs()).sum();
            let psi: f64 = match &self.prev_angles {
                Some(p) => a.iter().zip(&p[i]).map(|(v, w)| (v - w).abs()).sum(),
                None => 0.0,
            };
            self.usage_int[i].push(t, psi_bar);
            self.step_int[i].push(t, psi);
            psi_bars.push(psi_bar);
        }
        for ((j, psi_bar), width) in desc.joints.iter().zip(psi_bars).zip(&self.rom_widths) {
            let v = ratio(psi_bar, *width);
            let sc = grade(v, MetricSense::Divergence)?;
            entries.push(PanelEntry {
                target: j.joint_id.clone(),
                metric: AggregateKind::JointsUsage,
                value: v,
                level: sc.level,
                percent: sc.percent,
            });
        }

        for (s, c) in self.com_sum.iter_mut().zip(com) {
            *s += c;
        }
        let mean = self.com_sum.map(|s| s / n);
        let delta_star = distance(com, mean);
        let delta_prev = self.prev_com.map_or(0.0, |p| distance(com, p));
        self.com_int.push(t, delta_star);
        self.com_step_int.push(t, delta_prev);
        let v = ratio(delta_star, self.scales.com);
        let sc = grade(v, MetricSense::Divergence)?;
        entries.push(PanelEntry {
            target: "com".into(),
            metric: AggregateKind::ComDivergence,
            value: v,
            level: sc.level,
            percent: sc.percent,
        });

        self.prev_angles = Some(angles);
        self.prev_com = Some(com);
        Ok(ScoreEvent { t, frame_index: self.n - 1, provisional: true, entries })
    }

    /// Running counterparts of the batch session aggregates (un-normalized).
    pub fn aggregates(&self, subject_id: &str, ui_label: &str) -> Result<Vec<MetricAggregate>> {
        let span = match self.t0 {
            Some(t0) if self.n >= 2 => self.last_t - t0,
            _ => return Err(Error::data("running aggregates need at least two frames")),
        };
        let agg = |target: &str, kind, value| MetricAggregate {
            subject_id: subject_id.to_string(),
            ui_label: ui_label.to_string(),
            target: target.to_string(),
            kind,
            value,
        };
        let mut out = Vec::new();
        for (p, int) in self.desc.reference.poses.iter().zip(&self.posture_int) {
            out.push(agg(&p.link_id, AggregateKind::PostureComfort, int.area / span));
        }
        for (i, j) in self.desc.joints.iter().enumerate() {
            out.push(agg(&j.joint_id, AggregateKind::RomComfort, self.rom_int[i].area / span));
            out.push(agg(&j.joint_id, AggregateKind::JointsUsage, self.usage_int[i].area));
            out.push(agg(&j.joint_id, AggregateKind::JointsStep, self.step_int[i].area));
        }
        out.push(agg("com", AggregateKind::ComDivergence, self.com_int.area));
        out.push(agg("com", AggregateKind::ComStep, self.com_step_int.area));
        Ok(out)
    }
}

/// Scores every frame of `frames` in order.
pub fn live_scores(
    frames: impl IntoIterator<Item = Result<MotionFrame>>,
    desc: Arc<SkeletonDescriptor>,
    thresholds: Thresholds,
    w_eta: f64,
) -> impl Iterator<Item = Result<ScoreEvent>> {
    let mut scorer = LiveScorer::new(desc, thresholds, w_eta);
    frames.into_iter().map(move |f| f.and_then(|f| scorer.push(&f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::AnalysisWindow;
    use crate::metrics::DEFAULT_W_ETA;
    use crate::report::session_aggregates;
    use crate::synth::{mid_rom_frame, SyntheticSubject};

    fn scorer() -> LiveScorer {
        LiveScorer::new(Arc::new(SkeletonDescriptor::default_model()), Thresholds::default(), DEFAULT_W_ETA)
    }

    #[test]
    fn reference_posture_is_comfortable_everywhere() {
        let desc = SkeletonDescriptor::default_model();
        let mut s = scorer();
        for k in 0..5 {
            let ev = s.push(&mid_rom_frame(&desc, k as f64 / 60.0)).unwrap();
            assert!(ev.provisional);
            assert!(ev.entries.iter().all(|e| e.level == ComfortLevel::Comfortable), "{:?}", ev.entries);
        }
    }

    #[test]
    fn elbow_at_limit_turns_red_in_one_frame() {
        let desc = SkeletonDescriptor::default_model();
        let mut s = scorer();
        s.push(&mid_rom_frame(&desc, 0.0)).unwrap();
        let mut f = mid_rom_frame(&desc, 1.0 / 60.0);
        let elbow = desc.joint("r_elbow").unwrap();
        f.angles.insert("r_elbow".into(), elbow.limits.iter().map(|l| l.theta_max).collect());
        let ev = s.push(&f).unwrap();
        assert_eq!(ev.entry(AggregateKind::RomComfort, "r_elbow").unwrap().level, ComfortLevel::Uncomfortable);
        assert_eq!(ev.entry(AggregateKind::RomComfort, "l_elbow").unwrap().level, ComfortLevel::Comfortable);
    }

    #[test]
    fn out_of_order_frames_are_rejected() {
        let desc = SkeletonDescriptor::default_model();
        let mut s = scorer();
        s.push(&mid_rom_frame(&desc, 1.0)).unwrap();
        assert!(s.push(&mid_rom_frame(&desc, 1.0)).is_err());
        assert_eq!(s.frames_seen(), 1);
    }

    #[test]
    fn mean_free_aggregates_match_batch() {
        let desc = SkeletonDescriptor::default_model();
        let rec = SyntheticSubject::new("s", 5).recording(&desc, "mocap", 1.0, 3.0);
        let mut s = scorer();
        for f in &rec.frames {
            s.push(f).unwrap();
        }
        let live = s.aggregates("s", "mocap").unwrap();
        let batch = session_aggregates(&rec, &desc, AnalysisWindow::Full, DEFAULT_W_ETA).unwrap();
        for (l, b) in live.iter().zip(&batch) {
            assert_eq!((l.kind, &l.target), (b.kind, &b.target));
            if matches!(
                l.kind,
                AggregateKind::PostureComfort
                    | AggregateKind::RomComfort
                    | AggregateKind::JointsStep
                    | AggregateKind::ComStep
            ) {
                assert!((l.value - b.value).abs() <= 1e-9 * b.value.abs().max(1.0), "{l:?} vs {b:?}");
            }
        }
    }
}
