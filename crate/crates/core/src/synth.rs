//! Deterministic synthetic recordings for demos and test cohorts.
//!
//! Every DoF follows `mid + amplitude * c * sin(w t + phi)` with per-subject
//! random `c`, `w`, `phi`; link poses oscillate around the reference posture.
//! Scaling `amplitude` scales every excursion linearly.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{add, Quat};
use crate::ingest::{LinkPose, MotionFrame, Recording, TaskMark, DEFAULT_RATE_HZ};
use crate::skeleton::SkeletonDescriptor;

/// Largest per-DoF excursion at amplitude 1, as a fraction of the half range.
const MAX_DOF_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub subject_id: String,
    pub seed: u64,
    pub rate: f64,
}

struct Oscillator {
    gain: f64,
    omega: f64,
    phase: f64,
}

impl Oscillator {
    fn random(rng: &mut ChaCha8Rng, max_gain: f64) -> Self {
        Oscillator {
            gain: rng.gen_range(0.3..1.0) * max_gain,
            omega: TAU * rng.gen_range(0.1..0.6),
            phase: rng.gen_range(0.0..TAU),
        }
    }

    fn at(&self, t: f64) -> f64 {
        self.gain * (self.omega * t + self.phase).sin()
    }
}

impl SyntheticSubject {
    pub fn new(subject_id: impl Into<String>, seed: u64) -> Self {
        SyntheticSubject { subject_id: subject_id.into(), seed, rate: DEFAULT_RATE_HZ }
    }

    /// A recording sampled at `self.rate` over `[0, duration]` with four
    /// evenly spaced task marks.
    pub fn recording(&self, desc: &SkeletonDescriptor, ui_label: &str, amplitude: f64, duration: f64) -> Recording {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dof_osc: Vec<Vec<Oscillator>> = desc
            .joints
            .iter()
            .map(|j| {
                j.limits.iter().map(|l| Oscillator::random(&mut rng, MAX_DOF_FRACTION * 0.5 * l.width())).collect()
            })
            .collect();
        let link_osc: Vec<([Oscillator; 3], Oscillator, [f64; 3])> = desc
            .links
            .iter()
            .map(|_| {
                let pos = [(); 3].map(|_| Oscillator::random(&mut rng, 0.05));
                let rot = Oscillator::random(&mut rng, 0.3);
                let axis = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0)];
                (pos, rot, axis)
            })
            .collect();

        let n = (duration * self.rate).floor() as usize + 1;
        let mut rec = Recording::new(self.subject_id.clone(), ui_label);
        rec.nominal_rate = self.rate;
        rec.frames = (0..n)
            .map(|k| {
                let t = k as f64 / self.rate;
                let mut f = MotionFrame::at(t);
                for (joint, osc) in desc.joints.iter().zip(&dof_osc) {
                    let angles =
                        joint.limits.iter().zip(osc).map(|(l, o)| l.midpoint() + amplitude * o.at(t)).collect();
                    f.angles.insert(joint.joint_id.clone(), angles);
                }
                for (link, (pos, rot, axis)) in desc.links.iter().zip(&link_osc) {
                    let reference = desc.reference.get(link);
                    let (p0, q0) = reference.map_or(([0.0; 3], Quat::IDENTITY), |r| (r.position, r.orientation));
                    let dp = [pos[0].at(t), pos[1].at(t), pos[2].at(t)].map(|v| amplitude * v);
                    let q = (Quat::from_axis_angle(*axis, amplitude * rot.at(t)) * q0).normalized();
                    f.poses.insert(link.clone(), LinkPose { position: add(p0, dp), orientation: q });
                }
                f
            })
            .collect();
        let end = rec.frames.last().map_or(0.0, |f| f.t);
        rec.task_marks = ["start", "grasp", "place", "end"]
            .iter()
            .enumerate()
            .map(|(i, label)| TaskMark { t: end * i as f64 / 3.0, label: label.to_string() })
            .collect();
        rec
    }
}

/// A frame with every DoF at its range midpoint and every link at its
/// reference pose.
pub fn mid_rom_frame(desc: &SkeletonDescriptor, t: f64) -> MotionFrame {
    let mut f = MotionFrame::at(t);
    for joint in &desc.joints {
        f.angles.insert(joint.joint_id.clone(), joint.limits.iter().map(|l| l.midpoint()).collect());
    }
    for pose in &desc.reference.poses {
        f.poses.insert(pose.link_id.clone(), LinkPose { position: pose.position, orientation: pose.orientation });
    }
    f
}

/// Synthetic two-group cohort: `n` subjects, group A excursions `ratio`
/// times those of group B (same seeds, so the shapes match).
pub fn cohort(
    desc: &SkeletonDescriptor,
    n: usize,
    ratio: f64,
    duration: f64,
    labels: (&str, &str),
) -> (Vec<Recording>, Vec<Recording>) {
    (0..n)
        .map(|i| {
            let subj = SyntheticSubject::new(format!("s{:02}", i + 1), 1000 + i as u64);
            let b = subj.recording(desc, labels.1, 1.0, duration);
            let a = subj.recording(desc, labels.0, ratio, duration);
            (a, b)
        })
        .unzip()
}
