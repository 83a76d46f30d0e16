//! Kinematic ergonomics metrics: posture comfort, RoM comfort, joints' usage
//! and CoM divergence, plus threshold scoring.
//!
//! Per-frame metrics are pure functions of one frame. Joints' usage and CoM
//! divergence need a session mean first; [`JointMeans`] and [`com_mean`] are
//! the first pass, the `*_frame` functions the second.

mod series;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Quat, Vec3};
use crate::ingest::MotionFrame;
use crate::skeleton::{com_position, DofLimit, ReferencePosture, SkeletonDescriptor};

pub use series::{metric_series, write_series_csv, MetricKind, SeriesRow};

/// Orientation scaling of the posture metric; maps `[0, 1]` onto `[0, pi]`.
pub const DEFAULT_W_ETA: f64 = PI;

/// Tolerated excursion beyond a RoM limit before a sample is flagged.
pub const ROM_SLACK_RAD: f64 = PI / 180.0;

/// Allowed deviation from unit norm for metric inputs.
pub const UNIT_QUAT_TOL: f64 = 1e-6;

/// Orientation distance `1 - <a, b>^2` between unit quaternions.
///
/// Lies in `[0, 1]`, is symmetric, and is zero exactly when `a` and `b`
/// encode the same rotation (including `b = -a`).
pub fn quat_distance(a: Quat, b: Quat) -> Result<f64> {
    let (na, nb) = (a.norm_squared(), b.norm_squared());
    for (q, n2) in [(a, na), (b, nb)] {
        if !((n2.sqrt() - 1.0).abs() <= UNIT_QUAT_TOL) {
            return Err(Error::contract(format!("quaternion {:?} is not unit (norm {})", q.to_array(), n2.sqrt())));
        }
    }
    // Dividing by the squared norms makes d(q, q) and d(q, -q) exactly zero.
    let dot = a.dot(b);
    Ok((1.0 - dot * dot / (na * nb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostureComfortSample {
    pub link_id: String,
    pub rho: f64,
    pub eta: f64,
    pub zeta: f64,
    pub w_eta: f64,
}

/// Displacement of every reference link from its ergonomic pose.
pub fn posture_comfort(
    frame: &MotionFrame,
    reference: &ReferencePosture,
    w_eta: f64,
) -> Result<Vec<PostureComfortSample>> {
    reference
        .poses
        .iter()
        .map(|r| {
            let pose = frame.link_pose(&r.link_id)?;
            let rho = distance(pose.position, r.position);
            let eta = quat_distance(pose.orientation, r.orientation)?;
            Ok(PostureComfortSample { link_id: r.link_id.clone(), rho, eta, zeta: rho + w_eta * eta, w_eta })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomComfortSample {
    pub joint_id: String,
    /// Normalized comfort of each DoF, 1 at mid-range and 0 at a limit.
    pub per_dof: Vec<f64>,
    pub joint_sum: f64,
    pub joint_normalized: f64,
    /// DoF indices whose raw angle lay beyond a limit by more than the slack.
    pub violations: Vec<usize>,
}

impl RomComfortSample {
    pub fn flagged(&self) -> bool {
        !self.violations.is_empty()
    }
}

/// Comfort of one DoF after clamping into its range; the flag is set when
/// the raw angle exceeded the range by more than [`ROM_SLACK_RAD`].
pub fn dof_comfort(theta: f64, limit: &DofLimit) -> (f64, bool) {
    let (lo, hi) = (limit.theta_min, limit.theta_max);
    let flagged = theta < lo - ROM_SLACK_RAD || theta > hi + ROM_SLACK_RAD;
    let th = theta.clamp(lo, hi);
    if th == lo || th == hi {
        return (0.0, flagged);
    }
    // 2·min(|θ−lo|, |θ−hi|)/|hi−lo| rewritten around the midpoint, exact there.
    let mid = 0.5 * (lo + hi);
    ((1.0 - 2.0 * (th - mid).abs() / (hi - lo).abs()).clamp(0.0, 1.0), flagged)
}

pub fn rom_comfort(frame: &MotionFrame, desc: &SkeletonDescriptor) -> Result<Vec<RomComfortSample>> {
    desc.joints
        .iter()
        .map(|joint| {
            let angles = frame.joint_angles(&joint.joint_id)?;
            check_len(&joint.joint_id, angles, joint.dof_count)?;
            let mut per_dof = Vec::with_capacity(joint.dof_count);
            let mut violations = Vec::new();
            for (j, (theta, lim)) in angles.iter().zip(&joint.limits).enumerate() {
                let (c, flagged) = dof_comfort(*theta, lim);
                per_dof.push(c);
                if flagged {
                    violations.push(j);
                }
            }
            let joint_sum: f64 = per_dof.iter().sum();
            Ok(RomComfortSample {
                joint_id: joint.joint_id.clone(),
                joint_normalized: joint_sum / joint.dof_count as f64,
                per_dof,
                joint_sum,
                violations,
            })
        })
        .collect()
}

fn check_len(joint_id: &str, angles: &[f64], n: usize) -> Result<()> {
    if angles.len() != n {
        return Err(Error::contract(format!("joint `{joint_id}` has {} angles, skeleton declares {n}", angles.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointUsageSample {
    pub joint_id: String,
    /// Summed absolute deviation from the session mean angle.
    pub psi_bar: f64,
    /// Summed absolute change since the previous frame.
    pub psi: f64,
}

/// Per-DoF mean angles over a window; the first pass of joints' usage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMeans {
    pub means: Vec<(String, Vec<f64>)>,
}

impl JointMeans {
    pub fn compute(frames: &[MotionFrame], desc: &SkeletonDescriptor) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::contract("joints' usage needs at least one frame"));
        }
        let mut sums: Vec<Vec<f64>> = desc.joints.iter().map(|j| vec![0.0; j.dof_count]).collect();
        for frame in frames {
            for (joint, sum) in desc.joints.iter().zip(sums.iter_mut()) {
                let angles = frame.joint_angles(&joint.joint_id)?;
                check_len(&joint.joint_id, angles, joint.dof_count)?;
                for (s, a) in sum.iter_mut().zip(angles) {
                    *s += a;
                }
            }
        }
        let n = frames.len() as f64;
        let means = desc
            .joints
            .iter()
            .zip(sums)
            .map(|(j, s)| (j.joint_id.clone(), s.into_iter().map(|v| v / n).collect()))
            .collect();
        Ok(JointMeans { means })
    }

    pub fn get(&self, joint_id: &str) -> Option<&[f64]> {
        self.means.iter().find(|(id, _)| id == joint_id).map(|(_, m)| m.as_slice())
    }
}

/// Second pass of joints' usage for one frame. `prev` is `None` at the
/// first frame, where `psi` is defined as zero.
pub fn joint_usage_frame(
    frame: &MotionFrame,
    prev: Option<&MotionFrame>,
    means: &JointMeans,
    desc: &SkeletonDescriptor,
) -> Result<Vec<JointUsageSample>> {
    desc.joints
        .iter()
        .map(|joint| {
            let id = &joint.joint_id;
            let angles = frame.joint_angles(id)?;
            check_len(id, angles, joint.dof_count)?;
            let mean = means.get(id).ok_or_else(|| Error::contract(format!("no mean for joint `{id}`")))?;
            let psi_bar = angles.iter().zip(mean).map(|(a, m)| (a - m).abs()).sum();
            let psi = match prev {
                Some(p) => {
                    let before = p.joint_angles(id)?;
                    check_len(id, before, joint.dof_count)?;
                    angles.iter().zip(before).map(|(a, b)| (a - b).abs()).sum()
                }
                None => 0.0,
            };
            Ok(JointUsageSample { joint_id: id.clone(), psi_bar, psi })
        })
        .collect()
}

/// Joints' usage for every frame of a window (two passes).
pub fn joints_usage(frames: &[MotionFrame], desc: &SkeletonDescriptor) -> Result<Vec<Vec<JointUsageSample>>> {
    let means = JointMeans::compute(frames, desc)?;
    frames
        .iter()
        .enumerate()
        .map(|(k, f)| joint_usage_frame(f, k.checked_sub(1).map(|p| &frames[p]), &means, desc))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComDivergenceSample {
    pub delta_star: f64,
    pub delta_prev: f64,
}

/// CoM of a frame: the stored value when present, otherwise estimated from
/// the segment parameters.
pub fn frame_com(frame: &MotionFrame, desc: &SkeletonDescriptor) -> Result<Vec3> {
    match frame.com {
        Some(c) => Ok(c),
        None => com_position(frame, desc),
    }
}

pub fn com_mean(coms: &[Vec3]) -> Result<Vec3> {
    if coms.is_empty() {
        return Err(Error::contract("CoM divergence needs at least one frame"));
    }
    let mut s = [0.0; 3];
    for c in coms {
        for i in 0..3 {
            s[i] += c[i];
        }
    }
    let n = coms.len() as f64;
    Ok(s.map(|v| v / n))
}

pub fn com_divergence(frames: &[MotionFrame], desc: &SkeletonDescriptor) -> Result<Vec<ComDivergenceSample>> {
    let coms = frames.iter().map(|f| frame_com(f, desc)).collect::<Result<Vec<_>>>()?;
    com_divergence_of(&coms)
}

/// CoM divergence of an already computed CoM trajectory.
pub fn com_divergence_of(coms: &[Vec3]) -> Result<Vec<ComDivergenceSample>> {
    let mean = com_mean(coms)?;
    Ok(coms
        .iter()
        .enumerate()
        .map(|(k, c)| ComDivergenceSample {
            delta_star: distance(*c, mean),
            delta_prev: if k == 0 { 0.0 } else { distance(*c, coms[k - 1]) },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComfortLevel {
    Comfortable,
    Caution,
    Uncomfortable,
}

/// Whether larger metric values are better (`Comfort`) or worse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSense {
    Comfort,
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub green: f64,
    pub yellow: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { green: 0.70, yellow: 0.50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub level: ComfortLevel,
    pub percent: f64,
}

/// Grades a normalized metric value. Comfort-type values at or above
/// `green` are comfortable, in `[yellow, green)` cautionary; divergence-type
/// values are graded on `1 - value`.
pub fn score(value: f64, thresholds: Thresholds, sense: MetricSense) -> Result<Score> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::contract(format!("score input {value} outside [0, 1]")));
    }
    let Thresholds { green, yellow } = thresholds;
    if !(0.0 <= yellow && yellow <= green && green <= 1.0) {
        return Err(Error::contract(format!("thresholds need 0 <= yellow <= green <= 1, got {yellow}/{green}")));
    }
    let comfort = match sense {
        MetricSense::Comfort => value,
        MetricSense::Divergence => 1.0 - value,
    };
    let level = if comfort >= green {
        ComfortLevel::Comfortable
    } else if comfort >= yellow {
        ComfortLevel::Caution
    } else {
        ComfortLevel::Uncomfortable
    };
    Ok(Score { level, percent: 100.0 * value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::LinkPose;
    use crate::skeleton::ReferencePose;
    use std::f64::consts::FRAC_PI_2;

    fn lim(lo_deg: f64, hi_deg: f64) -> DofLimit {
        DofLimit { joint_id: "j".into(), dof_index: 0, theta_min: lo_deg.to_radians(), theta_max: hi_deg.to_radians() }
    }

    fn z90() -> Quat {
        Quat::from_axis_angle([0.0, 0.0, 1.0], FRAC_PI_2)
    }

    #[test]
    fn quat_distance_examples() {
        let q = Quat::from_axis_angle([1.0, 2.0, 3.0], 0.7);
        assert_eq!(quat_distance(q, q).unwrap(), 0.0);
        assert_eq!(quat_distance(q, -q).unwrap(), 0.0);
        assert!((quat_distance(Quat::IDENTITY, z90()).unwrap() - 0.5).abs() < 1e-15);
        assert!(quat_distance(Quat::new(0.9, 0.0, 0.0, 0.0), q).is_err());
    }

    fn single_link_reference() -> ReferencePosture {
        ReferencePosture {
            poses: vec![ReferencePose {
                link_id: "hand".into(),
                position: [0.1, 0.2, 1.0],
                orientation: Quat::IDENTITY,
            }],
        }
    }

    fn posed(p: Vec3, q: Quat) -> MotionFrame {
        let mut f = MotionFrame::at(0.0);
        f.poses.insert("hand".into(), LinkPose { position: p, orientation: q });
        f
    }

    #[test]
    fn posture_comfort_examples() {
        let r = single_link_reference();
        let at_ref = posture_comfort(&posed([0.1, 0.2, 1.0], Quat::IDENTITY), &r, DEFAULT_W_ETA).unwrap();
        assert_eq!(at_ref[0].zeta, 0.0);

        let shifted = posture_comfort(&posed([0.3, 0.2, 1.0], Quat::IDENTITY), &r, DEFAULT_W_ETA).unwrap();
        assert!((shifted[0].zeta - 0.2).abs() < 1e-15);
        assert_eq!(shifted[0].eta, 0.0);

        let turned = posture_comfort(&posed([0.1, 0.2, 1.0], z90()), &r, DEFAULT_W_ETA).unwrap();
        assert!((turned[0].zeta - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(turned[0].zeta, turned[0].rho + turned[0].w_eta * turned[0].eta);

        let err = posture_comfort(&MotionFrame::at(0.0), &r, DEFAULT_W_ETA).unwrap_err();
        assert!(matches!(err, Error::IncompleteFrame(_)));
    }

    #[test]
    fn dof_comfort_examples() {
        let l = lim(-10.0, 30.0);
        assert_eq!(dof_comfort(l.midpoint(), &l).0, 1.0);
        assert_eq!(dof_comfort(l.theta_min, &l).0, 0.0);
        assert_eq!(dof_comfort(l.theta_max, &l).0, 0.0);
        let (c, flagged) = dof_comfort(20f64.to_radians(), &l);
        assert!((c - 0.5).abs() < 1e-12);
        assert!(!flagged);
    }

    #[test]
    fn out_of_range_is_clamped_and_flagged_past_slack() {
        let l = lim(0.0, 90.0);
        assert_eq!(dof_comfort(-0.5f64.to_radians(), &l), (0.0, false));
        assert_eq!(dof_comfort(-2f64.to_radians(), &l), (0.0, true));
        assert_eq!(dof_comfort(95f64.to_radians(), &l), (0.0, true));
    }

    #[test]
    fn rom_comfort_sums_and_normalizes() {
        let desc = SkeletonDescriptor::default_model();
        let frame = crate::synth::mid_rom_frame(&desc, 0.0);
        let s = rom_comfort(&frame, &desc).unwrap();
        for (sample, joint) in s.iter().zip(&desc.joints) {
            assert_eq!(sample.joint_sum, joint.dof_count as f64);
            assert_eq!(sample.joint_normalized, 1.0);
            assert!(!sample.flagged());
        }
    }

    fn knee_frames(values: &[f64]) -> (Vec<MotionFrame>, SkeletonDescriptor) {
        let mut desc = SkeletonDescriptor::default_model();
        desc.joints.retain(|j| j.joint_id == "r_knee");
        let frames = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let mut f = MotionFrame::at(k as f64);
                f.angles.insert("r_knee".into(), vec![*v]);
                f
            })
            .collect();
        (frames, desc)
    }

    #[test]
    fn joints_usage_hand_computed() {
        let (frames, desc) = knee_frames(&[0.0, 0.1, 0.3]);
        let u = joints_usage(&frames, &desc).unwrap();
        let psi_bar: Vec<f64> = u.iter().map(|s| s[0].psi_bar).collect();
        let psi: Vec<f64> = u.iter().map(|s| s[0].psi).collect();
        for (a, b) in psi_bar.iter().zip([0.4 / 3.0, 0.1 / 3.0, 0.5 / 3.0]) {
            assert!((a - b).abs() < 1e-15, "{psi_bar:?}");
        }
        for (a, b) in psi.iter().zip([0.0, 0.1, 0.2]) {
            assert!((a - b).abs() < 1e-15, "{psi:?}");
        }
    }

    #[test]
    fn joints_usage_two_dof_doubles() {
        let mut desc = SkeletonDescriptor::default_model();
        desc.joints.retain(|j| j.joint_id == "r_elbow");
        let frames: Vec<_> = [0.0, 0.1, 0.3]
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let mut f = MotionFrame::at(k as f64);
                f.angles.insert("r_elbow".into(), vec![*v, *v]);
                f
            })
            .collect();
        let (single, d1) = knee_frames(&[0.0, 0.1, 0.3]);
        let one = joints_usage(&single, &d1).unwrap();
        let two = joints_usage(&frames, &desc).unwrap();
        for (a, b) in one.iter().zip(&two) {
            assert_eq!(2.0 * a[0].psi_bar, b[0].psi_bar);
            assert_eq!(2.0 * a[0].psi, b[0].psi);
        }
    }

    #[test]
    fn constant_trajectory_has_zero_usage() {
        let (frames, desc) = knee_frames(&[0.4; 5]);
        for s in joints_usage(&frames, &desc).unwrap() {
            assert_eq!((s[0].psi_bar, s[0].psi), (0.0, 0.0));
        }
        assert!(joints_usage(&[], &desc).is_err());
    }

    #[test]
    fn com_divergence_hand_computed() {
        let coms = [[0.0, 0.0, 1.0], [0.3, 0.0, 1.0], [0.0, 0.4, 1.0]];
        let d = com_divergence_of(&coms).unwrap();
        // mean (0.1, 0.4/3, 1): |(-0.1, -0.4/3, 0)| = 1/6
        assert!((d[0].delta_star - 1.0 / 6.0).abs() < 1e-15);
        let prev: Vec<f64> = d.iter().map(|s| s.delta_prev).collect();
        assert_eq!(prev[0], 0.0);
        assert!((prev[1] - 0.3).abs() < 1e-15 && (prev[2] - 0.5).abs() < 1e-15);

        let still = com_divergence_of(&[[1.0, 2.0, 3.0]; 4]).unwrap();
        assert!(still.iter().all(|s| s.delta_star == 0.0 && s.delta_prev == 0.0));
    }

    #[test]
    fn com_divergence_uses_stored_com_first() {
        let desc = SkeletonDescriptor::default_model();
        let mut f = MotionFrame::at(0.0);
        f.com = Some([1.0, 1.0, 1.0]);
        assert_eq!(frame_com(&f, &desc).unwrap(), [1.0, 1.0, 1.0]);
        f.com = None;
        assert!(frame_com(&f, &desc).is_err());
    }

    #[test]
    fn score_examples() {
        let th = Thresholds::default();
        assert_eq!(score(0.7449, th, MetricSense::Comfort).unwrap().level, ComfortLevel::Comfortable);
        assert_eq!(score(0.4552, th, MetricSense::Comfort).unwrap().level, ComfortLevel::Uncomfortable);
        assert_eq!(score(0.70, th, MetricSense::Comfort).unwrap().level, ComfortLevel::Comfortable);
        assert_eq!(score(0.6, th, MetricSense::Comfort).unwrap().level, ComfortLevel::Caution);
        assert_eq!(score(0.1, th, MetricSense::Divergence).unwrap().level, ComfortLevel::Comfortable);
        assert_eq!(score(0.4, th, MetricSense::Divergence).unwrap().level, ComfortLevel::Caution);
        assert_eq!(score(0.9, th, MetricSense::Divergence).unwrap().level, ComfortLevel::Uncomfortable);
        assert!((score(0.7449, th, MetricSense::Comfort).unwrap().percent - 74.49).abs() < 1e-12);
        assert!(score(1.2, th, MetricSense::Comfort).is_err());
        assert!(score(-0.1, th, MetricSense::Comfort).is_err());
    }
}
