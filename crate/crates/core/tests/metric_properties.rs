mod common;

use ergokit::geometry::Quat;
use ergokit::ingest::{LinkPose, MotionFrame};
use ergokit::metrics::{
    com_divergence, com_mean, dof_comfort, frame_com, joints_usage, metric_series, posture_comfort, quat_distance,
    rom_comfort, JointMeans, MetricKind, DEFAULT_W_ETA,
};
use ergokit::skeleton::{com_position, validate_skeleton, DofLimit, SkeletonDescriptor, ViolationKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn quat() -> impl Strategy<Value = Quat> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("near zero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-3)
        .prop_map(|v| Quat::new(v[0], v[1], v[2], v[3]).normalized())
}

fn frames(seed: u64, n: usize) -> (SkeletonDescriptor, Vec<MotionFrame>) {
    let desc = SkeletonDescriptor::default_model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (0..n).map(|k| random_frame(&mut rng, &desc, k as f64 / 60.0)).collect();
    (desc, frames)
}

fn shifted(frame: &MotionFrame, v: [f64; 3]) -> MotionFrame {
    let mut f = frame.clone();
    for pose in f.poses.values_mut() {
        for (p, d) in pose.position.iter_mut().zip(v) {
            *p += d;
        }
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn quat_distance_symmetric_and_sign_blind(a in quat(), b in quat()) {
        let d = quat_distance(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - quat_distance(b, a).unwrap()).abs() <= 1e-12);
        prop_assert!((d - quat_distance(-a, b).unwrap()).abs() <= 1e-12);
        prop_assert!((d - quat_distance(a, -b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn quat_distance_zero_iff_aligned(a in quat(), b in quat()) {
        let d = quat_distance(a, b).unwrap();
        let aligned = (a.dot(b).abs() - 1.0).abs() <= 1e-9;
        prop_assert_eq!(d <= 1e-9, aligned);
    }

    #[test]
    fn zeta_grows_with_displacement(dir in prop::array::uniform3(-1.0f64..1.0), r1 in 0.0f64..1.0, dr in 1e-6f64..1.0) {
        let n = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let desc = SkeletonDescriptor::default_model();
        let reference = &desc.reference.poses[0];
        let at = |r: f64| {
            let mut f = MotionFrame::at(0.0);
            for p in &desc.reference.poses {
                f.poses.insert(p.link_id.clone(), LinkPose { position: p.position, orientation: p.orientation });
            }
            let pos = std::array::from_fn(|i| reference.position[i] + r * dir[i] / n);
            f.poses.insert(reference.link_id.clone(), LinkPose { position: pos, orientation: reference.orientation });
            posture_comfort(&f, &desc.reference, DEFAULT_W_ETA).unwrap()[0].zeta
        };
        prop_assert!(at(r1 + dr) > at(r1));
    }

    #[test]
    fn rom_comfort_peaks_at_midpoint_and_is_symmetric(lo in -3.0f64..0.0, w in 0.05f64..3.0, frac in 0.0f64..1.0) {
        let limit = DofLimit { joint_id: "j".into(), dof_index: 0, theta_min: lo, theta_max: lo + w };
        let mid = limit.midpoint();
        prop_assert_eq!(dof_comfort(mid, &limit).0, 1.0);
        let delta = frac * w / 2.0;
        let (up, _) = dof_comfort(mid + delta, &limit);
        let (down, _) = dof_comfort(mid - delta, &limit);
        prop_assert!((up - down).abs() <= 1e-12);
        prop_assert!(up <= 1.0);
        // Linear in the distance from the midpoint.
        prop_assert!((up - (1.0 - 2.0 * delta / w)).abs() <= 1e-12);
    }

    #[test]
    fn deviations_from_mean_sum_to_zero(seed in any::<u64>(), n in 2usize..40) {
        let (desc, frames) = frames(seed, n);
        let means = JointMeans::compute(&frames, &desc).unwrap();
        for j in &desc.joints {
            let m = means.get(&j.joint_id).unwrap();
            for (d, md) in m.iter().enumerate() {
                let s: f64 = frames.iter().map(|f| f.angles[&j.joint_id][d] - md).sum();
                prop_assert!(s.abs() <= 1e-9, "{} dof {}: {}", j.joint_id, d, s);
            }
        }
    }

    #[test]
    fn step_usage_ignores_constant_offset(seed in any::<u64>(), n in 2usize..30, offset in -2.0f64..2.0) {
        let (desc, frames) = frames(seed, n);
        let moved: Vec<MotionFrame> = frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                for a in g.angles.values_mut() {
                    for v in a.iter_mut() {
                        *v += offset;
                    }
                }
                g
            })
            .collect();
        let a = joints_usage(&frames, &desc).unwrap();
        let b = joints_usage(&moved, &desc).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            for (sa, sb) in fa.iter().zip(fb) {
                prop_assert!((sa.psi - sb.psi).abs() <= 1e-9);
                prop_assert!((sa.psi_bar - sb.psi_bar).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn com_spread_is_least_at_the_mean(seed in any::<u64>(), n in 2usize..30, p in prop::array::uniform3(-1.0f64..1.0)) {
        let (desc, frames) = frames(seed, n);
        let coms: Vec<[f64; 3]> = frames.iter().map(|f| frame_com(f, &desc).unwrap()).collect();
        let mean = com_mean(&coms).unwrap();
        let at_mean: f64 = com_divergence(&frames, &desc).unwrap().iter().map(|s| s.delta_star.powi(2)).sum();
        let other: f64 = coms.iter().map(|c| dist(*c, p).powi(2)).sum();
        let at_mean_direct: f64 = coms.iter().map(|c| dist(*c, mean).powi(2)).sum();
        prop_assert!((at_mean - at_mean_direct).abs() <= 1e-9 * at_mean.max(1.0));
        prop_assert!(other >= at_mean - 1e-12 * at_mean.max(1.0));
    }

    #[test]
    fn com_translates_with_the_body(seed in any::<u64>(), v in prop::array::uniform3(-10.0f64..10.0)) {
        let (desc, frames) = frames(seed, 1);
        let c = com_position(&frames[0], &desc).unwrap();
        let moved = com_position(&shifted(&frames[0], v), &desc).unwrap();
        for i in 0..3 {
            prop_assert!((moved[i] - (c[i] + v[i])).abs() <= 1e-12 * (1.0 + c[i].abs() + v[i].abs()));
        }
    }

    #[test]
    fn com_inside_segment_bounds(seed in any::<u64>()) {
        let (desc, frames) = frames(seed, 1);
        let f = &frames[0];
        let c = com_position(f, &desc).unwrap();
        let points: Vec<[f64; 3]> = desc
            .segments
            .iter()
            .map(|s| {
                let pose = &f.poses[&s.link_id];
                let r = rot_matrix(pose.orientation.to_array());
                std::array::from_fn(|i| pose.position[i] + (0..3).map(|k| r[i][k] * s.com_offset[k]).sum::<f64>())
            })
            .collect();
        for i in 0..3 {
            let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c[i] >= lo - 1e-12 && c[i] <= hi + 1e-12, "axis {}: {} not in [{}, {}]", i, c[i], lo, hi);
        }
    }

    #[test]
    fn per_frame_metrics_are_deterministic(seed in any::<u64>(), n in 2usize..10) {
        let (desc, frames) = frames(seed, n);
        for kind in MetricKind::ALL {
            let a = metric_series(kind, &frames, &desc, DEFAULT_W_ETA).unwrap();
            let b = metric_series(kind, &frames, &desc, DEFAULT_W_ETA).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| x.value.to_bits() == y.value.to_bits()));
        }
        for f in &frames {
            prop_assert_eq!(rom_comfort(f, &desc).unwrap(), rom_comfort(f, &desc).unwrap());
        }
    }
}

#[test]
fn default_skeleton_is_valid() {
    let report = validate_skeleton(&SkeletonDescriptor::default_model());
    assert!(report.is_ok(), "{report}");
}

#[test]
fn each_single_mutation_is_caught() {
    type Mutation = (ViolationKind, fn(&mut SkeletonDescriptor));
    let mutations: [Mutation; 12] = [
        (ViolationKind::DegenerateRom, |d| d.joints[0].limits[0].theta_max = d.joints[0].limits[0].theta_min),
        (ViolationKind::DofCount, |d| d.joints[0].dof_count += 1),
        (ViolationKind::DofIndex, |d| d.joints[0].limits[0].dof_index = 7),
        (ViolationKind::DuplicateJoint, |d| {
            let j = d.joints[0].clone();
            d.joints.push(j);
        }),
        (ViolationKind::DuplicateLink, |d| {
            let l = d.links[0].clone();
            d.links.push(l);
        }),
        (ViolationKind::UnknownLink, |d| d.joints[0].child_link = "nowhere".into()),
        (ViolationKind::NotATree, |d| {
            let parent = d.joints[0].parent_link.clone();
            d.joints[0].child_link = parent;
        }),
        (ViolationKind::BodyPart, |d| {
            let other = d.joints[1].body_part;
            let own = d.joints[0].body_part;
            d.joints[0].body_part = if other != own { other } else { d.joints.last().unwrap().body_part };
        }),
        (ViolationKind::MassFractions, |d| d.segments[0].mass_fraction *= 0.5),
        (ViolationKind::MassFractionRange, |d| d.segments[0].mass_fraction = -0.1),
        (ViolationKind::DuplicateSegment, |d| {
            let s = d.segments[0].clone();
            d.segments.push(s);
        }),
        (ViolationKind::NonUnitReference, |d| {
            let q = d.reference.poses[0].orientation;
            d.reference.poses[0].orientation = Quat::new(q.w * 2.0, q.x * 2.0, q.y * 2.0, q.z * 2.0);
        }),
    ];
    for (kind, mutate) in mutations {
        let mut d = SkeletonDescriptor::default_model();
        mutate(&mut d);
        let report = validate_skeleton(&d);
        assert!(report.has(kind), "{kind:?} not reported: {report}");
    }
}
