//! Brute-force reference implementations written straight from the metric
//! definitions, sharing no code with the library beyond its data types.
#![allow(dead_code)]

use ergokit::geometry::Quat;
use ergokit::ingest::{LinkPose, MotionFrame};
use ergokit::skeleton::SkeletonDescriptor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q_normalize(q: [f64; 4]) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    q.map(|c| c / n)
}

/// `conj(a) * b`, components `[w, x, y, z]`.
pub fn q_rel(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let (aw, ax, ay, az) = (a[0], -a[1], -a[2], -a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

/// `sin^2` of half the relative rotation angle, i.e. `1 - w_rel^2`.
pub fn oracle_quat_distance(a: Quat, b: Quat) -> f64 {
    let r = q_rel(q_normalize(a.to_array()), q_normalize(b.to_array()));
    (1.0 - r[0] * r[0]).clamp(0.0, 1.0)
}

pub fn rot_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q_normalize(q);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub struct OraclePosture {
    pub link: String,
    pub rho: f64,
    pub eta: f64,
    pub zeta: f64,
}

pub fn oracle_posture(frame: &MotionFrame, desc: &SkeletonDescriptor, w_eta: f64) -> Vec<OraclePosture> {
    desc.reference
        .poses
        .iter()
        .map(|r| {
            let p = &frame.poses[&r.link_id];
            let rho = dist(p.position, r.position);
            let eta = oracle_quat_distance(p.orientation, r.orientation);
            OraclePosture { link: r.link_id.clone(), rho, eta, zeta: rho + w_eta * eta }
        })
        .collect()
}

/// `(per-DoF xi_dagger, joint sum, sum / n)` per joint.
pub fn oracle_rom(frame: &MotionFrame, desc: &SkeletonDescriptor) -> Vec<(Vec<f64>, f64, f64)> {
    desc.joints
        .iter()
        .map(|j| {
            let angles = &frame.angles[&j.joint_id];
            let mut per = Vec::new();
            for (theta, l) in angles.iter().zip(&j.limits) {
                let th = if *theta < l.theta_min {
                    l.theta_min
                } else if *theta > l.theta_max {
                    l.theta_max
                } else {
                    *theta
                };
                let xi = f64::min((th - l.theta_min).abs(), (th - l.theta_max).abs());
                per.push(2.0 * xi / (l.theta_max - l.theta_min).abs());
            }
            let sum: f64 = per.iter().sum();
            let n = per.len() as f64;
            (per, sum, sum / n)
        })
        .collect()
}

/// `(psi_bar, psi)` per frame and joint.
pub fn oracle_usage(frames: &[MotionFrame], desc: &SkeletonDescriptor) -> Vec<Vec<(f64, f64)>> {
    let means: Vec<Vec<f64>> = desc
        .joints
        .iter()
        .map(|j| {
            (0..j.dof_count)
                .map(|d| frames.iter().map(|f| f.angles[&j.joint_id][d]).sum::<f64>() / frames.len() as f64)
                .collect()
        })
        .collect();
    (0..frames.len())
        .map(|k| {
            desc.joints
                .iter()
                .zip(&means)
                .map(|(j, m)| {
                    let a = &frames[k].angles[&j.joint_id];
                    let psi_bar = (0..j.dof_count).map(|d| (a[d] - m[d]).abs()).sum();
                    let psi = if k == 0 {
                        0.0
                    } else {
                        let b = &frames[k - 1].angles[&j.joint_id];
                        (0..j.dof_count).map(|d| (a[d] - b[d]).abs()).sum()
                    };
                    (psi_bar, psi)
                })
                .collect()
        })
        .collect()
}

pub fn oracle_com(frame: &MotionFrame, desc: &SkeletonDescriptor) -> [f64; 3] {
    let mut c = [0.0; 3];
    for s in &desc.segments {
        let pose = &frame.poses[&s.link_id];
        let r = rot_matrix(pose.orientation.to_array());
        for i in 0..3 {
            let off: f64 = (0..3).map(|k| r[i][k] * s.com_offset[k]).sum();
            c[i] += s.mass_fraction * (pose.position[i] + off);
        }
    }
    c
}

/// `(delta_star, delta_prev)` per frame.
pub fn oracle_com_divergence(frames: &[MotionFrame], desc: &SkeletonDescriptor) -> Vec<(f64, f64)> {
    let coms: Vec<[f64; 3]> = frames.iter().map(|f| oracle_com(f, desc)).collect();
    let mut mean = [0.0; 3];
    for c in &coms {
        for i in 0..3 {
            mean[i] += c[i] / coms.len() as f64;
        }
    }
    (0..coms.len()).map(|k| (dist(coms[k], mean), if k == 0 { 0.0 } else { dist(coms[k], coms[k - 1]) })).collect()
}

pub fn random_unit_quat(rng: &mut ChaCha8Rng) -> Quat {
    loop {
        let v: [f64; 4] = [(); 4].map(|_| rng.gen_range(-1.0..1.0));
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return Quat::new(v[0] / n, v[1] / n, v[2] / n, v[3] / n);
        }
    }
}

/// Random angles up to 30 % of the range beyond each limit, random link
/// positions in a 2 m cube and random orientations.
pub fn random_frame(rng: &mut ChaCha8Rng, desc: &SkeletonDescriptor, t: f64) -> MotionFrame {
    let mut f = MotionFrame::at(t);
    for j in &desc.joints {
        let a = j
            .limits
            .iter()
            .map(|l| {
                let w = l.theta_max - l.theta_min;
                rng.gen_range(l.theta_min - 0.3 * w..l.theta_max + 0.3 * w)
            })
            .collect();
        f.angles.insert(j.joint_id.clone(), a);
    }
    for link in &desc.links {
        let position = [(); 3].map(|_| rng.gen_range(-1.0..1.0));
        f.poses.insert(link.clone(), LinkPose { position, orientation: random_unit_quat(rng) });
    }
    f
}

/// Relative error with a floor for exact zeros.
pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Quantile by linear interpolation at `q * (n - 1)` on a freshly sorted copy.
pub fn oracle_quantile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = q * (s.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Shoelace area of the polygon with vertices at `r[i]` on equally spaced rays.
pub fn shoelace(r: &[f64]) -> f64 {
    let m = r.len();
    let pts: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / m as f64;
            (r[i] * a.cos(), r[i] * a.sin())
        })
        .collect();
    let mut s = 0.0;
    for i in 0..m {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % m];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s.abs()
}
