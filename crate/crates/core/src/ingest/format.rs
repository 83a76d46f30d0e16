//! The `.ergframes` line format.
//!
//! ```text
//! #ergoframes v1 subject=<id> ui=<label> rate=<Hz>
//! #mark t=<s> label=<text>
//! t=<s>|J:<joint>=<a1,a2,...>|L:<link>=<px,py,pz;qw,qx,qy,qz>|...
//! ```
//!
//! Optional per-frame channels: `V:<joint>=<rates>`, `A:<joint>=<accels>` and
//! `C=<x,y,z>` (precomputed CoM). Numbers are written with the shortest
//! representation that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Quat;
use crate::skeleton::SkeletonDescriptor;

use super::{LinkPose, MotionFrame, Recording, TaskMark, DEFAULT_RATE_HZ};

const HEADER_TAG: &str = "#ergoframes";
const MARK_TAG: &str = "#mark";

/// Quaternions whose norm is off by more than this are renormalized.
pub const QUAT_RENORM_TOL: f64 = 1e-6;
/// Quaternions whose norm is off by more than this are rejected.
pub const QUAT_REJECT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Skip joints/links the skeleton does not know instead of failing, so
    /// full-body exports with extra segments can be ingested.
    pub ignore_unknown_ids: bool,
}

pub fn read_recording(path: impl AsRef<Path>, desc: &SkeletonDescriptor, opts: &ParseOptions) -> Result<Recording> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    parse_recording(&bytes, desc, opts)
}

/// Parses a whole `.ergframes` document.
pub fn parse_recording(source: &[u8], desc: &SkeletonDescriptor, opts: &ParseOptions) -> Result<Recording> {
    let mut rec: Option<Recording> = None;
    for (idx, raw) in source.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| perr(line_no, "invalid UTF-8"))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(rec) = rec.as_mut() else {
            rec = Some(parse_header(line, line_no)?);
            continue;
        };
        if let Some(rest) = line.strip_prefix(MARK_TAG) {
            rec.task_marks.push(parse_mark(rest, line_no)?);
        } else if line.starts_with('#') {
            return Err(perr(line_no, "unknown directive"));
        } else {
            let frame = parse_frame_line(line, desc, opts, line_no)?;
            if let Some(prev) = rec.frames.last() {
                if !(frame.t > prev.t) {
                    return Err(Error::NonMonotone { line: line_no, prev: prev.t, next: frame.t });
                }
            }
            rec.frames.push(frame);
        }
    }
    rec.ok_or_else(|| perr(1, "missing `#ergoframes v1` header"))
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str, line_no: usize) -> Result<Recording> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(HEADER_TAG) || parts.next() != Some("v1") {
        return Err(perr(line_no, "expected `#ergoframes v1` header"));
    }
    let (mut subject, mut ui, mut rate) = (None, None, None);
    for kv in parts {
        let (k, v) = kv.split_once('=').ok_or_else(|| perr(line_no, format!("bad header field `{kv}`")))?;
        let slot = match k {
            "subject" => &mut subject,
            "ui" => &mut ui,
            "rate" => &mut rate,
            _ => return Err(perr(line_no, format!("unknown header key `{k}`"))),
        };
        if v.is_empty() || slot.replace(v).is_some() {
            return Err(perr(line_no, format!("empty or repeated header key `{k}`")));
        }
    }
    let nominal_rate = match rate {
        Some(r) => parse_num(r, line_no)?,
        None => DEFAULT_RATE_HZ,
    };
    if !(nominal_rate > 0.0) {
        return Err(perr(line_no, format!("rate must be positive, got {nominal_rate}")));
    }
    let mut rec = Recording::new(
        subject.ok_or_else(|| perr(line_no, "header lacks subject="))?,
        ui.ok_or_else(|| perr(line_no, "header lacks ui="))?,
    );
    rec.nominal_rate = nominal_rate;
    Ok(rec)
}

fn parse_mark(rest: &str, line_no: usize) -> Result<TaskMark> {
    let rest = rest.trim_start();
    let rest = rest.strip_prefix("t=").ok_or_else(|| perr(line_no, "mark lacks t="))?;
    let (t, label) = rest.split_once(' ').ok_or_else(|| perr(line_no, "mark lacks label="))?;
    let label = label.trim_start().strip_prefix("label=").ok_or_else(|| perr(line_no, "mark lacks label="))?;
    Ok(TaskMark { t: parse_num(t, line_no)?, label: label.to_string() })
}

fn parse_num(s: &str, line_no: usize) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(perr(line_no, format!("bad number `{s}`"))),
    }
}

fn parse_list(s: &str, line_no: usize) -> Result<Vec<f64>> {
    s.split(',').map(|x| parse_num(x, line_no)).collect()
}

/// Decodes one frame line (also the payload of one datagram).
pub fn parse_frame_line(
    line: &str,
    desc: &SkeletonDescriptor,
    opts: &ParseOptions,
    line_no: usize,
) -> Result<MotionFrame> {
    let mut tokens = line.trim_end().split('|');
    let t_tok = tokens.next().unwrap_or_default();
    let t = parse_num(t_tok.strip_prefix("t=").ok_or_else(|| perr(line_no, "frame must start with t="))?, line_no)?;
    let mut frame = MotionFrame::at(t);

    for tok in tokens {
        let (key, value) = tok.split_once('=').ok_or_else(|| perr(line_no, format!("bad token `{tok}`")))?;
        if key == "C" {
            let v = parse_list(value, line_no)?;
            let com: [f64; 3] = v.try_into().map_err(|_| perr(line_no, "CoM needs 3 components"))?;
            if frame.com.replace(com).is_some() {
                return Err(perr(line_no, "repeated CoM"));
            }
            continue;
        }
        let (kind, id) = key.split_once(':').ok_or_else(|| perr(line_no, format!("bad token key `{key}`")))?;
        if id.is_empty() {
            return Err(perr(line_no, "empty id"));
        }
        match kind {
            "J" | "V" | "A" => {
                let Some(joint) = desc.joint(id) else {
                    if opts.ignore_unknown_ids {
                        continue;
                    }
                    return Err(Error::UnknownJoint { line: line_no, id: id.to_string() });
                };
                let values = parse_list(value, line_no)?;
                if values.len() != joint.dof_count {
                    return Err(perr(
                        line_no,
                        format!("joint `{id}` has {} values, expected {}", values.len(), joint.dof_count),
                    ));
                }
                let map = match kind {
                    "J" => &mut frame.angles,
                    "V" => frame.velocities.get_or_insert_with(BTreeMap::new),
                    _ => frame.accelerations.get_or_insert_with(BTreeMap::new),
                };
                if map.insert(id.to_string(), values).is_some() {
                    return Err(perr(line_no, format!("repeated {kind}:{id}")));
                }
            }
            "L" => {
                if !desc.has_link(id) {
                    if opts.ignore_unknown_ids {
                        continue;
                    }
                    return Err(Error::UnknownLink { line: line_no, id: id.to_string() });
                }
                let pose = parse_pose(id, value, line_no)?;
                if frame.poses.insert(id.to_string(), pose).is_some() {
                    return Err(perr(line_no, format!("repeated L:{id}")));
                }
            }
            _ => return Err(perr(line_no, format!("unknown token kind `{kind}`"))),
        }
    }
    Ok(frame)
}

fn parse_pose(link: &str, value: &str, line_no: usize) -> Result<LinkPose> {
    let (p, q) = value.split_once(';').ok_or_else(|| perr(line_no, format!("link `{link}` pose lacks `;`")))?;
    let p = parse_list(p, line_no)?;
    let q = parse_list(q, line_no)?;
    let position: [f64; 3] =
        p.try_into().map_err(|_| perr(line_no, format!("link `{link}` position needs 3 values")))?;
    let q: [f64; 4] = q.try_into().map_err(|_| perr(line_no, format!("link `{link}` quaternion needs 4 values")))?;
    let mut orientation = Quat::from(q);
    let norm = orientation.norm();
    let dev = (norm - 1.0).abs();
    if !(dev <= QUAT_REJECT_TOL) {
        return Err(Error::NonUnitQuaternion { line: line_no, link: link.to_string(), norm });
    }
    if dev > QUAT_RENORM_TOL {
        orientation = orientation.normalized();
    }
    Ok(LinkPose { position, orientation })
}

fn push_list(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
}

/// Serializes one frame as a single line without the trailing newline.
pub fn format_frame_line(frame: &MotionFrame) -> String {
    let mut out = String::with_capacity(64 + 48 * (frame.angles.len() + frame.poses.len()));
    let _ = write!(out, "t={}", frame.t);
    for (id, a) in &frame.angles {
        let _ = write!(out, "|J:{id}=");
        push_list(&mut out, a);
    }
    for (tag, map) in [("V", &frame.velocities), ("A", &frame.accelerations)] {
        for (id, a) in map.iter().flatten() {
            let _ = write!(out, "|{tag}:{id}=");
            push_list(&mut out, a);
        }
    }
    for (id, pose) in &frame.poses {
        let _ = write!(out, "|L:{id}=");
        push_list(&mut out, &pose.position);
        out.push(';');
        push_list(&mut out, &pose.orientation.to_array());
    }
    if let Some(c) = frame.com {
        out.push_str("|C=");
        push_list(&mut out, &c);
    }
    out
}

pub fn write_recording(rec: &Recording, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{HEADER_TAG} v1 subject={} ui={} rate={}", rec.subject_id, rec.ui_label, rec.nominal_rate)?;
    for m in &rec.task_marks {
        writeln!(w, "{MARK_TAG} t={} label={}", m.t, m.label)?;
    }
    for f in &rec.frames {
        writeln!(w, "{}", format_frame_line(f))?;
    }
    Ok(())
}

pub fn emit_recording(rec: &Recording) -> String {
    let mut buf = Vec::new();
    write_recording(rec, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("emitter writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use proptest::prelude::*;

    fn desc() -> SkeletonDescriptor {
        SkeletonDescriptor::default_model()
    }

    const TWO_FRAMES: &str = "#ergoframes v1 subject=s01 ui=mocap rate=60\n\
        #mark t=0 label=start of task\n\
        t=0|J:r_knee=0.1|L:pelvis=0,0,1;1,0,0,0\n\
        t=0.016666666666666666|J:r_knee=0.2|L:pelvis=0,0,1.01;1,0,0,0|C=0,0,0.9\n";

    #[test]
    fn two_frame_document() {
        let rec = parse_recording(TWO_FRAMES.as_bytes(), &desc(), &ParseOptions::default()).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec.subject_id, "s01");
        assert_eq!(rec.ui_label, "mocap");
        assert_eq!(rec.nominal_rate, 60.0);
        assert_eq!(rec.task_marks[0].label, "start of task");
        assert_eq!(rec.frames[1].angles["r_knee"], vec![0.2]);
        assert_eq!(rec.frames[0].com, None);
        assert_eq!(rec.frames[1].com, Some([0.0, 0.0, 0.9]));
        assert!(rec.frames[0].velocities.is_none());
        let again = parse_recording(emit_recording(&rec).as_bytes(), &desc(), &ParseOptions::default()).unwrap();
        assert_eq!(rec, again);
    }

    #[test]
    fn rejects_far_from_unit_quaternion() {
        let doc = "#ergoframes v1 subject=s ui=u rate=60\nt=0|L:r_hand=0,0,0;0.9,0,0,0\n";
        match parse_recording(doc.as_bytes(), &desc(), &ParseOptions::default()) {
            Err(Error::NonUnitQuaternion { line, link, norm }) => {
                assert_eq!(line, 2);
                assert_eq!(link, "r_hand");
                assert!((norm - 0.9).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn renormalizes_slightly_off_quaternion() {
        let doc = "#ergoframes v1 subject=s ui=u rate=60\nt=0|L:r_hand=0,0,0;1.0005,0,0,0\n";
        let rec = parse_recording(doc.as_bytes(), &desc(), &ParseOptions::default()).unwrap();
        assert_eq!(rec.frames[0].poses["r_hand"].orientation, Quat::IDENTITY);
    }

    #[test]
    fn equal_timestamps_are_non_monotone() {
        let doc = "#ergoframes v1 subject=s ui=u rate=60\nt=1.0|J:r_knee=0\nt=1.0|J:r_knee=0\n";
        match parse_recording(doc.as_bytes(), &desc(), &ParseOptions::default()) {
            Err(Error::NonMonotone { line: 3, prev, next }) => assert_eq!((prev, next), (1.0, 1.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_joint_is_named_unless_lenient() {
        let doc = "#ergoframes v1 subject=s ui=u\nt=0|J:l_pinky=0.1|J:r_knee=0.3\n";
        let err = parse_recording(doc.as_bytes(), &desc(), &ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("l_pinky"), "{err}");
        let rec = parse_recording(doc.as_bytes(), &desc(), &ParseOptions { ignore_unknown_ids: true }).unwrap();
        assert_eq!(rec.frames[0].angles.len(), 1);
        assert_eq!(rec.nominal_rate, DEFAULT_RATE_HZ);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("#ergoframes v1 subject=s ui=u\nt=0|J:r_knee=0.1,0.2\n", 2),
            ("#ergoframes v1 subject=s ui=u\n\nt=abc\n", 3),
            ("#ergoframes v1 subject=s ui=u\nt=0|L:pelvis=0,0;1,0,0,0\n", 2),
            ("#ergoframes v1 subject=s ui=u\nt=0|X:pelvis=1\n", 2),
            ("#ergoframes v1 subject=s ui=u\n#bogus\n", 2),
            ("#ergoframes v1 subject=s ui=u\nt=NaN\n", 2),
            ("t=0\n", 1),
        ];
        for (doc, want) in cases {
            match parse_recording(doc.as_bytes(), &desc(), &ParseOptions::default()) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{doc}"),
                other => panic!("{doc}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn synthetic_recording_round_trips_bit_exact() {
        let d = desc();
        let rec = synth::SyntheticSubject::new("s03", 3).recording(&d, "3dmouse", 1.0, 2.0);
        let text = emit_recording(&rec);
        let back = parse_recording(text.as_bytes(), &d, &ParseOptions::default()).unwrap();
        assert_eq!(rec, back);
        assert_eq!(emit_recording(&back), text);
    }

    proptest! {
        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
            let _ = parse_recording(&bytes, &desc(), &ParseOptions::default());
        }

        #[test]
        fn parser_never_panics_on_near_miss_text(
            s in "#ergoframes v1 subject=[a-z]{1,3} ui=[a-z]{1,3}( rate=[0-9.e-]{1,5})?\n(t=[0-9.e+-]{0,6}(\\|[JLVAC]?:?[a-z_]{0,8}=[0-9.,;e-]{0,24}){0,4}\n){0,4}"
        ) {
            let _ = parse_recording(s.as_bytes(), &desc(), &ParseOptions::default());
        }

        #[test]
        fn emit_parse_round_trip(
            t0 in -1e3f64..1e3,
            dts in proptest::collection::vec(1e-6f64..1.0, 1..6),
            angles in proptest::collection::vec(-3.0f64..3.0, 2),
            p in proptest::array::uniform3(-1e4f64..1e4),
            q in proptest::array::uniform4(-1.0f64..1.0),
        ) {
            prop_assume!(Quat::from(q).norm() > 1e-3);
            let d = desc();
            let mut rec = Recording::new("prop", "ui");
            let mut t = t0;
            for dt in dts {
                let mut f = MotionFrame::at(t);
                f.angles.insert("r_elbow".into(), angles.clone());
                f.poses.insert("r_forearm".into(), LinkPose { position: p, orientation: Quat::from(q).normalized() });
                rec.frames.push(f);
                t += dt;
            }
            let back = parse_recording(emit_recording(&rec).as_bytes(), &d, &ParseOptions::default()).unwrap();
            prop_assert_eq!(rec, back);
        }
    }
}
