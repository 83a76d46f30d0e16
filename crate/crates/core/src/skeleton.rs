//! Articulated body model: joints, DoF limits, link tree, segment parameters
//! and the ergonomic reference posture.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, scale, Quat, Vec3};
use crate::ingest::MotionFrame;

pub const DEFAULT_SKELETON_TOML: &str = include_str!("../config/default_skeleton.toml");

/// Name of the link every skeleton tree must be rooted at.
pub const ROOT_LINK: &str = "pelvis";

const MASS_SUM_TOL: f64 = 1e-9;
const REFERENCE_UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    VertebralColumn,
    LeftUpperLimb,
    RightUpperLimb,
    LeftLowerLimb,
    RightLowerLimb,
}

impl BodyPart {
    pub const ALL: [BodyPart; 5] = [
        BodyPart::VertebralColumn,
        BodyPart::LeftUpperLimb,
        BodyPart::RightUpperLimb,
        BodyPart::LeftLowerLimb,
        BodyPart::RightLowerLimb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BodyPart::VertebralColumn => "vertebral_column",
            BodyPart::LeftUpperLimb => "left_upper_limb",
            BodyPart::RightUpperLimb => "right_upper_limb",
            BodyPart::LeftLowerLimb => "left_lower_limb",
            BodyPart::RightLowerLimb => "right_lower_limb",
        }
    }

    /// Coarse body section used for polar-polygon comparisons.
    pub fn section(self) -> BodySection {
        match self {
            BodyPart::VertebralColumn => BodySection::VertebralColumn,
            BodyPart::LeftUpperLimb | BodyPart::RightUpperLimb => BodySection::UpperLimbs,
            BodyPart::LeftLowerLimb | BodyPart::RightLowerLimb => BodySection::LowerLimbs,
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodySection {
    VertebralColumn,
    UpperLimbs,
    LowerLimbs,
}

impl BodySection {
    pub const ALL: [BodySection; 3] = [BodySection::VertebralColumn, BodySection::UpperLimbs, BodySection::LowerLimbs];

    pub fn as_str(self) -> &'static str {
        match self {
            BodySection::VertebralColumn => "vertebral_column",
            BodySection::UpperLimbs => "upper_limbs",
            BodySection::LowerLimbs => "lower_limbs",
        }
    }
}

/// The fifteen canonical joints and the body part each belongs to, in
/// report order.
pub const CANONICAL_JOINTS: [(&str, BodyPart); 15] = [
    ("head", BodyPart::VertebralColumn),
    ("neck", BodyPart::VertebralColumn),
    ("pelvis", BodyPart::VertebralColumn),
    ("l_shoulder", BodyPart::LeftUpperLimb),
    ("l_elbow", BodyPart::LeftUpperLimb),
    ("l_wrist", BodyPart::LeftUpperLimb),
    ("r_shoulder", BodyPart::RightUpperLimb),
    ("r_elbow", BodyPart::RightUpperLimb),
    ("r_wrist", BodyPart::RightUpperLimb),
    ("l_hip", BodyPart::LeftLowerLimb),
    ("l_knee", BodyPart::LeftLowerLimb),
    ("l_ankle", BodyPart::LeftLowerLimb),
    ("r_hip", BodyPart::RightLowerLimb),
    ("r_knee", BodyPart::RightLowerLimb),
    ("r_ankle", BodyPart::RightLowerLimb),
];

/// Admissible interval of one DoF, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofLimit {
    pub joint_id: String,
    pub dof_index: usize,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl DofLimit {
    pub fn width(&self) -> f64 {
        (self.theta_max - self.theta_min).abs()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.theta_min + self.theta_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDescriptor {
    pub joint_id: String,
    pub name: String,
    pub parent_link: String,
    pub child_link: String,
    pub dof_count: usize,
    pub limits: Vec<DofLimit>,
    pub body_part: BodyPart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentParameter {
    pub link_id: String,
    pub mass_fraction: f64,
    pub com_offset: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePose {
    pub link_id: String,
    pub position: Vec3,
    pub orientation: Quat,
}

/// Ergonomic reference pose of every evaluated link, in file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferencePosture {
    pub poses: Vec<ReferencePose>,
}

impl ReferencePosture {
    pub fn get(&self, link_id: &str) -> Option<&ReferencePose> {
        self.poses.iter().find(|p| p.link_id == link_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonDescriptor {
    pub joints: Vec<JointDescriptor>,
    pub links: Vec<String>,
    pub segments: Vec<SegmentParameter>,
    pub reference: ReferencePosture,
    pub world_frame: String,
}

impl SkeletonDescriptor {
    /// The shipped 15-joint model.
    pub fn default_model() -> Self {
        Self::from_toml_str(DEFAULT_SKELETON_TOML).expect("shipped skeleton config parses")
    }

    /// Parses a skeleton config document. Limits are read in degrees and
    /// stored in radians. Unknown keys are rejected; invariants are not
    /// checked here (see [`validate_skeleton`]).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SkeletonFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(file.into_descriptor())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Loads and validates, turning any violation into an error.
    pub fn load_validated(path: impl AsRef<Path>) -> Result<Self> {
        let desc = Self::load(path)?;
        let report = validate_skeleton(&desc);
        if report.is_ok() {
            Ok(desc)
        } else {
            Err(Error::Config(report.to_string()))
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&SkeletonFile::from_descriptor(self)).expect("skeleton serializes")
    }

    pub fn joint(&self, joint_id: &str) -> Option<&JointDescriptor> {
        self.joints.iter().find(|j| j.joint_id == joint_id)
    }

    pub fn has_link(&self, link_id: &str) -> bool {
        self.links.iter().any(|l| l == link_id)
    }

    pub fn total_dofs(&self) -> usize {
        self.joints.iter().map(|j| j.dof_count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DegenerateRom,
    DofCount,
    DofIndex,
    DuplicateJoint,
    DuplicateLink,
    UnknownLink,
    NotATree,
    BodyPart,
    MassFractions,
    MassFractionRange,
    DuplicateSegment,
    NonUnitReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every descriptor invariant and returns all violations found.
pub fn validate_skeleton(desc: &SkeletonDescriptor) -> ValidationReport {
    use ViolationKind::*;
    let mut report = ValidationReport::default();

    let mut seen_links = BTreeSet::new();
    for link in &desc.links {
        if !seen_links.insert(link.as_str()) {
            report.push(DuplicateLink, format!("duplicate link id `{link}`"));
        }
    }

    let canonical: HashMap<&str, self::BodyPart> = CANONICAL_JOINTS.iter().copied().collect();
    let mut seen_joints = BTreeSet::new();
    for joint in &desc.joints {
        let id = &joint.joint_id;
        if !seen_joints.insert(id.as_str()) {
            report.push(DuplicateJoint, format!("duplicate joint id `{id}`"));
        }
        if !(1..=3).contains(&joint.dof_count) || joint.dof_count != joint.limits.len() {
            report.push(
                DofCount,
                format!(
                    "joint `{id}`: dof_count {} with {} limits (need 1..=3, equal)",
                    joint.dof_count,
                    joint.limits.len()
                ),
            );
        }
        for (j, lim) in joint.limits.iter().enumerate() {
            if lim.dof_index != j || lim.joint_id != *id {
                report.push(
                    DofIndex,
                    format!("joint `{id}`: limit #{j} is labelled `{}`[{}]", lim.joint_id, lim.dof_index),
                );
            }
            // NaN bounds fail this as well.
            if !(lim.theta_min < lim.theta_max) {
                report.push(
                    DegenerateRom,
                    format!("joint `{id}` dof {j}: degenerate RoM [{}, {}]", lim.theta_min, lim.theta_max),
                );
            }
        }
        for link in [&joint.parent_link, &joint.child_link] {
            if !seen_links.contains(link.as_str()) {
                report.push(UnknownLink, format!("joint `{id}` references unknown link `{link}`"));
            }
        }
        if let Some(expected) = canonical.get(id.as_str()) {
            if *expected != joint.body_part {
                report.push(BodyPart, format!("joint `{id}` assigned to {} instead of {expected}", joint.body_part));
            }
        }
    }

    check_tree(desc, &mut report);

    let mut seen_segments = BTreeSet::new();
    let mut mass_sum = 0.0;
    for seg in &desc.segments {
        if !seen_segments.insert(seg.link_id.as_str()) {
            report.push(DuplicateSegment, format!("duplicate segment for link `{}`", seg.link_id));
        }
        if !seen_links.contains(seg.link_id.as_str()) {
            report.push(UnknownLink, format!("segment references unknown link `{}`", seg.link_id));
        }
        if !(seg.mass_fraction > 0.0 && seg.mass_fraction <= 1.0) {
            report.push(
                MassFractionRange,
                format!("segment `{}`: mass fraction {} outside (0, 1]", seg.link_id, seg.mass_fraction),
            );
        }
        mass_sum += seg.mass_fraction;
    }
    if !((mass_sum - 1.0).abs() <= MASS_SUM_TOL) {
        report.push(MassFractions, format!("mass fractions sum to {mass_sum}, expected 1"));
    }

    for pose in &desc.reference.poses {
        if !seen_links.contains(pose.link_id.as_str()) {
            report.push(UnknownLink, format!("reference pose for unknown link `{}`", pose.link_id));
        }
        let n = pose.orientation.norm();
        if !((n - 1.0).abs() <= REFERENCE_UNIT_TOL) {
            report.push(NonUnitReference, format!("reference orientation of `{}` has norm {n}", pose.link_id));
        }
    }

    report
}

fn check_tree(desc: &SkeletonDescriptor, report: &mut ValidationReport) {
    let mut parent_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for joint in &desc.joints {
        let (p, c) = (joint.parent_link.as_str(), joint.child_link.as_str());
        if p == c {
            report.push(ViolationKind::NotATree, format!("joint `{}` connects `{p}` to itself", joint.joint_id));
            continue;
        }
        if parent_of.insert(c, p).is_some() {
            report.push(ViolationKind::NotATree, format!("link `{c}` has more than one parent joint"));
        }
        children.entry(p).or_default().push(c);
    }
    if !desc.has_link(ROOT_LINK) {
        report.push(ViolationKind::NotATree, format!("root link `{ROOT_LINK}` is missing"));
        return;
    }
    if parent_of.contains_key(ROOT_LINK) {
        report.push(ViolationKind::NotATree, format!("root link `{ROOT_LINK}` has a parent joint"));
    }

    let mut reached = BTreeSet::new();
    let mut stack = vec![ROOT_LINK];
    while let Some(link) = stack.pop() {
        if !reached.insert(link) {
            continue;
        }
        if let Some(kids) = children.get(link) {
            stack.extend(kids.iter().copied());
        }
    }
    for link in &desc.links {
        if !reached.contains(link.as_str()) {
            report.push(ViolationKind::NotATree, format!("link `{link}` is not reachable from `{ROOT_LINK}`"));
        }
    }
}

/// Whole-body CoM as the mass-weighted sum of segment CoM points.
pub fn com_position(frame: &MotionFrame, desc: &SkeletonDescriptor) -> Result<Vec3> {
    let mut com = [0.0; 3];
    for seg in &desc.segments {
        let pose = frame
            .poses
            .get(&seg.link_id)
            .ok_or_else(|| Error::IncompleteFrame(format!("pose of link `{}`", seg.link_id)))?;
        let point = add(pose.position, pose.orientation.rotate(seg.com_offset));
        com = add(com, scale(point, seg.mass_fraction));
    }
    Ok(com)
}

// On-disk layout of the skeleton config.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonFile {
    world_frame: String,
    links: Vec<String>,
    joints: Vec<JointEntry>,
    segments: Vec<SegmentEntry>,
    reference: Vec<ReferenceEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointEntry {
    id: String,
    name: String,
    parent_link: String,
    child_link: String,
    body_part: BodyPart,
    dof_count: usize,
    limits_deg: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentEntry {
    link: String,
    mass_fraction: f64,
    com_offset: Vec3,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceEntry {
    link: String,
    position: Vec3,
    orientation: [f64; 4],
}

impl SkeletonFile {
    fn into_descriptor(self) -> SkeletonDescriptor {
        let joints = self
            .joints
            .into_iter()
            .map(|j| {
                let limits = j
                    .limits_deg
                    .iter()
                    .enumerate()
                    .map(|(k, [lo, hi])| DofLimit {
                        joint_id: j.id.clone(),
                        dof_index: k,
                        theta_min: lo.to_radians(),
                        theta_max: hi.to_radians(),
                    })
                    .collect();
                JointDescriptor {
                    joint_id: j.id,
                    name: j.name,
                    parent_link: j.parent_link,
                    child_link: j.child_link,
                    dof_count: j.dof_count,
                    limits,
                    body_part: j.body_part,
                }
            })
            .collect();
        let segments = self
            .segments
            .into_iter()
            .map(|s| SegmentParameter { link_id: s.link, mass_fraction: s.mass_fraction, com_offset: s.com_offset })
            .collect();
        let poses = self
            .reference
            .into_iter()
            .map(|r| ReferencePose { link_id: r.link, position: r.position, orientation: Quat::from(r.orientation) })
            .collect();
        SkeletonDescriptor {
            joints,
            links: self.links,
            segments,
            reference: ReferencePosture { poses },
            world_frame: self.world_frame,
        }
    }

    fn from_descriptor(desc: &SkeletonDescriptor) -> Self {
        SkeletonFile {
            world_frame: desc.world_frame.clone(),
            links: desc.links.clone(),
            joints: desc
                .joints
                .iter()
                .map(|j| JointEntry {
                    id: j.joint_id.clone(),
                    name: j.name.clone(),
                    parent_link: j.parent_link.clone(),
                    child_link: j.child_link.clone(),
                    body_part: j.body_part,
                    dof_count: j.dof_count,
                    limits_deg: j.limits.iter().map(|l| [l.theta_min.to_degrees(), l.theta_max.to_degrees()]).collect(),
                })
                .collect(),
            segments: desc
                .segments
                .iter()
                .map(|s| SegmentEntry {
                    link: s.link_id.clone(),
                    mass_fraction: s.mass_fraction,
                    com_offset: s.com_offset,
                })
                .collect(),
            reference: desc
                .reference
                .poses
                .iter()
                .map(|r| ReferenceEntry {
                    link: r.link_id.clone(),
                    position: r.position,
                    orientation: r.orientation.to_array(),
                })
                .collect(),
        }
    }
}
