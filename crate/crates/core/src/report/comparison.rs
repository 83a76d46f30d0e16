//! Two-group comparison report: per-joint median/IQR cells, CoM summary,
//! per-section polar areas, timings and TLX.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AnalysisWindow, Recording};
use crate::metrics::DEFAULT_W_ETA;
use crate::skeleton::{BodyPart, BodySection, SkeletonDescriptor};
use crate::stats::{
    area_ratio, median_iqr, normalize_aggregates, polar_polygon_area, reduction_percent, AggregateKind, CohortStat,
    MetricAggregate, NormalizationMode,
};

use super::session::{session_aggregates, summarize_tlx, NasaTlxRecord, SessionTiming, TlxSummary};

pub const REPORT_FORMAT: &str = "ergokit-comparison";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub normalization: NormalizationMode,
    pub window: AnalysisWindow,
    pub w_eta: f64,
    /// Overrides the group labels taken from the first recording of each group.
    pub labels: Option<(String, String)>,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            normalization: NormalizationMode::PerSubjectMax,
            window: AnalysisWindow::Full,
            w_eta: DEFAULT_W_ETA,
            labels: None,
        }
    }
}

/// Median and IQR over subjects, with the `M, IQR` rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub median: f64,
    pub iqr: f64,
    pub n: usize,
    pub text: String,
}

impl From<CohortStat> for Cell {
    fn from(s: CohortStat) -> Self {
        Cell { median: s.median, iqr: s.iqr, n: s.n, text: s.to_string() }
    }
}

impl Cell {
    fn of(values: &[f64]) -> Result<Self> {
        median_iqr(values).map(Cell::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCells {
    /// `None` when the joint's child link has no reference pose.
    pub posture_comfort: Option<Cell>,
    pub joints_usage: Cell,
    pub rom_comfort: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub body_part: BodyPart,
    pub joint_id: String,
    /// Link whose posture comfort fills the row.
    pub link_id: String,
    pub group_a: GroupCells,
    pub group_b: GroupCells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComCells {
    /// Integral of the distance from the session mean CoM.
    pub divergence: Cell,
    /// Integral of the frame-to-frame CoM displacement.
    pub step: Cell,
    /// Median of the un-normalized divergence integral.
    pub raw_divergence_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComSummary {
    pub group_a: ComCells,
    pub group_b: ComCells,
    /// Raw divergence median of A over that of B.
    pub divergence_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionArea {
    pub section: BodySection,
    pub metric: AggregateKind,
    /// Joints on the polygon's rays, in table order.
    pub joints: Vec<String>,
    pub area_a: f64,
    pub area_b: f64,
    /// `area_a / area_b`; `None` when group B's polygon is degenerate.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCells {
    pub t_setup: Cell,
    pub t_learn: Cell,
    pub t_exec: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingComparison {
    pub group_a: TimingCells,
    pub group_b: TimingCells,
    /// Median learning time saved by B relative to A, in percent.
    pub learn_reduction_percent: Option<f64>,
    pub exec_reduction_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxComparison {
    pub group_a: TlxSummary,
    pub group_b: TlxSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLabels {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateGroup {
    pub subject_id: String,
    pub kind: AggregateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format: String,
    pub version: u32,
    pub groups: GroupLabels,
    pub subjects: Vec<String>,
    pub normalization: NormalizationMode,
    pub window: AnalysisWindow,
    pub w_eta: f64,
    pub table: Vec<TableRow>,
    pub com: ComSummary,
    pub section_areas: Vec<SectionArea>,
    pub timing: Option<TimingComparison>,
    pub tlx: Option<TlxComparison>,
    /// `(subject, kind)` groups that were all zero and left unnormalized.
    pub degenerate_groups: Vec<DegenerateGroup>,
    /// Normalized per-subject values behind every cell, sorted by subject.
    pub aggregates: Vec<MetricAggregate>,
}

fn pair_by_subject<'a>(
    recs_a: &'a [Recording],
    recs_b: &'a [Recording],
) -> Result<Vec<(&'a Recording, &'a Recording)>> {
    if recs_a.is_empty() || recs_b.is_empty() {
        return Err(Error::data(format!(
            "both groups need recordings (group A has {}, group B has {})",
            recs_a.len(),
            recs_b.len()
        )));
    }
    let index = |recs: &'a [Recording], g: &str| -> Result<BTreeMap<&'a str, &'a Recording>> {
        let mut m = BTreeMap::new();
        for r in recs {
            if m.insert(r.subject_id.as_str(), r).is_some() {
                return Err(Error::data(format!("subject `{}` appears twice in group {g}", r.subject_id)));
            }
        }
        Ok(m)
    };
    let (a, b) = (index(recs_a, "A")?, index(recs_b, "B")?);
    if let Some(s) = a.keys().find(|s| !b.contains_key(*s)) {
        return Err(Error::data(format!("subject `{s}` is in group A only")));
    }
    if let Some(s) = b.keys().find(|s| !a.contains_key(*s)) {
        return Err(Error::data(format!("subject `{s}` is in group B only")));
    }
    Ok(a.into_iter().map(|(s, ra)| (ra, b[s])).collect())
}

/// Which group an aggregate came from; the UI label alone is ambiguous
/// when both groups share it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    A,
    B,
}

type Lookup = BTreeMap<(Side, AggregateKind, String), Vec<f64>>;

pub fn build_comparison(
    recs_a: &[Recording],
    recs_b: &[Recording],
    desc: &SkeletonDescriptor,
    config: &ComparisonConfig,
) -> Result<ComparisonReport> {
    let pairs = pair_by_subject(recs_a, recs_b)?;
    let per_subject: Vec<(Vec<MetricAggregate>, Vec<MetricAggregate>)> = pairs
        .par_iter()
        .map(|(a, b)| {
            Ok((
                session_aggregates(a, desc, config.window, config.w_eta)?,
                session_aggregates(b, desc, config.window, config.w_eta)?,
            ))
        })
        .collect::<Result<_>>()?;

    // Tag each value with its side through a parallel vector; normalization
    // keeps order.
    let mut raw = Vec::new();
    let mut sides = Vec::new();
    for (a, b) in per_subject {
        sides.extend(std::iter::repeat_n(Side::A, a.len()));
        raw.extend(a);
        sides.extend(std::iter::repeat_n(Side::B, b.len()));
        raw.extend(b);
    }
    // RoM comfort is already a [0, 1] fraction and is reported as is.
    let (scaled_idx, rom_idx): (Vec<usize>, Vec<usize>) =
        (0..raw.len()).partition(|&i| raw[i].kind != AggregateKind::RomComfort);
    let to_scale: Vec<MetricAggregate> = scaled_idx.iter().map(|&i| raw[i].clone()).collect();
    let normalized = normalize_aggregates(&to_scale, config.normalization)?;
    let mut values = raw.clone();
    for (&i, v) in scaled_idx.iter().zip(normalized.values) {
        values[i] = v;
    }
    debug_assert!(rom_idx.iter().all(|&i| values[i] == raw[i]));

    let mut lookup: Lookup = BTreeMap::new();
    let mut raw_lookup: Lookup = BTreeMap::new();
    for ((v, r), side) in values.iter().zip(&raw).zip(&sides) {
        lookup.entry((*side, v.kind, v.target.clone())).or_default().push(v.value);
        raw_lookup.entry((*side, r.kind, r.target.clone())).or_default().push(r.value);
    }
    let cell = |l: &Lookup, side, kind, target: &str| -> Result<Cell> {
        let v = l
            .get(&(side, kind, target.to_string()))
            .ok_or_else(|| Error::contract(format!("no {} values for `{target}`", kind.as_str())))?;
        Cell::of(v)
    };

    let mut table = Vec::new();
    for joint in &desc.joints {
        let has_pose = desc.reference.get(&joint.child_link).is_some();
        let cells = |side| -> Result<GroupCells> {
            Ok(GroupCells {
                posture_comfort: if has_pose {
                    Some(cell(&lookup, side, AggregateKind::PostureComfort, &joint.child_link)?)
                } else {
                    None
                },
                joints_usage: cell(&lookup, side, AggregateKind::JointsUsage, &joint.joint_id)?,
                rom_comfort: cell(&lookup, side, AggregateKind::RomComfort, &joint.joint_id)?,
            })
        };
        table.push(TableRow {
            body_part: joint.body_part,
            joint_id: joint.joint_id.clone(),
            link_id: joint.child_link.clone(),
            group_a: cells(Side::A)?,
            group_b: cells(Side::B)?,
        });
    }

    let com_cells = |side| -> Result<ComCells> {
        Ok(ComCells {
            divergence: cell(&lookup, side, AggregateKind::ComDivergence, "com")?,
            step: cell(&lookup, side, AggregateKind::ComStep, "com")?,
            raw_divergence_median: cell(&raw_lookup, side, AggregateKind::ComDivergence, "com")?.median,
        })
    };
    let (com_a, com_b) = (com_cells(Side::A)?, com_cells(Side::B)?);
    let com = ComSummary {
        divergence_ratio: area_ratio(com_a.raw_divergence_median, com_b.raw_divergence_median).ok(),
        group_a: com_a,
        group_b: com_b,
    };

    let section_areas = section_areas(&table)?;

    let groups = match &config.labels {
        Some((a, b)) => GroupLabels { a: a.clone(), b: b.clone() },
        None => GroupLabels { a: pairs[0].0.ui_label.clone(), b: pairs[0].1.ui_label.clone() },
    };
    Ok(ComparisonReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        groups,
        subjects: pairs.iter().map(|(a, _)| a.subject_id.clone()).collect(),
        normalization: config.normalization,
        window: config.window,
        w_eta: config.w_eta,
        table,
        com,
        section_areas,
        timing: None,
        tlx: None,
        degenerate_groups: normalized
            .degenerate_groups
            .into_iter()
            .map(|(subject_id, kind)| DegenerateGroup { subject_id, kind })
            .collect(),
        aggregates: values,
    })
}

/// Polygons of group medians over the joints of each body section.
/// Sections with fewer than three joints have no polygon and are skipped.
fn section_areas(table: &[TableRow]) -> Result<Vec<SectionArea>> {
    let mut out = Vec::new();
    for section in BodySection::ALL {
        let rows: Vec<&TableRow> = table.iter().filter(|r| r.body_part.section() == section).collect();
        if rows.len() < 3 {
            continue;
        }
        for metric in [AggregateKind::PostureComfort, AggregateKind::JointsUsage, AggregateKind::RomComfort] {
            let radius = |g: &GroupCells| match metric {
                AggregateKind::PostureComfort => g.posture_comfort.as_ref().map(|c| c.median),
                AggregateKind::JointsUsage => Some(g.joints_usage.median),
                _ => Some(g.rom_comfort.median),
            };
            let ra: Option<Vec<f64>> = rows.iter().map(|r| radius(&r.group_a)).collect();
            let rb: Option<Vec<f64>> = rows.iter().map(|r| radius(&r.group_b)).collect();
            let (Some(ra), Some(rb)) = (ra, rb) else { continue };
            let (area_a, area_b) = (polar_polygon_area(&ra)?, polar_polygon_area(&rb)?);
            out.push(SectionArea {
                section,
                metric,
                joints: rows.iter().map(|r| r.joint_id.clone()).collect(),
                area_a,
                area_b,
                ratio: area_ratio(area_a, area_b).ok(),
            });
        }
    }
    Ok(out)
}

fn timing_cells(t: &[SessionTiming]) -> Result<TimingCells> {
    let col = |f: fn(&SessionTiming) -> f64| Cell::of(&t.iter().map(f).collect::<Vec<_>>());
    Ok(TimingCells { t_setup: col(|s| s.t_setup)?, t_learn: col(|s| s.t_learn)?, t_exec: col(|s| s.t_exec)? })
}

pub fn compare_timings(a: &[SessionTiming], b: &[SessionTiming]) -> Result<TimingComparison> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::data("timing comparison needs sessions in both groups"));
    }
    let (ga, gb) = (timing_cells(a)?, timing_cells(b)?);
    Ok(TimingComparison {
        learn_reduction_percent: reduction_percent(ga.t_learn.median, gb.t_learn.median).ok(),
        exec_reduction_percent: reduction_percent(ga.t_exec.median, gb.t_exec.median).ok(),
        group_a: ga,
        group_b: gb,
    })
}

impl ComparisonReport {
    pub fn attach_timing(&mut self, a: &[SessionTiming], b: &[SessionTiming]) -> Result<()> {
        self.timing = Some(compare_timings(a, b)?);
        Ok(())
    }

    pub fn attach_tlx(&mut self, a: &[NasaTlxRecord], b: &[NasaTlxRecord]) -> Result<()> {
        self.tlx = Some(TlxComparison { group_a: summarize_tlx(a)?, group_b: summarize_tlx(b)? });
        Ok(())
    }

    pub fn row(&self, joint_id: &str) -> Option<&TableRow> {
        self.table.iter().find(|r| r.joint_id == joint_id)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{cohort, SyntheticSubject};

    fn desc() -> SkeletonDescriptor {
        SkeletonDescriptor::default_model()
    }

    #[test]
    fn self_comparison_is_neutral() {
        let d = desc();
        let (a, _) = cohort(&d, 3, 1.0, 1.0, ("x", "y"));
        let r = build_comparison(&a, &a, &d, &ComparisonConfig::default()).unwrap();
        for row in &r.table {
            assert_eq!(row.group_a, row.group_b);
        }
        assert!(r.section_areas.iter().all(|s| s.ratio == Some(1.0)));
        assert_eq!(r.subjects, vec!["s01", "s02", "s03"]);
    }

    #[test]
    fn unpaired_and_empty_groups_fail() {
        let d = desc();
        let (a, b) = cohort(&d, 2, 2.0, 0.5, ("mocap", "mouse"));
        let err = build_comparison(&a, &b[..1], &d, &ComparisonConfig::default()).unwrap_err();
        assert!(err.to_string().contains("s02"), "{err}");
        assert!(build_comparison(&[], &b, &d, &ComparisonConfig::default()).is_err());
    }

    #[test]
    fn subject_order_does_not_matter() {
        let d = desc();
        let (a, b) = cohort(&d, 4, 2.0, 0.5, ("mocap", "mouse"));
        let r1 = build_comparison(&a, &b, &d, &ComparisonConfig::default()).unwrap();
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.reverse();
        b2.rotate_left(1);
        let r2 = build_comparison(&a2, &b2, &d, &ComparisonConfig::default()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn cells_render_as_median_iqr_pairs() {
        let d = desc();
        let (a, b) = cohort(&d, 3, 2.0, 0.5, ("mocap", "mouse"));
        let r = build_comparison(&a, &b, &d, &ComparisonConfig::default()).unwrap();
        let c = &r.row("r_elbow").unwrap().group_a.joints_usage;
        assert_eq!(c.text, format!("{:.4}, {:.4}", c.median, c.iqr));
        assert_eq!(r.groups, GroupLabels { a: "mocap".into(), b: "mouse".into() });
        assert_eq!(r.section_areas.len(), 9);
    }

    #[test]
    fn timing_reductions_use_medians() {
        let t = |learn: f64, exec: f64| SessionTiming::new(0.0, learn, vec![], Some(exec)).unwrap();
        let c = compare_timings(&[t(241.0, 449.08)], &[t(179.0, 312.13)]).unwrap();
        assert!((c.learn_reduction_percent.unwrap() - 25.7261).abs() < 1e-3);
        assert!((c.exec_reduction_percent.unwrap() - 30.4961).abs() < 1e-3);
    }

    #[test]
    fn single_subject_report_builds() {
        let d = desc();
        let s = SyntheticSubject::new("only", 9);
        let r = build_comparison(
            &[s.recording(&d, "a", 1.0, 0.5)],
            &[s.recording(&d, "b", 0.5, 0.5)],
            &d,
            &ComparisonConfig { normalization: NormalizationMode::None, ..Default::default() },
        )
        .unwrap();
        assert!(r.table.iter().all(|row| row.group_a.rom_comfort.iqr == 0.0));
    }
}
