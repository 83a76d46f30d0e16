//! Session and cohort reductions: trapezoidal integrals, quantiles, boxplot
//! summaries, normalization, polar-polygon areas.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sum (t[k+1] - t[k]) * (v[k] + v[k+1]) / 2` over a strictly increasing
/// time base.
pub fn trapezoid_integral(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::contract(format!("trapezoidal integral needs 2 points, got {}", series.len())));
    }
    let mut acc = 0.0;
    for w in series.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if !(t1 > t0) {
            return Err(Error::contract(format!("time base not strictly increasing at {t0} -> {t1}")));
        }
        acc += (t1 - t0) * (v0 + v1) / 2.0;
    }
    Ok(acc)
}

/// Integral divided by duration; a single point averages to itself.
pub fn time_average(series: &[(f64, f64)]) -> Result<f64> {
    match series {
        [] => Err(Error::contract("time average of an empty series")),
        [(_, v)] => Ok(*v),
        _ => {
            let span = series[series.len() - 1].0 - series[0].0;
            Ok(trapezoid_integral(series)? / span)
        }
    }
}

/// Linear interpolation between order statistics at position `q (n - 1)`.
/// `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::contract("statistics of an empty sample"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite sample"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortStat {
    pub median: f64,
    pub iqr: f64,
    pub n: usize,
}

impl fmt::Display for CohortStat {
    /// `M, IQR` with four decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}, {:.4}", self.median, self.iqr)
    }
}

pub fn median_iqr(samples: &[f64]) -> Result<CohortStat> {
    let s = sorted_finite(samples)?;
    let (q1, q3) = (quantile(&s, 0.25), quantile(&s, 0.75));
    Ok(CohortStat { median: quantile(&s, 0.5), iqr: (q3 - q1).max(0.0), n: s.len() })
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for `n = 1`).
pub fn mean_std(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::contract("mean of an empty sample"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// Boxplot data with 1.5 IQR fences. Fences only classify points for
/// display; quartiles are computed from all samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Extreme samples still inside the fences.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn boxplot(samples: &[f64]) -> Result<BoxplotSummary> {
    let s = sorted_finite(samples)?;
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = (q3 - q1).max(0.0);
    let (lower_fence, upper_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |v: &&f64| **v >= lower_fence && **v <= upper_fence;
    let whisker_low = s.iter().find(inside).copied().unwrap_or(median);
    let whisker_high = s.iter().rev().find(inside).copied().unwrap_or(median);
    let outliers = s.iter().copied().filter(|v| *v < lower_fence || *v > upper_fence).collect();
    Ok(BoxplotSummary {
        n: s.len(),
        q1,
        median,
        q3,
        iqr,
        lower_fence,
        upper_fence,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// Session-level reduction a [`MetricAggregate`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateKind {
    /// Time average of posture comfort of a link.
    PostureComfort,
    /// Time average of per-joint normalized RoM comfort.
    RomComfort,
    /// Trapezoidal integral of the mean-deviation usage of a joint.
    JointsUsage,
    /// Trapezoidal integral of the frame-to-frame usage of a joint.
    JointsStep,
    /// Trapezoidal integral of CoM distance from its session mean.
    ComDivergence,
    /// Trapezoidal integral of CoM frame-to-frame displacement.
    ComStep,
}

impl AggregateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregateKind::PostureComfort => "posture_comfort",
            AggregateKind::RomComfort => "rom_comfort",
            AggregateKind::JointsUsage => "joints_usage",
            AggregateKind::JointsStep => "joints_step",
            AggregateKind::ComDivergence => "com_divergence",
            AggregateKind::ComStep => "com_step",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub subject_id: String,
    pub ui_label: String,
    /// Joint id, link id or `com`.
    pub target: String,
    pub kind: AggregateKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Divide by the largest value of the same subject and kind across both
    /// UI conditions and all targets.
    #[default]
    PerSubjectMax,
    None,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMode::PerSubjectMax => "per-subject-max",
            NormalizationMode::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub mode: NormalizationMode,
    pub values: Vec<MetricAggregate>,
    /// `(subject, kind)` groups whose values were all zero and passed
    /// through unchanged.
    pub degenerate_groups: Vec<(String, AggregateKind)>,
}

pub fn normalize_aggregates(values: &[MetricAggregate], mode: NormalizationMode) -> Result<Normalized> {
    if values.is_empty() {
        return Err(Error::contract("nothing to normalize"));
    }
    if let Some(bad) = values.iter().find(|v| !(v.value >= 0.0 && v.value.is_finite())) {
        return Err(Error::contract(format!(
            "aggregate {} of `{}`/{} is {}, expected >= 0",
            bad.kind.as_str(),
            bad.subject_id,
            bad.target,
            bad.value
        )));
    }
    if mode == NormalizationMode::None {
        return Ok(Normalized { mode, values: values.to_vec(), degenerate_groups: Vec::new() });
    }
    let mut group_max: BTreeMap<(&str, AggregateKind), f64> = BTreeMap::new();
    for v in values {
        let m = group_max.entry((v.subject_id.as_str(), v.kind)).or_insert(0.0);
        *m = m.max(v.value);
    }
    let degenerate_groups =
        group_max.iter().filter(|(_, m)| **m == 0.0).map(|((s, k), _)| (s.to_string(), *k)).collect();
    let out = values
        .iter()
        .map(|v| {
            let m = group_max[&(v.subject_id.as_str(), v.kind)];
            MetricAggregate { value: if m > 0.0 { v.value / m } else { v.value }, ..v.clone() }
        })
        .collect();
    Ok(Normalized { mode, values: out, degenerate_groups })
}

/// Area of the polygon whose vertices sit at radii `r[i]` on `m` equally
/// spaced rays.
pub fn polar_polygon_area(radii: &[f64]) -> Result<f64> {
    let m = radii.len();
    if m < 3 {
        return Err(Error::contract(format!("polar polygon needs at least 3 radii, got {m}")));
    }
    if radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::contract("polar polygon radii must be non-negative"));
    }
    let cross: f64 = (0..m).map(|i| radii[i] * radii[(i + 1) % m]).sum();
    Ok(0.5 * (TAU / m as f64).sin() * cross)
}

pub fn area_ratio(a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::contract("degenerate comparison polygon (zero area)"));
    }
    Ok(a / b)
}

/// Percentage by which `improved` undercuts `baseline`.
pub fn reduction_percent(baseline: f64, improved: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::contract(format!("reduction baseline must be positive, got {baseline}")));
    }
    Ok(100.0 * (baseline - improved) / baseline)
}
