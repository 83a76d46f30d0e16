//! Long-format metric time series (`t, joint_or_link, metric, value`).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::MotionFrame;
use crate::skeleton::SkeletonDescriptor;

use super::{com_divergence, joints_usage, posture_comfort, rom_comfort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    PostureComfort,
    RomComfort,
    JointsUsage,
    ComDivergence,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] =
        [MetricKind::PostureComfort, MetricKind::RomComfort, MetricKind::JointsUsage, MetricKind::ComDivergence];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::PostureComfort => "posture_comfort",
            MetricKind::RomComfort => "rom_comfort",
            MetricKind::JointsUsage => "joints_usage",
            MetricKind::ComDivergence => "com_divergence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).or(match s {
            "posture" => Some(MetricKind::PostureComfort),
            "rom" => Some(MetricKind::RomComfort),
            "usage" => Some(MetricKind::JointsUsage),
            "com" => Some(MetricKind::ComDivergence),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub joint_or_link: String,
    pub metric: String,
    pub value: f64,
}

impl SeriesRow {
    fn new(t: f64, target: &str, metric: impl Into<String>, value: f64) -> Self {
        SeriesRow { t, joint_or_link: target.to_string(), metric: metric.into(), value }
    }
}

/// Every per-frame quantity of one metric over `frames`.
pub fn metric_series(
    kind: MetricKind,
    frames: &[MotionFrame],
    desc: &SkeletonDescriptor,
    w_eta: f64,
) -> Result<Vec<SeriesRow>> {
    let mut rows = Vec::new();
    match kind {
        MetricKind::PostureComfort => {
            for f in frames {
                for s in posture_comfort(f, &desc.reference, w_eta)? {
                    rows.push(SeriesRow::new(f.t, &s.link_id, "rho", s.rho));
                    rows.push(SeriesRow::new(f.t, &s.link_id, "eta", s.eta));
                    rows.push(SeriesRow::new(f.t, &s.link_id, "zeta", s.zeta));
                }
            }
        }
        MetricKind::RomComfort => {
            for f in frames {
                for s in rom_comfort(f, desc)? {
                    for (j, v) in s.per_dof.iter().enumerate() {
                        rows.push(SeriesRow::new(f.t, &s.joint_id, format!("xi_dagger_{j}"), *v));
                    }
                    rows.push(SeriesRow::new(f.t, &s.joint_id, "joint_sum", s.joint_sum));
                    rows.push(SeriesRow::new(f.t, &s.joint_id, "joint_normalized", s.joint_normalized));
                }
            }
        }
        MetricKind::JointsUsage => {
            for (f, samples) in frames.iter().zip(joints_usage(frames, desc)?) {
                for s in samples {
                    rows.push(SeriesRow::new(f.t, &s.joint_id, "psi_bar", s.psi_bar));
                    rows.push(SeriesRow::new(f.t, &s.joint_id, "psi", s.psi));
                }
            }
        }
        MetricKind::ComDivergence => {
            for (f, s) in frames.iter().zip(com_divergence(frames, desc)?) {
                rows.push(SeriesRow::new(f.t, "com", "delta_star", s.delta_star));
                rows.push(SeriesRow::new(f.t, "com", "delta_prev", s.delta_prev));
            }
        }
    }
    Ok(rows)
}

pub fn write_series_csv(rows: &[SeriesRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "joint_or_link", "metric", "value"])?;
    for r in rows {
        out.write_record([r.t.to_string(), r.joint_or_link.clone(), r.metric.clone(), r.value.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
