//! CSV exports of the report tables and readers for session sheets.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::stats::boxplot;

use super::comparison::{Cell, ComparisonReport};
use super::session::{summarize_tlx, NasaTlxRecord, SessionTiming, TLX_SCALES};

fn text(c: Option<&Cell>) -> String {
    c.map_or_else(String::new, |c| c.text.clone())
}

/// The per-joint table, one row per joint and `M, IQR` cells per group.
pub fn write_table_csv(report: &ComparisonReport, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let (a, b) = (&report.groups.a, &report.groups.b);
    let mut header = vec!["part".to_string(), "joint".into(), "link".into()];
    for g in [a, b] {
        for m in ["posture_comfort", "joints_usage", "rom_comfort"] {
            header.push(format!("{g}:{m}"));
        }
    }
    out.write_record(&header)?;
    for row in &report.table {
        let mut rec = vec![row.body_part.as_str().to_string(), row.joint_id.clone(), row.link_id.clone()];
        for g in [&row.group_a, &row.group_b] {
            rec.push(text(g.posture_comfort.as_ref()));
            rec.push(g.joints_usage.text.clone());
            rec.push(g.rom_comfort.text.clone());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Boxplot statistics of learning and execution times per group.
pub fn write_timing_boxplots(
    labels: (&str, &str),
    a: &[SessionTiming],
    b: &[SessionTiming],
    w: impl Write,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["group", "quantity", "n", "q1", "median", "q3", "whisker_low", "whisker_high", "outliers"])?;
    for (label, group) in [(labels.0, a), (labels.1, b)] {
        for (name, f) in
            [("t_learn", (|s: &SessionTiming| s.t_learn) as fn(&SessionTiming) -> f64), ("t_exec", |s| s.t_exec)]
        {
            let v: Vec<f64> = group.iter().map(f).collect();
            let bp = boxplot(&v)?;
            let outliers: Vec<String> = bp.outliers.iter().map(f64::to_string).collect();
            out.write_record([
                label.to_string(),
                name.to_string(),
                bp.n.to_string(),
                bp.q1.to_string(),
                bp.median.to_string(),
                bp.q3.to_string(),
                bp.whisker_low.to_string(),
                bp.whisker_high.to_string(),
                outliers.join(";"),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct TimingRow {
    subject_id: String,
    t_setup: f64,
    t_learn: f64,
    #[serde(default)]
    t_exec: Option<f64>,
    /// `;`-separated subtask durations.
    #[serde(default)]
    subtasks: Option<String>,
}

/// Reads `subject_id,t_setup,t_learn,t_exec[,subtasks]`, keyed by subject.
pub fn read_timing_csv(r: impl Read) -> Result<BTreeMap<String, SessionTiming>> {
    let mut out = BTreeMap::new();
    for (i, row) in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r).deserialize::<TimingRow>().enumerate()
    {
        let row = row?;
        let subtasks = match row.subtasks.as_deref() {
            None | Some("") => Vec::new(),
            Some(s) => s
                .split(';')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 2, msg: format!("subtasks: {e}") })?,
        };
        let timing = SessionTiming::new(row.t_setup, row.t_learn, subtasks, row.t_exec)?;
        if out.insert(row.subject_id.clone(), timing).is_some() {
            return Err(Error::data(format!("duplicate timing row for `{}`", row.subject_id)));
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct TlxRow {
    #[serde(default)]
    ui: Option<String>,
    #[serde(default)]
    subject_id: Option<String>,
    md: u8,
    pd: u8,
    td: u8,
    pe: u8,
    ef: u8,
    fr: u8,
}

/// One TLX sheet with its optional UI label and subject.
#[derive(Debug, Clone, PartialEq)]
pub struct TlxSheet {
    pub ui: Option<String>,
    pub subject_id: Option<String>,
    pub record: NasaTlxRecord,
}

/// Reads `[ui,][subject_id,]md,pd,td,pe,ef,fr`.
pub fn read_tlx_csv(r: impl Read) -> Result<Vec<TlxSheet>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
        .deserialize::<TlxRow>()
        .map(|row| {
            let row = row?;
            Ok(TlxSheet {
                record: NasaTlxRecord::new(row.md, row.pd, row.td, row.pe, row.ef, row.fr)?,
                ui: row.ui,
                subject_id: row.subject_id,
            })
        })
        .collect()
}

/// Mean ± std per scale and UI, in first-seen UI order.
pub fn write_tlx_table(sheets: &[TlxSheet], w: impl Write) -> Result<()> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<NasaTlxRecord>> = BTreeMap::new();
    for s in sheets {
        let ui = s.ui.clone().unwrap_or_else(|| "all".to_string());
        if !groups.contains_key(&ui) {
            order.push(ui.clone());
        }
        groups.entry(ui).or_default().push(s.record);
    }
    if order.is_empty() {
        return Err(Error::data("no TLX sheets"));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["ui", "n"];
    header.extend(TLX_SCALES);
    out.write_record(&header)?;
    for ui in order {
        let s = summarize_tlx(&groups[&ui])?;
        let mut rec = vec![ui, s.n.to_string()];
        rec.extend(s.scales().iter().map(|m| m.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_csv_checks_consistency() {
        let ok = "subject_id,t_setup,t_learn,t_exec,subtasks\ns01,30,241,6,1;2;3\ns02,20,179,10,\n";
        let t = read_timing_csv(ok.as_bytes()).unwrap();
        assert_eq!(t["s01"].subtask_durations, vec![1.0, 2.0, 3.0]);
        assert_eq!(t["s02"].t_exec, 10.0);
        let bad = "subject_id,t_setup,t_learn,t_exec,subtasks\ns01,30,241,7,1;2;3\n";
        assert!(read_timing_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn tlx_table_format() {
        let text =
            "ui,subject_id,md,pd,td,pe,ef,fr\nmocap,s1,7,7,7,7,7,7\nmocap,s2,7,7,7,7,7,7\nmouse,s1,5,1,1,1,1,1\n";
        let sheets = read_tlx_csv(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_tlx_table(&sheets, &mut buf).unwrap();
        let out = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "ui,n,MD,PD,TD,PE,EF,FR");
        assert!(lines[1].starts_with("mocap,2,7.00 \u{b1} 0.00,"));
        assert!(lines[2].starts_with("mouse,1,5.00 \u{b1} 0.00,1.00 \u{b1} 0.00"));
        assert!(read_tlx_csv("md,pd,td,pe,ef,fr\n0,1,1,1,1,1\n".as_bytes()).is_err());
    }
}
