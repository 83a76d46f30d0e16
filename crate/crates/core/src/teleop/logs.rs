//! CSV sample and command logs for offline replay of the mappers.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{MapperCommand, RawMouseSample};

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse { line, msg: format!("missing column {i}") })?;
    raw.trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad number {raw:?} in column {i}") })
}

fn flag(rec: &csv::StringRecord, i: usize, line: usize) -> Result<bool> {
    match rec.get(i).map(str::trim) {
        Some("0") | Some("false") => Ok(false),
        Some("1") | Some("true") => Ok(true),
        other => Err(Error::Parse { line, msg: format!("bad button flag {other:?}") }),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(r)
}

/// Reads `t,tx,ty,tz,rx,ry,rz,left,right`.
pub fn read_mouse_log(r: impl Read) -> Result<Vec<RawMouseSample>> {
    let mut out = Vec::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 9 {
            return Err(Error::Parse { line, msg: format!("expected 9 columns, got {}", rec.len()) });
        }
        let mut v = [0.0; 7];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = field(&rec, j, line)?;
        }
        out.push(RawMouseSample {
            t: v[0],
            dp_raw: [v[1], v[2], v[3]],
            de_raw: [v[4], v[5], v[6]],
            left_button: flag(&rec, 7, line)?,
            right_button: flag(&rec, 8, line)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopSample {
    pub t: f64,
    pub cop: [f64; 2],
    pub rate: [f64; 2],
}

/// Reads `t,x,y` or `t,x,y,vx,vy`. Without rate columns the rate is the
/// backward difference (zero for the first sample).
pub fn read_cop_log(r: impl Read) -> Result<Vec<CopSample>> {
    let mut out: Vec<CopSample> = Vec::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let (t, x, y) = (field(&rec, 0, line)?, field(&rec, 1, line)?, field(&rec, 2, line)?);
        let rate = match rec.len() {
            3 => match out.last() {
                Some(p) if t > p.t => [(x - p.cop[0]) / (t - p.t), (y - p.cop[1]) / (t - p.t)],
                Some(_) => return Err(Error::NonMonotone { line, prev: out.last().map_or(0.0, |p| p.t), next: t }),
                None => [0.0, 0.0],
            },
            5 => [field(&rec, 3, line)?, field(&rec, 4, line)?],
            n => return Err(Error::Parse { line, msg: format!("expected 3 or 5 columns, got {n}") }),
        };
        out.push(CopSample { t, cop: [x, y], rate });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandLogRow {
    pub t: f64,
    pub command: MapperCommand,
}

/// Writes `t,kind,ax0..ax5`.
pub fn write_command_log(rows: &[CommandLogRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "kind", "ax0", "ax1", "ax2", "ax3", "ax4", "ax5"])?;
    for row in rows {
        let mut rec = vec![row.t.to_string(), row.command.kind().to_string()];
        rec.extend(row.command.axes().iter().map(f64::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
