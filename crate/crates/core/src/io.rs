//! File formats: track CSV, per-sample estimate tables, slope tables and JSON
//! reports.
//!
//! Floats are written in shortest round-trip scientific notation, so reading a
//! file back reproduces every value bit for bit. Undefined values are empty
//! cells. Writes go through a temporary file in the target directory and are
//! renamed into place.

use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analysis::EstimateRow;
use crate::error::{Error, Result};
use crate::invariants::{DistanceEstimateSeries, SlopeEstimate};
use crate::kinematics::{KinematicTrack, Provenance, ScenePoint, TimeGrid, Vec3};

pub const TRACK_HEADER: [&str; 10] = ["t", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az"];

pub const ESTIMATE_HEADER: [&str; 16] = [
    "t",
    "px",
    "py",
    "pz",
    "speed_v",
    "alpha",
    "q_norm",
    "d_truth",
    "d_eq1",
    "d_eq2",
    "d_eq3",
    "d_eq5",
    "valid_eq1",
    "valid_eq2",
    "valid_eq3",
    "valid_eq5",
];

pub const SLOPE_HEADER: [&str; 6] = ["t", "slope_angle", "dob_x", "dob_y", "dob_z", "degenerate"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes `bytes` to `path` atomically, creating parent directories.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(parent)?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, to_json_string(value)?.as_bytes())
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn track_to_csv(track: &KinematicTrack) -> Result<Vec<u8>> {
    let g = track.grid();
    csv_bytes(
        &TRACK_HEADER,
        (0..track.len()).map(|k| {
            let (p, v, a) = (
                track.position()[k],
                track.velocity()[k],
                track.acceleration()[k],
            );
            std::iter::once(g.time(k))
                .chain(p.iter().copied())
                .chain(v.iter().copied())
                .chain(a.iter().copied())
                .map(fmt_f64)
                .collect::<Vec<_>>()
        }),
    )
}

pub fn write_track_csv(path: &Path, track: &KinematicTrack) -> Result<()> {
    atomic_write(path, &track_to_csv(track)?)
}

fn check_header(found: &csv::StringRecord, expected: &[&str], what: &str) -> Result<()> {
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::Parse(format!(
            "{what}: header must be `{}`, found `{}`",
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    header: &'a [&'a str],
    line: u64,
}

impl Row<'_> {
    fn cell(&self, col: usize) -> &str {
        self.record.get(col).unwrap_or("").trim()
    }

    fn err(&self, col: usize, msg: &str) -> Error {
        Error::Parse(format!(
            "line {}: column `{}`: {msg}",
            self.line, self.header[col]
        ))
    }

    fn opt(&self, col: usize) -> Result<Option<f64>> {
        let s = self.cell(col);
        if s.is_empty() {
            return Ok(None);
        }
        match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(self.err(col, &format!("`{s}` is not a finite number"))),
        }
    }

    fn num(&self, col: usize) -> Result<f64> {
        self.opt(col)?
            .ok_or_else(|| self.err(col, "value is required"))
    }

    fn flag(&self, col: usize) -> Result<bool> {
        match self.cell(col) {
            "1" => Ok(true),
            "0" => Ok(false),
            s => Err(self.err(col, &format!("`{s}` is not 0 or 1"))),
        }
    }
}

fn read_records(
    bytes: &[u8],
    header: &[&str],
    what: &str,
) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    check_header(r.headers()?, header, what)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("{what}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "{what}: line {line}: expected {} columns, found {}",
                header.len(),
                rec.len()
            )));
        }
        out.push((line, rec));
    }
    Ok(out)
}

/// Recovers the sampling grid from a time column, which must be uniform.
pub fn infer_grid(times: &[f64]) -> Result<TimeGrid> {
    if times.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: times.len(),
        });
    }
    let n = times.len();
    let span = times[n - 1] - times[0];
    if span.is_nan() || span <= 0.0 {
        return Err(Error::Parse("time column must be increasing".into()));
    }
    let mut rate = (n - 1) as f64 / span;
    if (rate - rate.round()).abs() < 1e-6 * rate.max(1.0) {
        rate = rate.round();
    }
    let grid = TimeGrid::new(rate, n, times[0])?;
    let step = grid.step();
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.time(k)).abs() > 1e-6 * step {
            return Err(Error::Parse(format!(
                "time column is not uniformly sampled at row {} (t = {t})",
                k + 1
            )));
        }
    }
    Ok(grid)
}

/// Parses a track CSV. Rows with all velocity and acceleration cells filled
/// give an `Ingested` track; if those columns are empty throughout, they are
/// derived from positions.
pub fn parse_track_csv(bytes: &[u8]) -> Result<KinematicTrack> {
    let records = read_records(bytes, &TRACK_HEADER, "track csv")?;
    let mut times = Vec::with_capacity(records.len());
    let mut pos = Vec::with_capacity(records.len());
    let mut derivs: Vec<Option<(Vec3, Vec3)>> = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let row = Row {
            record: rec,
            header: &TRACK_HEADER,
            line: *line,
        };
        times.push(row.num(0)?);
        pos.push(Vec3::new(row.num(1)?, row.num(2)?, row.num(3)?));
        let cells: Vec<Option<f64>> = (4..10).map(|c| row.opt(c)).collect::<Result<_>>()?;
        derivs.push(if cells.iter().all(Option::is_some) {
            let c: Vec<f64> = cells.into_iter().flatten().collect();
            Some((Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5])))
        } else if cells.iter().all(Option::is_none) {
            None
        } else {
            return Err(Error::Parse(format!(
                "line {line}: velocity and acceleration cells must be all filled or all empty"
            )));
        });
    }
    let grid = infer_grid(&times)?;
    if derivs.iter().all(Option::is_none) {
        return KinematicTrack::from_positions(grid, pos);
    }
    if derivs.iter().any(Option::is_none) {
        return Err(Error::Parse(
            "velocity and acceleration must be given on every row or on none".into(),
        ));
    }
    let (vel, acc) = derivs.into_iter().flatten().unzip();
    KinematicTrack::new(grid, pos, vel, acc, Provenance::Ingested)
}

pub fn read_track_csv(path: &Path) -> Result<KinematicTrack> {
    let bytes = std::fs::read(path)?;
    parse_track_csv(&bytes).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn estimate_table_to_csv(rows: &[EstimateRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &ESTIMATE_HEADER,
        rows.iter().map(|r| {
            let mut cells: Vec<String> =
                [r.t, r.position[0], r.position[1], r.position[2], r.speed_v]
                    .into_iter()
                    .map(fmt_f64)
                    .collect();
            cells.push(fmt_opt(r.alpha));
            cells.push(fmt_f64(r.q_norm));
            cells.push(fmt_f64(r.d_truth));
            let ests = [r.d_eq1, r.d_eq2, r.d_eq3, r.d_eq5];
            cells.extend(ests.iter().map(|e| fmt_opt(*e)));
            cells.extend(ests.iter().map(|e| fmt_flag(e.is_some()).to_string()));
            cells
        }),
    )
}

pub fn write_estimate_csv(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    atomic_write(path, &estimate_table_to_csv(rows)?)
}

pub fn parse_estimate_csv(bytes: &[u8]) -> Result<Vec<EstimateRow>> {
    read_records(bytes, &ESTIMATE_HEADER, "estimate table")?
        .iter()
        .map(|(line, rec)| {
            let row = Row {
                record: rec,
                header: &ESTIMATE_HEADER,
                line: *line,
            };
            let mut ests = [None; 4];
            for (j, est) in ests.iter_mut().enumerate() {
                *est = row.opt(8 + j)?;
                if row.flag(12 + j)? != est.is_some() {
                    return Err(row.err(12 + j, "validity flag disagrees with the estimate cell"));
                }
            }
            Ok(EstimateRow {
                t: row.num(0)?,
                position: [row.num(1)?, row.num(2)?, row.num(3)?],
                speed_v: row.num(4)?,
                alpha: row.opt(5)?,
                q_norm: row.num(6)?,
                d_truth: row.num(7)?,
                d_eq1: ests[0],
                d_eq2: ests[1],
                d_eq3: ests[2],
                d_eq5: ests[3],
            })
        })
        .collect()
}

pub fn read_estimate_csv(path: &Path) -> Result<Vec<EstimateRow>> {
    let bytes = std::fs::read(path)?;
    parse_estimate_csv(&bytes).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Rebuilds an estimate series from table rows, for re-running the accuracy
/// statistics on an exported table.
pub fn estimates_from_rows(
    rows: &[EstimateRow],
    object: ScenePoint,
) -> Result<DistanceEstimateSeries> {
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let grid = infer_grid(&times)?;
    let col = |f: fn(&EstimateRow) -> Option<f64>| rows.iter().map(f).collect::<Vec<_>>();
    Ok(DistanceEstimateSeries {
        grid,
        object,
        observer_position: rows.iter().map(|r| Vec3::from(r.position)).collect(),
        d_truth: rows.iter().map(|r| r.d_truth).collect(),
        d_eq1: col(|r| r.d_eq1),
        d_eq2: col(|r| r.d_eq2),
        d_eq3: col(|r| r.d_eq3),
        d_eq5: col(|r| r.d_eq5),
    })
}

pub fn slope_to_csv(est: &SlopeEstimate) -> Result<Vec<u8>> {
    csv_bytes(
        &SLOPE_HEADER,
        (0..est.slope_angle.len()).map(|k| {
            let dob = est.direction_of_balance[k];
            vec![
                fmt_f64(est.grid.time(k)),
                fmt_opt(est.slope_angle[k]),
                fmt_opt(dob.map(|d| d.x)),
                fmt_opt(dob.map(|d| d.y)),
                fmt_opt(dob.map(|d| d.z)),
                fmt_flag(est.degenerate(k)).to_string(),
            ]
        }),
    )
}

pub fn write_slope_csv(path: &Path, est: &SlopeEstimate) -> Result<()> {
    atomic_write(path, &slope_to_csv(est)?)
}
