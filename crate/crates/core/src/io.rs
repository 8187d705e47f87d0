//! CSV output, reference-trajectory ingestion and comparison reports.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`.

use std::path::Path;

use thiserror::Error;

use crate::propagate::Trajectory;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("time ranges do not overlap")]
    NoOverlap,
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header and rows of numbers.
pub fn write_table(path: &Path, headers: &[String], rows: &[Vec<f64>]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(headers)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| fmt(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, ground_pop, min_eig, trace, neg_mass` and optionally `dist_to_exact`.
pub fn trajectory_rows(traj: &Trajectory, dist: Option<&[f64]>) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut headers: Vec<String> = ["t", "ground_pop", "min_eig", "trace", "neg_mass"].iter().map(|s| s.to_string()).collect();
    if dist.is_some() {
        headers.push("dist_to_exact".into());
    }
    let rows = (0..traj.len())
        .map(|i| {
            let p = &traj.populations[i];
            let neg: f64 = p.iter().filter(|&&x| x < 0.0).sum::<f64>() + 0.0; // empty sum is -0.0
            let mut r = vec![traj.t[i], p[0], traj.min_eig[i], traj.trace[i], neg];
            if let Some(d) = dist {
                r.push(d.get(i).copied().unwrap_or(f64::NAN));
            }
            r
        })
        .collect();
    (headers, rows)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, dist: Option<&[f64]>) -> Result<(), IoError> {
    let (h, r) = trajectory_rows(traj, dist);
    write_table(path, &h, &r)
}

/// Eigenbasis populations of the last snapshot: `level, energy, population`.
pub fn write_final_populations(path: &Path, traj: &Trajectory, energies: &[f64]) -> Result<(), IoError> {
    let Some(p) = traj.populations.last() else { return Ok(()) };
    let rows: Vec<Vec<f64>> = p.iter().enumerate().map(|(n, &x)| vec![n as f64, energies[n], x]).collect();
    write_table(path, &["level".into(), "energy".into(), "population".into()], &rows)
}

/// Named columns over a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub t: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl ReferenceTrajectory {
    /// Reads a CSV whose first column is time.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let name = path.display().to_string();
        let bad = |msg: String| IoError::Format { path: name.clone(), msg };
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
        if headers.len() < 2 {
            return Err(bad("need a time column and at least one observable".into()));
        }
        let mut t = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(bad(format!("row {} has {} fields, expected {}", line + 2, rec.len(), headers.len())));
            }
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| bad(format!("row {}: `{field}` is not a number", line + 2)))?;
                if !v.is_finite() {
                    return Err(bad(format!("row {}: non-finite value", line + 2)));
                }
                if k == 0 {
                    if t.last().is_some_and(|&p| v <= p) {
                        return Err(bad(format!("row {}: time not strictly increasing", line + 2)));
                    }
                    t.push(v);
                } else {
                    cols[k - 1].push(v);
                }
            }
        }
        Ok(ReferenceTrajectory { t, columns: headers[1..].iter().cloned().zip(cols).collect() })
    }

    pub fn column(&self, name: &str) -> Result<&[f64], IoError> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice()).ok_or_else(|| IoError::MissingColumn(name.into()))
    }

    /// Linear interpolation of column `name` at `t` inside the grid.
    pub fn interpolate(&self, name: &str, t: f64) -> Result<Option<f64>, IoError> {
        let y = self.column(name)?;
        let n = self.t.len();
        if n == 0 || t < self.t[0] || t > self.t[n - 1] {
            return Ok(None);
        }
        let k = self.t.partition_point(|&x| x <= t);
        if k == 0 {
            return Ok(Some(y[0]));
        }
        if k >= n {
            return Ok(Some(y[n - 1]));
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let f = (t - t0) / (t1 - t0);
        Ok(Some(y[k - 1] + f * (y[k] - y[k - 1])))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub t: Vec<f64>,
    pub run: Vec<f64>,
    pub reference: Vec<f64>,
    pub abs_diff: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

/// Reference interpolated onto the run grid over the overlapping range.
pub fn compare(run: &ReferenceTrajectory, reference: &ReferenceTrajectory, observable: &str) -> Result<CompareReport, IoError> {
    let y = run.column(observable)?;
    reference.column(observable)?;
    let mut rep = CompareReport { t: vec![], run: vec![], reference: vec![], abs_diff: vec![], max: 0.0, mean: 0.0 };
    for (i, &t) in run.t.iter().enumerate() {
        if let Some(r) = reference.interpolate(observable, t)? {
            rep.t.push(t);
            rep.run.push(y[i]);
            rep.reference.push(r);
            rep.abs_diff.push((y[i] - r).abs());
        }
    }
    if rep.t.is_empty() {
        return Err(IoError::NoOverlap);
    }
    rep.max = rep.abs_diff.iter().cloned().fold(0.0, f64::max);
    rep.mean = rep.abs_diff.iter().sum::<f64>() / rep.abs_diff.len() as f64;
    Ok(rep)
}

impl CompareReport {
    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let rows: Vec<Vec<f64>> = (0..self.t.len()).map(|i| vec![self.t[i], self.run[i], self.reference[i], self.abs_diff[i]]).collect();
        write_table(path, &["t".into(), "run".into(), "reference".into(), "abs_diff".into()], &rows)
    }
}
