//! CSV readers/writers for trajectories and benchmark tables. Numeric cells
//! are written with 17 significant digits so round trips are lossless.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array1;

use crate::dynamics::{State, Trajectory};
use crate::error::{Error, Result};
use crate::harness::{BenchmarkRow, LorenzCell};

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One or more trajectories, concatenated; the time column restarts at each
/// trajectory boundary.
pub fn trajectories_to_csv(trajs: &[Trajectory]) -> String {
    let dim = trajs.first().map_or(0, Trajectory::dim);
    let mut out = String::from("t");
    for i in 1..=dim {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for traj in trajs {
        for (i, s) in traj.states.iter().enumerate() {
            out.push_str(&fmt_f64(traj.time_at(i)));
            for v in s.iter() {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
    }
    out
}

/// Parses the `t,x1,..` schema; a non-increasing time stamp starts a new
/// trajectory.
pub fn trajectories_from_csv(text: &str) -> Result<Vec<Trajectory>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::EmptyInput("empty CSV"))?;
    let dim = header.split(',').count().saturating_sub(1);
    if dim == 0 {
        return Err(Error::InvalidParameter("CSV needs t plus state columns".into()));
    }
    let mut segments: Vec<(Vec<f64>, Vec<State>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", lineno + 2)))
            })
            .collect::<Result<_>>()?;
        if fields.len() != dim + 1 {
            return Err(Error::InvalidParameter(format!(
                "line {}: expected {} columns, got {}",
                lineno + 2,
                dim + 1,
                fields.len()
            )));
        }
        let t = fields[0];
        let state = Array1::from(fields[1..].to_vec());
        let start_new = segments
            .last()
            .map_or(true, |(ts, _)| t <= *ts.last().unwrap());
        if start_new {
            segments.push((vec![t], vec![state]));
        } else {
            let (ts, states) = segments.last_mut().unwrap();
            ts.push(t);
            states.push(state);
        }
    }
    segments
        .into_iter()
        .map(|(ts, states)| {
            let dt = if ts.len() >= 2 { ts[1] - ts[0] } else { 1.0 };
            Trajectory::new(states, dt, ts[0])
        })
        .collect()
}

pub fn write_trajectories(trajs: &[Trajectory], path: &Path) -> Result<()> {
    std::fs::write(path, trajectories_to_csv(trajs))
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
    trajectories_from_csv(&text)
}

pub fn duffing_rows_to_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("method,dict_kind,hyperparam,mse,n_train_pairs,diverged\n");
    for r in rows {
        let mse = r.mse.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method.as_str(),
            r.dict_kind,
            r.hyperparam,
            mse,
            r.n_train_pairs,
            r.diverged
        );
    }
    out
}

pub fn lorenz_cell_to_csv(cell: &LorenzCell) -> String {
    let mut out = String::from("horizon,mse_raw,mse_aug,mse_half_aug\n");
    for row in &cell.rows {
        let cellval = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.horizon,
            cellval(row.mse_raw),
            cellval(row.mse_aug),
            cellval(row.mse_half_aug)
        );
    }
    out
}

/// `x1,x2,label` grid output for the basin subcommand.
pub fn basin_grid_to_csv(rows: &[(f64, f64, usize)]) -> String {
    let mut out = String::from("x1,x2,label\n");
    for (x1, x2, label) in rows {
        let _ = writeln!(out, "{},{},{label}", fmt_f64(*x1), fmt_f64(*x2));
    }
    out
}
