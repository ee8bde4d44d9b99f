use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::elliptic::ConvergenceRow;
use crate::flow::Trajectory;

/// Everything `report_emit` writes for one run.
#[derive(Clone, Debug, Default)]
pub struct RunArtifacts {
    pub trajectory: Trajectory,
    pub convergence: Vec<ConvergenceRow>,
    /// Extra `key=value` lines for `summary.txt`, written in the given order.
    pub summary: Vec<(String, String)>,
}

impl RunArtifacts {
    pub fn new(trajectory: Trajectory) -> Self {
        Self {
            trajectory,
            ..Self::default()
        }
    }

    pub fn with_convergence(mut self, rows: Vec<ConvergenceRow>) -> Self {
        self.convergence = rows;
        self
    }

    pub fn push_summary(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

fn write(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| HarnessError::IoFailure {
        path: path.clone(),
        source,
    })?;
    out.push(path);
    Ok(())
}

fn series<I: IntoIterator<Item = (f64, f64)>>(name: &str, points: I) -> String {
    let mut s = format!("# t {name}\n");
    for (t, v) in points {
        let _ = writeln!(s, "{t:e} {v:e}");
    }
    s
}

/// Writes the run's files into `dir` (created if missing) and returns their
/// paths in write order. An empty trajectory produces `summary.txt` only.
///
/// Fixed names: `snapshot_####.csv`, `diagnostics.csv`, `convergence.csv`,
/// `summary.txt`, plus two-column `*.dat` series.
pub fn report_emit(artifacts: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::IoFailure {
        path: dir.to_path_buf(),
        source,
    })?;
    let traj = &artifacts.trajectory;
    let mut out = Vec::new();

    if !traj.is_empty() {
        for (i, snap) in traj.snapshots.iter().enumerate() {
            write(
                dir,
                &format!("snapshot_{i:04}.csv"),
                &snap.to_csv(),
                &mut out,
            )?;
        }

        let mut diag =
            String::from("t,dt,sup_update,floor_count,min_line_laplacian,stability_bound\n");
        for d in &traj.diagnostics {
            let _ = writeln!(
                diag,
                "{:e},{:e},{:e},{},{:e},{:e}",
                d.t, d.dt, d.sup_update, d.floor_count, d.min_line_laplacian, d.stability_bound
            );
        }
        write(dir, "diagnostics.csv", &diag, &mut out)?;

        let mut conv = String::from("t,distance,extrapolated,in_window\n");
        for r in &artifacts.convergence {
            let _ = writeln!(
                conv,
                "{:e},{:e},{},{}",
                r.t, r.distance, r.extrapolated, r.in_window
            );
        }
        write(dir, "convergence.csv", &conv, &mut out)?;

        let d = &traj.diagnostics;
        write(
            dir,
            "sup_update.dat",
            &series("sup_update", d.iter().map(|d| (d.t, d.sup_update))),
            &mut out,
        )?;
        write(
            dir,
            "min_line_laplacian.dat",
            &series(
                "min_line_laplacian",
                d.iter().map(|d| (d.t, d.min_line_laplacian)),
            ),
            &mut out,
        )?;
        write(
            dir,
            "dt.dat",
            &series("dt", d.iter().map(|d| (d.t, d.dt))),
            &mut out,
        )?;
        if !artifacts.convergence.is_empty() {
            let pts = artifacts.convergence.iter().map(|r| (r.t, r.distance));
            write(dir, "distance.dat", &series("distance", pts), &mut out)?;
        }
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "snapshots={}", traj.len());
    let _ = writeln!(summary, "steps={}", traj.steps());
    if let Some(t) = traj.times.last() {
        let _ = writeln!(summary, "t_final={t:e}");
    }
    match traj.steady_at {
        Some(t) => {
            let _ = writeln!(summary, "steady_at={t:e}");
        }
        None => summary.push_str("steady_at=none\n"),
    }
    for (k, v) in &artifacts.summary {
        let _ = writeln!(summary, "{k}={v}");
    }
    write(dir, "summary.txt", &summary, &mut out)?;
    Ok(out)
}
