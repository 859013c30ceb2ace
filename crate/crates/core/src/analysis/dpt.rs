//! Long-time order parameters as a function of `s` and extraction of the
//! dynamical critical point from them.

use std::io::Write;

use serde::Serialize;

use crate::engine::TrajectorySource;
use crate::error::{Error, Result};
use crate::meanfield::long_time_averages;
use crate::spin_model::ModelParams;
use crate::sweep::{parallel_map, task_seed};
use crate::trajectory::BlochVector;

/// Minimum ratio of the peak `|dZ/ds|` to its median for a transition to count.
pub const PROMINENCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DptScan {
    pub p: u32,
    pub n: u64,
    pub s_grid: Vec<f64>,
    pub z_inf: Vec<f64>,
    pub czz_inf: Vec<f64>,
    /// Failed `(s, run)` tasks; their runs are left out of the averages.
    pub failures: Vec<String>,
}

impl DptScan {
    /// CSV with header `s,Z_inf,Czz_inf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,Z_inf,Czz_inf")?;
        for i in 0..self.s_grid.len() {
            writeln!(out, "{:.6},{:.10},{:.10}", self.s_grid[i], self.z_inf[i], self.czz_inf[i])?;
        }
        Ok(())
    }

    pub fn critical_point(&self) -> Result<f64> {
        estimate_critical_point(&self.s_grid, &self.z_inf)
    }
}

/// Settings of a scan beyond the engine itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    /// Trajectories averaged per grid point.
    pub runs: usize,
    pub burn_in: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { runs: 1, burn_in: 0.0, seed: 0, workers: 1 }
    }
}

/// Runs the engine from the `+z` pole for every `s` and averages the
/// long-time `Z` and `czz` over `opts.runs` trajectories. Task
/// `i * runs + r` (grid point `i`, run `r`) uses `task_seed(seed, i * runs + r)`.
pub fn dpt_scan(
    engine: &dyn TrajectorySource,
    base: &ModelParams,
    s_grid: &[f64],
    opts: &ScanOptions,
) -> Result<DptScan> {
    if s_grid.is_empty() || opts.runs == 0 {
        return Err(Error::domain("need a nonempty s grid and runs >= 1"));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("s grid must be strictly increasing"));
    }
    let tasks: Vec<(usize, f64)> =
        s_grid.iter().enumerate().flat_map(|(i, &s)| (0..opts.runs).map(move |_| (i, s))).collect();
    let results = parallel_map(&tasks, opts.workers, |k, &(_, s)| -> Result<(f64, f64)> {
        let params = base.with_s(s);
        params.validate()?;
        let tr = engine.trajectory(BlochVector::Z, &params, task_seed(opts.seed, k))?;
        long_time_averages(&tr, opts.burn_in)
    })?;

    let mut sums = vec![(0.0, 0.0, 0usize); s_grid.len()];
    let mut failures = Vec::new();
    for (k, ((i, s), r)) in tasks.iter().zip(results).enumerate() {
        match r {
            Ok(Ok((z, c))) => {
                sums[*i].0 += z;
                sums[*i].1 += c;
                sums[*i].2 += 1;
            }
            Ok(Err(e)) => failures.push(format!("task {k} (s = {s}): {e}")),
            Err(p) => failures.push(format!("task {k} (s = {s}): panic: {}", p.message)),
        }
    }
    if let Some(i) = sums.iter().position(|t| t.2 == 0) {
        return Err(Error::numerical(format!(
            "every run failed at s = {}: {}",
            s_grid[i],
            failures.last().map(String::as_str).unwrap_or("")
        )));
    }
    Ok(DptScan {
        p: base.p,
        n: base.n,
        s_grid: s_grid.to_vec(),
        z_inf: sums.iter().map(|t| t.0 / t.2 as f64).collect(),
        czz_inf: sums.iter().map(|t| t.1 / t.2 as f64).collect(),
        failures,
    })
}

/// Location of the steepest change of `Z_inf(s)`.
///
/// Finite differences sit at interval midpoints; the largest `|dZ/ds|` is
/// refined by the vertex of the parabola through it and its neighbours.
/// Fails with [`Error::NoTransition`] when the peak is less than
/// [`PROMINENCE`] times the median slope.
pub fn estimate_critical_point(s: &[f64], z_inf: &[f64]) -> Result<f64> {
    if s.len() != z_inf.len() {
        return Err(Error::LengthMismatch { left: s.len(), right: z_inf.len() });
    }
    if s.len() < 5 {
        return Err(Error::domain("need at least 5 scan points"));
    }
    let mid: Vec<f64> = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let slope: Vec<f64> =
        s.windows(2).zip(z_inf.windows(2)).map(|(a, b)| ((b[1] - b[0]) / (a[1] - a[0])).abs()).collect();
    let (k, &peak) = slope.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::NoTransition)?;
    let mut sorted = slope.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(peak > 0.0) || peak < PROMINENCE * median {
        return Err(Error::NoTransition);
    }
    if k == 0 || k + 1 == slope.len() {
        return Ok(mid[k]);
    }
    let (x0, x1, x2) = (mid[k - 1], mid[k], mid[k + 1]);
    let (y0, y1, y2) = (slope[k - 1], slope[k], slope[k + 1]);
    let den = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
    if !(a < 0.0) {
        return Ok(x1);
    }
    Ok((-b / (2.0 * a)).clamp(x0, x2))
}
