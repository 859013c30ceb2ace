//! Average phase-space similarity to the classical flow over a grid of
//! `(s, N)`.

use std::io::Write;

use serde::Serialize;

use crate::analysis::similarity::similarity_grid;
use crate::engine::{ClassicalEngine, Stepping, TrajectorySource};
use crate::error::{Error, Result};
use crate::spin_model::ModelParams;
use crate::sweep::task_seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub p: u32,
    pub s_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    /// `values[i][k]` is the average similarity at `s_grid[i]`, `n_grid[k]`.
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    /// CSV with header `s,N,S_bar`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,N,S_bar")?;
        for (i, s) in self.s_grid.iter().enumerate() {
            for (k, n) in self.n_grid.iter().enumerate() {
                writeln!(out, "{s:.6},{n},{:.10}", self.values[i][k])?;
            }
        }
        Ok(())
    }
}

/// For every `(s, N)` compares `simulated` against the classical flow on an
/// `n_sim x n_sim` initial grid. Cell `(i, k)` uses the run seed
/// `task_seed(seed, i * n_grid.len() + k)`.
#[allow(clippy::too_many_arguments)]
pub fn qc_heatmap(
    simulated: &dyn TrajectorySource,
    stepping: Stepping,
    p: u32,
    s_grid: &[f64],
    n_grid: &[u64],
    n_sim: usize,
    seed: u64,
    workers: usize,
) -> Result<Heatmap> {
    if s_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::domain("heat map grids must be nonempty"));
    }
    let reference = ClassicalEngine(stepping);
    let mut values = Vec::with_capacity(s_grid.len());
    for (i, &s) in s_grid.iter().enumerate() {
        let mut row = Vec::with_capacity(n_grid.len());
        for (k, &n) in n_grid.iter().enumerate() {
            let params = ModelParams::new(p, s, n)?;
            let cell_seed = task_seed(seed, i * n_grid.len() + k);
            let grid = similarity_grid(&reference, simulated, &params, n_sim, cell_seed, workers, false)?;
            row.push(grid.average()?);
        }
        values.push(row);
    }
    Ok(Heatmap { p, s_grid: s_grid.to_vec(), n_grid: n_grid.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GaussianEngine;

    #[test]
    fn small_heatmap_layout_and_trend() {
        let st = Stepping::new(0.01, 3000, 25.0).with_stride(10);
        let g = GaussianEngine::new(st);
        let h = qc_heatmap(&g, st, 2, &[0.3], &[100, 1_000_000], 4, 1, 1).unwrap();
        assert_eq!(h.values.len(), 1);
        assert!(h.values[0].iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(h.values[0][1] > h.values[0][0], "{:?}", h.values);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
