//! Pearson-product similarity between trajectories and its average over a
//! grid of initial conditions.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::engine::TrajectorySource;
use crate::error::{Error, Result};
use crate::meanfield::{self, Stability};
use crate::spin_model::ModelParams;
use crate::sweep::{parallel_map, task_seed};
use crate::trajectory::{BlochVector, Trajectory};

const DEGENERATE_VAR: f64 = 1e-12;
const DEGENERATE_MEAN_GAP: f64 = 1e-6;

/// Pearson correlation. Constant inputs: two constants with (nearly) equal
/// means correlate perfectly, a constant against anything else scores 0.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::domain("pearson needs at least two samples"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let (va, vb) = (saa / n, sbb / n);
    match (va < DEGENERATE_VAR, vb < DEGENERATE_VAR) {
        (true, true) => Ok(if (ma - mb).abs() < DEGENERATE_MEAN_GAP { 1.0 } else { 0.0 }),
        (true, false) | (false, true) => Ok(0.0),
        _ => Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)),
    }
}

fn check_grids(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0)) {
        return Err(Error::domain("trajectories are not on the same time grid"));
    }
    Ok(())
}

/// `|cor(X, X') cor(Y, Y') cor(Z, Z')|`.
pub fn similarity(reference: &Trajectory, simulated: &Trajectory) -> Result<f64> {
    check_grids(reference, simulated)?;
    let cx = pearson(&reference.xs(), &simulated.xs())?;
    let cy = pearson(&reference.ys(), &simulated.ys())?;
    let cz = pearson(&reference.zs(), &simulated.zs())?;
    Ok((cx * cy * cz).abs())
}

/// Removes `2 pi` jumps between consecutive samples.
pub fn unwrap_phase(phi: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phi.len());
    let mut offset: f64 = 0.0;
    for (i, &p) in phi.iter().enumerate() {
        if i > 0 {
            let d: f64 = p + offset - out[i - 1];
            offset -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        out.push(p + offset);
    }
    out
}

fn angles(t: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let (th, ph): (Vec<f64>, Vec<f64>) = t.points.iter().map(|p| p.angles()).unzip();
    (th, unwrap_phase(&ph))
}

/// `|cor(theta, theta') cor(phi, phi')|` with unwrapped azimuths.
pub fn similarity_angular(reference: &Trajectory, simulated: &Trajectory) -> Result<f64> {
    check_grids(reference, simulated)?;
    let (ta, pa) = angles(reference);
    let (tb, pb) = angles(simulated);
    Ok((pearson(&ta, &tb)? * pearson(&pa, &pb)?).abs())
}

pub fn average_similarity(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("no similarity values to average"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Initial conditions on an `n x n` grid that is uniform over the sphere:
/// cell centres in `(cos theta, phi)`. Returns `(theta, phi)` row-major in
/// `cos theta`.
pub fn initial_grid(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let c = -1.0 + (2.0 * i as f64 + 1.0) / n as f64;
        for k in 0..n {
            let phi = -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64;
            out.push((c.acos(), phi));
        }
    }
    out
}

/// Fixed points of the flow together with a dense sampling of every
/// separatrix (the energy level sets through saddles).
#[derive(Debug, Clone)]
pub struct SingularSet {
    pub fixed_points: Vec<BlochVector>,
    pub separatrix: Vec<BlochVector>,
}

impl SingularSet {
    pub fn new(params: &ModelParams) -> Self {
        let fps = meanfield::fixed_points(params);
        let (s, p) = (params.s, params.p as i32);
        let energy = |x: &BlochVector| -(1.0 - s) * x.y - s / p as f64 * x.z.powi(p);
        let mut separatrix = Vec::new();
        let levels: Vec<f64> = fps.iter().filter(|(_, k)| *k == Stability::Saddle).map(|(x, _)| energy(x)).collect();
        // E = -(1-s) sqrt(1-Z^2) sin(phi) - (s/p) Z^p is solved for phi on
        // a dense ladder of Z values
        let nz = 4000;
        for &e in &levels {
            for i in 0..=nz {
                let z = -1.0 + 2.0 * i as f64 / nz as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let rhs = -e - s / p as f64 * z.powi(p);
                if rho == 0.0 || s == 1.0 {
                    continue;
                }
                let sin_phi = rhs / ((1.0 - s) * rho);
                if sin_phi.abs() <= 1.0 {
                    let a = sin_phi.asin();
                    for phi in [a, PI - a] {
                        separatrix.push(BlochVector::new(rho * phi.cos(), rho * phi.sin(), z));
                    }
                }
            }
        }
        SingularSet { fixed_points: fps.into_iter().map(|(x, _)| x).collect(), separatrix }
    }

    /// Angular distance from `x` to the nearest fixed point or separatrix sample.
    pub fn distance(&self, x: &BlochVector) -> f64 {
        self.fixed_points.iter().chain(&self.separatrix).map(|q| x.angle_to(q)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityCell {
    pub theta: f64,
    pub phi: f64,
    /// `None` when a trajectory failed.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityGrid {
    pub n_sim: usize,
    pub cells: Vec<SimilarityCell>,
    pub failures: Vec<String>,
}

impl SimilarityGrid {
    fn values_where(&self, keep: impl Fn(&SimilarityCell) -> bool) -> Vec<f64> {
        self.cells.iter().filter(|c| keep(c)).filter_map(|c| c.value).collect()
    }

    /// Average over all cells that produced a value.
    pub fn average(&self) -> Result<f64> {
        average_similarity(&self.values_where(|_| true))
    }

    /// Average over cells farther than `radius` from every fixed point and separatrix.
    pub fn average_excluding(&self, set: &SingularSet, radius: f64) -> Result<f64> {
        average_similarity(&self.values_where(|c| set.distance(&BlochVector::from_angles(c.theta, c.phi)) > radius))
    }

    /// CSV with header `theta,phi,S`; failed cells have an empty `S`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,phi,S")?;
        for c in &self.cells {
            let v = c.value.map(|v| format!("{v:.10}")).unwrap_or_default();
            writeln!(out, "{:.10},{:.10},{v}", c.theta, c.phi)?;
        }
        Ok(())
    }
}

/// Similarity between two engines over the `n_sim x n_sim` initial grid.
/// Cell `i` draws its random stream from `task_seed(seed, i)`.
pub fn similarity_grid(
    reference: &dyn TrajectorySource,
    simulated: &dyn TrajectorySource,
    params: &ModelParams,
    n_sim: usize,
    seed: u64,
    workers: usize,
    angular: bool,
) -> Result<SimilarityGrid> {
    if n_sim == 0 {
        return Err(Error::domain("n_sim must be >= 1"));
    }
    let ics = initial_grid(n_sim);
    let results = parallel_map(&ics, workers, |i, &(theta, phi)| -> Result<f64> {
        let x0 = BlochVector::from_angles(theta, phi);
        let a = reference.trajectory(x0, params, task_seed(seed, i))?;
        let b = simulated.trajectory(x0, params, task_seed(seed, i))?;
        if angular {
            similarity_angular(&a, &b)
        } else {
            similarity(&a, &b)
        }
    })?;
    let mut failures = Vec::new();
    let cells = ics
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (&(theta, phi), r))| {
            let value = match r {
                Ok(Ok(v)) => Some(v),
                Ok(Err(e)) => {
                    failures.push(format!("cell {i}: {e}"));
                    None
                }
                Err(p) => {
                    failures.push(format!("cell {i}: panic: {}", p.message));
                    None
                }
            };
            SimilarityCell { theta, phi, value }
        })
        .collect();
    Ok(SimilarityGrid { n_sim, cells, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ClassicalEngine, Stepping};

    fn traj(f: impl Fn(f64) -> BlochVector, n: usize) -> Trajectory {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.05).collect();
        let points = times.iter().map(|&t| f(t)).collect();
        Trajectory::new(times, points).unwrap()
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 4.0, 3.0];
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[2.0; 4], &[2.0; 4]).unwrap(), 1.0);
        assert_eq!(pearson(&[2.0; 4], &[2.5; 4]).unwrap(), 0.0);
        assert_eq!(pearson(&[2.0; 4], &a).unwrap(), 0.0);
        assert!(pearson(&a, &a[..3]).is_err());
        assert!(pearson(&a[..1], &a[..1]).is_err());
    }

    #[test]
    fn similarity_of_identical_and_fixed_point_trajectories() {
        let t = traj(|t| BlochVector::from_angles(1.0 + 0.3 * t.sin(), t), 200);
        assert!((similarity(&t, &t).unwrap() - 1.0).abs() < 1e-12);
        assert!((similarity_angular(&t, &t).unwrap() - 1.0).abs() < 1e-12);
        let fp = traj(|_| BlochVector::Y, 50);
        assert_eq!(similarity(&fp, &fp).unwrap(), 1.0);
        let short = traj(|_| BlochVector::Y, 49);
        assert!(similarity(&fp, &short).is_err());
    }

    #[test]
    fn quarter_period_lag_decorrelates_the_polar_angle() {
        // rigid precession with an oscillating tilt; a lag of a quarter
        // period makes the polar-angle series orthogonal
        let n = 4000;
        let w = 2.0 * PI / 10.0;
        let a = traj(|t| BlochVector::from_angles(1.0 + 0.4 * (w * t).cos(), 0.3 * t), n);
        let b = traj(|t| BlochVector::from_angles(1.0 + 0.4 * (w * t + PI / 2.0).cos(), 0.3 * t), n);
        assert!(similarity_angular(&a, &b).unwrap() < 0.05);
        // a half-period lag flips the sign, which the absolute value hides
        let c = traj(|t| BlochVector::from_angles(1.0 + 0.4 * (w * t + PI).cos(), 0.3 * t), n);
        assert!(similarity_angular(&a, &c).unwrap() > 0.99);
    }

    #[test]
    fn unwrap_removes_branch_jumps() {
        let raw: Vec<f64> = (0..100).map(|i| (0.2 * i as f64).sin().atan2((0.2 * i as f64).cos())).collect();
        let un = unwrap_phase(&raw);
        for (i, v) in un.iter().enumerate() {
            assert!((v - 0.2 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_is_uniform_over_the_sphere() {
        let g = initial_grid(10);
        assert_eq!(g.len(), 100);
        let mean_z: f64 = g.iter().map(|(t, _)| t.cos()).sum::<f64>() / 100.0;
        assert!(mean_z.abs() < 1e-12);
        assert!(g.iter().all(|(t, p)| *t > 0.0 && *t < PI && p.abs() < PI));
    }

    #[test]
    fn classical_against_itself_averages_to_one() {
        let e = ClassicalEngine(Stepping::new(0.05, 200, 1.0));
        let params = ModelParams::mean_field(2, 0.65).unwrap();
        let g = similarity_grid(&e, &e, &params, 6, 0, 2, false).unwrap();
        assert!((g.average().unwrap() - 1.0).abs() < 1e-12);
        assert!(g.failures.is_empty());
        assert!(g.cells.iter().all(|c| (0.0..=1.0).contains(&c.value.unwrap())));
    }

    #[test]
    fn singular_set_p2() {
        let params = ModelParams::mean_field(2, 0.65).unwrap();
        let set = SingularSet::new(&params);
        assert_eq!(set.fixed_points.len(), 4);
        assert!(!set.separatrix.is_empty());
        // the saddle at +y lies on its own separatrix
        assert!(set.distance(&BlochVector::Y) < 1e-9);
        // every separatrix sample shares the saddle energy
        let e = |x: &BlochVector| -(0.35) * x.y - 0.65 / 2.0 * x.z * x.z;
        assert!(set.separatrix.iter().all(|x| (e(x) + 0.35).abs() < 1e-12));
        // below the onset there is no saddle and no separatrix
        assert!(SingularSet::new(&ModelParams::mean_field(2, 0.3).unwrap()).separatrix.is_empty());
    }
}
