//! Classical mean-field flow on the unit sphere, its fixed points and
//! linear stability, and the energy-matching dynamical critical points.

use nalgebra::{Complex, Matrix3};

use crate::error::{Error, Result};
use crate::roots::bisect;
use crate::spin_model::{self, potential_on_meridian, ModelParams};
use crate::trajectory::{BlochVector, Trajectory};

/// Right-hand side of the mean-field equations of motion
/// `dX/dt = -(1-s)Z + s Z^(p-1) Y`, `dY/dt = -s Z^(p-1) X`, `dZ/dt = (1-s) X`.
pub fn flow_rhs(x: BlochVector, params: &ModelParams) -> BlochVector {
    let s = params.s;
    let zp = x.z.powi(params.p as i32 - 1);
    BlochVector::new(-(1.0 - s) * x.z + s * zp * x.y, -s * zp * x.x, (1.0 - s) * x.x)
}

fn rk4_step(x: BlochVector, params: &ModelParams, dt: f64) -> BlochVector {
    let k1 = flow_rhs(x, params);
    let k2 = flow_rhs(x + k1 * (0.5 * dt), params);
    let k3 = flow_rhs(x + k2 * (0.5 * dt), params);
    let k4 = flow_rhs(x + k3 * dt, params);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Fixed-step RK4 integration with renormalisation onto the unit sphere
/// after every step. Records every step.
pub fn integrate(x0: BlochVector, params: &ModelParams, dt: f64, t_max: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_max >= dt) {
        return Err(Error::domain(format!("need dt > 0 and t_max >= dt (dt={dt}, t_max={t_max})")));
    }
    let n_steps = (t_max / dt).round() as usize;
    integrate_steps(x0, params, dt, n_steps, 1)
}

/// As [`integrate`], for an explicit step count, keeping every `stride`-th
/// point and always the last one.
pub fn integrate_steps(
    x0: BlochVector,
    params: &ModelParams,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || stride == 0 {
        return Err(Error::domain("dt must be > 0 and stride >= 1"));
    }
    if !x0.is_finite() || x0.norm() == 0.0 {
        return Err(Error::domain("initial condition must be a finite nonzero vector"));
    }
    let cap = n_steps / stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut points = Vec::with_capacity(cap);
    let mut x = x0.normalized();
    times.push(0.0);
    points.push(x);
    for k in 1..=n_steps {
        x = rk4_step(x, params, dt).normalized();
        if k % stride == 0 || k == n_steps {
            times.push(k as f64 * dt);
            points.push(x);
        }
    }
    if !x.is_finite() {
        return Err(Error::numerical("classical integration diverged"));
    }
    let czz = points.iter().map(|p| p.z * p.z).collect();
    Trajectory::new(times, points)?.with_czz(czz)
}

/// Full Jacobian of [`flow_rhs`].
pub fn jacobian(x: BlochVector, params: &ModelParams) -> Matrix3<f64> {
    let s = params.s;
    let p = params.p as i32;
    let zp1 = x.z.powi(p - 1);
    let dzp1 = (p - 1) as f64 * x.z.powi(p - 2);
    Matrix3::new(0.0, s * zp1, -(1.0 - s) + s * dzp1 * x.y, -s * zp1, 0.0, -s * dzp1 * x.x, 1.0 - s, 0.0, 0.0)
}

/// Tangent map at a fixed point, which must have vanishing X component.
pub fn tangent_map(x: BlochVector, params: &ModelParams) -> Result<Matrix3<f64>> {
    if x.x.abs() > 1e-8 {
        return Err(Error::Precondition(format!("tangent map requires a fixed point with X = 0, got X = {:e}", x.x)));
    }
    let s = params.s;
    let p = params.p as i32;
    let zp1 = x.z.powi(p - 1);
    Ok(Matrix3::new(
        0.0,
        s * zp1,
        -(1.0 - s) + s * (p - 1) as f64 * x.z.powi(p - 2) * x.y,
        -s * zp1,
        0.0,
        0.0,
        1.0 - s,
        0.0,
        0.0,
    ))
}

pub fn eigenvalues(m: &Matrix3<f64>) -> [Complex<f64>; 3] {
    let ev = m.complex_eigenvalues();
    [ev[0], ev[1], ev[2]]
}

/// Largest real part among the tangent-map eigenvalues; positive means unstable.
pub fn max_growth_rate(x: BlochVector, params: &ModelParams) -> Result<f64> {
    let m = tangent_map(x, params)?;
    Ok(eigenvalues(&m).iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Kind of a fixed point of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Center,
    Saddle,
}

/// All fixed points of the flow. They lie on the great circle `X = 0` and are
/// the critical points of `V` restricted to it.
pub fn fixed_points(params: &ModelParams) -> Vec<(BlochVector, Stability)> {
    let mut out: Vec<BlochVector> = vec![BlochVector::Y, -BlochVector::Y];
    let odd = params.p % 2 == 1;
    for &u in params.extrema().iter().skip(1) {
        let y = (1.0 - u * u).max(0.0).sqrt();
        out.push(BlochVector::new(0.0, y, u));
        if odd {
            out.push(BlochVector::new(0.0, -y, -u));
        } else {
            out.push(BlochVector::new(0.0, y, -u));
        }
    }
    let mut unique: Vec<BlochVector> = Vec::new();
    for v in out {
        if unique.iter().all(|w| (v - *w).norm() > 1e-9) {
            unique.push(v);
        }
    }
    unique
        .into_iter()
        .map(|v| {
            let kind = match max_growth_rate(v, params) {
                Ok(g) if g > 1e-9 => Stability::Saddle,
                _ => Stability::Center,
            };
            (v, kind)
        })
        .collect()
}

/// Z component of the unstable fixed point whose separatrix decides the
/// fate of the pole initial condition.
///
/// `p = 2`: the destabilised equator point, `Z = 0`. `p >= 3`: the smaller
/// nontrivial extremum of `V` (closed form for `p = 3`).
pub fn separatrix_z(p: u32, s: f64) -> Result<f64> {
    let onset = spin_model::bifurcation_onset(p)?;
    if !(s > onset) && !(p >= 3 && (s - onset).abs() < 1e-12) {
        return Err(Error::domain(format!("s = {s} is not above the onset {onset} for p = {p}")));
    }
    if s > 1.0 {
        return Err(Error::domain(format!("s must be <= 1, got {s}")));
    }
    match p {
        2 => Ok(0.0),
        3 => {
            let r = (1.0 - s) / s;
            let disc = (1.0 - 4.0 * r * r).max(0.0).sqrt();
            Ok((0.5 - 0.5 * disc).max(0.0).sqrt())
        }
        _ => {
            let params = ModelParams::mean_field(p, s)?;
            let ext = params.extrema();
            ext.get(1).copied().ok_or_else(|| Error::numerical(format!("no nontrivial extremum for p={p}, s={s}")))
        }
    }
}

/// Dynamical critical point for the pole initial condition `Z0 = 1`:
/// the `s` where `V(Z_sp) = V(Z0)`.
pub fn dpt_critical_point(p: u32) -> Result<f64> {
    let onset = spin_model::bifurcation_onset(p)?;
    let pf = p as f64;
    let gap = |s: f64| -> f64 {
        match separatrix_z(p, s) {
            Ok(z) => potential_on_meridian(z, s, p) - (-s / pf),
            Err(_) => f64::NAN,
        }
    };
    bisect(gap, onset + 1e-12, 1.0 - 1e-12, 1e-12)
}

/// Cruder estimate obtained by matching the pole energy to the energy of the
/// equator point `(0, 1, 0)`: `s = p/(p+1)`.
pub fn dpt_pole_estimate(p: u32) -> f64 {
    p as f64 / (p as f64 + 1.0)
}

/// Trapezoidal time averages of `Z` and of the `czz` channel over
/// `[burn_in, t_end]`.
pub fn long_time_averages(traj: &Trajectory, burn_in: f64) -> Result<(f64, f64)> {
    let t0 = *traj.times.first().ok_or_else(|| Error::domain("empty trajectory"))?;
    if !(traj.duration() > burn_in) {
        return Err(Error::domain(format!(
            "trajectory duration {} does not exceed burn-in {burn_in}",
            traj.duration()
        )));
    }
    let start = traj.times.partition_point(|&t| t < t0 + burn_in);
    let czz = traj.czz_or_factorized();
    let zs: Vec<f64> = traj.points.iter().map(|p| p.z).collect();
    let t = &traj.times[start..];
    if t.len() < 2 {
        return Err(Error::domain("fewer than two samples after burn-in"));
    }
    let span = t[t.len() - 1] - t[0];
    let avg = |v: &[f64]| -> f64 {
        let mut acc = 0.0;
        for k in 1..t.len() {
            acc += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
        }
        acc / span
    };
    Ok((avg(&zs[start..]), avg(&czz[start..])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mf(p: u32, s: f64) -> ModelParams {
        ModelParams::mean_field(p, s).unwrap()
    }

    fn energy(x: BlochVector, params: &ModelParams) -> f64 {
        -(1.0 - params.s) * x.y - params.s / params.p as f64 * x.z.powi(params.p as i32)
    }

    #[test]
    fn flow_examples() {
        for p in 2..5 {
            for &s in &[0.0, 0.4, 1.0] {
                assert_eq!(flow_rhs(BlochVector::Y, &mf(p, s)).norm(), 0.0);
            }
            let d = flow_rhs(BlochVector::Z, &mf(p, 0.0));
            assert!((d - BlochVector::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        }
        assert_eq!(flow_rhs(BlochVector::Z, &mf(2, 1.0)).norm(), 0.0);
    }

    #[test]
    fn tangent_map_at_pole_for_pure_interaction() {
        let m = tangent_map(BlochVector::Z, &mf(2, 1.0)).unwrap();
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!(ev.iter().all(|c| c.re.abs() < 1e-12));
        assert!((ev[0].im + 1.0).abs() < 1e-12);
        assert!(ev[1].im.abs() < 1e-12);
        assert!((ev[2].im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_map_at_equator_free_precession() {
        let m = tangent_map(BlochVector::Y, &mf(3, 0.0)).unwrap();
        let mut ims: Vec<f64> = eigenvalues(&m).iter().map(|c| c.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && ims[1].abs() < 1e-12 && (ims[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_map_requires_vanishing_x() {
        assert!(matches!(tangent_map(BlochVector::X, &mf(2, 0.5)), Err(Error::Precondition(_))));
    }

    #[test]
    fn tangent_map_matches_jacobian_on_fixed_points() {
        for p in 2..=4 {
            for &s in &[0.3, 0.7, 0.9] {
                let params = mf(p, s);
                for (fp, _) in fixed_points(&params) {
                    assert!(flow_rhs(fp, &params).norm() < 1e-10);
                    let diff = tangent_map(fp, &params).unwrap() - jacobian(fp, &params);
                    assert!(diff.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn equator_point_p2_loses_stability_at_equilibrium_critical_point() {
        let params = |s| mf(2, s);
        assert!(max_growth_rate(BlochVector::Y, &params(0.45)).unwrap().abs() < 1e-9);
        assert!(max_growth_rate(BlochVector::Y, &params(0.6)).unwrap() > 0.1);
        // growth rate^2 = (1-s)(2s-1)
        let g = max_growth_rate(BlochVector::Y, &params(0.7)).unwrap();
        assert!((g * g - 0.3 * 0.4).abs() < 1e-12);
        let sc = bisect(
            |s| if max_growth_rate(BlochVector::Y, &params(s)).unwrap() > 1e-7 { 1.0 } else { -1.0 },
            0.3,
            0.65,
            1e-9,
        )
        .unwrap();
        let s_eq = spin_model::equilibrium_critical_point(2).unwrap();
        assert!((sc - s_eq).abs() < 1e-6, "crossing at {sc}");
    }

    #[test]
    fn fixed_point_census() {
        // p = 2, s = 0.65: two poles of the y axis (one saddle) plus two wells
        let fps = fixed_points(&mf(2, 0.65));
        assert_eq!(fps.len(), 4);
        assert_eq!(fps.iter().filter(|(_, k)| *k == Stability::Saddle).count(), 1);
        // p = 3, s = 0.75: +-Y, saddle and well in the upper half and their
        // mirror images through the origin
        let fps = fixed_points(&mf(3, 0.75));
        assert_eq!(fps.len(), 6);
        assert_eq!(fps.iter().filter(|(_, k)| *k == Stability::Saddle).count(), 2);
        let fps = fixed_points(&mf(4, 0.5));
        assert_eq!(fps.len(), 2);
    }

    #[test]
    fn integrate_fixed_point_is_constant() {
        let tr = integrate(BlochVector::Y, &mf(2, 0.65), 0.01, 5.0).unwrap();
        assert!(tr.points.iter().all(|p| (*p - BlochVector::Y).norm() < 1e-15));
        assert_eq!(tr.len(), 501);
    }

    #[test]
    fn free_precession_returns_after_one_period() {
        let x0 = BlochVector::from_angles(0.7, 0.4);
        let dt = 2.0 * PI / 1000.0;
        let tr = integrate_steps(x0, &mf(3, 0.0), dt, 1000, 1000).unwrap();
        assert!((tr.last().unwrap() - x0).norm() < 1e-6);
    }

    #[test]
    fn rk4_norm_drift_per_step_is_tiny() {
        let params = mf(3, 0.8);
        let mut x = BlochVector::from_angles(0.3, 1.2);
        for _ in 0..5000 {
            let y = rk4_step(x, &params, 0.01);
            assert!((y.norm() - 1.0).abs() < 1e-10);
            x = y.normalized();
        }
    }

    #[test]
    fn energy_conserved_along_flow() {
        for p in 2..=4 {
            let params = mf(p, 0.75);
            let x0 = BlochVector::from_angles(0.9, 2.0);
            let tr = integrate(x0, &params, 0.01, 100.0).unwrap();
            let e0 = energy(x0, &params);
            let drift = tr.points.iter().map(|x| (energy(*x, &params) - e0).abs()).fold(0.0, f64::max);
            assert!(drift < 1e-8, "p={p} drift={drift}");
        }
    }

    #[test]
    fn flow_is_tangent_and_energy_preserving_pointwise() {
        for p in 2..=4 {
            let params = mf(p, 0.6);
            for i in 0..30 {
                for j in 0..30 {
                    let x = BlochVector::from_angles(PI * (i as f64 + 0.5) / 30.0, 2.0 * PI * j as f64 / 30.0);
                    let f = flow_rhs(x, &params);
                    assert!(f.dot(&x).abs() < 1e-15);
                    // grad of -(1-s)Y - (s/p) Z^p
                    let grad = BlochVector::new(0.0, -(1.0 - params.s), -params.s * x.z.powi(p as i32 - 1));
                    assert!(grad.dot(&f).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn separatrix_examples() {
        assert!((separatrix_z(3, 2.0 / 3.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-7);
        assert_eq!(separatrix_z(2, 0.7).unwrap(), 0.0);
        assert!(separatrix_z(2, 0.4).is_err());
        assert!(separatrix_z(4, 0.7).is_err());
        // mpmath: smaller root of v^3 - v^2 + (1/4)^2 at s = 0.8
        let z = separatrix_z(4, 0.8).unwrap();
        assert!((z - 0.546_337_022_009_910_7).abs() < 1e-12);
        assert!(spin_model::potential_curvature(z, 0.8, 4) < 0.0);
        let upper = mf(4, 0.8).extrema()[2];
        assert!(spin_model::potential_curvature(upper, 0.8, 4) > 0.0);
    }

    #[test]
    fn dpt_critical_points() {
        assert!((dpt_critical_point(2).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert!((dpt_critical_point(3).unwrap() - 0.745_921).abs() < 1e-6);
        // mpmath root is 0.7860612; the printed 0.786074 agrees to 1.3e-5
        assert!((dpt_critical_point(4).unwrap() - 0.786_061_230_866_018_6).abs() < 1e-9);
        assert!((dpt_critical_point(4).unwrap() - 0.786_074).abs() < 1e-4);
        for p in 2..=4 {
            let est = dpt_pole_estimate(p);
            assert!((est - dpt_critical_point(p).unwrap()).abs() < 0.02);
            assert!(dpt_critical_point(p).unwrap() >= spin_model::equilibrium_critical_point(p).unwrap());
        }
    }

    #[test]
    fn averages_of_constant_and_precessing_trajectories() {
        let tr = integrate(BlochVector::Z, &mf(2, 1.0), 0.01, 10.0).unwrap();
        let (z, c) = long_time_averages(&tr, 0.0).unwrap();
        assert!((z - 1.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);

        let dt = 2.0 * PI / 2000.0;
        let tr = integrate_steps(BlochVector::Z, &mf(2, 0.0), dt, 2000 * 5, 1).unwrap();
        let (z, c) = long_time_averages(&tr, 0.0).unwrap();
        assert!(z.abs() < 1e-6 && (c - 0.5).abs() < 1e-6, "{z} {c}");
        assert!(long_time_averages(&tr, 100.0).is_err());
    }
}
