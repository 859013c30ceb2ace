//! Static properties of the p-spin family
//! `H = -(1-s) J_y - s/(p J^(p-1)) J_z^p`:
//! the semiclassical energy surface, its extrema and the equilibrium
//! (ground-state) critical points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Interaction degree, mixing parameter and ensemble size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: u32,
    pub s: f64,
    /// Number of spin-1/2 particles.
    pub n: u64,
}

impl ModelParams {
    pub fn new(p: u32, s: f64, n: u64) -> Result<Self> {
        let params = ModelParams { p, s, n };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for size-independent (mean-field) quantities.
    pub fn mean_field(p: u32, s: f64) -> Result<Self> {
        Self::new(p, s, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::domain(format!("p must be >= 2, got {}", self.p)));
        }
        if !(0.0..=1.0).contains(&self.s) {
            return Err(Error::domain(format!("s must lie in [0,1], got {}", self.s)));
        }
        if self.n == 0 {
            return Err(Error::domain("N must be at least 1"));
        }
        Ok(())
    }

    /// Total spin `J = N/2`.
    pub fn j(&self) -> f64 {
        self.n as f64 / 2.0
    }

    pub fn with_s(self, s: f64) -> Self {
        ModelParams { s, ..self }
    }

    /// Semiclassical energy per spin at `u = cos(theta)` and azimuth `phi`.
    pub fn pseudo_potential(&self, u: f64, phi: f64) -> Result<f64> {
        pseudo_potential(u, phi, self)
    }

    pub fn extrema(&self) -> Vec<f64> {
        extrema(self)
    }

    pub fn order_parameter(&self) -> f64 {
        order_parameter(self)
    }
}

/// Critical values of `s` for one interaction degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    pub p: u32,
    /// Value of `s` at which nontrivial extrema first exist.
    pub s_onset: f64,
    /// Equilibrium (ground-state) critical point.
    pub s_eq: f64,
    /// Dynamical critical point for the pole initial condition.
    pub s_dpt: f64,
}

impl CriticalPoints {
    pub fn compute(p: u32) -> Result<Self> {
        Ok(CriticalPoints {
            p,
            s_onset: bifurcation_onset(p)?,
            s_eq: equilibrium_critical_point(p)?,
            s_dpt: crate::meanfield::dpt_critical_point(p)?,
        })
    }
}

/// `V(u, phi) = -(1-s) sqrt(1-u^2) sin(phi) - (s/p) u^p`.
pub fn pseudo_potential(u: f64, phi: f64, params: &ModelParams) -> Result<f64> {
    if !(u.abs() <= 1.0) {
        return Err(Error::domain(format!("|u| must be <= 1, got {u}")));
    }
    let (s, p) = (params.s, params.p);
    Ok(-(1.0 - s) * (1.0 - u * u).sqrt() * phi.sin() - s / p as f64 * u.powi(p as i32))
}

/// `V(u, pi/2)`, the only slice that matters for minimisation.
pub(crate) fn potential_on_meridian(u: f64, s: f64, p: u32) -> f64 {
    -(1.0 - s) * (1.0 - u * u).max(0.0).sqrt() - s / p as f64 * u.powi(p as i32)
}

/// Second derivative of `V(u, pi/2)` in `u`.
#[cfg(test)]
pub(crate) fn potential_curvature(u: f64, s: f64, p: u32) -> f64 {
    let w = 1.0 - u * u;
    let pf = p as f64;
    (1.0 - s) / (w * w.sqrt()) - s * (pf - 1.0) * u.powi(p as i32 - 2)
}

/// Extremum condition in `v = u^2`: `v^(p-1) - v^(p-2) + ((1-s)/s)^2`.
fn extremum_polynomial(v: f64, s: f64, p: u32) -> f64 {
    let r = (1.0 - s) / s;
    v.powi(p as i32 - 1) - v.powi(p as i32 - 2) + r * r
}

/// Nontrivial positive roots `v = u^2` in `(0, 1]`, ascending.
fn nontrivial_roots_v(s: f64, p: u32) -> Vec<f64> {
    if s <= 0.0 {
        return Vec::new();
    }
    let f = |v: f64| extremum_polynomial(v, s, p);
    let tol = 1e-17;
    if p == 2 {
        // linear in v: v = 1 - r^2
        let r = (1.0 - s) / s;
        let v = 1.0 - r * r;
        return if v > 0.0 { vec![v] } else { Vec::new() };
    }
    // For p >= 3 the polynomial is positive at 0 and 1 with a single minimum
    // at v* = (p-2)/(p-1).
    let v_star = (p as f64 - 2.0) / (p as f64 - 1.0);
    let f_star = f(v_star);
    if f_star > 1e-15 {
        return Vec::new();
    }
    if f_star.abs() <= 1e-15 {
        return vec![v_star];
    }
    let mut roots = Vec::with_capacity(2);
    for (lo, hi) in [(0.0, v_star), (v_star, 1.0)] {
        // f(lo), f(hi) differ in sign except when s == 1 where v = 1 is a root
        match bisect(f, lo, hi, tol) {
            Ok(v) if v > 0.0 => roots.push(v),
            _ => {}
        }
    }
    roots
}

/// `u = 0` followed by every nontrivial extremum `u` in `(0, 1]`, ascending.
///
/// For `p >= 3` the smaller nontrivial root is the unstable (saddle) point
/// and the larger one the new minimum.
pub fn extrema(params: &ModelParams) -> Vec<f64> {
    let mut out = vec![0.0];
    for v in nontrivial_roots_v(params.s, params.p) {
        let u = v.sqrt();
        if u > 0.0 && out.last().is_none_or(|&last| (u - last).abs() > 1e-14) {
            out.push(u);
        }
    }
    out
}

/// Ground-state order parameter: the `u` in `[0, 1]` minimising `V(u, pi/2)`.
///
/// At an exact tie the nontrivial (larger) root wins.
pub fn order_parameter(params: &ModelParams) -> f64 {
    let (s, p) = (params.s, params.p);
    let mut best_u = 0.0;
    let mut best_v = potential_on_meridian(0.0, s, p);
    let mut candidates = extrema(params);
    candidates.push(1.0);
    for u in candidates {
        let v = potential_on_meridian(u, s, p);
        if v <= best_v + 1e-14 && (v < best_v - 1e-14 || u > best_u) {
            best_u = u;
            best_v = v.min(best_v);
        }
    }
    best_u
}

/// Smallest `s` at which nontrivial extrema of `V` exist.
///
/// Closed form: the extremum condition reads `v^(p-2) (1-v) = ((1-s)/s)^2`,
/// whose left side peaks at `v* = (p-2)/(p-1)`.
pub fn bifurcation_onset(p: u32) -> Result<f64> {
    if p < 2 {
        return Err(Error::domain(format!("p must be >= 2, got {p}")));
    }
    let v_star = (p as f64 - 2.0) / (p as f64 - 1.0);
    let peak = v_star.powi(p as i32 - 2) * (1.0 - v_star);
    Ok(1.0 / (1.0 + peak.sqrt()))
}

/// Value of `s` at which the nontrivial minimum becomes the global one,
/// i.e. where `V(u_min; s) <= -(1-s)` saturates.
pub fn equilibrium_critical_point(p: u32) -> Result<f64> {
    let onset = bifurcation_onset(p)?;
    let gap = |s: f64| -> f64 {
        match nontrivial_roots_v(s, p).last() {
            Some(&v) => potential_on_meridian(v.sqrt(), s, p) + (1.0 - s),
            None => f64::INFINITY,
        }
    };
    // p = 2: the new minimum is born degenerate with u = 0 and is immediately
    // the global minimum.
    let at_onset = gap(onset + 1e-12);
    if at_onset <= 1e-9 {
        return Ok(onset);
    }
    bisect(gap, onset + 1e-12, 1.0, 1e-12)
}

/// Total measurement plus feedback dephasing rate `kappa/4 + lambda^2/kappa`.
pub fn dephasing_rate(kappa: f64, lambda: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(kappa / 4.0 + lambda * lambda / kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn mf(p: u32, s: f64) -> ModelParams {
        ModelParams::mean_field(p, s).unwrap()
    }

    #[test]
    fn potential_at_equator_is_minus_field() {
        for &s in &[0.0, 0.3, 0.9] {
            for p in 2..5 {
                let v = pseudo_potential(0.0, FRAC_PI_2, &mf(p, s)).unwrap();
                assert!((v + (1.0 - s)).abs() < 1e-15);
            }
        }
        let v = pseudo_potential(1.0, FRAC_PI_2, &mf(2, 1.0)).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn potential_matches_high_precision_value() {
        // mpmath, 40 digits
        let v = pseudo_potential(0.6, FRAC_PI_2, &mf(2, 0.65)).unwrap();
        assert!((v - (-0.397)).abs() < 1e-15);
        // general phi
        let v = pseudo_potential(0.6, 0.3, &mf(3, 0.4)).unwrap();
        let expect = -0.6 * 0.8 * 0.3f64.sin() - 0.4 / 3.0 * 0.216;
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn potential_rejects_out_of_range_u() {
        assert!(matches!(pseudo_potential(1.01, 0.0, &mf(2, 0.5)), Err(Error::Domain(_))));
        assert!(pseudo_potential(f64::NAN, 0.0, &mf(2, 0.5)).is_err());
    }

    #[test]
    fn potential_parity() {
        for p in 2..=5u32 {
            for &s in &[0.2, 0.6, 0.95] {
                let params = mf(p, s);
                let mut max_asym: f64 = 0.0;
                for k in 0..=40 {
                    let u = k as f64 / 40.0;
                    let a = params.pseudo_potential(u, FRAC_PI_2).unwrap();
                    let b = params.pseudo_potential(-u, FRAC_PI_2).unwrap();
                    max_asym = max_asym.max((a - b).abs());
                }
                if p % 2 == 0 {
                    assert!(max_asym < 1e-15, "p={p} s={s}");
                } else {
                    assert!(max_asym > 1e-3, "p={p} s={s}");
                }
            }
        }
    }

    #[test]
    fn extrema_examples() {
        assert_eq!(extrema(&mf(2, 0.5)), vec![0.0]);
        let e = extrema(&mf(2, 0.8));
        assert_eq!(e.len(), 2);
        // closed form sqrt(1 - ((1-s)/s)^2), mpmath value
        assert!((e[1] - 0.968_245_836_551_854_2).abs() < 1e-14);
        assert_eq!(extrema(&mf(3, 0.6)), vec![0.0]);
        assert_eq!(extrema(&mf(4, 0.0)), vec![0.0]);
    }

    #[test]
    fn extrema_residuals_below_1e12() {
        for p in 2..=6u32 {
            for k in 1..200 {
                let s = k as f64 / 200.0;
                for &u in extrema(&mf(p, s)).iter().skip(1) {
                    let r = (1.0 - s) / s;
                    let res = u.powi(2 * (p as i32 - 1)) - u.powi(2 * (p as i32 - 2)) + r * r;
                    assert!(res.abs() < 1e-12, "p={p} s={s} u={u} res={res}");
                }
            }
        }
    }

    #[test]
    fn extrema_p3_closed_form_above_onset() {
        for &s in &[0.7, 0.8, 0.95] {
            let e = extrema(&mf(3, s));
            let r = (1.0 - s) / s;
            let disc = (1.0 - 4.0 * r * r).sqrt();
            let upper = (0.5 + 0.5 * disc).sqrt();
            let lower = (0.5 - 0.5 * disc).sqrt();
            assert!((e[2] - upper).abs() < 1e-12);
            assert!((e[1] - lower).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_is_always_an_extremum() {
        for p in 2..=5 {
            for k in 0..=20 {
                assert_eq!(extrema(&mf(p, k as f64 / 20.0))[0], 0.0);
            }
        }
    }

    #[test]
    fn order_parameter_examples() {
        for &s in &[0.0, 0.2, 0.49] {
            assert_eq!(order_parameter(&mf(2, s)), 0.0);
        }
        assert!((order_parameter(&mf(2, 1.0)) - 1.0).abs() < 1e-12);
        assert_eq!(order_parameter(&mf(3, 0.697_831 - 1e-4)), 0.0);
        assert!(order_parameter(&mf(3, 0.697_831 + 1e-4)) > 0.7);
    }

    #[test]
    fn order_parameter_continuity_depends_on_p() {
        let n = 4000;
        for p in 2..=4u32 {
            let mut max_step: f64 = 0.0;
            let mut prev = order_parameter(&mf(p, 0.0));
            for k in 1..=n {
                let cur = order_parameter(&mf(p, k as f64 / n as f64));
                max_step = max_step.max((cur - prev).abs());
                prev = cur;
            }
            // a continuous curve with sqrt onset moves at most ~sqrt(2/n)*2
            let bound = 4.0 * (1.0 / n as f64).sqrt();
            if p == 2 {
                assert!(max_step < bound, "p=2 step {max_step}");
            } else {
                assert!(max_step > 0.5, "p={p} step {max_step}");
            }
        }
    }

    #[test]
    fn critical_point_golden_values() {
        // onset values: 1/2, 2/3, (3/23)(9 - 2 sqrt 3)
        assert!((bifurcation_onset(2).unwrap() - 0.5).abs() < 1e-15);
        assert!((bifurcation_onset(3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let b4 = 3.0 / 23.0 * (9.0 - 2.0 * 3f64.sqrt());
        assert!((bifurcation_onset(4).unwrap() - b4).abs() < 1e-14);
        assert!((b4 - 0.722_073).abs() < 1e-6);

        assert!((equilibrium_critical_point(2).unwrap() - 0.5).abs() < 1e-9);
        assert!((equilibrium_critical_point(3).unwrap() - 0.697_831).abs() < 1e-6);
        assert!((equilibrium_critical_point(4).unwrap() - 0.771_429).abs() < 1e-6);
        // mpmath bisection values
        assert!((equilibrium_critical_point(3).unwrap() - 0.697_830_520_748_037_8).abs() < 1e-10);
        assert!((equilibrium_critical_point(5).unwrap() - 0.815_040_683_878_372_6).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_not_below_onset() {
        for p in 2..=7 {
            let b = bifurcation_onset(p).unwrap();
            let e = equilibrium_critical_point(p).unwrap();
            if p == 2 {
                assert!((e - b).abs() < 1e-12);
            } else {
                assert!(e > b + 1e-3, "p={p}");
            }
        }
    }

    #[test]
    fn dephasing_rate_examples() {
        assert_eq!(dephasing_rate(3.0, 0.0).unwrap(), 0.75);
        assert!((dephasing_rate(2.0 * 0.7, 0.7).unwrap() - 0.7).abs() < 1e-15);
        assert!(dephasing_rate(1e9, 1.0).unwrap() > 1e8);
        assert!(dephasing_rate(1e-9, 1.0).unwrap() > 1e8);
        assert!(dephasing_rate(0.0, 1.0).is_err());
        assert!(dephasing_rate(-1.0, 1.0).is_err());
    }

    #[test]
    fn dephasing_rate_is_convex_with_minimum_at_two_lambda() {
        let lambda = 1.3;
        let h = 1e-3;
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..4000 {
            let kappa = k as f64 * 2e-3;
            let g = dephasing_rate(kappa, lambda).unwrap();
            if kappa > h {
                let second = (dephasing_rate(kappa + h, lambda).unwrap() - 2.0 * g
                    + dephasing_rate(kappa - h, lambda).unwrap())
                    / (h * h);
                assert!(second > 0.0);
            }
            if g < best.0 {
                best = (g, kappa);
            }
        }
        assert!((best.1 - 2.0 * lambda).abs() <= 2e-3);
        assert!((best.0 - lambda).abs() < 1e-5);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 0.5, 10).is_err());
        assert!(ModelParams::new(2, 1.5, 10).is_err());
        assert!(ModelParams::new(2, 0.5, 0).is_err());
        let p = ModelParams::new(3, 0.5, 7).unwrap();
        assert_eq!(p.j(), 3.5);
    }
}
