//! Large-N Gaussian trajectory engine.
//!
//! The collective spin is a mean direction plus a 2x2 quadrature covariance
//! on the tangent plane. The covariance is stored in an orthonormal frame
//! `(e1, e2, e_r)` that is carried along with the mean, so nothing is ever
//! expressed in polar coordinates and the poles are ordinary points.
//!
//! One protocol step is: draw `m`, condition the Gaussian state on it
//! (Kalman update of mean and covariance, plus the conjugate backaction),
//! then apply the feedback rotation, which in the Heisenberg picture turns
//! the mean by `-gamma` about `(0, alpha, beta)/gamma`.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::golden_min;
use crate::spin_model::ModelParams;
use crate::trajectory::{rotate, BlochVector, Trajectory};

/// How `s` evolves over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Schedule {
    Constant,
    /// `s(t) = t / total_time`, overriding `params.s`.
    Adiabatic {
        total_time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub params: ModelParams,
    pub dt: f64,
    /// Measurement resolution in units of the projection noise, `sigma = mu * sqrt(J)`.
    pub mu: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub schedule: Schedule,
    /// Keep every `record_stride`-th step. The final step is always kept.
    pub record_stride: usize,
    /// Feed back the exact mean instead of a sampled outcome and drop the covariance.
    pub noiseless: bool,
}

impl ProtocolConfig {
    pub fn new(params: ModelParams, dt: f64, mu: f64, n_steps: usize, seed: u64) -> Result<Self> {
        let c = ProtocolConfig {
            params,
            dt,
            mu,
            n_steps,
            seed,
            schedule: Schedule::Constant,
            record_stride: 1,
            noiseless: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::domain(format!("mu must be > 0, got {}", self.mu)));
        }
        if self.n_steps == 0 || self.record_stride == 0 {
            return Err(Error::domain("n_steps and record_stride must be >= 1"));
        }
        if let Schedule::Adiabatic { total_time } = self.schedule {
            if !(total_time > 0.0) {
                return Err(Error::domain("adiabatic total_time must be > 0"));
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.mu * self.params.j().sqrt()
    }

    /// Mixing parameter in force during step `l` (from `t_l` to `t_{l+1}`).
    pub fn s_at(&self, l: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.params.s,
            Schedule::Adiabatic { total_time } => (l as f64 * self.dt / total_time).clamp(0.0, 1.0),
        }
    }

    pub fn step_params(&self, l: usize) -> StepParams {
        StepParams { p: self.params.p, s: self.s_at(l), j: self.params.j(), dt: self.dt, sigma: self.sigma() }
    }
}

/// Everything a single protocol step depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub p: u32,
    pub s: f64,
    pub j: f64,
    pub dt: f64,
    pub sigma: f64,
}

impl StepParams {
    /// `W = (dt s)^(1/(p-1))`.
    pub fn w(&self) -> f64 {
        (self.dt * self.s).powf(1.0 / (self.p as f64 - 1.0))
    }
}

/// Orthonormal right-handed triad with `er` along the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub e1: BlochVector,
    pub e2: BlochVector,
    pub er: BlochVector,
}

impl Frame {
    /// `(e_phi, -e_theta, e_r)` at the direction of `n`; `phi = 0` at the poles.
    pub fn canonical(n: BlochVector) -> Frame {
        let er = n.normalized();
        let rho = (er.x * er.x + er.y * er.y).sqrt();
        let (sp, cp) = if rho > 0.0 { (er.y / rho, er.x / rho) } else { (0.0, 1.0) };
        let e_phi = BlochVector::new(-sp, cp, 0.0);
        let e_theta = BlochVector::new(er.z * cp, er.z * sp, -rho);
        Frame { e1: e_phi, e2: -e_theta, er }
    }

    /// Largest deviation of the Gram matrix from the identity, plus the
    /// handedness defect.
    pub fn orthonormality_error(&self) -> f64 {
        let v = [self.e1, self.e2, self.er];
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                let target = if i == k { 1.0 } else { 0.0 };
                err = err.max((v[i].dot(&v[k]) - target).abs());
            }
        }
        err.max((self.e1.cross(&self.e2) - self.er).norm())
    }

    fn rotated(&self, axis: BlochVector, angle: f64) -> Frame {
        Frame { e1: rotate(self.e1, axis, angle), e2: rotate(self.e2, axis, angle), er: rotate(self.er, axis, angle) }
    }

    /// Parallel transport to the new radial direction `to` (unit), by the
    /// minimal rotation taking `er` to `to`.
    fn transported(&self, to: BlochVector) -> Frame {
        let k = self.er.cross(&to);
        let c = self.er.dot(&to);
        if 1.0 + c < 1e-12 {
            return Frame::canonical(to);
        }
        let r = |v: BlochVector| {
            let kv = k.cross(&v);
            v + kv + k.cross(&kv) * (1.0 / (1.0 + c))
        };
        Frame { e1: r(self.e1), e2: r(self.e2), er: to }
    }

    /// Gram-Schmidt clean-up keeping `er` fixed.
    fn reorthonormalized(&self) -> Frame {
        let er = self.er.normalized();
        let e1 = (self.e1 - er * self.e1.dot(&er)).normalized();
        Frame { e1, e2: er.cross(&e1), er }
    }
}

/// Gaussian state of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpinState {
    /// `<J>/J`; its length is `1 - (tr V - J)/(2 J^2)`, capped at 1.
    pub mean: BlochVector,
    /// Quadrature covariance in the `(e1, e2)` basis, spin units.
    pub cov: Matrix2<f64>,
    pub frame: Frame,
    pub j: f64,
    /// Number of times the mean length had to be capped at 1.
    pub renormalizations: u64,
}

impl GaussianSpinState {
    /// Spin coherent state along `direction`: covariance `(J/2) I`.
    pub fn coherent(direction: BlochVector, j: f64) -> Result<Self> {
        if !direction.is_finite() || direction.norm() == 0.0 {
            return Err(Error::domain("direction must be a finite nonzero vector"));
        }
        if !(j > 0.0) {
            return Err(Error::domain(format!("J must be > 0, got {j}")));
        }
        let n = direction.normalized();
        Ok(GaussianSpinState {
            mean: n,
            cov: Matrix2::identity() * (0.5 * j),
            frame: Frame::canonical(n),
            j,
            renormalizations: 0,
        })
    }

    /// Components of `z` along `(e1, e2)`: `J_z` fluctuates as `g . q`.
    pub fn z_projection(&self) -> Vector2<f64> {
        Vector2::new(self.frame.e1.z, self.frame.e2.z)
    }

    /// Projection noise `(Delta J_z)^2`.
    pub fn var_jz(&self) -> f64 {
        let g = self.z_projection();
        (g.transpose() * self.cov * g)[(0, 0)]
    }

    /// `<J_z^2>/J^2`.
    pub fn czz(&self) -> f64 {
        self.mean.z * self.mean.z + self.var_jz() / (self.j * self.j)
    }

    fn check(&self) -> Result<()> {
        let ok = self.mean.is_finite()
            && self.cov.iter().all(|v| v.is_finite())
            && self.cov[(0, 0)] >= 0.0
            && self.cov[(1, 1)] >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::numerical(format!(
                "Gaussian state left the valid domain: mean {:?}, cov {:?}",
                self.mean, self.cov
            )))
        }
    }
}

/// One measurement outcome and the derived noise variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDraw {
    pub eta1: f64,
    pub eta2: f64,
    pub m: f64,
    /// `m - <J_z>`.
    pub m_theta: f64,
}

impl NoiseDraw {
    pub fn from_outcome(m: f64, state: &GaussianSpinState, sp: &StepParams) -> Self {
        let m_theta = m - state.j * state.mean.z;
        NoiseDraw { eta1: m_theta / (sp.sigma * sp.sigma), eta2: sp.w() * m_theta / state.j, m, m_theta }
    }
}

/// Draws `m ~ N(J Z, sigma^2 + (Delta J_z)^2)`.
pub fn sample_measurement<R: Rng + ?Sized>(state: &GaussianSpinState, sp: &StepParams, rng: &mut R) -> NoiseDraw {
    let sd = (sp.sigma * sp.sigma + state.var_jz()).sqrt();
    let xi: f64 = rng.sample(StandardNormal);
    NoiseDraw::from_outcome(state.j * state.mean.z + sd * xi, state, sp)
}

/// Parameters of the conditioned feedback unitary `exp(i(alpha J_y + beta J_z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackAngles {
    pub alpha: f64,
    pub beta: f64,
    /// Rotation angle `sqrt(alpha^2 + beta^2)`.
    pub gamma: f64,
    /// Tilt of the rotation axis away from `z`: `sin = alpha/gamma`, `cos = beta/gamma`.
    pub varphi: f64,
}

impl FeedbackAngles {
    /// Unit rotation axis, `None` for the identity.
    pub fn axis(&self) -> Option<BlochVector> {
        (self.gamma > 0.0).then(|| BlochVector::new(0.0, self.alpha / self.gamma, self.beta / self.gamma))
    }

    /// Action on `<J>`: rotation by `-gamma` about the axis.
    pub fn apply(&self, v: BlochVector) -> BlochVector {
        match self.axis() {
            Some(n) => rotate(v, n, -self.gamma),
            None => v,
        }
    }
}

pub fn feedback_angles(m: f64, sp: &StepParams) -> FeedbackAngles {
    let alpha = sp.dt * (1.0 - sp.s);
    let beta = sp.dt * sp.s * (m / sp.j).powi(sp.p as i32 - 1);
    let gamma = alpha.hypot(beta);
    let varphi = if gamma > 0.0 { alpha.atan2(beta) } else { std::f64::consts::FRAC_PI_2 };
    FeedbackAngles { alpha, beta, gamma, varphi }
}

/// Full protocol step: Bayesian conditioning on `draw`, then feedback.
pub fn step(state: &GaussianSpinState, draw: &NoiseDraw, sp: &StepParams) -> Result<GaussianSpinState> {
    let j = state.j;
    let g = state.z_projection();
    let vg = state.cov * g;
    let denom = sp.sigma * sp.sigma + g.dot(&vg);
    let dq = vg * (draw.m_theta / denom);
    let og = Vector2::new(g.y, -g.x);
    let mut cov = state.cov - vg * vg.transpose() / denom + og * og.transpose() * (j * j / (4.0 * sp.sigma * sp.sigma));
    let off = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
    cov[(0, 1)] = off;
    cov[(1, 0)] = off;

    let f = &state.frame;
    let length = state.mean.norm();
    let kicked = f.er * length + (f.e1 * dq.x + f.e2 * dq.y) * (1.0 / j);
    let n_new = kicked.normalized();
    let frame = f.transported(n_new);

    let mut renormalizations = state.renormalizations;
    let mut new_len = 1.0 - (cov.trace() - j) / (2.0 * j * j);
    if new_len > 1.0 {
        new_len = 1.0;
        renormalizations += 1;
    }

    let fb = feedback_angles(draw.m, sp);
    let frame = match fb.axis() {
        Some(axis) => frame.rotated(axis, -fb.gamma),
        None => frame,
    }
    .reorthonormalized();
    let out = GaussianSpinState { mean: frame.er * new_len, cov, frame, j, renormalizations };
    out.check()?;
    Ok(out)
}

/// Mean after one step.
pub fn step_mean(state: &GaussianSpinState, draw: &NoiseDraw, sp: &StepParams) -> Result<BlochVector> {
    step(state, draw, sp).map(|s| s.mean)
}

/// Covariance and transported frame after one step.
pub fn step_covariance(state: &GaussianSpinState, draw: &NoiseDraw, sp: &StepParams) -> Result<(Matrix2<f64>, Frame)> {
    step(state, draw, sp).map(|s| (s.cov, s.frame))
}

/// Deterministic step with `m = J Z` and no fluctuations.
pub fn noiseless_step(x: BlochVector, sp: &StepParams) -> BlochVector {
    feedback_angles(sp.j * x.z, sp).apply(x)
}

/// Runs `config.n_steps` protocol steps from the coherent state along `x0`
/// using the RNG seeded from `config.seed`.
pub fn run_trajectory(x0: BlochVector, config: &ProtocolConfig) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_trajectory_with_rng(x0, config, &mut rng)
}

pub fn run_trajectory_with_rng<R: Rng + ?Sized>(
    x0: BlochVector,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    config.validate()?;
    let j = config.params.j();
    let mut state = GaussianSpinState::coherent(x0, j)?;
    if config.noiseless {
        state.cov = Matrix2::zeros();
    }
    let cap = config.n_steps / config.record_stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut points = Vec::with_capacity(cap);
    let mut czz = Vec::with_capacity(cap);
    let mut outcomes = Vec::with_capacity(cap);
    times.push(0.0);
    points.push(state.mean);
    czz.push(state.czz());

    for l in 0..config.n_steps {
        let sp = config.step_params(l);
        let last_m;
        if config.noiseless {
            last_m = j * state.mean.z;
            let x = noiseless_step(state.mean, &sp).normalized();
            state.mean = x;
            state.frame = Frame::canonical(x);
            if !x.is_finite() {
                return Err(Error::numerical("noiseless step diverged"));
            }
        } else {
            let draw = sample_measurement(&state, &sp, rng);
            last_m = draw.m;
            state = step(&state, &draw, &sp)?;
        }
        let k = l + 1;
        if k % config.record_stride == 0 || k == config.n_steps {
            times.push(k as f64 * config.dt);
            points.push(state.mean);
            czz.push(state.czz());
            outcomes.push(last_m);
        }
    }
    let mut tr = Trajectory::new(times, points)?.with_czz(czz)?;
    tr.outcomes = Some(outcomes);
    Ok(tr)
}

/// Adiabatic passage `s(t) = t/T` from the coherent state along `+y`.
/// `config.params.s` is ignored; the run has `round(T/dt)` steps.
pub fn adiabatic_run<R: Rng + ?Sized>(config: &ProtocolConfig, total_time: f64, rng: &mut R) -> Result<Trajectory> {
    if !(total_time >= config.dt) {
        return Err(Error::domain(format!("T = {total_time} must be at least dt = {}", config.dt)));
    }
    let mut c = *config;
    c.schedule = Schedule::Adiabatic { total_time };
    c.n_steps = (total_time / config.dt).round() as usize;
    run_trajectory_with_rng(BlochVector::Y, &c, rng)
}

/// Variances of the two noise variables and their sum, with the projection
/// noise set to its coherent-state value `J/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseObjective {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub f: f64,
}

pub fn noise_objective(mu: f64, config: &ProtocolConfig) -> Result<NoiseObjective> {
    if !(mu > 0.0) {
        return Err(Error::domain(format!("mu must be > 0, got {mu}")));
    }
    let j = config.params.j();
    let sp = config.step_params(0);
    let sigma2 = mu * mu * j;
    let total = sigma2 + 0.5 * j;
    let w = sp.w();
    let sigma1_sq = total / (sigma2 * sigma2);
    let sigma2_sq = w * w / (j * j) * total;
    Ok(NoiseObjective { sigma1_sq, sigma2_sq, f: sigma1_sq + sigma2_sq })
}

/// Closed-form optimal resolution `(1/(2W)) sqrt(1 + sqrt(1 + W^2))`.
pub fn optimal_mu(dt: f64, s: f64, p: u32) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) || !(dt > 0.0) || p < 2 {
        return Err(Error::domain(format!("need s in (0,1], dt > 0, p >= 2 (s={s}, dt={dt}, p={p})")));
    }
    let w = (dt * s).powf(1.0 / (p as f64 - 1.0));
    Ok((1.0 + (1.0 + w * w).sqrt()).sqrt() / (2.0 * w))
}

/// Evaluates the noise objective on a list of `mu` values.
pub fn mu_scan(config: &ProtocolConfig, mus: &[f64]) -> Result<Vec<NoiseObjective>> {
    mus.iter().map(|&mu| noise_objective(mu, config)).collect()
}

/// Indices of strict interior local minima of a sampled curve.
pub fn interior_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1]).collect()
}

/// Minimiser of the noise objective: log-spaced scan over `[1e-3, 1e6]`
/// followed by golden-section refinement in `ln mu`.
pub fn numeric_optimal_mu(config: &ProtocolConfig) -> Result<f64> {
    let n = 400;
    let (lo, hi) = (1e-3f64.ln(), 1e6f64.ln());
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let fs: Vec<f64> = grid.iter().map(|&x| noise_objective(x.exp(), config).map(|o| o.f)).collect::<Result<_>>()?;
    let minima = interior_minima(&fs);
    let &[i] = minima.as_slice() else {
        return Err(Error::numerical(format!("noise objective has {} interior minima on the scan", minima.len())));
    };
    let x = golden_min(
        |x| noise_objective(x.exp(), config).map(|o| o.f).unwrap_or(f64::INFINITY),
        grid[i - 1],
        grid[i + 1],
        1e-12,
    );
    Ok(x.exp())
}
