//! Exact quantum trajectories in the `(N+1)`-dimensional Dicke basis.
//!
//! Amplitudes are stored with index `k = 0..=N` for `M = J - k`. Outcomes are
//! drawn by mixture sampling (pick `M` by the Born weights, then add meter
//! noise), which reproduces the Kraus density exactly.

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::{feedback_angles, FeedbackAngles, ProtocolConfig, StepParams};
use crate::trajectory::{BlochVector, Trajectory};

pub type C64 = Complex<f64>;

/// Largest ensemble the exact engine accepts by default.
pub const DEFAULT_MAX_PARTICLES: u64 = 1024;

/// Coefficient of `J+ |J, M> = c |J, M+1>`.
fn raise_coeff(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    pub j: f64,
    /// `amps[k]` multiplies `|J, J - k>`.
    pub amps: Vec<C64>,
}

impl DickeState {
    /// The basis state `|J, J - k>`.
    pub fn basis(n: u64, k: usize) -> Result<Self> {
        if n == 0 || k as u64 > n {
            return Err(Error::domain(format!("basis index {k} invalid for N = {n}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n as usize + 1];
        amps[k] = C64::new(1.0, 0.0);
        Ok(DickeState { j: n as f64 / 2.0, amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `M` of index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        self.j - k as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::numerical(format!("cannot normalise a state of norm {n}")));
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|c| *c *= inv);
        Ok(())
    }

    /// Amplitude dump with header `M,re,im`.
    pub fn write_amplitudes<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "M,re,im")?;
        for (k, c) in self.amps.iter().enumerate() {
            writeln!(out, "{},{:.17e},{:.17e}", self.m_of(k), c.re, c.im)?;
        }
        Ok(())
    }
}

/// Dense collective spin matrices in the Dicke basis.
#[derive(Debug, Clone)]
pub struct CollectiveOps {
    pub jx: DMatrix<C64>,
    pub jy: DMatrix<C64>,
    pub jz: DMatrix<C64>,
}

impl CollectiveOps {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("N must be >= 1"));
        }
        let d = n as usize + 1;
        let j = n as f64 / 2.0;
        let mut jp = DMatrix::<C64>::zeros(d, d);
        let mut jz = DMatrix::<C64>::zeros(d, d);
        for k in 0..d {
            let m = j - k as f64;
            jz[(k, k)] = C64::new(m, 0.0);
            if k > 0 {
                jp[(k - 1, k)] = C64::new(raise_coeff(j, m), 0.0);
            }
        }
        let jm = jp.adjoint();
        let jx = (&jp + &jm) * C64::new(0.5, 0.0);
        let jy = (&jp - &jm) * C64::new(0.0, -0.5);
        Ok(CollectiveOps { jx, jy, jz })
    }

    /// Largest entry of the residuals of the three cyclic commutation relations.
    pub fn commutator_error(&self) -> f64 {
        let i = C64::new(0.0, 1.0);
        let comm = |a: &DMatrix<C64>, b: &DMatrix<C64>| a * b - b * a;
        let r1 = comm(&self.jx, &self.jy) - &self.jz * i;
        let r2 = comm(&self.jy, &self.jz) - &self.jx * i;
        let r3 = comm(&self.jz, &self.jx) - &self.jy * i;
        [r1, r2, r3].iter().flat_map(|r| r.iter().map(|c| c.norm())).fold(0.0, f64::max)
    }
}

/// `ln C(n, k)` for all `k`.
fn log_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `a ln(y)` with `0 ln 0 = 0`.
fn xlny(a: f64, y: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * y.ln()
    }
}

/// Spin coherent state `exp(-i phi J_z) exp(-i theta J_y) |J, J>`.
pub fn scs_state(theta: f64, phi: f64, n: u64) -> Result<DickeState> {
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    if !theta.is_finite() || !phi.is_finite() {
        return Err(Error::domain("angles must be finite"));
    }
    let nn = n as usize;
    let j = n as f64 / 2.0;
    let (sh, ch) = (0.5 * theta).sin_cos();
    let lb = log_binomials(nn);
    let amps = (0..=nn)
        .map(|k| {
            let m = j - k as f64;
            // d^J_{M,J}(theta) = sqrt(C(2J, J-M)) cos^(J+M)(theta/2) sin^(J-M)(theta/2)
            let sign = if (ch < 0.0 && (nn - k) % 2 == 1) != (sh < 0.0 && k % 2 == 1) { -1.0 } else { 1.0 };
            let mag = (0.5 * lb[k] + xlny((nn - k) as f64, ch.abs()) + xlny(k as f64, sh.abs())).exp();
            C64::from_polar(sign * mag, -phi * m)
        })
        .collect();
    let mut s = DickeState { j, amps };
    s.normalize()?;
    Ok(s)
}

/// Applies the Kraus operator for outcome `m`. Returns the unnormalised state
/// and its squared norm, which is the Born density of `m`.
pub fn kraus_apply(state: &DickeState, m: f64, sigma: f64) -> Result<(DickeState, f64)> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
    }
    let pref = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let inv = 1.0 / (4.0 * sigma * sigma);
    let mut out = state.clone();
    for (k, c) in out.amps.iter_mut().enumerate() {
        let d = state.j - k as f64 - m;
        *c *= pref * (-d * d * inv).exp();
    }
    let prob = out.norm_sqr();
    Ok((out, prob))
}

/// Born density of outcome `m`.
pub fn born_density(state: &DickeState, m: f64, sigma: f64) -> f64 {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    state
        .amps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let d = state.j - k as f64 - m;
            c.norm_sqr() * norm * (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .sum()
}

/// Draws `M` with probability `|c_M|^2`, then returns `M + sigma * xi`.
pub fn sample_outcome<R: Rng + ?Sized>(state: &DickeState, sigma: f64, rng: &mut R) -> f64 {
    let total = state.norm_sqr();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut pick = state.dim() - 1;
    for (k, c) in state.amps.iter().enumerate() {
        acc += c.norm_sqr();
        if u < acc {
            pick = k;
            break;
        }
    }
    let xi: f64 = rng.sample(StandardNormal);
    state.m_of(pick) + sigma * xi
}

/// `exp(i (alpha J_y + beta J_z))` by Hermitian eigendecomposition of the exponent.
pub fn feedback_unitary(m: f64, sp: &StepParams, ops: &CollectiveOps) -> Result<DMatrix<C64>> {
    let a = feedback_angles(m, sp);
    let h = &ops.jy * C64::new(a.alpha, 0.0) + &ops.jz * C64::new(a.beta, 0.0);
    hermitian_exp_i(&h)
}

/// `exp(i H)` for Hermitian `H`.
pub fn hermitian_exp_i(h: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::numerical("Hermitian eigensolver did not converge"))?;
    let phases =
        DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)));
    let q = &eig.eigenvectors;
    let mut qd = q.clone();
    for (mut col, ph) in qd.column_iter_mut().zip(phases.iter()) {
        col *= *ph;
    }
    Ok(qd * q.adjoint())
}

/// Normalised moments of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectations {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub var_jz: f64,
    pub czz: f64,
}

impl Expectations {
    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(self.x, self.y, self.z)
    }
}

pub fn expectations(state: &DickeState) -> Expectations {
    let j = state.j;
    let mut jp = C64::new(0.0, 0.0);
    let mut jz = 0.0;
    let mut jz2 = 0.0;
    for (k, c) in state.amps.iter().enumerate() {
        let m = j - k as f64;
        let w = c.norm_sqr();
        jz += w * m;
        jz2 += w * m * m;
        if k > 0 {
            jp += state.amps[k - 1].conj() * c * raise_coeff(j, m);
        }
    }
    Expectations { x: jp.re / j, y: jp.im / j, z: jz / j, var_jz: jz2 - jz * jz, czz: jz2 / (j * j) }
}

/// Per-`N` precomputation for fast protocol steps: the eigenbasis of `J_x`,
/// which lets the feedback unitary be applied as
/// `exp(i varphi J_x) exp(i gamma J_z) exp(-i varphi J_x)` with four
/// real-matrix products.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    pub n: u64,
    j: f64,
    /// Columns are eigenvectors of `J_x` (real symmetric in this basis).
    vecs: DMatrix<f64>,
    vals: Vec<f64>,
}

impl ExactPropagator {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("N must be >= 1"));
        }
        let d = n as usize + 1;
        let j = n as f64 / 2.0;
        let mut jx = DMatrix::<f64>::zeros(d, d);
        for k in 1..d {
            let c = 0.5 * raise_coeff(j, j - k as f64);
            jx[(k - 1, k)] = c;
            jx[(k, k - 1)] = c;
        }
        let eig = SymmetricEigen::try_new(jx, 1e-15, 10_000)
            .ok_or_else(|| Error::numerical("J_x eigensolver did not converge"))?;
        Ok(ExactPropagator { n, j, vecs: eig.eigenvectors, vals: eig.eigenvalues.iter().copied().collect() })
    }

    /// `out = V^T psi`
    fn to_eigen(&self, psi: &[C64], out: &mut [C64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let col = self.vecs.column(k);
            let mut acc = C64::new(0.0, 0.0);
            for (v, p) in col.iter().zip(psi) {
                acc += p * *v;
            }
            *o = acc;
        }
    }

    /// `out = V psi`
    fn back_transform(&self, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (k, p) in psi.iter().enumerate() {
            let col = self.vecs.column(k);
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += p * *v;
            }
        }
    }

    /// Applies the feedback unitary for the given angles in place.
    pub fn apply_feedback(&self, state: &mut DickeState, a: &FeedbackAngles) {
        if a.gamma == 0.0 {
            return;
        }
        let d = state.dim();
        let mut buf = vec![C64::new(0.0, 0.0); d];
        self.to_eigen(&state.amps, &mut buf);
        for (b, &l) in buf.iter_mut().zip(&self.vals) {
            *b *= C64::from_polar(1.0, -a.varphi * l);
        }
        self.back_transform(&buf, &mut state.amps);
        for (k, c) in state.amps.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, a.gamma * (self.j - k as f64));
        }
        self.to_eigen(&state.amps, &mut buf);
        for (b, &l) in buf.iter_mut().zip(&self.vals) {
            *b *= C64::from_polar(1.0, a.varphi * l);
        }
        self.back_transform(&buf, &mut state.amps);
    }

    /// One protocol step in place: sample, condition, renormalise, feed back.
    /// Returns the outcome.
    pub fn qfc_step<R: Rng + ?Sized>(&self, state: &mut DickeState, sp: &StepParams, rng: &mut R) -> Result<f64> {
        let m = sample_outcome(state, sp.sigma, rng);
        let (mut post, prob) = kraus_apply(state, m, sp.sigma)?;
        if !(prob > 0.0) {
            return Err(Error::numerical(format!("outcome m = {m} has vanishing Born density")));
        }
        post.normalize()?;
        self.apply_feedback(&mut post, &feedback_angles(m, sp));
        *state = post;
        Ok(m)
    }

    /// Trajectory from the coherent state along `x0`. `config.params.n` must
    /// equal this propagator's `N`.
    pub fn run_trajectory(&self, x0: BlochVector, config: &ProtocolConfig) -> Result<Trajectory> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        self.run_trajectory_with_rng(x0, config, &mut rng)
    }

    pub fn run_trajectory_with_rng<R: Rng + ?Sized>(
        &self,
        x0: BlochVector,
        config: &ProtocolConfig,
        rng: &mut R,
    ) -> Result<Trajectory> {
        config.validate()?;
        if config.params.n != self.n {
            return Err(Error::domain(format!(
                "propagator built for N = {} but config has N = {}",
                self.n, config.params.n
            )));
        }
        if config.noiseless {
            return Err(Error::domain("the exact engine has no noiseless mode"));
        }
        let (theta, phi) = x0.angles();
        let mut state = scs_state(theta, phi, self.n)?;
        let cap = config.n_steps / config.record_stride + 2;
        let mut times = Vec::with_capacity(cap);
        let mut points = Vec::with_capacity(cap);
        let mut czz = Vec::with_capacity(cap);
        let mut outcomes = Vec::with_capacity(cap);
        let e = expectations(&state);
        times.push(0.0);
        points.push(e.bloch());
        czz.push(e.czz);
        for l in 0..config.n_steps {
            let m = self.qfc_step(&mut state, &config.step_params(l), rng)?;
            let k = l + 1;
            if k % config.record_stride == 0 || k == config.n_steps {
                let e = expectations(&state);
                times.push(k as f64 * config.dt);
                points.push(e.bloch());
                czz.push(e.czz);
                outcomes.push(m);
            }
        }
        let mut tr = Trajectory::new(times, points)?.with_czz(czz)?;
        tr.outcomes = Some(outcomes);
        Ok(tr)
    }
}
