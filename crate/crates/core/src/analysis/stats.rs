//! Histograms, information measures and the two-sample KS test.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Uniform bins on `[lo, hi]`; the right edge belongs to the last bin.
    pub fn uniform(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::domain(format!("need bins >= 1 and hi > lo (bins={bins}, [{lo}, {hi}])")));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(x >= lo && x <= hi) {
                return Err(Error::domain(format!("sample {x} outside [{lo}, {hi}]")));
            }
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Histogram { edges, counts, total: samples.len() as u64 })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// CSV with header `bin_lo,bin_hi,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{:.6},{:.6},{c}", self.edges[i], self.edges[i + 1])?;
        }
        Ok(())
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("not a normalised distribution (sum = {sum})")));
    }
    Ok(())
}

/// `-sum p ln p`, natural log, `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    Ok(-p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
}

/// `sum p ln(p/q)`; infinite when `q` misses part of the support of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    check_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b > 0.0 { a * (a / b).ln() } else { f64::INFINITY })
        .sum())
}

/// Jensen-Shannon divergence `S[(P+Q)/2] - (S[P] + S[Q])/2`, in `[0, ln 2]`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mix: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let js = shannon_entropy(&mix)? - 0.5 * (shannon_entropy(p)? + shannon_entropy(q)?);
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

/// JS divergence between the uniform distribution on `bins` bins and equal
/// point masses in the two outermost bins: the value a perfect coin-flip
/// histogram scores against uniform.
pub fn js_coin_reference(bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::domain("need at least two bins"));
    }
    let u = vec![1.0 / bins as f64; bins];
    let mut d = vec![0.0; bins];
    d[0] = 0.5;
    d[bins - 1] = 0.5;
    js_divergence(&u, &d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryStats {
    pub histogram: Histogram,
    pub js_to_uniform: f64,
    /// Fraction of samples with `Z > 0`.
    pub sign_balance: f64,
    /// [`js_coin_reference`] for the same binning.
    pub js_coin_reference: f64,
}

pub fn symmetry_statistics(final_z: &[f64], bins: usize) -> Result<SymmetryStats> {
    if final_z.is_empty() {
        return Err(Error::domain("no samples"));
    }
    let histogram = Histogram::uniform(final_z, bins, -1.0, 1.0)?;
    let uniform = vec![1.0 / bins as f64; bins];
    let js_to_uniform = js_divergence(&histogram.probabilities(), &uniform)?;
    let positive = final_z.iter().filter(|&&z| z > 0.0).count();
    Ok(SymmetryStats {
        histogram,
        js_to_uniform,
        sign_balance: positive as f64 / final_z.len() as f64,
        js_coin_reference: if bins >= 2 { js_coin_reference(bins)? } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(l) = 2 sum (-1)^(k-1) exp(-2 k^2 l^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction of the effective size).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS test needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::domain("KS test samples contain NaN"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    Ok(KsResult { statistic: d, p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d) })
}
