//! Ensembles of adiabatic passages and the distribution of their final `Z`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::EngineKind;
use crate::error::{Error, Result};
use crate::exact::{ExactPropagator, DEFAULT_MAX_PARTICLES};
use crate::gaussian::{adiabatic_run, ProtocolConfig, Schedule};
use crate::spin_model::ModelParams;
use crate::sweep::{parallel_map, task_seed};
use crate::trajectory::BlochVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdiabaticEnsemble {
    pub p: u32,
    pub n: u64,
    pub total_time: f64,
    /// `Z(T)` of every run that finished, in run order.
    pub final_z: Vec<f64>,
    pub failures: Vec<String>,
}

impl AdiabaticEnsemble {
    /// Fraction of runs with `|Z(T)| > threshold`.
    pub fn polarized_fraction(&self, threshold: f64) -> f64 {
        if self.final_z.is_empty() {
            return 0.0;
        }
        self.final_z.iter().filter(|z| z.abs() > threshold).count() as f64 / self.final_z.len() as f64
    }
}

/// `runs` passages `s: 0 -> 1` over `total_time`, each from the coherent
/// state along `+y`. Run `r` uses `task_seed(seed, r)`. `params.s` is ignored.
#[allow(clippy::too_many_arguments)]
pub fn adiabatic_ensemble(
    engine: EngineKind,
    params: &ModelParams,
    dt: f64,
    mu: f64,
    total_time: f64,
    runs: usize,
    seed: u64,
    workers: usize,
) -> Result<AdiabaticEnsemble> {
    if runs == 0 {
        return Err(Error::domain("runs must be >= 1"));
    }
    let mut base = ProtocolConfig::new(params.with_s(0.0), dt, mu, 1, seed)?;
    base.record_stride = usize::MAX;
    let propagator = match engine {
        EngineKind::Gaussian => None,
        EngineKind::Exact => {
            if params.n > DEFAULT_MAX_PARTICLES {
                return Err(Error::Config(format!(
                    "exact engine is capped at N = {DEFAULT_MAX_PARTICLES} (asked for {})",
                    params.n
                )));
            }
            Some(ExactPropagator::new(params.n)?)
        }
        EngineKind::Classical => {
            return Err(Error::Config("adiabatic ensembles need a stochastic engine".into()));
        }
    };
    let ids: Vec<usize> = (0..runs).collect();
    let results = parallel_map(&ids, workers, |r, _| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, r));
        let tr = match &propagator {
            None => adiabatic_run(&base, total_time, &mut rng)?,
            Some(prop) => {
                let mut c = base;
                c.schedule = Schedule::Adiabatic { total_time };
                c.n_steps = (total_time / dt).round() as usize;
                c.validate()?;
                prop.run_trajectory_with_rng(BlochVector::Y, &c, &mut rng)?
            }
        };
        tr.last().map(|x| x.z).ok_or_else(|| Error::numerical("empty trajectory"))
    })?;
    let mut final_z = Vec::with_capacity(runs);
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(Ok(z)) => final_z.push(z),
            Ok(Err(e)) => failures.push(format!("run {r}: {e}")),
            Err(p) => failures.push(format!("run {r}: panic: {}", p.message)),
        }
    }
    Ok(AdiabaticEnsemble { p: params.p, n: params.n, total_time, final_z, failures })
}
