//! A common interface over the three trajectory producers so that analysis
//! code can compare any of them on identical time grids.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactPropagator, DEFAULT_MAX_PARTICLES};
use crate::gaussian::{self, ProtocolConfig};
use crate::meanfield;
use crate::spin_model::ModelParams;
use crate::trajectory::{BlochVector, Trajectory};

/// Anything that turns an initial direction into a trajectory.
pub trait TrajectorySource: Sync {
    fn kind(&self) -> EngineKind;

    /// Trajectory from `x0`. `seed` selects the random stream and is ignored
    /// by deterministic engines.
    fn trajectory(&self, x0: BlochVector, params: &ModelParams, seed: u64) -> Result<Trajectory>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Classical,
    Gaussian,
    Exact,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Classical => "classical",
            EngineKind::Gaussian => "gaussian",
            EngineKind::Exact => "exact",
        })
    }
}

impl FromStr for EngineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(EngineKind::Classical),
            "gaussian" => Ok(EngineKind::Gaussian),
            "exact" => Ok(EngineKind::Exact),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

/// Time grid and measurement settings shared by all engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stepping {
    pub dt: f64,
    pub n_steps: usize,
    pub record_stride: usize,
    pub mu: f64,
}

impl Stepping {
    pub fn new(dt: f64, n_steps: usize, mu: f64) -> Self {
        Stepping { dt, n_steps, record_stride: 1, mu }
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    fn protocol(&self, params: &ModelParams, seed: u64) -> Result<ProtocolConfig> {
        let mut c = ProtocolConfig::new(*params, self.dt, self.mu, self.n_steps, seed)?;
        c.record_stride = self.record_stride;
        c.validate()?;
        Ok(c)
    }
}

/// RK4 integration of the mean-field flow.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalEngine(pub Stepping);

impl TrajectorySource for ClassicalEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Classical
    }

    fn trajectory(&self, x0: BlochVector, params: &ModelParams, _seed: u64) -> Result<Trajectory> {
        let s = &self.0;
        meanfield::integrate_steps(x0, params, s.dt, s.n_steps, s.record_stride)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianEngine {
    pub stepping: Stepping,
    pub noiseless: bool,
}

impl GaussianEngine {
    pub fn new(stepping: Stepping) -> Self {
        GaussianEngine { stepping, noiseless: false }
    }
}

impl TrajectorySource for GaussianEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Gaussian
    }

    fn trajectory(&self, x0: BlochVector, params: &ModelParams, seed: u64) -> Result<Trajectory> {
        let mut c = self.stepping.protocol(params, seed)?;
        c.noiseless = self.noiseless;
        gaussian::run_trajectory(x0, &c)
    }
}

/// Dicke-basis engine. Propagators are built once per `N` and shared.
#[derive(Debug)]
pub struct ExactEngine {
    pub stepping: Stepping,
    pub max_particles: u64,
    cache: Mutex<HashMap<u64, Arc<ExactPropagator>>>,
}

impl ExactEngine {
    pub fn new(stepping: Stepping) -> Self {
        ExactEngine { stepping, max_particles: DEFAULT_MAX_PARTICLES, cache: Mutex::new(HashMap::new()) }
    }

    pub fn propagator(&self, n: u64) -> Result<Arc<ExactPropagator>> {
        if n > self.max_particles {
            return Err(Error::Config(format!("exact engine is capped at N = {} (asked for {n})", self.max_particles)));
        }
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = cache.get(&n) {
            return Ok(p.clone());
        }
        let p = Arc::new(ExactPropagator::new(n)?);
        cache.insert(n, p.clone());
        Ok(p)
    }
}

impl TrajectorySource for ExactEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Exact
    }

    fn trajectory(&self, x0: BlochVector, params: &ModelParams, seed: u64) -> Result<Trajectory> {
        let c = self.stepping.protocol(params, seed)?;
        self.propagator(params.n)?.run_trajectory(x0, &c)
    }
}

pub fn build(kind: EngineKind, stepping: Stepping) -> Box<dyn TrajectorySource> {
    match kind {
        EngineKind::Classical => Box::new(ClassicalEngine(stepping)),
        EngineKind::Gaussian => Box::new(GaussianEngine::new(stepping)),
        EngineKind::Exact => Box::new(ExactEngine::new(stepping)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engines_share_the_time_grid() {
        let st = Stepping::new(0.01, 25, 5.0).with_stride(4);
        let params = ModelParams::new(2, 0.6, 30).unwrap();
        let x0 = BlochVector::from_angles(0.7, 0.2);
        let grids: Vec<Vec<f64>> = [EngineKind::Classical, EngineKind::Gaussian, EngineKind::Exact]
            .iter()
            .map(|&k| build(k, st).trajectory(x0, &params, 1).unwrap().times)
            .collect();
        assert_eq!(grids[0], grids[1]);
        assert_eq!(grids[1], grids[2]);
        assert_eq!(grids[0].len(), 8);
    }

    #[test]
    fn exact_engine_respects_cap() {
        let mut e = ExactEngine::new(Stepping::new(0.01, 1, 1.0));
        e.max_particles = 10;
        let params = ModelParams::new(2, 0.6, 12).unwrap();
        assert!(matches!(e.trajectory(BlochVector::Z, &params, 0), Err(Error::Config(_))));
    }

    #[test]
    fn kind_roundtrip() {
        for k in [EngineKind::Classical, EngineKind::Gaussian, EngineKind::Exact] {
            assert_eq!(k.to_string().parse::<EngineKind>().unwrap(), k);
        }
        assert!("quantum".parse::<EngineKind>().is_err());
    }
}
