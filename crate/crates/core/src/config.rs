//! Run configuration: a sectioned TOML file, command-line overrides and
//! per-experiment defaults.
//!
//! ```toml
//! experiment = "dpt-scan"
//! engine = "gaussian"
//! seed = 7
//!
//! [model]
//! p = [2, 3]
//! s = "0.5:0.9:0.01"
//! n_particles = [1000000]
//!
//! [protocol]
//! dt = 0.01
//! mu = 25.0
//! steps = 20000
//!
//! [analysis]
//! runs = 4
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::EngineKind;
use crate::error::{Error, Result};
use crate::exact::DEFAULT_MAX_PARTICLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PhasePortrait,
    Similarity,
    DptScan,
    Symmetry,
    OptimalMu,
    CriticalPoints,
    QcHeatmap,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::PhasePortrait,
        Experiment::Similarity,
        Experiment::DptScan,
        Experiment::Symmetry,
        Experiment::OptimalMu,
        Experiment::CriticalPoints,
        Experiment::QcHeatmap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhasePortrait => "phase-portrait",
            Experiment::Similarity => "similarity",
            Experiment::DptScan => "dpt-scan",
            Experiment::Symmetry => "symmetry",
            Experiment::OptimalMu => "optimal-mu",
            Experiment::CriticalPoints => "critical-points",
            Experiment::QcHeatmap => "qc-heatmap",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Parses one `s` token: a number or an inclusive range `start:stop:step`.
pub fn parse_s_token(token: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse s value '{token}'"));
    let parts: Vec<&str> = token.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![x.trim().parse().map_err(|_| bad())?]),
        [a, b, c] => {
            let (start, stop, step): (f64, f64, f64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                c.trim().parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || !(stop >= start) {
                return Err(Error::Config(format!("range '{token}' needs step > 0 and stop >= start")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // rounding keeps grid values such as 0.3 free of representation noise
            Ok((0..=n).map(|i| ((start + step * i as f64) * 1e12).round() / 1e12).collect())
        }
        _ => Err(bad()),
    }
}

pub fn parse_s_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for t in tokens {
        out.extend(parse_s_token(t.as_ref())?);
    }
    Ok(out)
}

/// `s` as written in a config file: a list or a range string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SValues {
    List(Vec<f64>),
    Range(String),
}

impl SValues {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            SValues::List(v) => Ok(v.clone()),
            SValues::Range(r) => parse_s_tokens(&r.split_whitespace().collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub p: Option<Vec<u32>>,
    pub s: Option<SValues>,
    pub n_particles: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub dt: Option<f64>,
    pub mu: Option<f64>,
    pub steps: Option<usize>,
    pub record_stride: Option<usize>,
    pub max_particles: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub n_sim: Option<usize>,
    pub runs: Option<usize>,
    pub bins: Option<usize>,
    pub burn_in: Option<f64>,
    pub angular: Option<bool>,
    pub exclusion_radius: Option<f64>,
}

/// A partially specified configuration. Both the file and the command line
/// produce one; [`ConfigFile::overlay`] merges them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub engine: Option<EngineKind>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub paper_scale: Option<bool>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl ConfigFile {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("bad config file: {e}")))
    }

    /// Reads a TOML config, or the `config` object of a run manifest when
    /// the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad manifest: {e}")))?;
            let cfg = v
                .get_mut("config")
                .map(serde_json::Value::take)
                .ok_or_else(|| Error::Config("manifest has no 'config' object".into()))?;
            serde_json::from_value(cfg).map_err(|e| Error::Config(format!("bad manifest config: {e}")))
        } else {
            Self::parse_toml(&text)
        }
    }

    /// Values set in `over` win.
    pub fn overlay(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            experiment: over.experiment.or(self.experiment),
            engine: over.engine.or(self.engine),
            seed: over.seed.or(self.seed),
            workers: over.workers.or(self.workers),
            output_dir: over.output_dir.or(self.output_dir),
            paper_scale: over.paper_scale.or(self.paper_scale),
            model: ModelSection {
                p: over.model.p.or(self.model.p),
                s: over.model.s.or(self.model.s),
                n_particles: over.model.n_particles.or(self.model.n_particles),
            },
            protocol: ProtocolSection {
                dt: over.protocol.dt.or(self.protocol.dt),
                mu: over.protocol.mu.or(self.protocol.mu),
                steps: over.protocol.steps.or(self.protocol.steps),
                record_stride: over.protocol.record_stride.or(self.protocol.record_stride),
                max_particles: over.protocol.max_particles.or(self.protocol.max_particles),
            },
            analysis: AnalysisSection {
                n_sim: over.analysis.n_sim.or(self.analysis.n_sim),
                runs: over.analysis.runs.or(self.analysis.runs),
                bins: over.analysis.bins.or(self.analysis.bins),
                burn_in: over.analysis.burn_in.or(self.analysis.burn_in),
                angular: over.analysis.angular.or(self.analysis.angular),
                exclusion_radius: over.analysis.exclusion_radius.or(self.analysis.exclusion_radius),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: Vec<u32>,
    pub s: Vec<f64>,
    pub n_particles: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub dt: f64,
    pub mu: f64,
    pub steps: usize,
    pub record_stride: usize,
    pub max_particles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    /// Side of the initial-condition grid.
    pub n_sim: usize,
    pub runs: usize,
    pub bins: usize,
    pub burn_in: f64,
    pub angular: bool,
    pub exclusion_radius: f64,
}

/// A fully resolved run. Serialises to the same layout as [`ConfigFile`],
/// so a manifest's config echo reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub engine: EngineKind,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub paper_scale: bool,
    pub model: ModelSpec,
    pub protocol: ProtocolSpec,
    pub analysis: AnalysisSpec,
}

struct Defaults {
    p: Vec<u32>,
    s: Vec<f64>,
    n: Vec<u64>,
    mu: f64,
    t_max: f64,
    stride: usize,
    n_sim: usize,
    runs: usize,
}

fn defaults(e: Experiment, paper: bool) -> Defaults {
    let pick = |desk: f64, full: f64| if paper { full } else { desk };
    let picku = |desk: usize, full: usize| if paper { full } else { desk };
    let range = |t: &str| parse_s_token(t).unwrap_or_default();
    match e {
        Experiment::PhasePortrait => Defaults {
            p: vec![2],
            s: vec![0.65],
            n: vec![1_000_000],
            mu: 25.0,
            t_max: pick(500.0, 3500.0),
            stride: 10,
            n_sim: 8,
            runs: 1,
        },
        Experiment::Similarity => Defaults {
            p: vec![2],
            s: vec![0.65],
            n: vec![1_000_000],
            mu: 25.0,
            t_max: pick(500.0, 3500.0),
            stride: 1,
            n_sim: picku(40, 700),
            runs: 1,
        },
        Experiment::DptScan => Defaults {
            p: vec![2],
            s: range("0.5:0.9:0.01"),
            n: vec![1_000_000],
            mu: 25.0,
            t_max: pick(500.0, 3500.0),
            stride: 10,
            n_sim: 1,
            runs: 1,
        },
        Experiment::Symmetry => Defaults {
            p: vec![2],
            s: vec![0.0],
            n: vec![100_000, 1_000],
            mu: 45.0,
            t_max: pick(1_000.0, 10_000.0),
            stride: 1,
            n_sim: 1,
            runs: picku(500, 8000),
        },
        Experiment::OptimalMu => Defaults {
            p: vec![2, 3, 4],
            s: range("0.1:0.9:0.1"),
            n: vec![1_000_000],
            mu: 25.0,
            t_max: 0.01,
            stride: 1,
            n_sim: 1,
            runs: 1,
        },
        Experiment::CriticalPoints => {
            Defaults { p: vec![2, 3, 4], s: vec![0.5], n: vec![1], mu: 25.0, t_max: 0.01, stride: 1, n_sim: 1, runs: 1 }
        }
        Experiment::QcHeatmap => Defaults {
            p: vec![2],
            s: range("0.55:0.75:0.05"),
            n: vec![100, 1_000, 10_000, 100_000, 1_000_000],
            mu: 25.0,
            t_max: pick(100.0, 3500.0),
            stride: 10,
            n_sim: picku(10, 700),
            runs: 1,
        },
    }
}

impl RunConfig {
    /// Fills everything `file` leaves open from the defaults of its
    /// experiment, then validates.
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let experiment = file.experiment.ok_or_else(|| Error::Config("no experiment given".into()))?;
        let paper_scale = file.paper_scale.unwrap_or(false);
        let d = defaults(experiment, paper_scale);
        let dt = file.protocol.dt.unwrap_or(0.01);
        let steps = match file.protocol.steps {
            Some(n) => n,
            None => ((d.t_max / dt).round() as usize).max(1),
        };
        let cfg = RunConfig {
            experiment,
            engine: file.engine.unwrap_or(EngineKind::Gaussian),
            seed: file.seed.unwrap_or(0),
            workers: file.workers.unwrap_or(1),
            output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from("qfc-out")),
            paper_scale,
            model: ModelSpec {
                p: file.model.p.unwrap_or(d.p),
                s: match file.model.s {
                    Some(s) => s.values()?,
                    None => d.s,
                },
                n_particles: file.model.n_particles.unwrap_or(d.n),
            },
            protocol: ProtocolSpec {
                dt,
                mu: file.protocol.mu.unwrap_or(d.mu),
                steps,
                record_stride: file.protocol.record_stride.unwrap_or(d.stride),
                max_particles: file.protocol.max_particles.unwrap_or(DEFAULT_MAX_PARTICLES),
            },
            analysis: AnalysisSpec {
                n_sim: file.analysis.n_sim.unwrap_or(d.n_sim),
                runs: file.analysis.runs.unwrap_or(d.runs),
                bins: file.analysis.bins.unwrap_or(50),
                burn_in: file.analysis.burn_in.unwrap_or(0.0),
                angular: file.analysis.angular.unwrap_or(false),
                exclusion_radius: file.analysis.exclusion_radius.unwrap_or(0.15),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let (m, pr, a) = (&self.model, &self.protocol, &self.analysis);
        if m.p.is_empty() || m.s.is_empty() || m.n_particles.is_empty() {
            return fail("p, s and n_particles grids must be nonempty".into());
        }
        if let Some(p) = m.p.iter().find(|&&p| p < 2) {
            return fail(format!("p must be >= 2, got {p}"));
        }
        if let Some(s) = m.s.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return fail(format!("s must lie in [0, 1], got {s}"));
        }
        if m.n_particles.contains(&0) {
            return fail("n_particles must be >= 1".into());
        }
        if !(pr.dt > 0.0 && pr.dt.is_finite()) || !(pr.mu > 0.0 && pr.mu.is_finite()) {
            return fail(format!("dt and mu must be positive (dt={}, mu={})", pr.dt, pr.mu));
        }
        if pr.steps == 0 || pr.record_stride == 0 {
            return fail("steps and record_stride must be >= 1".into());
        }
        if a.runs == 0 || a.n_sim == 0 || a.bins == 0 || self.workers == 0 {
            return fail("runs, n_sim, bins and workers must be >= 1".into());
        }
        if !(a.burn_in >= 0.0) || !(a.exclusion_radius >= 0.0) {
            return fail("burn_in and exclusion_radius must be >= 0".into());
        }
        if self.engine == EngineKind::Exact {
            if let Some(n) = m.n_particles.iter().find(|&&n| n > pr.max_particles) {
                return fail(format!("exact engine is capped at N = {} (asked for {n})", pr.max_particles));
            }
        }
        if self.experiment == Experiment::DptScan && m.s.windows(2).any(|w| !(w[1] > w[0])) {
            return fail("dpt-scan needs a strictly increasing s grid".into());
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.protocol.steps as f64 * self.protocol.dt
    }
}
