//! Executes a [`RunConfig`]: CSV artifacts plus a `manifest.json` that
//! records the resolved configuration and every task seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::analysis::similarity::initial_grid;
use crate::analysis::{
    adiabatic_ensemble, dpt_scan, qc_heatmap, similarity_grid, symmetry_statistics, ScanOptions, SingularSet,
};
use crate::config::{Experiment, RunConfig};
use crate::engine::{ClassicalEngine, EngineKind, ExactEngine, GaussianEngine, Stepping, TrajectorySource};
use crate::error::{Error, Result};
use crate::gaussian::{interior_minima, mu_scan, numeric_optimal_mu, optimal_mu, ProtocolConfig};
use crate::meanfield::dpt_critical_point;
use crate::spin_model::{CriticalPoints, ModelParams};
use crate::sweep::{parallel_map, task_seed};
use crate::trajectory::BlochVector;

/// One unit of work in the manifest: a `(p, s, N)` combination with its
/// seed and the seeds of its sub-tasks (grid cells or runs).
#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub label: String,
    pub seed: u64,
    pub subtask_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub software: String,
    pub experiment: Experiment,
    pub seed: u64,
    pub config: RunConfig,
    pub tasks: Vec<TaskRecord>,
    pub outputs: Vec<String>,
    pub failures: Vec<String>,
    pub wall_time_s: f64,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
    /// Human-readable summary, one line per result.
    pub summary: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    dir: &'a Path,
    tasks: Vec<TaskRecord>,
    outputs: Vec<String>,
    failures: Vec<String>,
    summary: Vec<String>,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn stepping(&self) -> Stepping {
        let pr = &self.cfg.protocol;
        Stepping::new(pr.dt, pr.steps, pr.mu).with_stride(pr.record_stride)
    }

    fn engine(&self) -> Box<dyn TrajectorySource> {
        let st = self.stepping();
        match self.cfg.engine {
            EngineKind::Classical => Box::new(ClassicalEngine(st)),
            EngineKind::Gaussian => Box::new(GaussianEngine::new(st)),
            EngineKind::Exact => {
                let mut e = ExactEngine::new(st);
                e.max_particles = self.cfg.protocol.max_particles;
                Box::new(e)
            }
        }
    }

    /// `(p, s, N)` combinations in a fixed order with their seeds.
    fn combos(&self) -> Vec<(ModelParams, u64)> {
        let m = &self.cfg.model;
        let mut out = Vec::new();
        for &p in &m.p {
            for &s in &m.s {
                for &n in &m.n_particles {
                    let seed = task_seed(self.cfg.seed, out.len());
                    out.push((ModelParams { p, s, n }, seed));
                }
            }
        }
        out
    }
}

fn tag(params: &ModelParams) -> String {
    format!("p{}_s{:.4}_N{}", params.p, params.s, params.n)
}

fn seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n).map(|i| task_seed(seed, i)).collect()
}

/// Runs the experiment and writes its artifacts into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&cfg.output_dir)?;
    let mut ctx = Ctx {
        cfg,
        dir: &cfg.output_dir,
        tasks: Vec::new(),
        outputs: Vec::new(),
        failures: Vec::new(),
        summary: Vec::new(),
    };
    match cfg.experiment {
        Experiment::CriticalPoints => critical_points(&mut ctx)?,
        Experiment::PhasePortrait => phase_portrait(&mut ctx)?,
        Experiment::Similarity => similarity(&mut ctx)?,
        Experiment::DptScan => dpt(&mut ctx)?,
        Experiment::Symmetry => symmetry(&mut ctx)?,
        Experiment::OptimalMu => optimal(&mut ctx)?,
        Experiment::QcHeatmap => heatmap(&mut ctx)?,
    }
    let manifest = Manifest {
        software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        experiment: cfg.experiment,
        seed: cfg.seed,
        config: cfg.clone(),
        tasks: ctx.tasks,
        outputs: ctx.outputs,
        failures: ctx.failures,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let manifest_path = cfg.output_dir.join("manifest.json");
    let mut w = BufWriter::new(File::create(&manifest_path)?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(RunReport { manifest_path, manifest, summary: ctx.summary })
}

fn critical_points(ctx: &mut Ctx) -> Result<()> {
    let rows: Vec<CriticalPoints> =
        ctx.cfg.model.p.iter().map(|&p| CriticalPoints::compute(p)).collect::<Result<_>>()?;
    ctx.summary.push(format!("{:>3} {:>10} {:>10} {:>10}", "p", "s_onset", "s_eq", "s_dpt"));
    for r in &rows {
        ctx.summary.push(format!("{:>3} {:>10.6} {:>10.6} {:>10.6}", r.p, r.s_onset, r.s_eq, r.s_dpt));
    }
    ctx.write("critical_points.csv", |w| {
        writeln!(w, "p,s_onset,s_eq,s_dpt")?;
        for r in &rows {
            writeln!(w, "{},{:.10},{:.10},{:.10}", r.p, r.s_onset, r.s_eq, r.s_dpt)?;
        }
        Ok(())
    })
}

fn phase_portrait(ctx: &mut Ctx) -> Result<()> {
    let engine = ctx.engine();
    let ics = initial_grid(ctx.cfg.analysis.n_sim);
    for (params, seed) in ctx.combos() {
        params.validate()?;
        let sub = seeds(seed, ics.len());
        let results = parallel_map(&ics, ctx.cfg.workers, |i, &(theta, phi)| {
            engine.trajectory(BlochVector::from_angles(theta, phi), &params, sub[i])
        })?;
        let mut trajs = Vec::with_capacity(ics.len());
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(Ok(t)) => trajs.push(Some(t)),
                Ok(Err(e)) => ctx.failures.push(format!("{} ic {i}: {e}", tag(&params))),
                Err(p) => ctx.failures.push(format!("{} ic {i}: panic: {}", tag(&params), p.message)),
            }
            if trajs.len() <= i {
                trajs.push(None);
            }
        }
        ctx.write(&format!("portrait_{}.csv", tag(&params)), |w| {
            writeln!(w, "ic,t,X,Y,Z,czz,m")?;
            for (i, t) in trajs.iter().enumerate() {
                let Some(t) = t else { continue };
                let czz = t.czz_or_factorized();
                for (k, (&x, &c)) in t.points.iter().zip(&czz).enumerate() {
                    let m = match (&t.outcomes, k) {
                        (Some(o), k) if k > 0 => format!("{:.10}", o[k - 1]),
                        _ => String::new(),
                    };
                    writeln!(w, "{i},{:.6},{:.10},{:.10},{:.10},{:.10},{m}", t.times[k], x.x, x.y, x.z, c)?;
                }
            }
            Ok(())
        })?;
        ctx.summary.push(format!("{}: {} trajectories", tag(&params), trajs.iter().flatten().count()));
        ctx.tasks.push(TaskRecord { label: tag(&params), seed, subtask_seeds: sub });
    }
    Ok(())
}

fn similarity(ctx: &mut Ctx) -> Result<()> {
    let engine = ctx.engine();
    let reference = ClassicalEngine(ctx.stepping());
    let a = ctx.cfg.analysis.clone();
    let mut rows = Vec::new();
    for (params, seed) in ctx.combos() {
        params.validate()?;
        let grid = similarity_grid(&reference, engine.as_ref(), &params, a.n_sim, seed, ctx.cfg.workers, a.angular)?;
        ctx.failures.extend(grid.failures.iter().map(|f| format!("{}: {f}", tag(&params))));
        let avg = grid.average().unwrap_or(f64::NAN);
        let excl = grid.average_excluding(&SingularSet::new(&params), a.exclusion_radius).unwrap_or(f64::NAN);
        ctx.write(&format!("similarity_{}.csv", tag(&params)), |w| grid.write_csv(w))?;
        ctx.summary.push(format!("{}: S_bar = {avg:.4}, excluding singular set = {excl:.4}", tag(&params)));
        rows.push((params, avg, excl, grid.failures.len()));
        ctx.tasks.push(TaskRecord { label: tag(&params), seed, subtask_seeds: seeds(seed, a.n_sim * a.n_sim) });
    }
    ctx.write("similarity_summary.csv", |w| {
        writeln!(w, "p,s,N,S_bar,S_bar_excluded,failures")?;
        for (q, avg, excl, nf) in &rows {
            writeln!(w, "{},{:.6},{},{avg:.10},{excl:.10},{nf}", q.p, q.s, q.n)?;
        }
        Ok(())
    })
}

fn dpt(ctx: &mut Ctx) -> Result<()> {
    let engine = ctx.engine();
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    let mut k = 0;
    for &p in &cfg.model.p {
        for &n in &cfg.model.n_particles {
            let seed = task_seed(cfg.seed, k);
            k += 1;
            let base = ModelParams::new(p, cfg.model.s[0], n)?;
            let opts =
                ScanOptions { runs: cfg.analysis.runs, burn_in: cfg.analysis.burn_in, seed, workers: cfg.workers };
            let scan = dpt_scan(engine.as_ref(), &base, &cfg.model.s, &opts)?;
            ctx.failures.extend(scan.failures.iter().map(|f| format!("p{p}_N{n}: {f}")));
            let est = scan.critical_point().ok();
            let reference = dpt_critical_point(p)?;
            ctx.write(&format!("dpt_p{p}_N{n}.csv"), |w| scan.write_csv(w))?;
            ctx.summary.push(match est {
                Some(e) => format!("p={p} N={n}: s_c estimate {e:.5} (classical {reference:.6})"),
                None => format!("p={p} N={n}: no transition found (classical {reference:.6})"),
            });
            rows.push((p, n, est, reference));
            ctx.tasks.push(TaskRecord {
                label: format!("p{p}_N{n}"),
                seed,
                subtask_seeds: seeds(seed, cfg.model.s.len() * cfg.analysis.runs),
            });
        }
    }
    ctx.write("dpt_summary.csv", |w| {
        writeln!(w, "p,N,s_c_estimate,s_c_classical")?;
        for (p, n, est, r) in &rows {
            let e = est.map(|e| format!("{e:.10}")).unwrap_or_default();
            writeln!(w, "{p},{n},{e},{r:.10}")?;
        }
        Ok(())
    })
}

fn symmetry(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    let mut k = 0;
    for &p in &cfg.model.p {
        for &n in &cfg.model.n_particles {
            let seed = task_seed(cfg.seed, k);
            k += 1;
            let params = ModelParams::new(p, 0.0, n)?;
            let ens = adiabatic_ensemble(
                cfg.engine,
                &params,
                cfg.protocol.dt,
                cfg.protocol.mu,
                cfg.total_time(),
                cfg.analysis.runs,
                seed,
                cfg.workers,
            )?;
            ctx.failures.extend(ens.failures.iter().map(|f| format!("p{p}_N{n}: {f}")));
            if ens.final_z.is_empty() {
                return Err(Error::numerical(format!("every adiabatic run failed for p={p}, N={n}")));
            }
            let st = symmetry_statistics(&ens.final_z, cfg.analysis.bins)?;
            let frac = ens.polarized_fraction(0.9);
            ctx.write(&format!("symmetry_p{p}_N{n}.csv"), |w| st.histogram.write_csv(w))?;
            ctx.write(&format!("final_z_p{p}_N{n}.csv"), |w| {
                writeln!(w, "run,Z")?;
                for (r, z) in ens.final_z.iter().enumerate() {
                    writeln!(w, "{r},{z:.10}")?;
                }
                Ok(())
            })?;
            ctx.summary.push(format!(
                "p={p} N={n}: |Z|>0.9 in {:.1}% of runs, Z>0 in {:.1}%, JS = {:.4} (coin reference {:.4})",
                100.0 * frac,
                100.0 * st.sign_balance,
                st.js_to_uniform,
                st.js_coin_reference
            ));
            rows.push((p, n, ens.final_z.len(), frac, st));
            ctx.tasks.push(TaskRecord {
                label: format!("p{p}_N{n}"),
                seed,
                subtask_seeds: seeds(seed, cfg.analysis.runs),
            });
        }
    }
    ctx.write("symmetry_summary.csv", |w| {
        writeln!(w, "p,N,runs,polarized_fraction,sign_balance,js,js_coin_reference")?;
        for (p, n, runs, frac, st) in &rows {
            writeln!(
                w,
                "{p},{n},{runs},{frac:.6},{:.6},{:.10},{:.10}",
                st.sign_balance, st.js_to_uniform, st.js_coin_reference
            )?;
        }
        Ok(())
    })
}

fn optimal(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let n_mu = 400;
    let mus: Vec<f64> = (0..n_mu).map(|i| 10f64.powf(-2.0 + 7.0 * i as f64 / (n_mu - 1) as f64)).collect();
    let mut rows = Vec::new();
    let mut scans = Vec::new();
    for &p in &cfg.model.p {
        for &s in &cfg.model.s {
            let n = cfg.model.n_particles[0];
            let pc = ProtocolConfig::new(ModelParams::new(p, s, n)?, cfg.protocol.dt, cfg.protocol.mu, 1, 0)?;
            let closed = optimal_mu(cfg.protocol.dt, s, p)?;
            let numeric = numeric_optimal_mu(&pc);
            let scan = mu_scan(&pc, &mus)?;
            let minima = interior_minima(&scan.iter().map(|o| o.f).collect::<Vec<_>>()).len();
            match &numeric {
                Ok(m) => ctx.summary.push(format!(
                    "p={p} s={s:.3}: closed form {closed:.4}, numeric {m:.4}, ratio {:.4}, interior minima {minima}",
                    closed / m
                )),
                Err(e) => {
                    ctx.failures.push(format!("p={p} s={s}: {e}"));
                    ctx.summary.push(format!("p={p} s={s:.3}: closed form {closed:.4}, numeric failed: {e}"));
                }
            }
            rows.push((p, s, closed, numeric.ok(), minima));
            scans.push((p, s, scan));
        }
    }
    ctx.write("optimal_mu.csv", |w| {
        writeln!(w, "p,s,mu_closed,mu_numeric,ratio,interior_minima")?;
        for (p, s, c, nm, k) in &rows {
            let (m, r) = match nm {
                Some(m) => (format!("{m:.10}"), format!("{:.10}", c / m)),
                None => (String::new(), String::new()),
            };
            writeln!(w, "{p},{s:.6},{c:.10},{m},{r},{k}")?;
        }
        Ok(())
    })?;
    ctx.write("mu_scan.csv", |w| {
        writeln!(w, "p,s,mu,sigma1_sq,sigma2_sq,f")?;
        for (p, s, scan) in &scans {
            for (mu, o) in mus.iter().zip(scan) {
                writeln!(w, "{p},{s:.6},{mu:.8e},{:.10e},{:.10e},{:.10e}", o.sigma1_sq, o.sigma2_sq, o.f)?;
            }
        }
        Ok(())
    })
}

fn heatmap(ctx: &mut Ctx) -> Result<()> {
    let engine = ctx.engine();
    let cfg = ctx.cfg;
    let st = ctx.stepping();
    for (k, &p) in cfg.model.p.iter().enumerate() {
        let seed = task_seed(cfg.seed, k);
        let h = qc_heatmap(
            engine.as_ref(),
            st,
            p,
            &cfg.model.s,
            &cfg.model.n_particles,
            cfg.analysis.n_sim,
            seed,
            cfg.workers,
        )?;
        ctx.write(&format!("heatmap_p{p}.csv"), |w| h.write_csv(w))?;
        for (i, s) in h.s_grid.iter().enumerate() {
            let cells: Vec<String> = h.values[i].iter().map(|v| format!("{v:.3}")).collect();
            ctx.summary.push(format!("p={p} s={s:.3}: {}", cells.join(" ")));
        }
        ctx.tasks.push(TaskRecord {
            label: format!("p{p}"),
            seed,
            subtask_seeds: seeds(seed, cfg.model.s.len() * cfg.model.n_particles.len()),
        });
    }
    Ok(())
}
