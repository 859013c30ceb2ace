//! Cross-check of the Gaussian engine against the exact Dicke-basis engine
//! at small N: distributions of Z after a few steps from the pole.
//!
//! cargo run --release --example exact_oracle -- [N] [runs]

use pspin_qfc::analysis::ks_two_sample;
use pspin_qfc::engine::{ExactEngine, GaussianEngine};
use pspin_qfc::exact::{expectations, scs_state, CollectiveOps};
use pspin_qfc::{BlochVector, ModelParams, Stepping, TrajectorySource};

fn main() -> pspin_qfc::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map(|a| a.parse().expect("N")).unwrap_or(100);
    let runs: usize = args.next().map(|a| a.parse().expect("runs")).unwrap_or(1000);

    let ops = CollectiveOps::new(n)?;
    println!("N = {n}: commutator residual {:.1e}", ops.commutator_error());
    let e = expectations(&scs_state(1.0, 0.5, n)?);
    println!(
        "coherent state at theta=1, phi=0.5: <J>/J = ({:.4}, {:.4}, {:.4}), Var(Jz) = {:.3}",
        e.x, e.y, e.z, e.var_jz
    );

    let params = ModelParams::new(2, 0.65, n)?;
    let stepping = Stepping::new(0.01, 20, 12.4);
    let exact = ExactEngine::new(stepping);
    let gauss = GaussianEngine::new(stepping);
    let steps = [1usize, 5, 20];
    let mut ze = vec![Vec::new(); 3];
    let mut zg = vec![Vec::new(); 3];
    for r in 0..runs as u64 {
        let a = exact.trajectory(BlochVector::Z, &params, 2 * r)?;
        let b = gauss.trajectory(BlochVector::Z, &params, 2 * r + 1)?;
        for (i, &k) in steps.iter().enumerate() {
            ze[i].push(a.points[k].z);
            zg[i].push(b.points[k].z);
        }
    }
    for (i, &k) in steps.iter().enumerate() {
        let ks = ks_two_sample(&ze[i], &zg[i])?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "after {k:2} steps: <Z> exact {:.6}, gaussian {:.6}; KS D = {:.4}, p = {:.3}",
            mean(&ze[i]),
            mean(&zg[i]),
            ks.statistic,
            ks.p_value
        );
    }
    Ok(())
}
