//! Phase-space similarity between the feedback simulation and the classical
//! flow for two particle numbers.
//!
//! cargo run --release --example similarity_map -- [n_sim] [t_max]

use pspin_qfc::analysis::{similarity_grid, SingularSet};
use pspin_qfc::engine::{ClassicalEngine, GaussianEngine};
use pspin_qfc::{ModelParams, Stepping};

fn main() -> pspin_qfc::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_sim: usize = args.next().map(|a| a.parse().expect("n_sim")).unwrap_or(12);
    let t_max: f64 = args.next().map(|a| a.parse().expect("t_max")).unwrap_or(50.0);
    let stepping = Stepping::new(0.01, (t_max / 0.01) as usize, 25.0);
    let reference = ClassicalEngine(stepping);
    let simulated = GaussianEngine::new(stepping);

    for (p, s) in [(2u32, 0.65), (3, 0.75), (4, 0.8)] {
        for n in [10_000u64, 1_000_000] {
            let params = ModelParams::new(p, s, n)?;
            let grid = similarity_grid(&reference, &simulated, &params, n_sim, 1, 1, false)?;
            let singular = SingularSet::new(&params);
            println!(
                "p={p} s={s} N={n:>8}: S_bar = {:.3}, away from fixed points and separatrices = {:.3}",
                grid.average()?,
                grid.average_excluding(&singular, 0.15)?
            );
        }
    }
    Ok(())
}
