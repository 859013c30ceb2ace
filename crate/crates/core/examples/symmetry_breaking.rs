//! Adiabatic passages s: 0 -> 1 for p = 2. Large N ends in one of the two
//! polarised states at random; small N stays spread out.
//!
//! cargo run --release --example symmetry_breaking -- [runs] [T]

use pspin_qfc::analysis::{adiabatic_ensemble, symmetry_statistics};
use pspin_qfc::{EngineKind, ModelParams};

fn main() -> pspin_qfc::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().map(|a| a.parse().expect("runs")).unwrap_or(200);
    let total_time: f64 = args.next().map(|a| a.parse().expect("T")).unwrap_or(1000.0);

    for n in [100u64, 1_000, 10_000, 100_000] {
        let params = ModelParams::new(2, 0.0, n)?;
        let ens = adiabatic_ensemble(EngineKind::Gaussian, &params, 0.01, 45.0, total_time, runs, 3, 1)?;
        let st = symmetry_statistics(&ens.final_z, 50)?;
        println!(
            "N={n:>6}: |Z|>0.9 in {:5.1}%, Z>0 in {:5.1}%, JS to uniform {:.4} (two-point reference {:.4})",
            100.0 * ens.polarized_fraction(0.9),
            100.0 * st.sign_balance,
            st.js_to_uniform,
            st.js_coin_reference
        );
        let bar: String = st
            .histogram
            .counts
            .iter()
            .map(|&c| match c * 50 / runs as u64 {
                0 if c == 0 => ' ',
                0 => '.',
                1..=2 => ':',
                _ => '#',
            })
            .collect();
        println!("          Z = -1 [{bar}] +1");
    }
    Ok(())
}
