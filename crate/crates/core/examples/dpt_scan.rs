//! Long-time magnetisation versus s from the +z pole, for the classical
//! flow and for the feedback simulation at two particle numbers.
//!
//! cargo run --release --example dpt_scan -- [p]

use pspin_qfc::analysis::{dpt_scan, ScanOptions};
use pspin_qfc::engine::{ClassicalEngine, GaussianEngine};
use pspin_qfc::meanfield::dpt_critical_point;
use pspin_qfc::{ModelParams, Stepping};

fn main() -> pspin_qfc::Result<()> {
    let p: u32 = std::env::args().nth(1).map(|a| a.parse().expect("p")).unwrap_or(3);
    let grid: Vec<f64> = (0..=40).map(|i| 0.5 + 0.01 * i as f64).collect();
    let stepping = Stepping::new(0.01, 20_000, 25.0).with_stride(10);
    println!("energy-matching critical point: {:.6}", dpt_critical_point(p)?);

    let classical =
        dpt_scan(&ClassicalEngine(stepping), &ModelParams::mean_field(p, 0.5)?, &grid, &ScanOptions::default())?;
    let gaussian = GaussianEngine::new(stepping);
    let large = dpt_scan(&gaussian, &ModelParams::new(p, 0.5, 1_000_000)?, &grid, &ScanOptions::default())?;
    let opts = ScanOptions { runs: 10, seed: 1, ..Default::default() };
    let small = dpt_scan(&gaussian, &ModelParams::new(p, 0.5, 10_000)?, &grid, &opts)?;

    println!("{:>6} {:>10} {:>10} {:>10}", "s", "classical", "N=1e6", "N=1e4");
    for (i, s) in grid.iter().enumerate() {
        println!("{:>6.2} {:>10.4} {:>10.4} {:>10.4}", s, classical.z_inf[i], large.z_inf[i], small.z_inf[i]);
    }
    for (name, scan) in [("classical", &classical), ("N=1e6", &large), ("N=1e4", &small)] {
        match scan.critical_point() {
            Ok(s) => println!("{name:>9}: s_c ~ {s:.4}"),
            Err(e) => println!("{name:>9}: {e}"),
        }
    }
    Ok(())
}
