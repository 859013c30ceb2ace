//! Average similarity to the classical flow on a small (s, N) grid: the
//! crossover from quantum to classical behaviour.
//!
//! cargo run --release --example qc_heatmap

use pspin_qfc::analysis::qc_heatmap;
use pspin_qfc::engine::GaussianEngine;
use pspin_qfc::Stepping;

fn main() -> pspin_qfc::Result<()> {
    let stepping = Stepping::new(0.01, 5_000, 25.0).with_stride(10);
    let s_grid = [0.55, 0.65, 0.75];
    let n_grid = [100, 1_000, 10_000, 100_000, 1_000_000];
    let h = qc_heatmap(&GaussianEngine::new(stepping), stepping, 2, &s_grid, &n_grid, 8, 5, 1)?;
    print!("{:>6}", "s \\ N");
    for n in n_grid {
        print!(" {n:>9}");
    }
    println!();
    for (i, s) in h.s_grid.iter().enumerate() {
        print!("{s:>6.2}");
        for v in &h.values[i] {
            print!(" {v:>9.3}");
        }
        println!();
    }
    h.write_csv(std::io::stdout().lock())
}
