//! Runs the classical flow and the Gaussian feedback engine from the same
//! initial conditions and writes both portraits as CSV.
//!
//! cargo run --release --example phase_portrait -- [out_dir] [N]

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use pspin_qfc::analysis::initial_grid;
use pspin_qfc::engine::{ClassicalEngine, GaussianEngine};
use pspin_qfc::{BlochVector, ModelParams, Stepping, TrajectorySource};

fn main() -> pspin_qfc::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "portrait-out".into()));
    let n: u64 = args.next().map(|a| a.parse().expect("N")).unwrap_or(1_000_000);
    fs::create_dir_all(&out)?;

    let params = ModelParams::new(2, 0.65, n)?;
    let stepping = Stepping::new(0.01, 5_000, 25.0).with_stride(5);
    let engines: [(&str, Box<dyn TrajectorySource>); 2] =
        [("classical", Box::new(ClassicalEngine(stepping))), ("gaussian", Box::new(GaussianEngine::new(stepping)))];
    for (i, (theta, phi)) in initial_grid(4).into_iter().enumerate() {
        let x0 = BlochVector::from_angles(theta, phi);
        for (name, engine) in &engines {
            let tr = engine.trajectory(x0, &params, i as u64)?;
            tr.write_csv(BufWriter::new(File::create(out.join(format!("{name}_{i:02}.csv")))?))?;
            let last = tr.last().unwrap_or(x0);
            println!(
                "ic {i:2} {name:>9}: start ({:+.3}, {:+.3}, {:+.3}) end ({:+.3}, {:+.3}, {:+.3})",
                x0.x, x0.y, x0.z, last.x, last.y, last.z
            );
        }
    }
    println!("trajectories written to {}", out.display());
    Ok(())
}
