//! Drives an experiment from a TOML configuration, as the `qfc` binary does,
//! and reloads the resulting manifest to show the run is reproducible.
//!
//! cargo run --release --example run_config -- [out_dir]

use std::fs;
use std::path::PathBuf;

use pspin_qfc::config::ConfigFile;
use pspin_qfc::{runner, RunConfig};

const CONFIG: &str = r#"
experiment = "dpt-scan"
engine = "gaussian"
seed = 42

[model]
p = [2, 3]
s = "0.55:0.85:0.01"
n_particles = [1000000]

[protocol]
dt = 0.01
mu = 25.0
steps = 10000
record_stride = 10
"#;

fn main() -> pspin_qfc::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "run-config-out".into()));
    let mut file = ConfigFile::parse_toml(CONFIG)?;
    file.output_dir = Some(out.join("first"));
    let report = runner::run(&RunConfig::resolve(file)?)?;
    for line in &report.summary {
        println!("{line}");
    }

    let mut again = ConfigFile::load(&report.manifest_path)?;
    again.output_dir = Some(out.join("second"));
    let second = runner::run(&RunConfig::resolve(again)?)?;
    for name in &report.manifest.outputs {
        let a = fs::read(out.join("first").join(name))?;
        let b = fs::read(out.join("second").join(name))?;
        println!("{name}: {}", if a == b { "identical on rerun" } else { "DIFFERS" });
    }
    println!("manifests: {} and {}", report.manifest_path.display(), second.manifest_path.display());
    Ok(())
}
