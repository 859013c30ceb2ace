//! Measurement resolution that minimises the total noise injected per step:
//! closed form next to the numerical minimiser.
//!
//! cargo run --release --example optimal_mu

use pspin_qfc::gaussian::{mu_scan, numeric_optimal_mu, optimal_mu, ProtocolConfig};
use pspin_qfc::ModelParams;

fn main() -> pspin_qfc::Result<()> {
    let dt = 0.01;
    println!("{:>3} {:>5} {:>12} {:>12} {:>8}", "p", "s", "closed", "numeric", "ratio");
    for p in 2..=4 {
        for s in [0.25, 0.5, 0.75, 1.0] {
            let cfg = ProtocolConfig::new(ModelParams::new(p, s, 1_000_000)?, dt, 1.0, 1, 0)?;
            let closed = optimal_mu(dt, s, p)?;
            let numeric = numeric_optimal_mu(&cfg)?;
            println!("{p:>3} {s:>5.2} {closed:>12.4} {numeric:>12.4} {:>8.3}", closed / numeric);
        }
    }

    let cfg = ProtocolConfig::new(ModelParams::new(2, 0.65, 1_000_000)?, dt, 1.0, 1, 0)?;
    let mus = [1.0, 3.0, 10.0, 12.4, 15.0, 30.0, 100.0, 300.0];
    println!("\np = 2, s = 0.65: noise objective (per J) along mu");
    for (mu, o) in mus.iter().zip(mu_scan(&cfg, &mus)?) {
        println!("  mu = {mu:>6.1}: readout {:.3e} + feedback {:.3e} = {:.3e}", o.sigma1_sq, o.sigma2_sq, o.f);
    }
    Ok(())
}
