//! Equilibrium and dynamical critical points for p = 2..6, plus the order
//! parameter across the equilibrium transition.
//!
//! cargo run --release --example critical_points

use pspin_qfc::meanfield::{dpt_pole_estimate, fixed_points};
use pspin_qfc::{CriticalPoints, ModelParams};

fn main() -> pspin_qfc::Result<()> {
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "p", "s_onset", "s_eq", "s_dpt", "p/(p+1)");
    for p in 2..=6 {
        let c = CriticalPoints::compute(p)?;
        println!("{p:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}", c.s_onset, c.s_eq, c.s_dpt, dpt_pole_estimate(p));
    }

    // continuous for p = 2, a jump for p = 3
    for p in [2u32, 3] {
        let c = CriticalPoints::compute(p)?;
        print!("\np = {p}, order parameter near s_eq:");
        for k in -3..=3 {
            let s = c.s_eq + 0.002 * k as f64;
            print!(" {s:.3}:{:.3}", ModelParams::mean_field(p, s)?.order_parameter());
        }
        println!();
    }

    let params = ModelParams::mean_field(3, 0.8)?;
    println!("\nfixed points of the flow at p = 3, s = 0.8:");
    for (x, kind) in fixed_points(&params) {
        println!("  ({:+.4}, {:+.4}, {:+.4})  {kind:?}", x.x, x.y, x.z);
    }
    Ok(())
}
