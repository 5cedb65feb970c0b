//! Decay rate of one mode after its transient, against viscosity.
//!
//! cargo run --release --example enhanced_dissipation

use mhd_couette::config::RunConfig;
use mhd_couette::scan::decay_scan;
use mhd_couette::Params;

fn main() -> mhd_couette::Result<()> {
    let cfg = RunConfig::new(Params::new(1e-4, 1e-4, 1.0));
    let nus = [1e-4, 1e-5, 1e-6, 1e-7];
    let res = decay_scan(&nus, &cfg)?;
    for (nu, rate) in res.axis.iter().zip(&res.responses) {
        println!("nu = {nu:.0e}  rate = {rate:.4e}  rate / nu^(1/3) = {:.4}", rate / nu.cbrt());
    }
    if let Some(fit) = res.fit {
        println!("slope {:.4}, 95% CI [{:.4}, {:.4}]", fit.slope, fit.ci_low, fit.ci_high);
    }
    Ok(())
}
