//! Peak amplification of a single shear-tilted mode at several viscosities,
//! with a log-log fit of its scaling.
//!
//! cargo run --release --example transient_growth

use mhd_couette::config::RunConfig;
use mhd_couette::scan::growth_scan;
use mhd_couette::Params;

fn main() -> mhd_couette::Result<()> {
    let mut cfg = RunConfig::new(Params::new(1e-4, 1e-4, 1.0));
    cfg.mode.k = 1;
    cfg.mode.eta = 0.0;
    let nus = [1e-4, 1e-5, 1e-6, 1e-7];
    let res = growth_scan(&nus, &cfg)?;
    for (nu, a) in res.axis.iter().zip(&res.responses) {
        println!("nu = {nu:.0e}  A = {a:.3}  A nu^(1/3) = {:.4}", a * nu.cbrt());
    }
    if let Some(fit) = res.fit {
        println!("slope {:.4}, 95% CI [{:.4}, {:.4}]", fit.slope, fit.ci_low, fit.ci_high);
    }
    Ok(())
}
