//! Evaluates the time weights at a few frequencies and runs every pointwise
//! inequality audit on random samples.
//!
//! cargo run --release --example weights_and_audits

use mhd_couette::audit::{all_reports, weights_check_report};
use mhd_couette::symbols::p_symbol;
use mhd_couette::weights::WeightSet;
use mhd_couette::{Frequency, Params};

fn main() -> mhd_couette::Result<()> {
    let params = Params::new(1e-4, 1e-4, 1.0);
    params.validate(false)?;

    println!("{:>4} {:>8} {:>8} {:>12} {:>10} {:>10} {:>10} {:>10}", "k", "eta", "t", "p", "m_d", "m_nu", "m_s", "m");
    for (k, eta) in [(1, 0.0), (1, 20.0), (5, 50.0), (-3, -30.0)] {
        let f = Frequency::new(k, eta);
        for t in [0.0, eta / k as f64, 100.0] {
            let w = WeightSet::at(f, t, &params);
            println!(
                "{k:>4} {eta:>8.1} {t:>8.1} {:>12.4e} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                p_symbol(f, t),
                w.m_d,
                w.m_nu,
                w.m_s,
                w.m
            );
        }
    }

    let check = weights_check_report(200, 7, 1e-8);
    println!("\nclosed forms vs ODE integration: {} ({} samples, min slack {:.3e})", check.verdict, check.samples, check.min_slack);

    println!("\n{:<24} {:>8} {:>11} {:>6}", "audit", "samples", "min slack", "");
    for r in all_reports(20_000, 1) {
        println!("{:<24} {:>8} {:>11.3e} {:>6}", r.audit_name, r.samples, r.min_slack, r.verdict);
    }
    Ok(())
}
