//! Ideal linear evolution of a smooth profile: the vertical velocity and
//! magnetic field decay like 1/t while the vorticity is only sheared.
//!
//! cargo run --release --example inviscid_damping

use mhd_couette::config::RunConfig;
use mhd_couette::diagnostics::damping_ratios;
use mhd_couette::grid::Grid;
use mhd_couette::harness::run_from_state;
use mhd_couette::solver::{make_initial_data, MhdState};
use mhd_couette::Params;

fn main() -> mhd_couette::Result<()> {
    let params = Params::new(0.0, 0.0, 1.0);
    let mut cfg = RunConfig::new(params);
    cfg.grid = Grid::square(64)?;
    cfg.allow_out_of_theory = true;
    cfg.nonlinear = false;
    cfg.eps = 1e-3;
    cfg.blowup_factor = f64::INFINITY;
    cfg.initial.include_zero_modes = false;
    let init = make_initial_data(cfg.grid, &cfg.initial_data_spec())?;

    println!("{:>7} {:>12} {:>14}", "t", "|u2, b2|", "<t> |u2, b2|");
    let mut state: MhdState = init;
    for t_end in [1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
        cfg.t_end = Some(t_end);
        state = run_from_state(&cfg, state)?.final_state;
        let r = damping_ratios(&state, &params, cfg.eps);
        println!("{:>7.1} {:>12.5e} {:>14.5e}", r.t, r.u2_neq_l2.hypot(r.b2_neq_l2), r.inviscid_ratio * cfg.eps);
    }
    Ok(())
}
