//! Full nonlinear run from small random data, writing the energy ledger,
//! snapshots, verdict and manifest to a directory.
//!
//! cargo run --release --example nonlinear_run -- [out_dir]

use mhd_couette::config::RunConfig;
use mhd_couette::grid::Grid;
use mhd_couette::harness::run_simulation;
use mhd_couette::snapshot::read_snapshot;
use mhd_couette::Params;

fn main() -> mhd_couette::Result<()> {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "nonlinear_run_out".into());
    let mut cfg = RunConfig::new(Params::new(1e-3, 1e-3, 1.0));
    cfg.grid = Grid::square(64)?;
    cfg.eps = 1e-4;
    cfg.t_end = Some(50.0);
    cfg.snapshot_times = vec![0.0, 25.0, 50.0];
    cfg.out_dir = Some(out_dir.into());
    cfg.run_id = "demo".into();

    let out = run_simulation(&cfg)?;
    println!("{:>8} {:>12} {:>12} {:>12}  flags", "t", "E_sym", "E_HO", "E_0");
    for row in out.ledger.rows.iter().step_by(20) {
        println!("{:>8.2} {:>12.5e} {:>12.5e} {:>12.5e}  {}", row.t, row.e_sym, row.e_ho, row.e_0, row.bootstrap_flags);
    }
    println!("\nverdict: {} after {} steps ({:.1}s)", out.verdict, out.steps, out.wall_time_s);
    println!("coercivity band held at every row: {}", out.coercivity_holds());
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    if let Some(snap) = out.files.iter().find(|p| p.extension().is_some_and(|e| e == "mhdc")) {
        let s = read_snapshot(snap)?;
        println!("re-read {} at t = {}", snap.display(), s.state.time);
    }
    Ok(())
}
