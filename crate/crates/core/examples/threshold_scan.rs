//! Bisects the largest stable initial size at two viscosities on a 64^2 grid.
//!
//! cargo run --release --example threshold_scan

use mhd_couette::config::RunConfig;
use mhd_couette::grid::Grid;
use mhd_couette::scan::threshold_scan;
use mhd_couette::Params;

fn main() -> mhd_couette::Result<()> {
    let mut cfg = RunConfig::new(Params::new(1e-2, 1e-2, 1.0));
    cfg.grid = Grid::square(64)?;
    let res = threshold_scan(&[1e-2, 3e-3], &cfg, 1e-4, 1e4)?;
    for ((nu, eps), note) in res.axis.iter().zip(&res.responses).zip(&res.notes) {
        println!("nu = {nu:.0e}  eps* = {eps:.4e}  {note}");
    }
    Ok(())
}
