//! Binary snapshots.
//!
//! Layout, little-endian: magic `MHDC1`, `nx` and `ny` as `u64`, then `Ly`,
//! `t`, `nu`, `mu`, `beta` as `f64`, then `(re, im)` pairs of `omega` followed
//! by `j` over the retained band (`k` ascending, then `n` ascending).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, DEFAULT_DEALIAS};
use crate::params::Params;
use crate::solver::MhdState;

pub const MAGIC: &[u8; 5] = b"MHDC1";
const HEADER_LEN: usize = 5 + 2 * 8 + 5 * 8;

/// A decoded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: MhdState,
    pub nu: f64,
    pub mu: f64,
    pub beta: f64,
}

pub fn write_snapshot_to<W: Write>(mut out: W, state: &MhdState, params: &Params) -> Result<()> {
    let g = state.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 32 * g.retained_count());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.nx as u64).to_le_bytes());
    buf.extend_from_slice(&(g.ny as u64).to_le_bytes());
    for v in [g.ly, state.time, params.nu, params.mu, params.beta] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for field in [&state.omega, &state.j] {
        for (k, n) in g.retained() {
            let c = field.get(k, n);
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out.write_all(&buf).map_err(|e| Error::io("<snapshot>", e))
}

pub fn write_snapshot(path: &Path, state: &MhdState, params: &Params) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot_to(std::io::BufWriter::new(f), state, params)
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

/// Decodes a snapshot written with the given dealias fraction.
pub fn read_snapshot_from<R: Read>(mut input: R, dealias_fraction: f64) -> Result<Snapshot> {
    let mut b = Vec::new();
    input.read_to_end(&mut b).map_err(|e| Error::io("<snapshot>", e))?;
    if b.len() < HEADER_LEN || &b[..5] != MAGIC {
        return Err(Error::Snapshot("missing MHDC1 header".into()));
    }
    let nx = u64::from_le_bytes(b[5..13].try_into().expect("8 bytes"));
    let ny = u64::from_le_bytes(b[13..21].try_into().expect("8 bytes"));
    let (nx, ny) = (
        usize::try_from(nx).map_err(|_| Error::Snapshot(format!("nx {nx} too large")))?,
        usize::try_from(ny).map_err(|_| Error::Snapshot(format!("ny {ny} too large")))?,
    );
    let ly = f64_at(&b, 21);
    let grid = Grid::new(nx, ny, ly, dealias_fraction).map_err(|e| Error::Snapshot(e.to_string()))?;
    let want = HEADER_LEN + 32 * grid.retained_count();
    if b.len() != want {
        return Err(Error::Snapshot(format!(
            "expected {want} bytes for a {nx} x {ny} grid, found {}",
            b.len()
        )));
    }
    let mut state = MhdState::zeros(grid, f64_at(&b, 29));
    let mut off = HEADER_LEN;
    for field in [&mut state.omega, &mut state.j] {
        for (k, n) in grid.retained() {
            field.set(k, n, Complex64::new(f64_at(&b, off), f64_at(&b, off + 8)))?;
            off += 16;
        }
    }
    Ok(Snapshot {
        state,
        nu: f64_at(&b, 37),
        mu: f64_at(&b, 45),
        beta: f64_at(&b, 53),
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    read_snapshot_with(path, DEFAULT_DEALIAS)
}

pub fn read_snapshot_with(path: &Path, dealias_fraction: f64) -> Result<Snapshot> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot_from(std::io::BufReader::new(f), dealias_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{make_initial_data, InitialDataSpec};

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::square(16).unwrap();
        let p = Params::new(1e-3, 2e-3, 1.5);
        let mut st = make_initial_data(
            g,
            &InitialDataSpec {
                seed: 4,
                k_band: 3,
                eta_band: 1.0,
                norm_eps: 1e-2,
                include_zero_modes: true,
                slope: 0.0,
                params: p,
            },
        )
        .unwrap();
        st.time = 3.25;
        let mut bytes = Vec::new();
        write_snapshot_to(&mut bytes, &st, &p).unwrap();
        assert_eq!(&bytes[..5], b"MHDC1");
        assert_eq!(bytes.len(), HEADER_LEN + 32 * g.retained_count());
        let back = read_snapshot_from(&bytes[..], DEFAULT_DEALIAS).unwrap();
        assert_eq!(back.state, st);
        assert_eq!((back.nu, back.mu, back.beta), (1e-3, 2e-3, 1.5));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_snapshot_from(&b"MHDC2"[..], DEFAULT_DEALIAS).is_err());
        let g = Grid::square(8).unwrap();
        let mut bytes = Vec::new();
        write_snapshot_to(&mut bytes, &MhdState::zeros(g, 0.0), &Params::new(1e-3, 1e-3, 1.0)).unwrap();
        bytes.pop();
        assert!(matches!(read_snapshot_from(&bytes[..], DEFAULT_DEALIAS), Err(Error::Snapshot(_))));
    }
}
