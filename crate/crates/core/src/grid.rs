//! Truncated Fourier grid on `[0, 2 pi) x [0, Ly)` and complex spectral fields.
//!
//! Coefficients are stored in FFT order on an `nx x ny` array (row = `k`),
//! normalised so that `f(X, Y) = sum c_{k,n} exp(i(k X + eta_n Y))` with
//! `eta_n = 2 pi n / Ly`. Modes outside the dealiased band are kept at zero.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Frequency;
use crate::symbols::jap_pair;

pub const DEFAULT_LY: f64 = 16.0 * PI;
pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub ly: f64,
    pub dealias_fraction: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, ly: f64, dealias_fraction: f64) -> Result<Self> {
        if nx < 4 || ny < 4 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid sizes must be even and at least 4, got {nx} x {ny}"
            )));
        }
        if !(ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidArgument(format!("Ly must be positive, got {ly}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            ly,
            dealias_fraction,
        })
    }

    /// `n x n` grid with the default period and 2/3 rule.
    pub fn square(n: usize) -> Result<Self> {
        Grid::new(n, n, DEFAULT_LY, DEFAULT_DEALIAS)
    }

    fn band(n: usize, frac: f64) -> i64 {
        // largest integer strictly below n*frac/2, and below the Nyquist index
        let lim = n as f64 * frac / 2.0;
        let mut m = lim.floor() as i64;
        if m as f64 >= lim {
            m -= 1;
        }
        m.min(n as i64 / 2 - 1)
    }

    /// Largest retained `|k|`.
    pub fn k_max(&self) -> i64 {
        Grid::band(self.nx, self.dealias_fraction)
    }

    /// Largest retained `|n|`, with `eta = n * 2 pi / Ly`.
    pub fn n_max(&self) -> i64 {
        Grid::band(self.ny, self.dealias_fraction)
    }

    pub fn eta_step(&self) -> f64 {
        2.0 * PI / self.ly
    }

    pub fn eta(&self, n: i64) -> f64 {
        n as f64 * self.eta_step()
    }

    /// Plancherel weight: `int |f|^2 dX dY = measure * sum |c|^2`.
    pub fn mode_measure(&self) -> f64 {
        2.0 * PI * self.ly
    }

    pub fn is_retained(&self, k: i64, n: i64) -> bool {
        k.abs() <= self.k_max() && n.abs() <= self.n_max()
    }

    pub fn row(&self, k: i64) -> usize {
        k.rem_euclid(self.nx as i64) as usize
    }

    pub fn col(&self, n: i64) -> usize {
        n.rem_euclid(self.ny as i64) as usize
    }

    pub fn wavenumber(&self, row: usize) -> i64 {
        signed(row, self.nx)
    }

    pub fn vertical_index(&self, col: usize) -> i64 {
        signed(col, self.ny)
    }

    /// Retained `(k, n)` pairs, `k` ascending then `n` ascending.
    pub fn retained(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (km, nm) = (self.k_max(), self.n_max());
        (-km..=km).flat_map(move |k| (-nm..=nm).map(move |n| (k, n)))
    }

    pub fn retained_count(&self) -> usize {
        ((2 * self.k_max() + 1) * (2 * self.n_max() + 1)) as usize
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// A retained mode with precomputed flat indices of itself and its mirror `(-k, -n)`.
#[derive(Debug, Clone, Copy)]
pub struct ModeEntry {
    pub idx: usize,
    pub mirror: usize,
    pub k: i64,
    pub n: i64,
    pub kf: f64,
    pub eta: f64,
}

impl ModeEntry {
    pub fn frequency(&self) -> Frequency {
        Frequency::new(self.k, self.eta)
    }
}

pub fn mode_table(grid: &Grid) -> Vec<ModeEntry> {
    grid.retained()
        .map(|(k, n)| ModeEntry {
            idx: grid.row(k) * grid.ny + grid.col(n),
            mirror: grid.row(-k) * grid.ny + grid.col(-n),
            k,
            n,
            kf: k as f64,
            eta: grid.eta(n),
        })
        .collect()
}

/// Complex Fourier coefficients of a scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Array2<Complex64>,
    /// Whether the field represents a real function (Hermitian coefficients).
    pub real: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: Array2::zeros((grid.nx, grid.ny)),
            real: true,
        }
    }

    pub fn get(&self, k: i64, n: i64) -> Complex64 {
        self.coeffs[[self.grid.row(k), self.grid.col(n)]]
    }

    /// Sets one coefficient. Fails outside the retained band.
    pub fn set(&mut self, k: i64, n: i64, v: Complex64) -> Result<()> {
        if !self.grid.is_retained(k, n) {
            return Err(Error::InvalidArgument(format!("mode ({k}, {n}) is outside the retained band")));
        }
        let (r, c) = (self.grid.row(k), self.grid.col(n));
        self.coeffs[[r, c]] = v;
        Ok(())
    }

    /// Sets `(k, n)` to `v` and `(-k, -n)` to `conj(v)`; `v` must be real on the
    /// self-conjugate mode `(0, 0)`.
    pub fn set_real_mode(&mut self, k: i64, n: i64, v: Complex64) -> Result<()> {
        self.set(k, n, v)?;
        self.set(-k, -n, v.conj())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.coeffs.as_slice().expect("standard layout")
    }

    pub fn as_slice_mut(&mut self) -> &mut [Complex64] {
        self.coeffs.as_slice_mut().expect("standard layout")
    }

    /// `true` when `c(-k, -n) == conj(c(k, n))` on every retained mode.
    pub fn is_hermitian(&self) -> bool {
        let s = self.as_slice();
        mode_table(&self.grid).iter().all(|m| s[m.mirror] == s[m.idx].conj())
    }

    /// `true` when every coefficient outside the retained band is exactly zero.
    pub fn respects_band(&self) -> bool {
        let g = self.grid;
        self.coeffs.indexed_iter().all(|((r, c), v)| {
            g.is_retained(g.wavenumber(r), g.vertical_index(c)) || *v == Complex64::new(0.0, 0.0)
        })
    }

    /// `measure * sum |c|^2`.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.grid.mode_measure() * self.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Squared `H^s` norm with weight `<|k, eta|>^s`.
    pub fn hs_norm_sqr(&self, s: u32) -> f64 {
        let g = self.grid;
        let sl = self.as_slice();
        g.mode_measure()
            * mode_table(&g)
                .iter()
                .map(|m| jap_pair(m.kf, m.eta).powi(2 * s as i32) * sl[m.idx].norm_sqr())
                .sum::<f64>()
    }

    pub fn map_modes(&self, f: impl Fn(&ModeEntry, Complex64) -> Complex64) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid);
        out.real = self.real;
        let src = self.as_slice();
        let dst = out.as_slice_mut();
        for m in mode_table(&self.grid) {
            dst[m.idx] = f(&m, src[m.idx]);
        }
        out
    }
}

/// Two-dimensional complex FFT on row-major `nx x ny` buffers.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(nx);
        let fwd_y = planner.plan_fft_forward(ny);
        let inv_x = planner.plan_fft_inverse(nx);
        let inv_y = planner.plan_fft_inverse(ny);
        let len = [&fwd_x, &fwd_y, &inv_x, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft2 {
            nx,
            ny,
            fwd_x,
            fwd_y,
            inv_x,
            inv_y,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            transposed: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    fn run(&mut self, buf: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(buf.len(), nx * ny);
        let (px, py) = if forward {
            (&self.fwd_x, &self.fwd_y)
        } else {
            (&self.inv_x, &self.inv_y)
        };
        py.process_with_scratch(buf, &mut self.scratch);
        for i in 0..nx {
            for j in 0..ny {
                self.transposed[j * nx + i] = buf[i * ny + j];
            }
        }
        px.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for j in 0..ny {
            for i in 0..nx {
                buf[i * ny + j] = self.transposed[j * nx + i];
            }
        }
    }

    /// Unnormalised forward transform, `sum f e^{-i...}`.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    /// Unnormalised inverse transform, `sum c e^{+i...}`: coefficients to values.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }
}

/// Grid values of a field.
pub fn to_physical(field: &SpectralField) -> Array2<Complex64> {
    let mut out = field.coeffs.clone();
    let mut fft = Fft2::new(field.grid.nx, field.grid.ny);
    fft.inverse(out.as_slice_mut().expect("standard layout"));
    out
}

/// Coefficients of real grid values, truncated to the retained band.
pub fn from_physical(grid: Grid, values: &Array2<f64>) -> SpectralField {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fft = Fft2::new(grid.nx, grid.ny);
    fft.forward(&mut buf);
    let scale = 1.0 / (grid.nx * grid.ny) as f64;
    let mut out = SpectralField::zeros(grid);
    let dst = out.as_slice_mut();
    for m in mode_table(&grid) {
        // average the mirror pair so the result is Hermitian to the last bit
        dst[m.idx] = (buf[m.idx] + buf[m.mirror].conj()) * (0.5 * scale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_limits() {
        let g = Grid::square(128).unwrap();
        assert_eq!(g.k_max(), 42);
        let g = Grid::new(96, 32, DEFAULT_LY, DEFAULT_DEALIAS).unwrap();
        assert_eq!((g.k_max(), g.n_max()), (31, 10));
        let g = Grid::new(16, 16, 2.0 * PI, 1.0).unwrap();
        assert_eq!(g.k_max(), 7);
        assert!(Grid::new(15, 16, 1.0, 0.5).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(16, 8, 3.0, DEFAULT_DEALIAS).unwrap();
        for (k, n) in g.retained() {
            assert_eq!(g.wavenumber(g.row(k)), k);
            assert_eq!(g.vertical_index(g.col(n)), n);
        }
    }

    #[test]
    fn single_mode_values() {
        let g = Grid::new(16, 16, 4.0 * PI, DEFAULT_DEALIAS).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set_real_mode(1, 2, Complex64::new(0.5, 0.0)).unwrap();
        let v = to_physical(&f);
        for i in 0..16 {
            for j in 0..16 {
                let x = g.dx() * i as f64;
                let y = g.dy() * j as f64;
                let expect = (x + g.eta(2) * y).cos();
                assert!((v[[i, j]].re - expect).abs() < 1e-14);
                assert!(v[[i, j]].im.abs() < 1e-14);
            }
        }
        let back = from_physical(g, &v.mapv(|c| c.re));
        assert!((back.get(1, 2) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(back.is_hermitian());
    }

    #[test]
    fn plancherel() {
        let g = Grid::new(16, 12, 5.0, DEFAULT_DEALIAS).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set_real_mode(2, -1, Complex64::new(0.3, -0.4)).unwrap();
        f.set_real_mode(0, 3, Complex64::new(0.1, 0.2)).unwrap();
        let v = to_physical(&f);
        let quad: f64 = v.iter().map(|c| c.re * c.re).sum::<f64>() * g.dx() * g.dy();
        assert!((quad - f.l2_norm_sqr()).abs() < 1e-12 * quad);
    }
}
