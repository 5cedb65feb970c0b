//! Pseudo-spectral integrator for the moving-frame vorticity/current system
//!
//! `d/dt Omega - beta d_X J - nu Delta_L Omega = NL_Omega`,
//! `d/dt J - beta d_X Omega - mu Delta_L J + 2 d_X (d_Y - t d_X) Phi = NL_J`,
//! `Delta_L Psi = Omega`, `Delta_L Phi = J`.
//!
//! Diffusion is removed exactly with an integrating factor built from
//! `int p`; everything else is advanced with classical RK4 (Lawson form).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{mode_table, Fft2, Grid, ModeEntry, SpectralField};
use crate::params::Params;
use crate::symbols::{jap_pair, p_integral};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Vorticity and current density in the moving frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MhdState {
    pub omega: SpectralField,
    pub j: SpectralField,
    pub time: f64,
}

impl MhdState {
    pub fn zeros(grid: Grid, time: f64) -> Self {
        MhdState {
            omega: SpectralField::zeros(grid),
            j: SpectralField::zeros(grid),
            time,
        }
    }

    pub fn grid(&self) -> Grid {
        self.omega.grid
    }

    /// `||(Omega, J)||_{H^N}`.
    pub fn hn_norm(&self, n: u32) -> f64 {
        (self.omega.hs_norm_sqr(n) + self.j.hs_norm_sqr(n)).sqrt()
    }
}

/// `Delta_L^{-1}`: divides by `-p_k(t, eta)`. The mean must vanish.
pub fn invert_delta_l(field: &SpectralField, t: f64) -> Result<SpectralField> {
    if field.get(0, 0) != ZERO {
        return Err(Error::InvalidArgument(
            "Delta_L is not invertible on a field with nonzero mean".into(),
        ));
    }
    Ok(field.map_modes(|m, c| {
        let p = p_of(m, t);
        if p == 0.0 {
            ZERO
        } else {
            -c / p
        }
    }))
}

#[inline]
fn p_of(m: &ModeEntry, t: f64) -> f64 {
    let s = m.eta - m.kf * t;
    m.kf * m.kf + s * s
}

/// `(U^1, U^2) = (-(d_Y - t d_X) Psi, d_X Psi)`.
pub fn velocity_from_streamfunction(psi: &SpectralField, t: f64) -> (SpectralField, SpectralField) {
    let u1 = psi.map_modes(|m, c| -I * (m.eta - m.kf * t) * c);
    let u2 = psi.map_modes(|m, c| I * m.kf * c);
    (u1, u2)
}

/// Spectral derivative `d_X`.
pub fn d_x(f: &SpectralField) -> SpectralField {
    f.map_modes(|m, c| I * m.kf * c)
}

/// Spectral derivative `d_Y`.
pub fn d_y(f: &SpectralField) -> SpectralField {
    f.map_modes(|m, c| I * m.eta * c)
}

/// Moving-frame vertical derivative `d_Y - t d_X`.
pub fn d_y_moving(f: &SpectralField, t: f64) -> SpectralField {
    f.map_modes(|m, c| I * (m.eta - m.kf * t) * c)
}

/// Dealiased pseudo-spectral product of two real fields.
pub fn product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let g = a.grid;
    let mut fft = Fft2::new(g.nx, g.ny);
    let mut buf: Vec<Complex64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + I * y).collect();
    fft.inverse(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.re * v.im, 0.0);
    }
    fft.forward(&mut buf);
    let scale = 1.0 / (g.nx * g.ny) as f64;
    let mut out = SpectralField::zeros(g);
    let dst = out.as_slice_mut();
    for m in mode_table(&g) {
        dst[m.idx] = (buf[m.idx] + buf[m.mirror].conj()) * (0.5 * scale);
    }
    out
}

fn add(a: &SpectralField, b: &SpectralField, sb: f64) -> SpectralField {
    let mut out = a.clone();
    for (o, v) in out.as_slice_mut().iter_mut().zip(b.as_slice()) {
        *o += v * sb;
    }
    out
}

/// `grad^perp F . grad G = -d_Y F d_X G + d_X F d_Y G` with plain derivatives.
pub fn poisson_bracket(f: &SpectralField, g: &SpectralField) -> SpectralField {
    add(&product(&d_x(f), &d_y(g)), &product(&d_y(f), &d_x(g)), -1.0)
}

/// `grad_L^perp F . grad_L G` with `grad_L = (d_X, d_Y - t d_X)`.
pub fn poisson_bracket_moving(f: &SpectralField, g: &SpectralField, t: f64) -> SpectralField {
    add(
        &product(&d_x(f), &d_y_moving(g, t)),
        &product(&d_y_moving(f, t), &d_x(g)),
        -1.0,
    )
}

/// Nonlinear terms `(NL_Omega, NL_J)` of a state (transport plus stretching).
pub fn nonlinear_terms(state: &MhdState, params: &Params) -> (SpectralField, SpectralField) {
    let mut solver = Solver::new(state.grid(), *params);
    solver.nonlinear_only(state)
}

/// Per-mode integrating factors for one step.
#[derive(Clone, Copy, Default)]
struct Factors {
    half_nu: f64,
    rest_nu: f64,
    full_nu: f64,
    half_mu: f64,
    rest_mu: f64,
    full_mu: f64,
}

/// Owns FFT plans and scratch buffers for repeated right-hand-side evaluations.
pub struct Solver {
    grid: Grid,
    params: Params,
    modes: Vec<ModeEntry>,
    fft: Fft2,
    bufs: Vec<Vec<Complex64>>,
    nonlinear: bool,
    /// Blowup ceiling on `||(Omega, J)||_{H^N}`.
    pub ceiling: Option<f64>,
    hn_weight: Vec<f64>,
    last_speed: f64,
}

impl Solver {
    pub fn new(grid: Grid, params: Params) -> Self {
        let modes = mode_table(&grid);
        let hn_weight = modes
            .iter()
            .map(|m| jap_pair(m.kf, m.eta).powi(2 * params.n as i32))
            .collect();
        Solver {
            grid,
            params,
            fft: Fft2::new(grid.nx, grid.ny),
            bufs: vec![vec![ZERO; grid.nx * grid.ny]; 6],
            modes,
            nonlinear: true,
            ceiling: None,
            hn_weight,
            last_speed: 0.0,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Drops the quadratic terms, leaving the linearised system.
    pub fn set_nonlinear(&mut self, on: bool) {
        self.nonlinear = on;
    }

    /// `max(|d_Y Psi|/dX + |d_X Psi|/dY, same for Phi)` from the last
    /// right-hand-side evaluation; `0.5 / speed` is the advective step limit.
    pub fn last_speed(&self) -> f64 {
        self.last_speed
    }

    /// Computes the quadratic terms into `(no, nj)` (retained modes only).
    fn quadratic(&mut self, t: f64, om: &[Complex64], jj: &[Complex64], no: &mut [Complex64], nj: &mut [Complex64]) {
        let g = self.grid;
        for b in self.bufs.iter_mut() {
            for v in b.iter_mut() {
                *v = ZERO;
            }
        }
        // packed pairs: (dY Psi, dX Omega), (dX Psi, dY Omega), (dY Phi, dX J),
        // (dX Phi, dY J), (A, B), (C, D) with
        // A = 2 dX(dY - t dX) Phi, B = Omega - 2 dXX Psi,
        // C = 2 dX(dY - t dX) Psi, D = J - 2 dXX Phi
        for m in &self.modes {
            let p = p_of(m, t);
            if p == 0.0 {
                continue;
            }
            let (o, j) = (om[m.idx], jj[m.idx]);
            let psi = -o / p;
            let phi = -j / p;
            let ik = I * m.kf;
            let ie = I * m.eta;
            let mixed = -2.0 * m.kf * (m.eta - m.kf * t);
            let two_k2 = 2.0 * m.kf * m.kf;
            let i = m.idx;
            self.bufs[0][i] = ie * psi + I * (ik * o);
            self.bufs[1][i] = ik * psi + I * (ie * o);
            self.bufs[2][i] = ie * phi + I * (ik * j);
            self.bufs[3][i] = ik * phi + I * (ie * j);
            self.bufs[4][i] = mixed * phi + I * (o + two_k2 * psi);
            self.bufs[5][i] = mixed * psi + I * (j + two_k2 * phi);
        }
        for b in self.bufs.iter_mut() {
            self.fft.inverse(b);
        }
        let (dx, dy) = (g.dx(), g.dy());
        let mut speed: f64 = 0.0;
        let n = g.nx * g.ny;
        for q in 0..n {
            let (a1, a2) = (self.bufs[0][q].re, self.bufs[0][q].im);
            let (a3, a4) = (self.bufs[1][q].re, self.bufs[1][q].im);
            let (a5, a6) = (self.bufs[2][q].re, self.bufs[2][q].im);
            let (a7, a8) = (self.bufs[3][q].re, self.bufs[3][q].im);
            let (sa, sb) = (self.bufs[4][q].re, self.bufs[4][q].im);
            let (sc, sd) = (self.bufs[5][q].re, self.bufs[5][q].im);
            speed = speed.max(a1.abs() / dx + a3.abs() / dy).max(a5.abs() / dx + a7.abs() / dy);
            let nlo = a1 * a2 - a3 * a4 - a5 * a6 + a7 * a8;
            let nlj = a1 * a6 - a3 * a8 - a5 * a2 + a7 * a4 + sa * sb - sc * sd;
            self.bufs[0][q] = Complex64::new(nlo, nlj);
        }
        self.last_speed = speed;
        let (first, _) = self.bufs.split_at_mut(1);
        self.fft.forward(&mut first[0]);
        let w = &self.bufs[0];
        let scale = 1.0 / n as f64;
        for m in &self.modes {
            let a = w[m.idx];
            let b = w[m.mirror].conj();
            no[m.idx] = (a + b) * (0.5 * scale);
            nj[m.idx] = (a - b) * (Complex64::new(0.0, -0.5) * scale);
        }
    }

    /// Everything except diffusion: coupling, linear stretching and the quadratic terms.
    fn explicit_rhs(&mut self, t: f64, om: &[Complex64], jj: &[Complex64], no: &mut [Complex64], nj: &mut [Complex64]) {
        if self.nonlinear {
            self.quadratic(t, om, jj, no, nj);
        } else {
            for m in &self.modes {
                no[m.idx] = ZERO;
                nj[m.idx] = ZERO;
            }
            self.last_speed = 0.0;
        }
        let beta = self.params.beta;
        for m in &self.modes {
            let p = p_of(m, t);
            let c = I * (beta * m.kf);
            let (o, j) = (om[m.idx], jj[m.idx]);
            let stretch = if p == 0.0 {
                0.0
            } else {
                -2.0 * m.kf * (m.eta - m.kf * t) / p
            };
            no[m.idx] += c * j;
            nj[m.idx] += stretch * j + c * o;
        }
    }

    /// `(NL_Omega, NL_J)` of a state, without the linear terms.
    pub fn nonlinear_only(&mut self, state: &MhdState) -> (SpectralField, SpectralField) {
        let mut no = SpectralField::zeros(self.grid);
        let mut nj = SpectralField::zeros(self.grid);
        self.quadratic(
            state.time,
            state.omega.as_slice(),
            state.j.as_slice(),
            no.as_slice_mut(),
            nj.as_slice_mut(),
        );
        (no, nj)
    }

    /// One Lawson RK4 step of size `dt`.
    pub fn step(&mut self, state: &MhdState, dt: f64) -> Result<MhdState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
        }
        let t = state.time;
        let (nu, mu) = (self.params.nu, self.params.mu);
        let h = dt;
        let th = t + 0.5 * h;
        let tf = t + h;
        let factors: Vec<Factors> = self
            .modes
            .iter()
            .map(|m| {
                let f = m.frequency();
                let a = p_integral(f, t, th);
                let b = p_integral(f, th, tf);
                Factors {
                    half_nu: (-nu * a).exp(),
                    rest_nu: (-nu * b).exp(),
                    full_nu: (-nu * (a + b)).exp(),
                    half_mu: (-mu * a).exp(),
                    rest_mu: (-mu * b).exp(),
                    full_mu: (-mu * (a + b)).exp(),
                }
            })
            .collect();

        let len = self.grid.nx * self.grid.ny;
        let o0 = state.omega.as_slice();
        let j0 = state.j.as_slice();
        let mut k1 = (vec![ZERO; len], vec![ZERO; len]);
        let mut k2 = (vec![ZERO; len], vec![ZERO; len]);
        let mut k3 = (vec![ZERO; len], vec![ZERO; len]);
        let mut k4 = (vec![ZERO; len], vec![ZERO; len]);
        let mut u = (vec![ZERO; len], vec![ZERO; len]);

        self.explicit_rhs(t, o0, j0, &mut k1.0, &mut k1.1);
        let speed = self.last_speed;
        for (m, f) in self.modes.iter().zip(&factors) {
            let i = m.idx;
            u.0[i] = (o0[i] + k1.0[i] * (0.5 * h)) * f.half_nu;
            u.1[i] = (j0[i] + k1.1[i] * (0.5 * h)) * f.half_mu;
        }
        self.explicit_rhs(th, &u.0, &u.1, &mut k2.0, &mut k2.1);
        for (m, f) in self.modes.iter().zip(&factors) {
            let i = m.idx;
            u.0[i] = o0[i] * f.half_nu + k2.0[i] * (0.5 * h);
            u.1[i] = j0[i] * f.half_mu + k2.1[i] * (0.5 * h);
        }
        self.explicit_rhs(th, &u.0, &u.1, &mut k3.0, &mut k3.1);
        for (m, f) in self.modes.iter().zip(&factors) {
            let i = m.idx;
            u.0[i] = o0[i] * f.full_nu + k3.0[i] * (h * f.rest_nu);
            u.1[i] = j0[i] * f.full_mu + k3.1[i] * (h * f.rest_mu);
        }
        self.explicit_rhs(tf, &u.0, &u.1, &mut k4.0, &mut k4.1);

        let mut next = MhdState::zeros(self.grid, tf);
        {
            let on = next.omega.as_slice_mut();
            for (m, f) in self.modes.iter().zip(&factors) {
                let i = m.idx;
                on[i] = o0[i] * f.full_nu
                    + (k1.0[i] * f.full_nu + (k2.0[i] + k3.0[i]) * (2.0 * f.rest_nu) + k4.0[i]) * (h / 6.0);
            }
        }
        {
            let jn = next.j.as_slice_mut();
            for (m, f) in self.modes.iter().zip(&factors) {
                let i = m.idx;
                jn[i] = j0[i] * f.full_mu
                    + (k1.1[i] * f.full_mu + (k2.1[i] + k3.1[i]) * (2.0 * f.rest_mu) + k4.1[i]) * (h / 6.0);
            }
        }
        // the mean is conserved analytically; pin it against round-off
        let r0 = self.grid.row(0) * self.grid.ny + self.grid.col(0);
        next.omega.as_slice_mut()[r0] = ZERO;
        next.j.as_slice_mut()[r0] = ZERO;
        self.last_speed = speed;

        if let Some(ceiling) = self.ceiling {
            let norm = self.hn_norm(&next);
            if !(norm <= ceiling) {
                return Err(Error::BlowupDetected {
                    time: tf,
                    norm,
                    ceiling,
                });
            }
        }
        Ok(next)
    }

    /// `||(Omega, J)||_{H^N}` using the cached weights.
    pub fn hn_norm(&self, state: &MhdState) -> f64 {
        let (o, j) = (state.omega.as_slice(), state.j.as_slice());
        let s: f64 = self
            .modes
            .iter()
            .zip(&self.hn_weight)
            .map(|(m, w)| w * (o[m.idx].norm_sqr() + j[m.idx].norm_sqr()))
            .sum();
        (s * self.grid.mode_measure()).sqrt()
    }

    /// Step limit: advective CFL from the last evaluation, a cap tied to the
    /// enhanced-dissipation time scale, and a cap keeping the coupling
    /// oscillation `beta k` inside the RK4 stability region.
    pub fn stable_dt(&self, dt_max: f64) -> f64 {
        let mut dt = dt_max;
        if self.last_speed > 0.0 {
            dt = dt.min(0.5 / self.last_speed);
        }
        if self.params.nu > 0.0 {
            dt = dt.min(self.params.nu.cbrt().recip() / 200.0);
        }
        let bk = self.params.beta.abs() * self.grid.k_max() as f64;
        if bk > 0.0 {
            dt = dt.min(2.0 / bk);
        }
        dt
    }

    /// Evaluates the explicit right-hand side once so that `stable_dt` has a speed.
    pub fn prime(&mut self, state: &MhdState) {
        let len = self.grid.nx * self.grid.ny;
        let mut a = vec![ZERO; len];
        let mut b = vec![ZERO; len];
        self.explicit_rhs(state.time, state.omega.as_slice(), state.j.as_slice(), &mut a, &mut b);
    }
}

/// Random initial data with prescribed `H^N` size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub seed: u64,
    /// Modes with `|k| <= k_band` are excited.
    pub k_band: i64,
    /// Modes with `|eta| <= eta_band` are excited.
    pub eta_band: f64,
    pub norm_eps: f64,
    /// Whether `k = 0` modes are excited.
    pub include_zero_modes: bool,
    /// Spectral slope: amplitudes scale like `<|k,eta|>^(-slope)`.
    pub slope: f64,
    pub params: Params,
}

/// Random phases on the band, Hermitian-symmetrised and scaled so that
/// `||(omega, j)||_{H^N} = norm_eps`.
pub fn make_initial_data(grid: Grid, spec: &InitialDataSpec) -> Result<MhdState> {
    if !(spec.norm_eps >= 0.0 && spec.norm_eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("norm_eps must be nonnegative, got {}", spec.norm_eps)));
    }
    let mut state = MhdState::zeros(grid, 0.0);
    if spec.norm_eps == 0.0 {
        return Ok(state);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for (k, n) in grid.retained() {
        // one representative per conjugate pair
        if k < 0 || (k == 0 && n <= 0) {
            continue;
        }
        let eta = grid.eta(n);
        if k > spec.k_band || eta.abs() > spec.eta_band || (k == 0 && !spec.include_zero_modes) {
            continue;
        }
        let amp = jap_pair(k as f64, eta).powf(-spec.slope);
        let a = Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU));
        let b = Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU));
        state.omega.set_real_mode(k, n, a)?;
        state.j.set_real_mode(k, n, b)?;
    }
    let norm = state.hn_norm(spec.params.n);
    if norm == 0.0 {
        return Err(Error::InvalidArgument("initial-data band contains no retained modes".into()));
    }
    let s = spec.norm_eps / norm;
    for f in [&mut state.omega, &mut state.j] {
        for v in f.as_slice_mut() {
            *v *= s;
        }
    }
    Ok(state)
}

/// `k = 0` slices and the reconstructed mean-flow components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroModes {
    pub n: Vec<i64>,
    pub eta: Vec<f64>,
    pub omega0: Vec<Complex64>,
    pub j0: Vec<Complex64>,
    /// `U_0^1 = i Omega_0 / eta`, zero at `eta = 0`.
    pub u01: Vec<Complex64>,
    /// `B_0^1 = i J_0 / eta`, zero at `eta = 0`.
    pub b01: Vec<Complex64>,
}

pub fn extract_zero_modes(state: &MhdState) -> ZeroModes {
    let g = state.grid();
    let nm = g.n_max();
    let n: Vec<i64> = (-nm..=nm).collect();
    let eta: Vec<f64> = n.iter().map(|&n| g.eta(n)).collect();
    let omega0: Vec<Complex64> = n.iter().map(|&n| state.omega.get(0, n)).collect();
    let j0: Vec<Complex64> = n.iter().map(|&n| state.j.get(0, n)).collect();
    let lift = |c: &Vec<Complex64>| -> Vec<Complex64> {
        c.iter()
            .zip(&eta)
            .map(|(v, &e)| if e == 0.0 { ZERO } else { I * v / e })
            .collect()
    };
    ZeroModes {
        u01: lift(&omega0),
        b01: lift(&j0),
        n,
        eta,
        omega0,
        j0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{to_physical, DEFAULT_DEALIAS};
    use crate::params::Frequency;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16, 16, 4.0 * PI, DEFAULT_DEALIAS).unwrap()
    }

    fn random_field(g: Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(g);
        for (k, n) in g.retained() {
            if k < 0 || (k == 0 && n <= 0) {
                continue;
            }
            let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            f.set_real_mode(k, n, v).unwrap();
        }
        f
    }

    #[test]
    fn invert_examples() {
        let g = grid();
        let mut f = SpectralField::zeros(g);
        f.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(invert_delta_l(&f, 0.0).unwrap().get(1, 0), Complex64::new(-1.0, 0.0));
        // eta_2 = 1 on this grid; p = 1 at t = 1
        let mut f = SpectralField::zeros(g);
        f.set(1, 2, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(invert_delta_l(&f, 1.0).unwrap().get(1, 2), Complex64::new(-1.0, 0.0));
        let mut bad = SpectralField::zeros(g);
        bad.set(0, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!(invert_delta_l(&bad, 0.0).is_err());
    }

    #[test]
    fn inverse_property() {
        let g = grid();
        let f = random_field(g, 3);
        let t = 1.7;
        let inv = invert_delta_l(&f, t).unwrap();
        for m in mode_table(&g) {
            let back = -inv.as_slice()[m.idx] * p_of(&m, t);
            assert!((back - f.as_slice()[m.idx]).norm() < 1e-14);
        }
    }

    #[test]
    fn velocity_is_divergence_free() {
        let g = grid();
        let psi = random_field(g, 5);
        let t = 2.3;
        let (u1, u2) = velocity_from_streamfunction(&psi, t);
        let div = add(&d_x(&u1), &d_y_moving(&u2, t), 1.0);
        assert!(div.as_slice().iter().all(|c| c.norm() < 1e-12));
        let mut single = SpectralField::zeros(g);
        single.set(1, 0, Complex64::new(2.0, 0.0)).unwrap();
        let (a, b) = velocity_from_streamfunction(&single, 0.0);
        assert_eq!(a.get(1, 0), ZERO);
        assert_eq!(b.get(1, 0), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn single_mode_has_no_self_interaction() {
        let g = grid();
        let mut st = MhdState::zeros(g, 0.3);
        st.omega.set_real_mode(2, 1, Complex64::new(0.4, -0.1)).unwrap();
        let (no, nj) = nonlinear_terms(&st, &Params::new(1e-3, 1e-3, 1.0));
        assert!(no.as_slice().iter().all(|c| c.norm() < 1e-15));
        assert!(nj.as_slice().iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn bracket_of_sines() {
        // Psi = sin X, G = sin Y: grad^perp Psi . grad G = cos X cos Y
        let g = Grid::new(16, 16, 2.0 * PI, DEFAULT_DEALIAS).unwrap();
        let mut psi = SpectralField::zeros(g);
        psi.set_real_mode(1, 0, Complex64::new(0.0, -0.5)).unwrap();
        let mut gg = SpectralField::zeros(g);
        gg.set_real_mode(0, 1, Complex64::new(0.0, -0.5)).unwrap();
        let b = poisson_bracket(&psi, &gg);
        for (k, n) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            assert!((b.get(k, n) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
        let bm = poisson_bracket_moving(&psi, &gg, 3.0);
        for (x, y) in b.as_slice().iter().zip(bm.as_slice()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn products_match_pointwise_multiplication() {
        let g = Grid::new(24, 24, 2.0 * PI, DEFAULT_DEALIAS).unwrap();
        // band-limited to a third so the product is exactly representable
        let mut a = SpectralField::zeros(g);
        let mut b = SpectralField::zeros(g);
        a.set_real_mode(2, 1, Complex64::new(0.3, 0.2)).unwrap();
        b.set_real_mode(1, -3, Complex64::new(-0.1, 0.5)).unwrap();
        let prod = product(&a, &b);
        let pa = to_physical(&a);
        let pb = to_physical(&b);
        let direct = crate::grid::from_physical(g, &(pa.mapv(|c| c.re) * pb.mapv(|c| c.re)));
        for (x, y) in prod.as_slice().iter().zip(direct.as_slice()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    /// At `t = 0` the moving and static frames coincide, so the nonlinear
    /// terms must equal the curls of `-u.grad u + b.grad b` and
    /// `b.grad u - u.grad b` computed from the velocity and magnetic field.
    #[test]
    fn nonlinear_terms_match_static_frame_curls() {
        let g = Grid::new(32, 32, 2.0 * PI, DEFAULT_DEALIAS).unwrap();
        let mut st = MhdState::zeros(g, 0.0);
        st.omega = random_field(g, 11);
        st.j = random_field(g, 12);
        for f in [&mut st.omega, &mut st.j] {
            // keep the inputs in the lower third so nested products stay exact
            let keep = f.map_modes(|m, c| if m.k.abs() <= 3 && m.n.abs() <= 3 && (m.k, m.n) != (0, 0) { c } else { ZERO });
            *f = keep;
        }
        let (no, nj) = nonlinear_terms(&st, &Params::new(1e-3, 1e-3, 1.0));

        let psi = invert_delta_l(&st.omega, 0.0).unwrap();
        let phi = invert_delta_l(&st.j, 0.0).unwrap();
        let (u1, u2) = velocity_from_streamfunction(&psi, 0.0);
        let (b1, b2) = velocity_from_streamfunction(&phi, 0.0);
        // (a . grad) c
        let adv = |a1: &SpectralField, a2: &SpectralField, c: &SpectralField| {
            add(&product(a1, &d_x(c)), &product(a2, &d_y(c)), 1.0)
        };
        let curl = |v1: &SpectralField, v2: &SpectralField| add(&d_x(v2), &d_y(v1), -1.0);
        let mom1 = add(&adv(&b1, &b2, &b1), &adv(&u1, &u2, &u1), -1.0);
        let mom2 = add(&adv(&b1, &b2, &b2), &adv(&u1, &u2, &u2), -1.0);
        let ind1 = add(&adv(&b1, &b2, &u1), &adv(&u1, &u2, &b1), -1.0);
        let ind2 = add(&adv(&b1, &b2, &u2), &adv(&u1, &u2, &b2), -1.0);
        let want_o = curl(&mom1, &mom2);
        let want_j = curl(&ind1, &ind2);
        let scale = want_j.as_slice().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (x, y) in no.as_slice().iter().zip(want_o.as_slice()) {
            assert!((x - y).norm() < 1e-12 * scale, "{x} {y}");
        }
        for (x, y) in nj.as_slice().iter().zip(want_j.as_slice()) {
            assert!((x - y).norm() < 1e-12 * scale, "{x} {y}");
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = grid();
        let mut s = Solver::new(g, Params::new(1e-3, 1e-3, 1.0));
        let z = MhdState::zeros(g, 0.0);
        let n = s.step(&z, 0.01).unwrap();
        assert_eq!(n.omega, z.omega);
        assert_eq!(n.j, z.j);
        assert_eq!(n.time, 0.01);
    }

    #[test]
    fn single_mode_follows_linear_mode_solver() {
        let g = grid();
        let p = Params::new(1e-2, 5e-3, 1.3);
        let (w0, j0) = (Complex64::new(0.7, -0.2), Complex64::new(0.1, 0.4));
        let mut st = MhdState::zeros(g, 0.0);
        st.omega.set_real_mode(1, 2, w0).unwrap();
        st.j.set_real_mode(1, 2, j0).unwrap();
        let mut solver = Solver::new(g, p);
        let dt = 0.005;
        for _ in 0..1000 {
            st = solver.step(&st, dt).unwrap();
        }
        let f = Frequency::new(1, g.eta(2));
        let init = crate::linear::ModeState::new(f, 0.0, w0, j0);
        let traj = crate::linear::integrate_mode(init, &p, st.time, 1e-11).unwrap();
        let want = traj.last().state;
        let scale = want.omega_hat.norm() + want.j_hat.norm();
        assert!((st.omega.get(1, 2) - want.omega_hat).norm() < 1e-8 * scale);
        assert!((st.j.get(1, 2) - want.j_hat).norm() < 1e-8 * scale);
        assert_eq!(st.omega.get(-1, -2), st.omega.get(1, 2).conj());
    }

    #[test]
    fn step_keeps_symmetry_and_band() {
        let g = Grid::new(32, 32, 4.0 * PI, DEFAULT_DEALIAS).unwrap();
        let mut st = MhdState::zeros(g, 0.0);
        st.omega = random_field(g, 21);
        st.j = random_field(g, 22);
        for f in [&mut st.omega, &mut st.j] {
            f.set(0, 0, ZERO).unwrap();
        }
        let mut solver = Solver::new(g, Params::new(1e-3, 1e-3, 1.0));
        for _ in 0..5 {
            st = solver.step(&st, 1e-3).unwrap();
        }
        assert!(st.omega.is_hermitian() && st.j.is_hermitian());
        assert!(st.omega.respects_band() && st.j.respects_band());
        assert!(solver.last_speed() > 0.0);
    }

    #[test]
    fn ceiling_raises_blowup() {
        let g = grid();
        let mut st = MhdState::zeros(g, 0.0);
        st.omega.set_real_mode(1, 1, Complex64::new(1.0, 0.0)).unwrap();
        let mut solver = Solver::new(g, Params::new(1e-3, 1e-3, 1.0));
        solver.ceiling = Some(1e-6);
        assert!(matches!(solver.step(&st, 1e-3), Err(Error::BlowupDetected { .. })));
    }

    #[test]
    fn initial_data_contract() {
        let g = grid();
        let p = Params::new(1e-3, 1e-3, 1.0);
        let spec = InitialDataSpec {
            seed: 9,
            k_band: 2,
            eta_band: 2.0,
            norm_eps: 1e-3,
            include_zero_modes: true,
            slope: 0.0,
            params: p,
        };
        let a = make_initial_data(g, &spec).unwrap();
        let b = make_initial_data(g, &spec).unwrap();
        assert_eq!(a, b);
        assert!((a.hn_norm(11) - 1e-3).abs() < 1e-12 * 1e-3);
        assert!(a.omega.is_hermitian() && a.j.is_hermitian());
        assert_eq!(a.omega.get(0, 0), ZERO);
        let zero = make_initial_data(g, &InitialDataSpec { norm_eps: 0.0, ..spec }).unwrap();
        assert_eq!(zero, MhdState::zeros(g, 0.0));
    }

    #[test]
    fn zero_mode_reconstruction() {
        // omega = cos Y -> U_0^1 = -sin Y
        let g = Grid::new(16, 16, 2.0 * PI, DEFAULT_DEALIAS).unwrap();
        let mut st = MhdState::zeros(g, 0.0);
        st.omega.set_real_mode(0, 1, Complex64::new(0.5, 0.0)).unwrap();
        let z = extract_zero_modes(&st);
        let i = z.n.iter().position(|&n| n == 1).unwrap();
        assert_eq!(z.omega0[i], Complex64::new(0.5, 0.0));
        // -sin Y = (i/2) e^{iY} - (i/2) e^{-iY}
        assert!((z.u01[i] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        let empty = extract_zero_modes(&MhdState::zeros(g, 0.0));
        assert!(empty.u01.iter().chain(&empty.omega0).all(|c| *c == ZERO));
    }
}
