//! Embedded Dormand–Prince 5(4) stepping for small fixed-size real systems.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// b - b*, the difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// One Dormand–Prince step from `(t, y)` with size `h`.
///
/// Returns the 5th order solution and the local error estimate.
pub fn dopri5_step<const D: usize, F>(f: &mut F, t: f64, y: &[f64; D], h: f64) -> ([f64; D], [f64; D])
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let k1 = f(t, y);
    let k2 = f(t + C2 * h, &comb(y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &comb(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &comb(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &comb(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &comb(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y5 = comb(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y5);
    let mut err = [0.0; D];
    for i in 0..D {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err)
}

/// Step-size bookkeeping shared by the adaptive drivers.
#[derive(Debug, Clone)]
pub struct StepController {
    pub h: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl StepController {
    pub fn new(h0: f64, max_step: f64, min_step: f64) -> Self {
        StepController {
            h: h0.min(max_step),
            max_step,
            min_step,
        }
    }

    /// Given the scaled error norm of the last attempt (accept iff `<= 1`),
    /// updates `h` and reports acceptance.
    pub fn update(&mut self, err_norm: f64, t: f64) -> Result<bool> {
        let accept = err_norm <= 1.0;
        let factor = if err_norm == 0.0 {
            5.0
        } else if err_norm.is_finite() {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.1
        };
        self.h = (self.h * factor).min(self.max_step);
        if !accept && self.h < self.min_step {
            return Err(Error::StepFailure { time: t, step: self.h });
        }
        Ok(accept)
    }
}

/// Mixed absolute/relative RMS error norm.
pub fn error_norm<const D: usize>(err: &[f64; D], y0: &[f64; D], y1: &[f64; D], rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        s += r * r;
    }
    (s / D as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_step: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rtol: 1e-10,
            atol: 1e-14,
            h0: 1e-3,
            max_step: f64::INFINITY,
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observe` at the
/// start and after every accepted step.
pub fn integrate<const D: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: AdaptiveOptions,
    mut observe: O,
) -> Result<[f64; D]>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D]),
{
    if !(t_end >= t0) {
        return Err(Error::InvalidArgument(format!("t_end {t_end} < t0 {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    observe(t, &y);
    let min_step = 1e-14 * (t_end - t0).abs().max(1.0);
    let mut ctl = StepController::new(opts.h0, opts.max_step, min_step);
    while t < t_end {
        let h = ctl.h.min(t_end - t);
        let (y1, err) = dopri5_step(&mut f, t, &y, h);
        let en = error_norm(&err, &y, &y1, opts.rtol, opts.atol);
        if ctl.update(en, t)? {
            t = if h == t_end - t { t_end } else { t + h };
            y = y1;
            observe(t, &y);
        }
    }
    Ok(y)
}
