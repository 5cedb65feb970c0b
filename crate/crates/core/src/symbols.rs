//! Fourier symbols of the moving-frame operators.

use crate::error::{Error, Result};
use crate::params::Frequency;

/// Japanese bracket `<a> = sqrt(1 + a^2)`.
#[inline]
pub fn jap(a: f64) -> f64 {
    a.hypot(1.0)
}

/// `<|k, eta|>` with `|a, b| = |a| + |b|`.
#[inline]
pub fn jap_pair(k: f64, eta: f64) -> f64 {
    jap(k.abs() + eta.abs())
}

/// Symbol of `-Delta_L`: `k^2 + (eta - k t)^2`.
#[inline]
pub fn p_symbol(f: Frequency, t: f64) -> f64 {
    let k = f.kf();
    let shifted = f.eta - k * t;
    k * k + shifted * shifted
}

/// `d/dt p = -2k(eta - k t)`.
#[inline]
pub fn dt_p_symbol(f: Frequency, t: f64) -> f64 {
    let k = f.kf();
    -2.0 * k * (f.eta - k * t)
}

/// `d^2/dt^2 p = 2k^2`.
#[inline]
pub fn dtt_p_symbol(f: Frequency) -> f64 {
    let k = f.kf();
    2.0 * k * k
}

/// `(d/dt p)/p`, taken as zero where `p` vanishes (the mean mode).
#[inline]
pub fn log_dt_p(f: Frequency, t: f64) -> f64 {
    let p = p_symbol(f, t);
    if p == 0.0 {
        0.0
    } else {
        dt_p_symbol(f, t) / p
    }
}

/// `sqrt(k^2/p)`, the filter taking `(Omega, J)` to `(Z, Q)`. Zero for `k = 0`.
#[inline]
pub fn sym_factor(f: Frequency, t: f64) -> f64 {
    if f.k == 0 {
        return 0.0;
    }
    let u = f.eta / f.kf() - t;
    1.0 / jap(u)
}

/// `int_a^b p_k(s, eta) ds`, written so that `k = 0` and short intervals
/// need no special casing.
#[inline]
pub fn p_integral(f: Frequency, a: f64, b: f64) -> f64 {
    let k = f.kf();
    let sa = f.eta - k * a;
    let sb = f.eta - k * b;
    (b - a) * (k * k + (sa * sa + sa * sb + sb * sb) / 3.0)
}

/// Resonant interval membership `|t - eta/k| <= |eta|/(2k^2)`.
pub fn resonant_interval(f: Frequency, t: f64) -> Result<bool> {
    if f.k == 0 {
        return Err(Error::InvalidArgument(
            "resonant interval undefined for k = 0".into(),
        ));
    }
    let k = f.kf();
    Ok((t - f.eta / k).abs() <= f.eta.abs() / (2.0 * k * k))
}
