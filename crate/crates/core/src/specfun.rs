//! Complex special functions: log-gamma, gamma, digamma and Gauss 2F1.
//!
//! Log-gamma and digamma shift the argument upward with the recurrence
//! until `Re z >= 10` and then apply the Stirling / asymptotic series. The
//! shift uses principal logarithms term by term, so the result is the
//! principal branch (cut along the negative real axis, values on the cut
//! taken from above).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const SHIFT_TO: f64 = 10.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// B_{2k} / (2k (2k-1)), k = 1..10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// B_{2k} / (2k), k = 1..10
const DIGAMMA_ASYM: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43_867.0 / 14_364.0,
    -174_611.0 / 6600.0,
];

pub const SERIES_REL_TOL: f64 = 1e-16;
pub const SERIES_MAX_TERMS: usize = 100_000;

pub fn euler_gamma() -> f64 {
    EULER_GAMMA
}

fn check_arg(z: C64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if is_pole(z) {
        return Err(Error::GammaPole { re: z.re, im: z.im });
    }
    Ok(())
}

/// True at the non-positive integers.
pub fn is_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// Principal log for the shift products; real arguments skip the complex log.
fn plog(w: C64) -> C64 {
    if w.im == 0.0 {
        C64::new(w.re.abs().ln(), if w.re < 0.0 { PI } else { 0.0 })
    } else {
        w.ln()
    }
}

/// Principal branch of ln Γ(z).
pub fn log_gamma(z: C64) -> Result<C64> {
    check_arg(z)?;
    let mut w = z;
    let mut acc = C64::new(0.0, 0.0);
    while w.re < SHIFT_TO {
        acc += plog(w);
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    for c in STIRLING.iter().rev() {
        series = series * inv2 + *c;
    }
    series *= inv;
    Ok((w - 0.5) * w.ln() - w + HALF_LN_2PI + series - acc)
}

pub fn gamma(z: C64) -> Result<C64> {
    log_gamma(z).map(|l| l.exp())
}

/// 1/Γ(z), zero at the poles of Γ.
pub fn rgamma(z: C64) -> Result<C64> {
    if is_pole(z) {
        return Ok(C64::new(0.0, 0.0));
    }
    log_gamma(z).map(|l| (-l).exp())
}

pub fn digamma(z: C64) -> Result<C64> {
    check_arg(z)?;
    let mut w = z;
    let mut acc = C64::new(0.0, 0.0);
    while w.re < SHIFT_TO {
        acc += w.inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    for c in DIGAMMA_ASYM.iter().rev() {
        series = series * inv2 + *c;
    }
    series *= inv2;
    Ok(w.ln() - 0.5 * inv - series - acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2F1Params {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub z: f64,
}

impl Hyp2F1Params {
    pub fn new(a: C64, b: C64, c: C64, z: f64) -> Self {
        Hyp2F1Params { a, b, c, z }
    }
}

/// Plain Maclaurin series on |w| < 1.
pub fn hyp2f1_series(a: C64, b: C64, c: C64, w: f64) -> Result<C64> {
    series_gauged(a, b, c, w).map(|r| r.0)
}

/// Series value and the sum of term magnitudes.
fn series_gauged(a: C64, b: C64, c: C64, w: f64) -> Result<(C64, f64)> {
    let mut sum = C64::new(1.0, 0.0);
    let mut gauge = 1.0;
    let mut term = C64::new(1.0, 0.0);
    let mut small = 0;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * w;
        sum += term;
        gauge += term.norm();
        if term.norm() == 0.0 {
            return Ok((sum, gauge));
        }
        if term.norm() <= SERIES_REL_TOL * sum.norm() {
            small += 1;
            if small == 3 {
                return Ok((sum, gauge));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: SERIES_MAX_TERMS,
        last: term.norm(),
    })
}

/// exp(sum ln Γ(num) - sum ln Γ(den)); a pole in `den` gives zero.
fn gamma_ratio(num: &[C64], den: &[C64]) -> Result<C64> {
    if den.iter().any(|&d| is_pole(d)) {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut l = C64::new(0.0, 0.0);
    for &n in num {
        l += log_gamma(n)?;
    }
    for &d in den {
        l -= log_gamma(d)?;
    }
    Ok(l.exp())
}

fn near_integer(x: C64, tol: f64) -> bool {
    x.im.abs() < tol && (x.re - x.re.round()).abs() < tol
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for real z.
///
/// * `z` in `[0, 1)`: Maclaurin series, or the `1 - z` connection above 0.75;
/// * `z < 0`: Pfaff map onto `z / (z - 1)` in `(0, 1)`;
/// * `z = 1`: Gauss summation when `Re(c - a - b) > 0`;
/// * `z > 1`: connection through `1 / z` with `ln(-z) = ln z + iπ`.
pub fn hyp2f1(p: Hyp2F1Params) -> Result<C64> {
    hyp2f1_gauged(p).map(|r| r.0)
}

/// [`hyp2f1`] together with the summed magnitude of every term that went into
/// it; the ratio gauge/|value| bounds the loss to cancellation.
pub fn hyp2f1_gauged(p: Hyp2F1Params) -> Result<(C64, f64)> {
    let Hyp2F1Params { a, b, c, z } = p;
    if !z.is_finite() {
        return Err(Error::Domain(format!("non-finite argument z = {z}")));
    }
    if is_pole(c) {
        return Err(Error::Domain(format!("c = {c} is a non-positive integer")));
    }
    if z == 0.0 {
        return Ok((C64::new(1.0, 0.0), 1.0));
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        let pre = (-a * (1.0 - z).ln()).exp();
        let (v, g) = hyp2f1_unit(a, c - b, c, w)?;
        return Ok((pre * v, pre.norm() * g));
    }
    if z < 1.0 {
        return hyp2f1_unit(a, b, c, z);
    }
    if z == 1.0 {
        let s = c - a - b;
        if s.re <= 0.0 {
            return Err(Error::Unsupported(format!("z = 1 with Re(c - a - b) = {} <= 0", s.re)));
        }
        let v = gamma_ratio(&[c, s], &[c - a, c - b])?;
        return Ok((v, v.norm()));
    }
    if near_integer(a - b, 1e-9) {
        return Err(Error::Unsupported(format!("z > 1 with integer a - b = {}", a - b)));
    }
    let ln_mz = C64::new(z.ln(), PI);
    let w = 1.0 / z;
    let ka = gamma_ratio(&[c, b - a], &[b, c - a])?;
    let kb = gamma_ratio(&[c, a - b], &[a, c - b])?;
    let (mut out, mut gauge) = (C64::new(0.0, 0.0), 0.0);
    if ka.norm() != 0.0 {
        let pre = ka * (-a * ln_mz).exp();
        let (v, g) = hyp2f1_unit(a, a - c + 1.0, a - b + 1.0, w)?;
        out += pre * v;
        gauge += pre.norm() * g;
    }
    if kb.norm() != 0.0 {
        let pre = kb * (-b * ln_mz).exp();
        let (v, g) = hyp2f1_unit(b, b - c + 1.0, b - a + 1.0, w)?;
        out += pre * v;
        gauge += pre.norm() * g;
    }
    Ok((out, gauge))
}

fn hyp2f1_unit(a: C64, b: C64, c: C64, w: f64) -> Result<(C64, f64)> {
    let s = c - a - b;
    if w <= 0.75 || near_integer(s, 1e-6) {
        return series_gauged(a, b, c, w);
    }
    let v = 1.0 - w;
    let k1 = gamma_ratio(&[c, s], &[c - a, c - b])?;
    let k2 = gamma_ratio(&[c, -s], &[a, b])?;
    let (mut out, mut gauge) = (C64::new(0.0, 0.0), 0.0);
    if k1.norm() != 0.0 {
        let (f, g) = series_gauged(a, b, 1.0 - s, v)?;
        out += k1 * f;
        gauge += k1.norm() * g;
    }
    if k2.norm() != 0.0 {
        let pre = k2 * (s * v.ln()).exp();
        let (f, g) = series_gauged(c - a, c - b, 1.0 + s, v)?;
        out += pre * f;
        gauge += pre.norm() * g;
    }
    Ok((out, gauge))
}

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}
