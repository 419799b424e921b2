//! Connection coefficients between the two singular ends and the spectral
//! residuals built from them.
//!
//! Near the sin end `ψ ≈ A (αx)^{½+ν_s} + B (αx)^{½-ν_s}` and likewise at the
//! cos end in `u = π/2α - x`. With `r = B/A` at each end the map is
//!
//! ```text
//! r_c = (M1 r_s + M2) / (M3 r_s + M4)
//! M1 = Γ(c)Γ(1-s)/G(-s, c)    M2 = Γ(c)Γ(1+s)/G(s, c)
//! M3 = Γ(-c)Γ(1-s)/G(-s,-c)   M4 = Γ(-c)Γ(1+s)/G(s,-c)
//! G(a, b) = Γ(½ + a/2 + b/2 + q/2) Γ(½ + a/2 + b/2 - q/2)
//! ```
//!
//! with `s = ν_s`, `c = ν_c`, `q = k/α` (or `iκ/α`). Everything is assembled
//! from log-gamma sums; a Γ pole inside `G` makes the coefficient vanish and
//! is carried as a log with real part `-∞`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{EndDatum, EnergyPoint, EnergySign, NuKind, NuValue};
use crate::specfun::{digamma, euler_gamma, is_pole, log_gamma, wrap_angle, C64};

const NEG_INF: C64 = C64 {
    re: f64::NEG_INFINITY,
    im: 0.0,
};

/// ln G(a, b) with a pole reported as `+∞` so that `-ln G` vanishes.
fn ln_g(a: C64, b: C64, q: C64) -> Result<C64> {
    let base = 0.5 + a / 2.0 + b / 2.0;
    let mut out = C64::new(0.0, 0.0);
    for z in [base + q / 2.0, base - q / 2.0] {
        if is_pole(z) {
            return Ok(C64::new(f64::INFINITY, 0.0));
        }
        out += log_gamma(z)?;
    }
    Ok(out)
}

fn finish(l: C64) -> C64 {
    if l.re == f64::NEG_INFINITY || l.re.is_nan() && l.im.is_nan() {
        NEG_INF
    } else {
        l
    }
}

/// Pieces of the connection coefficients: the energy-independent prefactors
/// `ln Γ(c), ln Γ(-c), ln Γ(1-s), ln Γ(1+s)` (`None` at a pole) and the
/// energy-dependent `-ln G` factors of M1..M4.
#[derive(Debug, Clone, Copy)]
pub struct MobiusParts {
    pub gc: Option<C64>,
    pub gmc: Option<C64>,
    pub g1ms: Option<C64>,
    pub g1ps: Option<C64>,
    pub inv_g: [C64; 4],
}

fn lg_opt(z: C64) -> Result<Option<C64>> {
    if is_pole(z) {
        Ok(None)
    } else {
        log_gamma(z).map(Some)
    }
}

impl MobiusParts {
    pub fn new(s: C64, c: C64, q: C64) -> Result<Self> {
        let inv = |a: C64, b: C64| -> Result<C64> {
            let g = ln_g(a, b, q)?;
            Ok(if g.re == f64::INFINITY { NEG_INF } else { -g })
        };
        Ok(MobiusParts {
            gc: lg_opt(c)?,
            gmc: lg_opt(-c)?,
            g1ms: lg_opt(1.0 - s)?,
            g1ps: lg_opt(1.0 + s)?,
            inv_g: [inv(-s, c)?, inv(s, c)?, inv(-s, -c)?, inv(s, -c)?],
        })
    }

    /// Full logs of (M1, M2, M3, M4).
    pub fn full(&self) -> Result<[C64; 4]> {
        let need = |x: Option<C64>, what: &str| {
            x.ok_or_else(|| Error::Domain(format!("Γ({what}) is singular for this order parameter")))
        };
        let (gc, gmc) = (need(self.gc, "c")?, need(self.gmc, "-c")?);
        let (g1ms, g1ps) = (need(self.g1ms, "1-s")?, need(self.g1ps, "1+s")?);
        let pre = [gc + g1ms, gc + g1ps, gmc + g1ms, gmc + g1ps];
        let mut out = [NEG_INF; 4];
        for i in 0..4 {
            out[i] = finish(pre[i] + self.inv_g[i]);
        }
        Ok(out)
    }
}

/// Logs of (M1, M2, M3, M4) for arbitrary complex order parameters.
pub fn mobius_logs(s: C64, c: C64, q: C64) -> Result<[C64; 4]> {
    MobiusParts::new(s, c, q)?.full()
}

/// Value `e^m · v`, kept apart so large Γ ratios never overflow.
#[derive(Debug, Clone, Copy)]
pub struct Scaled {
    pub m: f64,
    pub v: C64,
}

impl Scaled {
    pub fn is_zero(&self) -> bool {
        self.m == f64::NEG_INFINITY || self.v.norm() == 0.0
    }

    pub fn value(&self) -> C64 {
        if self.m == f64::NEG_INFINITY {
            C64::new(0.0, 0.0)
        } else {
            self.v * self.m.exp()
        }
    }

    pub fn arg(&self) -> f64 {
        self.v.arg()
    }
}

/// Sum of `mult_i · exp(log_i)`.
pub fn log_sum(terms: &[(C64, C64)]) -> Scaled {
    let m = terms
        .iter()
        .filter(|(l, k)| l.re > f64::NEG_INFINITY && k.norm() > 0.0)
        .map(|(l, k)| l.re + k.norm().ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Scaled {
            m,
            v: C64::new(0.0, 0.0),
        };
    }
    let v = terms
        .iter()
        .filter(|(l, k)| l.re > f64::NEG_INFINITY && k.norm() > 0.0)
        .map(|(l, k)| *k * (*l - m).exp())
        .sum();
    Scaled { m, v }
}

/// `num / den` as a complex number (may be huge; the phase is always safe).
pub fn ratio(num: Scaled, den: Scaled) -> C64 {
    if den.is_zero() {
        return C64::new(f64::INFINITY, 0.0);
    }
    if num.is_zero() {
        return C64::new(0.0, 0.0);
    }
    (num.v / den.v) * (num.m - den.m).min(700.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCoeffs {
    pub m1: C64,
    pub m2: C64,
    pub m3: C64,
    pub m4: C64,
}

impl ConnectionCoeffs {
    pub fn determinant(&self) -> C64 {
        self.m1 * self.m4 - self.m2 * self.m3
    }
}

pub fn mobius_coeffs(nu_s: NuValue, nu_c: NuValue, e: EnergyPoint) -> Result<ConnectionCoeffs> {
    if nu_s.kind == NuKind::Zero || nu_c.kind == NuKind::Zero {
        return Err(Error::Domain(
            "vanishing order parameter: use the critical-line residual".into(),
        ));
    }
    let l = mobius_logs(nu_s.as_complex(), nu_c.as_complex(), e.q())?;
    Ok(ConnectionCoeffs {
        m1: l[0].exp(),
        m2: l[1].exp(),
        m3: l[2].exp(),
        m4: l[3].exp(),
    })
}

/// Boundary ratio `r = B/A` at one end as a projective pair `(p, q)`, `r = p/q`.
pub fn end_pair(datum: &EndDatum, nu: NuValue, alpha: f64) -> Result<(C64, C64)> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match *datum {
        EndDatum::FixedPointUV => Ok((zero, one)),
        EndDatum::FixedPointIR => Ok((one, zero)),
        EndDatum::Scale { .. } => match datum.real_ratio(nu.magnitude, alpha) {
            Some(t) => Ok((C64::new(t, 0.0), one)),
            None => Ok((one, zero)),
        },
        EndDatum::Phase { theta } => Ok((-C64::from_polar(1.0, -theta), one)),
        EndDatum::CriticalPair { .. } => Err(Error::Domain("critical pair has no power-law ratio".into())),
    }
}

/// Far-end pair `(num, den)` with `r_c = num / den` given `r_s = p/q`.
pub fn propagate(logs: &[C64; 4], p: C64, q: C64) -> (Scaled, Scaled) {
    let num = log_sum(&[(logs[0], p), (logs[1], q)]);
    let den = log_sum(&[(logs[2], p), (logs[3], q)]);
    (num, den)
}

/// Like [`propagate`] but drops prefactors that are common to `num` (or to
/// `den`) when only the zero set of `num/den - target` matters: the sin-end
/// `Γ(1±s)` when `r_s` is 0 or ∞, and `Γ(±c)` when `drop_c` is set (far
/// target 0 or ∞). Keeps integer order parameters regular.
pub fn propagate_reduced(parts: &MobiusParts, p: C64, q: C64, drop_c: bool) -> Result<(Scaled, Scaled)> {
    let zero = C64::new(0.0, 0.0);
    let need = |x: Option<C64>, what: &str| {
        x.ok_or_else(|| Error::Domain(format!("Γ({what}) is singular for this order parameter")))
    };
    let (s_a, s_b) = if p == zero || q == zero {
        (zero, zero)
    } else {
        (need(parts.g1ms, "1-s")?, need(parts.g1ps, "1+s")?)
    };
    let (c_n, c_d) = if drop_c {
        (zero, zero)
    } else {
        (need(parts.gc, "c")?, need(parts.gmc, "-c")?)
    };
    let g = &parts.inv_g;
    let num = log_sum(&[(c_n + s_a + g[0], p), (c_n + s_b + g[1], q)]);
    let den = log_sum(&[(c_d + s_a + g[2], p), (c_d + s_b + g[3], q)]);
    Ok((num, den))
}

fn imag_nu(mag: f64, what: &str) -> Result<C64> {
    if !(mag > 0.0) {
        return Err(Error::Domain(format!("{what} must be positive, got {mag}")));
    }
    Ok(C64::new(0.0, mag))
}

fn real_nu(nu: f64, what: &str) -> Result<C64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("{what} must be positive, got {nu}")));
    }
    Ok(C64::new(nu, 0.0))
}

/// `e^{iΘ₁} = M1/M2`, returned as the (unit-modulus) complex ratio.
pub fn theta1_rhs(nu_s_mag: f64, nu_c: f64, e: EnergyPoint) -> Result<C64> {
    Ok(theta1_log(nu_s_mag, nu_c, e)?.exp())
}

/// `ln(M1/M2)`; the common `Γ(c)` cancels, so integer `ν_c` is fine.
fn theta1_log(nu_s_mag: f64, nu_c: f64, e: EnergyPoint) -> Result<C64> {
    let s = imag_nu(nu_s_mag, "|nu_s|")?;
    let p = MobiusParts::new(s, real_nu(nu_c, "nu_c")?, e.q())?;
    let (a, b) = (p.g1ms.unwrap_or(NEG_INF), p.g1ps.unwrap_or(NEG_INF));
    Ok(a + p.inv_g[0] - b - p.inv_g[1])
}

fn theta1_raw(nu_s_mag: f64, nu_c: f64, e: EnergyPoint) -> Result<f64> {
    let d = theta1_log(nu_s_mag, nu_c, e)?;
    if !d.im.is_finite() {
        return Err(Error::GammaPole {
            re: e.q().re,
            im: e.q().im,
        });
    }
    Ok(d.im)
}

/// Phase selected by a UV cos end and an attractive sin end.
pub fn theta1(nu_s_mag: f64, nu_c: f64, e: EnergyPoint) -> Result<f64> {
    Ok(wrap_angle(theta1_raw(nu_s_mag, nu_c, e)?))
}

/// `e^{-iΘ₂} = (S M4 - M2)/(S M3 - M1)` with `S = scale_term`; `None` means `S = ∞`.
pub fn theta2_rhs(nu_s_mag: f64, nu_c: f64, scale_term: Option<f64>, e: EnergyPoint) -> Result<C64> {
    let (num, den) = theta2_parts(nu_s_mag, nu_c, scale_term, e)?;
    Ok(ratio(num, den))
}

fn theta2_parts(nu_s_mag: f64, nu_c: f64, scale_term: Option<f64>, e: EnergyPoint) -> Result<(Scaled, Scaled)> {
    let one = C64::new(1.0, 0.0);
    let s = imag_nu(nu_s_mag, "|nu_s|")?;
    let p = MobiusParts::new(s, real_nu(nu_c, "nu_c")?, e.q())?;
    let (g1ms, g1ps) = (p.g1ms.unwrap_or(NEG_INF), p.g1ps.unwrap_or(NEG_INF));
    // fixed points only need ratios in which Γ(±c) cancels
    if scale_term == Some(0.0) {
        return Ok((
            log_sum(&[(g1ps + p.inv_g[1], -one)]),
            log_sum(&[(g1ms + p.inv_g[0], -one)]),
        ));
    }
    if scale_term.is_none() {
        return Ok((
            log_sum(&[(g1ps + p.inv_g[3], one)]),
            log_sum(&[(g1ms + p.inv_g[2], one)]),
        ));
    }
    let l = p.full()?;
    let (num, den) = match scale_term {
        Some(t) => {
            let t = C64::new(t, 0.0);
            (log_sum(&[(l[3], t), (l[1], -one)]), log_sum(&[(l[2], t), (l[0], -one)]))
        }
        None => (log_sum(&[(l[3], one)]), log_sum(&[(l[2], one)])),
    };
    if num.is_zero() && den.is_zero() {
        return Err(Error::Degenerate(format!("numerator and denominator vanish at {e:?}")));
    }
    Ok((num, den))
}

/// Phase selected by a weak-medium cos end with scale datum `S`.
pub fn theta2(nu_s_mag: f64, nu_c: f64, scale_term: Option<f64>, e: EnergyPoint) -> Result<f64> {
    let (num, den) = theta2_parts(nu_s_mag, nu_c, scale_term, e)?;
    Ok(wrap_angle(-(num.arg() - den.arg())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenBranch {
    /// θ̄ = Σ - ζ₂
    Plus,
    /// θ̄ = π - Σ - ζ₂
    Minus,
    /// tan θ̄ = tan(Σ - ζ₂); contains the `Plus` roots and spurious θ̄ + π ones.
    Tangent,
}

#[derive(Debug, Clone, Copy)]
pub struct GreenParts {
    pub sin_sigma: f64,
    pub zeta2: f64,
    pub bar_theta: f64,
}

pub fn green_parts(nu_s_mag: f64, nu_c_mag: f64, theta_s: f64, theta_c: f64, e: EnergyPoint) -> Result<GreenParts> {
    let l = mobius_logs(imag_nu(nu_s_mag, "|nu_s|")?, imag_nu(nu_c_mag, "|nu_c|")?, e.q())?;
    let bar_theta = 0.5 * (theta_c + theta_s);
    let delta = 0.5 * (theta_c - theta_s);
    let sin_sigma = (l[0] - l[1].re + C64::new(0.0, delta)).exp().im;
    if !(sin_sigma.abs() < 1.0 + 1e-12) {
        return Err(Error::Numerical(format!("|sin Σ| = {} >= 1 at {e:?}", sin_sigma.abs())));
    }
    Ok(GreenParts {
        sin_sigma: sin_sigma.clamp(-1.0, 1.0),
        zeta2: l[1].im,
        bar_theta,
    })
}

/// Residual for both ends strongly attractive; the spectrum is the union of
/// the `Plus` and `Minus` zero sets.
pub fn green_residual(
    nu_s_mag: f64,
    nu_c_mag: f64,
    theta_s: f64,
    theta_c: f64,
    e: EnergyPoint,
    branch: GreenBranch,
) -> Result<f64> {
    let p = green_parts(nu_s_mag, nu_c_mag, theta_s, theta_c, e)?;
    let sigma = p.sin_sigma.asin();
    Ok(match branch {
        GreenBranch::Plus => wrap_angle(p.bar_theta - (sigma - p.zeta2)),
        GreenBranch::Minus => wrap_angle(p.bar_theta - (PI - sigma - p.zeta2)),
        GreenBranch::Tangent => 0.5 * wrap_angle(2.0 * (p.bar_theta - (sigma - p.zeta2))),
    })
}

/// Far-end ratio `ε(αL_c)^{2ν_c}` implied by the sin-end datum at energy `e`.
pub fn weak_scale_ratio(nu_s: NuValue, nu_c: f64, boundary_s: &EndDatum, alpha: f64, e: EnergyPoint) -> Result<f64> {
    if nu_s.kind == NuKind::Zero {
        return Err(Error::Domain("use the critical-line residual for nu_s = 0".into()));
    }
    let l = mobius_logs(nu_s.as_complex(), real_nu(nu_c, "nu_c")?, e.q())?;
    let (p, q) = end_pair(boundary_s, nu_s, alpha)?;
    let (num, den) = propagate(&l, p, q);
    let r = ratio(num, den);
    Ok(r.re)
}

/// Far-end pair `(B_c, A_c)` on the critical line `ν_s = 0` for
/// `ψ ≈ √(αx) (1 - D ln αx)` at the sin end.
pub fn critical_pair(c: C64, d: f64, e: EnergyPoint) -> Result<(Scaled, Scaled)> {
    critical_pair_q(c, d, e.q())
}

pub fn critical_pair_q(c: C64, d: f64, q: C64) -> Result<(Scaled, Scaled)> {
    Ok((critical_half(c, d, q)?, critical_half(-c, d, q)?))
}

/// Real residual with the same real zeros as `f(q)`, made scale-free by
/// `|f|` at a point moved off the line the zeros live on. `f` must be real
/// on that line and entire in `q`.
pub fn zero_residual(f: impl Fn(C64) -> Result<Scaled>, e: EnergyPoint) -> Result<f64> {
    let q = e.q();
    let x = f(q)?;
    if x.is_zero() {
        return Ok(0.0);
    }
    let off = match e.sign {
        EnergySign::Positive => q + C64::new(0.0, 1.0),
        EnergySign::Negative => q + C64::new(1.0, 0.0),
    };
    let y = f(off)?;
    if y.is_zero() {
        return Err(Error::Degenerate("reference magnitude vanishes".into()));
    }
    let r = x.v.re / y.v.norm() * (x.m - y.m).clamp(-700.0, 700.0).exp();
    Ok(r.atan())
}

/// `Γ(c)/(Γ(z1)Γ(z2)) · (D ℓ - 1)` with `ℓ = -γ_E - (ψ(z1) + ψ(z2))/2`,
/// continued through the poles of `Γ(z_i)` where `ψ/Γ` stays finite.
fn critical_half(c: C64, d: f64, q: C64) -> Result<Scaled> {
    let z1 = 0.5 + c / 2.0 + q / 2.0;
    let z2 = 0.5 + c / 2.0 - q / 2.0;
    let lgc = log_gamma(c)?;
    let residue = |z: C64| -> Result<(C64, f64)> {
        // ψ(z)/Γ(z) -> -(-1)^n n! at z = -n
        let n = -z.re;
        let sign = if (n as i64) % 2 == 0 { 1.0 } else { -1.0 };
        Ok((log_gamma(C64::new(n + 1.0, 0.0))?, -sign))
    };
    match (is_pole(z1), is_pole(z2)) {
        (false, false) => {
            let ell = -euler_gamma() - 0.5 * (digamma(z1)? + digamma(z2)?);
            Ok(log_sum(&[(lgc - log_gamma(z1)? - log_gamma(z2)?, ell * d - 1.0)]))
        }
        (true, false) => {
            let (lf, sg) = residue(z1)?;
            Ok(log_sum(&[(lgc - log_gamma(z2)? + lf, C64::new(-0.5 * d * sg, 0.0))]))
        }
        (false, true) => {
            let (lf, sg) = residue(z2)?;
            Ok(log_sum(&[(lgc - log_gamma(z1)? + lf, C64::new(-0.5 * d * sg, 0.0))]))
        }
        (true, true) => Ok(Scaled {
            m: f64::NEG_INFINITY,
            v: C64::new(0.0, 0.0),
        }),
    }
}

/// Critical line with an attractive cos end: `-e^{-iθ_c} = B_c/A_c`.
pub fn critical_residual(nu_c_mag: f64, d: f64, theta_c: f64, e: EnergyPoint) -> Result<f64> {
    if !d.is_finite() {
        return Err(Error::Validation("D must be finite".into()));
    }
    let (num, den) = critical_pair(imag_nu(nu_c_mag, "|nu_c|")?, d, e)?;
    if num.is_zero() && den.is_zero() {
        return Err(Error::Degenerate(format!("critical pair vanishes at {e:?}")));
    }
    // arg(-num/den) = -θ_c
    let phase = PI + num.arg() - den.arg();
    Ok(wrap_angle(-phase - theta_c))
}

/// Unit-modulus right-hand side of the critical condition.
pub fn critical_rhs(nu_c_mag: f64, d: f64, e: EnergyPoint) -> Result<C64> {
    let (num, den) = critical_pair(imag_nu(nu_c_mag, "|nu_c|")?, d, e)?;
    Ok(-ratio(num, den))
}

/// Positive `q` in `(lo, hi)` where `½ + a/2 ± q/2` hits a non-positive
/// integer, for each shift `a` (e.g. `a = s + c` for `G(s, c)`).
pub fn pole_lattice(shifts: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &a in shifts {
        // ½ + a/2 - q/2 = -n  <=>  q = 2n + 1 + a
        let mut n = 0.0;
        loop {
            let q = 2.0 * n + 1.0 + a;
            if q >= hi {
                break;
            }
            if q > lo {
                out.push(q);
            }
            n += 1.0;
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}
