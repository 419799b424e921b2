//! Eigenfunctions built from the local hypergeometric solutions at each end.
//!
//! Near the sin end (`t = αx`)
//!
//! ```text
//! φ±(t) = sin^{½±ν_s} t · cos^{½+ν_c} t · F(½(1±ν_s+ν_c+q), ½(1±ν_s+ν_c-q); 1±ν_s; sin² t)
//! ```
//!
//! and symmetrically at the cos end in `u = π/2 - t`. Each sample is taken
//! from the nearer end unless that sum cancels badly. The far-end scale comes
//! from the ratio of the two solutions at well-conditioned points; its spread
//! tells whether the energy is really an eigenvalue.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EndDatum, EnergyPoint, NuKind, NuValue, PotentialSpec, RenormData};
use crate::specfun::{hyp2f1_gauged, Hyp2F1Params, C64};
use crate::spectra::Parity;

pub const DEFAULT_POINTS: usize = 4000;
pub const MIN_POINTS: usize = 2000;
/// Core radius in units of `1/α`; samples closer to a singular point are masked.
pub const MASK_RADIUS: f64 = 1e-5;
/// Relative mismatch of the two halves above which the energy is flagged.
pub const MISMATCH_WARN: f64 = 1e-6;
const CRIT_EPS: f64 = 1e-3;
const MATCH_CANDIDATES: usize = 40;
const MATCH_POINTS: usize = 15;
/// Beyond this series argument the log case of the connection formula is not tried.
const Z_SLOW: f64 = 0.9;

/// Local coefficients at both ends in the dimensionless form
/// `ψ ≈ A (αx)^{½+ν} + B (αx)^{½-ν}`. On the critical line the pair
/// multiplies `√t` and `√t ln t` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoefficients {
    pub a_s: C64,
    pub b_s: C64,
    pub a_c: C64,
    pub b_c: C64,
    /// Relative misfit between the two halves on the overlap window.
    pub mismatch: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSample {
    pub x: Vec<f64>,
    /// `NaN` on masked samples.
    pub psi: Vec<f64>,
    pub masked: Vec<bool>,
    pub node_count: usize,
    /// `max |Im ψ| / max |ψ|` after removing the global phase.
    pub imag_ratio: f64,
    pub alpha: f64,
    /// Positions of the singular points bounding the sample.
    pub singular: Vec<f64>,
    pub warnings: Vec<String>,
}

/// `(A, B)` of one end before the overall scale is fixed.
pub fn end_coefficients(datum: &EndDatum, nu: NuValue, alpha: f64) -> Result<(C64, C64)> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let out = match (*datum, nu.kind) {
        (EndDatum::FixedPointUV, _) => (one, zero),
        (EndDatum::FixedPointIR, _) => (zero, one),
        (EndDatum::Scale { .. }, NuKind::RealPositive) => match datum.real_ratio(nu.magnitude, alpha) {
            Some(r) => (one, C64::new(r, 0.0)),
            None => (zero, one),
        },
        (EndDatum::Phase { theta }, NuKind::Imaginary) => {
            // B = A*, giving √t sin(|ν| ln t + θ/2)
            let a = C64::from_polar(0.5, 0.5 * theta) / C64::new(0.0, 1.0);
            (a, a.conj())
        }
        (EndDatum::CriticalPair { d, .. }, NuKind::Zero) => (one, C64::new(-d, 0.0)),
        _ => {
            return Err(Error::Validation(format!("datum {datum:?} does not fit {nu:?}")));
        }
    };
    Ok(out)
}

/// `φ` and its cancellation gauge.
fn local_phi(nu: C64, other: C64, q: C64, t: f64) -> Result<(C64, f64)> {
    let (s, c) = t.sin_cos();
    let z = s * s;
    let near_int = (other.re - other.re.round()).abs() < 1e-6 && other.im.abs() < 1e-6;
    if z > Z_SLOW && near_int {
        return Err(Error::Unsupported(format!("slow series at z = {z}")));
    }
    let a = 0.5 * (1.0 + nu + other + q);
    let b = 0.5 * (1.0 + nu + other - q);
    let (f, g) = hyp2f1_gauged(Hyp2F1Params::new(a, b, 1.0 + nu, z))?;
    let pre = ((0.5 + nu) * s.ln() + (0.5 + other) * c.ln()).exp();
    Ok((pre * f, pre.norm() * g))
}

/// `A φ+ + B φ-` at local angle `t` from one end, with the sum of the term
/// magnitudes as a cancellation gauge.
fn end_value(nu: NuValue, other: NuValue, q: C64, t: f64, a: C64, b: C64) -> Result<(C64, f64)> {
    let o = other.as_complex();
    if nu.kind == NuKind::Zero {
        let at = |h: f64| local_phi(C64::new(h, 0.0), o, q, t);
        let ((p1, g1), (m1, h1)) = (at(CRIT_EPS)?, at(-CRIT_EPS)?);
        let ((p2, g2), (m2, h2)) = (at(2.0 * CRIT_EPS)?, at(-2.0 * CRIT_EPS)?);
        // √t and √t ln t from the ν = ±ε, ±2ε splits, Richardson to O(ε⁴)
        let u1 = (2.0 * (p1 + m1) - 0.5 * (p2 + m2)) / 3.0;
        let u2 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * CRIT_EPS);
        let gauge = (a.norm() + b.norm() / CRIT_EPS) * (g1 + h1 + g2 + h2);
        return Ok((a * u1 + b * u2, gauge));
    }
    let n = nu.as_complex();
    let (mut out, mut gauge) = (C64::new(0.0, 0.0), 0.0);
    for (coef, sign) in [(a, 1.0), (b, -1.0)] {
        if coef != C64::new(0.0, 0.0) {
            let (v, g) = local_phi(sign * n, o, q, t)?;
            out += coef * v;
            gauge += coef.norm() * g;
        }
    }
    Ok((out, gauge))
}

/// One end's solution at global angle `t` and its condition number.
fn side(nu: NuValue, other: NuValue, q: C64, local: f64, a: C64, b: C64) -> Option<(C64, f64)> {
    let (v, g) = end_value(nu, other, q, local, a, b).ok()?;
    let cond = g / v.norm();
    (v.norm() > 0.0 && v.is_finite() && cond.is_finite()).then_some((v, cond))
}

/// Fix `(A, B)` at both ends for the energy `e`. Away from an eigenvalue the
/// result still evaluates but carries a warning.
///
/// The far-end scale is fitted where both local solutions are well
/// conditioned; deep states are exponentially small away from their end, so
/// a fixed window does not work.
pub fn coefficients_from_renorm(
    spec: &PotentialSpec,
    renorm: &RenormData,
    e: EnergyPoint,
) -> Result<BoundaryCoefficients> {
    renorm.validate(spec)?;
    let (ns, nc) = (spec.nu_s(), spec.nu_c());
    let (a_s, b_s) = end_coefficients(&renorm.s, ns, spec.alpha)?;
    let (a_c, b_c) = end_coefficients(&renorm.c, nc, spec.alpha)?;
    let q = e.q();
    let mut cands: Vec<(f64, C64)> = (0..MATCH_CANDIDATES)
        .flat_map(|j| {
            let t = 1e-4 * (FRAC_PI_4 / 1e-4).powf(j as f64 / (MATCH_CANDIDATES - 1) as f64);
            [t, FRAC_PI_2 - t]
        })
        .filter_map(|t| {
            let (fs, cs) = side(ns, nc, q, t, a_s, b_s)?;
            let (fc, cc) = side(nc, ns, q, FRAC_PI_2 - t, a_c, b_c)?;
            Some((cs.max(cc), fs / fc))
        })
        .collect();
    cands.sort_by(|x, y| x.0.total_cmp(&y.0));
    cands.truncate(MATCH_POINTS);
    if cands.len() < 3 || cands[0].0 > 1e8 {
        return Err(Error::Degenerate("no well-conditioned matching points".into()));
    }
    // medians shrug off the odd point where one side's series loses digits
    let lambda = C64::new(
        median(cands.iter().map(|c| c.1.re)),
        median(cands.iter().map(|c| c.1.im)),
    );
    let mismatch = median(cands.iter().map(|c| (c.1 - lambda).norm())) / lambda.norm();
    let warning =
        (mismatch > MISMATCH_WARN).then(|| format!("energy {:?} is not an eigenvalue (mismatch {mismatch:.2e})", e));
    Ok(BoundaryCoefficients {
        a_s,
        b_s,
        a_c: lambda * a_c,
        b_c: lambda * b_c,
        mismatch,
        warning,
    })
}

fn median(xs: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `N` points on `(0, π/2α)`, clustered towards both ends.
pub fn cosine_grid(alpha: f64, n: usize) -> Vec<f64> {
    let l = FRAC_PI_2 / alpha;
    (0..n)
        .map(|i| {
            let u = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            0.5 * l * (1.0 - u.cos())
        })
        .collect()
}

/// Complex ψ at one point, ignoring the core mask.
pub fn psi_raw(spec: &PotentialSpec, coeffs: &BoundaryCoefficients, e: EnergyPoint, x: f64) -> Result<C64> {
    let t = spec.alpha * x;
    if !(t > 0.0 && t < FRAC_PI_2) {
        return Err(Error::Domain(format!("x = {x} lies outside (0, π/2α)")));
    }
    let (ns, nc, q) = (spec.nu_s(), spec.nu_c(), e.q());
    let from_s = || side(ns, nc, q, t, coeffs.a_s, coeffs.b_s);
    let from_c = || side(nc, ns, q, FRAC_PI_2 - t, coeffs.a_c, coeffs.b_c);
    // nearer end first; the other only when it is markedly better conditioned
    let (near, far) = if t <= FRAC_PI_4 {
        (from_s(), from_c())
    } else {
        (from_c(), from_s())
    };
    let pick = match (near, far) {
        (Some(n), Some(f)) if n.1 > 1e3 && f.1 < n.1 => Some(f),
        (Some(n), _) => Some(n),
        (None, f) => f,
    };
    pick.map(|p| p.0)
        .ok_or_else(|| Error::Numerical(format!("no stable local solution at x = {x}")))
}

fn is_masked(t: f64) -> bool {
    t < MASK_RADIUS || FRAC_PI_2 - t < MASK_RADIUS
}

/// Sample ψ on the single well. Values are real up to the reported `imag_ratio`.
pub fn psi_eval(
    spec: &PotentialSpec,
    coeffs: &BoundaryCoefficients,
    e: EnergyPoint,
    grid: &[f64],
) -> Result<WaveSample> {
    let alpha = spec.alpha;
    let values: Vec<Option<C64>> = grid
        .par_iter()
        .map(|&x| {
            let t = alpha * x;
            if t > 0.0 && t < FRAC_PI_2 && is_masked(t) {
                return Ok(None);
            }
            psi_raw(spec, coeffs, e, x).map(Some)
        })
        .collect::<Result<_>>()?;

    let peak = values
        .iter()
        .flatten()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or_else(|| Error::Domain("every sample is masked".into()))?;
    if peak.norm() == 0.0 || !peak.norm().is_finite() {
        return Err(Error::Numerical(format!("peak amplitude {}", peak.norm())));
    }
    let rot = peak.conj() / peak.norm();
    let (mut max_im, mut max_abs) = (0.0f64, 0.0f64);
    let mut psi = Vec::with_capacity(values.len());
    for v in &values {
        match v {
            Some(v) => {
                let w = v * rot;
                max_im = max_im.max(w.im.abs());
                max_abs = max_abs.max(w.norm());
                psi.push(w.re);
            }
            None => psi.push(f64::NAN),
        }
    }
    let mut sample = WaveSample {
        x: grid.to_vec(),
        psi,
        masked: values.iter().map(Option::is_none).collect(),
        node_count: 0,
        imag_ratio: max_im / max_abs,
        alpha,
        singular: vec![0.0, FRAC_PI_2 / alpha],
        warnings: coeffs.warning.iter().cloned().collect(),
    };
    refresh_nodes(&mut sample);
    Ok(sample)
}

/// Indices `i` with a strict sign change between unmasked neighbours `i` and the next unmasked sample.
pub fn node_positions(sample: &WaveSample) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, (&p, &m)) in sample.psi.iter().zip(&sample.masked).enumerate() {
        if m || p == 0.0 || !p.is_finite() {
            continue;
        }
        if let Some((j, q)) = last {
            if (q < 0.0) != (p < 0.0) {
                out.push(j);
            }
        }
        last = Some((i, p));
    }
    out
}

pub fn node_count(sample: &WaveSample) -> usize {
    node_positions(sample).len()
}

/// Two sign changes within three grid cells.
pub fn under_resolved(sample: &WaveSample) -> bool {
    node_positions(sample).windows(2).any(|w| w[1] - w[0] <= 3)
}

fn refresh_nodes(sample: &mut WaveSample) {
    sample.node_count = node_count(sample);
    if under_resolved(sample) {
        sample
            .warnings
            .push("adjacent sign changes within 3 cells; refine the grid".into());
    }
}

/// Least-squares slope of `ln|ψ|` against `ln d` for samples at distance
/// `d ∈ [margin, 100·margin]` from `x0`, skipping samples near nodes.
fn end_exponent(sample: &WaveSample, x0: f64, margin: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = sample
        .x
        .iter()
        .zip(&sample.psi)
        .zip(&sample.masked)
        .filter_map(|((&x, &p), &m)| {
            let d = (x - x0).abs();
            (!m && d >= margin && d <= 100.0 * margin && p != 0.0).then_some((d, p.abs()))
        })
        .collect();
    let top = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = pts
        .into_iter()
        .filter(|p| p.1 >= 1e-3 * top)
        .map(|(d, p)| (d.ln(), p.ln()))
        .collect();
    if pts.len() < 5 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

/// L²-normalize over the samples at least `margin` away from every singular point.
pub fn normalize(sample: &WaveSample, margin: f64) -> Result<WaveSample> {
    let floor = MASK_RADIUS / sample.alpha;
    if !(margin >= floor * (1.0 - 1e-12)) {
        return Err(Error::Validation(format!(
            "margin {margin} is inside the mask radius {floor}"
        )));
    }
    for &x0 in &sample.singular {
        if let Some(p) = end_exponent(sample, x0, margin) {
            if 2.0 * p <= -1.0 + 1e-3 {
                return Err(Error::Domain(format!("divergent norm: |ψ| ~ d^{p:.4} near x = {x0}")));
            }
        }
    }
    let keep: Vec<bool> = sample
        .x
        .iter()
        .zip(&sample.masked)
        .map(|(&x, &m)| !m && sample.singular.iter().all(|&s| (x - s).abs() >= margin))
        .collect();
    let mut integral = 0.0;
    for i in 0..sample.x.len().saturating_sub(1) {
        if keep[i] && keep[i + 1] {
            let h = sample.x[i + 1] - sample.x[i];
            integral += 0.5 * h * (sample.psi[i].powi(2) + sample.psi[i + 1].powi(2));
        }
    }
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(Error::Numerical(format!("norm integral {integral}")));
    }
    let scale = integral.sqrt().recip();
    let mut out = sample.clone();
    for p in &mut out.psi {
        *p *= scale;
    }
    Ok(out)
}

/// Coefficients and samples for one single-well level on a cosine grid.
pub fn wavefunction(
    spec: &PotentialSpec,
    renorm: &RenormData,
    e: EnergyPoint,
    n: usize,
) -> Result<(BoundaryCoefficients, WaveSample)> {
    if n < MIN_POINTS {
        return Err(Error::Validation(format!(
            "need at least {MIN_POINTS} grid points, got {n}"
        )));
    }
    let coeffs = coefficients_from_renorm(spec, renorm, e)?;
    let sample = psi_eval(spec, &coeffs, e, &cosine_grid(spec.alpha, n))?;
    Ok((coeffs, sample))
}

/// Double-well level on `(-π/2α, π/2α)`: the half-well with the centre
/// condition of the given parity, mirrored evenly or oddly. No sample sits at
/// the centre.
pub fn double_well_wavefunction(
    nu_s: f64,
    nu_c: NuValue,
    wall: &EndDatum,
    alpha: f64,
    parity: Parity,
    e: EnergyPoint,
    n: usize,
) -> Result<(BoundaryCoefficients, WaveSample)> {
    let spec = PotentialSpec::from_nu(alpha, NuValue::real(nu_s), nu_c)?;
    let centre = match parity {
        Parity::Even => EndDatum::FixedPointIR,
        Parity::Odd => EndDatum::FixedPointUV,
    };
    let (coeffs, half) = wavefunction(&spec, &RenormData::new(centre, *wall), e, n.div_ceil(2).max(MIN_POINTS))?;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let m = half.x.len();
    let mut x = Vec::with_capacity(2 * m);
    let mut psi = Vec::with_capacity(2 * m);
    let mut masked = Vec::with_capacity(2 * m);
    for i in (0..m).rev() {
        x.push(-half.x[i]);
        psi.push(sign * half.psi[i]);
        masked.push(half.masked[i]);
    }
    x.extend_from_slice(&half.x);
    psi.extend_from_slice(&half.psi);
    masked.extend_from_slice(&half.masked);
    let l = FRAC_PI_2 / alpha;
    let mut sample = WaveSample {
        x,
        psi,
        masked,
        node_count: 0,
        imag_ratio: half.imag_ratio,
        alpha,
        singular: vec![-l, 0.0, l],
        warnings: coeffs.warning.iter().cloned().collect(),
    };
    refresh_nodes(&mut sample);
    Ok((coeffs, sample))
}
