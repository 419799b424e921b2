//! Finite-difference cross-check of the spectra.
//!
//! The singular ends are cut off at distance `R` and replaced by the Robin
//! condition `ψ' = F(R) ψ` that the boundary datum induces there. The interval
//! `(R, π/2α - R)` is discretized with linear finite elements and a lumped
//! mass, which gives a symmetric tridiagonal matrix; eigenvalues come from
//! Sturm counts and bisection, extrapolated over two grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

use crate::model::{EndDatum, EnergyPoint, NuKind, NuValue, PotentialSpec, RenormData};
use crate::spectra::EnergyLevel;

pub const MIN_GRID: usize = 10_000;
pub const DEFAULT_GRID: usize = 11_000;
/// Largest admissible `αR`.
pub const MAX_CUTOFF: f64 = 1e-3;
pub const DEFAULT_CUTOFF: f64 = 1e-4;
/// Distance kept from a cotangent pole of the Robin value, in phase.
pub const POLE_CLEARANCE: f64 = 0.1;
/// Relative size of `|λ_2n - λ_n| / 3` above which the grid is rejected.
pub const EXTRAPOLATION_TOL: f64 = 1e-3;
/// End of the geometric part of the grid, in `αx`.
const GEOMETRIC_SPAN: f64 = 0.1;
/// `n · (ratio - 1)` of the geometric part.
const RATIO_SCALE: f64 = 27.5;
const MAX_BISECTIONS: usize = 200;
/// Grid doublings tried when the extrapolation error is too large.
pub const MAX_REFINEMENTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulatedProblem {
    pub spec: PotentialSpec,
    /// Cutoff length `R`.
    pub r_cut: f64,
    /// Outward log-derivatives `F(R)` at the sin and cos ends, at zero energy.
    pub robin_s: f64,
    pub robin_c: f64,
    pub renorm: RenormData,
    pub grid_n: usize,
    /// Levels below this energy (in units of `α²`) are skipped; they sit at
    /// `κ ~ 1/R` where the cutoff is visible.
    pub energy_floor: f64,
}

/// `R·F(R)` for the datum at one end.
pub fn robin_value(nu: NuValue, datum: &EndDatum, r: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0 && alpha > 0.0) {
        return Err(Error::Validation(format!("need R > 0 and α > 0, got {r}, {alpha}")));
    }
    let ar = alpha * r;
    match (nu.kind, *datum) {
        (NuKind::RealPositive, EndDatum::FixedPointUV | EndDatum::FixedPointIR | EndDatum::Scale { .. }) => {
            let v = nu.magnitude;
            Ok(match datum.real_ratio(v, alpha) {
                None => 0.5 - v,
                Some(s) => {
                    let p = ar.powf(2.0 * v);
                    0.5 + v * (p - s) / (p + s)
                }
            })
        }
        (NuKind::Imaginary, EndDatum::Phase { theta }) => {
            let phase = nu.magnitude * ar.ln() + 0.5 * theta;
            let s = phase.sin();
            if s.abs() < 1e-12 {
                return Err(Error::Numerical(format!(
                    "R = {r} sits on a pole of the Robin value; perturb R"
                )));
            }
            Ok(0.5 + nu.magnitude * phase.cos() / s)
        }
        (NuKind::Zero, EndDatum::CriticalPair { d, .. }) => Ok(0.5 - d / (1.0 - d * ar.ln())),
        _ => Err(Error::Validation(format!("datum {datum:?} does not fit {nu:?}"))),
    }
}

// Taylor coefficients of t²/sin²t and of sec²t.
const CSC2: [f64; 6] = [1.0, 1.0 / 3.0, 1.0 / 15.0, 2.0 / 189.0, 1.0 / 675.0, 2.0 / 10395.0];
const SEC2: [f64; 5] = [1.0, 1.0, 2.0 / 3.0, 17.0 / 45.0, 62.0 / 315.0];

/// Frobenius coefficients of `t^p Σ c_j t^{2j}` for `-ψ'' + Vψ = λψ` near one
/// end, with `g_near` the coupling of that end.
fn frobenius(p: C64, lambda: f64, g_near: f64, g_far: f64) -> Result<[C64; 6]> {
    let v = |k: usize| g_near * CSC2[k] + if k > 0 { g_far * SEC2[k - 1] } else { 0.0 };
    let mut c = [C64::new(0.0, 0.0); 6];
    c[0] = C64::new(1.0, 0.0);
    for j in 1..6 {
        let mut num = -lambda * c[j - 1];
        for k in 1..=j {
            num += v(k) * c[j - k];
        }
        let den = (p + 2.0 * j as f64) * (p + 2.0 * j as f64 - 1.0) - g_near;
        if den.norm() < 1e-9 {
            return Err(Error::Unsupported(format!("resonant Frobenius exponents at p = {p}")));
        }
        c[j] = num / den;
    }
    Ok(c)
}

fn series(c: &[C64; 6], t: f64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &cj| acc * (t * t) + cj)
}

/// The solution selected by `datum` at local angle `t` from its end, energy
/// `λ = E/α²`, up to a constant factor.
fn local_solution(nu: NuValue, datum: &EndDatum, g: (f64, f64), lambda: f64, t: f64) -> Result<f64> {
    let (g_near, g_far) = g;
    let phi = |p: C64| -> Result<C64> { Ok((p * t.ln()).exp() * series(&frobenius(p, lambda, g_near, g_far)?, t)) };
    let half = C64::new(0.5, 0.0);
    match (nu.kind, *datum) {
        (NuKind::RealPositive, _) => {
            let v = nu.magnitude;
            let (a, b) = match datum.real_ratio(v, 1.0) {
                None => (0.0, 1.0),
                Some(s) => (1.0, s),
            };
            let mut out = C64::new(0.0, 0.0);
            if a != 0.0 {
                out += a * phi(half + v)?;
            }
            if b != 0.0 {
                out += b * phi(half - v)?;
            }
            Ok(out.re)
        }
        (NuKind::Imaginary, EndDatum::Phase { theta }) => {
            let a = C64::from_polar(0.5, 0.5 * theta - FRAC_PI_2);
            let i = C64::new(0.0, nu.magnitude);
            Ok((a * phi(half + i)? + a.conj() * phi(half - i)?).re)
        }
        (NuKind::Zero, EndDatum::CriticalPair { d, .. }) => {
            // second solution is ∂φ/∂p at the double exponent
            let h = 1e-5;
            let c = frobenius(half, lambda, g_near, g_far)?;
            let dc_up = frobenius(half + h, lambda, g_near, g_far)?;
            let dc_dn = frobenius(half - h, lambda, g_near, g_far)?;
            let s0 = series(&c, t).re;
            let ds = (series(&dc_up, t) - series(&dc_dn, t)).re / (2.0 * h);
            let u1 = t.sqrt() * s0;
            let u2 = t.sqrt() * (t.ln() * s0 + ds);
            Ok(u1 - d * u2)
        }
        _ => Err(Error::Validation(format!("datum {datum:?} does not fit {nu:?}"))),
    }
}

/// Boundary row `(K, W)` for the end whose first element runs from `t0` to
/// `t0 + h`: `K ψ0 - ψ1/h = λ W ψ0` holds for the local solution to first
/// order in `λ`. This is the Robin condition with the energy dependence of
/// `F` kept, which removes the `O((αR)^{2-2ν})` error of the plain value at
/// real-ν IR and scale ends.
fn boundary_row(nu: NuValue, datum: &EndDatum, g: (f64, f64), t0: f64, h: f64) -> Result<(f64, f64)> {
    let ratio = |lambda: f64| -> Result<f64> {
        let u0 = local_solution(nu, datum, g, lambda, t0)?;
        if u0 == 0.0 || !u0.is_finite() {
            return Err(Error::Numerical(format!(
                "cutoff sits on a node of the local solution at t = {t0}"
            )));
        }
        Ok(local_solution(nu, datum, g, lambda, t0 + h)? / u0)
    };
    let r0 = ratio(0.0)?;
    let r1 = ratio(1.0)? - r0;
    let w = -r1 / h;
    if !(w > 0.0) {
        return Err(Error::Unsupported(format!("boundary mass {w} is not positive")));
    }
    Ok((r0 / h, w))
}

/// Phase distance of `R` from the nearest cotangent pole; `∞` for real data.
fn pole_distance(nu: NuValue, datum: &EndDatum, ar: f64) -> f64 {
    match (nu.kind, *datum) {
        (NuKind::Imaginary, EndDatum::Phase { theta }) => {
            let phase = nu.magnitude * ar.ln() + 0.5 * theta;
            let m = phase.rem_euclid(PI);
            m.min(PI - m)
        }
        _ => f64::INFINITY,
    }
}

/// Largest `R` whose Robin phases clear every pole by `POLE_CLEARANCE`,
/// searched down from `1e-4/α`, or from `MAX_CUTOFF/α` when an end has real ν
/// at the IR point or a scale (or no end is imaginary or critical).
/// Discretization errors near such an end grow like `(αR)^{-2ν}`, and the
/// boundary rows stay exact at the larger cutoff.
pub fn choose_cutoff(spec: &PotentialSpec, renorm: &RenormData) -> Result<f64> {
    let (ns, nc) = (spec.nu_s(), spec.nu_c());
    let amplified = |nu: NuValue, d: &EndDatum| nu.kind == NuKind::RealPositive && *d != EndDatum::FixedPointUV;
    let all_real = ns.kind == NuKind::RealPositive && nc.kind == NuKind::RealPositive;
    let mut ar = if all_real || amplified(ns, &renorm.s) || amplified(nc, &renorm.c) {
        MAX_CUTOFF
    } else {
        DEFAULT_CUTOFF
    };
    for _ in 0..10_000 {
        if pole_distance(ns, &renorm.s, ar) >= POLE_CLEARANCE && pole_distance(nc, &renorm.c, ar) >= POLE_CLEARANCE {
            return Ok(ar / spec.alpha);
        }
        ar *= 1.0 - 1e-3;
    }
    Err(Error::Numerical("no cutoff clears the Robin poles".into()))
}

impl RegulatedProblem {
    pub fn new(spec: &PotentialSpec, renorm: &RenormData, r_cut: f64, grid_n: usize) -> Result<Self> {
        renorm.validate(spec)?;
        let ar = spec.alpha * r_cut;
        if !(ar > 0.0 && ar <= MAX_CUTOFF) {
            return Err(Error::Validation(format!("αR = {ar} must lie in (0, {MAX_CUTOFF}]")));
        }
        if grid_n < MIN_GRID {
            return Err(Error::Validation(format!("grid_n = {grid_n} is below {MIN_GRID}")));
        }
        let s0 = robin_value(spec.nu_s(), &renorm.s, r_cut, spec.alpha)?;
        let c0 = robin_value(spec.nu_c(), &renorm.c, r_cut, spec.alpha)?;
        Ok(RegulatedProblem {
            spec: *spec,
            r_cut,
            robin_s: s0 / r_cut,
            robin_c: c0 / r_cut,
            renorm: *renorm,
            grid_n,
            energy_floor: -(0.01 / ar).powi(2),
        })
    }

    /// Cutoff from [`choose_cutoff`] and the default grid.
    pub fn auto(spec: &PotentialSpec, renorm: &RenormData) -> Result<Self> {
        RegulatedProblem::new(spec, renorm, choose_cutoff(spec, renorm)?, DEFAULT_GRID)
    }

    /// Same datum, different cutoff.
    pub fn with_cutoff(&self, renorm: &RenormData, r_cut: f64) -> Result<Self> {
        let mut p = RegulatedProblem::new(&self.spec, renorm, r_cut, self.grid_n)?;
        p.energy_floor = self.energy_floor;
        Ok(p)
    }
}

/// Nodes in `αx` on `[αR, π/2 - αR]`: geometric up to 0.1 from each end,
/// uniform in between with matching spacing.
pub fn grid(ar: f64, n: usize) -> Vec<f64> {
    let step = RATIO_SCALE / n as f64;
    let h = GEOMETRIC_SPAN * step;
    let mut left = vec![ar];
    let mut t = ar;
    while t < GEOMETRIC_SPAN {
        t *= 1.0 + step;
        left.push(t.min(GEOMETRIC_SPAN));
    }
    let end = FRAC_PI_2 - GEOMETRIC_SPAN;
    let m = ((end - GEOMETRIC_SPAN) / h).ceil() as usize;
    let mut out = left.clone();
    for i in 1..m {
        out.push(GEOMETRIC_SPAN + (end - GEOMETRIC_SPAN) * i as f64 / m as f64);
    }
    out.extend(left.iter().rev().map(|&t| FRAC_PI_2 - t));
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    out
}

/// Diagonal and off-diagonal of the symmetrized discrete operator (`α = 1`).
fn assemble(p: &RegulatedProblem, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = p.spec.alpha;
    let t = grid(a * p.r_cut, n);
    let m = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let (gs, gc) = (p.spec.g_s, p.spec.g_c);
    let mut w = vec![0.0; m];
    let mut k = vec![0.0; m];
    for i in 0..m - 1 {
        w[i] += 0.5 * h[i];
        w[i + 1] += 0.5 * h[i];
        k[i] += 1.0 / h[i];
        k[i + 1] += 1.0 / h[i];
    }
    for i in 0..m {
        let (s, c) = t[i].sin_cos();
        k[i] += w[i] * (gs / (s * s) + gc / (c * c));
    }
    let ar = a * p.r_cut;
    (k[0], w[0]) = boundary_row(p.spec.nu_s(), &p.renorm.s, (gs, gc), ar, h[0])?;
    (k[m - 1], w[m - 1]) = boundary_row(p.spec.nu_c(), &p.renorm.c, (gc, gs), ar, h[m - 2])?;
    let d = (0..m).map(|i| k[i] / w[i]).collect();
    let e = (0..m - 1).map(|i| -1.0 / (h[i] * (w[i] * w[i + 1]).sqrt())).collect();
    Ok((d, e))
}

/// Number of eigenvalues below `x` (LDLᵀ inertia).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - x - e[i - 1] * e[i - 1] / q;
        }
        if q == 0.0 {
            q = -f64::EPSILON * (1.0 + x.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < e.len() { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `index`-th smallest eigenvalue (from 0) by bisection on the Sturm count.
fn kth_eigenvalue(d: &[f64], e: &[f64], index: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * mid.abs().max(1.0) {
            break;
        }
        if sturm_count(d, e, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalues `λ = E/α²` above the energy floor on grid size `n`, lowest first.
pub fn eigenvalues(p: &RegulatedProblem, n: usize, count: usize) -> Result<Vec<f64>> {
    let (d, e) = assemble(p, n)?;
    let (lo, hi) = gershgorin(&d, &e);
    let floor = p.energy_floor.max(lo);
    let first = sturm_count(&d, &e, floor);
    let last = (first + count).min(d.len());
    Ok((first..last)
        .into_par_iter()
        .map(|i| kth_eigenvalue(&d, &e, i, floor, hi))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleLevel {
    pub level: EnergyLevel,
    /// Extrapolated `E/α²`.
    pub lambda: f64,
    /// `|λ_2n - λ_n| / 3`.
    pub error: f64,
}

fn level_of(index: usize, lambda: f64) -> EnergyLevel {
    let point = if lambda >= 0.0 {
        EnergyPoint::positive(lambda.sqrt())
    } else {
        EnergyPoint::negative((-lambda).sqrt())
    };
    EnergyLevel::closed(index, point, None)
}

/// Eigenvalues in `[lo, hi)` on grid size `n`, ascending; `lo` is raised to
/// the energy floor.
pub fn eigenvalues_between(p: &RegulatedProblem, n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let (d, e) = assemble(p, n)?;
    let (g_lo, g_hi) = gershgorin(&d, &e);
    let lo = lo.max(p.energy_floor).max(g_lo);
    let hi = hi.min(g_hi);
    if hi <= lo {
        return Ok(Vec::new());
    }
    let first = sturm_count(&d, &e, lo);
    let last = sturm_count(&d, &e, hi);
    Ok((first..last)
        .into_par_iter()
        .map(|i| kth_eigenvalue(&d, &e, i, lo, hi))
        .collect())
}

/// Pairs each coarse level with the nearest fine one and extrapolates.
/// Inner `Err` when some level moves more than the extrapolation tolerance allows.
fn extrapolate(coarse: &[f64], fine: &[f64]) -> Result<std::result::Result<Vec<OracleLevel>, String>> {
    let mut out = Vec::with_capacity(coarse.len());
    for (i, &l1) in coarse.iter().enumerate() {
        // a level near a window edge may be missing on one grid
        let l2 = *fine
            .iter()
            .min_by(|a, b| (*a - l1).abs().total_cmp(&(*b - l1).abs()))
            .ok_or_else(|| Error::Numerical("no eigenvalues on the refined grid".into()))?;
        let lambda = (4.0 * l2 - l1) / 3.0;
        let error = (l2 - l1).abs() / 3.0;
        if error > EXTRAPOLATION_TOL * lambda.abs().max(1.0) {
            return Ok(Err(format!(
                "grid too coarse: level {i} moves by {:.3e} under refinement",
                (l2 - l1).abs()
            )));
        }
        out.push(OracleLevel {
            level: level_of(i, lambda),
            lambda,
            error,
        });
    }
    Ok(Ok(out))
}

/// Extrapolates from grids `n` and `2n`, doubling `n` up to
/// [`MAX_REFINEMENTS`] times until every level passes.
fn refine(
    p: &RegulatedProblem,
    coarse: impl Fn(usize) -> Result<Vec<f64>>,
    fine: impl Fn(usize) -> Result<Vec<f64>>,
) -> Result<Vec<OracleLevel>> {
    let mut last = String::new();
    for k in 0..=MAX_REFINEMENTS {
        let n = p.grid_n << k;
        match extrapolate(&coarse(n)?, &fine(2 * n)?)? {
            Ok(levels) => return Ok(levels),
            Err(msg) => last = msg,
        }
    }
    Err(Error::Numerical(format!(
        "{last} at n = {}",
        p.grid_n << MAX_REFINEMENTS
    )))
}

/// Lowest `count` levels above the floor, Richardson-extrapolated from
/// grids `n` and `2n`.
pub fn eigen_low(p: &RegulatedProblem, count: usize) -> Result<Vec<OracleLevel>> {
    refine(p, |n| eigenvalues(p, n, count), |n| eigenvalues(p, n, count + 2))
}

/// Levels with `λ = E/α²` in `[lo, hi)`, extrapolated as in [`eigen_low`].
pub fn eigen_window(p: &RegulatedProblem, lo: f64, hi: f64) -> Result<Vec<OracleLevel>> {
    if !(lo < hi) {
        return Err(Error::Validation(format!("empty window [{lo}, {hi})")));
    }
    let pad = 0.05 * (hi - lo) + 1.0;
    refine(
        p,
        |n| eigenvalues_between(p, n, lo, hi),
        |n| eigenvalues_between(p, n, lo - pad, hi + pad),
    )
}
