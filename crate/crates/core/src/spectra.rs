//! Root finding over energy and the regime dispatcher for the single well.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::connection::{
    critical_pair_q, critical_residual, end_pair, green_residual, propagate_reduced, theta2, zero_residual,
    GreenBranch, MobiusParts, Scaled,
};
use crate::error::{Error, Result};
use crate::model::{
    classify, CouplingRegime, EndDatum, EnergyPoint, EnergySign, NuKind, NuValue, PotentialSpec, RenormData,
};
use crate::specfun::{wrap_angle, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualKind {
    PhaseTheta1,
    PhaseTheta2,
    GreenBarTheta,
    WeakScaleRatio,
    CriticalAppendix,
    DoubleWellEven,
    DoubleWellOdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Real residual of a spectral condition; zero at eigenvalues.
pub struct SpectralResidual<'a> {
    pub kind: ResidualKind,
    pub eval: Box<dyn Fn(EnergyPoint) -> Result<f64> + Send + Sync + 'a>,
    /// Sign changes with a larger step are wrap jumps, not roots.
    pub jump: f64,
    /// Known discontinuities on the positive branch (`k/α`), masked in the scan.
    pub poles: Vec<f64>,
}

impl<'a> SpectralResidual<'a> {
    pub fn new(kind: ResidualKind, eval: impl Fn(EnergyPoint) -> Result<f64> + Send + Sync + 'a) -> Self {
        SpectralResidual {
            kind,
            eval: Box::new(eval),
            jump: PI,
            poles: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub window: (f64, f64),
    pub grid_step: f64,
    pub bisect_tol: f64,
    pub kappa_cap: f64,
    /// Uniform spacing below this value, geometric with ratio `1 + grid_step/2` above.
    pub uniform_until: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            window: (0.0, 500.0),
            grid_step: 1e-3,
            bisect_tol: 1e-10,
            kappa_cap: 500.0,
            uniform_until: 20.0,
        }
    }
}

pub const MAX_BISECTIONS: usize = 200;
pub const ROOT_RESIDUAL_TOL: f64 = 1e-6;

impl ScanConfig {
    pub fn with_window(lo: f64, hi: f64) -> Self {
        ScanConfig {
            window: (lo, hi),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Validation(format!("bad window ({lo}, {hi})")));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= (hi - lo) / 10.0) {
            return Err(Error::Validation(format!(
                "grid step {} must lie in (0, (max - min)/10]",
                self.grid_step
            )));
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol <= 1e-10) {
            return Err(Error::Validation(format!(
                "bisection tolerance {} must lie in (0, 1e-10]",
                self.bisect_tol
            )));
        }
        if !(self.kappa_cap > 0.0 && self.kappa_cap.is_finite()) {
            return Err(Error::Validation(format!("bad kappa cap {}", self.kappa_cap)));
        }
        Ok(())
    }

    /// Scan grid on `[lo, hi]`, never touching zero energy.
    pub fn grid(&self, hi: f64) -> Vec<f64> {
        let h = self.grid_step;
        let lo = self.window.0.max(h);
        let mut xs = Vec::new();
        let mut i = 0usize;
        loop {
            let x = lo + h * i as f64;
            if x > hi || x > self.uniform_until.max(lo) {
                break;
            }
            xs.push(x);
            i += 1;
        }
        let ratio = 1.0 + 0.5 * h;
        let mut x = *xs.last().unwrap_or(&lo);
        loop {
            x *= ratio;
            if x > hi {
                break;
            }
            xs.push(x);
        }
        if xs.last().is_some_and(|&l| l < hi) {
            xs.push(hi);
        }
        xs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawRoot {
    pub x: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
}

fn eval_or_nan(f: &(dyn Fn(f64) -> Result<f64> + Sync), x: f64) -> Result<f64> {
    match f(x) {
        Ok(v) => Ok(v),
        Err(Error::GammaPole { .. }) | Err(Error::Degenerate(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

/// Every sign change of `f` between adjacent grid points that is neither a
/// wrap jump (`|Δf| >= jump`) nor within `2·grid_step` of a listed pole is
/// refined by bisection to `bisect_tol`.
pub fn find_roots(
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
    grid: &[f64],
    cfg: &ScanConfig,
    jump: f64,
    poles: &[f64],
) -> Result<Vec<RawRoot>> {
    let ys: Vec<f64> = grid
        .par_iter()
        .map(|&x| eval_or_nan(f, x))
        .collect::<Result<Vec<_>>>()?;
    let mask = 2.0 * cfg.grid_step;
    let brackets: Vec<usize> = (0..grid.len().saturating_sub(1))
        .filter(|&i| {
            let (fa, fb) = (ys[i], ys[i + 1]);
            fa.is_finite()
                && fb.is_finite()
                && (fa < 0.0) != (fb < 0.0)
                && (fa - fb).abs() < jump
                && !poles.iter().any(|&p| p >= grid[i] - mask && p <= grid[i + 1] + mask)
        })
        .collect();
    let refined: Vec<Option<RawRoot>> = brackets
        .par_iter()
        .map(|&i| bisect(f, grid[i], grid[i + 1], ys[i], cfg.bisect_tol, jump))
        .collect::<Result<Vec<_>>>()?;
    Ok(refined.into_iter().flatten().collect())
}

fn bisect(
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
    a0: f64,
    b0: f64,
    fa0: f64,
    tol: f64,
    jump: f64,
) -> Result<Option<RawRoot>> {
    let (mut a, mut b, mut fa) = (a0, b0, fa0);
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol.max(4.0 * f64::EPSILON * b.abs()) {
            let x = 0.5 * (a + b);
            let r = f(x)?;
            // a discontinuity that slipped through the jump filter
            if !(r.abs() <= ROOT_RESIDUAL_TOL) || r.abs() >= jump / 2.0 {
                return Ok(None);
            }
            return Ok(Some(RawRoot {
                x,
                residual: r,
                bracket: (a0, b0),
            }));
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.is_nan() {
            return Ok(None);
        }
        if (fa < 0.0) != (fm < 0.0) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not converge on [{a0}, {b0}] after {MAX_BISECTIONS} steps"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    /// Position within its branch, counted from the smallest `k/α` or `κ/α`.
    pub index: usize,
    pub point: EnergyPoint,
    pub parity: Option<Parity>,
    pub residual_at_root: f64,
    pub bracket: (f64, f64),
    /// Root sits at the edge of the scan near zero energy.
    pub threshold: bool,
}

impl EnergyLevel {
    pub fn closed(index: usize, point: EnergyPoint, parity: Option<Parity>) -> Self {
        EnergyLevel {
            index,
            point,
            parity,
            residual_at_root: 0.0,
            bracket: (point.magnitude, point.magnitude),
            threshold: point.magnitude == 0.0,
        }
    }
}

/// Scan both energy branches of a residual.
pub fn scan_branches(res: &SpectralResidual, cfg: &ScanConfig) -> Result<Vec<EnergyLevel>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for sign in [EnergySign::Negative, EnergySign::Positive] {
        let hi = match sign {
            EnergySign::Negative => cfg.window.1.min(cfg.kappa_cap),
            EnergySign::Positive => cfg.window.1,
        };
        if hi <= cfg.window.0.max(cfg.grid_step) {
            continue;
        }
        let grid = cfg.grid(hi);
        let f = |x: f64| (res.eval)(EnergyPoint { sign, magnitude: x });
        let poles: &[f64] = if sign == EnergySign::Positive { &res.poles } else { &[] };
        let roots = find_roots(&f, &grid, cfg, res.jump, poles)?;
        for (i, r) in roots.iter().enumerate() {
            out.push(EnergyLevel {
                index: i,
                point: EnergyPoint { sign, magnitude: r.x },
                parity: None,
                residual_at_root: r.residual,
                bracket: r.bracket,
                threshold: r.x < 2.0 * cfg.grid_step + cfg.window.0,
            });
        }
    }
    Ok(out)
}

/// Merge level lists, order by energy and renumber within each branch.
pub fn order_levels(mut levels: Vec<EnergyLevel>) -> Vec<EnergyLevel> {
    levels.sort_by(|a, b| a.point.energy().partial_cmp(&b.point.energy()).unwrap());
    levels.dedup_by(|a, b| {
        a.point.sign == b.point.sign
            && a.parity == b.parity
            && (a.point.magnitude - b.point.magnitude).abs() <= 1e-9 * b.point.magnitude.max(1.0)
    });
    let n_neg = levels.iter().filter(|l| l.point.sign == EnergySign::Negative).count();
    let mut pos = 0;
    for (i, l) in levels.iter_mut().enumerate() {
        if l.point.sign == EnergySign::Negative {
            l.index = n_neg - 1 - i;
        } else {
            l.index = pos;
            pos += 1;
        }
    }
    levels
}

/// `k_n/α = ν_s + ν_c + 2n + 1`.
pub fn susy_spectrum(nu_s: f64, nu_c: f64, n_max: usize) -> Result<Vec<EnergyLevel>> {
    if !(nu_s >= 0.0 && nu_c >= 0.0) {
        return Err(Error::Regime(format!(
            "closed form needs real order parameters, got ({nu_s}, {nu_c})"
        )));
    }
    Ok((0..=n_max)
        .map(|n| {
            let k = nu_s + nu_c + 2.0 * n as f64 + 1.0;
            EnergyLevel::closed(n, EnergyPoint::positive(k), None)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GreenForm {
    /// Union of both roots of the quadratic in `e^{-iθ̄}`.
    #[default]
    Exact,
    /// The tangent equality, which adds spurious `θ̄ + π` solutions.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SolveOptions {
    pub green_form: GreenForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub spec: PotentialSpec,
    pub levels: Vec<EnergyLevel>,
    /// `κ_{n+1}/κ_n` along the negative branch, shallowest first.
    pub efimov_ratios: Vec<f64>,
    pub regime: (CouplingRegime, CouplingRegime),
    pub renorm: RenormData,
    pub residual: ResidualKind,
}

impl SpectrumReport {
    /// `κ/α` of the negative levels, shallowest first.
    pub fn kappas(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .levels
            .iter()
            .filter(|l| l.point.sign == EnergySign::Negative)
            .map(|l| l.point.magnitude)
            .collect();
        k.sort_by(|a, b| a.partial_cmp(b).unwrap());
        k
    }

    pub fn positive(&self) -> Vec<f64> {
        self.levels
            .iter()
            .filter(|l| l.point.sign == EnergySign::Positive)
            .map(|l| l.point.magnitude)
            .collect()
    }
}

pub fn consecutive_ratios(kappas: &[f64]) -> Vec<f64> {
    kappas.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Sin-end ratio `r_s` as a projective pair, or the critical pair.
enum EndForm {
    Pair(C64, C64),
    Critical(f64),
}

fn end_form(datum: &EndDatum, nu: NuValue, alpha: f64) -> Result<EndForm> {
    match *datum {
        EndDatum::CriticalPair { d, .. } => Ok(EndForm::Critical(d)),
        _ => {
            let (p, q) = end_pair(datum, nu, alpha)?;
            Ok(EndForm::Pair(p, q))
        }
    }
}

/// `(num, den)` with `r_c = num/den`, for any sin-end datum.
fn far_pair(nu_s: NuValue, nu_c: NuValue, s_form: &EndForm, drop_c: bool, q: C64) -> Result<(Scaled, Scaled)> {
    match *s_form {
        EndForm::Pair(a, b) => {
            let parts = MobiusParts::new(nu_s.as_complex(), nu_c.as_complex(), q)?;
            propagate_reduced(&parts, a, b, drop_c)
        }
        EndForm::Critical(d) => critical_pair_q(nu_c.as_complex(), d, q),
    }
}

/// Projective angle of a real ratio `num/den` against a real target `p/q`.
fn real_ratio_residual(num: Scaled, den: Scaled, p: f64, q: f64) -> f64 {
    let (n, d) = (num_real(num, den), num_real(den, num));
    wrap_angle(2.0 * n.atan2(d) - 2.0 * p.atan2(q))
}

/// Real part of `x` scaled by the larger of the two magnitudes.
fn num_real(x: Scaled, other: Scaled) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let m = if other.is_zero() { x.m } else { x.m.max(other.m) };
    x.v.re * (x.m - m).exp()
}

/// Residual for the single well with the given data, after orienting the
/// problem so that the sin end carries the more singular datum.
pub fn build_residual<'a>(
    spec: &PotentialSpec,
    renorm: &RenormData,
    opts: SolveOptions,
) -> Result<Vec<SpectralResidual<'a>>> {
    renorm.validate(spec)?;
    let rank = |nu: NuValue| match nu.kind {
        NuKind::Zero => 2,
        NuKind::Imaginary => 1,
        NuKind::RealPositive => 0,
    };
    let (spec, renorm) = if rank(spec.nu_c()) > rank(spec.nu_s()) {
        (spec.swapped(), renorm.swapped())
    } else {
        (*spec, *renorm)
    };
    let (nu_s, nu_c) = (spec.nu_s(), spec.nu_c());
    let alpha = spec.alpha;
    if nu_c.kind == NuKind::Zero {
        return Err(Error::Unsupported("both couplings on the critical line".into()));
    }
    let s_form = end_form(&renorm.s, nu_s, alpha)?;

    match (nu_s.kind, nu_c.kind, renorm.s, renorm.c) {
        (NuKind::Imaginary, NuKind::Imaginary, EndDatum::Phase { theta: ts }, EndDatum::Phase { theta: tc }) => {
            let (a, b) = (nu_s.magnitude, nu_c.magnitude);
            let branches: &[GreenBranch] = match opts.green_form {
                GreenForm::Exact => &[GreenBranch::Plus, GreenBranch::Minus],
                GreenForm::Tangent => &[GreenBranch::Tangent],
            };
            Ok(branches
                .iter()
                .map(|&br| {
                    let mut r = SpectralResidual::new(ResidualKind::GreenBarTheta, move |e| {
                        green_residual(a, b, ts, tc, e, br)
                    });
                    if br == GreenBranch::Tangent {
                        r.jump = PI / 2.0;
                    }
                    r
                })
                .collect())
        }
        (NuKind::Zero, NuKind::Imaginary, _, EndDatum::Phase { theta: tc }) => {
            let d = match renorm.s {
                EndDatum::CriticalPair { d, .. } => d,
                _ => unreachable!("validated"),
            };
            let b = nu_c.magnitude;
            Ok(vec![SpectralResidual::new(ResidualKind::CriticalAppendix, move |e| {
                critical_residual(b, d, tc, e)
            })])
        }
        (NuKind::Imaginary, NuKind::RealPositive, EndDatum::Phase { theta: ts }, c_datum) => {
            let a = nu_s.magnitude;
            let c = nu_c.magnitude;
            let target = c_datum.real_ratio(c, alpha);
            let kind = if target == Some(0.0) {
                ResidualKind::PhaseTheta1
            } else {
                ResidualKind::PhaseTheta2
            };
            Ok(vec![SpectralResidual::new(kind, move |e| {
                Ok(wrap_angle(theta2(a, c, target, e)? - ts))
            })])
        }
        (_, NuKind::RealPositive, _, c_datum) => {
            let target = c_datum.real_ratio(nu_c.magnitude, alpha);
            let (p, q) = match target {
                Some(t) => (t, 1.0),
                None => (1.0, 0.0),
            };
            let drop_c = target.is_none() || target == Some(0.0);
            let kind = if nu_s.kind == NuKind::Zero {
                ResidualKind::CriticalAppendix
            } else {
                ResidualKind::WeakScaleRatio
            };
            Ok(vec![SpectralResidual::new(kind, move |e| {
                // at a fixed point only one coefficient matters; the other may
                // carry a Γ(-ν_c) pole for integer ν_c
                match target {
                    Some(0.0) => return zero_residual(|q| Ok(far_pair(nu_s, nu_c, &s_form, true, q)?.0), e),
                    None => return zero_residual(|q| Ok(far_pair(nu_s, nu_c, &s_form, true, q)?.1), e),
                    _ => {}
                }
                let (num, den) = far_pair(nu_s, nu_c, &s_form, drop_c, e.q())?;
                if num.is_zero() && den.is_zero() {
                    return Err(Error::Degenerate("far-end pair vanishes".into()));
                }
                Ok(real_ratio_residual(num, den, p, q))
            })])
        }
        _ => Err(Error::Unsupported(format!(
            "no spectral condition for order parameters {nu_s:?}, {nu_c:?}"
        ))),
    }
}

pub fn solve_spectrum(spec: &PotentialSpec, renorm: &RenormData, cfg: &ScanConfig) -> Result<SpectrumReport> {
    solve_spectrum_with(spec, renorm, cfg, SolveOptions::default())
}

pub fn solve_spectrum_with(
    spec: &PotentialSpec,
    renorm: &RenormData,
    cfg: &ScanConfig,
    opts: SolveOptions,
) -> Result<SpectrumReport> {
    cfg.validate()?;
    let residuals = build_residual(spec, renorm, opts)?;
    let kind = residuals[0].kind;
    let mut levels = Vec::new();
    for r in &residuals {
        levels.extend(scan_branches(r, cfg)?);
    }
    let levels = order_levels(levels);
    let mut report = SpectrumReport {
        spec: *spec,
        levels,
        efimov_ratios: Vec::new(),
        regime: classify(spec),
        renorm: *renorm,
        residual: kind,
    };
    report.efimov_ratios = consecutive_ratios(&report.kappas());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfimovEntry {
    /// Branch indices `(n, n+1)` of the ratio `κ_{n+1}/κ_n`.
    pub levels: (usize, usize),
    pub ratio: f64,
    /// Candidate laws `(label, value)`.
    pub predicted: Vec<(String, f64)>,
    /// Smallest `|ratio - value|` over the candidates.
    pub deviation: f64,
}

pub fn efimov_diagnostics(report: &SpectrumReport) -> Vec<EfimovEntry> {
    let mut laws = Vec::new();
    let (ns, nc) = (report.spec.nu_s(), report.spec.nu_c());
    for (name, nu) in [("s", ns), ("c", nc)] {
        if nu.is_imaginary() {
            laws.push((format!("exp(pi/|nu_{name}|)"), (PI / nu.magnitude).exp()));
        }
    }
    if ns.is_imaginary() && nc.is_imaginary() {
        for (name, nu) in [("s", ns), ("c", nc)] {
            laws.push((format!("exp(pi/(2|nu_{name}|))"), (PI / (2.0 * nu.magnitude)).exp()));
        }
    }
    report
        .efimov_ratios
        .iter()
        .enumerate()
        .map(|(i, &ratio)| {
            let deviation = laws
                .iter()
                .map(|(_, v)| (ratio - v).abs())
                .fold(f64::INFINITY, f64::min);
            EfimovEntry {
                levels: (i, i + 1),
                ratio,
                predicted: laws.clone(),
                deviation,
            }
        })
        .collect()
}
