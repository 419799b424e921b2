//! Potential definition, order parameters, coupling regimes and SUSY data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::{wrap_angle, C64};

/// Couplings equal to these within this tolerance land on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub alpha: f64,
    pub g_s: f64,
    pub g_c: f64,
}

impl PotentialSpec {
    pub fn new(alpha: f64, g_s: f64, g_c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
        }
        if !g_s.is_finite() || !g_c.is_finite() {
            return Err(Error::Validation("couplings must be finite".into()));
        }
        Ok(PotentialSpec { alpha, g_s, g_c })
    }

    /// Build from order parameters: `g = ν² - 1/4` (imaginary ν gives `g < -1/4`).
    pub fn from_nu(alpha: f64, nu_s: NuValue, nu_c: NuValue) -> Result<Self> {
        Self::new(alpha, nu_s.coupling(), nu_c.coupling())
    }

    pub fn nu_s(&self) -> NuValue {
        nu_from_g(self.g_s)
    }

    pub fn nu_c(&self) -> NuValue {
        nu_from_g(self.g_c)
    }

    /// Same problem seen from the other end (x -> π/2α - x).
    pub fn swapped(&self) -> Self {
        PotentialSpec {
            alpha: self.alpha,
            g_s: self.g_c,
            g_c: self.g_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NuKind {
    RealPositive,
    Zero,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuValue {
    pub kind: NuKind,
    pub magnitude: f64,
}

impl NuValue {
    pub fn real(nu: f64) -> Self {
        if nu == 0.0 {
            NuValue {
                kind: NuKind::Zero,
                magnitude: 0.0,
            }
        } else {
            NuValue {
                kind: NuKind::RealPositive,
                magnitude: nu.abs(),
            }
        }
    }

    pub fn imaginary(mag: f64) -> Self {
        if mag == 0.0 {
            NuValue {
                kind: NuKind::Zero,
                magnitude: 0.0,
            }
        } else {
            NuValue {
                kind: NuKind::Imaginary,
                magnitude: mag.abs(),
            }
        }
    }

    pub fn as_complex(&self) -> C64 {
        match self.kind {
            NuKind::RealPositive => C64::new(self.magnitude, 0.0),
            NuKind::Zero => C64::new(0.0, 0.0),
            NuKind::Imaginary => C64::new(0.0, self.magnitude),
        }
    }

    pub fn is_imaginary(&self) -> bool {
        self.kind == NuKind::Imaginary
    }

    pub fn is_real(&self) -> bool {
        self.kind == NuKind::RealPositive
    }

    pub fn coupling(&self) -> f64 {
        match self.kind {
            NuKind::RealPositive => self.magnitude * self.magnitude - 0.25,
            NuKind::Zero => -0.25,
            NuKind::Imaginary => -0.25 - self.magnitude * self.magnitude,
        }
    }
}

pub fn nu_from_g(g: f64) -> NuValue {
    if g > -0.25 {
        NuValue {
            kind: NuKind::RealPositive,
            magnitude: (0.25 + g).sqrt(),
        }
    } else if g == -0.25 {
        NuValue {
            kind: NuKind::Zero,
            magnitude: 0.0,
        }
    } else {
        NuValue {
            kind: NuKind::Imaginary,
            magnitude: (-g - 0.25).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingRegime {
    StrongRepulsive,
    WeakMedium,
    CriticalBF,
    StrongAttractive,
}

pub fn regime_of(g: f64) -> CouplingRegime {
    if g >= 0.75 {
        CouplingRegime::StrongRepulsive
    } else if g > -0.25 {
        CouplingRegime::WeakMedium
    } else if g == -0.25 {
        CouplingRegime::CriticalBF
    } else {
        CouplingRegime::StrongAttractive
    }
}

pub fn classify(spec: &PotentialSpec) -> (CouplingRegime, CouplingRegime) {
    (regime_of(spec.g_s), regime_of(spec.g_c))
}

/// Boundary datum surviving the cutoff limit at one singular end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EndDatum {
    /// L = 0, B = 0.
    FixedPointUV,
    /// L = ∞, A = 0.
    FixedPointIR,
    /// Scale L ≥ 0 with sign ε = ±1.
    Scale {
        length: f64,
        epsilon: f64,
    },
    Phase {
        theta: f64,
    },
    /// Critical-line pair; D = 0 drops the logarithmic solution.
    CriticalPair {
        d: f64,
        theta: f64,
    },
}

impl EndDatum {
    pub fn phase(theta: f64) -> Self {
        EndDatum::Phase {
            theta: wrap_angle(theta),
        }
    }

    pub fn critical(d: f64, theta: f64) -> Self {
        EndDatum::CriticalPair {
            d,
            theta: wrap_angle(theta),
        }
    }

    /// Scale datum from the combination `ε(αL)^{2ν}` entering the equations.
    pub fn from_scale_term(term: f64, nu: f64, alpha: f64) -> Result<Self> {
        if !term.is_finite() || !(nu > 0.0) {
            return Err(Error::Validation(format!("bad scale term {term} for nu = {nu}")));
        }
        let epsilon = if term < 0.0 { -1.0 } else { 1.0 };
        let length = term.abs().powf(1.0 / (2.0 * nu)) / alpha;
        Ok(EndDatum::Scale { length, epsilon })
    }

    /// Dimensionless boundary ratio `α^{2ν} B / A` for real ν; `None` stands for ∞.
    pub fn real_ratio(&self, nu: f64, alpha: f64) -> Option<f64> {
        match *self {
            EndDatum::FixedPointUV => Some(0.0),
            EndDatum::FixedPointIR => None,
            EndDatum::Scale { length, epsilon } => {
                if length.is_infinite() {
                    None
                } else {
                    Some(epsilon * (alpha * length).powf(2.0 * nu))
                }
            }
            _ => Some(f64::NAN),
        }
    }

    fn fits(&self, regime: CouplingRegime) -> bool {
        use CouplingRegime::*;
        match self {
            EndDatum::FixedPointUV => matches!(regime, StrongRepulsive | WeakMedium),
            EndDatum::FixedPointIR | EndDatum::Scale { .. } => regime == WeakMedium,
            EndDatum::Phase { .. } => regime == StrongAttractive,
            EndDatum::CriticalPair { .. } => regime == CriticalBF,
        }
    }

    fn check_values(&self) -> Result<()> {
        match *self {
            EndDatum::Scale { length, epsilon } => {
                if !(length >= 0.0) || (epsilon != 1.0 && epsilon != -1.0) {
                    return Err(Error::Validation(format!(
                        "scale datum needs L >= 0 and epsilon = ±1, got L = {length}, eps = {epsilon}"
                    )));
                }
            }
            EndDatum::Phase { theta } | EndDatum::CriticalPair { theta, .. } if !(-PI..PI).contains(&theta) => {
                return Err(Error::Validation(format!("theta {theta} not wrapped to [-π, π)")));
            }
            _ => {}
        }
        if let EndDatum::CriticalPair { d, .. } = *self {
            if !d.is_finite() {
                return Err(Error::Validation("D must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormData {
    pub s: EndDatum,
    pub c: EndDatum,
}

impl RenormData {
    pub fn new(s: EndDatum, c: EndDatum) -> Self {
        RenormData { s, c }
    }

    pub fn swapped(&self) -> Self {
        RenormData { s: self.c, c: self.s }
    }

    pub fn validate(&self, spec: &PotentialSpec) -> Result<()> {
        let (rs, rc) = classify(spec);
        for (end, datum, regime) in [("sin", &self.s, rs), ("cos", &self.c, rc)] {
            datum.check_values()?;
            if !datum.fits(regime) {
                return Err(Error::Validation(format!(
                    "{end}-end datum {datum:?} does not match regime {regime:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergySign {
    Positive,
    Negative,
}

/// Energy as `k/α` (positive) or `κ/α` (negative, `k = iκ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub sign: EnergySign,
    pub magnitude: f64,
}

impl EnergyPoint {
    pub fn positive(k: f64) -> Self {
        EnergyPoint {
            sign: EnergySign::Positive,
            magnitude: k,
        }
    }

    pub fn negative(kappa: f64) -> Self {
        EnergyPoint {
            sign: EnergySign::Negative,
            magnitude: kappa,
        }
    }

    /// `q = k/α` as it enters the Γ arguments.
    pub fn q(&self) -> C64 {
        match self.sign {
            EnergySign::Positive => C64::new(self.magnitude, 0.0),
            EnergySign::Negative => C64::new(0.0, self.magnitude),
        }
    }

    /// `E · 2m/(ħ² α²)`
    pub fn energy(&self) -> f64 {
        match self.sign {
            EnergySign::Positive => self.magnitude * self.magnitude,
            EnergySign::Negative => -self.magnitude * self.magnitude,
        }
    }
}

fn check_interior(spec: &PotentialSpec, x: f64) -> Result<()> {
    let end = PI / (2.0 * spec.alpha);
    if !(x > 0.0 && x < end) {
        return Err(Error::Domain(format!("x = {x} outside (0, {end})")));
    }
    Ok(())
}

/// V(x) = α²(g_s/sin²(αx) + g_c/cos²(αx)).
pub fn potential_value(spec: &PotentialSpec, x: f64) -> Result<f64> {
    check_interior(spec, x)?;
    let (s, c) = (spec.alpha * x).sin_cos();
    Ok(spec.alpha * spec.alpha * (spec.g_s / (s * s) + spec.g_c / (c * c)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superpotential {
    pub w: f64,
    /// dW/dx
    pub dw: f64,
    /// k₀² = -α²(ν_s + ν_c + 1)²; the potential is W² - W' - k₀².
    pub k0_squared: f64,
}

fn real_nus(spec: &PotentialSpec) -> Result<(f64, f64)> {
    let (ns, nc) = (spec.nu_s(), spec.nu_c());
    if ns.is_imaginary() || nc.is_imaginary() || ns.kind == NuKind::Zero || nc.kind == NuKind::Zero {
        return Err(Error::Regime(format!(
            "real order parameters required, got g_s = {}, g_c = {}",
            spec.g_s, spec.g_c
        )));
    }
    Ok((ns.magnitude, nc.magnitude))
}

pub fn superpotential_value(spec: &PotentialSpec, x: f64) -> Result<Superpotential> {
    let (ns, nc) = real_nus(spec)?;
    check_interior(spec, x)?;
    let a = spec.alpha;
    let (s, c) = (a * x).sin_cos();
    let w = -a * (ns + 0.5) * c / s + a * (nc + 0.5) * s / c;
    let dw = a * a * ((ns + 0.5) / (s * s) + (nc + 0.5) / (c * c));
    let k0 = ns + nc + 1.0;
    Ok(Superpotential {
        w,
        dw,
        k0_squared: -a * a * k0 * k0,
    })
}

/// Shape-invariant partner: ν -> ν + 1 at both ends.
pub fn susy_partner(spec: &PotentialSpec) -> Result<PotentialSpec> {
    let (ns, nc) = real_nus(spec)?;
    PotentialSpec::new(spec.alpha, (ns + 1.0).powi(2) - 0.25, (nc + 1.0).powi(2) - 0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nu_branches() {
        assert_eq!(nu_from_g(0.0), NuValue::real(0.5));
        assert_eq!(nu_from_g(-0.25).kind, NuKind::Zero);
        let n = nu_from_g(-0.25 - 4.0 * PI * PI);
        assert_eq!(n.kind, NuKind::Imaginary);
        assert_relative_eq!(n.magnitude, 2.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn regimes() {
        use CouplingRegime::*;
        let p = |gs, gc| classify(&PotentialSpec::new(1.0, gs, gc).unwrap());
        assert_eq!(p(1.0, 1.0), (StrongRepulsive, StrongRepulsive));
        assert_eq!(p(0.0, -1.0), (WeakMedium, StrongAttractive));
        assert_eq!(p(0.75, -0.25), (StrongRepulsive, CriticalBF));
    }

    #[test]
    fn potential_examples() {
        let s = PotentialSpec::new(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(potential_value(&s, PI / 4.0).unwrap(), 4.0, max_relative = 1e-14);
        let s = PotentialSpec::new(2.0, 1.0, 2.0).unwrap();
        let v = potential_value(&s, PI / 12.0).unwrap();
        assert_relative_eq!(v, 4.0 * (4.0 + 8.0 / 3.0), max_relative = 1e-13);
        assert!(matches!(potential_value(&s, PI / 4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn superpotential_examples() {
        let s = PotentialSpec::new(1.0, 0.0, 0.0).unwrap();
        assert!(superpotential_value(&s, PI / 4.0).unwrap().w.abs() < 1e-14);
        let s = PotentialSpec::from_nu(1.0, NuValue::real(0.4), NuValue::real(2.5)).unwrap();
        let w = superpotential_value(&s, 1.0).unwrap();
        assert_relative_eq!((-w.k0_squared).sqrt(), 3.9, max_relative = 1e-14);
        assert!(w.k0_squared < 0.0);
    }

    #[test]
    fn superpotential_rebuilds_potential() {
        let s = PotentialSpec::from_nu(1.0, NuValue::real(0.4), NuValue::real(2.5)).unwrap();
        let x = PI / 3.0;
        let h = 1e-5;
        let w = |x| superpotential_value(&s, x).unwrap();
        let dw = (w(x + h).w - w(x - h).w) / (2.0 * h);
        let v = w(x).w.powi(2) - dw - w(x).k0_squared;
        assert_relative_eq!(v, potential_value(&s, x).unwrap(), max_relative = 1e-8);
    }

    #[test]
    fn partner() {
        let s = PotentialSpec::new(1.0, 0.0, 0.0).unwrap();
        let p = susy_partner(&s).unwrap();
        assert_relative_eq!(p.g_s, 2.0);
        let s = PotentialSpec::from_nu(1.0, NuValue::real(0.4), NuValue::real(2.5)).unwrap();
        let p = susy_partner(&s).unwrap();
        assert_relative_eq!(p.nu_s().magnitude, 1.4, max_relative = 1e-14);
        assert_eq!(
            classify(&p),
            (CouplingRegime::StrongRepulsive, CouplingRegime::StrongRepulsive)
        );
        let pp = susy_partner(&p).unwrap();
        assert_relative_eq!(pp.nu_c().magnitude, 4.5, max_relative = 1e-14);
        let bad = PotentialSpec::new(1.0, -1.0, 0.0).unwrap();
        assert!(matches!(susy_partner(&bad), Err(Error::Regime(_))));
    }

    #[test]
    fn renorm_validation() {
        let spec = PotentialSpec::new(1.0, -1.0, 0.24).unwrap();
        let ok = RenormData::new(EndDatum::phase(0.5), EndDatum::FixedPointUV);
        assert!(ok.validate(&spec).is_ok());
        let bad = RenormData::new(EndDatum::FixedPointUV, EndDatum::FixedPointUV);
        assert!(matches!(bad.validate(&spec), Err(Error::Validation(_))));
        let d = EndDatum::from_scale_term(-0.6, 0.9, 1.0).unwrap();
        assert_relative_eq!(d.real_ratio(0.9, 1.0).unwrap(), -0.6, max_relative = 1e-14);
    }
}
