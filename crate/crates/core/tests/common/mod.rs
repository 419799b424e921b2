//! Property checks shared by the proptest suite and the acceptance harness.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use tpt::connection::{mobius_coeffs, theta1_rhs, theta2_rhs, ConnectionCoeffs};
use tpt::model::{EndDatum, EnergyPoint, NuValue, PotentialSpec, RenormData};
use tpt::oracle::{eigen_low, RegulatedProblem};
use tpt::specfun::{digamma, hyp2f1, log_gamma, Hyp2F1Params};
use tpt::spectra::{solve_spectrum, ScanConfig};

pub const SPECFUN_TOL: f64 = 1e-10;
pub const DETERMINANT_TOL: f64 = 1e-9;
pub const UNIT_MODULUS_TOL: f64 = 1e-10;
/// Roots found with halved grid step must agree to this, in `k/α` or `κ/α`.
pub const ROOT_SHIFT_TOL: f64 = 1e-8;

/// `|z| ≤ 30`, at least 0.05 from every pole.
pub fn off_pole() -> impl Strategy<Value = C64> {
    (0.0..30.0f64, -PI..PI)
        .prop_map(|(r, t)| C64::from_polar(r, t))
        .prop_filter("near a pole", |z| {
            let n = z.re.round();
            !(n <= 0.0 && (z - C64::new(n, 0.0)).norm() < 0.05) && (z + 1.0).norm() > 0.05
        })
}

pub fn recurrence(z: C64) -> Result<(), TestCaseError> {
    let d = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
    let err = (d.exp() - 1.0).norm();
    prop_assert!(err <= SPECFUN_TOL, "z = {z}, err = {err:e}");
    Ok(())
}

pub fn conjugation(z: C64, a: C64, b: C64, c: C64, w: f64) -> Result<(), TestCaseError> {
    let l = log_gamma(z).unwrap();
    let lc = log_gamma(z.conj()).unwrap();
    prop_assert!(
        (lc - l.conj()).norm() <= SPECFUN_TOL * l.norm().max(1.0),
        "log_gamma at {z}"
    );
    let p = digamma(z).unwrap();
    let pc = digamma(z.conj()).unwrap();
    prop_assert!(
        (pc - p.conj()).norm() <= SPECFUN_TOL * p.norm().max(1.0),
        "digamma at {z}"
    );
    let f = hyp2f1(Hyp2F1Params::new(a, b, c, w)).unwrap();
    let fc = hyp2f1(Hyp2F1Params::new(a.conj(), b.conj(), c.conj(), w)).unwrap();
    prop_assert!(
        (fc - f.conj()).norm() <= SPECFUN_TOL * f.norm().max(1.0),
        "hyp2f1({a}, {b}; {c}; {w})"
    );
    let one = hyp2f1(Hyp2F1Params::new(a, b, c, 0.0)).unwrap();
    prop_assert_eq!(one, C64::new(1.0, 0.0));
    Ok(())
}

/// Parameters of `₂F₁` with `c` kept away from the non-positive integers.
pub fn hyp_params() -> impl Strategy<Value = (C64, C64, C64, f64)> {
    let cplx = |r: f64| (-r..r, -r..r).prop_map(|(x, y)| C64::new(x, y));
    (cplx(3.0), cplx(3.0), (0.2..4.0f64, -3.0..3.0f64), -20.0..0.9f64)
        .prop_map(|(a, b, (cr, ci), w)| (a, b, C64::new(cr, ci), w))
}

pub fn reflection(y: f64) -> Result<(), TestCaseError> {
    let m = (2.0 * log_gamma(C64::new(1.0, y)).unwrap().re).exp();
    let v = m * (PI * y).sinh() / (PI * y);
    prop_assert!((v - 1.0).abs() <= SPECFUN_TOL, "y = {y}, value {v}");
    Ok(())
}

fn off_integer(gap: f64) -> impl Fn(&f64) -> bool {
    move |v| (v - v.round()).abs() > gap
}

/// Order parameters over every non-critical regime, at least 0.05 from the
/// integers where a `Γ(±ν)` factor has a pole.
pub fn any_nu() -> impl Strategy<Value = NuValue> {
    prop_oneof![
        (0.05..0.95f64).prop_map(NuValue::real),
        (1.0..4.0f64)
            .prop_filter("near integer", off_integer(0.05))
            .prop_map(NuValue::real),
        (0.05..8.0f64).prop_map(NuValue::imaginary),
    ]
}

/// As [`any_nu`] but reaching up to 1e-6 of the integers.
pub fn nu_near_poles() -> impl Strategy<Value = NuValue> {
    prop_oneof![
        (1e-3..4.0f64)
            .prop_filter("integer", off_integer(1e-6))
            .prop_map(NuValue::real),
        (1e-3..8.0f64).prop_map(NuValue::imaginary),
    ]
}

/// `k = iκ` stays at `κ/α ≤ 1.5`: beyond that `m1 m4` and `m2 m3` grow like
/// `e^{πκ/α}` and cancel to the O(1) determinant, which double precision
/// cannot resolve to 1e-9. [`determinant_backward`] covers the rest.
pub fn any_energy() -> impl Strategy<Value = EnergyPoint> {
    prop_oneof![
        (0.05..60.0f64).prop_map(EnergyPoint::positive),
        (0.05..1.5f64).prop_map(EnergyPoint::negative),
    ]
}

pub fn deep_energy() -> impl Strategy<Value = EnergyPoint> {
    prop_oneof![
        (0.05..60.0f64).prop_map(EnergyPoint::positive),
        (0.05..60.0f64).prop_map(EnergyPoint::negative),
    ]
}

fn coeffs(nu_s: NuValue, nu_c: NuValue, e: EnergyPoint) -> Result<Option<ConnectionCoeffs>, TestCaseError> {
    match mobius_coeffs(nu_s, nu_c, e) {
        Ok(c) => Ok(Some(c)),
        // exact Γ pole of one coefficient: nothing to compare
        Err(tpt::Error::GammaPole { .. }) => Ok(None),
        Err(err) => Err(TestCaseError::fail(err.to_string())),
    }
}

pub fn determinant(nu_s: NuValue, nu_c: NuValue, e: EnergyPoint) -> Result<(), TestCaseError> {
    let Some(c) = coeffs(nu_s, nu_c, e)? else { return Ok(()) };
    let want = -nu_s.as_complex() / nu_c.as_complex();
    let err = (c.determinant() - want).norm() / want.norm();
    prop_assert!(err <= DETERMINANT_TOL, "{nu_s:?} {nu_c:?} {e:?}: rel err {err:e}");
    Ok(())
}

/// Determinant error measured against the size of the cancelling products.
pub fn determinant_backward(nu_s: NuValue, nu_c: NuValue, e: EnergyPoint) -> Result<(), TestCaseError> {
    let Some(c) = coeffs(nu_s, nu_c, e)? else { return Ok(()) };
    let want = -nu_s.as_complex() / nu_c.as_complex();
    let scale = (c.m1 * c.m4).norm() + (c.m2 * c.m3).norm();
    let err = (c.determinant() - want).norm() / scale;
    prop_assert!(err <= 1e-12, "{nu_s:?} {nu_c:?} {e:?}: err {err:e} of {scale:e}");
    Ok(())
}

pub fn unit_modulus(nu_s_mag: f64, nu_c: f64, scale: Option<f64>, e: EnergyPoint) -> Result<(), TestCaseError> {
    for (name, rhs) in [
        ("theta1", theta1_rhs(nu_s_mag, nu_c, e)),
        ("theta2", theta2_rhs(nu_s_mag, nu_c, scale, e)),
    ] {
        match rhs {
            Ok(v) => prop_assert!(
                (v.norm() - 1.0).abs() <= UNIT_MODULUS_TOL,
                "{name} at |nu_s| = {nu_s_mag}, nu_c = {nu_c}, S = {scale:?}, {e:?}: |rhs| = {}",
                v.norm()
            ),
            Err(tpt::Error::GammaPole { .. } | tpt::Error::Degenerate(_)) => {}
            Err(err) => return Err(TestCaseError::fail(err.to_string())),
        }
    }
    Ok(())
}

pub fn scale_term() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), Just(Some(0.0)), (-5.0..5.0f64).prop_map(Some)]
}

/// A solvable single well: real-ν ends with fixed points or scales, or an
/// attractive sin end with a phase.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub spec: PotentialSpec,
    pub renorm: RenormData,
}

fn weak_datum(nu: f64) -> impl Strategy<Value = EndDatum> {
    prop_oneof![
        Just(EndDatum::FixedPointUV),
        Just(EndDatum::FixedPointIR),
        (-3.0..3.0f64)
            .prop_filter("zero scale term", |t| t.abs() > 0.05)
            .prop_map(move |t| EndDatum::from_scale_term(t, nu, 1.0).unwrap()),
    ]
}

pub fn case() -> impl Strategy<Value = Case> {
    let weak = (0.1..0.9f64, 0.1..0.9f64).prop_flat_map(|(ns, nc)| {
        (weak_datum(ns), weak_datum(nc)).prop_map(move |(ds, dc)| Case {
            spec: PotentialSpec::from_nu(1.0, NuValue::real(ns), NuValue::real(nc)).unwrap(),
            renorm: RenormData::new(ds, dc),
        })
    });
    let attractive = (1.0..8.0f64, 0.1..0.9f64, -PI..PI).prop_flat_map(|(ns, nc, th)| {
        weak_datum(nc).prop_map(move |dc| Case {
            spec: PotentialSpec::from_nu(1.0, NuValue::imaginary(ns), NuValue::real(nc)).unwrap(),
            renorm: RenormData::new(EndDatum::phase(th), dc),
        })
    });
    prop_oneof![weak, attractive]
}

pub fn grid_independence(c: Case) -> Result<(), TestCaseError> {
    let cfg = ScanConfig::with_window(0.0, 15.0);
    let fine = ScanConfig {
        grid_step: cfg.grid_step / 2.0,
        ..cfg
    };
    let a = solve_spectrum(&c.spec, &c.renorm, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = solve_spectrum(&c.spec, &c.renorm, &fine).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let key = |l: &tpt::spectra::EnergyLevel| l.point.energy();
    let (ka, kb): (Vec<f64>, Vec<f64>) = (a.levels.iter().map(key).collect(), b.levels.iter().map(key).collect());
    prop_assert_eq!(ka.len(), kb.len(), "{:?}: {:?} vs {:?}", c, ka, kb);
    for (x, y) in a.levels.iter().zip(&b.levels) {
        prop_assert_eq!(x.point.sign, y.point.sign);
        let d = (x.point.magnitude - y.point.magnitude).abs();
        prop_assert!(d <= ROOT_SHIFT_TOL, "{:?}: {:?} vs {:?}", c, x.point, y.point);
    }
    Ok(())
}

pub fn cutoff_insensitivity(c: Case) -> Result<(), TestCaseError> {
    let fail = |e: tpt::Error| TestCaseError::fail(format!("{c:?}: {e}"));
    let p = RegulatedProblem::auto(&c.spec, &c.renorm).map_err(fail)?;
    let a = eigen_low(&p, 3).map_err(fail)?;
    let half = p.with_cutoff(&c.renorm, p.r_cut / 2.0).map_err(fail)?;
    let b = eigen_low(&half, 3).map_err(fail)?;
    for (x, y) in a.iter().zip(&b) {
        prop_assert!(
            (x.lambda - y.lambda).abs() < x.error.max(y.error),
            "{:?} at R = {}: {} vs {} (bounds {:e}, {:e})",
            c,
            p.r_cut,
            x.lambda,
            y.lambda,
            x.error,
            y.error
        );
    }
    Ok(())
}
