//! Symmetric double well on `(-π/2α, π/2α)` with the singularity `g_s/sin²`
//! at the centre and `g_c/cos²` at both walls.
//!
//! Parity is structural: even states have `A_s = 0` at the centre (the
//! `|x|^{½-ν_s}` branch), odd states have `B_s = 0`. The outer walls share one
//! datum.

use serde::{Deserialize, Serialize};

use crate::connection::{propagate_reduced, zero_residual, MobiusParts, Scaled};
use crate::error::{Error, Result};
use crate::model::{EndDatum, EnergyPoint, NuValue};
use crate::specfun::{wrap_angle, C64};
use crate::spectra::{order_levels, scan_branches, EnergyLevel, Parity, ResidualKind, ScanConfig, SpectralResidual};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuterPoint {
    UVc,
    IRc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParitySpectrum {
    pub even: Vec<EnergyLevel>,
    pub odd: Vec<EnergyLevel>,
}

impl ParitySpectrum {
    /// Both sectors ordered by energy.
    pub fn merged(&self) -> Vec<EnergyLevel> {
        let mut all: Vec<EnergyLevel> = self.even.iter().chain(&self.odd).copied().collect();
        all.sort_by(|a, b| a.point.energy().partial_cmp(&b.point.energy()).unwrap());
        all
    }

    pub fn parity_sequence(&self) -> Vec<Parity> {
        self.merged().iter().filter_map(|l| l.parity).collect()
    }
}

/// Even, odd, even, ... starting from the ground state.
pub fn alternates(seq: &[Parity]) -> bool {
    seq.iter()
        .enumerate()
        .all(|(i, &p)| p == if i % 2 == 0 { Parity::Even } else { Parity::Odd })
}

fn check_nu_s(nu_s: f64) -> Result<()> {
    if !(nu_s > 0.0 && nu_s < 1.0) {
        return Err(Error::Domain(format!(
            "centre order parameter must lie in (0, 1), got {nu_s}"
        )));
    }
    Ok(())
}

fn closed_list(ks: impl Iterator<Item = f64>, parity: Parity) -> Vec<EnergyLevel> {
    ks.enumerate()
        .map(|(i, k)| {
            let mut l = EnergyLevel::closed(i, EnergyPoint::positive(k), Some(parity));
            l.threshold = k.abs() < 1e-12;
            l
        })
        .collect()
}

/// Closed forms at the outer fixed points.
pub fn even_odd_closed(nu_s: f64, nu_c: f64, point: OuterPoint, n_max: usize) -> Result<ParitySpectrum> {
    check_nu_s(nu_s)?;
    if !(nu_c > 0.0) {
        return Err(Error::Regime(format!(
            "outer order parameter must be real positive, got {nu_c}"
        )));
    }
    let n = (0..=n_max).map(|n| 2.0 * n as f64 + 1.0);
    Ok(match point {
        OuterPoint::UVc => ParitySpectrum {
            even: closed_list(n.clone().map(|m| m - nu_s + nu_c), Parity::Even),
            odd: closed_list(n.map(|m| m + nu_s + nu_c), Parity::Odd),
        },
        OuterPoint::IRc => {
            if nu_c >= 1.0 {
                return Err(Error::Regime(format!("IR point needs nu_c < 1, got {nu_c}")));
            }
            ParitySpectrum {
                even: closed_list(n.clone().map(|m| (m - nu_s - nu_c).abs()), Parity::Even),
                odd: closed_list(n.map(|m| m + nu_s - nu_c), Parity::Odd),
            }
        }
    })
}

/// `(num, den)` of the wall ratio `r_c` for the even (`M1/M3`) or odd (`M2/M4`) sector.
fn sector_pair(nu_s: f64, nu_c: NuValue, parity: Parity, drop_c: bool, q: C64) -> Result<(Scaled, Scaled)> {
    let parts = MobiusParts::new(NuValue::real(nu_s).as_complex(), nu_c.as_complex(), q)?;
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let (p, q) = match parity {
        Parity::Even => (one, zero),
        Parity::Odd => (zero, one),
    };
    propagate_reduced(&parts, p, q, drop_c)
}

fn kind_of(p: Parity) -> ResidualKind {
    match p {
        Parity::Even => ResidualKind::DoubleWellEven,
        Parity::Odd => ResidualKind::DoubleWellOdd,
    }
}

/// Residual of one parity sector for a real outer order parameter and wall
/// ratio `p/q` (`q = 0` is the IR point).
pub fn sector_residual_real<'a>(nu_s: f64, nu_c: f64, p: f64, q: f64, parity: Parity) -> SpectralResidual<'a> {
    let nc = NuValue::real(nu_c);
    SpectralResidual::new(kind_of(parity), move |e| {
        if p == 0.0 {
            return zero_residual(|z| Ok(sector_pair(nu_s, nc, parity, true, z)?.0), e);
        }
        if q == 0.0 {
            return zero_residual(|z| Ok(sector_pair(nu_s, nc, parity, true, z)?.1), e);
        }
        let (num, den) = sector_pair(nu_s, nc, parity, false, e.q())?;
        let scale = |x: Scaled, o: Scaled| {
            if x.is_zero() {
                0.0
            } else {
                let m = if o.is_zero() { x.m } else { x.m.max(o.m) };
                x.v.re * (x.m - m).exp()
            }
        };
        let (n, d) = (scale(num, den), scale(den, num));
        if n == 0.0 && d == 0.0 {
            return Err(Error::Degenerate("sector pair vanishes".into()));
        }
        Ok(wrap_angle(2.0 * n.atan2(d) - 2.0 * p.atan2(q)))
    })
}

/// Residual of one parity sector with an attractive wall: `-e^{-iθ_c} = num/den`.
pub fn sector_residual_phase<'a>(nu_s: f64, nu_c_mag: f64, theta_c: f64, parity: Parity) -> SpectralResidual<'a> {
    let nc = NuValue::imaginary(nu_c_mag);
    SpectralResidual::new(kind_of(parity), move |e| {
        let (num, den) = sector_pair(nu_s, nc, parity, false, e.q())?;
        let phase = PI + num.arg() - den.arg();
        Ok(wrap_angle(-phase - theta_c))
    })
}

fn scan_sector(res: SpectralResidual, parity: Parity, cfg: &ScanConfig) -> Result<Vec<EnergyLevel>> {
    let mut levels = scan_branches(&res, cfg)?;
    for l in &mut levels {
        l.parity = Some(parity);
    }
    Ok(order_levels(levels))
}

/// Both sectors with a common scale datum `ε(αL)^{2ν_c}` at the walls.
pub fn even_odd_scale(nu_s: f64, nu_c: f64, scale_term: f64, cfg: &ScanConfig) -> Result<ParitySpectrum> {
    check_nu_s(nu_s)?;
    if !(nu_c > 0.0 && nu_c < 1.0) || !scale_term.is_finite() {
        return Err(Error::Regime(format!(
            "scale datum needs 0 < nu_c < 1 and a finite scale term, got {nu_c}, {scale_term}"
        )));
    }
    Ok(ParitySpectrum {
        even: scan_sector(
            sector_residual_real(nu_s, nu_c, scale_term, 1.0, Parity::Even),
            Parity::Even,
            cfg,
        )?,
        odd: scan_sector(
            sector_residual_real(nu_s, nu_c, scale_term, 1.0, Parity::Odd),
            Parity::Odd,
            cfg,
        )?,
    })
}

/// Both sectors with an attractive wall singularity of phase `θ_c`.
pub fn even_odd_attractive(nu_s: f64, nu_c_mag: f64, theta_c: f64, cfg: &ScanConfig) -> Result<ParitySpectrum> {
    check_nu_s(nu_s)?;
    if !(nu_c_mag > 0.0) {
        return Err(Error::Regime(format!("|nu_c| must be positive, got {nu_c_mag}")));
    }
    Ok(ParitySpectrum {
        even: scan_sector(
            sector_residual_phase(nu_s, nu_c_mag, theta_c, Parity::Even),
            Parity::Even,
            cfg,
        )?,
        odd: scan_sector(
            sector_residual_phase(nu_s, nu_c_mag, theta_c, Parity::Odd),
            Parity::Odd,
            cfg,
        )?,
    })
}

/// Dispatch on the wall datum.
pub fn solve_double_well(
    nu_s: f64,
    nu_c: NuValue,
    wall: &EndDatum,
    alpha: f64,
    cfg: &ScanConfig,
) -> Result<ParitySpectrum> {
    check_nu_s(nu_s)?;
    cfg.validate()?;
    match *wall {
        EndDatum::Phase { theta } if nu_c.is_imaginary() => even_odd_attractive(nu_s, nu_c.magnitude, theta, cfg),
        EndDatum::FixedPointUV | EndDatum::FixedPointIR | EndDatum::Scale { .. } if nu_c.is_real() => {
            let (p, q) = match wall.real_ratio(nu_c.magnitude, alpha) {
                Some(t) => (t, 1.0),
                None => (1.0, 0.0),
            };
            Ok(ParitySpectrum {
                even: scan_sector(
                    sector_residual_real(nu_s, nu_c.magnitude, p, q, Parity::Even),
                    Parity::Even,
                    cfg,
                )?,
                odd: scan_sector(
                    sector_residual_real(nu_s, nu_c.magnitude, p, q, Parity::Odd),
                    Parity::Odd,
                    cfg,
                )?,
            })
        }
        _ => Err(Error::Validation(format!(
            "wall datum {wall:?} does not match {nu_c:?}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub nu: f64,
    pub spectrum: ParitySpectrum,
    pub ordering: Vec<Parity>,
    /// The two lowest states are both even (`1/2 < ν < 1`).
    pub anomaly: bool,
}

/// `g_s = g_c`: even sector at the IR point, odd sector at the UV point.
pub fn exceptional_line(nu: f64, n_max: usize) -> Result<ExceptionalReport> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("exceptional line needs 0 < nu < 1, got {nu}")));
    }
    let n = (0..=n_max).map(|n| 2.0 * n as f64 + 1.0);
    let spectrum = ParitySpectrum {
        even: closed_list(n.clone().map(|m| (m - 2.0 * nu).abs()), Parity::Even),
        odd: closed_list(n.map(|m| m + 2.0 * nu), Parity::Odd),
    };
    let ordering = spectrum.parity_sequence();
    let anomaly = ordering.len() >= 2 && ordering[0] == Parity::Even && ordering[1] == Parity::Even;
    Ok(ExceptionalReport {
        nu,
        spectrum,
        ordering,
        anomaly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(l: &[EnergyLevel]) -> Vec<f64> {
        l.iter().map(|l| l.point.magnitude).collect()
    }

    #[test]
    fn closed_uv() {
        let s = even_odd_closed(0.4, 2.5, OuterPoint::UVc, 2).unwrap();
        assert!((s.even[0].point.magnitude - 3.1).abs() < 1e-14);
        assert!((s.odd[0].point.magnitude - 3.9).abs() < 1e-14);
        assert!(alternates(&s.parity_sequence()));
        let s = even_odd_closed(0.5, 0.5, OuterPoint::UVc, 2).unwrap();
        assert_eq!(ks(&s.even), vec![1.0, 3.0, 5.0]);
        assert_eq!(ks(&s.odd), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn closed_ir() {
        let s = even_odd_closed(0.4, 0.1, OuterPoint::IRc, 2).unwrap();
        assert!((s.even[0].point.magnitude - 0.5).abs() < 1e-14);
        assert!(even_odd_closed(0.4, 1.2, OuterPoint::IRc, 2).is_err());
    }

    #[test]
    fn exceptional_orderings() {
        let r = exceptional_line(0.3, 2).unwrap();
        assert!(!r.anomaly);
        assert!(alternates(&r.ordering));
        let e = ks(&r.spectrum.even);
        assert!((e[0] - 0.4).abs() < 1e-14 && (e[1] - 2.4).abs() < 1e-14);
        let r = exceptional_line(0.7, 3).unwrap();
        assert!(r.anomaly);
        use Parity::*;
        assert_eq!(&r.ordering[..5], &[Even, Even, Odd, Even, Odd]);
        let r = exceptional_line(0.5, 1).unwrap();
        assert!(r.spectrum.even[0].threshold);
    }

    fn close(got: &[f64], want: &[f64], tol: f64) {
        assert!(got.len() >= want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
        }
    }

    fn branch(l: &[EnergyLevel], sign: crate::model::EnergySign) -> Vec<f64> {
        l.iter()
            .filter(|l| l.point.sign == sign)
            .map(|l| l.point.magnitude)
            .collect()
    }

    #[test]
    fn scale_wall_matches_dense_scan() {
        use crate::model::EnergySign::*;
        let cfg = ScanConfig::with_window(0.0, 12.0);
        let s = even_odd_scale(0.6, 0.4, -1.1, &cfg).unwrap();
        close(
            &branch(&s.even, Positive),
            &[1.572887, 3.788919, 5.853018, 7.885284, 9.90504, 11.918501],
            2e-6,
        );
        close(
            &branch(&s.odd, Positive),
            &[2.939689, 5.033337, 7.074463, 9.098118, 11.11366],
            2e-6,
        );
        close(&branch(&s.even, Negative), &[0.986732], 2e-6);
        close(&branch(&s.odd, Negative), &[0.659438], 2e-6);
    }

    #[test]
    fn attractive_wall_matches_dense_scan() {
        use crate::model::EnergySign::*;
        let cfg = ScanConfig::with_window(0.0, 30.0);
        let s = even_odd_attractive(0.7, 2.0 * PI, PI / 4.0, &cfg).unwrap();
        close(
            &branch(&s.even, Positive),
            &[6.336329, 9.811286, 12.772913, 15.501498],
            2e-6,
        );
        close(&branch(&s.odd, Positive), &[5.05275, 8.846836, 11.915743], 2e-6);
        let mut neg_even = branch(&s.even, Negative);
        let mut neg_odd = branch(&s.odd, Negative);
        neg_even.sort_by(f64::total_cmp);
        neg_odd.sort_by(f64::total_cmp);
        close(
            &neg_even,
            &[2.079094, 5.854479, 6.856683, 9.89831, 15.559107, 25.199905],
            2e-6,
        );
        close(&neg_odd, &[3.895989, 6.744541, 9.898297, 15.559107, 25.199905], 2e-6);
    }

    #[test]
    fn fixed_point_walls_match_closed_forms() {
        let cfg = ScanConfig::with_window(0.0, 12.0);
        for (nc, wall, pt) in [
            (0.3, EndDatum::FixedPointUV, OuterPoint::UVc),
            (2.0, EndDatum::FixedPointUV, OuterPoint::UVc),
            (0.3, EndDatum::FixedPointIR, OuterPoint::IRc),
        ] {
            let num = solve_double_well(0.4, NuValue::real(nc), &wall, 1.0, &cfg).unwrap();
            let cl = even_odd_closed(0.4, nc, pt, 8).unwrap();
            let want: Vec<f64> = ks(&cl.merged()).into_iter().filter(|&k| k < 11.9).collect();
            close(&ks(&num.merged()), &want, 1e-8);
        }
    }
}
