//! Command-line front end.
//!
//! Every command writes CSV (default) or JSON to stdout or `--out`. With
//! `--out` a manifest is written next to the output; `tpt replay` re-runs it.
//! Angles are given in units of π, energies are reported as `k/α` or `κ/α`.
//!
//! CSV headers:
//!
//! | command        | header |
//! |----------------|--------|
//! | `classify`     | `end,g,regime,nu_kind,nu` |
//! | `spectrum`     | `index,sign,k_or_kappa_over_alpha,residual` |
//! | `doublewell`   | `index,parity,sign,k_or_kappa_over_alpha,residual,nodes` |
//! | `wavefunction` | `x,psi,masked` |
//! | `validate`     | `index,sign,oracle,spectra,rel_diff,oracle_error` |

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::doublewell::{alternates, exceptional_line, solve_double_well, ParitySpectrum};
use crate::eigenfn::{self, BoundaryCoefficients, WaveSample, DEFAULT_POINTS, MASK_RADIUS};
use crate::error::{Error, Result};
use crate::model::{
    classify, nu_from_g, CouplingRegime, EndDatum, EnergySign, NuKind, NuValue, PotentialSpec, RenormData,
};
use crate::oracle::{eigen_window, RegulatedProblem};
use crate::spectra::{
    efimov_diagnostics, solve_spectrum_with, EfimovEntry, EnergyLevel, GreenForm, Parity, ScanConfig, SolveOptions,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Spectra and oracle must agree to this relative tolerance in `validate`.
pub const VALIDATE_TOL: f64 = 1e-3;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "tpt",
    version,
    about = "Renormalized spectra of the trigonometric Pöschl-Teller potential"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Output file; a `<out>.manifest.json` is written beside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Coupling regimes and order parameters of both ends.
    Classify(CouplingArgs),
    /// Single-well bound states on both energy branches.
    Spectrum(SolveArgs),
    /// Symmetric double well, split by parity.
    Doublewell(DoubleWellArgs),
    /// Samples of one eigenfunction.
    Wavefunction(WaveArgs),
    /// Compare the root finder with the finite-element oracle.
    Validate(ValidateArgs),
    /// Re-run a manifest written by an earlier command.
    Replay { manifest: PathBuf },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct CouplingArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub gs: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gc: f64,
}

/// Named parameter sets.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// `ν_s = 0.4`, `ν_c = 2.5`, both ends at the UV point.
    ShapeInvariant,
    /// Critical sin end with `D = 5`, `|ν_c| = 7`, `θ_c = π/4`.
    CriticalLine,
    /// Double well, `ν_s = 0.6`, `ν_c = 0.4`, wall scale term `-1.1`.
    ScaleWall,
    /// Double well, `ν_s = 0.7`, `|ν_c| = 2π`, `θ_c = π/4`.
    AttractiveWall,
    /// `g_s = g_c` with `ν = 0.3`.
    ExceptionalWeak,
    /// `g_s = g_c` with `ν = 0.7`.
    ExceptionalAnomalous,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub gs: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gc: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Phase at the sin end, in units of π (also θ on the critical line).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub theta_s: f64,
    /// Phase at the cos end, in units of π.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub theta_c: f64,
    /// `ε(αL)^{2ν_c}` at the cos end (the wall for a double well).
    #[arg(long, allow_hyphen_values = true)]
    pub scale_term: Option<f64>,
    /// `ε(αL)^{2ν_s}` at the sin end.
    #[arg(long, allow_hyphen_values = true)]
    pub scale_term_s: Option<f64>,
    /// IR fixed point at the sin end.
    #[arg(long)]
    pub ir_s: bool,
    /// IR fixed point at the cos end.
    #[arg(long)]
    pub ir_c: bool,
    /// `D` of a critical end.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub crit_d: f64,
    #[arg(long, value_enum, default_value_t = GreenArg::Exact)]
    pub green_form: GreenArg,
    /// Reference negative-level parameter sets 1, 2, 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub table1: Option<u8>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenArg {
    Exact,
    Tangent,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    /// Scan window in `k/α` and `κ/α`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Bisection tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub kappa_cap: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
}

#[derive(Args, Debug, Clone)]
pub struct DoubleWellArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Count nodes of the lowest levels from sampled eigenfunctions.
    #[arg(long, default_value_t = 0)]
    pub nodes: usize,
}

#[derive(Args, Debug, Clone)]
pub struct WaveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Level in ascending energy, from 0.
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    /// Treat `--gs` as the centre of a double well.
    #[arg(long)]
    pub double_well: bool,
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Validate both parity sectors of a double well.
    #[arg(long)]
    pub double_well: bool,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub args: Vec<String>,
    pub problem: serde_json::Value,
    pub scan: ScanConfig,
    pub version: String,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

/// A resolved single-well problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleWell {
    pub spec: PotentialSpec,
    pub renorm: RenormData,
    pub green_form: GreenForm,
}

/// A resolved double well; `wall: None` is the exceptional line `g_s = g_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell {
    pub nu_s: f64,
    pub nu_c: NuValue,
    pub wall: Option<EndDatum>,
    pub alpha: f64,
}

/// Parameter sets reproducing the reference negative-level columns.
pub fn table1_preset(column: u8) -> Result<SingleWell> {
    let gs = -0.25 - 4.0 * PI * PI;
    let (gc, renorm, green_form) = match column {
        1 => (
            0.24,
            RenormData::new(EndDatum::phase(PI / 4.0), EndDatum::FixedPointUV),
            GreenForm::Exact,
        ),
        2 => (
            0.56,
            RenormData::new(EndDatum::phase(PI / 4.0), EndDatum::from_scale_term(-0.6, 0.9, 1.0)?),
            GreenForm::Exact,
        ),
        3 => (
            -0.25 - PI * PI,
            RenormData::new(EndDatum::phase(-PI / 8.0), EndDatum::phase(PI / 3.0)),
            GreenForm::Tangent,
        ),
        _ => return Err(Error::Validation(format!("no reference column {column}"))),
    };
    Ok(SingleWell {
        spec: PotentialSpec::new(1.0, gs, gc)?,
        renorm,
        green_form,
    })
}

fn default_datum(
    end: &str,
    nu: NuValue,
    ir: bool,
    scale: Option<f64>,
    theta: f64,
    d: f64,
    alpha: f64,
) -> Result<EndDatum> {
    match nu.kind {
        NuKind::Imaginary => Ok(EndDatum::phase(theta * PI)),
        NuKind::Zero => Ok(EndDatum::critical(d, theta * PI)),
        NuKind::RealPositive => match (ir, scale) {
            (true, Some(_)) => Err(Error::Validation(format!(
                "{end} end: IR point and scale term are exclusive"
            ))),
            (true, None) => Ok(EndDatum::FixedPointIR),
            (false, Some(t)) => EndDatum::from_scale_term(t, nu.magnitude, alpha),
            (false, None) => Ok(EndDatum::FixedPointUV),
        },
    }
}

fn couplings(p: &ProblemArgs) -> Result<(f64, f64)> {
    match (p.gs, p.gc) {
        (Some(gs), Some(gc)) => Ok((gs, gc)),
        _ => Err(Error::Validation("--gs and --gc are required without a preset".into())),
    }
}

impl ProblemArgs {
    pub fn single_well(&self) -> Result<SingleWell> {
        if let Some(col) = self.table1 {
            return table1_preset(col);
        }
        match self.preset {
            Some(Preset::ShapeInvariant) => {
                let spec = PotentialSpec::new(1.0, 0.16 - 0.25, 6.25 - 0.25)?;
                let renorm = RenormData::new(EndDatum::FixedPointUV, EndDatum::FixedPointUV);
                return Ok(SingleWell {
                    spec,
                    renorm,
                    green_form: GreenForm::Exact,
                });
            }
            Some(Preset::CriticalLine) => {
                let spec = PotentialSpec::new(1.0, -0.25, -0.25 - 49.0)?;
                let renorm = RenormData::new(EndDatum::critical(5.0, 0.0), EndDatum::phase(PI / 4.0));
                return Ok(SingleWell {
                    spec,
                    renorm,
                    green_form: GreenForm::Exact,
                });
            }
            Some(p) => return Err(Error::Validation(format!("preset {p:?} is a double well"))),
            None => {}
        }
        let (gs, gc) = couplings(self)?;
        let spec = PotentialSpec::new(self.alpha, gs, gc)?;
        let s = default_datum(
            "sin",
            spec.nu_s(),
            self.ir_s,
            self.scale_term_s,
            self.theta_s,
            self.crit_d,
            self.alpha,
        )?;
        let c = default_datum(
            "cos",
            spec.nu_c(),
            self.ir_c,
            self.scale_term,
            self.theta_c,
            self.crit_d,
            self.alpha,
        )?;
        let renorm = RenormData::new(s, c);
        renorm.validate(&spec)?;
        let green_form = match self.green_form {
            GreenArg::Exact => GreenForm::Exact,
            GreenArg::Tangent => GreenForm::Tangent,
        };
        Ok(SingleWell {
            spec,
            renorm,
            green_form,
        })
    }

    pub fn double_well(&self) -> Result<DoubleWell> {
        let exceptional = |nu: f64| DoubleWell {
            nu_s: nu,
            nu_c: NuValue::real(nu),
            wall: None,
            alpha: 1.0,
        };
        match self.preset {
            Some(Preset::ScaleWall) => {
                let wall = EndDatum::from_scale_term(-1.1, 0.4, 1.0)?;
                return Ok(DoubleWell {
                    nu_s: 0.6,
                    nu_c: NuValue::real(0.4),
                    wall: Some(wall),
                    alpha: 1.0,
                });
            }
            Some(Preset::AttractiveWall) => {
                let wall = EndDatum::phase(PI / 4.0);
                return Ok(DoubleWell {
                    nu_s: 0.7,
                    nu_c: NuValue::imaginary(2.0 * PI),
                    wall: Some(wall),
                    alpha: 1.0,
                });
            }
            Some(Preset::ExceptionalWeak) => return Ok(exceptional(0.3)),
            Some(Preset::ExceptionalAnomalous) => return Ok(exceptional(0.7)),
            Some(p) => return Err(Error::Validation(format!("preset {p:?} is a single well"))),
            None => {}
        }
        if self.table1.is_some() {
            return Err(Error::Validation("--table1 sets are single wells".into()));
        }
        let (gs, gc) = couplings(self)?;
        let nu_s = nu_from_g(gs);
        if nu_s.kind != NuKind::RealPositive || nu_s.magnitude >= 1.0 {
            return Err(Error::Regime(format!("centre coupling {gs} is not weak-medium")));
        }
        let nu_c = nu_from_g(gc);
        let wall_given = self.ir_c || self.scale_term.is_some() || self.theta_c != 0.0;
        if gs == gc && !wall_given && nu_c.is_real() {
            return Ok(DoubleWell {
                alpha: self.alpha,
                ..exceptional(nu_s.magnitude)
            });
        }
        let wall = default_datum(
            "wall",
            nu_c,
            self.ir_c,
            self.scale_term,
            self.theta_c,
            self.crit_d,
            self.alpha,
        )?;
        Ok(DoubleWell {
            nu_s: nu_s.magnitude,
            nu_c,
            wall: Some(wall),
            alpha: self.alpha,
        })
    }
}

impl ScanArgs {
    pub fn config(&self, default_window: (f64, f64)) -> Result<ScanConfig> {
        let mut cfg = ScanConfig::with_window(default_window.0, default_window.1);
        if let Some(w) = &self.window {
            cfg.window = (w[0], w[1]);
        }
        if let Some(h) = self.grid_step {
            cfg.grid_step = h;
        }
        if let Some(t) = self.tol {
            cfg.bisect_tol = t;
        }
        if let Some(k) = self.kappa_cap {
            cfg.kappa_cap = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const DEFAULT_WINDOW: (f64, f64) = (0.0, 500.0);
const SHORT_WINDOW: (f64, f64) = (0.0, 30.0);

fn sign_name(s: EnergySign) -> &'static str {
    match s {
        EnergySign::Negative => "negative",
        EnergySign::Positive => "positive",
    }
}

fn parity_name(p: Option<Parity>) -> &'static str {
    match p {
        Some(Parity::Even) => "even",
        Some(Parity::Odd) => "odd",
        None => "",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyRow {
    pub end: &'static str,
    pub g: f64,
    pub regime: CouplingRegime,
    pub nu_kind: NuKind,
    pub nu: f64,
}

pub fn cmd_classify(gs: f64, gc: f64) -> Result<Vec<ClassifyRow>> {
    let spec = PotentialSpec::new(1.0, gs, gc)?;
    let (rs, rc) = classify(&spec);
    Ok([("sin", gs, rs, spec.nu_s()), ("cos", gc, rc, spec.nu_c())]
        .into_iter()
        .map(|(end, g, regime, nu)| ClassifyRow {
            end,
            g,
            regime,
            nu_kind: nu.kind,
            nu: nu.magnitude,
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub sign: &'static str,
    pub k_or_kappa_over_alpha: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumOutput {
    pub problem: SingleWell,
    pub levels: Vec<SpectrumRow>,
    pub efimov: Vec<EfimovEntry>,
}

pub fn cmd_spectrum(problem: &SingleWell, cfg: &ScanConfig) -> Result<SpectrumOutput> {
    let opts = SolveOptions {
        green_form: problem.green_form,
    };
    let report = solve_spectrum_with(&problem.spec, &problem.renorm, cfg, opts)?;
    let levels = report
        .levels
        .iter()
        .map(|l| SpectrumRow {
            index: l.index,
            sign: sign_name(l.point.sign),
            k_or_kappa_over_alpha: l.point.magnitude,
            residual: l.residual_at_root,
        })
        .collect();
    Ok(SpectrumOutput {
        problem: *problem,
        levels,
        efimov: efimov_diagnostics(&report),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DoubleWellRow {
    pub index: usize,
    pub parity: &'static str,
    pub sign: &'static str,
    pub k_or_kappa_over_alpha: f64,
    pub residual: f64,
    /// Empty unless counted.
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoubleWellOutput {
    pub problem: DoubleWell,
    pub levels: Vec<DoubleWellRow>,
    pub ordering: Vec<Parity>,
    pub alternates: bool,
    /// The two lowest states are both even.
    pub anomaly: bool,
}

fn double_well_spectrum(dw: &DoubleWell, cfg: &ScanConfig) -> Result<ParitySpectrum> {
    match dw.wall {
        Some(wall) => solve_double_well(dw.nu_s, dw.nu_c, &wall, dw.alpha, cfg),
        None => {
            // closed form; enough levels to cover the window
            let n_max = (cfg.window.1 / 2.0).ceil() as usize + 1;
            let mut s = exceptional_line(dw.nu_s, n_max)?.spectrum;
            let keep = |l: &EnergyLevel| l.point.magnitude <= cfg.window.1;
            s.even.retain(keep);
            s.odd.retain(keep);
            Ok(s)
        }
    }
}

/// Wall datum seen by one parity sector; on the exceptional line even
/// states sit at the IR point and odd states at the UV point.
fn sector_wall(dw: &DoubleWell, parity: Parity) -> EndDatum {
    dw.wall.unwrap_or(match parity {
        Parity::Even => EndDatum::FixedPointIR,
        Parity::Odd => EndDatum::FixedPointUV,
    })
}

fn double_well_sample(
    dw: &DoubleWell,
    level: &EnergyLevel,
    points: usize,
) -> Result<(BoundaryCoefficients, WaveSample)> {
    let parity = level
        .parity
        .ok_or_else(|| Error::Validation("double-well level without parity".into()))?;
    eigenfn::double_well_wavefunction(
        dw.nu_s,
        dw.nu_c,
        &sector_wall(dw, parity),
        dw.alpha,
        parity,
        level.point,
        points,
    )
}

pub fn cmd_doublewell(dw: &DoubleWell, cfg: &ScanConfig, nodes: usize) -> Result<DoubleWellOutput> {
    let spectrum = double_well_spectrum(dw, cfg)?;
    let merged = spectrum.merged();
    let ordering = spectrum.parity_sequence();
    let mut levels = Vec::with_capacity(merged.len());
    for (i, l) in merged.iter().enumerate() {
        let count = if i < nodes {
            Some(eigenfn::node_count(&double_well_sample(dw, l, DEFAULT_POINTS)?.1))
        } else {
            None
        };
        levels.push(DoubleWellRow {
            index: i,
            parity: parity_name(l.parity),
            sign: sign_name(l.point.sign),
            k_or_kappa_over_alpha: l.point.magnitude,
            residual: l.residual_at_root,
            nodes: count,
        });
    }
    let anomaly = ordering.len() >= 2 && ordering[0] == Parity::Even && ordering[1] == Parity::Even;
    Ok(DoubleWellOutput {
        problem: *dw,
        levels,
        alternates: alternates(&ordering),
        ordering,
        anomaly,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveRow {
    pub x: f64,
    pub psi: f64,
    pub masked: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveOutput {
    pub level: EnergyLevel,
    pub coefficients: BoundaryCoefficients,
    pub sample: WaveSample,
}

pub fn cmd_wavefunction(args: &WaveArgs, cfg: &ScanConfig) -> Result<WaveOutput> {
    let (level, (coefficients, sample)) = if args.double_well {
        let dw = args.problem.double_well()?;
        let merged = double_well_spectrum(&dw, cfg)?.merged();
        let level = *merged
            .get(args.level)
            .ok_or_else(|| Error::Validation(format!("only {} levels in the window", merged.len())))?;
        (level, double_well_sample(&dw, &level, args.points)?)
    } else {
        let p = args.problem.single_well()?;
        let report = solve_spectrum_with(
            &p.spec,
            &p.renorm,
            cfg,
            SolveOptions {
                green_form: p.green_form,
            },
        )?;
        let mut levels = report.levels.clone();
        levels.sort_by(|a, b| a.point.energy().total_cmp(&b.point.energy()));
        let level = *levels
            .get(args.level)
            .ok_or_else(|| Error::Validation(format!("only {} levels in the window", levels.len())))?;
        (
            level,
            eigenfn::wavefunction(&p.spec, &p.renorm, level.point, args.points)?,
        )
    };
    let sample = if args.normalize {
        eigenfn::normalize(&sample, 2.0 * MASK_RADIUS / sample.alpha)?
    } else {
        sample
    };
    Ok(WaveOutput {
        level,
        coefficients,
        sample,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateRow {
    pub index: usize,
    pub sign: &'static str,
    pub oracle: f64,
    pub spectra: f64,
    pub rel_diff: f64,
    pub oracle_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateOutput {
    /// One entry per single-well problem compared (two for a double well).
    pub problems: Vec<SingleWell>,
    pub cutoffs: Vec<f64>,
    pub rows: Vec<ValidateRow>,
    /// Levels the root finder found that the oracle did not, or vice versa.
    pub count_mismatch: bool,
    pub max_rel_diff: f64,
    pub pass: bool,
}

/// Oracle levels in the scan window compared with the root finder.
/// Negative levels are limited to `κ/α ≤ 0.005/αR`, well above the floor.
pub fn validate_single(p: &SingleWell, cfg: &ScanConfig) -> Result<(f64, Vec<ValidateRow>, bool)> {
    let opts = SolveOptions {
        green_form: p.green_form,
    };
    let report = solve_spectrum_with(&p.spec, &p.renorm, cfg, opts)?;
    let prob = RegulatedProblem::auto(&p.spec, &p.renorm)?;
    let kappa_max = cfg.kappa_cap.min(cfg.window.1).min(0.005 / (p.spec.alpha * prob.r_cut));
    let k_max = cfg.window.1;
    let k_min = cfg.window.0.max(cfg.grid_step);
    let in_window = |l: &EnergyLevel| match l.point.sign {
        EnergySign::Negative => l.point.magnitude >= k_min && l.point.magnitude <= kappa_max,
        EnergySign::Positive => l.point.magnitude >= k_min && l.point.magnitude <= k_max,
    };
    let ours: Vec<EnergyLevel> = report.levels.iter().copied().filter(in_window).collect();
    let oracle = eigen_window(&prob, -kappa_max * kappa_max, k_max * k_max)?;
    let oracle: Vec<_> = oracle.into_iter().filter(|o| o.lambda.abs().sqrt() >= k_min).collect();
    let mut rows = Vec::with_capacity(oracle.len());
    for (i, o) in oracle.iter().enumerate() {
        let (sign, mag) = if o.lambda < 0.0 {
            (EnergySign::Negative, (-o.lambda).sqrt())
        } else {
            (EnergySign::Positive, o.lambda.sqrt())
        };
        let best = ours.iter().filter(|l| l.point.sign == sign).min_by(|a, b| {
            (a.point.magnitude - mag)
                .abs()
                .total_cmp(&(b.point.magnitude - mag).abs())
        });
        let spectra = best.map_or(f64::NAN, |l| l.point.magnitude);
        rows.push(ValidateRow {
            index: i,
            sign: sign_name(sign),
            oracle: mag,
            spectra,
            rel_diff: (mag - spectra).abs() / spectra,
            oracle_error: o.error / (2.0 * mag.max(1e-300)),
        });
    }
    Ok((prob.r_cut, rows, ours.len() != oracle.len()))
}

pub fn cmd_validate(args: &ValidateArgs, cfg: &ScanConfig) -> Result<ValidateOutput> {
    let problems = if args.double_well {
        let dw = args.problem.double_well()?;
        let spec = PotentialSpec::from_nu(dw.alpha, NuValue::real(dw.nu_s), dw.nu_c)?;
        [Parity::Even, Parity::Odd]
            .into_iter()
            .map(|parity| {
                let centre = match parity {
                    Parity::Even => EndDatum::FixedPointIR,
                    Parity::Odd => EndDatum::FixedPointUV,
                };
                SingleWell {
                    spec,
                    renorm: RenormData::new(centre, sector_wall(&dw, parity)),
                    green_form: GreenForm::Exact,
                }
            })
            .collect()
    } else {
        vec![args.problem.single_well()?]
    };
    let mut rows = Vec::new();
    let mut cutoffs = Vec::new();
    let mut count_mismatch = false;
    for p in &problems {
        let (r, sub, mismatch) = validate_single(p, cfg)?;
        cutoffs.push(r);
        count_mismatch |= mismatch;
        let base = rows.len();
        rows.extend(sub.into_iter().map(|mut row| {
            row.index += base;
            row
        }));
    }
    let max_rel_diff = rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    let pass = !count_mismatch && !rows.is_empty() && max_rel_diff <= VALIDATE_TOL;
    Ok(ValidateOutput {
        problems,
        cutoffs,
        rows,
        count_mismatch,
        max_rel_diff,
        pass,
    })
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("csv: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn render<T: Serialize, R: Serialize>(format: Format, full: &T, rows: &[R]) -> Result<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(full),
    }
}

/// Output text and the parts of the manifest that depend on the command.
pub fn execute(cli: &Cli) -> Result<(String, &'static str, serde_json::Value, ScanConfig)> {
    Ok(match &cli.command {
        Command::Classify(a) => {
            let rows = cmd_classify(a.gs, a.gc)?;
            let text = render(cli.format, &rows, &rows)?;
            (
                text,
                "classify",
                serde_json::json!({ "gs": a.gs, "gc": a.gc }),
                ScanConfig::default(),
            )
        }
        Command::Spectrum(a) => {
            let p = a.problem.single_well()?;
            let cfg = a.scan.config(DEFAULT_WINDOW)?;
            let out = cmd_spectrum(&p, &cfg)?;
            (render(cli.format, &out, &out.levels)?, "spectrum", value(&p), cfg)
        }
        Command::Doublewell(a) => {
            let dw = a.problem.double_well()?;
            let cfg = a.scan.config(SHORT_WINDOW)?;
            let out = cmd_doublewell(&dw, &cfg, a.nodes)?;
            (render(cli.format, &out, &out.levels)?, "doublewell", value(&dw), cfg)
        }
        Command::Wavefunction(a) => {
            let cfg = a.scan.config(SHORT_WINDOW)?;
            let out = cmd_wavefunction(a, &cfg)?;
            let rows: Vec<WaveRow> = (0..out.sample.x.len())
                .map(|i| WaveRow {
                    x: out.sample.x[i],
                    psi: out.sample.psi[i],
                    masked: out.sample.masked[i],
                })
                .collect();
            (render(cli.format, &out, &rows)?, "wavefunction", value(&out.level), cfg)
        }
        Command::Validate(a) => {
            let cfg = a.scan.config(SHORT_WINDOW)?;
            let out = cmd_validate(a, &cfg)?;
            (
                render(cli.format, &out, &out.rows)?,
                "validate",
                value(&out.problems),
                cfg,
            )
        }
        Command::Replay { .. } => {
            return Err(Error::Validation("replay cannot be nested".into()));
        }
    })
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Drops `--out <path>` / `--out=<path>` so a manifest replays anywhere.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Validation(format!("{}: {e}", path.display()))
}

/// Parse `args` (without the program name), run, and write the output.
pub fn run(args: &[String]) -> Result<()> {
    let Some(cli) = parse(args)? else {
        return Ok(());
    };
    let (cli, args) = match &cli.command {
        Command::Replay { manifest } => {
            let text = std::fs::read_to_string(manifest).map_err(|e| io_err(manifest, e))?;
            let m: RunManifest =
                serde_json::from_str(&text).map_err(|e| Error::Validation(format!("manifest: {e}")))?;
            if m.version != VERSION {
                return Err(Error::Validation(format!(
                    "manifest from version {}, this is {VERSION}",
                    m.version
                )));
            }
            let Some(mut replayed) = parse(&m.args)? else {
                return Ok(());
            };
            replayed.out = cli.out.clone();
            (replayed, m.args)
        }
        _ => (cli, strip_out(args)),
    };
    let (text, command, problem, scan) = execute(&cli)?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| io_err(path, e))?;
            let manifest = RunManifest {
                command: command.into(),
                args,
                problem,
                scan,
                version: VERSION.into(),
                timestamp: timestamp(),
            };
            let mpath = manifest_path(path);
            std::fs::write(&mpath, to_json(&manifest)?).map_err(|e| io_err(&mpath, e))?;
        }
        None => emit(&text),
    }
    Ok(())
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

/// `None` when clap already printed help or the version.
fn parse(args: &[String]) -> Result<Option<Cli>> {
    let argv = std::iter::once("tpt".to_string()).chain(args.iter().cloned());
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(Some(cli)),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                emit(&e.to_string());
                Ok(None)
            }
            _ => Err(Error::Validation(e.to_string().trim().to_string())),
        },
    }
}

/// Machine-readable error line for stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    })
    .to_string()
}

/// `TPT_THREADS` caps the rayon pool.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("TPT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("TPT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))
}

/// Process entry point; returns the exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    match configure_threads().and_then(|_| run(args)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.exit_code()
        }
    }
}
