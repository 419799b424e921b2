//! Acceptance checks; one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use tpt::cli::{cmd_doublewell, cmd_spectrum, table1_preset, Cli, Command, DoubleWell, SingleWell};
use tpt::model::{EndDatum, NuValue, PotentialSpec, RenormData};
use tpt::oracle::{eigen_low, RegulatedProblem};
use tpt::spectra::{solve_spectrum, solve_spectrum_with, susy_spectrum, Parity, ScanConfig, SolveOptions};

use common::*;

const TABLE_TOL: f64 = 1e-3;
const TABLE_SECONDS: f64 = 60.0;
const RATIO_TOL: f64 = 2e-4;
const CRITICAL_TOL: f64 = 5e-4;
const CLOSED_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-3;
const DEGENERACY_TOL: f64 = 1e-3;

const COLUMN_1: [f64; 9] = [3.896, 9.898, 15.559, 25.200, 41.275, 67.886, 111.825, 184.307, 303.834];
const COLUMN_2: [f64; 11] = [
    2.925, 6.159, 6.743, 9.875, 15.548, 25.193, 41.271, 67.883, 111.823, 184.306, 303.834,
];
const COLUMN_3: [f64; 15] = [
    3.826, 7.990, 10.015, 11.921, 14.666, 18.365, 26.523, 42.862, 61.913, 79.402, 101.879, 130.758, 189.933, 313.037,
    456.103,
];

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, msg: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} [{id}] {msg}", if ok { "PASS" } else { "FAIL" });
    }

    fn outcome(&mut self, id: &str, r: Result<String, String>) {
        match r {
            Ok(m) => self.line(id, true, m),
            Err(m) => self.line(id, false, m),
        }
    }
}

fn kappas(problem: &SingleWell, cfg: &ScanConfig) -> Result<Vec<f64>, String> {
    let opts = SolveOptions {
        green_form: problem.green_form,
    };
    let r = solve_spectrum_with(&problem.spec, &problem.renorm, cfg, opts).map_err(|e| e.to_string())?;
    Ok(r.kappas())
}

/// Matches each reference value to a distinct computed level; returns the
/// matched values in reference order.
fn match_column(reference: &[f64], computed: &[f64]) -> Result<(Vec<f64>, f64), String> {
    let mut used = vec![false; computed.len()];
    let mut out = Vec::with_capacity(reference.len());
    let mut worst: f64 = 0.0;
    for &r in reference {
        let (j, &k) = computed
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|a, b| (a.1 - r).abs().total_cmp(&(b.1 - r).abs()))
            .ok_or_else(|| format!("no level left for {r}"))?;
        used[j] = true;
        let rel = (k - r).abs() / r;
        worst = worst.max(rel);
        if rel > TABLE_TOL {
            return Err(format!("{r} matched to {k:.6} (rel {rel:.2e})"));
        }
        out.push(k);
    }
    Ok((out, worst))
}

/// Reference column and `(n, κ_n/κ_{n-1})` ratios, 1-based as printed.
type Column<'a> = (&'a [f64], &'a [(usize, f64)]);

fn criterion_1_2(rep: &mut Report) {
    let columns: [Column; 3] = [
        (&COLUMN_1, &[(7, 1.6473), (8, 1.6482), (9, 1.6485)]),
        (&COLUMN_2, &[(9, 1.6473), (10, 1.6481), (11, 1.6485)]),
        (&COLUMN_3, &[(10, 1.2825), (11, 1.2831), (12, 1.2835), (14, 1.6481)]),
    ];
    for (i, (reference, ratios)) in columns.into_iter().enumerate() {
        let col = i as u8 + 1;
        let t = Instant::now();
        let computed = table1_preset(col)
            .map_err(|e| e.to_string())
            .and_then(|p| kappas(&p, &ScanConfig::default()));
        let secs = t.elapsed().as_secs_f64();
        let matched = computed.and_then(|c| {
            let n = c.len();
            match_column(reference, &c).map(|(m, worst)| (m, worst, n))
        });
        match matched {
            Ok((m, worst, n)) => {
                rep.line(
                    &format!("1.{col}"),
                    secs <= TABLE_SECONDS,
                    format!(
                        "column {col}: {}/{} values within {TABLE_TOL:e} (max rel {worst:.2e}), {n} levels found, {secs:.2} s",
                        reference.len(),
                        reference.len()
                    ),
                );
                let mut worst_ratio: f64 = 0.0;
                let mut parts = Vec::new();
                for &(upper, want) in ratios {
                    let got = m[upper - 1] / m[upper - 2];
                    worst_ratio = worst_ratio.max((got - want).abs());
                    parts.push(format!("k{upper}/k{} = {got:.5} (ref {want})", upper - 1));
                }
                rep.line(
                    &format!("2.{col}"),
                    worst_ratio <= RATIO_TOL,
                    format!("column {col}: {}; max dev {worst_ratio:.1e}", parts.join(", ")),
                );
            }
            Err(e) => {
                rep.line(&format!("1.{col}"), false, format!("column {col}: {e}"));
                rep.line(&format!("2.{col}"), false, format!("column {col}: no matched levels"));
            }
        }
    }
}

fn criterion_3(rep: &mut Report) {
    let r = (|| -> Result<String, String> {
        let Problem::Single(p) = preset(&["spectrum", "--preset", "critical-line"])? else {
            unreachable!()
        };
        let k = kappas(&p, &ScanConfig::default())?;
        if k.len() < 11 {
            return Err(format!("only {} negative levels", k.len()));
        }
        let ratio = k[10] / k[9];
        let dev = (ratio - 1.56604).abs();
        let msg = format!(
            "critical line: k11/k10 = {ratio:.5} (ref 1.56604, e^(pi/7) = {:.5}), dev {dev:.1e}",
            (PI / 7.0).exp()
        );
        if dev <= CRITICAL_TOL {
            Ok(msg)
        } else {
            Err(msg)
        }
    })();
    rep.outcome("3", r);
}

fn criterion_4(rep: &mut Report) {
    let mut runner = TestRunner::deterministic();
    let nu = (0.05..2.5f64).prop_filter("near integer", |v| (v - v.round()).abs() > 0.05);
    let mut worst_closed: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut errors = Vec::new();
    for _ in 0..10 {
        let (ns, nc) = (nu.clone(), nu.clone()).new_tree(&mut runner).unwrap().current();
        let r = (|| -> tpt::Result<()> {
            let spec = PotentialSpec::from_nu(1.0, NuValue::real(ns), NuValue::real(nc))?;
            let renorm = RenormData::new(EndDatum::FixedPointUV, EndDatum::FixedPointUV);
            let closed = susy_spectrum(ns, nc, 3)?;
            let hi = closed.last().unwrap().point.magnitude + 0.5;
            let roots = solve_spectrum(&spec, &renorm, &ScanConfig::with_window(0.0, hi))?;
            let pos: Vec<f64> = roots.positive();
            if pos.len() != closed.len() {
                errors.push(format!(
                    "({ns:.3}, {nc:.3}): {} roots vs {} closed",
                    pos.len(),
                    closed.len()
                ));
                return Ok(());
            }
            let oracle = eigen_low(&RegulatedProblem::auto(&spec, &renorm)?, closed.len())?;
            for ((c, r), o) in closed.iter().zip(&pos).zip(&oracle) {
                let k = c.point.magnitude;
                worst_closed = worst_closed.max((k - r).abs());
                worst_oracle = worst_oracle.max((o.lambda - k * k).abs() / (k * k));
            }
            Ok(())
        })();
        if let Err(e) = r {
            errors.push(format!("({ns:.3}, {nc:.3}): {e}"));
        }
    }
    let ok = errors.is_empty() && worst_closed <= CLOSED_TOL && worst_oracle <= ORACLE_TOL;
    rep.line(
        "4",
        ok,
        format!(
            "10 shape-invariant points, 4 levels each: closed vs roots max {worst_closed:.1e} (tol {CLOSED_TOL:e}), vs oracle max rel {worst_oracle:.1e} in E (tol {ORACLE_TOL:e}){}",
            if errors.is_empty() { String::new() } else { format!("; {}", errors.join("; ")) }
        ),
    );
}

fn parity_str(p: &[Parity]) -> String {
    p.iter().map(|p| if *p == Parity::Even { 'e' } else { 'o' }).collect()
}

fn criterion_5(rep: &mut Report) {
    // (a) alternation at the outer fixed points, a scale wall and an attractive wall
    let walls = |nu_s: f64| {
        [
            DoubleWell {
                nu_s,
                nu_c: NuValue::real(0.35),
                wall: Some(EndDatum::FixedPointUV),
                alpha: 1.0,
            },
            DoubleWell {
                nu_s,
                nu_c: NuValue::real(0.35),
                wall: Some(EndDatum::FixedPointIR),
                alpha: 1.0,
            },
            DoubleWell {
                nu_s,
                nu_c: NuValue::real(0.4),
                wall: Some(EndDatum::from_scale_term(-1.1, 0.4, 1.0).unwrap()),
                alpha: 1.0,
            },
            DoubleWell {
                nu_s,
                nu_c: NuValue::imaginary(2.0 * PI),
                wall: Some(EndDatum::phase(PI / 4.0)),
                alpha: 1.0,
            },
        ]
    };
    let cfg = ScanConfig::with_window(0.0, 30.0);
    let mut bad = Vec::new();
    let mut n = 0;
    for nu_s in [0.15, 0.4, 0.6, 0.85] {
        for dw in walls(nu_s) {
            n += 1;
            match cmd_doublewell(&dw, &cfg, 0) {
                Ok(o) if o.alternates && o.ordering.len() >= 6 => {}
                Ok(o) => bad.push(format!("nu_s {nu_s} {:?}: {}", dw.wall, parity_str(&o.ordering))),
                Err(e) => bad.push(format!("nu_s {nu_s} {:?}: {e}", dw.wall)),
            }
        }
    }
    rep.line(
        "5a",
        bad.is_empty(),
        format!(
            "{}/{n} double wells alternate e, o, e, ...{}",
            n - bad.len(),
            join(&bad)
        ),
    );

    // (b) exceptional line at nu = 0.7, nodes counted on sampled eigenfunctions
    let dw = DoubleWell {
        nu_s: 0.7,
        nu_c: NuValue::real(0.7),
        wall: None,
        alpha: 1.0,
    };
    let r = cmd_doublewell(&dw, &ScanConfig::with_window(0.0, 5.0), 5)
        .map_err(|e| e.to_string())
        .and_then(|o| {
            let order = parity_str(&o.ordering[..5.min(o.ordering.len())]);
            let nodes: Vec<usize> = o.levels.iter().take(5).filter_map(|l| l.nodes).collect();
            let msg = format!("nu = 0.7: ordering {order}, nodes {nodes:?}");
            if order == "eeoeo" && nodes.len() == 5 && nodes[1] == 2 && nodes[2] == 1 {
                Ok(msg)
            } else {
                Err(msg)
            }
        });
    rep.outcome("5b", r);

    // (c) deep degeneracy with an attractive wall
    let dw = DoubleWell {
        nu_s: 0.7,
        nu_c: NuValue::imaginary(2.0 * PI),
        wall: Some(EndDatum::phase(PI / 4.0)),
        alpha: 1.0,
    };
    let r = cmd_doublewell(&dw, &ScanConfig::default(), 0)
        .map_err(|e| e.to_string())
        .and_then(|o| {
            let pick = |p: &str| -> Vec<f64> {
                o.levels
                    .iter()
                    .filter(|l| l.parity == p && l.sign == "negative")
                    .map(|l| l.k_or_kappa_over_alpha)
                    .collect()
            };
            let (even, odd) = (pick("even"), pick("odd"));
            // deepest first in both lists
            let pairs: Vec<(f64, f64)> = even.iter().zip(&odd).map(|(a, b)| (*a, *b)).take(6).collect();
            if pairs.is_empty() {
                return Err("no negative levels".into());
            }
            let worst = pairs.iter().map(|(a, b)| (a - b).abs() / a).fold(0.0, f64::max);
            let msg = format!(
                "attractive wall, {} deepest even/odd pairs (kappa {:.3} .. {:.3}): max rel split {worst:.1e}",
                pairs.len(),
                pairs.last().unwrap().0,
                pairs[0].0
            );
            if worst <= DEGENERACY_TOL {
                Ok(msg)
            } else {
                Err(msg)
            }
        });
    rep.outcome("5c", r);
}

fn join(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        format!("; {}", v.join("; "))
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn property<S: Strategy>(
    rep: &mut Report,
    id: &str,
    name: &str,
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) where
    S::Value: std::fmt::Debug,
{
    let t = Instant::now();
    let r = runner(cases).run(&strategy, check);
    let secs = t.elapsed().as_secs_f64();
    match r {
        Ok(()) => rep.line(id, true, format!("{name}: {cases} cases, {secs:.1} s")),
        Err(e) => rep.line(id, false, format!("{name}: {e}")),
    }
}

fn criterion_6(rep: &mut Report) {
    property(
        rep,
        "6.1",
        "log-gamma recurrence at 1e-10",
        1000,
        off_pole(),
        recurrence,
    );
    property(
        rep,
        "6.2",
        "conjugation of log-gamma, digamma, 2F1 at 1e-10",
        1000,
        (off_pole(), hyp_params()),
        |(z, (a, b, c, w))| conjugation(z, a, b, c, w),
    );
    let fixed = [0.1, 1.0, 2.0 * PI, 7.0].into_iter().try_for_each(reflection);
    match fixed {
        Ok(()) => property(
            rep,
            "6.3",
            "|Gamma(1+iy)|^2 sinh(pi y)/(pi y) = 1 at 1e-10 (4 fixed + random y)",
            500,
            0.01..12.0f64,
            reflection,
        ),
        Err(e) => rep.line("6.3", false, format!("reflection: {e}")),
    }
    property(
        rep,
        "6.4",
        "Moebius determinant -nu_s/nu_c at 1e-9",
        500,
        (any_nu(), any_nu(), any_energy()),
        |(s, c, e)| determinant(s, c, e),
    );
    property(
        rep,
        "6.5",
        "Moebius determinant backward error at 1e-12 (deep kappa, near-integer nu)",
        500,
        (nu_near_poles(), nu_near_poles(), deep_energy()),
        |(s, c, e)| determinant_backward(s, c, e),
    );
    property(
        rep,
        "6.6",
        "unit modulus of both phase-condition right-hand sides at 1e-10",
        500,
        (0.05..8.0f64, 0.02..0.98f64, scale_term(), any_energy()),
        |(s, c, t, e)| unit_modulus(s, c, t, e),
    );
    property(
        rep,
        "6.7",
        "root sets unchanged under grid-step halving",
        12,
        case(),
        grid_independence,
    );
    property(
        rep,
        "6.8",
        "oracle levels insensitive to cutoff halving",
        6,
        case(),
        cutoff_insensitivity,
    );
}

fn parse(args: &[&str]) -> Cli {
    use clap::Parser;
    Cli::try_parse_from(std::iter::once("tpt").chain(args.iter().copied())).unwrap()
}

enum Problem {
    Single(SingleWell),
    Double(DoubleWell),
}

fn preset(args: &[&str]) -> Result<Problem, String> {
    let e = |e: tpt::Error| e.to_string();
    match parse(args).command {
        Command::Spectrum(a) => a.problem.single_well().map(Problem::Single).map_err(e),
        Command::Doublewell(a) => a.problem.double_well().map(Problem::Double).map_err(e),
        _ => unreachable!(),
    }
}

/// `(negative, positive)` counts.
fn counts(p: &Problem, cfg: &ScanConfig) -> Result<(usize, usize), String> {
    let rows: Vec<(bool, f64)> = match p {
        Problem::Single(s) => cmd_spectrum(s, cfg)
            .map_err(|e| e.to_string())?
            .levels
            .iter()
            .map(|l| (l.sign == "negative", l.k_or_kappa_over_alpha))
            .collect(),
        Problem::Double(d) => cmd_doublewell(d, cfg, 0)
            .map_err(|e| e.to_string())?
            .levels
            .iter()
            .map(|l| (l.sign == "negative", l.k_or_kappa_over_alpha))
            .collect(),
    };
    if rows.iter().any(|r| !r.1.is_finite()) {
        return Err("non-finite root".into());
    }
    let neg = rows.iter().filter(|r| r.0).count();
    Ok((neg, rows.len() - neg))
}

fn criterion_7(rep: &mut Report) {
    let window = ScanConfig::with_window(0.0, 30.0);
    let tight = ScanConfig {
        bisect_tol: 1e-13,
        ..window
    };
    let plotted: [(&str, &[&str]); 5] = [
        ("column 1", &["spectrum", "--table1", "1"]),
        ("column 2", &["spectrum", "--table1", "2"]),
        ("column 3", &["spectrum", "--table1", "3"]),
        ("scale wall", &["doublewell", "--preset", "scale-wall"]),
        ("critical line", &["spectrum", "--preset", "critical-line"]),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, args) in plotted {
        let r = preset(args).and_then(|p| Ok((counts(&p, &window)?, counts(&p, &tight)?)));
        match r {
            Ok((a, b)) if a == b => parts.push(format!("{name} {}-/{}+", a.0, a.1)),
            Ok((a, b)) => {
                ok = false;
                parts.push(format!("{name} {a:?} vs {b:?}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    rep.line(
        "7a",
        ok,
        format!(
            "root counts in (0, 30), stable at bisection tol 1e-13: {}",
            parts.join(", ")
        ),
    );

    let all: [&[&str]; 9] = [
        &["spectrum", "--table1", "1"],
        &["spectrum", "--table1", "2"],
        &["spectrum", "--table1", "3"],
        &["spectrum", "--preset", "shape-invariant"],
        &["spectrum", "--preset", "critical-line"],
        &["doublewell", "--preset", "scale-wall"],
        &["doublewell", "--preset", "attractive-wall"],
        &["doublewell", "--preset", "exceptional-weak"],
        &["doublewell", "--preset", "exceptional-anomalous"],
    ];
    let mut missing = Vec::new();
    for args in all {
        match preset(args).and_then(|p| counts(&p, &window)) {
            Ok((_, pos)) if pos > 0 => {}
            Ok(_) => missing.push(args.join(" ")),
            Err(e) => missing.push(format!("{}: {e}", args.join(" "))),
        }
    }
    rep.line(
        "7b",
        missing.is_empty(),
        format!(
            "positive-energy roots in (0, 30) for {}/{} presets{}",
            all.len() - missing.len(),
            all.len(),
            join(&missing)
        ),
    );
}

fn main() {
    let mut rep = Report { failed: 0 };
    criterion_1_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    println!("{} failed", rep.failed);
    if rep.failed > 0 {
        std::process::exit(1);
    }
}
