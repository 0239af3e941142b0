//! The `qhyper` command line: constants, verification sweeps, certificates,
//! volume tables and distances, as CSV or JSON.
//!
//! Exit codes: 0 success, 1 property violation, 2 usage or configuration
//! error, 3 domain rejection.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::bounds::{
    AngleScaling, BoundReport, CertifyOptions, DEFAULT_Q, DirichletRounding, approximate_rotation_with,
    audit_dirichlet, certify_displacement_with, commutator_bound, commutator_defect, dirichlet_approximate_with,
    lambda_n, main_theorem_margin, solve_constants,
};
use crate::error::Error;
use crate::geometry::{
    HorosphericalCoords, Isometry, ModelForm, ModelKind, distance_between, from_horospherical,
    random_interior_point, random_isometry_with, random_near_identity, random_stabilizer,
};
use crate::qmatrix::QMatrix;
use crate::quaternion::Quaternion;
use crate::volume::{ball_volume, integrate_density, manifold_volume_lower_bound, volume_density};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

/// Largest form defect `certify` accepts.
pub const CERTIFY_FORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::BadShape { .. }
            | Error::NotSquare { .. } => CliError::Usage(e.to_string()),
            other => CliError::Domain(other),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    HalfSpace,
    Ball,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::HalfSpace => ModelKind::HalfSpace,
            Model::Ball => ModelKind::Ball,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    #[default]
    HalfTurn,
    FullTurn,
}

impl From<Scaling> for AngleScaling {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::HalfTurn => AngleScaling::HalfTurn,
            Scaling::FullTurn => AngleScaling::FullTurn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Commutator,
    Zassenhaus,
    Dirichlet,
    Rotation,
    Resume,
    Distance,
    Volume,
    All,
}

impl Suite {
    const EACH: [Suite; 7] = [
        Suite::Commutator,
        Suite::Zassenhaus,
        Suite::Dirichlet,
        Suite::Rotation,
        Suite::Resume,
        Suite::Distance,
        Suite::Volume,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Commutator => "commutator",
            Suite::Zassenhaus => "zassenhaus",
            Suite::Dirichlet => "dirichlet",
            Suite::Rotation => "rotation",
            Suite::Resume => "resume",
            Suite::Distance => "distance",
            Suite::Volume => "volume",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::EACH.to_vec(),
            s => vec![s],
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qhyper", version, about = "Quaternionic hyperbolic geometry: constants, bound checks, volumes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// τ, ω, λ_n and the closing margin for dimension n.
    Constants {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Seeded property sweep over one suite or all of them.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long = "Q", default_value_t = DEFAULT_Q)]
        big_q: u64,
        #[arg(long, value_enum, default_value_t = Scaling::HalfTurn)]
        angle_scaling: Scaling,
        /// Override a check tolerance, e.g. `commutator=1e-7`. Repeatable.
        #[arg(long = "tolerance", value_name = "CHECK=VALUE")]
        tolerances: Vec<String>,
        /// Round Dirichlet numerators down instead of to nearest.
        #[arg(long, hide = true)]
        inject_truncated_rounding: bool,
    },
    /// Full bound report for the isometry stored in a matrix JSON file.
    Certify {
        matrix: PathBuf,
        #[arg(long = "Q", default_value_t = DEFAULT_Q)]
        big_q: u64,
        #[arg(long, value_enum, default_value_t = Model::HalfSpace)]
        model: Model,
        #[arg(long, value_enum, default_value_t = Scaling::HalfTurn)]
        angle_scaling: Scaling,
    },
    /// Ball volumes and the manifold volume lower bound for n = 1..=N.
    Volume {
        #[arg(long = "n", default_value_t = 3)]
        n_max: usize,
        #[arg(long = "radius", default_values_t = [1.0], allow_negative_numbers = true)]
        radii: Vec<f64>,
    },
    /// Distance between two points given as JSON (inline or a file path), or `o`.
    Distance {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = Model::HalfSpace)]
        model: Model,
    },
}

/// Resolved settings of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub suite: Suite,
    pub n: usize,
    #[serde(rename = "Q")]
    pub big_q: u64,
    pub samples: usize,
    pub seed: u64,
    pub angle_scaling: Scaling,
    pub rounding: DirichletRounding,
    pub tolerances: BTreeMap<String, f64>,
}

/// Check names with their default tolerance.
pub const CHECKS: &[(&str, f64)] = &[
    ("commutator", 1e-8),
    ("zassenhaus", 0.0),
    ("dirichlet_bound", 0.0),
    ("dirichlet_range", 0.0),
    ("dirichlet_minimal", 0.0),
    ("rotation_bound", 1e-9),
    ("rotation_range", 0.0),
    ("rotation_angles", 1e-9),
    ("norm", 1e-9),
    ("power_distance", 1e-8),
    ("resume", 1e-8),
    ("omega", 0.0),
    ("distance_dilation", 1e-9),
    ("distance_invariance", 1e-9),
    ("distance_triangle", 1e-9),
    ("volume_quadrature", 1e-8),
    ("volume_derivative", 1e-9),
];

impl RunConfig {
    fn tolerance(&self, check: &str) -> f64 {
        self.tolerances[check]
    }
}

fn parse_tolerances(overrides: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map: BTreeMap<String, f64> = CHECKS.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("tolerance override `{item}` is not CHECK=VALUE")))?;
        let slot = map
            .get_mut(key)
            .ok_or_else(|| usage(format!("unknown check `{key}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| usage(format!("tolerance `{value}` is not a number")))?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(usage(format!("tolerance for `{key}` must be finite and non-negative")));
        }
        *slot = value;
    }
    Ok(map)
}

/// Rendered output plus whether any property failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub text: String,
    pub violation: bool,
}

/// Parses `args` (program name first), runs, writes output and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli).and_then(|out| emit(&cli, &out).map(|_| out)) {
        Ok(out) if out.violation => EXIT_VIOLATION,
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => fs::write(path, &out.text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{}", out.text);
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Constants { n } => cmd_constants(*n, cli.format),
        Command::Verify {
            suite,
            samples,
            seed,
            n,
            big_q,
            angle_scaling,
            tolerances,
            inject_truncated_rounding,
        } => {
            let config = RunConfig {
                suite: *suite,
                n: *n,
                big_q: *big_q,
                samples: *samples,
                seed: *seed,
                angle_scaling: *angle_scaling,
                rounding: if *inject_truncated_rounding {
                    DirichletRounding::Truncate
                } else {
                    DirichletRounding::Nearest
                },
                tolerances: parse_tolerances(tolerances)?,
            };
            cmd_verify(&config, cli.format)
        }
        Command::Certify {
            matrix,
            big_q,
            model,
            angle_scaling,
        } => cmd_certify(matrix, *big_q, *model, *angle_scaling, cli.format),
        Command::Volume { n_max, radii } => cmd_volume(*n_max, radii, cli.format),
        Command::Distance { a, b, model } => cmd_distance(a, b, *model, cli.format),
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Plain notation in the usual range, exponent notation for tiny or huge magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub n: usize,
    pub tau: f64,
    pub omega: f64,
    pub lambda_n: f64,
    pub margin: f64,
    pub margin_tight: f64,
    pub verdict: bool,
}

pub fn cmd_constants(n: usize, format: OutputFormat) -> Result<Output, CliError> {
    if n < 2 {
        return Err(usage(format!("n must be at least 2, got {n}")));
    }
    let c = solve_constants(n)?;
    let m = main_theorem_margin(n)?;
    let report = ConstantsReport {
        n,
        tau: c.tau,
        omega: c.omega,
        lambda_n: c.lambda_n,
        margin: m.bound,
        margin_tight: m.bound_tight,
        verdict: m.verdict,
    };
    let text = match format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => csv(
            "n,tau,omega,lambda_n,margin,margin_tight,verdict",
            [format!(
                "{},{},{},{},{},{},{}",
                report.n,
                num(report.tau),
                num(report.omega),
                num(report.lambda_n),
                num(report.margin),
                num(report.margin_tight),
                report.verdict
            )],
        ),
    };
    Ok(Output { text, violation: !report.verdict })
}

/// One measured inequality `value ≤ bound` (or `<` when strict).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Measurement {
    check: &'static str,
    value: f64,
    bound: f64,
    strict: bool,
}

impl Measurement {
    fn le(check: &'static str, value: f64, bound: f64) -> Self {
        Measurement { check, value, bound, strict: false }
    }

    fn lt(check: &'static str, value: f64, bound: f64) -> Self {
        Measurement { check, value, bound, strict: true }
    }

    fn slack(&self) -> f64 {
        self.bound - self.value
    }

    fn holds(&self, tol: f64) -> bool {
        let s = self.slack();
        if self.strict { s > -tol } else { s >= -tol }
    }
}

/// Worst case of one check over a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub suite: &'static str,
    pub check: &'static str,
    pub samples: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub worst_index: usize,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleError {
    pub suite: &'static str,
    pub index: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: RunConfig,
    pub checks: Vec<CheckSummary>,
    pub errors: Vec<SampleError>,
    pub violations: usize,
    pub passed: bool,
}

impl VerifyReport {
    pub const CSV_HEADER: &'static str = "suite,check,samples,violations,worst_slack,worst_index,tolerance";
}

/// Independent stream per `(seed, suite, index)`, so results do not depend on scheduling.
fn sample_rng(seed: u64, suite: Suite, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(suite as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    if config.n < 2 {
        return Err(usage(format!("n must be at least 2, got {}", config.n)));
    }
    if config.n > 8 {
        return Err(usage(format!("n must be at most 8 for sweeps, got {}", config.n)));
    }
    if config.big_q < 2 {
        return Err(usage(format!("Q must be at least 2, got {}", config.big_q)));
    }
    if config.samples == 0 {
        return Err(usage("samples must be positive"));
    }
    Ok(())
}

pub fn run_verify(config: &RunConfig) -> Result<VerifyReport, CliError> {
    validate(config)?;
    let tau = solve_constants(config.n)?.tau;
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    for suite in config.suite.expand() {
        let results: Vec<Result<Vec<Measurement>, Error>> = (0..config.samples)
            .into_par_iter()
            .map(|index| {
                let mut rng = sample_rng(config.seed, suite, index);
                run_sample(suite, &mut rng, index, config, tau)
            })
            .collect();
        let mut summaries: Vec<CheckSummary> = Vec::new();
        for (index, result) in results.into_iter().enumerate() {
            let measurements = match result {
                Ok(m) => m,
                Err(e) => {
                    errors.push(SampleError { suite: suite.name(), index, message: e.to_string() });
                    continue;
                }
            };
            for m in measurements {
                let tolerance = config.tolerance(m.check);
                let pos = match summaries.iter().position(|s| s.check == m.check) {
                    Some(p) => p,
                    None => {
                        summaries.push(CheckSummary {
                            suite: suite.name(),
                            check: m.check,
                            samples: 0,
                            violations: 0,
                            worst_slack: f64::INFINITY,
                            worst_index: index,
                            tolerance,
                        });
                        summaries.len() - 1
                    }
                };
                let s = &mut summaries[pos];
                s.samples += 1;
                if !m.holds(tolerance) {
                    s.violations += 1;
                }
                let slack = m.slack();
                if slack < s.worst_slack || slack.is_nan() {
                    s.worst_slack = slack;
                    s.worst_index = index;
                }
            }
        }
        checks.extend(summaries);
    }
    let violations = checks.iter().map(|c| c.violations).sum::<usize>() + errors.len();
    Ok(VerifyReport {
        config: config.clone(),
        checks,
        errors,
        violations,
        passed: violations == 0,
    })
}

pub fn cmd_verify(config: &RunConfig, format: OutputFormat) -> Result<Output, CliError> {
    let report = run_verify(config)?;
    let text = match format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let rows = report.checks.iter().map(|c| {
                format!(
                    "{},{},{},{},{:e},{},{:e}",
                    c.suite, c.check, c.samples, c.violations, c.worst_slack, c.worst_index, c.tolerance
                )
            });
            // One row per suite that had failing samples: count and first index.
            let mut grouped: Vec<(&str, usize, usize)> = Vec::new();
            for e in &report.errors {
                match grouped.iter_mut().find(|g| g.0 == e.suite) {
                    Some(g) => g.1 += 1,
                    None => grouped.push((e.suite, 1, e.index)),
                }
            }
            let errors = grouped
                .into_iter()
                .map(|(suite, count, first)| format!("{suite},error,{count},{count},NaN,{first},0e0"));
            csv(VerifyReport::CSV_HEADER, rows.chain(errors))
        }
    };
    for e in &report.errors {
        eprintln!("{} sample {}: {}", e.suite, e.index, e.message);
    }
    Ok(Output { text, violation: !report.passed })
}

fn run_sample(
    suite: Suite,
    rng: &mut ChaCha8Rng,
    index: usize,
    config: &RunConfig,
    tau: f64,
) -> Result<Vec<Measurement>, Error> {
    let n = config.n;
    match suite {
        Suite::Commutator => {
            let near = index.is_multiple_of(2);
            let a = mixed_isometry(rng, n, near)?;
            let b = mixed_isometry(rng, n, near)?;
            Ok(vec![Measurement::le(
                "commutator",
                commutator_defect(a.matrix(), b.matrix())?,
                commutator_bound(a.matrix(), b.matrix())?,
            )])
        }
        Suite::Zassenhaus => {
            let a = zassenhaus_element(rng, n, tau)?;
            let b = zassenhaus_element(rng, n, tau)?;
            Ok(vec![Measurement::lt("zassenhaus", commutator_defect(a.matrix(), b.matrix())?, tau)])
        }
        Suite::Dirichlet => {
            let m = 2 + index % 3;
            let thetas: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let d = dirichlet_approximate_with(&thetas, config.big_q, config.rounding)?;
            let audit = audit_dirichlet(&thetas, config.big_q, &d)?;
            let q_max = (config.big_q as f64).powi(m as i32);
            let bound = 1.0 / (d.q as f64 * config.big_q as f64);
            let worst = d.errors.iter().cloned().fold(0.0, f64::max);
            Ok(vec![
                Measurement::lt("dirichlet_bound", worst, bound),
                Measurement::le("dirichlet_range", d.q as f64, q_max),
                Measurement::le("dirichlet_minimal", if audit.minimal { 0.0 } else { 1.0 }, 0.0),
            ])
        }
        Suite::Rotation => {
            let r = random_stabilizer(rng, n);
            let cert = approximate_rotation_with(&r, config.big_q, config.angle_scaling.into(), config.rounding)?;
            Ok(vec![
                Measurement::le("rotation_bound", cert.achieved, cert.bound),
                Measurement::le("rotation_range", cert.q as f64, cert.q_max as f64),
                Measurement::le("rotation_angles", (cert.achieved - cert.achieved_from_angles).abs(), 0.0),
            ])
        }
        Suite::Resume => {
            let radius = match config.angle_scaling {
                Scaling::HalfTurn => lambda_n(n),
                Scaling::FullTurn => lambda_n(n) / 2f64.powi(n as i32 + 1),
            };
            let a = random_isometry_with(rng, n, 0.5 * radius)?;
            let options = CertifyOptions {
                scaling: config.angle_scaling.into(),
                rounding: config.rounding,
            };
            let report = certify_displacement_with(&a, config.big_q, options)?;
            Ok(report_measurements(&report))
        }
        Suite::Distance => {
            let form = ModelForm::half_space(n)?;
            let g = random_isometry_with(rng, n, 2.0)?;
            let x = random_interior_point(rng, n, 2.0)?;
            let y = random_interior_point(rng, n, 2.0)?;
            let z = random_interior_point(rng, n, 2.0)?;
            let d_xy = distance_between(&x, &y, &form)?;
            let d_yz = distance_between(&y, &z, &form)?;
            let d_xz = distance_between(&x, &z, &form)?;
            let moved = distance_between(&g.apply(&x)?, &g.apply(&y)?, &form)?;
            let r = (2.0 * rng.random::<f64>()).exp();
            let o = form.origin();
            let d_dil = distance_between(&o, &Isometry::dilation(n, r)?.apply(&o)?, &form)?;
            Ok(vec![
                Measurement::le("distance_dilation", (d_dil - 2.0 * r.ln()).abs(), 0.0),
                Measurement::le("distance_invariance", (moved - d_xy).abs(), 0.0),
                Measurement::le("distance_triangle", d_xz, d_xy + d_yz),
            ])
        }
        Suite::Volume => {
            let dim = 1 + index % 3;
            let radius = 0.1 + 4.9 * rng.random::<f64>();
            let closed = ball_volume(dim, radius)?.volume;
            let quad = integrate_density(dim, radius)?;
            let deriv = richardson_derivative(dim, radius)?;
            let density = volume_density(dim, radius)?;
            Ok(vec![
                Measurement::le("volume_quadrature", ((quad - closed) / closed).abs(), 0.0),
                Measurement::le("volume_derivative", ((deriv - density) / density).abs(), 0.0),
            ])
        }
        Suite::All => unreachable!("expanded before sampling"),
    }
}

fn report_measurements(report: &BoundReport) -> Vec<Measurement> {
    vec![
        Measurement::le("norm", report.norm_a, report.r),
        Measurement::le(
            "power_distance",
            report.norm_aq_minus_rq,
            report.norm_aq_minus_rq + report.power_distance_slack,
        ),
        Measurement::le("resume", report.product, report.lemma_bound),
        Measurement::lt("omega", report.product, report.omega),
    ]
}

/// Central difference of the closed-form volume, Richardson-extrapolated.
fn richardson_derivative(n: usize, radius: f64) -> Result<f64, Error> {
    let h = 1e-3 * radius.min(1.0);
    let diff = |h: f64| -> Result<f64, Error> {
        Ok((ball_volume(n, radius + h)?.volume - ball_volume(n, radius - h)?.volume) / (2.0 * h))
    };
    Ok((4.0 * diff(0.5 * h)? - diff(h)?) / 3.0)
}

fn mixed_isometry(rng: &mut ChaCha8Rng, n: usize, near: bool) -> Result<Isometry, Error> {
    if near {
        let scale = 0.3 * rng.random::<f64>();
        random_near_identity(rng, n, scale)
    } else {
        random_isometry_with(rng, n, 1.5)
    }
}

/// Rejection sample with `‖A - I‖ < τ` and `‖A‖ ≤ 1 + τ`.
fn zassenhaus_element(rng: &mut ChaCha8Rng, n: usize, tau: f64) -> Result<Isometry, Error> {
    for _ in 0..1000 {
        let scale = 0.1 * rng.random::<f64>();
        let a = random_near_identity(rng, n, scale)?;
        if a.matrix().minus_identity().spectral_norm()? < tau && a.matrix().spectral_norm()? <= 1.0 + tau {
            return Ok(a);
        }
    }
    Err(Error::InvalidParameter("no sample inside the τ-neighbourhood".into()))
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    outcome: &'static str,
    #[serde(flatten)]
    report: &'a BoundReport,
}

#[derive(Serialize)]
struct FixesOriginOutput {
    outcome: &'static str,
    displacement: f64,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn cmd_certify(
    path: &Path,
    big_q: u64,
    model: Model,
    scaling: Scaling,
    format: OutputFormat,
) -> Result<Output, CliError> {
    let text = read_input(path)?;
    let matrix: QMatrix =
        serde_json::from_str(&text).map_err(|e| usage(format!("malformed matrix file {}: {e}", path.display())))?;
    if !matrix.is_square() || matrix.rows() < 3 {
        return Err(usage(format!(
            "expected a square matrix of size n+1 >= 3, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if big_q < 2 {
        return Err(usage(format!("Q must be at least 2, got {big_q}")));
    }
    let n = matrix.rows() - 1;
    let form = ModelForm::new(n, model.into())?;
    let isometry = Isometry::with_tolerance(matrix, form, CERTIFY_FORM_TOLERANCE)?;
    let options = CertifyOptions {
        scaling: scaling.into(),
        rounding: DirichletRounding::Nearest,
    };
    let report = match certify_displacement_with(&isometry, big_q, options) {
        Ok(r) => r,
        Err(Error::FixesOrigin { displacement }) => {
            let out = FixesOriginOutput { outcome: "fixes_origin", displacement };
            let text = match format {
                OutputFormat::Json => to_json(&out),
                OutputFormat::Csv => csv("outcome,displacement", [format!("fixes_origin,{}", num(displacement))]),
            };
            return Ok(Output { text, violation: false });
        }
        Err(e) => return Err(e.into()),
    };
    let lemmas_hold = report.norm_ok() && report.power_distance_ok() && report.rotation_ok() && report.resume_ok();
    let small = report.delta < lambda_n(n);
    let text = match format {
        OutputFormat::Json => to_json(&CertifyOutput { outcome: "certified", report: &report }),
        OutputFormat::Csv => csv(BoundReport::CSV_HEADER, [report.csv_row()]),
    };
    Ok(Output {
        text,
        violation: !lemmas_hold || (small && !report.verdict),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeRow {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub volume: f64,
    pub ln_volume: f64,
    pub sigma_4n: f64,
    pub manifold_volume_recomputed: Option<f64>,
    pub manifold_volume_printed: Option<f64>,
    pub manifold_ln_volume_recomputed: Option<f64>,
    pub manifold_ln_volume_printed: Option<f64>,
}

impl VolumeRow {
    pub const CSV_HEADER: &'static str = "n,R,volume,ln_volume,sigma_4n,manifold_volume_recomputed,manifold_volume_printed,manifold_ln_volume_recomputed,manifold_ln_volume_printed";
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn cmd_volume(n_max: usize, radii: &[f64], format: OutputFormat) -> Result<Output, CliError> {
    if n_max == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if radii.is_empty() {
        return Err(usage("at least one --radius is required"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(usage(format!("radius must be finite and non-negative, got {r}")));
    }
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let bound = if n >= 2 { Some(manifold_volume_lower_bound(n)?) } else { None };
        for &radius in radii {
            let v = ball_volume(n, radius)?;
            rows.push(VolumeRow {
                n,
                radius,
                volume: v.volume,
                ln_volume: v.ln_volume,
                sigma_4n: v.sigma_4n,
                manifold_volume_recomputed: bound.map(|b| b.volume_recomputed),
                manifold_volume_printed: bound.map(|b| b.volume_printed),
                manifold_ln_volume_recomputed: bound.map(|b| b.ln_volume_recomputed),
                manifold_ln_volume_printed: bound.map(|b| b.ln_volume_printed),
            });
        }
    }
    let text = match format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => csv(
            VolumeRow::CSV_HEADER,
            rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.n,
                    num(r.radius),
                    num(r.volume),
                    num(r.ln_volume),
                    num(r.sigma_4n),
                    opt(r.manifold_volume_recomputed),
                    opt(r.manifold_volume_printed),
                    opt(r.manifold_ln_volume_recomputed),
                    opt(r.manifold_ln_volume_printed)
                )
            }),
        ),
    };
    Ok(Output { text, violation: false })
}

#[derive(Clone, Debug, PartialEq)]
enum PointSpec {
    Origin,
    Homogeneous(Vec<Quaternion>),
    Horospherical(HorosphericalCoords),
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct HorosphericalJson {
    xi: Vec<Quaternion>,
    v: [f64; 3],
    u: f64,
}

fn parse_point(arg: &str) -> Result<PointSpec, CliError> {
    if arg == "o" {
        return Ok(PointSpec::Origin);
    }
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        arg.to_string()
    } else {
        read_input(Path::new(arg))?
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("point `{arg}` is not JSON: {e}")))?;
    if value.is_object() {
        let h: HorosphericalJson =
            serde_json::from_value(value).map_err(|e| usage(format!("bad horospherical point: {e}")))?;
        Ok(PointSpec::Horospherical(HorosphericalCoords::new(h.xi, h.v, h.u)))
    } else {
        let coords: Vec<Quaternion> =
            serde_json::from_value(value).map_err(|e| usage(format!("bad homogeneous point: {e}")))?;
        Ok(PointSpec::Homogeneous(coords))
    }
}

fn point_dim(p: &PointSpec) -> Option<usize> {
    match p {
        PointSpec::Origin => None,
        PointSpec::Homogeneous(z) => Some(z.len()),
        PointSpec::Horospherical(h) => Some(h.xi.len() + 2),
    }
}

fn resolve_point(p: PointSpec, form: &ModelForm) -> Result<Vec<Quaternion>, CliError> {
    match p {
        PointSpec::Origin => Ok(form.origin()),
        PointSpec::Homogeneous(z) => Ok(z),
        PointSpec::Horospherical(h) => {
            if form.kind() != ModelKind::HalfSpace {
                return Err(usage("horospherical points require the half-space model"));
            }
            if !(h.u > 0.0 && h.u.is_finite()) {
                return Err(CliError::Domain(Error::InvalidParameter(format!(
                    "horospherical height must be positive, got {}",
                    h.u
                ))));
            }
            Ok(from_horospherical(&h))
        }
    }
}

pub fn cmd_distance(a: &str, b: &str, model: Model, format: OutputFormat) -> Result<Output, CliError> {
    let (pa, pb) = (parse_point(a)?, parse_point(b)?);
    let dim = match (point_dim(&pa), point_dim(&pb)) {
        (Some(x), Some(y)) if x != y => {
            return Err(usage(format!("points live in different dimensions ({x} and {y})")));
        }
        (Some(x), _) | (None, Some(x)) => x,
        (None, None) => 3,
    };
    if dim < 2 {
        return Err(usage("points need at least two homogeneous coordinates"));
    }
    let form = ModelForm::new(dim - 1, model.into())?;
    let (x, y) = (resolve_point(pa, &form)?, resolve_point(pb, &form)?);
    let rho = distance_between(&x, &y, &form).map_err(|e| match e {
        Error::DimensionMismatch { .. } => CliError::from(e),
        other => CliError::Domain(other),
    })?;
    let text = match format {
        OutputFormat::Json => to_json(&serde_json::json!({ "rho": rho })),
        OutputFormat::Csv => csv("rho", [num(rho)]),
    };
    Ok(Output { text, violation: false })
}
