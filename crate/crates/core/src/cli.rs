//! JSON run configuration and the `simulate`, `check-warping` and `slice`
//! commands behind the `wmcf` binary.
//!
//! A configuration document pins a whole experiment:
//!
//! ```json
//! {
//!   "space": {"kind": "sphere", "n": 3, "lambda1": 1.0},
//!   "warping": {"family": "cosh", "a": 1.0},
//!   "initial": {"type": "cosine", "c0": 0.0, "c1": 0.2, "mode": 1},
//!   "solver": {"grid_n": 128, "t_end": 5.0},
//!   "scenario": {"kind": "theorem_a", "a0": 0.5},
//!   "theta_floor": 0.98
//! }
//! ```

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Deserialize;
use thiserror::Error;

use crate::compare::{
    conserved_product, solve_slice, uniform_times, verify_trajectory, CompareError, Scenario,
    DEFAULT_SLICE_REL_TOL,
};
use crate::flow::{self, initial_constant, initial_cosine, SolverConfig};
use crate::format::fmt_f64;
use crate::geometry::derive;
use crate::space::{SpaceKind, SymmetricSpace};
use crate::warp::{
    check_theorem_a_with_tolerance, check_theorem_b_with_tolerance, WarpFamily, WarpingFunction,
    DEFAULT_CHECK_TOLERANCE,
};

/// Largest relative drift of the slice product accepted by `slice`.
pub const SLICE_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid {field}: {constraint}")]
    Validation { field: String, constraint: String },
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    fn invalid(field: &str, constraint: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.to_string(),
            constraint: constraint.into(),
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> Self {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 4,
            _ => 5,
        }
    }
}

/// Normal outcomes of a command; errors map through [`CliError::exit_code`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Warping check failed, or slice drift above [`SLICE_DRIFT_LIMIT`].
    CheckFailed,
    /// The flow (or a slice) stopped before `t_end`.
    EventTerminated,
    VerificationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::CheckFailed => 1,
            Outcome::EventTerminated => 2,
            Outcome::VerificationFailed => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceSpec {
    kind: SpaceKind,
    n: usize,
    #[serde(default = "one")]
    lambda1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct WarpSpec {
    family: WarpFamily,
    a: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `c0 + c1·cos(mode·π·x/L)`.
    Cosine {
        c0: f64,
        c1: f64,
        #[serde(default = "one_u32")]
        mode: u32,
    },
    Constant { z0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ScenarioSpec {
    None,
    TheoremA { a0: f64 },
    TheoremB { alpha: f64, a1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    num_samples: Option<usize>,
    z_probe_lo: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlice {
    phibar0: Option<f64>,
    rel_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    space: Option<SpaceSpec>,
    warping: Option<WarpSpec>,
    initial: Option<InitialSpec>,
    solver: Option<SolverConfig>,
    scenario: Option<ScenarioSpec>,
    theta_floor: Option<f64>,
    check: Option<RawCheck>,
    slice: Option<RawSlice>,
    output_dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// Settings of `check-warping`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSettings {
    pub num_samples: usize,
    /// Lower end of the Theorem B sample range.
    pub z_probe_lo: f64,
    pub tolerance: f64,
}

/// Settings of `slice`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSettings {
    pub phibar0: f64,
    pub rel_tol: f64,
}

/// A validated configuration document.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub space: SymmetricSpace,
    pub warping: WarpingFunction,
    pub initial: Option<InitialSpec>,
    pub solver: SolverConfig,
    pub scenario: Option<Scenario>,
    /// Lower bound required of `min Θ`; zero only reports.
    pub theta_floor: f64,
    pub check: CheckSettings,
    pub slice: SliceSettings,
    pub output_dir: PathBuf,
}

fn finite(field: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::invalid(field, "must be finite"))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| CliError::Parse {
        path: ".".to_string(),
        message: e.to_string(),
    })?;

    let space = raw
        .space
        .map(|s| SymmetricSpace::new(s.kind, s.n, s.lambda1))
        .transpose()
        .map_err(|e| CliError::invalid("space", e.to_string()))?;
    let solver = raw.solver.unwrap_or_default();
    if let Err(flow::FlowError::Config(c)) = solver.validate() {
        return Err(CliError::invalid("solver", c));
    }
    let warping = raw.warping.map(build_warping).transpose()?;
    if let Some(initial) = &raw.initial {
        match *initial {
            InitialSpec::Cosine { c0, c1, .. } => {
                finite("initial.c0", c0)?;
                finite("initial.c1", c1)?;
            }
            InitialSpec::Constant { z0 } => {
                finite("initial.z0", z0)?;
            }
        }
    }
    let theta_floor = raw.theta_floor.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&theta_floor) {
        return Err(CliError::invalid("theta_floor", "theta_floor in [0,1]"));
    }

    let space = space.ok_or_else(|| CliError::invalid("space", "section is required"))?;
    let warping = warping.ok_or_else(|| CliError::invalid("warping", "section is required"))?;
    let domain = warping.domain();

    let scenario = match raw.scenario.unwrap_or(ScenarioSpec::None) {
        ScenarioSpec::None => None,
        ScenarioSpec::TheoremA { a0 } => {
            if warping.family() != WarpFamily::Cosh || !domain.hi.is_finite() {
                return Err(CliError::invalid(
                    "scenario",
                    "theorem_a needs cosh warping with finite a",
                ));
            }
            if !(a0 > 0.0 && a0 < domain.hi) {
                return Err(CliError::invalid("scenario.a0", "a0 in (0, a)"));
            }
            Some(Scenario::TheoremA { a0 })
        }
        ScenarioSpec::TheoremB { alpha, a1 } => {
            if warping.family() != WarpFamily::Power {
                return Err(CliError::invalid("scenario", "theorem_b needs power warping"));
            }
            if !(alpha > 1.0 && alpha.is_finite()) {
                return Err(CliError::invalid("scenario.alpha", "alpha > 1"));
            }
            if !(finite("scenario.a1", a1)? < domain.hi) {
                return Err(CliError::invalid("scenario.a1", "a1 < a"));
            }
            Some(Scenario::TheoremB { alpha, a1 })
        }
    };

    let raw_check = raw.check.unwrap_or_default();
    let num_samples = raw_check.num_samples.unwrap_or(1001);
    if num_samples < 3 {
        return Err(CliError::invalid("check.num_samples", "num_samples >= 3"));
    }
    let z_probe_lo = match raw_check.z_probe_lo {
        Some(z) => finite("check.z_probe_lo", z)?,
        None => match scenario {
            Some(Scenario::TheoremB { a1, .. }) => (domain.hi - 10.0).min(a1 - 1.0),
            _ => domain.hi - 10.0,
        },
    };
    if !(z_probe_lo < domain.hi) {
        return Err(CliError::invalid("check.z_probe_lo", "z_probe_lo < a"));
    }
    let tolerance = raw_check.tolerance.unwrap_or(DEFAULT_CHECK_TOLERANCE);
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(CliError::invalid("check.tolerance", "tolerance >= 0"));
    }

    let raw_slice = raw.slice.unwrap_or_default();
    let phibar0 = raw_slice.phibar0.unwrap_or(1.0);
    if !(phibar0 > 0.0 && phibar0.is_finite()) {
        return Err(CliError::invalid("slice.phibar0", "phibar0 > 0"));
    }
    let rel_tol = raw_slice.rel_tol.unwrap_or(DEFAULT_SLICE_REL_TOL);
    if !(rel_tol > 1e-14 && rel_tol < 1e-3) {
        return Err(CliError::invalid("slice.rel_tol", "rel_tol in (1e-14, 1e-3)"));
    }

    Ok(RunConfig {
        space,
        warping,
        initial: raw.initial,
        solver,
        scenario,
        theta_floor,
        check: CheckSettings {
            num_samples,
            z_probe_lo,
            tolerance,
        },
        slice: SliceSettings { phibar0, rel_tol },
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
    })
}

fn build_warping(spec: WarpSpec) -> Result<WarpingFunction, CliError> {
    let warp_err = |e: crate::warp::WarpError| CliError::invalid("warping", e.to_string());
    match spec.family {
        WarpFamily::Cosh => {
            if spec.beta.is_some() {
                return Err(CliError::invalid("warping.beta", "not used by cosh"));
            }
            WarpingFunction::cosh(spec.a.unwrap_or(f64::INFINITY)).map_err(warp_err)
        }
        WarpFamily::Power => {
            let a = spec
                .a
                .ok_or_else(|| CliError::invalid("warping.a", "required for power"))?;
            let beta = spec
                .beta
                .ok_or_else(|| CliError::invalid("warping.beta", "required for power"))?;
            WarpingFunction::power(a, beta).map_err(warp_err)
        }
        WarpFamily::Tabulated => Err(CliError::invalid(
            "warping.family",
            "tabulated warpings are only available through the library",
        )),
    }
}

/// Reads and parses a configuration file; `out` overrides `output_dir`.
pub fn load_config(path: &Path, out: Option<&Path>) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(CliError::io(format!("cannot read config {}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = out {
        cfg.output_dir = out.to_path_buf();
    }
    Ok(cfg)
}

fn create_output(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir)
        .map_err(CliError::io(format!("cannot create output directory {}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(CliError::io(format!("cannot create {}", path.display())))
}

fn write_output(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let mut out = create_output(dir, name)?;
    let context = || format!("cannot write {}", dir.join(name).display());
    body(&mut out).map_err(CliError::io(context()))?;
    out.flush().map_err(CliError::io(context()))
}

fn scenario_error(e: CompareError) -> CliError {
    CliError::invalid("scenario", e.to_string())
}

/// Runs the flow and writes `series.csv`, `profile_t{t}.csv` snapshots and,
/// with a scenario, `verification.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let initial = cfg
        .initial
        .ok_or_else(|| CliError::Usage("simulate needs an initial section".into()))?;
    let grid_n = cfg.solver.grid_n;
    let p0 = match initial {
        InitialSpec::Cosine { c0, c1, mode } => initial_cosine(cfg.space, c0, c1, mode, grid_n),
        InitialSpec::Constant { z0 } => initial_constant(cfg.space, z0, grid_n),
    }
    .map_err(|e| CliError::invalid("initial", e.to_string()))?;

    let traj = flow::run(&p0, &cfg.warping, &cfg.solver)
        .map_err(|e| CliError::Usage(format!("flow run failed: {e}")))?;
    let dir = &cfg.output_dir;
    write_output(dir, "series.csv", |out| traj.write_series_csv(out))?;
    for snap in &traj.snapshots {
        match derive(&snap.profile, &cfg.warping) {
            Ok(d) => {
                let name = format!("profile_t{}.csv", fmt_f64(snap.t));
                write_output(dir, &name, |out| d.write_csv(&snap.profile, out))?;
            }
            Err(e) => warn!("skipping snapshot at t = {}: {e}", snap.t),
        }
    }

    let last = traj.series.last().expect("series is never empty");
    println!(
        "event={} t={} steps={} min_u={} max_u={}",
        traj.event.label(),
        fmt_f64(last.t),
        traj.steps,
        fmt_f64(last.min_u),
        fmt_f64(last.max_u)
    );

    let mut verified = true;
    if let Some(scenario) = &cfg.scenario {
        let report =
            match verify_trajectory(&traj, &cfg.warping, &cfg.space, scenario, cfg.theta_floor) {
                Ok(r) => r,
                Err(e) if traj.event.is_abnormal() => {
                    warn!("no verification report for a terminated run: {e}");
                    return Ok(Outcome::EventTerminated);
                }
                Err(e) => return Err(scenario_error(e)),
            };
        write_output(dir, "verification.json", |out| {
            writeln!(out, "{}", report.to_json())
        })?;
        verified = report.passed();
        println!(
            "verification={} bound={:?}",
            if verified { "passed" } else { "failed" },
            report.bound.status
        );
    }

    Ok(if traj.event.is_abnormal() {
        Outcome::EventTerminated
    } else if !verified {
        Outcome::VerificationFailed
    } else {
        Outcome::Success
    })
}

/// Checks the warping against the scenario's hypotheses and prints the
/// report as JSON.
pub fn cmd_check_warping(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scenario = cfg
        .scenario
        .ok_or_else(|| CliError::Usage("check-warping needs a scenario".into()))?;
    let w = &cfg.warping;
    let c = &cfg.check;
    let report = match scenario {
        Scenario::TheoremA { .. } => {
            check_theorem_a_with_tolerance(w, w.domain().hi, c.num_samples, c.tolerance)
        }
        Scenario::TheoremB { alpha, .. } => check_theorem_b_with_tolerance(
            w,
            alpha,
            c.z_probe_lo,
            w.domain().hi,
            c.num_samples,
            c.tolerance,
        ),
    }
    .map_err(|e| CliError::invalid("check", e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(if report.passed {
        Outcome::Success
    } else {
        Outcome::CheckFailed
    })
}

/// Solves the slice system from the constant initial value and writes
/// `slice.csv`.
pub fn cmd_slice(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Some(InitialSpec::Constant { z0 }) = cfg.initial else {
        return Err(CliError::Usage(
            "slice needs constant initial data ({\"type\": \"constant\", \"z0\": ...})".into(),
        ));
    };
    let w = &cfg.warping;
    let times = uniform_times(cfg.solver.t_end, cfg.solver.output_every);
    let sol = solve_slice(w, cfg.space.n(), z0, cfg.slice.phibar0, &times, cfg.slice.rel_tol)
        .map_err(|e| CliError::invalid("initial", e.to_string()))?;

    let mut products = Vec::with_capacity(sol.states.len());
    for s in &sol.states {
        products.push(conserved_product(w, s).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    write_output(&cfg.output_dir, "slice.csv", |out| {
        writeln!(out, "t,Z,phibar,conserved_product")?;
        for (s, c) in sol.states.iter().zip(&products) {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(s.z),
                fmt_f64(s.phibar),
                fmt_f64(*c)
            )?;
        }
        Ok(())
    })?;

    let drift = compare_drift(&products);
    println!("max_relative_drift={}", fmt_f64(drift));
    if let Some(t) = sol.exit {
        info!("slice left the warping domain near t = {t}");
        println!("slice left the warping domain near t={}", fmt_f64(t));
        return Ok(Outcome::EventTerminated);
    }
    Ok(if drift <= SLICE_DRIFT_LIMIT {
        Outcome::Success
    } else {
        Outcome::CheckFailed
    })
}

fn compare_drift(products: &[f64]) -> f64 {
    let Some(&c0) = products.first() else {
        return 0.0;
    };
    products
        .iter()
        .map(|c| (c / c0 - 1.0).abs())
        .fold(0.0, f64::max)
}
