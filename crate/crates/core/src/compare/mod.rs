//! Slice barriers and gradient certificates.
//!
//! A slice is a spatially constant solution `Z(t)` of the reduced flow,
//! `Z' = -n r'(Z)/r(Z)`. Slices started above and below the initial data
//! bound the flow from both sides. Along a slice the companion quantity
//! `φ̄' = 2n φ̄ (r'(Z)/r(Z))²` keeps `φ̄·r(Z)²` constant, which is what the
//! Theorem A gradient bound is built from.

mod dopri;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{FlowEvent, Trajectory};
use crate::space::SymmetricSpace;
use crate::warp::{WarpError, WarpingFunction};

pub use dopri::{integrate, Halt, Tolerances};

/// Slack applied to the strict comparison and bound inequalities.
pub const COMPARISON_SLACK: f64 = 1e-10;

/// Default relative tolerance of the slice ODE solver.
pub const DEFAULT_SLICE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("gradient hypothesis violated: n - 2(n+1)·phi0·log R0 = {denominator} <= 0")]
    HypothesisViolation { denominator: f64 },
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
    #[error(transparent)]
    Warp(#[from] WarpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceState {
    pub t: f64,
    pub z: f64,
    pub phibar: f64,
}

/// Samples of a slice solution. `exit` is set when `Z` reached the edge of
/// the warping domain before the last requested time; `states` then ends
/// at the last sample reached.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSolution {
    pub states: Vec<SliceState>,
    pub exit: Option<f64>,
}

impl SliceSolution {
    /// Largest relative deviation of `φ̄·r(Z)²` from its initial value.
    pub fn conservation_drift(&self, w: &WarpingFunction) -> Result<f64, CompareError> {
        let Some(first) = self.states.first() else {
            return Ok(0.0);
        };
        let c0 = conserved_product(w, first)?;
        let mut worst: f64 = 0.0;
        for s in &self.states {
            worst = worst.max((conserved_product(w, s)? / c0 - 1.0).abs());
        }
        Ok(worst)
    }
}

/// `φ̄·r(Z)²`.
pub fn conserved_product(w: &WarpingFunction, s: &SliceState) -> Result<f64, CompareError> {
    let r = w.evaluate(s.z)?.r;
    Ok(s.phibar * r * r)
}

/// `k·every` for `k = 0, 1, ...` up to `t_end`, which is always included.
pub fn uniform_times(t_end: f64, every: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    let mut k = 1usize;
    loop {
        let t = k as f64 * every;
        if t >= t_end || t_end - t <= 1e-9 * every {
            break;
        }
        times.push(t);
        k += 1;
    }
    if t_end > 0.0 {
        times.push(t_end);
    }
    times
}

/// Solves the slice system from `(z0, phibar0)` and samples it at `times`.
pub fn solve_slice(
    w: &WarpingFunction,
    n: usize,
    z0: f64,
    phibar0: f64,
    times: &[f64],
    rel_tol: f64,
) -> Result<SliceSolution, CompareError> {
    if !w.domain().contains(z0) {
        return Err(CompareError::Precondition(format!(
            "z0 = {z0} is not inside the warping domain"
        )));
    }
    if !(rel_tol > 1e-14 && rel_tol < 1e-3) {
        return Err(CompareError::Precondition(format!(
            "rel_tol must lie in (1e-14, 1e-3), got {rel_tol}"
        )));
    }
    if !(phibar0 > 0.0 && phibar0.is_finite()) {
        return Err(CompareError::Precondition(format!(
            "phibar0 must be positive, got {phibar0}"
        )));
    }
    if n == 0 {
        return Err(CompareError::Precondition("n must be positive".into()));
    }
    if times.first().is_some_and(|&t| t < 0.0) || times.windows(2).any(|p| p[1] < p[0]) {
        return Err(CompareError::Precondition(
            "sample times must be non-negative and non-decreasing".into(),
        ));
    }

    let nf = n as f64;
    let rhs = |_t: f64, y: &[f64; 2]| -> Option<[f64; 2]> {
        let v = w.evaluate(y[0]).ok()?;
        let q = v.r1 / v.r;
        Some([-nf * q, 2.0 * nf * y[1] * q * q])
    };
    let tol = Tolerances {
        rel: rel_tol,
        abs: rel_tol * 1e-6,
    };
    let (samples, halt) = integrate(rhs, 0.0, [z0, phibar0], times, tol);
    Ok(SliceSolution {
        states: samples
            .into_iter()
            .map(|(t, y)| SliceState {
                t,
                z: y[0],
                phibar: y[1],
            })
            .collect(),
        exit: halt.map(|(_, t)| t),
    })
}

/// Uniform bound `nφ(0)/(n - 2(n+1)φ(0) log R0)` on `φ(t)` under the
/// Theorem A hypotheses.
pub fn bound_theorem_a(n: usize, phi0: f64, r0: f64) -> Result<f64, CompareError> {
    if n == 0 {
        return Err(CompareError::Precondition("n must be positive".into()));
    }
    if !(phi0 >= 0.0 && phi0.is_finite()) {
        return Err(CompareError::Precondition(format!(
            "phi0 must be non-negative, got {phi0}"
        )));
    }
    if !(r0 > 1.0 && r0.is_finite()) {
        return Err(CompareError::Precondition(format!(
            "R0 must be greater than 1, got {r0}"
        )));
    }
    let nf = n as f64;
    let denominator = nf - 2.0 * (nf + 1.0) * phi0 * r0.ln();
    // Within rounding of zero counts as the boundary of the admissible set.
    if !(denominator > 8.0 * f64::EPSILON * nf) {
        return Err(CompareError::HypothesisViolation { denominator });
    }
    Ok(nf * phi0 / denominator)
}

/// `sqrt(n(α-1)/(n+1))·r(Z)`, the Theorem B bound on `|û'|`.
pub fn bound_theorem_b(n: usize, alpha: f64, r_of_z: f64) -> Result<f64, CompareError> {
    if !(alpha > 1.0) {
        return Err(CompareError::Precondition(format!(
            "alpha must be greater than one, got {alpha}"
        )));
    }
    if n == 0 || !(r_of_z > 0.0) {
        return Err(CompareError::Precondition(
            "n and r(Z) must be positive".into(),
        ));
    }
    let nf = n as f64;
    Ok((nf * (alpha - 1.0) / (nf + 1.0)).sqrt() * r_of_z)
}

/// Which long-time existence result a run is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Symmetric domain `(-a, a)` with barriers started at `±a0`.
    TheoremA { a0: f64 },
    /// Domain `(-∞, a)` with the lower barrier started at `a1`.
    TheoremB { alpha: f64, a1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Satisfied,
    Violated,
    /// The initial data do not meet the theorem's hypotheses, so the bound
    /// is not claimed (and for Theorem A may not even exist).
    HypothesisUnverified,
}

/// Two-sided (or one-sided) barrier check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCheck {
    pub ok: bool,
    pub worst_margin: f64,
    pub worst_t: f64,
    pub lower_start: f64,
    pub upper_start: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub ok: bool,
    pub status: BoundStatus,
    pub worst_margin: f64,
    pub worst_t: f64,
    /// The Theorem A bound on `φ`, when it exists.
    pub phi_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaCheck {
    pub ok: bool,
    pub min_theta: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// `max|û₀| < a0` (A) or `min û₀ > a1` (B).
    pub height_ok: bool,
    /// The initial gradient condition.
    pub gradient_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    /// Pass/fail barrier check: `±a0` for Theorem A, `a1` for Theorem B.
    pub comparison: ComparisonCheck,
    /// Barriers started at the extremes of the initial data.
    pub comparison_tight: ComparisonCheck,
    pub bound: BoundCheck,
    pub theta: ThetaCheck,
    pub hypotheses: HypothesisCheck,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.comparison.ok && self.bound.ok && self.theta.ok
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_scenario(
    traj: &Trajectory,
    w: &WarpingFunction,
    space: &SymmetricSpace,
    scenario: &Scenario,
) -> Result<(), CompareError> {
    let mismatch = |s: String| Err(CompareError::ScenarioMismatch(s));
    if traj.space != *space {
        return mismatch("trajectory was computed on a different space".into());
    }
    if traj.warp_family != w.family() || traj.warp_domain != w.domain() {
        return mismatch("trajectory was computed with a different warping function".into());
    }
    if traj.series.is_empty() || traj.snapshots.is_empty() {
        return mismatch("trajectory is empty".into());
    }
    let dom = w.domain();
    match *scenario {
        Scenario::TheoremA { a0 } => {
            if dom.lo != -dom.hi {
                return mismatch(format!(
                    "theorem A needs a symmetric domain, got ({}, {})",
                    dom.lo, dom.hi
                ));
            }
            if !(a0 > 0.0 && a0 < dom.hi) {
                return mismatch(format!("a0 = {a0} must lie in (0, {})", dom.hi));
            }
        }
        Scenario::TheoremB { alpha, a1 } => {
            if dom.lo != f64::NEG_INFINITY {
                return mismatch(format!(
                    "theorem B needs a domain unbounded below, got ({}, {})",
                    dom.lo, dom.hi
                ));
            }
            if !(alpha > 1.0) {
                return mismatch(format!("alpha = {alpha} must exceed 1"));
            }
            if !(a1 < dom.hi) {
                return mismatch(format!("a1 = {a1} must be below {}", dom.hi));
            }
        }
    }
    Ok(())
}

/// Running minimum of a margin over time.
struct Worst {
    margin: f64,
    t: f64,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            t: 0.0,
        }
    }

    fn update(&mut self, t: f64, m: f64) {
        if !(m >= self.margin) {
            self.margin = m;
            self.t = t;
        }
    }
}

fn barrier_check(
    traj: &Trajectory,
    w: &WarpingFunction,
    n: usize,
    lower: f64,
    upper: Option<f64>,
    times: &[f64],
) -> Result<ComparisonCheck, CompareError> {
    let lo = solve_slice(w, n, lower, 1.0, times, DEFAULT_SLICE_REL_TOL)?;
    let hi = match upper {
        Some(z) => Some(solve_slice(w, n, z, 1.0, times, DEFAULT_SLICE_REL_TOL)?),
        None => None,
    };
    let mut worst = Worst::new();
    for (k, e) in traj.series.iter().enumerate() {
        let m_lo = lo.states.get(k).map_or(f64::NAN, |s| e.min_u - s.z);
        let m_hi = match &hi {
            Some(h) => h.states.get(k).map_or(f64::NAN, |s| s.z - e.max_u),
            None => f64::INFINITY,
        };
        let m = if m_lo.is_nan() || m_hi.is_nan() {
            f64::NAN
        } else {
            m_lo.min(m_hi)
        };
        worst.update(e.t, m);
    }
    Ok(ComparisonCheck {
        ok: worst.margin > -COMPARISON_SLACK,
        worst_margin: worst.margin,
        worst_t: worst.t,
        lower_start: lower,
        upper_start: upper,
    })
}

/// Checks a finished run against the barrier, gradient-bound and angle
/// statements of the chosen scenario. `φ(t)` is taken from the run's own
/// series.
pub fn verify_trajectory(
    traj: &Trajectory,
    w: &WarpingFunction,
    space: &SymmetricSpace,
    scenario: &Scenario,
    theta_floor: f64,
) -> Result<VerificationReport, CompareError> {
    check_scenario(traj, w, space, scenario)?;
    let n = space.n();
    let times: Vec<f64> = traj.series.iter().map(|e| e.t).collect();
    let first = traj.series[0];
    let phi0 = first.phi;

    let comparison_tight = barrier_check(traj, w, n, first.min_u, Some(first.max_u), &times)?;

    let (comparison, bound, hypotheses) = match *scenario {
        Scenario::TheoremA { a0 } => {
            let comparison = barrier_check(traj, w, n, -a0, Some(a0), &times)?;
            let r0 = w.evaluate(a0)?.r.max(w.evaluate(-a0)?.r);
            let height_ok = first.min_u > -a0 && first.max_u < a0;
            let (bound, gradient_ok) = match bound_theorem_a(n, phi0, r0) {
                Ok(b) => {
                    let mut worst = Worst::new();
                    for e in &traj.series {
                        worst.update(e.t, b - e.phi);
                    }
                    let within = worst.margin >= -COMPARISON_SLACK;
                    let status = if !height_ok {
                        BoundStatus::HypothesisUnverified
                    } else if within {
                        BoundStatus::Satisfied
                    } else {
                        BoundStatus::Violated
                    };
                    (
                        BoundCheck {
                            ok: status == BoundStatus::Satisfied,
                            status,
                            worst_margin: worst.margin,
                            worst_t: worst.t,
                            phi_bound: Some(b),
                        },
                        true,
                    )
                }
                Err(CompareError::HypothesisViolation { .. }) => (
                    BoundCheck {
                        ok: false,
                        status: BoundStatus::HypothesisUnverified,
                        worst_margin: f64::NAN,
                        worst_t: 0.0,
                        phi_bound: None,
                    },
                    false,
                ),
                Err(e) => return Err(e),
            };
            (comparison, bound, HypothesisCheck { height_ok, gradient_ok })
        }
        Scenario::TheoremB { alpha, a1 } => {
            let comparison = barrier_check(traj, w, n, a1, None, &times)?;
            let z = solve_slice(w, n, a1, 1.0, &times, DEFAULT_SLICE_REL_TOL)?;
            let height_ok = first.min_u > a1;
            let gradient_ok = phi0.sqrt() < bound_theorem_b(n, alpha, w.evaluate(a1)?.r)?;
            let mut worst = Worst::new();
            for (k, e) in traj.series.iter().enumerate() {
                let m = match z.states.get(k) {
                    Some(s) => bound_theorem_b(n, alpha, w.evaluate(s.z)?.r)? - e.phi.sqrt(),
                    None => f64::NAN,
                };
                worst.update(e.t, m);
            }
            let within = worst.margin > -COMPARISON_SLACK;
            let status = if !(height_ok && gradient_ok) {
                BoundStatus::HypothesisUnverified
            } else if within {
                BoundStatus::Satisfied
            } else {
                BoundStatus::Violated
            };
            (
                comparison,
                BoundCheck {
                    ok: status == BoundStatus::Satisfied,
                    status,
                    worst_margin: worst.margin,
                    worst_t: worst.t,
                    phi_bound: None,
                },
                HypothesisCheck { height_ok, gradient_ok },
            )
        }
    };

    let min_theta = traj
        .series
        .iter()
        .map(|e| e.min_theta)
        .fold(f64::INFINITY, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.min(v) });
    let theta = ThetaCheck {
        ok: min_theta >= theta_floor,
        min_theta,
        floor: theta_floor,
    };

    if let FlowEvent::DomainExit(t) | FlowEvent::GradientBlowup(t) | FlowEvent::StepUnderflow(t) =
        traj.event
    {
        log::info!("verifying a run that ended early at t = {t}");
    }

    Ok(VerificationReport {
        comparison,
        comparison_tight,
        bound,
        theta,
        hypotheses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{initial_constant, initial_cosine, run, SolverConfig};
    use crate::space::SpaceKind;

    fn cosh_closed_form(n: f64, z0: f64, t: f64) -> f64 {
        (z0.sinh() * (-n * t).exp()).asinh()
    }

    #[test]
    fn cosh_slice_against_closed_form() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let times = uniform_times(1.0, 0.05);
        let sol = solve_slice(&w, 3, 0.5, 1.0, &times, 1e-10).unwrap();
        assert!(sol.exit.is_none());
        assert_eq!(sol.states.len(), 21);
        let z1 = sol.states.last().unwrap().z;
        let exact = cosh_closed_form(3.0, 0.5, 1.0);
        assert!((exact - 0.0259409).abs() < 1e-7);
        assert!((z1 - exact).abs() <= 1e-10 * exact.abs(), "{z1} vs {exact}");
        for s in &sol.states {
            assert!((s.z - cosh_closed_form(3.0, 0.5, s.t)).abs() <= 1e-9);
        }
    }

    #[test]
    fn neck_slice_is_stationary() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let sol = solve_slice(&w, 3, 0.0, 0.7, &uniform_times(2.0, 0.5), 1e-8).unwrap();
        for s in &sol.states {
            assert_eq!(s.z, 0.0);
            assert_eq!(s.phibar, 0.7);
        }
    }

    #[test]
    fn conserved_product_cosh() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let sol = solve_slice(&w, 3, 0.5, 2.0, &uniform_times(10.0, 0.05), DEFAULT_SLICE_REL_TOL)
            .unwrap();
        let c = conserved_product(&w, &sol.states[0]).unwrap();
        assert!((c - 2.5430806).abs() < 1e-7);
        assert!(sol.conservation_drift(&w).unwrap() <= 1e-8);
    }

    #[test]
    fn slice_preconditions() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let t = [0.0, 1.0];
        assert!(solve_slice(&w, 3, 1.0, 1.0, &t, 1e-8).is_err());
        assert!(solve_slice(&w, 3, 0.5, 1.0, &t, 1e-2).is_err());
        assert!(solve_slice(&w, 3, 0.5, 1.0, &t, 1e-15).is_err());
        assert!(solve_slice(&w, 3, 0.5, 0.0, &t, 1e-8).is_err());
        assert!(solve_slice(&w, 3, 0.5, 1.0, &[1.0, 0.5], 1e-8).is_err());
    }

    #[test]
    fn slice_stops_at_domain_edge() {
        // Z' = -n r'/r pushes Z toward the singular end for this warping.
        let w = WarpingFunction::tabulated(
            "decreasing",
            crate::warp::Interval::new(0.0, 10.0).unwrap(),
            |z: f64| ((-z).exp(), -(-z).exp(), (-z).exp()),
        );
        // Here r'/r = -1 so Z grows linearly at rate n and leaves (0, 10).
        let sol = solve_slice(&w, 2, 1.0, 1.0, &uniform_times(10.0, 1.0), 1e-8).unwrap();
        let exit = sol.exit.expect("slice must exit");
        assert!(exit > 4.0 && exit <= 4.5, "exit at {exit}");
        assert!(sol.states.len() < 11);
    }

    #[test]
    fn theorem_a_bound_values() {
        let r0 = 0.5f64.cosh();
        let b = bound_theorem_a(3, 0.04, r0).unwrap();
        let oracle = 3.0 * 0.04 / (3.0 - 8.0 * 0.04 * r0.ln());
        assert_eq!(b, oracle);
        assert!((b - 0.0405191).abs() < 1e-7);
        assert_eq!(bound_theorem_a(3, 0.0, r0).unwrap(), 0.0);
        let tiny = bound_theorem_a(3, 1e-9, r0).unwrap();
        assert!((tiny / 1e-9 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn theorem_a_bound_rejects_inadmissible() {
        // log R0 = 3/8 puts phi0 = 1 on the edge of the admissible set.
        match bound_theorem_a(3, 1.0, 0.375f64.exp()) {
            Err(CompareError::HypothesisViolation { denominator }) => {
                assert!(denominator.abs() < 1e-14)
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            bound_theorem_a(3, 1.0, 0.4f64.exp()),
            Err(CompareError::HypothesisViolation { .. })
        ));
        assert!(bound_theorem_a(3, 0.1, 1.0).is_err());
    }

    #[test]
    fn theorem_a_bound_monotone() {
        let mut prev = 0.0;
        for k in 1..50 {
            let b = bound_theorem_a(4, 0.01 * k as f64, 1.1).unwrap();
            assert!(b > prev);
            prev = b;
        }
        let mut prev = 0.0;
        for k in 1..50 {
            let b = bound_theorem_a(4, 0.1, 1.0 + 0.01 * k as f64).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn theorem_b_bound_values() {
        assert!((bound_theorem_b(3, 2.0, 1.0).unwrap() - 0.8660254).abs() < 1e-7);
        assert!((bound_theorem_b(4, 2.0, 1.0).unwrap() - 0.8944272).abs() < 1e-7);
        assert!(bound_theorem_b(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn uniform_times_include_end() {
        assert_eq!(uniform_times(0.33, 0.1), vec![0.0, 0.1, 0.2, 0.30000000000000004, 0.33]);
        assert_eq!(uniform_times(1.0, 0.5), vec![0.0, 0.5, 1.0]);
    }

    fn s3() -> SymmetricSpace {
        SymmetricSpace::new(SpaceKind::Sphere, 3, 1.0).unwrap()
    }

    #[test]
    fn constant_data_sits_between_barriers() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let cfg = SolverConfig {
            grid_n: 32,
            t_end: 1.0,
            ..SolverConfig::default()
        };
        let p = initial_constant(s3(), 0.3, 32).unwrap();
        let traj = run(&p, &w, &cfg).unwrap();
        let rep = verify_trajectory(&traj, &w, &s3(), &Scenario::TheoremA { a0: 0.5 }, 0.5).unwrap();
        assert!(rep.comparison.ok);
        assert!(rep.comparison.worst_margin > 0.0);
        assert!(rep.passed());
        // The tight barriers coincide with the solution itself.
        assert!(rep.comparison_tight.worst_margin.abs() < 1e-9);
        assert!(rep.comparison_tight.ok);
    }

    #[test]
    fn theta_floor_above_one_fails() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let cfg = SolverConfig {
            grid_n: 16,
            t_end: 0.1,
            ..SolverConfig::default()
        };
        let traj = run(&initial_cosine(s3(), 0.0, 0.1, 1, 16).unwrap(), &w, &cfg).unwrap();
        let rep = verify_trajectory(&traj, &w, &s3(), &Scenario::TheoremA { a0: 0.5 }, 1.1).unwrap();
        assert!(!rep.theta.ok);
        assert!(!rep.passed());
    }

    #[test]
    fn scenario_mismatches() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let cfg = SolverConfig {
            grid_n: 16,
            t_end: 0.1,
            ..SolverConfig::default()
        };
        let traj = run(&initial_constant(s3(), 0.1, 16).unwrap(), &w, &cfg).unwrap();
        let b = Scenario::TheoremB { alpha: 2.0, a1: -0.5 };
        assert!(matches!(
            verify_trajectory(&traj, &w, &s3(), &b, 0.0),
            Err(CompareError::ScenarioMismatch(_))
        ));
        let cp2 = SymmetricSpace::new(SpaceKind::ComplexProjective, 4, 1.0).unwrap();
        let a = Scenario::TheoremA { a0: 0.5 };
        assert!(verify_trajectory(&traj, &w, &cp2, &a, 0.0).is_err());
        let other = WarpingFunction::cosh(2.0).unwrap();
        assert!(verify_trajectory(&traj, &other, &s3(), &a, 0.0).is_err());
        assert!(verify_trajectory(&traj, &w, &s3(), &Scenario::TheoremA { a0: 1.0 }, 0.0).is_err());
    }

    #[test]
    fn report_json_shape() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let cfg = SolverConfig {
            grid_n: 16,
            t_end: 0.1,
            ..SolverConfig::default()
        };
        let traj = run(&initial_cosine(s3(), 0.0, 0.2, 1, 16).unwrap(), &w, &cfg).unwrap();
        let rep = verify_trajectory(&traj, &w, &s3(), &Scenario::TheoremA { a0: 0.5 }, 0.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        for key in ["ok", "worst_margin", "worst_t"] {
            assert!(v["comparison"].get(key).is_some());
            assert!(v["bound"].get(key).is_some());
        }
        assert!(v["theta"]["ok"].as_bool().unwrap());
        assert!(v["theta"]["min_theta"].as_f64().unwrap() > 0.9);
        assert_eq!(v["bound"]["status"], "satisfied");
    }
}
