//! Warping functions `r: I -> (0, ∞)` with exact first and second
//! derivatives, and sampled checks of the structural conditions the
//! long-time existence results place on `r`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default slack for the sampled inequality checks.
pub const DEFAULT_CHECK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarpError {
    #[error("z = {z} is not strictly inside the warping domain ({lo}, {hi})")]
    DomainExit { z: f64, lo: f64, hi: f64 },
    #[error("invalid warping parameter: {0}")]
    Parameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("sample range ({lo}, {hi}) is not contained in the warping domain ({dom_lo}, {dom_hi})")]
    DomainMismatch {
        lo: f64,
        hi: f64,
        dom_lo: f64,
        dom_hi: f64,
    },
}

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, WarpError> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(WarpError::Parameter(format!(
                "interval ({lo}, {hi}) is empty"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, z: f64) -> bool {
        z > self.lo && z < self.hi
    }

    /// Distance from `z` to the nearer endpoint; negative outside.
    pub fn distance_to_boundary(&self, z: f64) -> f64 {
        (z - self.lo).min(self.hi - z)
    }

    /// Whether `[lo, hi]` (the closure of the given range) fits inside the
    /// closure of this interval.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.lo <= lo && hi <= self.hi
    }
}

/// Built-in families plus a user-supplied escape hatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarpFamily {
    Cosh,
    Power,
    Tabulated,
}

/// `(r(z), r'(z), r''(z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValue {
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
}

type TripleFn = dyn Fn(f64) -> (f64, f64, f64) + Send + Sync;

#[derive(Clone)]
enum Kind {
    Cosh,
    Power { a: f64, beta: f64 },
    Tabulated { name: String, f: Arc<TripleFn> },
}

/// A smooth positive warping function on an open interval.
#[derive(Clone)]
pub struct WarpingFunction {
    kind: Kind,
    domain: Interval,
}

impl fmt::Debug for WarpingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("WarpingFunction");
        match &self.kind {
            Kind::Cosh => d.field("family", &"cosh"),
            Kind::Power { a, beta } => d.field("family", &"power").field("a", a).field("beta", beta),
            Kind::Tabulated { name, .. } => d.field("family", &"tabulated").field("name", name),
        };
        d.field("domain", &self.domain).finish()
    }
}

impl WarpingFunction {
    /// `r(z) = cosh z` on `(-a, a)`. `a` may be infinite.
    pub fn cosh(a: f64) -> Result<Self, WarpError> {
        if !(a > 0.0) {
            return Err(WarpError::Parameter(format!(
                "cosh half-width a must be positive, got {a}"
            )));
        }
        Ok(WarpingFunction {
            kind: Kind::Cosh,
            domain: Interval { lo: -a, hi: a },
        })
    }

    /// `r(z) = (a - z)^(-beta)` on `(-∞, a)`.
    pub fn power(a: f64, beta: f64) -> Result<Self, WarpError> {
        if !a.is_finite() {
            return Err(WarpError::Parameter(format!(
                "power endpoint a must be finite, got {a}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(WarpError::Parameter(format!(
                "power exponent beta must be positive, got {beta}"
            )));
        }
        Ok(WarpingFunction {
            kind: Kind::Power { a, beta },
            domain: Interval {
                lo: f64::NEG_INFINITY,
                hi: a,
            },
        })
    }

    /// A user-supplied triple `z -> (r, r', r'')` on `domain`. The caller is
    /// responsible for the derivatives being consistent.
    pub fn tabulated<F>(name: impl Into<String>, domain: Interval, f: F) -> Self
    where
        F: Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
    {
        WarpingFunction {
            kind: Kind::Tabulated {
                name: name.into(),
                f: Arc::new(f),
            },
            domain,
        }
    }

    pub fn family(&self) -> WarpFamily {
        match self.kind {
            Kind::Cosh => WarpFamily::Cosh,
            Kind::Power { .. } => WarpFamily::Power,
            Kind::Tabulated { .. } => WarpFamily::Tabulated,
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Evaluates `(r, r', r'')` at a point strictly inside the domain.
    pub fn evaluate(&self, z: f64) -> Result<WarpValue, WarpError> {
        if !self.domain.contains(z) {
            return Err(WarpError::DomainExit {
                z,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        let v = match &self.kind {
            Kind::Cosh => {
                let (c, s) = (z.cosh(), z.sinh());
                WarpValue { r: c, r1: s, r2: c }
            }
            Kind::Power { a, beta } => {
                let d = a - z;
                let r = d.powf(-beta);
                WarpValue {
                    r,
                    r1: beta * r / d,
                    r2: beta * (beta + 1.0) * r / (d * d),
                }
            }
            Kind::Tabulated { f, .. } => {
                let (r, r1, r2) = f(z);
                WarpValue { r, r1, r2 }
            }
        };
        Ok(v)
    }

    /// `r r'' - c (r')²` at `z`. The built-in families use factored closed
    /// forms so that identities such as `cosh² - sinh² = 1` hold exactly.
    pub fn log_convexity_margin(&self, z: f64, c: f64) -> Result<f64, WarpError> {
        let v = self.evaluate(z)?;
        Ok(match &self.kind {
            Kind::Cosh => 1.0 + (1.0 - c) * v.r1 * v.r1,
            Kind::Power { a, beta } => {
                let d = a - z;
                beta * ((beta + 1.0) - c * beta) * d.powf(-2.0 * beta - 2.0)
            }
            Kind::Tabulated { .. } => v.r * v.r2 - c * v.r1 * v.r1,
        })
    }
}

/// Outcome of a sampled condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// Conjunction of every sub-condition of the checked hypothesis.
    pub passed: bool,
    /// Minimum over samples of the log-convexity inequality's left side.
    pub worst_margin: f64,
    pub worst_point: f64,
    pub condition_name: String,
    /// Human-readable list of failed sub-conditions (empty when passed).
    pub failures: Vec<String>,
}

fn sample_grid(lo: f64, hi: f64, num_samples: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / num_samples as f64;
    (0..num_samples).map(move |k| lo + (k as f64 + 0.5) * h)
}

/// Checks the Theorem A hypotheses on `(-a, a)`:
/// `r(0) = 1`, `r'(0) = 0`, `r' > 0` on `(0, a)`, `r' < 0` on `(-a, 0)`,
/// and `r r'' - (r')² >= 0`.
pub fn check_theorem_a(
    w: &WarpingFunction,
    a: f64,
    num_samples: usize,
) -> Result<ConditionReport, WarpError> {
    check_theorem_a_with_tolerance(w, a, num_samples, DEFAULT_CHECK_TOLERANCE)
}

pub fn check_theorem_a_with_tolerance(
    w: &WarpingFunction,
    a: f64,
    num_samples: usize,
    tolerance: f64,
) -> Result<ConditionReport, WarpError> {
    if num_samples < 3 {
        return Err(WarpError::Precondition(format!(
            "num_samples must be at least 3, got {num_samples}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(WarpError::Precondition(format!(
            "half-width a must be positive and finite, got {a}"
        )));
    }
    let dom = w.domain();
    if !dom.covers(-a, a) {
        return Err(WarpError::DomainMismatch {
            lo: -a,
            hi: a,
            dom_lo: dom.lo,
            dom_hi: dom.hi,
        });
    }

    let mut failures = Vec::new();
    let at0 = w.evaluate(0.0)?;
    if (at0.r - 1.0).abs() > tolerance {
        failures.push(format!("r(0) = {} != 1", at0.r));
    }
    if at0.r1.abs() > tolerance {
        failures.push(format!("r'(0) = {} != 0", at0.r1));
    }

    let mut worst_margin = f64::INFINITY;
    let mut worst_point = f64::NAN;
    let mut sign_failure = None;
    for z in sample_grid(-a, a, num_samples) {
        let v = w.evaluate(z)?;
        let sign_ok = (z > 0.0 && v.r1 > 0.0) || (z < 0.0 && v.r1 < 0.0) || z == 0.0;
        if !sign_ok && sign_failure.is_none() {
            sign_failure = Some(format!("sign condition fails: r'({z}) = {}", v.r1));
        }
        let m = w.log_convexity_margin(z, 1.0)?;
        if m < worst_margin || worst_point.is_nan() {
            worst_margin = m;
            worst_point = z;
        }
    }
    failures.extend(sign_failure);
    if !(worst_margin >= -tolerance) {
        failures.push(format!(
            "r r'' - r'^2 = {worst_margin} < 0 at z = {worst_point}"
        ));
    }
    Ok(ConditionReport {
        passed: failures.is_empty(),
        worst_margin,
        worst_point,
        condition_name: "theorem_a".to_string(),
        failures,
    })
}

/// Checks the Theorem B hypotheses on `(z_probe_lo, a)`: `r' > 0` and
/// `r r'' - (1 + alpha)(r')² >= 0`.
pub fn check_theorem_b(
    w: &WarpingFunction,
    alpha: f64,
    z_probe_lo: f64,
    a: f64,
    num_samples: usize,
) -> Result<ConditionReport, WarpError> {
    check_theorem_b_with_tolerance(w, alpha, z_probe_lo, a, num_samples, DEFAULT_CHECK_TOLERANCE)
}

pub fn check_theorem_b_with_tolerance(
    w: &WarpingFunction,
    alpha: f64,
    z_probe_lo: f64,
    a: f64,
    num_samples: usize,
    tolerance: f64,
) -> Result<ConditionReport, WarpError> {
    if !(alpha > 1.0) {
        return Err(WarpError::Precondition(format!(
            "alpha must be greater than one, got {alpha}"
        )));
    }
    if num_samples < 3 {
        return Err(WarpError::Precondition(format!(
            "num_samples must be at least 3, got {num_samples}"
        )));
    }
    if !(z_probe_lo < a) || !z_probe_lo.is_finite() || !a.is_finite() {
        return Err(WarpError::Precondition(format!(
            "probe range ({z_probe_lo}, {a}) must be finite and non-empty"
        )));
    }
    let dom = w.domain();
    if !dom.covers(z_probe_lo, a) {
        return Err(WarpError::DomainMismatch {
            lo: z_probe_lo,
            hi: a,
            dom_lo: dom.lo,
            dom_hi: dom.hi,
        });
    }

    let mut failures = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut worst_point = f64::NAN;
    let mut sign_failure = None;
    for z in sample_grid(z_probe_lo, a, num_samples) {
        let v = w.evaluate(z)?;
        if !(v.r1 > 0.0) && sign_failure.is_none() {
            sign_failure = Some(format!("r'({z}) = {} is not positive", v.r1));
        }
        let m = w.log_convexity_margin(z, 1.0 + alpha)?;
        if m < worst_margin || worst_point.is_nan() {
            worst_margin = m;
            worst_point = z;
        }
    }
    failures.extend(sign_failure);
    if !(worst_margin >= -tolerance) {
        failures.push(format!(
            "r r'' - (1 + alpha) r'^2 = {worst_margin} < 0 at z = {worst_point}"
        ));
    }
    Ok(ConditionReport {
        passed: failures.is_empty(),
        worst_margin,
        worst_point,
        condition_name: "theorem_b".to_string(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cosh_values() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        assert_eq!(w.evaluate(0.0).unwrap(), WarpValue { r: 1.0, r1: 0.0, r2: 1.0 });
        let v = w.evaluate(0.5).unwrap();
        assert!(close(v.r, 1.1276260, 1e-7));
        assert!(close(v.r1, 0.5210953, 1e-7));
        assert!(close(v.r2, 1.1276260, 1e-7));
    }

    #[test]
    fn power_values() {
        let w = WarpingFunction::power(0.0, 0.5).unwrap();
        let v = w.evaluate(-1.0).unwrap();
        assert!(close(v.r, 1.0, 1e-15));
        assert!(close(v.r1, 0.5, 1e-15));
        assert!(close(v.r2, 0.75, 1e-15));
    }

    #[test]
    fn evaluation_outside_domain() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        assert!(matches!(w.evaluate(1.0), Err(WarpError::DomainExit { .. })));
        assert!(matches!(w.evaluate(-1.5), Err(WarpError::DomainExit { .. })));
        let p = WarpingFunction::power(0.0, 0.5).unwrap();
        assert!(p.evaluate(0.0).is_err());
        assert!(p.evaluate(-1e300).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WarpingFunction::cosh(0.0).is_err());
        assert!(WarpingFunction::power(0.0, 0.0).is_err());
        assert!(WarpingFunction::power(f64::INFINITY, 1.0).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    #[test]
    fn theorem_a_for_cosh() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let rep = check_theorem_a(&w, 1.0, 1001).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.worst_margin, 1.0);
    }

    #[test]
    fn theorem_a_fails_for_shifted_power() {
        let w = WarpingFunction::power(2.0, 0.5).unwrap();
        let rep = check_theorem_a(&w, 1.0, 1001).unwrap();
        assert!(!rep.passed);
        assert!(rep.failures.iter().any(|f| f.contains("r(0)")), "{rep:?}");
    }

    #[test]
    fn theorem_a_preconditions() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        assert!(matches!(
            check_theorem_a(&w, 1.0, 2),
            Err(WarpError::Precondition(_))
        ));
        assert!(matches!(
            check_theorem_a(&w, 1.5, 11),
            Err(WarpError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn theorem_b_power_equality_case() {
        let w = WarpingFunction::power(0.0, 0.5).unwrap();
        let rep = check_theorem_b(&w, 2.0, -10.0, 0.0, 1001).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.worst_margin.abs() <= 1e-12);
    }

    #[test]
    fn theorem_b_power_too_steep() {
        let w = WarpingFunction::power(0.0, 0.6).unwrap();
        let rep = check_theorem_b(&w, 2.0, -10.0, 0.0, 1001).unwrap();
        assert!(!rep.passed);
        assert!(rep.worst_margin < 0.0);
    }

    #[test]
    fn theorem_b_cosh_fails_sign() {
        let w = WarpingFunction::cosh(1.0).unwrap();
        let rep = check_theorem_b(&w, 2.0, -0.5, 0.5, 101).unwrap();
        assert!(!rep.passed);
        assert!(rep.failures[0].contains("not positive"));
    }

    #[test]
    fn theorem_b_needs_alpha_above_one() {
        let w = WarpingFunction::power(0.0, 0.5).unwrap();
        assert!(check_theorem_b(&w, 1.0, -10.0, 0.0, 101).is_err());
        assert!(check_theorem_b(&w, 2.0, 0.0, 0.0, 101).is_err());
    }

    #[test]
    fn tabulated_matches_builtin() {
        let t = WarpingFunction::tabulated("cosh", Interval::new(-1.0, 1.0).unwrap(), |z: f64| {
            (z.cosh(), z.sinh(), z.cosh())
        });
        assert_eq!(t.family(), WarpFamily::Tabulated);
        let rep = check_theorem_a(&t, 1.0, 1001).unwrap();
        assert!(rep.passed);
        assert!((rep.worst_margin - 1.0).abs() < 1e-14);
    }

    // r' from central differences of r, r'' from central differences of r'.
    fn fd_check(w: &WarpingFunction, z: f64) {
        let h = 1e-5;
        let v = w.evaluate(z).unwrap();
        let p = w.evaluate(z + h).unwrap();
        let m = w.evaluate(z - h).unwrap();
        let d1 = (p.r - m.r) / (2.0 * h);
        let d2 = (p.r1 - m.r1) / (2.0 * h);
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
        assert!(rel(d1, v.r1) <= 1e-6, "r' at {z}: {d1} vs {}", v.r1);
        assert!(rel(d2, v.r2) <= 1e-6, "r'' at {z}: {d2} vs {}", v.r2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn cosh_derivatives_match_finite_differences(z in -2.0f64..2.0) {
            fd_check(&WarpingFunction::cosh(3.0).unwrap(), z);
        }

        #[test]
        fn power_derivatives_match_finite_differences(z in -5.0f64..-0.5, beta in 0.1f64..2.0) {
            fd_check(&WarpingFunction::power(0.0, beta).unwrap(), z);
        }

        #[test]
        fn power_meets_theorem_b_iff_alpha_beta_at_most_one(
            alpha in 1.01f64..4.0,
            beta in 0.05f64..1.0,
        ) {
            // Stay clear of the equality case where rounding decides.
            prop_assume!((alpha * beta - 1.0).abs() > 1e-9);
            let w = WarpingFunction::power(0.0, beta).unwrap();
            let rep = check_theorem_b(&w, alpha, -10.0, 0.0, 501).unwrap();
            prop_assert_eq!(rep.passed, alpha * beta <= 1.0);
        }

        #[test]
        fn cosh_meets_theorem_a_for_any_half_width(a in 0.01f64..20.0) {
            let w = WarpingFunction::cosh(a).unwrap();
            let rep = check_theorem_a(&w, a, 201).unwrap();
            prop_assert!(rep.passed);
            prop_assert_eq!(rep.worst_margin, 1.0);
        }
    }
}
