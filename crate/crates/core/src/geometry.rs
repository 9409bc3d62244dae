//! Discrete calculus for K-invariant profiles on the reduced domain `[0, L]`.
//!
//! A profile stores the values `û(x_i)` at the nodes `x_i = i·Δx`,
//! `i = 0..=N`. Spatial derivatives use second-order central differences
//! with ghost reflection `u_{-1} = u_1`, `u_{N+1} = u_{N-1}`, which makes
//! the Neumann condition `û' = 0` at both ends exact.
//!
//! The cotangent drift terms `û'/tan(λ₁x)` and `û'/tan(2λ₁x)` are `0/0` at
//! the endpoints; there they are replaced by their limits, expressed through
//! `û''` at the endpoint.

use std::io::{self, Write};

use thiserror::Error;

use crate::format::fmt_f64;
use crate::space::SymmetricSpace;
use crate::warp::WarpingFunction;

/// Smallest admissible number of cells.
pub const MIN_GRID_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("profile needs at least {MIN_GRID_N} cells, got {0}")]
    GridTooSmall(usize),
    #[error("node {node} (x = {x}) has u = {z} outside the warping domain")]
    DomainExit { node: usize, x: f64, z: f64 },
    #[error("non-finite {quantity} at node {node}")]
    NonFinite { node: usize, quantity: &'static str },
    #[error("profile grid has {got} nodes, expected {expected}")]
    GridMismatch { expected: usize, got: usize },
}

/// Discretized profile `û` on `[0, L]` of a given symmetric space.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    space: SymmetricSpace,
    u: Vec<f64>,
}

impl Profile {
    /// `u` holds `grid_n + 1` nodal values.
    pub fn new(space: SymmetricSpace, u: Vec<f64>) -> Result<Self, GeometryError> {
        let cells = u.len().saturating_sub(1);
        if cells < MIN_GRID_N {
            return Err(GeometryError::GridTooSmall(cells));
        }
        Ok(Profile { space, u })
    }

    /// Samples `f` at the nodes of a uniform grid with `grid_n` cells.
    pub fn from_fn(
        space: SymmetricSpace,
        grid_n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, GeometryError> {
        let dx = space.length() / grid_n as f64;
        let u = (0..=grid_n).map(|i| f(i as f64 * dx)).collect();
        Self::new(space, u)
    }

    pub fn space(&self) -> &SymmetricSpace {
        &self.space
    }

    pub fn grid_n(&self) -> usize {
        self.u.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.space.length() / self.grid_n() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Precomputed cotangent drift coefficients for one space and grid.
///
/// At interior nodes `coef[i] = λ₁m_λ/tan(λ₁x_i) + 2λ₁m_2λ/tan(2λ₁x_i)`, so
/// the drift bracket is `coef[i]·û'_i`. At the endpoints the bracket is
/// `coef[i]·û''_i`, the limit obtained from `û' = 0` there.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTable {
    coef: Vec<f64>,
}

impl DriftTable {
    pub fn new(space: &SymmetricSpace, grid_n: usize) -> Self {
        let lam = space.lambda1();
        let m1 = space.m_lambda() as f64;
        let m2 = space.m_2lambda() as f64;
        let dx = space.length() / grid_n as f64;
        let mut coef = Vec::with_capacity(grid_n + 1);
        coef.push(m1 + m2);
        for i in 1..grid_n {
            let x = i as f64 * dx;
            let mut c = lam * m1 / (lam * x).tan();
            if space.m_2lambda() > 0 {
                c += 2.0 * lam * m2 / (2.0 * lam * x).tan();
            }
            coef.push(c);
        }
        // At x = L the λ-term vanishes when L = π/(2λ₁) and tends to
        // û''/λ₁ when L = π/λ₁; the 2λ-term tends to û''/(2λ₁).
        coef.push(if space.m_2lambda() > 0 { m2 } else { m1 });
        DriftTable { coef }
    }

    pub fn grid_n(&self) -> usize {
        self.coef.len() - 1
    }

    /// The limit coefficients at `x = 0` and `x = L`.
    pub fn endpoint_coefficients(&self) -> (f64, f64) {
        (self.coef[0], self.coef[self.coef.len() - 1])
    }

    /// Drift bracket `[λ₁m_λ/tan(λ₁x) + 2λ₁m_2λ/tan(2λ₁x)]·û'` at node `i`.
    #[inline]
    pub fn bracket(&self, i: usize, du: f64, ddu: f64) -> f64 {
        if i == 0 || i == self.coef.len() - 1 {
            self.coef[i] * ddu
        } else {
            self.coef[i] * du
        }
    }
}

/// First and second differences with ghost reflection at node `i`.
#[inline]
pub(crate) fn differences(u: &[f64], i: usize, inv_2dx: f64, inv_dx2: f64) -> (f64, f64) {
    let last = u.len() - 1;
    if i == 0 {
        (0.0, 2.0 * (u[1] - u[0]) * inv_dx2)
    } else if i == last {
        (0.0, 2.0 * (u[last - 1] - u[last]) * inv_dx2)
    } else {
        (
            (u[i + 1] - u[i - 1]) * inv_2dx,
            (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2,
        )
    }
}

fn warp_at(w: &WarpingFunction, u: &[f64], i: usize, dx: f64) -> Result<(f64, f64), GeometryError> {
    w.evaluate(u[i])
        .map(|v| (v.r, v.r1))
        .map_err(|_| GeometryError::DomainExit {
            node: i,
            x: i as f64 * dx,
            z: u[i],
        })
}

/// Right-hand side of the reduced flow written into `out`, reusing a
/// precomputed drift table. Returns `min_i (r(û_i)² + μ_i)`, the inverse
/// of the largest diffusion coefficient, which the integrator needs for
/// its step size.
pub fn reduced_rhs_into(
    space: &SymmetricSpace,
    table: &DriftTable,
    w: &WarpingFunction,
    u: &[f64],
    out: &mut [f64],
) -> Result<f64, GeometryError> {
    let grid_n = u.len().saturating_sub(1);
    if table.grid_n() != grid_n || out.len() != u.len() {
        return Err(GeometryError::GridMismatch {
            expected: table.grid_n() + 1,
            got: u.len(),
        });
    }
    let dx = space.length() / grid_n as f64;
    let inv_2dx = 0.5 / dx;
    let inv_dx2 = 1.0 / (dx * dx);
    let n = space.n() as f64;
    let mut min_w2 = f64::INFINITY;
    for (i, slot) in out.iter_mut().enumerate() {
        let (r, r1) = warp_at(w, u, i, dx)?;
        let (du, ddu) = differences(u, i, inv_2dx, inv_dx2);
        let mu = du * du;
        let r2 = r * r;
        let w2 = r2 + mu;
        min_w2 = min_w2.min(w2);
        let drift = r1 / r;
        let v = ddu / w2 - drift * mu / w2 + table.bracket(i, du, ddu) / r2 - n * drift;
        if !v.is_finite() {
            return Err(GeometryError::NonFinite {
                node: i,
                quantity: "rhs",
            });
        }
        *slot = v;
    }
    Ok(min_w2)
}

/// Fields derived from a profile and a warping function.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDerived {
    pub x: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
    /// `μ = (û')²`.
    pub mu: Vec<f64>,
    /// `r(û)` at each node.
    pub r: Vec<f64>,
    /// `r'(û)` at each node.
    pub r1: Vec<f64>,
    /// `w = sqrt(r² + μ)`.
    pub w: Vec<f64>,
    /// Graph angle `Θ = r / w`.
    pub theta: Vec<f64>,
    /// Mean curvature with respect to the downward normal.
    pub h: Vec<f64>,
    /// Drift bracket including its endpoint limits.
    pub bracket: Vec<f64>,
}

impl ProfileDerived {
    pub fn max_mu(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_theta(&self) -> f64 {
        self.theta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes the snapshot CSV `x,u,du,ddu,mu,w,theta,H`.
    pub fn write_csv<W: Write>(&self, profile: &Profile, mut out: W) -> io::Result<()> {
        writeln!(out, "x,u,du,ddu,mu,w,theta,H")?;
        for (i, u) in profile.values().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(self.x[i]),
                fmt_f64(*u),
                fmt_f64(self.du[i]),
                fmt_f64(self.ddu[i]),
                fmt_f64(self.mu[i]),
                fmt_f64(self.w[i]),
                fmt_f64(self.theta[i]),
                fmt_f64(self.h[i]),
            )?;
        }
        Ok(())
    }
}

/// Computes derivatives, `μ`, `w`, `Θ` and the rank-one mean curvature.
pub fn derive(p: &Profile, w: &WarpingFunction) -> Result<ProfileDerived, GeometryError> {
    let grid_n = p.grid_n();
    let dx = p.dx();
    let inv_2dx = 0.5 / dx;
    let inv_dx2 = 1.0 / (dx * dx);
    let n = p.space().n() as f64;
    let table = DriftTable::new(p.space(), grid_n);
    let u = p.values();

    let len = grid_n + 1;
    let mut d = ProfileDerived {
        x: Vec::with_capacity(len),
        du: Vec::with_capacity(len),
        ddu: Vec::with_capacity(len),
        mu: Vec::with_capacity(len),
        r: Vec::with_capacity(len),
        r1: Vec::with_capacity(len),
        w: Vec::with_capacity(len),
        theta: Vec::with_capacity(len),
        h: Vec::with_capacity(len),
        bracket: Vec::with_capacity(len),
    };
    for i in 0..len {
        let (r, r1) = warp_at(w, u, i, dx)?;
        let (du, ddu) = differences(u, i, inv_2dx, inv_dx2);
        let mu = du * du;
        let wv = (r * r + mu).sqrt();
        let w3 = wv * wv * wv;
        let bracket = table.bracket(i, du, ddu);
        let h = -r * ddu / w3 + r1 * mu / w3 - bracket / (r * wv) + n * r1 / wv;
        if !h.is_finite() {
            return Err(GeometryError::NonFinite {
                node: i,
                quantity: "mean curvature",
            });
        }
        d.x.push(i as f64 * dx);
        d.du.push(du);
        d.ddu.push(ddu);
        d.mu.push(mu);
        d.r.push(r);
        d.r1.push(r1);
        d.w.push(wv);
        d.theta.push(r / wv);
        d.h.push(h);
        d.bracket.push(bracket);
    }
    Ok(d)
}

/// Mean curvature `H` of the graph at every node.
pub fn mean_curvature(p: &Profile, w: &WarpingFunction) -> Result<Vec<f64>, GeometryError> {
    Ok(derive(p, w)?.h)
}

/// `∂û/∂t` of the reduced flow at every node.
pub fn reduced_rhs(p: &Profile, w: &WarpingFunction) -> Result<Vec<f64>, GeometryError> {
    let table = DriftTable::new(p.space(), p.grid_n());
    let mut out = vec![0.0; p.values().len()];
    reduced_rhs_into(p.space(), &table, w, p.values(), &mut out)?;
    Ok(out)
}

/// Largest node discrepancy `|∂û/∂t + (w/r)·H|` between the flow equation
/// and the mean curvature, endpoints included.
pub fn rhs_curvature_consistency(p: &Profile, w: &WarpingFunction) -> Result<f64, GeometryError> {
    let d = derive(p, w)?;
    let rhs = reduced_rhs(p, w)?;
    Ok((0..=p.grid_n())
        .map(|i| (rhs[i] + d.w[i] / d.r[i] * d.h[i]).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceKind;
    use crate::warp::Interval;
    use std::f64::consts::PI;

    fn s3() -> SymmetricSpace {
        SymmetricSpace::new(SpaceKind::Sphere, 3, 1.0).unwrap()
    }

    fn cp2() -> SymmetricSpace {
        SymmetricSpace::new(SpaceKind::ComplexProjective, 4, 1.0).unwrap()
    }

    fn cosh1() -> WarpingFunction {
        WarpingFunction::cosh(1.0).unwrap()
    }

    #[test]
    fn rejects_small_grid() {
        assert!(matches!(
            Profile::new(s3(), vec![0.0; 8]),
            Err(GeometryError::GridTooSmall(7))
        ));
    }

    #[test]
    fn constant_profile_fields() {
        let p = Profile::from_fn(s3(), 32, |_| 0.5).unwrap();
        let d = derive(&p, &cosh1()).unwrap();
        for i in 0..=32 {
            assert_eq!(d.du[i], 0.0);
            assert_eq!(d.mu[i], 0.0);
            assert_eq!(d.theta[i], 1.0);
            assert!((d.w[i] - 1.1276260).abs() < 1e-7);
            assert!((d.h[i] - 1.386352).abs() < 1e-6);
            assert_eq!(d.h[i], 3.0 * 0.5f64.sinh() / 0.5f64.cosh());
        }
    }

    #[test]
    fn neck_is_minimal() {
        let p = Profile::from_fn(cp2(), 16, |_| 0.0).unwrap();
        assert!(mean_curvature(&p, &cosh1()).unwrap().iter().all(|&h| h == 0.0));
        assert!(reduced_rhs(&p, &cosh1()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ghost_reflection_zeroes_boundary_slope() {
        let space = s3();
        let l = space.length();
        let p = Profile::from_fn(space, 50, |x| 0.2 * (PI * x / l).cos()).unwrap();
        let d = derive(&p, &cosh1()).unwrap();
        assert_eq!(d.du[0], 0.0);
        assert_eq!(d.du[50], 0.0);
    }

    #[test]
    fn angle_from_slope() {
        // Θ = r/√(r² + û'²) at r = cosh 0.5, û' = 0.5.
        let r: f64 = 0.5f64.cosh();
        let theta = r / (r * r + 0.25).sqrt();
        assert!((theta - 0.9141624).abs() < 1e-7);

        // A linear ramp through 0.5 at an interior node has û' = 0.5 there.
        let space = s3();
        let mid = 16;
        let dx = space.length() / 32.0;
        let p = Profile::from_fn(space, 32, |x| 0.5 + 0.5 * (x - mid as f64 * dx)).unwrap();
        let d = derive(&p, &WarpingFunction::cosh(3.0).unwrap()).unwrap();
        assert!((d.du[mid] - 0.5).abs() < 1e-12);
        assert!((d.theta[mid] - 0.9141624).abs() < 1e-7);
    }

    #[test]
    fn derived_invariants() {
        let space = cp2();
        let l = space.length();
        let p = Profile::from_fn(space, 40, |x| 0.1 + 0.3 * (2.0 * PI * x / l).cos()).unwrap();
        let d = derive(&p, &cosh1()).unwrap();
        for i in 0..=40 {
            assert!(d.theta[i] > 0.0 && d.theta[i] <= 1.0);
            assert!(d.w[i] >= d.r[i] && d.r[i] > 0.0);
            // Same expression recomputed gives the same bits.
            assert_eq!(d.theta[i], d.r[i] / (d.r[i] * d.r[i] + d.mu[i]).sqrt());
            let t2 = d.r[i] * d.r[i] / (d.r[i] * d.r[i] + d.mu[i]);
            assert!((d.theta[i] * d.theta[i] - t2).abs() <= 4.0 * f64::EPSILON);
            if d.mu[i] == 0.0 {
                assert_eq!(d.theta[i], 1.0);
            }
        }
    }

    #[test]
    fn constant_profile_rhs() {
        let p = Profile::from_fn(s3(), 64, |_| 0.5).unwrap();
        let rhs = reduced_rhs(&p, &cosh1()).unwrap();
        let expected = -3.0 * 0.5f64.tanh();
        for v in rhs {
            assert!((v - expected).abs() < 1e-15);
            assert!((v + 1.386352).abs() < 1e-6);
        }
    }

    #[test]
    fn endpoint_limit_on_sphere() {
        // û = z₀ + c·cos x has û''(0) = -c and û(0) = z₀ + c.
        let (z0, c) = (0.1, 0.2);
        let space = s3();
        for grid_n in [64, 128, 256] {
            let p = Profile::from_fn(space, grid_n, |x| z0 + c * x.cos()).unwrap();
            let d = derive(&p, &cosh1()).unwrap();
            let rhs = reduced_rhs(&p, &cosh1()).unwrap();
            let u0 = z0 + c;
            let formula = 3.0 * d.ddu[0] / u0.cosh().powi(2) - 3.0 * u0.tanh();
            assert!((rhs[0] - formula).abs() < 1e-14);
            let q = -c;
            let exact = 3.0 * q / u0.cosh().powi(2) - 3.0 * u0.tanh();
            let dx = space.length() / grid_n as f64;
            assert!((rhs[0] - exact).abs() < 0.1 * dx * dx, "{} vs {exact}", rhs[0]);
        }
    }

    #[test]
    fn endpoint_limits_at_far_end() {
        // Far end: CP² gets (1 + m_2λ)·û''/r², S³ gets n·û''/r².
        let z0 = 0.05;
        for (space, factor) in [(cp2(), 2.0), (s3(), 3.0)] {
            let l = space.length();
            let p = Profile::from_fn(space, 64, |x| z0 + 0.1 * (PI * x / l).cos()).unwrap();
            let d = derive(&p, &cosh1()).unwrap();
            let rhs = reduced_rhs(&p, &cosh1()).unwrap();
            let u = p.values()[64];
            let expected = factor * d.ddu[64] / u.cosh().powi(2) - space.n() as f64 * u.tanh();
            assert!((rhs[64] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_warping_gives_rotational_graph_curvature() {
        // r ≡ 1: H = -û''/w³ - (n-1)λ₁û'/(w tan(λ₁x)).
        let flat = WarpingFunction::tabulated("flat", Interval::new(-5.0, 5.0).unwrap(), |_| {
            (1.0, 0.0, 0.0)
        });
        let space = SymmetricSpace::new(SpaceKind::Sphere, 4, 1.5).unwrap();
        let l = space.length();
        let p = Profile::from_fn(space, 48, |x| 0.3 * (PI * x / l).cos()).unwrap();
        let d = derive(&p, &flat).unwrap();
        for i in 1..48 {
            let w3 = d.w[i].powi(3);
            let expected = -d.ddu[i] / w3 - 3.0 * 1.5 * d.du[i] / (d.w[i] * (1.5 * d.x[i]).tan());
            assert!((d.h[i] - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn sphere_has_no_double_root_terms() {
        let space = s3();
        let table = DriftTable::new(&space, 32);
        let dx = space.length() / 32.0;
        for i in 1..32 {
            let x = i as f64 * dx;
            assert_eq!(table.coef[i], 2.0 / x.tan());
        }
    }

    #[test]
    fn domain_exit_is_reported_at_first_node() {
        let space = s3();
        let p = Profile::from_fn(space, 16, |x| 1.5 * x.cos()).unwrap();
        match derive(&p, &cosh1()) {
            Err(GeometryError::DomainExit { node, .. }) => assert_eq!(node, 0),
            other => panic!("expected domain exit, got {other:?}"),
        }
        assert!(rhs_curvature_consistency(&p, &cosh1()).is_err());
    }

    #[test]
    fn constant_profile_consistency() {
        let p = Profile::from_fn(cp2(), 32, |_| -0.3).unwrap();
        assert!(rhs_curvature_consistency(&p, &cosh1()).unwrap() <= 1e-15);
    }

    fn max_err(grid_n: usize, k: f64) -> (f64, f64) {
        let space = s3();
        let l = space.length();
        let a = k * PI / l;
        let p = Profile::from_fn(space, grid_n, |x| 0.2 * (a * x).cos()).unwrap();
        let d = derive(&p, &cosh1()).unwrap();
        let mut e1: f64 = 0.0;
        let mut e2: f64 = 0.0;
        for i in 0..=grid_n {
            let x = d.x[i];
            e1 = e1.max((d.du[i] + 0.2 * a * (a * x).sin()).abs());
            e2 = e2.max((d.ddu[i] + 0.2 * a * a * (a * x).cos()).abs());
        }
        (e1, e2)
    }

    #[test]
    fn derivatives_are_second_order() {
        for k in [1.0, 2.0, 3.0] {
            let errs: Vec<_> = [32, 64, 128, 256].iter().map(|&n| max_err(n, k)).collect();
            for pair in errs.windows(2) {
                let o1 = (pair[0].0 / pair[1].0).log2();
                let o2 = (pair[0].1 / pair[1].1).log2();
                assert!(o1 >= 1.9, "du order {o1} for k = {k}");
                assert!(o2 >= 1.9, "ddu order {o2} for k = {k}");
            }
        }
    }

    #[test]
    fn snapshot_csv_layout() {
        let p = Profile::from_fn(s3(), 8, |_| 0.0).unwrap();
        let d = derive(&p, &cosh1()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,u,du,ddu,mu,w,theta,H"));
        assert_eq!(lines.next(), Some("0.0,0.0,0.0,0.0,0.0,1.0,1.0,0.0"));
        assert_eq!(text.lines().count(), 10);
    }
}
