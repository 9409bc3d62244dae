//! Method-of-lines integration of the reduced flow with explicit RK4 and a
//! parabolic step restriction.

use std::f64::consts::PI;
use std::io::{self, Write};

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::fmt_f64;
use crate::geometry::{differences, reduced_rhs_into, DriftTable, GeometryError, Profile, MIN_GRID_N};
use crate::space::SymmetricSpace;
use crate::warp::{Interval, WarpFamily, WarpingFunction};

/// Steps below this size end the run with [`FlowEvent::StepUnderflow`].
pub const MIN_DT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("non-finite state at node {node} after the step")]
    NonFiniteState { node: usize },
}

/// Numerical settings for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grid_n: usize,
    pub t_end: f64,
    /// Fraction of the explicit diffusion limit used as time step.
    pub safety: f64,
    /// Flow-time period of the diagnostic series.
    pub output_every: f64,
    pub grad_blowup_threshold: f64,
    /// Smallest allowed distance of `û` to the warping-domain boundary.
    pub domain_margin: f64,
    /// Keep a profile snapshot every this many series entries. The initial
    /// and final states are always kept.
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_n: 128,
            t_end: 1.0,
            safety: 0.2,
            output_every: 0.05,
            grad_blowup_threshold: 1e3,
            domain_margin: 1e-9,
            snapshot_stride: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |s: &str| Err(FlowError::Config(s.to_string()));
        if self.grid_n < MIN_GRID_N {
            return bad("grid_n >= 8");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end > 0");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety in (0,1)");
        }
        if !(self.output_every > 0.0 && self.output_every.is_finite()) {
            return bad("output_every > 0");
        }
        if !(self.grad_blowup_threshold > 0.0) {
            return bad("grad_blowup_threshold > 0");
        }
        if !(self.domain_margin >= 0.0 && self.domain_margin.is_finite()) {
            return bad("domain_margin >= 0");
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride >= 1");
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowEvent {
    ReachedTEnd,
    GradientBlowup(f64),
    DomainExit(f64),
    StepUnderflow(f64),
}

impl FlowEvent {
    pub fn label(&self) -> &'static str {
        match self {
            FlowEvent::ReachedTEnd => "reached_t_end",
            FlowEvent::GradientBlowup(_) => "gradient_blowup",
            FlowEvent::DomainExit(_) => "domain_exit",
            FlowEvent::StepUnderflow(_) => "step_underflow",
        }
    }

    pub fn is_abnormal(&self) -> bool {
        !matches!(self, FlowEvent::ReachedTEnd)
    }
}

/// One row of the diagnostic series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEntry {
    pub t: f64,
    pub min_u: f64,
    pub max_u: f64,
    /// `φ(t) = max_i (û'_i)²`.
    pub phi: f64,
    /// Smallest graph angle; `NaN` only when the state has left the domain.
    pub min_theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub profile: Profile,
}

/// Result of [`run`]. Carries enough metadata to check it against a
/// warping function and a space later on.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub space: SymmetricSpace,
    pub warp_family: WarpFamily,
    pub warp_domain: Interval,
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<SeriesEntry>,
    pub event: FlowEvent,
    pub steps: usize,
}

impl Trajectory {
    pub fn initial(&self) -> &Profile {
        &self.snapshots[0].profile
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    /// Writes `t,min_u,max_u,phi,min_theta,event`; only the last row has an
    /// event label.
    pub fn write_series_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,min_u,max_u,phi,min_theta,event")?;
        let last = self.series.len().saturating_sub(1);
        for (k, e) in self.series.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(e.t),
                fmt_f64(e.min_u),
                fmt_f64(e.max_u),
                fmt_f64(e.phi),
                fmt_f64(e.min_theta),
                if k == last { self.event.label() } else { "" },
            )?;
        }
        Ok(())
    }
}

/// `u_i = c0 + c1·cos(mode·π·x_i/L)`, which satisfies the Neumann condition.
pub fn initial_cosine(
    space: SymmetricSpace,
    c0: f64,
    c1: f64,
    mode: u32,
    grid_n: usize,
) -> Result<Profile, FlowError> {
    let k = mode as f64 * PI / space.length();
    Ok(Profile::from_fn(space, grid_n, |x| c0 + c1 * (k * x).cos())?)
}

pub fn initial_constant(space: SymmetricSpace, z0: f64, grid_n: usize) -> Result<Profile, FlowError> {
    Ok(Profile::from_fn(space, grid_n, |_| z0)?)
}

/// `safety·Δx²·min_i(r(û_i)² + μ_i)`.
pub fn stable_dt(p: &Profile, w: &WarpingFunction, cfg: &SolverConfig) -> Result<f64, FlowError> {
    let mut scratch = vec![0.0; p.values().len()];
    let table = DriftTable::new(p.space(), p.grid_n());
    let min_w2 = reduced_rhs_into(p.space(), &table, w, p.values(), &mut scratch)?;
    let dx = p.dx();
    Ok(cfg.safety * dx * dx * min_w2)
}

/// Step cap from the endpoint diffusion coefficient `(1 + coef)/r²`, which
/// exceeds `1/(r² + μ)` by the root multiplicities. It binds only when
/// `safety·(1 + coef)` is large, i.e. for high-dimensional spaces.
pub fn endpoint_dt_cap(p: &Profile, w: &WarpingFunction) -> Result<f64, FlowError> {
    let table = DriftTable::new(p.space(), p.grid_n());
    Ok(endpoint_cap(&table, w, p.values(), p.dx())?)
}

fn endpoint_cap(
    table: &DriftTable,
    w: &WarpingFunction,
    u: &[f64],
    dx: f64,
) -> Result<f64, GeometryError> {
    let (c0, c1) = table.endpoint_coefficients();
    let last = u.len() - 1;
    let mut cap = f64::INFINITY;
    for (i, c) in [(0, c0), (last, c1)] {
        let r = w
            .evaluate(u[i])
            .map_err(|_| GeometryError::DomainExit {
                node: i,
                x: i as f64 * dx,
                z: u[i],
            })?
            .r;
        cap = cap.min(dx * dx * r * r / (1.0 + c));
    }
    Ok(cap)
}

/// Classical RK4 over the nodal values, with reusable buffers.
struct Rk4 {
    space: SymmetricSpace,
    table: DriftTable,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    fn new(space: SymmetricSpace, grid_n: usize) -> Self {
        let len = grid_n + 1;
        Rk4 {
            space,
            table: DriftTable::new(&space, grid_n),
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            stage: vec![0.0; len],
        }
    }

    /// First stage at the current state; returns `min(r² + μ)`.
    fn first_stage(&mut self, w: &WarpingFunction, u: &[f64]) -> Result<f64, GeometryError> {
        reduced_rhs_into(&self.space, &self.table, w, u, &mut self.k1)
    }

    /// Completes the step started by [`Rk4::first_stage`], updating `u`.
    fn finish(&mut self, w: &WarpingFunction, u: &mut [f64], dt: f64) -> Result<(), FlowError> {
        let half = 0.5 * dt;
        for ((s, &ui), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k1) {
            *s = ui + half * k;
        }
        reduced_rhs_into(&self.space, &self.table, w, &self.stage, &mut self.k2)?;
        for ((s, &ui), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k2) {
            *s = ui + half * k;
        }
        reduced_rhs_into(&self.space, &self.table, w, &self.stage, &mut self.k3)?;
        for ((s, &ui), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k3) {
            *s = ui + dt * k;
        }
        reduced_rhs_into(&self.space, &self.table, w, &self.stage, &mut self.k4)?;
        let sixth = dt / 6.0;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
            if !ui.is_finite() {
                return Err(FlowError::NonFiniteState { node: i });
            }
        }
        Ok(())
    }
}

/// One RK4 step of size `dt`.
pub fn step(p: &Profile, w: &WarpingFunction, dt: f64) -> Result<Profile, FlowError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::BadStep(dt));
    }
    let mut rk = Rk4::new(*p.space(), p.grid_n());
    let mut next = p.clone();
    rk.first_stage(w, p.values())?;
    rk.finish(w, next.values_mut(), dt)?;
    Ok(next)
}

/// Series diagnostics of a state. `min_theta` is `NaN` if some node lies
/// outside the warping domain.
fn diagnostics(t: f64, u: &[f64], w: &WarpingFunction, dx: f64) -> SeriesEntry {
    let inv_2dx = 0.5 / dx;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut e = SeriesEntry {
        t,
        min_u: f64::INFINITY,
        max_u: f64::NEG_INFINITY,
        phi: 0.0,
        min_theta: f64::INFINITY,
    };
    for (i, &ui) in u.iter().enumerate() {
        let (du, _) = differences(u, i, inv_2dx, inv_dx2);
        let mu = du * du;
        e.min_u = e.min_u.min(ui);
        e.max_u = e.max_u.max(ui);
        e.phi = e.phi.max(mu);
        match w.evaluate(ui) {
            Ok(v) => e.min_theta = e.min_theta.min(v.r / (v.r * v.r + mu).sqrt()),
            Err(_) => e.min_theta = f64::NAN,
        }
    }
    e
}

fn too_close(u: &[f64], domain: &Interval, margin: f64) -> bool {
    u.iter().any(|&z| !(domain.distance_to_boundary(z) > margin))
}

/// Integrates the reduced flow from `p0` up to `cfg.t_end` or the first
/// event. Abnormal endings are reported through [`Trajectory::event`].
pub fn run(p0: &Profile, w: &WarpingFunction, cfg: &SolverConfig) -> Result<Trajectory, FlowError> {
    cfg.validate()?;
    if p0.grid_n() != cfg.grid_n {
        return Err(FlowError::Config(format!(
            "profile has {} cells but grid_n = {}",
            p0.grid_n(),
            cfg.grid_n
        )));
    }
    let space = *p0.space();
    let domain = w.domain();
    let dx = p0.dx();
    let mut traj = Trajectory {
        space,
        warp_family: w.family(),
        warp_domain: domain,
        snapshots: vec![Snapshot {
            t: 0.0,
            profile: p0.clone(),
        }],
        series: vec![diagnostics(0.0, p0.values(), w, dx)],
        event: FlowEvent::ReachedTEnd,
        steps: 0,
    };
    if too_close(p0.values(), &domain, cfg.domain_margin) {
        traj.event = FlowEvent::DomainExit(0.0);
        return Ok(traj);
    }

    let mut rk = Rk4::new(space, cfg.grid_n);
    let mut current = p0.clone();
    let mut t = 0.0;
    let mut k_out: usize = 1;
    let next_output = |k: usize| {
        let tk = k as f64 * cfg.output_every;
        if tk > cfg.t_end || cfg.t_end - tk <= 1e-9 * cfg.output_every {
            cfg.t_end
        } else {
            tk
        }
    };

    let event = loop {
        if t >= cfg.t_end {
            break FlowEvent::ReachedTEnd;
        }
        let target = next_output(k_out);
        let min_w2 = match rk.first_stage(w, current.values()) {
            Ok(m) => m,
            Err(GeometryError::DomainExit { .. }) => break FlowEvent::DomainExit(t),
            Err(_) => break FlowEvent::GradientBlowup(t),
        };
        let dt_stable = match endpoint_cap(&rk.table, w, current.values(), dx) {
            Ok(cap) => (cfg.safety * dx * dx * min_w2).min(cap),
            Err(_) => break FlowEvent::DomainExit(t),
        };
        if !(dt_stable >= MIN_DT) {
            break FlowEvent::StepUnderflow(t);
        }
        let remaining = target - t;
        let (dt, lands) = if dt_stable >= remaining {
            (remaining, true)
        } else {
            (dt_stable, false)
        };
        let t_new = if lands { target } else { t + dt };
        match rk.finish(w, current.values_mut(), dt) {
            Ok(()) => {}
            Err(FlowError::Geometry(GeometryError::DomainExit { .. })) => {
                break FlowEvent::DomainExit(t_new)
            }
            Err(_) => break FlowEvent::GradientBlowup(t_new),
        }
        t = t_new;
        traj.steps += 1;

        if too_close(current.values(), &domain, cfg.domain_margin) {
            traj.series.push(diagnostics(t, current.values(), w, dx));
            break FlowEvent::DomainExit(t);
        }
        let entry = diagnostics(t, current.values(), w, dx);
        if entry.phi > cfg.grad_blowup_threshold {
            traj.series.push(entry);
            break FlowEvent::GradientBlowup(t);
        }
        if lands {
            debug!(
                "t = {t}: u in [{}, {}], phi = {}, min theta = {}",
                entry.min_u, entry.max_u, entry.phi, entry.min_theta
            );
            traj.series.push(entry);
            if k_out.is_multiple_of(cfg.snapshot_stride) || t >= cfg.t_end {
                traj.snapshots.push(Snapshot {
                    t,
                    profile: current.clone(),
                });
            }
            k_out += 1;
        }
    };

    if traj.last().t < t {
        traj.snapshots.push(Snapshot {
            t,
            profile: current.clone(),
        });
    }
    if traj.series.last().is_none_or(|e| e.t < t) {
        traj.series.push(diagnostics(t, current.values(), w, dx));
    }
    info!(
        "flow finished at t = {t} after {} steps: {}",
        traj.steps,
        event.label()
    );
    traj.event = event;
    Ok(traj)
}
