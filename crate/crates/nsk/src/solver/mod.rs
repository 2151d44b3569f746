//! Time integration of the two flow models.
//!
//! Both solvers share the same skeleton: a conservative local Lax-Friedrichs
//! flux with piecewise-linear (Fromm) reconstruction advanced by Heun's
//! method, wrapped in a palindromic splitting with the stiff pieces
//! integrated implicitly,
//!
//! ```text
//! V(dt/2)   E+C Heun over dt   V(dt/2)
//! ```
//!
//! where `V` is a trapezoidal viscous solve and, for the relaxed system,
//! each Heun stage re-solves the linear order-parameter equation backward
//! Euler over the full step with that stage's density (so the coupling force
//! is sampled at both endpoints of the step and averaged, which is what
//! keeps the step second order even in the strongly coupled quasi-static
//! regime). Both implicit solves are tridiagonal. The implicit pieces remove
//! the `O(beta)` and `O(dx^2/nu)` step-size restrictions.
//!
//! Flux telescoping makes every step conserve total mass to rounding; the
//! wall closure mirrors density evenly and momentum oddly, so the wall mass
//! flux vanishes identically.

pub mod container;
pub mod nsk;
pub mod relaxed;
pub mod tridiag;

use crate::diagnostics;
use crate::grid::{BcMode, Field, Grid1D, GridError, SimState, WallBc};
use crate::thermo::{PressureModel, ThermoError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Density floor applied after each update; undershoots are counted as floor
/// events rather than silently clamped.
pub const RHO_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("solution diverged (non-finite {term}) at t = {time}")]
    Divergence { term: &'static str, time: f64 },
    #[error("time step underflow (dt = {dt}) at t = {time}")]
    Stagnation { dt: f64, time: f64 },
    #[error("state has no positive wave speed (vacuum or empty)")]
    VacuumState,
    #[error("grid refinement did not converge: observed order {observed_order:.2} < 1.5")]
    NonSmooth { observed_order: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// Which model a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// Relaxation model with the order parameter `c`.
    Relaxed,
    /// Capillary system with the third-order density term; `c` mirrors `rho`.
    Nsk,
}

/// Physical constants, model, grid and stepping controls for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub model: PressureModel,
    pub grid: Grid1D,
    /// Snapshot stride (in steps) used by [`SnapshotPlan::EveryNSteps`].
    pub snapshot_every: usize,
    /// Optional cap on dt; used by the step-halving convergence tests.
    pub max_dt: Option<f64>,
    /// Dispersive step constant of the capillary solver:
    /// `dt <= c_disp * dx^2 / sqrt(kappa)`.
    pub c_disp: f64,
}

impl SimParams {
    /// Effective 1D viscosity `(4/3) mu + lambda` from the trace algebra of
    /// the Newtonian stress.
    pub fn nu_eff(&self) -> f64 {
        4.0 / 3.0 * self.mu + self.lambda
    }

    pub fn validate(&self, system: SystemKind) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidParams(msg));
        if !(self.mu > 0.0) || !(self.lambda > 0.0) {
            return bad(format!("viscosities must be positive: mu={}, lambda={}", self.mu, self.lambda));
        }
        if !(self.kappa > 0.0) {
            return bad(format!("kappa must be positive: {}", self.kappa));
        }
        if !(self.alpha > 0.0) && system == SystemKind::Relaxed {
            return bad(format!("alpha must be positive: {}", self.alpha));
        }
        if system == SystemKind::Relaxed && !(self.beta > 0.0) {
            return bad(format!("beta must be positive for the relaxed system: {}", self.beta));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1]: {}", self.cfl));
        }
        if !(self.t_end > 0.0) {
            return bad(format!("t_end must be positive: {}", self.t_end));
        }
        if !(self.nu_eff() > 0.0) {
            return bad("effective viscosity must be positive".into());
        }
        Ok(())
    }
}

/// Scalar record of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time reached after the step.
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    /// Dissipation rate `int nu |du/dx|^2 + beta |dc/dt|^2` over the step.
    pub dissipation_rate: f64,
    /// `||(c_new - c_old)/dt||_{L2}`.
    pub dc_dt_norm: f64,
}

/// Stored state with the step-level time derivative norm of `c` at the step
/// that produced it (zero for the initial frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: SimState,
    pub dc_dt_norm: f64,
}

/// When to record snapshots.
#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotPlan {
    /// Every n-th step (plus first and last).
    EveryNSteps(usize),
    /// At the given strictly increasing times; dt is shortened to land on
    /// them exactly. First and last frames are always recorded.
    AtTimes(Vec<f64>),
}

/// A completed run: parameters, snapshots and per-step scalars.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SimParams,
    pub system: SystemKind,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    pub floor_events: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        &self.snapshots.last().expect("trajectory has frames").state
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.time).collect()
    }

    /// Largest step size taken over the run.
    pub fn max_dt(&self) -> f64 {
        self.steps.iter().map(|s| s.dt).fold(0.0, f64::max)
    }

    /// Conservatively restrict every snapshot onto a coarser grid. Per-step
    /// scalars are kept from the fine run (they describe the same physics);
    /// budget audits should run on the original trajectory.
    pub fn restrict_to(&self, coarse: Grid1D) -> Result<Trajectory, GridError> {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| {
                Ok(Snapshot {
                    state: SimState::new(
                        s.state.rho.restrict_to(coarse)?,
                        s.state.mom.restrict_to(coarse)?,
                        s.state.c.restrict_to(coarse)?,
                        s.state.time,
                    ),
                    dc_dt_norm: s.dc_dt_norm,
                })
            })
            .collect::<Result<Vec<_>, GridError>>()?;
        let mut params = self.params.clone();
        params.grid = coarse;
        Ok(Trajectory {
            params,
            system: self.system,
            snapshots,
            steps: self.steps.clone(),
            floor_events: self.floor_events,
        })
    }

    /// Per-step scalars as CSV
    /// (`t,dt,mass,energy,dissipation_increment,dc_dt_norm`), the increment
    /// being `dt * dissipation_rate`, i.e. the summand of the budget.
    pub fn steps_to_csv(&self) -> String {
        let mut out = String::from("t,dt,mass,energy,dissipation_increment,dc_dt_norm\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.t,
                s.dt,
                s.mass,
                s.energy,
                s.dt * s.dissipation_rate,
                s.dc_dt_norm
            ));
        }
        out
    }
}

pub(crate) struct StepOutcome {
    pub state: SimState,
    pub dissipation_rate: f64,
    pub dc_dt_norm: f64,
    pub floor_events: u64,
}

/// Largest stable step for the given state.
///
/// The acoustic speed uses the derivative of the pressure actually carried by
/// the flux: `p' + alpha rho` for the relaxed system (so dt shrinks like
/// `alpha^(-1/2)`) and `p'` for the capillary system, clamped at zero inside
/// the spinodal. The capillary solver is additionally limited by
/// `c_disp * dx^2 / sqrt(kappa)` for its explicit third-order term.
pub fn stable_dt(
    system: SystemKind,
    state: &SimState,
    params: &SimParams,
) -> Result<f64, SolverError> {
    if state.rho.is_empty() {
        return Err(SolverError::VacuumState);
    }
    let mut speed = 0.0f64;
    for i in 0..state.rho.len() {
        let r = state.rho.values[i];
        let u = state.mom.values[i] / r;
        let dp = match system {
            SystemKind::Relaxed => params.model.artificial_pressure_deriv(params.alpha, r),
            SystemKind::Nsk => params.model.pressure_deriv(r),
        };
        speed = speed.max(u.abs() + dp.max(0.0).sqrt());
    }
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(SolverError::VacuumState);
    }
    let dx = params.grid.dx();
    let mut dt = params.cfl * dx / speed;
    if system == SystemKind::Nsk {
        dt = dt.min(params.c_disp * dx * dx / params.kappa.sqrt());
    }
    if let Some(cap) = params.max_dt {
        dt = dt.min(cap);
    }
    Ok(dt)
}

/// Advance `init` to `t_end`, recording snapshots and per-step diagnostics.
pub fn run(
    system: SystemKind,
    params: &SimParams,
    init: &SimState,
    plan: &SnapshotPlan,
) -> Result<Trajectory, SolverError> {
    params.validate(system)?;
    init.assert_finite()?;
    if init.rho.values.iter().any(|&r| r < 0.0) {
        return Err(SolverError::InvalidParams("initial density is negative".into()));
    }
    let mass0 = init.mass();
    let mut state = init.clone();
    state.time = 0.0;
    if system == SystemKind::Nsk {
        state.c = state.rho.clone();
    }

    let mut snap_times = match plan {
        SnapshotPlan::AtTimes(times) => {
            let mut ts: Vec<f64> = times
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < params.t_end)
                .collect();
            ts.push(params.t_end);
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ts.dedup();
            ts
        }
        SnapshotPlan::EveryNSteps(_) => vec![params.t_end],
    };
    snap_times.reverse(); // pop() yields the earliest pending time

    let mut traj = Trajectory {
        params: params.clone(),
        system,
        snapshots: vec![Snapshot {
            state: state.clone(),
            dc_dt_norm: 0.0,
        }],
        steps: Vec::new(),
        floor_events: 0,
    };

    let stride = match plan {
        SnapshotPlan::EveryNSteps(n) => (*n).max(1),
        SnapshotPlan::AtTimes(_) => usize::MAX,
    };

    let mut step_count: usize = 0;
    let eps_end = 1e-12 * params.t_end;
    while state.time < params.t_end - eps_end {
        let mut dt = stable_dt(system, &state, params)?;
        let target = *snap_times.last().expect("pending snapshot time");
        dt = dt.min(target - state.time);
        if dt <= eps_end {
            return Err(SolverError::Stagnation {
                dt,
                time: state.time,
            });
        }
        let outcome = match system {
            SystemKind::Relaxed => relaxed::step(&state, params, dt)?,
            SystemKind::Nsk => nsk::step(&state, params, dt)?,
        };
        let mut new_state = outcome.state;
        new_state.time = state.time + dt;
        new_state
            .assert_finite()
            .map_err(|_| SolverError::Divergence {
                term: "state",
                time: new_state.time,
            })?;
        traj.floor_events += outcome.floor_events;
        step_count += 1;

        let at_target = target - new_state.time <= eps_end;
        if at_target {
            new_state.time = target; // kill accumulated roundoff at planned frames
        }
        let energy = diagnostics::total_energy(&new_state, params).total;
        traj.steps.push(StepRecord {
            t: new_state.time,
            dt,
            mass: new_state.mass(),
            energy,
            dissipation_rate: outcome.dissipation_rate,
            dc_dt_norm: outcome.dc_dt_norm,
        });

        let take_snapshot = if at_target {
            snap_times.pop();
            true
        } else {
            stride != usize::MAX && step_count.is_multiple_of(stride)
        };
        if take_snapshot {
            traj.snapshots.push(Snapshot {
                state: new_state.clone(),
                dc_dt_norm: outcome.dc_dt_norm,
            });
        }
        state = new_state;
    }

    let drift = (state.mass() - mass0).abs() / mass0.abs().max(f64::MIN_POSITIVE);
    if traj.floor_events == 0 && drift > 1e-12 {
        return Err(SolverError::Divergence {
            term: "mass conservation",
            time: state.time,
        });
    }
    if traj.floor_events > 0 {
        log::warn!(
            "density floor engaged {} time(s) during the run",
            traj.floor_events
        );
    }
    Ok(traj)
}

/// Local Lax-Friedrichs right-hand side of the conservative (rho, m) pair,
/// with unlimited piecewise-linear (Fromm) reconstruction at interfaces.
///
/// `pressure(r)` is the flux pressure and `dpressure(r)` its derivative (the
/// clamped square root of which is the acoustic speed). The central slopes
/// keep the flux second-order accurate on smooth data; the validation
/// horizons stay smooth, so no limiter is applied.
pub(crate) fn llf_rhs(
    rho: &Field,
    mom: &Field,
    pressure: impl Fn(f64) -> f64,
    dpressure: impl Fn(f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rho.len();
    let grid = rho.grid;
    let dx = grid.dx();
    // Ghost-padded conservative variables: density mirrors evenly, momentum
    // oddly, so wall interfaces see a reflected state and zero mass flux.
    let get = |i: isize| -> (f64, f64) {
        let n = n as isize;
        match grid.bc {
            BcMode::Periodic => {
                let j = i.rem_euclid(n) as usize;
                (rho.values[j], mom.values[j])
            }
            BcMode::Wall => {
                if i < 0 {
                    let j = (-i - 1) as usize;
                    (rho.values[j], -mom.values[j])
                } else if i >= n {
                    let j = (2 * n - 1 - i) as usize;
                    (rho.values[j], -mom.values[j])
                } else {
                    (rho.values[i as usize], mom.values[i as usize])
                }
            }
        }
    };
    // Reconstructed (left, right) trace pair at interface i+1/2.
    let traces = |i: isize| -> ((f64, f64), (f64, f64)) {
        let wm1 = get(i - 1);
        let w0 = get(i);
        let w1 = get(i + 1);
        let w2 = get(i + 2);
        let left = (
            w0.0 + 0.25 * (w1.0 - wm1.0),
            w0.1 + 0.25 * (w1.1 - wm1.1),
        );
        let right = (
            w1.0 - 0.25 * (w2.0 - w0.0),
            w1.1 - 0.25 * (w2.1 - w0.1),
        );
        (left, right)
    };
    let flux = |r: f64, m: f64| -> (f64, f64) { (m, m * m / r + pressure(r)) };
    let speed = |r: f64, m: f64| -> f64 { (m / r).abs() + dpressure(r).max(0.0).sqrt() };
    let interface = |i: isize| -> (f64, f64) {
        let (left, right) = traces(i);
        // Guard against reconstruction undershoot near the floor.
        let left = (left.0.max(RHO_FLOOR), left.1);
        let right = (right.0.max(RHO_FLOOR), right.1);
        let fl = flux(left.0, left.1);
        let fr = flux(right.0, right.1);
        let lambda = speed(left.0, left.1).max(speed(right.0, right.1));
        (
            0.5 * (fl.0 + fr.0) - 0.5 * lambda * (right.0 - left.0),
            0.5 * (fl.1 + fr.1) - 0.5 * lambda * (right.1 - left.1),
        )
    };

    let mut d_rho = vec![0.0; n];
    let mut d_mom = vec![0.0; n];
    let mut prev = interface(-1);
    for i in 0..n {
        let cur = interface(i as isize);
        d_rho[i] = -(cur.0 - prev.0) / dx;
        d_mom[i] = -(cur.1 - prev.1) / dx;
        prev = cur;
    }
    (d_rho, d_mom)
}

/// Trapezoidal viscous half-step: solve
/// `rho u_new - (nu dt_half / 2) Lap(u_new) = m_old + (nu dt_half / 2) Lap(u_old)`
/// for the velocity and return the new momentum. Velocity obeys the no-slip
/// (odd) closure at walls.
pub(crate) fn viscous_halfstep(
    rho: &Field,
    mom: &Field,
    nu_eff: f64,
    dt_half: f64,
) -> Field {
    let n = rho.len();
    let grid = rho.grid;
    let dx2 = grid.dx() * grid.dx();
    let gamma = 0.5 * nu_eff * dt_half / dx2;

    let u = mom.zip_with(rho, |m, r| m / r);
    let lap_u = u.laplacian(WallBc::DirichletZero);
    let rhs: Vec<f64> = (0..n)
        .map(|i| mom.values[i] + gamma * dx2 * lap_u.values[i])
        .collect();

    let sub = vec![-gamma; n];
    let sup = vec![-gamma; n];
    let u_new = match grid.bc {
        BcMode::Periodic => {
            let diag: Vec<f64> = (0..n).map(|i| rho.values[i] + 2.0 * gamma).collect();
            tridiag::cyclic_thomas(&sub, &diag, &sup, &rhs)
        }
        BcMode::Wall => {
            // Odd ghost folds into the diagonal at both walls.
            let mut diag: Vec<f64> = (0..n).map(|i| rho.values[i] + 2.0 * gamma).collect();
            diag[0] += gamma;
            diag[n - 1] += gamma;
            tridiag::thomas(&sub, &diag, &sup, &rhs)
        }
    };
    Field {
        grid,
        values: (0..n).map(|i| rho.values[i] * u_new[i]).collect(),
    }
}

/// Apply the density floor in place; returns the number of floored cells.
pub(crate) fn apply_floor(rho: &mut Field) -> u64 {
    let mut events = 0;
    for v in &mut rho.values {
        if *v < RHO_FLOOR {
            *v = RHO_FLOOR;
            events += 1;
        }
    }
    events
}
