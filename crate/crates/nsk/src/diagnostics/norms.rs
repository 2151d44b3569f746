//! Norm bundles, the Poincare gap and the log-log order fit.
//!
//! The six squared norms collected per coupling strength are exactly the
//! left-hand side of the convergence estimate
//!
//! ```text
//! sup_t |sqrt(rho)(u-U)|_{L2}^2 + sup_t |rho - r|_{L2}^2
//!   + alpha sup_t |rho - c|_{L2}^2 + sup_t |c - r|_{H1}^2
//!   + |u - U|_{L2(0,T;H1)}^2 + beta |dc/dt|_{L2 L2}^2   <=   K s(alpha)
//! ```
//!
//! with the rate `s(alpha) = 1/alpha + beta + e^2 + E0`, `e` the mean initial
//! density mismatch and `E0` the initial relative energy. Suprema are taken
//! over snapshots (a lower bound of the true sup).

use super::DiagnosticsError;
use crate::grid::{BcMode, Field, SimState, WallBc};
use crate::solver::{SimParams, Trajectory};
use serde::{Deserialize, Serialize};

/// The six squared norms plus the rate data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct NormBundle {
    pub kinetic_sq: f64,
    pub density_sq: f64,
    pub coupling_sq: f64,
    pub order_parameter_h1_sq: f64,
    pub velocity_h1_time_sq: f64,
    pub c_rate_sq: f64,
    /// Mean initial density mismatch against the reference.
    pub e_alpha: f64,
    /// Initial relative energy against the reference (with `C = r`).
    pub initial_relative_energy: f64,
    /// `1/alpha + beta + e_alpha^2 + initial_relative_energy`.
    pub rate_s: f64,
}

impl NormBundle {
    pub fn sum(&self) -> f64 {
        self.kinetic_sq
            + self.density_sq
            + self.coupling_sq
            + self.order_parameter_h1_sq
            + self.velocity_h1_time_sq
            + self.c_rate_sq
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.kinetic_sq,
            self.density_sq,
            self.coupling_sq,
            self.order_parameter_h1_sq,
            self.velocity_h1_time_sq,
            self.c_rate_sq,
        ]
    }
}

fn h1_sq(f: &Field, wall: WallBc) -> f64 {
    let l2 = f.zip_with(f, |a, b| a * b).integrate();
    let d = f.ddx(wall);
    l2 + d.zip_with(&d, |a, b| a * b).integrate()
}

/// Assemble the norm bundle of a relaxed run against a capillary reference
/// sharing grid and snapshot times.
pub fn norm_bundle(
    traj: &Trajectory,
    ref_traj: &Trajectory,
    params: &SimParams,
) -> Result<NormBundle, DiagnosticsError> {
    super::check_aligned(traj, ref_traj)?;
    let mut kinetic = 0.0f64;
    let mut density = 0.0f64;
    let mut coupling = 0.0f64;
    let mut c_h1 = 0.0f64;
    let mut velocity_series = Vec::with_capacity(traj.snapshots.len());
    let times = traj.snapshot_times();

    for (snap, rsnap) in traj.snapshots.iter().zip(&ref_traj.snapshots) {
        let s = &snap.state;
        let r = &rsnap.state;
        let u = s.velocity();
        let ru = r.velocity();
        let du = u.zip_with(&ru, |a, b| a - b);
        let wk = s
            .rho
            .zip_with(&du, |rho, d| rho * d * d)
            .integrate();
        kinetic = kinetic.max(wk);
        let drho = s.rho.zip_with(&r.rho, |a, b| a - b);
        density = density.max(drho.zip_with(&drho, |a, b| a * b).integrate());
        let dc = s.rho.zip_with(&s.c, |a, b| a - b);
        coupling = coupling.max(dc.zip_with(&dc, |a, b| a * b).integrate());
        let cr = s.c.zip_with(&r.rho, |a, b| a - b);
        c_h1 = c_h1.max(h1_sq(&cr, WallBc::NeumannZero));
        velocity_series.push(h1_sq(&du, WallBc::DirichletZero));
    }
    let velocity_h1_time_sq = *super::cumulative_trapezoid(&times, &velocity_series)
        .last()
        .expect("nonempty series");

    // beta |dc/dt|^2 accumulated from the per-step records (exact for the
    // scheme, no snapshot subsampling involved).
    let c_rate_sq = params.beta
        * traj
            .steps
            .iter()
            .map(|s| s.dt * s.dc_dt_norm * s.dc_dt_norm)
            .sum::<f64>();

    let s0 = &traj.snapshots[0].state;
    let r0 = &ref_traj.snapshots[0].state;
    let e_alpha = s0.rho.zip_with(&r0.rho, |a, b| a - b).integrate() / params.grid.length;
    let initial_relative_energy = super::relative_energy(
        s0,
        &r0.rho,
        &r0.velocity(),
        &r0.rho,
        params,
    )?
    .total;
    let rate_s = 1.0 / params.alpha + params.beta + e_alpha * e_alpha + initial_relative_energy;

    Ok(NormBundle {
        kinetic_sq: kinetic,
        density_sq: density,
        coupling_sq: params.alpha * coupling,
        order_parameter_h1_sq: c_h1,
        velocity_h1_time_sq,
        c_rate_sq,
        e_alpha,
        initial_relative_energy,
        rate_s,
    })
}

/// Poincare constant of the 1D domain for zero-mean fields: `L/(2 pi)`
/// periodic, `L/pi` with walls.
pub fn poincare_constant(grid: &crate::grid::Grid1D) -> f64 {
    match grid.bc {
        BcMode::Periodic => grid.length / (2.0 * std::f64::consts::PI),
        BcMode::Wall => grid.length / std::f64::consts::PI,
    }
}

/// Both sides of the order-parameter gap estimate
///
/// ```text
/// |r - c|_{L2}  <=  C_P |dx(r - c)|_{L2} + (beta/alpha) |dc/dt|_{L2}
///                   + |e_alpha| sqrt(|domain|)
/// ```
///
/// `dc_dt_norm` comes from the trajectory record of the frame under test.
/// Callers assert `lhs <= rhs` (up to rounding).
pub fn poincare_gap(
    state: &SimState,
    ref_rho: &Field,
    params: &SimParams,
    e_alpha: f64,
    dc_dt_norm: f64,
) -> (f64, f64) {
    let gap = ref_rho.zip_with(&state.c, |a, b| a - b);
    let lhs = gap.l2_norm();
    let rhs = poincare_constant(&params.grid) * gap.ddx(WallBc::NeumannZero).l2_norm()
        + params.beta / params.alpha * dc_dt_norm
        + e_alpha.abs() * params.grid.length.sqrt();
    (lhs, rhs)
}

/// Result of the matched-mean check.
#[derive(Debug, Clone, Serialize)]
pub struct WsMeanReport {
    /// `int (c - C) dx` per frame.
    pub mean_gaps: Vec<f64>,
    pub max_abs: f64,
    pub pass: bool,
}

/// Verify that `int (c - C) dx` stays at zero (within 1e-10) along two runs
/// whose initial means match; the constant mode of the coupled system is
/// conserved exactly when it starts at its fixed point.
pub fn ws_mean_check(traj: &Trajectory, ref_traj: &Trajectory) -> Result<WsMeanReport, DiagnosticsError> {
    super::check_aligned(traj, ref_traj)?;
    let mean_gaps: Vec<f64> = traj
        .snapshots
        .iter()
        .zip(&ref_traj.snapshots)
        .map(|(a, b)| a.state.c.integrate() - b.state.c.integrate())
        .collect();
    let max_abs = mean_gaps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(WsMeanReport {
        mean_gaps,
        max_abs,
        pass: max_abs <= 1e-10,
    })
}

/// Frame-by-frame outcome of the order-parameter gap check.
#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub frames_checked: usize,
    /// Max over frames of `lhs - rhs` (nonpositive when the estimate holds).
    pub worst_margin: f64,
    pub pass: bool,
}

/// Check `lhs <= rhs` of the gap estimate on every frame after the first.
///
/// With a reference trajectory the gap is measured against its density and
/// `e_alpha` is the initial mean mismatch; without one the solution's own
/// density serves as the reference (`e_alpha = 0` identically), which checks
/// the same mean-plus-Poincare chain. Frame zero has no recorded `dc/dt` and
/// is skipped.
pub fn poincare_report(
    traj: &Trajectory,
    reference: Option<&Trajectory>,
    params: &SimParams,
) -> Result<PoincareReport, DiagnosticsError> {
    if let Some(r) = reference {
        super::check_aligned(traj, r)?;
    }
    let e_alpha = match reference {
        Some(r) => {
            (traj.snapshots[0].state.rho.integrate() - r.snapshots[0].state.rho.integrate())
                / params.grid.length
        }
        None => 0.0,
    };
    let mut worst = f64::NEG_INFINITY;
    let mut frames = 0;
    for (k, snap) in traj.snapshots.iter().enumerate().skip(1) {
        let ref_rho = match reference {
            Some(r) => &r.snapshots[k].state.rho,
            None => &snap.state.rho,
        };
        let (lhs, rhs) = poincare_gap(&snap.state, ref_rho, params, e_alpha, snap.dc_dt_norm);
        worst = worst.max(lhs - rhs);
        frames += 1;
    }
    if frames == 0 {
        worst = 0.0;
    }
    let scale = traj.snapshots[0].state.rho.l2_norm().max(1.0);
    Ok(PoincareReport {
        frames_checked: frames,
        worst_margin: worst,
        pass: worst <= 1e-12 * scale,
    })
}

/// Least-squares slope of `log y` against `log x`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when only two points are fitted.
    pub stderr: f64,
}

/// Fit `y ~ C x^slope` in log-log coordinates.
pub fn fit_order(xs: &[f64], ys: &[f64]) -> Result<FitResult, DiagnosticsError> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return Err(DiagnosticsError::TooFewFrames);
    }
    for &v in xs.iter().chain(ys) {
        if !(v > 0.0) {
            return Err(DiagnosticsError::NonPositiveData(v));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if lx.len() > 2 {
        let ss_res: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| {
                let pred = intercept + slope * x;
                (y - pred) * (y - pred)
            })
            .sum();
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        slope,
        intercept,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BcMode, Grid1D};
    use crate::solver::{Snapshot, StepRecord, SystemKind};
    use crate::thermo::PressureModel;
    use std::f64::consts::PI;

    fn params(alpha: f64, beta: f64) -> SimParams {
        SimParams {
            mu: 0.01,
            lambda: 0.01,
            kappa: 0.01,
            alpha,
            beta,
            cfl: 0.4,
            t_end: 1.0,
            model: PressureModel::powerlaw(2.0).unwrap(),
            grid: Grid1D::new(1.0, 512, BcMode::Periodic).unwrap(),
            snapshot_every: 1,
            max_dt: None,
            c_disp: 0.25,
        }
    }

    fn static_traj(p: &SimParams, state: SimState, times: &[f64], system: SystemKind) -> Trajectory {
        let snapshots = times
            .iter()
            .map(|&t| {
                let mut s = state.clone();
                s.time = t;
                Snapshot {
                    state: s,
                    dc_dt_norm: 0.0,
                }
            })
            .collect();
        Trajectory {
            params: p.clone(),
            system,
            snapshots,
            steps: times
                .windows(2)
                .map(|w| StepRecord {
                    t: w[1],
                    dt: w[1] - w[0],
                    mass: state.mass(),
                    energy: 0.0,
                    dissipation_rate: 0.0,
                    dc_dt_norm: 0.0,
                })
                .collect(),
            floor_events: 0,
        }
    }

    #[test]
    fn bundle_vanishes_on_identical_well_prepared_pair() {
        let p = params(100.0, 0.01);
        let g = p.grid;
        let rho = g.sample(|x| 1.0 + 0.1 * (2.0 * PI * x).sin());
        let state = SimState::new(rho.clone(), g.constant(0.0), rho, 0.0);
        let times = [0.0, 0.5, 1.0];
        let traj = static_traj(&p, state.clone(), &times, SystemKind::Relaxed);
        let reference = static_traj(&p, state, &times, SystemKind::Nsk);
        let b = norm_bundle(&traj, &reference, &p).unwrap();
        assert_eq!(b.sum(), 0.0);
        assert_eq!(b.e_alpha, 0.0);
        // rate_s = 1/alpha + beta exactly for well-prepared data.
        assert!((b.rate_s - (0.01 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn rate_arithmetic() {
        let p = params(100.0, 0.01);
        let g = p.grid;
        let rho = g.constant(1.0);
        let state = SimState::new(rho.clone(), g.constant(0.0), rho, 0.0);
        let times = [0.0, 1.0];
        let traj = static_traj(&p, state.clone(), &times, SystemKind::Relaxed);
        let reference = static_traj(&p, state, &times, SystemKind::Nsk);
        let b = norm_bundle(&traj, &reference, &p).unwrap();
        assert!((b.rate_s - 0.02).abs() < 1e-15);
    }

    #[test]
    fn single_mode_velocity_norm_matches_analytic_value() {
        let p = params(100.0, 0.01);
        let g = p.grid;
        let rho = g.constant(1.0);
        let k = 2.0 * PI / g.length;
        let u_gap = g.sample(|x| (k * x).sin());
        let state = SimState::new(rho.clone(), u_gap.clone(), rho.clone(), 0.0);
        let ref_state = SimState::new(rho.clone(), g.constant(0.0), rho, 0.0);
        let times = [0.0, 0.5, 1.0];
        let traj = static_traj(&p, state, &times, SystemKind::Relaxed);
        let reference = static_traj(&p, ref_state, &times, SystemKind::Nsk);
        let b = norm_bundle(&traj, &reference, &p).unwrap();
        // int_0^T (|sin|^2 + |k cos|^2) = T L/2 (1 + k^2).
        let analytic = 1.0 * g.length / 2.0 * (1.0 + k * k);
        assert!(
            (b.velocity_h1_time_sq - analytic).abs() < 0.02 * analytic,
            "{} vs {analytic}",
            b.velocity_h1_time_sq
        );
    }

    #[test]
    fn poincare_gap_cases() {
        let p = params(50.0, 0.2);
        let g = p.grid;
        let rho = g.constant(1.0);
        // c identical to r: lhs = 0, rhs is the dc/dt allowance.
        let state = SimState::new(rho.clone(), g.constant(0.0), g.constant(1.0), 0.0);
        let (lhs, rhs) = poincare_gap(&state, &rho, &p, 0.0, 0.7);
        assert_eq!(lhs, 0.0);
        assert!((rhs - 0.2 / 50.0 * 0.7).abs() < 1e-15);

        // Constant offset delta: the mean mismatch term carries it exactly.
        let delta = 0.3;
        let state = SimState::new(rho.clone(), g.constant(0.0), g.constant(1.0 + delta), 0.0);
        let (lhs, rhs) = poincare_gap(&state, &rho, &p, delta, 0.0);
        assert!((lhs - delta * g.length.sqrt()).abs() < 1e-12);
        assert!((rhs - delta * g.length.sqrt()).abs() < 1e-12);

        // A single resolved mode is the periodic equality case:
        // lhs / |dx gap| = L / (2 pi) up to the O((k dx)^2) underestimate of
        // the discrete central gradient.
        let k = 2.0 * PI / g.length;
        let c = g.sample(|x| 1.0 + (k * x).sin());
        let state = SimState::new(rho.clone(), g.constant(0.0), c, 0.0);
        let (lhs, _rhs) = poincare_gap(&state, &rho, &p, 0.0, 0.0);
        let grad = rho
            .zip_with(&state.c, |a, b| a - b)
            .ddx(WallBc::NeumannZero)
            .l2_norm();
        let ratio = lhs / grad;
        let cp = poincare_constant(&g);
        let kdx = k * g.dx();
        assert!(ratio >= cp && ratio <= cp * (1.0 + kdx * kdx), "ratio {ratio} vs C_P {cp}");
    }

    #[test]
    fn ws_mean_check_flags_drift() {
        let p = params(50.0, 0.2);
        let g = p.grid;
        let rho = g.constant(1.0);
        let state = SimState::new(rho.clone(), g.constant(0.0), g.constant(1.0), 0.0);
        let times = [0.0, 0.5, 1.0];
        let a = static_traj(&p, state.clone(), &times, SystemKind::Relaxed);
        let b = static_traj(&p, state.clone(), &times, SystemKind::Relaxed);
        assert!(ws_mean_check(&a, &b).unwrap().pass);

        let mut drifted = b;
        let last = drifted.snapshots.len() - 1;
        drifted.snapshots[last].state.c.values[0] += 1.0;
        assert!(!ws_mean_check(&a, &drifted).unwrap().pass);
    }

    #[test]
    fn mean_gap_decays_geometrically_for_mismatched_initial_means() {
        // Two runs with the same step sequence but different initial c-means:
        // the mean gap follows the backward-Euler contraction
        // (beta / (beta + dt alpha))^n exactly.
        use crate::solver::{run, SnapshotPlan, SystemKind};
        let mut p = params(10.0, 0.5);
        p.grid = Grid1D::new(1.0, 64, BcMode::Periodic).unwrap();
        p.t_end = 0.05;
        p.max_dt = Some(2e-4);
        let g = p.grid;
        let rho = g.constant(1.0);
        let mk = |c0: f64| {
            let init = SimState::new(rho.clone(), g.constant(0.0), g.constant(c0), 0.0);
            run(SystemKind::Relaxed, &p, &init, &SnapshotPlan::EveryNSteps(25)).unwrap()
        };
        let a = mk(1.4);
        let b = mk(1.1);
        let rep = ws_mean_check(&a, &b).unwrap();
        assert!(!rep.pass); // means differ, gap nonzero
        let gap0 = 0.3 * g.length;
        let mut step_idx = 0usize;
        for (k, snap) in a.snapshots.iter().enumerate().skip(1) {
            while step_idx < a.steps.len() && a.steps[step_idx].t < snap.state.time - 1e-12 {
                step_idx += 1;
            }
            let mut expected = gap0;
            for s in &a.steps[..=step_idx.min(a.steps.len() - 1)] {
                expected *= p.beta / (p.beta + s.dt * p.alpha);
            }
            assert!(
                (rep.mean_gaps[k] - expected).abs() < 1e-12,
                "frame {k}: {} vs {}",
                rep.mean_gaps[k],
                expected
            );
        }
        // And the gap genuinely decays toward zero.
        assert!(rep.mean_gaps.last().unwrap().abs() < 0.5 * gap0);
    }

    #[test]
    fn fit_recovers_exact_power_laws() {
        let xs = [10.0, 100.0, 1000.0, 10000.0];
        let ys: Vec<f64> = xs.iter().map(|a| 7.0 / a).collect();
        let fit = fit_order(&xs, &ys).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);

        let flat = [3.0, 3.0, 3.0, 3.0];
        let fit = fit_order(&xs, &flat).unwrap();
        assert!(fit.slope.abs() < 1e-12);

        let mixed: Vec<f64> = xs.iter().map(|a| 3.0 / a + 0.2 / (a * a)).collect();
        let fit = fit_order(&xs, &mixed).unwrap();
        assert!(fit.slope > -1.15 && fit.slope < -0.95, "slope {}", fit.slope);
    }

    #[test]
    fn fit_rejects_nonpositive_data() {
        assert!(fit_order(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
