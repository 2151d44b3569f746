//! Equation-of-state toolkit.
//!
//! A pressure law is kept in the split form `p = h + q` where `h` is a
//! strictly increasing power law `c_h * r^gamma` and `q` is a globally
//! Lipschitz perturbation (a polynomial continued linearly beyond a cutoff,
//! or zero). The split matters because the potential of `h` is convex, which
//! is what every Bregman-gap estimate in the diagnostics layer leans on,
//! while `q` may bend the total pressure downward and open a spinodal
//! interval where `p' < 0`.
//!
//! Alongside the pressure itself the module evaluates the potentials
//!
//! ```text
//! W(r) = r * int_1^r p(z)/z^2 dz,    H from h,    Q from q,
//! ```
//!
//! their derivatives, the shifted pressure `p(r) + (alpha/2) r^2` used by the
//! relaxation solver, Bregman gaps of `H`, spinodal root finding, numeric
//! convexity certificates, and a self-check of the algebraic identities
//! tying `p, h, q` to `W, H, Q`.

pub mod quadrature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the equation-of-state layer.
#[derive(Debug, Error)]
pub enum ThermoError {
    #[error("density must be nonnegative, got {0}")]
    NegativeDensity(f64),
    #[error("reference density must be positive, got {0}")]
    NonPositiveReference(f64),
    #[error("invalid pressure model: {0}")]
    InvalidModel(String),
    #[error("pressure derivative has {sign_changes} sign changes on [0, {r_max}]; not of Van-der-Waals type")]
    ModelShape { sign_changes: usize, r_max: f64 },
    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate}, error {error}")]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
    },
    #[error("convexity certification failed: gap {gap} at (rho={rho}, r={r})")]
    CertificationFailure { rho: f64, r: f64, gap: f64 },
}

/// Strictly increasing pressure part `h(r) = coeff * r^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonePart {
    pub coeff: f64,
    pub gamma: f64,
}

/// Globally Lipschitz pressure part.
///
/// The polynomial variant stores coefficients in ascending powers with zero
/// constant term and is continued linearly (matching value and slope) beyond
/// `continue_at`, which makes the global Lipschitz constant finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LipschitzPart {
    Zero,
    Polynomial { coeffs: Vec<f64>, continue_at: f64 },
}

/// A pressure law `p = h + q` with its growth exponent, asymptotic slope
/// constant and certified Lipschitz constant of `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureModel {
    h: MonotonePart,
    q: LipschitzPart,
    gamma: f64,
    h_inf: f64,
    q_lipschitz: f64,
}

/// Which pressure potential to evaluate: `W` (from `p`), `H` (from `h`,
/// convex) or `Q` (from `q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    W,
    H,
    Q,
}

/// Densities bracketing the interval where `p' < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinodalInterval {
    pub r1: f64,
    pub r2: f64,
}

impl PressureModel {
    /// Build a model from raw parts, deriving `gamma`, `h_inf` and the
    /// Lipschitz constant, and validating the structural assumptions
    /// (`h(0) = q(0) = 0`, `h' > 0`, finite asymptotic slope).
    pub fn new(h: MonotonePart, q: LipschitzPart) -> Result<Self, ThermoError> {
        if !(h.gamma > 1.0) || !h.gamma.is_finite() {
            return Err(ThermoError::InvalidModel(format!(
                "gamma must lie in (1, inf), got {}",
                h.gamma
            )));
        }
        if !(h.coeff > 0.0) {
            return Err(ThermoError::InvalidModel(format!(
                "power-law coefficient must be positive, got {}",
                h.coeff
            )));
        }
        if let LipschitzPart::Polynomial { coeffs, continue_at } = &q {
            if coeffs.first().is_some_and(|c0| *c0 != 0.0) {
                return Err(ThermoError::InvalidModel(
                    "q(0) must vanish: constant coefficient must be zero".into(),
                ));
            }
            if !(*continue_at > 0.0) {
                return Err(ThermoError::InvalidModel(
                    "linear continuation cutoff must be positive".into(),
                ));
            }
        }
        // h'(r) = coeff * gamma * r^(gamma-1), so h'(r)/r^(gamma-1) is the
        // constant coeff*gamma for every r.
        let h_inf = h.coeff * h.gamma;
        let q_lipschitz = lipschitz_constant(&q);
        Ok(Self {
            h,
            q,
            gamma: h.gamma,
            h_inf,
            q_lipschitz,
        })
    }

    /// Pure power law `h = r^gamma`, `q = 0`. Monotone: no spinodal interval.
    pub fn powerlaw(gamma: f64) -> Result<Self, ThermoError> {
        Self::new(MonotonePart { coeff: 1.0, gamma }, LipschitzPart::Zero)
    }

    /// The cubic two-phase law `p(r) = 0.1728 r^3 - 1.44 r^2 + 3.36 r`,
    /// split as `h = 0.1728 r^3` and `q = -1.44 r^2 + 3.36 r` with the
    /// quadratic continued linearly beyond `r = 8`. Its spinodal interval is
    /// `(5/3, 35/9)`.
    pub fn figure1() -> Self {
        Self::new(
            MonotonePart {
                coeff: 0.1728,
                gamma: 3.0,
            },
            LipschitzPart::Polynomial {
                coeffs: vec![0.0, 3.36, -1.44],
                continue_at: 8.0,
            },
        )
        .expect("builtin preset is valid")
    }

    /// Look a preset up by name (`"powerlaw"` or `"figure1"`).
    pub fn preset(name: &str) -> Result<Self, ThermoError> {
        match name {
            "powerlaw" => Self::powerlaw(2.0),
            "figure1" => Ok(Self::figure1()),
            other => Err(ThermoError::InvalidModel(format!(
                "unknown preset {other:?} (expected \"powerlaw\" or \"figure1\")"
            ))),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn monotone_part(&self) -> MonotonePart {
        self.h
    }

    pub fn lipschitz_part(&self) -> &LipschitzPart {
        &self.q
    }

    pub fn h_inf(&self) -> f64 {
        self.h_inf
    }

    pub fn q_lipschitz(&self) -> f64 {
        self.q_lipschitz
    }

    /// Monotone part `h(rho)`.
    pub fn eval_h(&self, rho: f64) -> f64 {
        self.h.coeff * powg(rho, self.h.gamma)
    }

    /// `h'(rho)`.
    pub fn eval_h_deriv(&self, rho: f64) -> f64 {
        self.h.coeff * self.h.gamma * powg(rho, self.h.gamma - 1.0)
    }

    /// Lipschitz part `q(rho)` including the linear continuation.
    pub fn eval_q(&self, rho: f64) -> f64 {
        match &self.q {
            LipschitzPart::Zero => 0.0,
            LipschitzPart::Polynomial { coeffs, continue_at } => {
                if rho <= *continue_at {
                    poly_eval(coeffs, rho)
                } else {
                    let qr = poly_eval(coeffs, *continue_at);
                    let slope = poly_deriv_eval(coeffs, *continue_at);
                    qr + slope * (rho - *continue_at)
                }
            }
        }
    }

    /// `q'(rho)` (constant beyond the continuation cutoff).
    pub fn eval_q_deriv(&self, rho: f64) -> f64 {
        match &self.q {
            LipschitzPart::Zero => 0.0,
            LipschitzPart::Polynomial { coeffs, continue_at } => {
                poly_deriv_eval(coeffs, rho.min(*continue_at))
            }
        }
    }

    /// `p'(rho) = h'(rho) + q'(rho)`.
    pub fn pressure_deriv(&self, rho: f64) -> f64 {
        self.eval_h_deriv(rho) + self.eval_q_deriv(rho)
    }

    /// Derivative of the shifted pressure: `p'(rho) + alpha * rho`.
    pub fn artificial_pressure_deriv(&self, alpha: f64, rho: f64) -> f64 {
        self.pressure_deriv(rho) + alpha * rho
    }

    /// Check the structural invariants on a sample grid: `h(0) = q(0) = 0`,
    /// `h' > 0`, the asymptotic slope at `r = 1e3, 1e4` within 1% of `h_inf`,
    /// and the Lipschitz bound on sampled pairs.
    pub fn validate(&self) -> Result<(), ThermoError> {
        if self.eval_h(0.0) != 0.0 || self.eval_q(0.0) != 0.0 {
            return Err(ThermoError::InvalidModel("h(0) or q(0) nonzero".into()));
        }
        let samples: Vec<f64> = (1..=400).map(|i| 0.025 * i as f64).collect();
        for &r in &samples {
            if self.eval_h_deriv(r) <= 0.0 {
                return Err(ThermoError::InvalidModel(format!(
                    "h'({r}) is not positive"
                )));
            }
        }
        for r in [1e3, 1e4] {
            let ratio = self.eval_h_deriv(r) / powg(r, self.gamma - 1.0);
            if (ratio - self.h_inf).abs() > 0.01 * self.h_inf {
                return Err(ThermoError::InvalidModel(format!(
                    "h'(r)/r^(gamma-1) = {ratio} at r = {r}, expected {} within 1%",
                    self.h_inf
                )));
            }
        }
        for (i, &a) in samples.iter().enumerate() {
            for &b in samples.iter().skip(i + 1).step_by(37) {
                let gap = (self.eval_q(a) - self.eval_q(b)).abs();
                if gap > self.q_lipschitz * (a - b).abs() * (1.0 + 1e-12) {
                    return Err(ThermoError::InvalidModel(format!(
                        "Lipschitz bound violated between {a} and {b}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn lipschitz_constant(q: &LipschitzPart) -> f64 {
    match q {
        LipschitzPart::Zero => 0.0,
        LipschitzPart::Polynomial { coeffs, continue_at } => {
            // |q'| is largest somewhere on [0, cutoff]; beyond the cutoff the
            // slope is frozen. Dense sampling is enough for a certificate.
            let n = 4096;
            let mut max = 0.0f64;
            for i in 0..=n {
                let r = *continue_at * i as f64 / n as f64;
                max = max.max(poly_deriv_eval(coeffs, r).abs());
            }
            max
        }
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_deriv_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * x + k as f64 * c;
    }
    acc
}

/// `x^g` with a fast path for small integer exponents (the hot loop of both
/// solvers evaluates the pressure per cell per stage).
fn powg(x: f64, g: f64) -> f64 {
    if g == 2.0 {
        x * x
    } else if g == 3.0 {
        x * x * x
    } else if g == 1.0 {
        x
    } else if g == 0.0 {
        1.0
    } else {
        x.powf(g)
    }
}

/// Pressure `p(rho) = h(rho) + q(rho)`.
pub fn eval_pressure(model: &PressureModel, rho: f64) -> Result<f64, ThermoError> {
    if rho < 0.0 {
        return Err(ThermoError::NegativeDensity(rho));
    }
    Ok(model.eval_h(rho) + model.eval_q(rho))
}

/// Shifted pressure `p(rho) + (alpha/2) rho^2`; monotone in `rho` once
/// `alpha` is large enough even when `p` is not.
pub fn artificial_pressure(
    model: &PressureModel,
    alpha: f64,
    rho: f64,
) -> Result<f64, ThermoError> {
    debug_assert!(alpha > 0.0);
    Ok(eval_pressure(model, rho)? + 0.5 * alpha * rho * rho)
}

/// Potential value by the analytic antiderivative.
///
/// Power-law part: `H(r) = c * r * (r^(g-1) - 1) / (g - 1)`. Polynomial part:
/// term-wise antiderivative of `q(z)/z^2` with the `z^1` coefficient
/// producing a logarithm, plus the closed form of the linear continuation
/// beyond the cutoff. `W = H + Q`. All three vanish at `r = 1` and at
/// `r = 0` (as limits).
pub fn potential(model: &PressureModel, which: Potential, rho: f64) -> Result<f64, ThermoError> {
    if rho < 0.0 {
        return Err(ThermoError::NegativeDensity(rho));
    }
    Ok(match which {
        Potential::H => h_potential(model, rho),
        Potential::Q => q_potential(model, rho),
        Potential::W => h_potential(model, rho) + q_potential(model, rho),
    })
}

/// Derivative of a potential: `d/dr [ r * I(r) ] = I(r) + f(r)/r` where
/// `I(r) = int_1^r f(z)/z^2 dz`. Only defined for `rho > 0`.
pub fn potential_deriv(
    model: &PressureModel,
    which: Potential,
    rho: f64,
) -> Result<f64, ThermoError> {
    if rho <= 0.0 {
        return Err(ThermoError::NonPositiveReference(rho));
    }
    Ok(match which {
        Potential::H => h_potential_integral(model, rho) + model.eval_h(rho) / rho,
        Potential::Q => q_potential_integral(model, rho) + model.eval_q(rho) / rho,
        Potential::W => {
            h_potential_integral(model, rho)
                + q_potential_integral(model, rho)
                + (model.eval_h(rho) + model.eval_q(rho)) / rho
        }
    })
}

/// Potential value by adaptive Gauss-Legendre quadrature of the defining
/// integral (absolute tolerance 1e-10). Slower than [`potential`] but
/// independent of the antiderivative algebra; the test suite uses it as the
/// second route of the dual evaluation.
pub fn potential_by_quadrature(
    model: &PressureModel,
    which: Potential,
    rho: f64,
) -> Result<f64, ThermoError> {
    if rho < 0.0 {
        return Err(ThermoError::NegativeDensity(rho));
    }
    if rho == 0.0 {
        // r * int_1^r vanishes in the limit for every part with gamma > 1.
        return Ok(0.0);
    }
    let f = |z: f64| match which {
        Potential::W => (model.eval_h(z) + model.eval_q(z)) / (z * z),
        Potential::H => model.eval_h(z) / (z * z),
        Potential::Q => model.eval_q(z) / (z * z),
    };
    let integral = quadrature::integrate(&f, 1.0, rho, 1e-10)?;
    Ok(rho * integral)
}

fn h_potential_integral(model: &PressureModel, r: f64) -> f64 {
    // int_1^r c z^(g-2) dz = c (r^(g-1) - 1)/(g-1), convergent at 0 for g > 1.
    let g = model.h.gamma;
    model.h.coeff * (powg(r, g - 1.0) - 1.0) / (g - 1.0)
}

fn h_potential(model: &PressureModel, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r * h_potential_integral(model, r)
}

/// `int_1^r q(z)/z^2 dz` for the polynomial-with-continuation part.
fn q_potential_integral(model: &PressureModel, r: f64) -> f64 {
    match &model.q {
        LipschitzPart::Zero => 0.0,
        LipschitzPart::Polynomial { coeffs, continue_at } => {
            let rc = *continue_at;
            if r <= rc {
                poly_over_z2_integral(coeffs, r)
            } else {
                // Linear tail q(z) = a + b z: int (a/z^2 + b/z) dz.
                let b = poly_deriv_eval(coeffs, rc);
                let a = poly_eval(coeffs, rc) - b * rc;
                poly_over_z2_integral(coeffs, rc) + a * (1.0 / rc - 1.0 / r) + b * (r / rc).ln()
            }
        }
    }
}

fn q_potential(model: &PressureModel, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r * q_potential_integral(model, r)
}

/// `int_1^r (sum_k a_k z^k) / z^2 dz`; the `k = 1` term integrates to a log.
fn poly_over_z2_integral(coeffs: &[f64], r: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        if k == 1 {
            acc += a * r.ln();
        } else {
            let e = k as f64 - 1.0;
            acc += a * (powg(r, e) - 1.0) / e;
        }
    }
    acc
}

/// Bregman gap of the convex potential:
/// `H(rho) - H(r_ref) - H'(r_ref) (rho - r_ref)`.
///
/// Nonnegative whenever `H` is convex on the hull of the two arguments,
/// which holds for every model built from a power-law monotone part.
pub fn relative_h(model: &PressureModel, rho: f64, r_ref: f64) -> Result<f64, ThermoError> {
    if rho < 0.0 {
        return Err(ThermoError::NegativeDensity(rho));
    }
    if r_ref <= 0.0 {
        return Err(ThermoError::NonPositiveReference(r_ref));
    }
    let h_rho = h_potential(model, rho);
    let h_ref = h_potential(model, r_ref);
    let dh_ref = potential_deriv(model, Potential::H, r_ref)?;
    Ok(h_rho - h_ref - dh_ref * (rho - r_ref))
}

/// Locate the interval where `p' < 0` by sign scanning and bisection on
/// `[0, r_max]` (default `r_max = 10`).
///
/// Returns `None` for monotone models. More than two sign changes mean the
/// law is not of Van-der-Waals shape and is reported as an error.
pub fn spinodal_interval(
    model: &PressureModel,
    r_max: f64,
) -> Result<Option<SpinodalInterval>, ThermoError> {
    let n = 4096;
    let dp = |r: f64| model.pressure_deriv(r);
    let mut crossings = Vec::new();
    let mut prev_r = r_max / n as f64;
    let mut prev = dp(prev_r);
    for i in 2..=n {
        let r = r_max * i as f64 / n as f64;
        let cur = dp(r);
        if prev == 0.0 {
            // Grid point exactly on a root; treat as a crossing.
            crossings.push(prev_r);
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            crossings.push(bisect(&dp, prev_r, r));
        }
        prev_r = r;
        prev = cur;
    }
    match crossings.len() {
        0 => Ok(None),
        2 => Ok(Some(SpinodalInterval {
            r1: crossings[0],
            r2: crossings[1],
        })),
        k => Err(ThermoError::ModelShape {
            sign_changes: k,
            r_max,
        }),
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= f64::EPSILON * mid.abs() {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo.signum() == fm.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Numerically certified constants of the two convexity inequalities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvexityCertificate {
    /// Lower constant for `relative_h(rho, r) >= k_h |rho - r|^2` on the
    /// essential range and `>= k_h (1 + rho^gamma)` outside it.
    pub k_h: f64,
    /// Essential-range part of `k_h` alone.
    pub k_essential: f64,
    /// Outside-range part of `k_h` alone.
    pub k_residual: f64,
    /// Upper constant for `|h(rho) - h(r) - h'(r)(rho - r)| <= K_h * relative_h`.
    pub big_k_h: f64,
    /// Grid points per axis used for the certificate.
    pub grid: usize,
    /// Upper end of the sampled density range.
    pub rho_max_sampled: f64,
}

/// Certify the convexity constants `(k_h, K_h)` on a sample grid.
///
/// For reference densities `r` in `[a, b]` and probe densities `rho` in
/// `[0, 4 r2]` the routine returns the extremal ratios
///
/// ```text
/// k_h  = min( relH / |rho-r|^2  on rho in [r1, r2],
///             relH / (1+rho^gamma)  on rho outside [r1, r2] )
/// K_h  = max  |h(rho) - h(r) - h'(r)(rho - r)| / relH
/// ```
///
/// so both inequalities hold with zero violations on the grid by
/// construction. Pairs with `rho == r` are tight (both sides vanish) and are
/// bounded through the curvature-ratio limit `h''(r) r / h'(r)` instead.
pub fn convexity_constants(
    model: &PressureModel,
    r1: f64,
    a: f64,
    b: f64,
    r2: f64,
    grid: usize,
) -> Result<ConvexityCertificate, ThermoError> {
    if !(0.0 < r1 && r1 < a && a < b && b < r2) {
        return Err(ThermoError::InvalidModel(format!(
            "window must satisfy 0 < r1 < a < b < r2, got ({r1}, {a}, {b}, {r2})"
        )));
    }
    let rho_max = 4.0 * r2;
    let mut k_ess = f64::INFINITY;
    let mut k_res = f64::INFINITY;
    let mut big_k = 0.0f64;

    let r_at = |j: usize| a + (b - a) * j as f64 / (grid - 1) as f64;
    let rho_at = |i: usize| rho_max * i as f64 / (grid - 1) as f64;

    for j in 0..grid {
        let r = r_at(j);
        let h_r = model.eval_h(r);
        let dh_r = model.eval_h_deriv(r);
        // Curvature-ratio limit of the h-gap / H-gap quotient as rho -> r:
        // h''(r)/H''(r) = r h''(r)/h'(r).
        let g = model.h.gamma;
        let diag_ratio = (g - 1.0).abs().max(r * model.h.coeff * g * (g - 1.0) * powg(r, g - 2.0) / dh_r);
        big_k = big_k.max(diag_ratio);
        for i in 0..grid {
            let rho = rho_at(i);
            let rel = relative_h(model, rho, r)?;
            let diff = rho - r;
            if rel <= 0.0 {
                if diff.abs() > 1e-9 * r {
                    return Err(ThermoError::CertificationFailure { rho, r, gap: rel });
                }
                continue;
            }
            if (r1..=r2).contains(&rho) {
                if diff.abs() > 1e-12 {
                    k_ess = k_ess.min(rel / (diff * diff));
                }
            } else {
                k_res = k_res.min(rel / (1.0 + powg(rho, model.gamma)));
            }
            let h_gap = (model.eval_h(rho) - h_r - dh_r * diff).abs();
            big_k = big_k.max(h_gap / rel);
        }
    }
    let k_h = k_ess.min(k_res);
    if !(k_h > 0.0) || !big_k.is_finite() {
        return Err(ThermoError::CertificationFailure {
            rho: f64::NAN,
            r: f64::NAN,
            gap: k_h,
        });
    }
    Ok(ConvexityCertificate {
        k_h,
        k_essential: k_ess,
        k_residual: k_res,
        big_k_h: big_k,
        grid,
        rho_max_sampled: rho_max,
    })
}

/// Max residual per algebraic identity, plus exhibited growth constants.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// `p = W' r - W` (and the same for `h, H` and `q, Q`), worst over samples.
    pub legendre_w: f64,
    pub legendre_h: f64,
    pub legendre_q: f64,
    /// `p' = r W''`.
    pub curvature: f64,
    /// `W = H + Q`.
    pub additivity: f64,
    /// Constants with `r^gamma <= c1 + c2 W(r)` on the sampled range.
    pub c1: f64,
    pub c2: f64,
    /// Constant with `W(r) <= c3 (1 + r^gamma)` on the sampled range.
    pub c3: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Residual tolerance of the identity suite.
pub const IDENTITY_TOL: f64 = 1e-6;

/// Check the potential identities on the given density samples.
///
/// First derivatives are central differences of the potential values with
/// step 1e-6. The curvature identity `p' = r W''` uses a central difference
/// of the analytic `W'` (a plain second difference of `W` at this step size
/// would drown in rounding error) and a central difference of `p` on the
/// other side, so the two routes stay independent.
pub fn verify_identities(
    model: &PressureModel,
    samples: &[f64],
) -> Result<IdentityReport, ThermoError> {
    const STEP: f64 = 1e-6;
    let mut rep = IdentityReport {
        legendre_w: 0.0,
        legendre_h: 0.0,
        legendre_q: 0.0,
        curvature: 0.0,
        additivity: 0.0,
        c1: 0.0,
        c2: 1.0,
        c3: 0.0,
        samples: samples.len(),
        pass: false,
    };
    for &r in samples {
        if r <= STEP {
            return Err(ThermoError::NonPositiveReference(r));
        }
        let val = |which, x| potential(model, which, x);
        let w = val(Potential::W, r)?;
        let h = val(Potential::H, r)?;
        let q = val(Potential::Q, r)?;

        let fd = |which| -> Result<f64, ThermoError> {
            Ok((val(which, r + STEP)? - val(which, r - STEP)?) / (2.0 * STEP))
        };
        let dw = fd(Potential::W)?;
        let dh = fd(Potential::H)?;
        let dq = fd(Potential::Q)?;

        rep.legendre_w = rep
            .legendre_w
            .max((eval_pressure(model, r)? - (dw * r - w)).abs());
        rep.legendre_h = rep.legendre_h.max((model.eval_h(r) - (dh * r - h)).abs());
        rep.legendre_q = rep.legendre_q.max((model.eval_q(r) - (dq * r - q)).abs());

        let ddw = (potential_deriv(model, Potential::W, r + STEP)?
            - potential_deriv(model, Potential::W, r - STEP)?)
            / (2.0 * STEP);
        let dp = (eval_pressure(model, r + STEP)? - eval_pressure(model, r - STEP)?) / (2.0 * STEP);
        rep.curvature = rep.curvature.max((dp - r * ddw).abs());

        rep.additivity = rep.additivity.max((w - (h + q)).abs());

        let rg = powg(r, model.gamma);
        rep.c1 = rep.c1.max(rg - w);
        rep.c3 = rep.c3.max((w / (1.0 + rg)).max(0.0));
    }
    rep.c1 = rep.c1.max(0.0);
    rep.pass = rep.legendre_w <= IDENTITY_TOL
        && rep.legendre_h <= IDENTITY_TOL
        && rep.legendre_q <= IDENTITY_TOL
        && rep.curvature <= IDENTITY_TOL
        && rep.additivity <= 1e-9;
    Ok(rep)
}

/// 200 log-spaced samples on [0.1, 10]: the canonical identity-check grid.
pub fn logspace_samples() -> Vec<f64> {
    let (lo, hi, n) = (0.1f64, 10.0f64, 200);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}
