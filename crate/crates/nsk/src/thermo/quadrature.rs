//! Adaptive Gauss-Legendre quadrature.
//!
//! Used as the reference evaluation route for the pressure potentials when no
//! analytic antiderivative applies, and by the test suite as an oracle that is
//! independent of the analytic formulas.

use super::ThermoError;

// Nodes and weights are written to full printed precision; f64 keeps what it
// can.
#[allow(clippy::excessive_precision)]
/// 15-point Gauss-Legendre nodes on [-1, 1] (positive half; rule is symmetric).
const GL15_NODES: [f64; 8] = [
    0.0,
    0.201194093997434514387023796189,
    0.394151347077563385390419625764,
    0.570972172608538830473889902350,
    0.724417731360170069621062793885,
    0.848206583410427206182191639527,
    0.937273392400705951388317771489,
    0.987992518020485377405748295132,
];

#[allow(clippy::excessive_precision)]
const GL15_WEIGHTS: [f64; 8] = [
    0.202578241925560897929159409614,
    0.198431485327111245542397455210,
    0.186161000015561878262460027145,
    0.166269205816993781432699961442,
    0.139570677926153907666417808286,
    0.107159220467171772961378906075,
    0.070366047488108068863610355947,
    0.030753241996118646506275240426,
];

fn gl15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = GL15_WEIGHTS[0] * f(mid);
    for i in 1..8 {
        let dx = half * GL15_NODES[i];
        sum += GL15_WEIGHTS[i] * (f(mid + dx) + f(mid - dx));
    }
    sum * half
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// interval halving of a 15-point Gauss-Legendre rule.
///
/// Fails with an interval report when the local error estimate does not fall
/// below the distributed tolerance within the recursion depth limit.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, ThermoError> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let whole = gl15(f, lo, hi);
    adaptive(f, lo, hi, whole, tol, 64).map(|v| sign * v)
}

fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, ThermoError> {
    let mid = 0.5 * (a + b);
    let left = gl15(f, a, mid);
    let right = gl15(f, mid, b);
    let err = (left + right - whole).abs();
    // Accept on the absolute budget or once the estimate is at rounding
    // level of the local value; without the relative floor an integrable
    // endpoint singularity would exhaust the tolerance while subdividing.
    if err <= tol || err <= 1e-13 * (left.abs() + right.abs()) {
        return Ok(left + right);
    }
    if depth == 0 {
        return Err(ThermoError::QuadratureNonConvergence {
            lo: a,
            hi: b,
            estimate: left + right,
            error: err,
        });
    }
    let l = adaptive(f, a, mid, left, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, mid, b, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}
