//! Thomas solver for tridiagonal systems, plus the Sherman-Morrison
//! variant for the cyclic systems that periodic boundaries produce.
//!
//! Both implicit sub-steps of the integrators (the order-parameter solve and
//! the trapezoidal viscous solve) assemble strictly diagonally dominant
//! matrices, which is asserted here: dominance rules out breakdown of the
//! elimination without pivoting.

/// Solve `A x = d` where `A` is tridiagonal with sub-diagonal `sub`,
/// diagonal `diag` and super-diagonal `sup` (`sub[0]` and `sup[n-1]` unused).
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 2);
    for i in 0..n {
        let off = if i > 0 { sub[i].abs() } else { 0.0 }
            + if i + 1 < n { sup[i].abs() } else { 0.0 };
        assert!(
            diag[i].abs() > off,
            "tridiagonal matrix not strictly diagonally dominant at row {i}"
        );
    }
    let mut w = vec![0.0; n];
    let mut g = vec![0.0; n];
    w[0] = sup[0] / diag[0];
    g[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * w[i - 1];
        if i + 1 < n {
            w[i] = sup[i] / denom;
        }
        g[i] = (rhs[i] - sub[i] * g[i - 1]) / denom;
    }
    let mut x = g;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= w[i] * next;
    }
    x
}

/// Solve the cyclic tridiagonal system where `sub[0]` couples row 0 to the
/// last unknown and `sup[n-1]` couples the last row to the first.
pub fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    // Rank-one correction M = T + u v^T with u = (gamma, 0, .., 0, sup[n-1]),
    // v = (1, 0, .., 0, sub[0]/gamma); gamma = -diag[0] keeps T dominant for
    // the sign pattern of our matrices (positive diagonal, negative offs).
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= sup[n - 1] * sub[0] / gamma;

    let y = thomas(sub, &d, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = thomas(sub, &d, sup, &u);

    let vy = y[0] + sub[0] / gamma * y[n - 1];
    let vz = z[0] + sub[0] / gamma * z[n - 1];
    let factor = vy / (1.0 + vz);
    (0..n).map(|i| y[i] - factor * z[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_vec_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let prev = if i == 0 { n - 1 } else { i - 1 };
                let next = if i == n - 1 { 0 } else { i + 1 };
                sub[i] * x[prev] + diag[i] * x[i] + sup[i] * x[next]
            })
            .collect()
    }

    #[test]
    fn thomas_solves_dominant_system() {
        let n = 9;
        let sub = vec![-1.0; n];
        let diag = vec![4.0; n];
        let sup = vec![-1.5; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let x = thomas(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += sub[i] * x[i - 1];
            }
            if i + 1 < n {
                r += sup[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_thomas_solves_wrapped_system() {
        let n = 16;
        let sub = vec![-0.7; n];
        let mut diag = vec![3.0; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d += 0.1 * i as f64;
        }
        let sup = vec![-0.9; n];
        let rhs: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let x = cyclic_thomas(&sub, &diag, &sup, &rhs);
        let back = mat_vec_cyclic(&sub, &diag, &sup, &x);
        for i in 0..n {
            assert!((back[i] - rhs[i]).abs() < 1e-11, "row {i}");
        }
    }

    #[test]
    #[should_panic(expected = "diagonally dominant")]
    fn rejects_non_dominant_matrix() {
        let sub = vec![-2.0; 4];
        let diag = vec![1.0; 4];
        let sup = vec![-2.0; 4];
        thomas(&sub, &diag, &sup, &[1.0, 1.0, 1.0, 1.0]);
    }
}
