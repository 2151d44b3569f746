//! Initial-data profiles, resolvable on any grid (the reference builder
//! needs the same data on refined grids).

use super::config::InitConfig;
use crate::grid::{Field, Grid1D, SimState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// A resolution-independent initial profile.
#[derive(Debug, Clone)]
pub struct InitProfile {
    config: InitConfig,
}

impl InitProfile {
    pub fn new(config: InitConfig) -> Self {
        Self { config }
    }

    pub fn density(&self, grid: Grid1D) -> Field {
        let length = grid.length;
        match &self.config {
            InitConfig::Uniform { rho, .. } => grid.constant(*rho),
            InitConfig::Sine {
                rho_bar,
                amplitude,
                mode,
                ..
            } => {
                let k = 2.0 * PI * *mode as f64 / length;
                grid.sample(|x| rho_bar + amplitude * (k * x).sin())
            }
            InitConfig::Bump {
                rho_bar,
                amplitude,
                width,
                ..
            } => {
                let center = 0.5 * length;
                grid.sample(|x| {
                    let d = (x - center) / width;
                    rho_bar + amplitude * (-d * d).exp()
                })
            }
            InitConfig::TwoPhase {
                rho_left,
                rho_right,
                width,
            } => {
                // Periodic-friendly double transition at L/4 and 3L/4.
                let mid = 0.5 * (rho_left + rho_right);
                let half = 0.5 * (rho_right - rho_left);
                grid.sample(|x| {
                    let a = ((x - 0.25 * length) / width).tanh();
                    let b = ((x - 0.75 * length) / width).tanh();
                    mid + half * (a - b - 1.0)
                })
            }
        }
    }

    fn velocity(&self) -> f64 {
        match &self.config {
            InitConfig::Uniform { velocity, .. }
            | InitConfig::Sine { velocity, .. }
            | InitConfig::Bump { velocity, .. } => *velocity,
            InitConfig::TwoPhase { .. } => 0.0,
        }
    }

    /// State with `m = rho * velocity` and the order parameter matching the
    /// density (well-prepared in the relaxation sense).
    pub fn state(&self, grid: Grid1D) -> SimState {
        let rho = self.density(grid);
        let v = self.velocity();
        let mom = rho.map(|r| r * v);
        let c = rho.clone();
        SimState::new(rho, mom, c, 0.0)
    }
}

/// Smooth zero-mean noise: the first `modes` Fourier sine/cosine pairs with
/// seeded amplitudes, normalized to unit sup norm. Sine and cosine modes
/// integrate to zero exactly on the periodic cell-centered grid, so the
/// perturbed data keeps its mean up to rounding.
pub fn smooth_noise(grid: Grid1D, modes: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..modes)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let length = grid.length;
    let mut field = grid.sample(|x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = 2.0 * PI * (m + 1) as f64 / length;
                a * (k * x).sin() + b * (k * x).cos()
            })
            .sum()
    });
    let sup = field
        .values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for v in &mut field.values {
        *v /= sup;
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BcMode;

    #[test]
    fn sine_profile_resolves_on_any_grid() {
        let profile = InitProfile::new(InitConfig::Sine {
            rho_bar: 1.0,
            amplitude: 0.1,
            mode: 1,
            velocity: 0.0,
        });
        for n in [64, 128, 256] {
            let g = Grid1D::new(1.0, n, BcMode::Periodic).unwrap();
            let s = profile.state(g);
            assert_eq!(s.rho.len(), n);
            assert!((s.mass() - 1.0).abs() < 1e-12);
            assert_eq!(s.rho.values, s.c.values);
        }
    }

    #[test]
    fn noise_is_deterministic_zero_mean_unit_sup() {
        let g = Grid1D::new(1.0, 256, BcMode::Periodic).unwrap();
        let a = smooth_noise(g, 5, 42);
        let b = smooth_noise(g, 5, 42);
        assert_eq!(a.values, b.values);
        let c = smooth_noise(g, 5, 43);
        assert_ne!(a.values, c.values);
        assert!(a.integrate().abs() < 1e-12);
        let sup = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_phase_profile_spans_the_phases() {
        let profile = InitProfile::new(InitConfig::TwoPhase {
            rho_left: 1.0,
            rho_right: 4.5,
            width: 0.05,
        });
        let g = Grid1D::new(1.0, 256, BcMode::Periodic).unwrap();
        let rho = profile.density(g);
        let min = rho.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = rho.values.iter().cloned().fold(0.0f64, f64::max);
        assert!(min < 1.4 && max > 4.0);
    }
}
