//! A 1D numerical laboratory for diffuse-interface two-phase flow.
//!
//! The library implements two coupled compressible flow models on a
//! one-dimensional domain:
//!
//! * the Navier-Stokes-Korteweg (NSK) equations, where capillarity enters
//!   through a third-order term `kappa * rho * d/dx(Laplacian(rho))`, and
//! * a parabolic relaxation of NSK, where an order parameter `c` governed by
//!   `beta * dc/dt - kappa * Laplacian(c) + alpha * (c - rho) = 0` replaces
//!   the third-order operator by first-order coupling.
//!
//! On top of the solvers sits a diagnostics layer that evaluates the energy
//! budget, relative-energy distances, remainder decompositions and the
//! coupling-strength convergence rate `s(alpha) = 1/alpha + beta + e^2 + E0`,
//! plus an experiment harness (coupling sweeps, perturbation studies) with a
//! TOML-configured CLI in the companion `nsk-cli` crate.
//!
//! See the `book/` directory for a guided tour; its code snippets are
//! compiled as doc-tests of this crate.

// `!(x > 0.0)` instead of `x <= 0.0` throughout: the negated form also
// rejects NaN, which is the point of these parameter guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod grid;
pub mod harness;
pub mod solver;
pub mod thermo;

#[cfg(doctest)]
mod book {
    //! Doc-test wiring for the mdbook guide: every fenced Rust block in the
    //! book compiles and runs under `cargo test --doc`.
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pressure.md")]
    mod pressure {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/relative_energy.md")]
    mod relative_energy {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
