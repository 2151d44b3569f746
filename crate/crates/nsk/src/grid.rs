//! 1D cell-centered discretization shared by both solvers.
//!
//! Cells live at `x_i = (i + 1/2) dx` on a domain of length `L`. Boundary
//! closures use mirrored ghost cells: an even mirror enforces a zero-Neumann
//! condition at the wall, an odd mirror a zero-Dirichlet one, and periodic
//! mode wraps. Stencils are the standard second-order central ones, so they
//! annihilate constants exactly and telescope under the midpoint-rule
//! integral, which is what the conservation and energy tests lean on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least 8 cells, got {0}")]
    TooFewCells(usize),
    #[error("domain length must be positive, got {0}")]
    BadLength(f64),
    #[error("field has {field} values but the grid has {grid} cells")]
    SizeMismatch { field: usize, grid: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
}

/// Boundary treatment of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    /// Wrap-around domain.
    Periodic,
    /// Solid walls: zero velocity, zero normal gradient of density and order
    /// parameter.
    Wall,
}

/// How a field behaves at a wall; ignored in periodic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallBc {
    /// Zero normal derivative: ghost cells mirror values (even extension).
    NeumannZero,
    /// Zero value at the wall: ghost cells mirror with a sign flip (odd
    /// extension).
    DirichletZero,
}

/// Uniform 1D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub length: f64,
    pub n_cells: usize,
    pub bc: BcMode,
}

impl Grid1D {
    pub fn new(length: f64, n_cells: usize, bc: BcMode) -> Result<Self, GridError> {
        if n_cells < 8 {
            return Err(GridError::TooFewCells(n_cells));
        }
        if !(length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self {
            length,
            n_cells,
            bc,
        })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    /// Cell-center coordinate of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Build a field by sampling `f` at cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: *self,
            values: (0..self.n_cells).map(|i| f(self.x(i))).collect(),
        }
    }

    pub fn constant(&self, value: f64) -> Field {
        Field {
            grid: *self,
            values: vec![value; self.n_cells],
        }
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n_cells {
            return Err(GridError::SizeMismatch {
                field: values.len(),
                grid: grid.n_cells,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn assert_finite(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(GridError::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Value in cell `i` extended by the boundary rule, for `i` in
    /// `-2..n+2`.
    fn at(&self, i: isize, wall: WallBc) -> f64 {
        let n = self.values.len() as isize;
        match self.grid.bc {
            BcMode::Periodic => self.values[(i.rem_euclid(n)) as usize],
            BcMode::Wall => {
                if i < 0 {
                    let mirrored = self.values[(-i - 1) as usize];
                    match wall {
                        WallBc::NeumannZero => mirrored,
                        WallBc::DirichletZero => -mirrored,
                    }
                } else if i >= n {
                    let mirrored = self.values[(2 * n - 1 - i) as usize];
                    match wall {
                        WallBc::NeumannZero => mirrored,
                        WallBc::DirichletZero => -mirrored,
                    }
                } else {
                    self.values[i as usize]
                }
            }
        }
    }

    /// Second-order central first derivative.
    pub fn ddx(&self, wall: WallBc) -> Field {
        let n = self.values.len() as isize;
        let inv2dx = 1.0 / (2.0 * self.grid.dx());
        let values = (0..n)
            .map(|i| (self.at(i + 1, wall) - self.at(i - 1, wall)) * inv2dx)
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Standard 3-point second derivative; ghost cells mirror per `wall`.
    pub fn laplacian(&self, wall: WallBc) -> Field {
        let n = self.values.len() as isize;
        let inv_dx2 = 1.0 / (self.grid.dx() * self.grid.dx());
        let values = (0..n)
            .map(|i| {
                (self.at(i + 1, wall) - 2.0 * self.at(i, wall) + self.at(i - 1, wall)) * inv_dx2
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Third derivative as the composition `ddx(laplacian(f))`; this is the
    /// capillary operator of the momentum equation in 1D.
    pub fn grad_laplacian(&self, wall: WallBc) -> Field {
        self.laplacian(wall).ddx(wall)
    }

    /// Midpoint-rule integral `dx * sum(values)`; exact for cell averages.
    pub fn integrate(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    /// Discrete L2 norm `sqrt(int f^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Pointwise binary map onto a new field.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Restrict onto a grid coarser by an integer factor by averaging
    /// children (conservative: the integral is preserved exactly).
    pub fn restrict_to(&self, coarse: Grid1D) -> Result<Field, GridError> {
        if !self.grid.n_cells.is_multiple_of(coarse.n_cells) {
            return Err(GridError::SizeMismatch {
                field: self.grid.n_cells,
                grid: coarse.n_cells,
            });
        }
        let factor = self.grid.n_cells / coarse.n_cells;
        let values = (0..coarse.n_cells)
            .map(|i| {
                self.values[i * factor..(i + 1) * factor].iter().sum::<f64>() / factor as f64
            })
            .collect();
        Field {
            grid: coarse,
            values,
        }
        .assert_sized(coarse)
    }

    fn assert_sized(self, grid: Grid1D) -> Result<Field, GridError> {
        if self.values.len() == grid.n_cells {
            Ok(self)
        } else {
            Err(GridError::SizeMismatch {
                field: self.values.len(),
                grid: grid.n_cells,
            })
        }
    }

    /// Write the field as `x,value` CSV lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.grid.x(i), v));
        }
        out
    }
}

/// Discrete state of either system: density, momentum and order parameter at
/// one time instant. Solvers for the capillary system carry `c == rho` so the
/// diagnostics treat both uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub rho: Field,
    pub mom: Field,
    pub c: Field,
    pub time: f64,
}

impl SimState {
    pub fn new(rho: Field, mom: Field, c: Field, time: f64) -> Self {
        debug_assert_eq!(rho.len(), mom.len());
        debug_assert_eq!(rho.len(), c.len());
        Self { rho, mom, c, time }
    }

    pub fn grid(&self) -> Grid1D {
        self.rho.grid
    }

    /// Velocity `u = mom / rho`.
    pub fn velocity(&self) -> Field {
        self.mom.zip_with(&self.rho, |m, r| m / r)
    }

    pub fn mass(&self) -> f64 {
        self.rho.integrate()
    }

    pub fn assert_finite(&self) -> Result<(), GridError> {
        self.rho.assert_finite()?;
        self.mom.assert_finite()?;
        self.c.assert_finite()
    }
}
