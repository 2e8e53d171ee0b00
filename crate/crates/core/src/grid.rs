//! Finite-difference discretization of `-1/2 Δ + s V` on `(0,1)^d` with
//! Dirichlet boundary conditions.
//!
//! Grid points are `x_i = (i_1 h, ..., i_d h)` with `i_k ∈ {1..n}` and
//! `h = 1/(n+1)`. Flat indices are row-major over axes: axis 1 varies
//! slowest, axis `d` fastest. Tabulated potentials and state dumps use the
//! same ordering.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, State, C64};

/// Default upper bound on `n^d`.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Uniform grid on the open unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
    dim: usize,
}

impl GridSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_cap(d, n, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(d: usize, n: usize, cap: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidGrid("dimension d must be positive".into()));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("n must be positive".into()));
        }
        let dim = u32::try_from(d)
            .ok()
            .and_then(|d32| n.checked_pow(d32))
            .ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap,
            })?;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(GridSpec { d, n, dim })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix size `n^d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mesh size `1/(n+1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    /// `1/h = n+1`, exact.
    pub fn inv_h(&self) -> f64 {
        (self.n + 1) as f64
    }

    /// Distance in flat index between neighbours along `axis` (0-based).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    /// 1-based multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for axis in (0..self.d).rev() {
            idx[axis] = flat % self.n + 1;
            flat /= self.n;
        }
        idx
    }

    /// Coordinates of the grid point with the given flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.h();
        self.multi_index(flat)
            .into_iter()
            .map(|i| i as f64 * h)
            .collect()
    }

    /// Qubits needed for the bottom register, `d * ceil(log2(n+1))`.
    pub fn bottom_qubits(&self) -> u32 {
        let per_axis = usize::BITS - self.n.leading_zeros();
        // ceil(log2(n+1)) equals the bit length of n.
        self.d as u32 * per_axis
    }
}

/// Potential families understood by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `V ≡ 0`.
    Zero,
    /// `V(x) = Σ_k a_k (x_k - c_k)^2`.
    SeparableQuadratic {
        coefficients: Vec<f64>,
        center: Vec<f64>,
    },
    /// `V(x) = a |x - c|^2`.
    RadialQuadratic { strength: f64, center: Vec<f64> },
    /// Grid values in row-major order. `csv` names a file the values were (or
    /// are to be) loaded from; the library itself only reads `values`.
    Tabulated {
        #[serde(default)]
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<String>,
    },
}

impl PotentialSpec {
    /// Separable quadratic with the same coefficient and center on every axis.
    pub fn quadratic(d: usize, coefficient: f64, center: f64) -> Self {
        PotentialSpec::SeparableQuadratic {
            coefficients: vec![coefficient; d],
            center: vec![center; d],
        }
    }

    pub fn tabulated(values: Vec<f64>) -> Self {
        PotentialSpec::Tabulated { values, csv: None }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, PotentialSpec::Tabulated { .. })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialSpec::Zero)
    }

    /// Evaluate an analytic potential at a point. `None` for tabulated data.
    pub fn evaluate(&self, x: &[f64]) -> Option<f64> {
        match self {
            PotentialSpec::Zero => Some(0.0),
            PotentialSpec::SeparableQuadratic {
                coefficients,
                center,
            } => Some(
                x.iter()
                    .zip(coefficients)
                    .zip(center)
                    .map(|((xi, a), c)| a * (xi - c) * (xi - c))
                    .sum(),
            ),
            PotentialSpec::RadialQuadratic { strength, center } => Some(
                strength
                    * x.iter()
                        .zip(center)
                        .map(|(xi, c)| (xi - c) * (xi - c))
                        .sum::<f64>(),
            ),
            PotentialSpec::Tabulated { .. } => None,
        }
    }

    fn check_shape(&self, grid: &GridSpec) -> Result<()> {
        let d = grid.d();
        let bad_len = |what: &str, len: usize| {
            Error::InvalidPotential(format!("{what} has length {len}, grid dimension is {d}"))
        };
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::SeparableQuadratic {
                coefficients,
                center,
            } => {
                if coefficients.len() != d {
                    return Err(bad_len("coefficients", coefficients.len()));
                }
                if center.len() != d {
                    return Err(bad_len("center", center.len()));
                }
                if coefficients.iter().chain(center).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite parameter".into()));
                }
                Ok(())
            }
            PotentialSpec::RadialQuadratic { strength, center } => {
                if center.len() != d {
                    return Err(bad_len("center", center.len()));
                }
                if !strength.is_finite() || center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite parameter".into()));
                }
                Ok(())
            }
            PotentialSpec::Tabulated { values, .. } => {
                if values.len() != grid.dim() {
                    return Err(Error::InvalidPotential(format!(
                        "tabulated potential has {} values, grid needs {}",
                        values.len(),
                        grid.dim()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Potential values at every grid point, row-major.
    ///
    /// Rejects negative or non-finite values. Built-in families must pass the
    /// discrete midpoint-convexity check; tabulated data only logs a warning.
    pub fn grid_values(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        self.check_shape(grid)?;
        let values: Vec<f64> = match self {
            PotentialSpec::Tabulated { values, .. } => values.clone(),
            _ => (0..grid.dim())
                .map(|i| self.evaluate(&grid.point(i)).unwrap_or(0.0))
                .collect(),
        };
        if self.is_builtin() {
            if let Some(violation) = midpoint_convexity_violation(grid, &values) {
                return Err(Error::NotConvex(violation));
            }
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidPotential(format!(
                "value {v} at grid index {i} (potential must be finite and non-negative)"
            )));
        }
        if let Some(violation) = midpoint_convexity_violation(grid, &values) {
            log::warn!("tabulated potential is not midpoint convex: {violation}");
        }
        Ok(values)
    }
}

/// First axis-aligned triple `(x-he, x, x+he)` with `V(x-he) + V(x+he) < 2V(x)`.
pub fn midpoint_convexity_violation(grid: &GridSpec, values: &[f64]) -> Option<String> {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    for axis in 0..grid.d() {
        let stride = grid.stride(axis);
        for (i, v) in values.iter().enumerate() {
            let pos = (i / stride) % grid.n();
            if pos == 0 || pos + 1 == grid.n() {
                continue;
            }
            let second = values[i - stride] + values[i + stride] - 2.0 * v;
            if second < -tol {
                return Some(format!(
                    "axis {} at grid index {i}: second difference {second:.3e}",
                    axis + 1
                ));
            }
        }
    }
    None
}

/// Uniform bound `C` and first-difference bound `C'` of a potential on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBounds {
    pub c: f64,
    pub c_prime: f64,
}

/// `C = max V(x_i)`, `C' = max |V(x + h e_k) - V(x)| / h` over interior pairs.
pub fn potential_bounds(pot: &PotentialSpec, grid: &GridSpec) -> Result<PotentialBounds> {
    let values = pot.grid_values(grid)?;
    Ok(bounds_from_values(grid, &values))
}

pub(crate) fn bounds_from_values(grid: &GridSpec, values: &[f64]) -> PotentialBounds {
    let c = values.iter().copied().fold(0.0, f64::max);
    let mut c_prime = 0.0_f64;
    for axis in 0..grid.d() {
        let stride = grid.stride(axis);
        for (i, v) in values.iter().enumerate() {
            if (i / stride) % grid.n() + 1 < grid.n() {
                c_prime = c_prime.max((values[i + stride] - v).abs() * grid.inv_h());
            }
        }
    }
    PotentialBounds { c, c_prime }
}

/// One eigenpair of the 1-D operator `-1/2 ∂²` discretized on `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMode {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
}

/// Closed-form eigenpairs of `tridiag(-1, 2, -1) / (2h²)`, ascending.
///
/// `λ_k = 2 h⁻² sin²(kπh/2)` and `(z_k)_i = √(2h) sin(k i π h)`.
pub fn laplacian_spectrum_1d(grid: &GridSpec) -> Vec<AxisMode> {
    let n = grid.n();
    let h = grid.h();
    (1..=n)
        .map(|k| AxisMode {
            eigenvalue: axis_eigenvalue(h, k),
            vector: sine_mode(n, h, k),
        })
        .collect()
}

pub(crate) fn axis_eigenvalue(h: f64, k: usize) -> f64 {
    let s = (k as f64 * std::f64::consts::PI * h / 2.0).sin();
    2.0 * s * s / (h * h)
}

fn sine_mode(n: usize, h: f64, k: usize) -> Vec<f64> {
    let scale = (2.0 * h).sqrt();
    (1..=n)
        .map(|i| scale * ((k * i) as f64 * std::f64::consts::PI * h).sin())
        .collect()
}

/// Orthogonal, symmetric `n × n` sine transform; column `k-1` is `z_k`.
pub fn sine_basis(grid: &GridSpec) -> DMatrix<f64> {
    let n = grid.n();
    let h = grid.h();
    let scale = (2.0 * h).sqrt();
    DMatrix::from_fn(n, n, |i, k| {
        scale * (((i + 1) * (k + 1)) as f64 * std::f64::consts::PI * h).sin()
    })
}

/// Ground state of the discrete Laplacian, the `d`-fold tensor power of `z_1`.
pub fn sine_ground_state(grid: &GridSpec) -> State {
    let z = sine_mode(grid.n(), grid.h(), 1);
    DVector::from_fn(grid.dim(), |flat, _| {
        let amp: f64 = grid.multi_index(flat).iter().map(|&i| z[i - 1]).product();
        C64::new(amp, 0.0)
    })
}

/// The matrix `M = -1/2 Δ_h + s V_h`, stored as its kinetic stencil and
/// potential diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerms {
    pub grid: GridSpec,
    /// Coefficient of `-Δ_h`.
    pub kinetic_scale: f64,
    /// Unscaled grid values of `V`.
    pub v_diag: Vec<f64>,
    /// Stage fraction `ℓ/L`.
    pub s: f64,
}

/// Assemble `M_{h,ℓ} = -1/2 Δ_h + s V_h`.
pub fn assemble_hamiltonian(grid: &GridSpec, pot: &PotentialSpec, s: f64) -> Result<HamiltonianTerms> {
    let v_diag = pot.grid_values(grid)?;
    HamiltonianTerms::from_values(*grid, v_diag, s)
}

impl HamiltonianTerms {
    pub fn from_values(grid: GridSpec, v_diag: Vec<f64>, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "stage fraction s = {s} outside [0, 1]"
            )));
        }
        if v_diag.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: v_diag.len(),
            });
        }
        Ok(HamiltonianTerms {
            grid,
            kinetic_scale: 0.5,
            v_diag,
            s,
        })
    }

    /// Same grid and potential at another stage fraction.
    pub fn at_stage(&self, s: f64) -> Result<Self> {
        Self::from_values(self.grid, self.v_diag.clone(), s)
    }

    /// Diagonal of `s V_h`.
    pub fn scaled_potential(&self) -> Vec<f64> {
        self.v_diag.iter().map(|v| self.s * v).collect()
    }

    /// `C = max V` over the grid.
    pub fn potential_max(&self) -> f64 {
        self.v_diag.iter().copied().fold(0.0, f64::max)
    }

    /// `2 d h⁻² + C`, an upper bound on `‖M‖`.
    pub fn norm_bound(&self) -> f64 {
        let inv_h = self.grid.inv_h();
        4.0 * self.kinetic_scale * self.grid.d() as f64 * inv_h * inv_h + self.potential_max()
    }

    /// `y = M x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let inv_h = g.inv_h();
        let diag = 2.0 * self.kinetic_scale * inv_h * inv_h * g.d() as f64;
        let off = -self.kinetic_scale * inv_h * inv_h;
        let mut y: Vec<f64> = x
            .iter()
            .zip(&self.v_diag)
            .map(|(xi, v)| (diag + self.s * v) * xi)
            .collect();
        for axis in 0..g.d() {
            let stride = g.stride(axis);
            for (i, yi) in y.iter_mut().enumerate() {
                let pos = (i / stride) % g.n();
                if pos > 0 {
                    *yi += off * x[i - stride];
                }
                if pos + 1 < g.n() {
                    *yi += off * x[i + stride];
                }
            }
        }
        y
    }

    /// Dense copy of `M`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let g = &self.grid;
        let dim = g.dim();
        let inv_h = g.inv_h();
        let diag = 2.0 * self.kinetic_scale * inv_h * inv_h * g.d() as f64;
        let off = -self.kinetic_scale * inv_h * inv_h;
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = diag + self.s * self.v_diag[i];
            for axis in 0..g.d() {
                let stride = g.stride(axis);
                if (i / stride) % g.n() + 1 < g.n() {
                    m[(i, i + stride)] = off;
                    m[(i + stride, i)] = off;
                }
            }
        }
        m
    }
}
