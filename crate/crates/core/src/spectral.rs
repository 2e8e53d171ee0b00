//! Dense eigendecomposition of discretized Hamiltonians, used as the
//! classical ground truth for gaps, overlaps, and reference energies.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::grid::{assemble_hamiltonian, GridSpec, HamiltonianTerms, PotentialSpec};
use crate::{Error, Result, State, C64};

/// Eigenpairs sorted by ascending eigenvalue. Column `j` of `eigenvectors`
/// pairs with `eigenvalues[j]`; every column has its first nonzero entry
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// Sorts the pairs and applies the sign convention.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let dim = eigenvalues.len();
        if eigenvectors.nrows() != dim || eigenvectors.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: eigenvectors.ncols(),
            });
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        let values = order.iter().map(|&i| eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(dim, dim);
        for (col, &src) in order.iter().enumerate() {
            let mut v = eigenvectors.column(src).into_owned();
            let scale = v.amax();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
                if *first < 0.0 {
                    v.neg_mut();
                }
            }
            vectors.set_column(col, &v);
        }
        Ok(Spectrum {
            eigenvalues: values,
            eigenvectors: vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `u_0` as a complex state.
    pub fn ground_state(&self) -> State {
        self.eigenvector(0)
    }

    pub fn eigenvector(&self, j: usize) -> State {
        self.eigenvectors.column(j).map(|x| C64::new(x, 0.0))
    }

    /// Expansion coefficients `c_j = <u_j|ψ>`.
    pub fn coefficients(&self, psi: &State) -> Result<Vec<C64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        Ok((0..self.dim())
            .map(|j| {
                self.eigenvectors
                    .column(j)
                    .iter()
                    .zip(psi.iter())
                    .map(|(u, p)| p * *u)
                    .sum()
            })
            .collect())
    }

    /// `Σ_j c_j u_j`.
    pub fn synthesize(&self, coefficients: &[C64]) -> State {
        let mut out = DVector::from_element(self.dim(), C64::new(0.0, 0.0));
        for (j, c) in coefficients.iter().enumerate() {
            for (o, u) in out.iter_mut().zip(self.eigenvectors.column(j).iter()) {
                *o += c * *u;
            }
        }
        out
    }
}

/// Full dense eigendecomposition of `M_{h,ℓ}`. The grid's dimension cap
/// was enforced when the [`GridSpec`] was built.
pub fn eigendecompose(ham: &HamiltonianTerms) -> Result<Spectrum> {
    eigendecompose_dense(&ham.to_dense())
}

/// Eigendecomposition of a dense symmetric matrix with residual and
/// orthonormality checks.
pub fn eigendecompose_dense(m: &DMatrix<f64>) -> Result<Spectrum> {
    let dim = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * dim.max(1)).ok_or_else(|| {
        Error::Eigen(format!(
            "symmetric QR iteration did not converge (dim {dim}, max |m_ij| {:.3e})",
            m.amax()
        ))
    })?;
    let spectrum = Spectrum::from_parts(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)?;

    let norm = spectrum
        .eigenvalues
        .iter()
        .fold(0.0_f64, |a, l| a.max(l.abs()))
        .max(f64::MIN_POSITIVE);
    let residual = m * &spectrum.eigenvectors
        - &spectrum.eigenvectors * DMatrix::from_diagonal(&DVector::from_vec(spectrum.eigenvalues.clone()));
    let worst = (0..dim)
        .map(|j| residual.column(j).norm())
        .fold(0.0_f64, f64::max);
    if worst > 1e-9 * norm {
        return Err(Error::Eigen(format!(
            "residual {worst:.3e} exceeds 1e-9 * ‖M‖ = {:.3e}",
            1e-9 * norm
        )));
    }
    let gram = spectrum.eigenvectors.transpose() * &spectrum.eigenvectors;
    let ortho = (gram - DMatrix::identity(dim, dim)).amax();
    if ortho > 1e-10 {
        return Err(Error::Eigen(format!("eigenvectors not orthonormal ({ortho:.3e})")));
    }
    Ok(spectrum)
}

/// `λ_1 - λ_0`.
pub fn fundamental_gap(spec: &Spectrum) -> Result<f64> {
    if spec.dim() < 2 {
        return Err(Error::InvalidParameter("gap needs at least two eigenvalues".into()));
    }
    Ok(spec.eigenvalues[1] - spec.eigenvalues[0])
}

const NORM_TOL: f64 = 1e-8;

/// Squared overlap `|<a|b>|²` of two unit states.
pub fn overlap(a: &State, b: &State) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    for v in [a, b] {
        let n = v.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
    }
    Ok(a.dotc(b).norm_sqr().min(1.0))
}

/// Measured `|<u_{0,ℓ-1}|u_{0,ℓ}>|²` against `1 - (Cd / (π² L))²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Absolute slack allowed when comparing a measured overlap to a bound.
pub const OVERLAP_SLACK: f64 = 1e-12;

pub fn successive_overlap_bound(
    prev: &Spectrum,
    next: &Spectrum,
    c: f64,
    d: usize,
    stages: usize,
) -> Result<OverlapCheck> {
    let measured = overlap(&prev.ground_state(), &next.ground_state())?;
    let ratio = c * d as f64 / (std::f64::consts::PI.powi(2) * stages as f64);
    let bound = 1.0 - ratio * ratio;
    Ok(OverlapCheck {
        measured,
        bound,
        pass: measured >= bound - OVERLAP_SLACK,
    })
}

/// Continuum ground energy estimate from two grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEnergy {
    /// Richardson-extrapolated `E_0`.
    pub value: f64,
    /// `λ_0` at mesh `h`.
    pub coarse: f64,
    /// `λ_0` at mesh `h/2`.
    pub fine: f64,
    /// Set when `|value - fine|` exceeds 5% of the coarse gap.
    pub warning: bool,
}

/// Extrapolate `E_0` from `λ_0` at `n` and `2n+1` points per axis, assuming
/// an `O(h²)` leading discretization error.
pub fn reference_energy(grid: &GridSpec, pot: &PotentialSpec) -> Result<ReferenceEnergy> {
    if !pot.is_builtin() {
        return Err(Error::InvalidPotential(
            "reference energy needs an analytic potential to refine the grid".into(),
        ));
    }
    let coarse_spec = eigendecompose(&assemble_hamiltonian(grid, pot, 1.0)?)?;
    let fine_grid = GridSpec::new(grid.d(), 2 * grid.n() + 1)?;
    let fine_spec = eigendecompose(&assemble_hamiltonian(&fine_grid, pot, 1.0)?)?;
    let coarse = coarse_spec.eigenvalues[0];
    let fine = fine_spec.eigenvalues[0];
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let floor = grid.d() as f64 * std::f64::consts::PI.powi(2) / 2.0;
    // the extrapolation keeps an O(h^4) remainder, which may dip just below
    // the floor; anything further off means the eigensolves are wrong
    if extrapolated < floor - 0.01 * (fine - coarse).abs() {
        return Err(Error::Eigen(format!(
            "extrapolated energy {extrapolated} below the d π²/2 = {floor} floor"
        )));
    }
    let value = extrapolated.max(floor);
    let gap = if coarse_spec.dim() > 1 {
        coarse_spec.eigenvalues[1] - coarse
    } else {
        coarse
    };
    Ok(ReferenceEnergy {
        value,
        coarse,
        fine,
        warning: (value - fine).abs() > 0.05 * gap,
    })
}
