//! Suzuki product formulas for `W^{2^j} = exp(-i M 2^j / R)`.
//!
//! `M/R` splits into a kinetic part `A = -Δ_h/(2R)` and a potential part
//! `B = s V_h / R`. A plan is one base interval of the order-`2k+1`
//! formula `S_{2k}` repeated `K` times over the total time `2^j`. Adjacent
//! kinetic factors at interval boundaries are merged, so a plan with pattern
//! length `P` holds `K (P-1) + 1` exponentials, always starting and ending
//! with a kinetic factor.
//!
//! Kinetic exponentials are applied in the product sine basis, where `A` is
//! diagonal; potential exponentials are diagonal phases on the grid.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grid::{axis_eigenvalue, sine_basis, GridSpec, HamiltonianTerms};
use crate::spectral::{eigendecompose, Spectrum};
use crate::{Error, Result, State, C64};

/// Which term a factor exponentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Kinetic,
    Potential,
}

/// One factor `exp(-i X coeff)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub op: Operator,
    pub coeff: f64,
}

/// Fractal coefficient `p_k = 1 / (4 - 4^{1/(2k-1)})`.
pub fn suzuki_p(k: u32) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * k as f64 - 1.0)))
}

/// Merged pattern of `S_{2k}(A, B, Δt = 1)`.
///
/// `k = 1` gives `(A: 1/2, B: 1, A: 1/2)`. Higher orders use
/// `S_{2k}(Δt) = S_{2k-2}(p_k Δt)² S_{2k-2}((1-4p_k) Δt) S_{2k-2}(p_k Δt)²`.
pub fn suzuki_coefficients(k: u32) -> Result<Vec<Step>> {
    if k == 0 {
        return Err(Error::InvalidParameter("Suzuki order index k must be >= 1".into()));
    }
    if k > 8 {
        return Err(Error::InvalidParameter(format!(
            "Suzuki order index k = {k} has more than 5^7 potential factors per interval"
        )));
    }
    let mut raw = Vec::new();
    unfold(k, 1.0, &mut raw);
    let mut merged: Vec<Step> = Vec::with_capacity(raw.len());
    for step in raw {
        match merged.last_mut() {
            Some(last) if last.op == step.op => last.coeff += step.coeff,
            _ => merged.push(step),
        }
    }
    Ok(merged)
}

fn unfold(k: u32, dt: f64, out: &mut Vec<Step>) {
    if k == 1 {
        out.push(Step { op: Operator::Kinetic, coeff: dt / 2.0 });
        out.push(Step { op: Operator::Potential, coeff: dt });
        out.push(Step { op: Operator::Kinetic, coeff: dt / 2.0 });
        return;
    }
    let p = suzuki_p(k);
    unfold(k - 1, p * dt, out);
    unfold(k - 1, p * dt, out);
    unfold(k - 1, (1.0 - 4.0 * p) * dt, out);
    unfold(k - 1, p * dt, out);
    unfold(k - 1, p * dt, out);
}

/// Exponential sequence approximating `W^{2^j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuzukiPlan {
    pub k: u32,
    pub j: u32,
    /// Stage fraction `ℓ/L` of the Hamiltonian the plan was built for.
    pub s: f64,
    pub eps_target: f64,
    /// `K`, the number of base intervals. Zero means the empty plan.
    pub subdivisions: u64,
    /// `N`, the number of exponentials after merging.
    pub exponentials: u64,
    /// One base interval for `Δt = 1`; scaled by `2^j / K` when applied.
    pub pattern: Vec<Step>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_error: Option<f64>,
}

impl SuzukiPlan {
    /// Plan with a fixed subdivision count.
    pub fn with_subdivisions(k: u32, j: u32, s: f64, eps_target: f64, subdivisions: u64) -> Result<Self> {
        let pattern = suzuki_coefficients(k)?;
        let exponentials = exponential_count(pattern.len(), subdivisions);
        Ok(SuzukiPlan {
            k,
            j,
            s,
            eps_target,
            subdivisions,
            exponentials,
            pattern,
            measured_error: None,
        })
    }

    /// The plan with no factors; realizes the identity.
    pub fn empty(k: u32, j: u32) -> Self {
        SuzukiPlan {
            k,
            j,
            s: 0.0,
            eps_target: f64::INFINITY,
            subdivisions: 0,
            exponentials: 0,
            pattern: Vec::new(),
            measured_error: None,
        }
    }

    /// Total evolution time `2^j`.
    pub fn total_time(&self) -> f64 {
        (2f64).powi(self.j as i32)
    }

    /// Potential factors in the merged sequence.
    pub fn potential_count(&self) -> u64 {
        let per = self
            .pattern
            .iter()
            .filter(|s| s.op == Operator::Potential)
            .count() as u64;
        per * self.subdivisions
    }

    pub fn kinetic_count(&self) -> u64 {
        self.exponentials - self.potential_count()
    }

    /// Merged factors in application order with absolute time coefficients.
    pub fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        let reps = self.subdivisions;
        let p = self.pattern.len() as u64;
        let dt = if reps == 0 { 0.0 } else { self.total_time() / reps as f64 };
        (0..self.exponentials).map(move |idx| {
            if idx == 0 {
                let s = self.pattern[0];
                return Step { op: s.op, coeff: s.coeff * dt };
            }
            let rep = (idx - 1) / (p - 1);
            let offset = ((idx - 1) % (p - 1) + 1) as usize;
            let s = self.pattern[offset];
            if offset as u64 == p - 1 && rep + 1 < reps {
                let coeff = (s.coeff + self.pattern[0].coeff) * dt;
                Step { op: s.op, coeff }
            } else {
                Step { op: s.op, coeff: s.coeff * dt }
            }
        })
    }

    /// JSON audit dump.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate a plan dump.
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: SuzukiPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Structural invariants: pattern alternates starting and ending with a
    /// kinetic factor, per-operator coefficients sum to one, and the recorded
    /// count matches the pattern.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("invalid plan: {m}")));
        if self.subdivisions == 0 {
            if self.exponentials != 0 {
                return bad("empty plan with nonzero exponential count".into());
            }
            return Ok(());
        }
        if self.k == 0 || self.j > 62 {
            return bad(format!("k = {}, j = {}", self.k, self.j));
        }
        let p = self.pattern.len();
        if p < 3 || p.is_multiple_of(2) {
            return bad(format!("pattern length {p}"));
        }
        for (i, s) in self.pattern.iter().enumerate() {
            let expected = if i % 2 == 0 { Operator::Kinetic } else { Operator::Potential };
            if s.op != expected || !s.coeff.is_finite() {
                return bad(format!("pattern entry {i}"));
            }
        }
        for op in [Operator::Kinetic, Operator::Potential] {
            let sum: f64 = self.pattern.iter().filter(|s| s.op == op).map(|s| s.coeff).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("{op:?} coefficients sum to {sum}"));
            }
        }
        let expected = self
            .subdivisions
            .checked_mul(p as u64 - 1)
            .and_then(|v| v.checked_add(1));
        if expected != Some(self.exponentials) {
            return bad(format!("exponential count {}", self.exponentials));
        }
        Ok(())
    }
}

fn exponential_count(pattern_len: usize, subdivisions: u64) -> u64 {
    if subdivisions == 0 {
        0
    } else {
        subdivisions.saturating_mul(pattern_len as u64 - 1).saturating_add(1)
    }
}

/// Split operators of one stage: kinetic eigenvalues in the sine basis,
/// potential diagonal, and the exact spectrum of `M`.
#[derive(Debug)]
pub struct StageOperators {
    grid: GridSpec,
    r: f64,
    s: f64,
    sine: DMatrix<f64>,
    /// Eigenvalues of `A = -Δ_h/(2R)` in product sine order.
    kinetic: Vec<f64>,
    /// Diagonal of `B = s V_h / R`.
    potential: Vec<f64>,
    spectrum: Spectrum,
    basis: OnceLock<DMatrix<f64>>,
}

impl StageOperators {
    pub fn new(ham: &HamiltonianTerms, r: f64) -> Result<Self> {
        let spectrum = eigendecompose(ham)?;
        Self::with_spectrum(ham, r, spectrum)
    }

    pub fn with_spectrum(ham: &HamiltonianTerms, r: f64, spectrum: Spectrum) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("R = {r} must be positive")));
        }
        let grid = ham.grid;
        if spectrum.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: spectrum.dim(),
            });
        }
        let h = grid.h();
        let axis: Vec<f64> = (1..=grid.n()).map(|k| axis_eigenvalue(h, k)).collect();
        let kinetic = (0..grid.dim())
            .map(|flat| {
                grid.multi_index(flat)
                    .iter()
                    .map(|&k| axis[k - 1])
                    .sum::<f64>()
                    / r
            })
            .collect();
        let potential = ham.scaled_potential().into_iter().map(|v| v / r).collect();
        Ok(StageOperators {
            grid,
            r,
            s: ham.s,
            sine: sine_basis(&grid),
            kinetic,
            potential,
            spectrum,
            basis: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Apply the `d`-fold tensor product of the 1-D sine transform in place.
    fn sine_transform(&self, state: &mut [C64]) {
        let n = self.grid.n();
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..self.grid.d() {
            let stride = self.grid.stride(axis);
            for start in 0..state.len() {
                if !(start / stride).is_multiple_of(n) {
                    continue;
                }
                for (i, l) in line.iter_mut().enumerate() {
                    *l = state[start + i * stride];
                }
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, l) in line.iter().enumerate() {
                        acc += *l * self.sine[(i, k)];
                    }
                    state[start + i * stride] = acc;
                }
            }
        }
    }

    /// `ψ ← exp(-i A τ) ψ`.
    pub fn apply_kinetic(&self, tau: f64, state: &mut [C64]) {
        self.sine_transform(state);
        for (x, mu) in state.iter_mut().zip(&self.kinetic) {
            *x *= C64::from_polar(1.0, -mu * tau);
        }
        self.sine_transform(state);
    }

    /// `ψ ← exp(-i B τ) ψ`.
    pub fn apply_potential(&self, tau: f64, state: &mut [C64]) {
        for (x, v) in state.iter_mut().zip(&self.potential) {
            *x *= C64::from_polar(1.0, -v * tau);
        }
    }

    fn product_basis(&self) -> &DMatrix<f64> {
        self.basis.get_or_init(|| {
            let dim = self.dim();
            DMatrix::from_fn(dim, dim, |row, col| {
                let xi = self.grid.multi_index(row);
                let ki = self.grid.multi_index(col);
                xi.iter()
                    .zip(&ki)
                    .map(|(&x, &k)| self.sine[(x - 1, k - 1)])
                    .product()
            })
        })
    }

    /// Dense `exp(-i A τ)`.
    pub fn kinetic_exp(&self, tau: f64) -> DMatrix<C64> {
        let q = self.product_basis();
        let phases: Vec<C64> = self.kinetic.iter().map(|mu| C64::from_polar(1.0, -mu * tau)).collect();
        conjugate_diagonal(q, &phases)
    }

    /// Dense `exp(-i M t / R)` from the exact spectrum, `t = 2^j`.
    pub fn exact_power(&self, j: u32) -> DMatrix<C64> {
        let t = (2f64).powi(j as i32);
        let phases: Vec<C64> = self
            .spectrum
            .eigenvalues
            .iter()
            .map(|lambda| {
                let angle = (lambda / self.r * t).rem_euclid(std::f64::consts::TAU);
                C64::from_polar(1.0, -angle)
            })
            .collect();
        conjugate_diagonal(&self.spectrum.eigenvectors, &phases)
    }

    /// Dense matrix of one base interval of length `dt`.
    fn base_block(&self, pattern: &[Step], dt: f64) -> DMatrix<C64> {
        let dim = self.dim();
        let mut acc = DMatrix::<C64>::identity(dim, dim);
        for step in pattern {
            let tau = step.coeff * dt;
            match step.op {
                Operator::Kinetic => acc = self.kinetic_exp(tau) * acc,
                Operator::Potential => {
                    for (mut row, v) in acc.row_iter_mut().zip(&self.potential) {
                        row *= C64::from_polar(1.0, -v * tau);
                    }
                }
            }
        }
        acc
    }

    /// Dense unitary realized by a plan, via repeated squaring of the base
    /// interval.
    pub fn realize(&self, plan: &SuzukiPlan) -> DMatrix<C64> {
        let dim = self.dim();
        if plan.subdivisions == 0 {
            return DMatrix::identity(dim, dim);
        }
        let dt = plan.total_time() / plan.subdivisions as f64;
        let base = self.base_block(&plan.pattern, dt);
        matrix_power(base, plan.subdivisions)
    }
}

/// `Q diag(phases) Q^T` for a real orthogonal `Q`.
fn conjugate_diagonal(q: &DMatrix<f64>, phases: &[C64]) -> DMatrix<C64> {
    let dim = q.nrows();
    let qc = q.map(|x| C64::new(x, 0.0));
    let mut scaled = qc.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases) {
        col *= *p;
    }
    let _ = dim;
    scaled * qc.transpose()
}

fn matrix_power(mut base: DMatrix<C64>, mut exp: u64) -> DMatrix<C64> {
    let dim = base.nrows();
    let mut acc: Option<DMatrix<C64>> = None;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => &base * a,
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    acc.unwrap_or_else(|| DMatrix::identity(dim, dim))
}

/// Largest singular value. Exact SVD up to dimension 512, power iteration on
/// `D^H D` above that.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.nrows() <= 512 {
        return m.clone().singular_values().max();
    }
    power_iteration_norm(m, 1e-10, 10_000)
}

pub(crate) fn power_iteration_norm(m: &DMatrix<C64>, tol: f64, max_iter: usize) -> f64 {
    let gram = m.adjoint() * m;
    let n = gram.nrows();
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64 * 0.618).fract(), 0.0));
    v /= C64::new(v.norm(), 0.0);
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = &gram * &v;
        let rayleigh = v.dotc(&w).re;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        let residual = (&w - &v * C64::new(rayleigh, 0.0)).norm();
        v = w / C64::new(wn, 0.0);
        estimate = rayleigh.max(0.0);
        if residual <= tol * wn {
            break;
        }
    }
    estimate.sqrt()
}

/// `‖W^{2^j} - Ũ_{2^j}‖₂` for a plan.
pub fn measured_error(plan: &SuzukiPlan, ops: &StageOperators) -> f64 {
    spectral_norm(&(ops.realize(plan) - ops.exact_power(plan.j)))
}

/// `ψ` after the plan's factors, applied one by one.
pub fn apply_plan(plan: &SuzukiPlan, ops: &StageOperators, state: &State) -> Result<State> {
    if state.len() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            got: state.len(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    let mut out = state.clone();
    for step in plan.steps() {
        match step.op {
            Operator::Kinetic => ops.apply_kinetic(step.coeff, out.as_mut_slice()),
            Operator::Potential => ops.apply_potential(step.coeff, out.as_mut_slice()),
        }
    }
    Ok(out)
}

/// Limits on plan construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    /// Largest `N` a single plan may use.
    pub max_exponentials: u64,
}

pub const DEFAULT_MAX_EXPONENTIALS: u64 = 1_000_000;

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            max_exponentials: DEFAULT_MAX_EXPONENTIALS,
        }
    }
}

/// A plan together with its realized unitary.
#[derive(Debug, Clone)]
pub struct PlannedPower {
    pub plan: SuzukiPlan,
    pub unitary: DMatrix<C64>,
    pub error: f64,
}

/// Smallest subdivision count whose measured error meets `eps_target`.
///
/// Doubles `K` until the target is met, then bisects between the last
/// failing and first passing counts. The error is not strictly monotone in
/// `K`, so the result is the smallest passing count on the bisection path.
pub fn plan(k: u32, j: u32, ops: &StageOperators, eps_target: f64, opts: &PlanOptions) -> Result<PlannedPower> {
    if !(eps_target.is_finite() && eps_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "error target {eps_target} must be positive"
        )));
    }
    if j > 62 {
        return Err(Error::InvalidParameter(format!("power index j = {j} too large")));
    }
    let pattern = suzuki_coefficients(k)?;
    let exact = ops.exact_power(j);
    let t = (2f64).powi(j as i32);
    let evaluate = |reps: u64| {
        let base = ops.base_block(&pattern, t / reps as f64);
        let unitary = matrix_power(base, reps);
        let error = spectral_norm(&(&unitary - &exact));
        (unitary, error)
    };

    let mut reps = 1u64;
    let mut failing = 0u64;
    let (mut unitary, mut error) = evaluate(reps);
    while error > eps_target {
        failing = reps;
        reps = reps.saturating_mul(2);
        if exponential_count(pattern.len(), reps) > opts.max_exponentials {
            return Err(Error::Unreachable(format!(
                "W^(2^{j}) at s = {} needs more than {} exponentials for error {eps_target:.3e} \
                 (error {error:.3e} at K = {failing})",
                ops.s(),
                opts.max_exponentials
            )));
        }
        (unitary, error) = evaluate(reps);
    }
    let mut passing = reps;
    while passing - failing > 1 && failing > 0 {
        let mid = failing + (passing - failing) / 2;
        let (u, e) = evaluate(mid);
        if e <= eps_target {
            passing = mid;
            unitary = u;
            error = e;
        } else {
            failing = mid;
        }
    }
    let mut plan = SuzukiPlan::with_subdivisions(k, j, ops.s(), eps_target, passing)?;
    plan.measured_error = Some(error);
    Ok(PlannedPower { plan, unitary, error })
}

/// Upper bound on the exponentials needed for `W^{2^j}`:
///
/// `2·5·5^{k-1} ‖-Δ_h/R‖ 2^j (4e·2·2^j ‖sV/R‖ / ε)^{1/(2k)} (4e·2/3)(5/3)^{k-1}`,
///
/// with `‖-Δ_h‖ = 4 d h⁻² cos²(πh/2)` and `‖sV/R‖ ≤ sC/R`. The result is
/// never below the length of one merged base interval.
#[allow(clippy::too_many_arguments)]
pub fn exponential_count_bound(k: u32, j: u32, s: f64, d: usize, c: f64, h: f64, eps_s: f64, r: f64) -> u64 {
    let raw = exponential_count_bound_raw(k, j, s, d, c, h, eps_s, r);
    let floor = 2 * 5u64.pow(k.saturating_sub(1)) + 1;
    if raw >= u64::MAX as f64 {
        return u64::MAX;
    }
    (raw.ceil() as u64).max(floor)
}

/// The bound before rounding and flooring.
#[allow(clippy::too_many_arguments)]
pub fn exponential_count_bound_raw(k: u32, j: u32, s: f64, d: usize, c: f64, h: f64, eps_s: f64, r: f64) -> f64 {
    let e = std::f64::consts::E;
    let kf = k as f64;
    let laplacian_norm = 4.0 * d as f64 * (std::f64::consts::PI * h / 2.0).cos().powi(2) / (h * h) / r;
    let potential_norm = s * c / r;
    let t = (2f64).powi(j as i32);
    2.0 * 5.0
        * 5f64.powi(k as i32 - 1)
        * laplacian_norm
        * t
        * (4.0 * e * 2.0 * t * potential_norm / eps_s).powf(1.0 / (2.0 * kf))
        * (4.0 * e * 2.0 / 3.0)
        * (5.0f64 / 3.0).powi(k as i32 - 1)
}

/// `c(k) = (80e/3) (25/3)^{k-1} (8e/3)^{1/(2k)} (24π)^{1 + 1/(2k)}`.
pub fn c_of_k(k: u32) -> f64 {
    let e = std::f64::consts::E;
    let inv = 1.0 / (2.0 * k as f64);
    80.0 * e / 3.0
        * (25.0f64 / 3.0).powi(k as i32 - 1)
        * (8.0 * e / 3.0).powf(inv)
        * (24.0 * std::f64::consts::PI).powf(1.0 + inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_hamiltonian, PotentialSpec};
    use approx::assert_relative_eq;

    fn ops(n: usize, s: f64) -> StageOperators {
        let g = GridSpec::new(1, n).unwrap();
        let ham = assemble_hamiltonian(&g, &PotentialSpec::quadratic(1, 8.0, 0.5), s).unwrap();
        StageOperators::new(&ham, 3.0 * g.inv_h().powi(2)).unwrap()
    }

    #[test]
    fn second_order_pattern() {
        let p = suzuki_coefficients(1).unwrap();
        assert_eq!(
            p,
            vec![
                Step { op: Operator::Kinetic, coeff: 0.5 },
                Step { op: Operator::Potential, coeff: 1.0 },
                Step { op: Operator::Kinetic, coeff: 0.5 },
            ]
        );
    }

    #[test]
    fn fourth_order_pattern() {
        assert_relative_eq!(suzuki_p(2), 0.4144907, epsilon = 1e-7);
        let p = suzuki_coefficients(2).unwrap();
        assert_eq!(p.len(), 11);
        for k in 1..=4 {
            let p = suzuki_coefficients(k).unwrap();
            assert_eq!(p.len() as u64, 2 * 5u64.pow(k - 1) + 1);
            for op in [Operator::Kinetic, Operator::Potential] {
                let sum: f64 = p.iter().filter(|s| s.op == op).map(|s| s.coeff).sum();
                assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
            }
        }
        assert!(suzuki_coefficients(0).is_err());
    }

    #[test]
    fn merged_steps_alternate_and_sum() {
        let plan = SuzukiPlan::with_subdivisions(2, 3, 1.0, 1e-3, 5).unwrap();
        let steps: Vec<Step> = plan.steps().collect();
        assert_eq!(steps.len() as u64, plan.exponentials);
        assert_eq!(plan.exponentials, 5 * 10 + 1);
        assert_eq!(plan.exponentials % 2, 1);
        for (i, s) in steps.iter().enumerate() {
            let expected = if i % 2 == 0 { Operator::Kinetic } else { Operator::Potential };
            assert_eq!(s.op, expected);
        }
        for op in [Operator::Kinetic, Operator::Potential] {
            let sum: f64 = steps.iter().filter(|s| s.op == op).map(|s| s.coeff).sum();
            assert_relative_eq!(sum, 8.0, epsilon = 1e-12);
        }
        assert_eq!(plan.potential_count(), 25);
        assert_eq!(plan.kinetic_count(), 26);
    }

    #[test]
    fn empty_plan_is_identity() {
        let o = ops(5, 1.0);
        let plan = SuzukiPlan::empty(1, 0);
        let psi = o.spectrum().eigenvector(2);
        let out = apply_plan(&plan, &o, &psi).unwrap();
        assert_eq!(out, psi);
        assert_eq!(o.realize(&plan), DMatrix::identity(5, 5));
    }

    #[test]
    fn zero_stage_is_exact() {
        let o = ops(7, 0.0);
        let planned = plan(1, 4, &o, 1e-12, &PlanOptions::default()).unwrap();
        assert_eq!(planned.plan.subdivisions, 1);
        assert!(planned.error < 1e-13);

        // the kinetic factor alone is e^{+i Δ_h t / (2R)}
        let psi = o.spectrum().eigenvector(1);
        let out = apply_plan(&planned.plan, &o, &psi).unwrap();
        let lambda = o.spectrum().eigenvalues[1];
        let expected = &psi * C64::from_polar(1.0, -lambda * 16.0 / o.r());
        assert!((out - expected).norm() < 1e-12);
    }

    #[test]
    fn apply_matches_dense_product() {
        let g = GridSpec::new(2, 4).unwrap();
        let pot = PotentialSpec::RadialQuadratic {
            strength: 5.0,
            center: vec![0.4, 0.55],
        };
        let ham = assemble_hamiltonian(&g, &pot, 0.75).unwrap();
        let o = StageOperators::new(&ham, 3.0 * 2.0 * 25.0).unwrap();
        for k in [1, 2] {
            let plan = SuzukiPlan::with_subdivisions(k, 2, 0.75, 1.0, 3).unwrap();
            let dense = o.realize(&plan);
            let psi = DVector::from_fn(16, |i, _| C64::new((i as f64).cos(), (i as f64 * 0.3).sin()));
            let psi = &psi / C64::new(psi.norm(), 0.0);
            let a = apply_plan(&plan, &o, &psi).unwrap();
            let b = &dense * &psi;
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn planned_error_meets_target() {
        let o = ops(7, 1.0);
        let planned = plan(1, 0, &o, 1e-4, &PlanOptions::default()).unwrap();
        assert!(planned.error <= 1e-4);
        assert_eq!(planned.plan.exponentials % 2, 1);
        assert_relative_eq!(measured_error(&planned.plan, &o), planned.error, epsilon = 1e-12);
    }

    #[test]
    fn doubling_reduces_second_order_error_fourfold() {
        let o = ops(7, 1.0);
        let e1 = measured_error(&SuzukiPlan::with_subdivisions(1, 0, 1.0, 1.0, 1).unwrap(), &o);
        let e2 = measured_error(&SuzukiPlan::with_subdivisions(1, 0, 1.0, 1.0, 2).unwrap(), &o);
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let o = ops(7, 1.0);
        let opts = PlanOptions { max_exponentials: 50 };
        assert!(matches!(plan(1, 10, &o, 1e-9, &opts), Err(Error::Unreachable(_))));
        assert!(plan(1, 0, &o, 0.0, &opts).is_err());
    }

    #[test]
    fn plan_json_round_trip_and_validation() {
        let plan = SuzukiPlan::with_subdivisions(2, 4, 0.5, 1e-3, 7).unwrap();
        let text = plan.to_json().unwrap();
        let back = SuzukiPlan::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back, plan);
        let mut broken = plan.clone();
        broken.exponentials += 1;
        assert!(SuzukiPlan::from_json(&broken.to_json().unwrap()).is_err());
        assert!(SuzukiPlan::from_json("{\"k\":1}").is_err());
    }

    #[test]
    fn c_of_k_values() {
        let e = std::f64::consts::E;
        let pi = std::f64::consts::PI;
        let k1 = (80.0 * e / 3.0) * (8.0 * e / 3.0).sqrt() * (24.0 * pi).powf(1.5);
        assert_relative_eq!(c_of_k(1), k1, max_relative = 1e-14);
        assert!((c_of_k(1) - 1.28e5).abs() / 1.28e5 < 0.01);
        let ratio = (25.0 / 3.0) * (8.0 * e / 3.0).powf(0.25 - 0.5) * (24.0 * pi).powf(0.25 - 0.5);
        assert_relative_eq!(c_of_k(2) / c_of_k(1), ratio, max_relative = 1e-13);
        let big = c_of_k(12) / c_of_k(11);
        assert!((big / (25.0 / 3.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn count_bound_positive_at_zero_stage() {
        let b = exponential_count_bound(1, 0, 0.0, 1, 2.0, 0.125, 1e-6, 192.0);
        assert_eq!(b, 3);
        let b2 = exponential_count_bound(2, 3, 0.0, 1, 2.0, 0.125, 1e-6, 192.0);
        assert_eq!(b2, 11);
    }

    #[test]
    fn spectral_norm_paths_agree() {
        let m = DMatrix::from_fn(20, 20, |i, j| C64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, (i as f64 - j as f64) * 0.1));
        let svd = spectral_norm(&m);
        let pi = power_iteration_norm(&m, 1e-13, 100_000);
        assert_relative_eq!(svd, pi, max_relative = 1e-8);
    }
}
