//! Phase estimation on `W = exp(-i M / R)` with a `q = b + t0` qubit top
//! register.
//!
//! An eigenvector with eigenvalue `λ` picks up `exp(-2πi φ)` per application
//! of `W`, `φ = λ / (2πR)`. The controlled powers are followed by the forward
//! Fourier transform, so outcome `m` has amplitude `conj(α(m, φ))` and the
//! energy estimate `2πR m / 2^q` grows with `λ`.
//!
//! Two backends share this convention. The exact backend works from the
//! eigendecomposition. The Trotter backend replaces `W^{2^j}` by product
//! formula unitaries `Ũ_j` and evaluates one outcome at a time through
//!
//! ```text
//! (1/2^q) Π_{j=q-1..0} (I + exp(2πi m 2^j / 2^q) Ũ_j) ψ
//! ```
//!
//! with the `j = 0` factor applied first.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::spectral::Spectrum;
use crate::suzuki::{PlannedPower, StageOperators, SuzukiPlan};
use crate::{Error, Result, State, C64};

/// Largest `q` for which a full outcome distribution is materialized.
pub const FULL_DISTRIBUTION_CAP_BITS: u32 = 14;
/// Largest `q` for a full sweep of Trotter outcome probabilities.
pub const TROTTER_SWEEP_CAP_BITS: u32 = 10;
/// Largest supported top register.
pub const MAX_TOP_QUBITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "exact-phase", alias = "exact")]
    Exact,
    #[serde(rename = "trotter")]
    Trotter,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Exact => write!(f, "exact-phase"),
            Backend::Trotter => write!(f, "trotter"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeConfig {
    pub b: u32,
    pub t0: u32,
    pub r: f64,
    pub backend: Backend,
}

impl PeConfig {
    pub fn new(b: u32, t0: u32, r: f64, backend: Backend) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidParameter("b must be positive".into()));
        }
        if b + t0 > MAX_TOP_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "b + t0 = {} exceeds {MAX_TOP_QUBITS} qubits",
                b + t0
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("R = {r} must be positive")));
        }
        Ok(PeConfig { b, t0, r, backend })
    }

    /// Top register size `b + t0`.
    pub fn q(&self) -> u32 {
        self.b + self.t0
    }

    /// Number of outcomes `2^q`.
    pub fn m2(&self) -> u64 {
        1u64 << self.q()
    }

    pub fn phi_estimate(&self, m: u64) -> f64 {
        m as f64 / self.m2() as f64
    }

    pub fn energy_estimate(&self, m: u64) -> f64 {
        2.0 * PI * self.r * self.phi_estimate(m)
    }

    /// `|φ0 - m/2^q| ≤ 2^{-b}` with wraparound.
    pub fn in_good_set(&self, phi0: f64, m: u64) -> bool {
        let m2 = self.m2() as f64;
        let offset = (phi0 * m2 - m as f64).rem_euclid(m2);
        offset.min(m2 - offset) <= (1u64 << self.t0) as f64
    }

    /// All outcomes in the good set, ascending.
    pub fn good_set(&self, phi0: f64) -> Vec<u64> {
        let m2 = self.m2() as i64;
        let centre = (phi0 * m2 as f64).floor() as i64;
        let radius = (1i64 << self.t0) + 1;
        let mut out: Vec<u64> = (centre - radius..=centre + radius)
            .map(|m| m.rem_euclid(m2) as u64)
            .filter(|&m| self.in_good_set(phi0, m))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Outcome closest to `φ0`; ties go to the smaller `m`.
    pub fn best_outcome(&self, phi0: f64) -> u64 {
        let x = phi0 * self.m2() as f64;
        let fl = x.floor();
        let m = if x - fl > 0.5 { fl + 1.0 } else { fl };
        (m as i64).rem_euclid(self.m2() as i64) as u64
    }
}

/// Distance between two phases on the unit circle, in `[0, 1/2]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn reduced_offset(m: u64, phi: f64, q: u32) -> f64 {
    let big_m = (1u64 << q) as f64;
    let delta = (phi - m as f64 / big_m).rem_euclid(1.0);
    if delta >= 0.5 {
        delta - 1.0
    } else {
        delta
    }
}

/// `α(m, φ) = 2^{-q} Σ_{k<2^q} exp(2πi k (φ - m/2^q))`.
pub fn alpha(m: u64, phi: f64, q: u32) -> C64 {
    let big_m = (1u64 << q) as f64;
    let delta = reduced_offset(m, phi, q);
    if delta == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let magnitude = (PI * big_m * delta).sin() / (big_m * (PI * delta).sin());
    C64::from_polar(magnitude, PI * (big_m - 1.0) * delta)
}

/// `|α(m, φ)|² = sin²(π 2^q Δ) / (2^{2q} sin²(πΔ))`.
pub fn alpha_sq(m: u64, phi: f64, q: u32) -> f64 {
    let big_m = (1u64 << q) as f64;
    let delta = reduced_offset(m, phi, q);
    if delta == 0.0 {
        return 1.0;
    }
    let num = (PI * big_m * delta).sin();
    let den = big_m * (PI * delta).sin();
    (num * num) / (den * den)
}

/// Eigenphases `λ_j / (2πR)`; all must lie in `[0, 1)`.
pub fn phases(spec: &Spectrum, r: f64) -> Result<Vec<f64>> {
    spec.eigenvalues
        .iter()
        .map(|lambda| {
            let phi = lambda / (2.0 * PI * r);
            if (0.0..1.0).contains(&phi) {
                Ok(phi)
            } else {
                Err(Error::PhaseRange(phi))
            }
        })
        .collect()
}

/// `|φ_j - φ_0| > 5 / 2^b` for every `j ≥ 1`.
pub fn phase_separation_holds(b: u32, phases: &[f64]) -> bool {
    let limit = 5.0 / (1u64 << b) as f64;
    phases.iter().skip(1).all(|&p| phase_distance(p, phases[0]) > limit)
}

/// `|α(m, φ_j)|² / |α(m, φ_0)|² ≤ π²/32` for every `j ≥ 1`.
pub fn ratio_condition(cfg: &PeConfig, m: u64, phases: &[f64]) -> bool {
    let q = cfg.q();
    let a0 = alpha_sq(m, phases[0], q);
    let limit = PI * PI / 32.0;
    phases.iter().skip(1).all(|&p| alpha_sq(m, p, q) <= limit * a0)
}

/// Good outcome that also meets the ratio condition.
pub fn qualifying_outcome(cfg: &PeConfig, m: u64, phases: &[f64]) -> bool {
    cfg.in_good_set(phases[0], m) && ratio_condition(cfg, m, phases)
}

/// `|c0|² (1 - 1/(2(2^{t0}-1)))`, the good-set probability floor.
pub fn good_set_probability_bound(c0_sq: f64, t0: u32) -> f64 {
    if t0 == 0 {
        return f64::NEG_INFINITY;
    }
    c0_sq * (1.0 - 1.0 / (2.0 * ((1u64 << t0) as f64 - 1.0)))
}

/// Probability floor for a good outcome that also meets the ratio
/// condition.
pub fn ratio_event_probability_bound(c0_sq: f64, t0: u32) -> f64 {
    good_set_probability_bound(c0_sq, t0)
        - (5.0 * PI * PI / 32.0 + (1.0 - PI * PI / 16.0) / 32.0) / (1u64 << t0) as f64
}

/// `p(m) = Σ_j w_j |α(m, φ_j)|²` with `w_j = |c_j|²`.
pub fn mixture_probability(weights: &[f64], phases: &[f64], m: u64, q: u32) -> f64 {
    weights
        .iter()
        .zip(phases)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, p)| w * alpha_sq(m, *p, q))
        .sum()
}

/// Squared spectral coefficients of a unit state.
pub fn spectral_weights(spec: &Spectrum, psi: &State) -> Result<(Vec<C64>, Vec<f64>)> {
    let coeffs = spec.coefficients(psi)?;
    let weights = coeffs.iter().map(|c| c.norm_sqr()).collect();
    Ok((coeffs, weights))
}

/// Full outcome distribution for the exact backend.
pub fn exact_distribution(cfg: &PeConfig, spec: &Spectrum, psi: &State) -> Result<Vec<f64>> {
    if cfg.q() > FULL_DISTRIBUTION_CAP_BITS {
        return Err(Error::OutcomeCap {
            q: cfg.q(),
            cap_bits: FULL_DISTRIBUTION_CAP_BITS,
        });
    }
    let ph = phases(spec, cfg.r)?;
    let (_, weights) = spectral_weights(spec, psi)?;
    Ok((0..cfg.m2())
        .map(|m| mixture_probability(&weights, &ph, m, cfg.q()))
        .collect())
}

/// Post-measurement state for the exact backend and `c0' = |<u0|ψ'>|`.
pub fn post_measurement_state_exact(cfg: &PeConfig, spec: &Spectrum, psi: &State, m: u64) -> Result<(State, f64)> {
    check_outcome(cfg, m)?;
    let ph = phases(spec, cfg.r)?;
    let coeffs = spec.coefficients(psi)?;
    let projected: Vec<C64> = coeffs
        .iter()
        .zip(&ph)
        .map(|(c, p)| c * alpha(m, *p, cfg.q()).conj())
        .collect();
    let norm_sq: f64 = projected.iter().map(|c| c.norm_sqr()).sum();
    if norm_sq <= 0.0 || !norm_sq.is_finite() {
        return Err(Error::ZeroProbability(m));
    }
    let norm = norm_sq.sqrt();
    let c0 = projected[0].norm() / norm;
    let scaled: Vec<C64> = projected.iter().map(|c| c / norm).collect();
    Ok((spec.synthesize(&scaled), c0.min(1.0)))
}

fn check_outcome(cfg: &PeConfig, m: u64) -> Result<()> {
    if m >= cfg.m2() {
        return Err(Error::InvalidParameter(format!(
            "outcome {m} outside [0, {})",
            cfg.m2()
        )));
    }
    Ok(())
}

/// Product-formula approximations of `W^{2^j}` for `j = 0..q`.
#[derive(Debug, Clone)]
pub struct TrotterPowers {
    pub unitaries: Vec<DMatrix<C64>>,
    /// `‖W^{2^j} - Ũ_j‖` per power.
    pub errors: Vec<f64>,
    pub plans: Vec<SuzukiPlan>,
}

impl TrotterPowers {
    pub fn from_planned(planned: Vec<PlannedPower>) -> Self {
        let mut out = TrotterPowers {
            unitaries: Vec::with_capacity(planned.len()),
            errors: Vec::with_capacity(planned.len()),
            plans: Vec::with_capacity(planned.len()),
        };
        for p in planned {
            out.unitaries.push(p.unitary);
            out.errors.push(p.error);
            out.plans.push(p.plan);
        }
        out
    }

    /// Exact powers `W^{2^j}`, for comparisons against the exact backend.
    pub fn exact(ops: &StageOperators, q: u32) -> Self {
        TrotterPowers {
            unitaries: (0..q).map(|j| ops.exact_power(j)).collect(),
            errors: vec![0.0; q as usize],
            plans: Vec::new(),
        }
    }

    pub fn q(&self) -> u32 {
        self.unitaries.len() as u32
    }

    /// `ε_H = Σ_j ‖W^{2^j} - Ũ_j‖`.
    pub fn eps_h(&self) -> f64 {
        self.errors.iter().sum()
    }

    pub fn exponentials(&self) -> u64 {
        self.plans.iter().map(|p| p.exponentials).sum()
    }
}

/// Unnormalized bottom register after outcome `m`; its squared norm is
/// the outcome probability.
pub fn trotter_outcome_vector(cfg: &PeConfig, powers: &TrotterPowers, psi: &State, m: u64) -> Result<State> {
    check_outcome(cfg, m)?;
    if powers.q() != cfg.q() {
        return Err(Error::InvalidParameter(format!(
            "{} controlled powers for a {}-qubit top register",
            powers.q(),
            cfg.q()
        )));
    }
    let dim = powers.unitaries.first().map_or(psi.len(), |u| u.nrows());
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: psi.len(),
        });
    }
    let m2 = cfg.m2() as u128;
    let mut v = psi.clone();
    for (j, u) in powers.unitaries.iter().enumerate() {
        let turns = ((m as u128) << j) % m2;
        let phase = C64::from_polar(0.5, 2.0 * PI * turns as f64 / m2 as f64);
        let rotated = u * &v;
        v = v * C64::new(0.5, 0.0) + rotated * phase;
    }
    Ok(v)
}

pub fn trotter_outcome_probability(cfg: &PeConfig, powers: &TrotterPowers, psi: &State, m: u64) -> Result<f64> {
    Ok(trotter_outcome_vector(cfg, powers, psi, m)?.norm_squared())
}

/// Full Trotter distribution, limited to small top registers.
pub fn trotter_distribution(cfg: &PeConfig, powers: &TrotterPowers, psi: &State) -> Result<Vec<f64>> {
    if cfg.q() > TROTTER_SWEEP_CAP_BITS {
        return Err(Error::OutcomeCap {
            q: cfg.q(),
            cap_bits: TROTTER_SWEEP_CAP_BITS,
        });
    }
    (0..cfg.m2())
        .map(|m| trotter_outcome_probability(cfg, powers, psi, m))
        .collect()
}

/// Post-measurement state for the Trotter backend and `c0' = |<u0|ψ'>|`.
pub fn post_measurement_state_trotter(
    cfg: &PeConfig,
    powers: &TrotterPowers,
    psi: &State,
    m: u64,
    u0: &State,
) -> Result<(State, f64)> {
    let v = trotter_outcome_vector(cfg, powers, psi, m)?;
    let norm = v.norm();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(Error::ZeroProbability(m));
    }
    let post = v / C64::new(norm, 0.0);
    let c0 = u0.dotc(&post).norm().min(1.0);
    Ok((post, c0))
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = probabilities.iter().sum();
    if probabilities.is_empty() || (total - 1.0).abs() > 1e-8 || probabilities.iter().any(|p| p.is_nan() || *p < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distribution sums to {total}, expected 1"
        )));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probabilities.iter().enumerate() {
        if *p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Draw `m` from `|α(m, φ)|²`, walking outward from the nearest grid point.
fn sample_kernel<R: Rng + ?Sized>(phi: f64, q: u32, rng: &mut R) -> u64 {
    let m2 = 1u64 << q;
    let start = ((phi * m2 as f64).floor() as i64).rem_euclid(m2 as i64);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = start as u64;
    for step in 0..m2 as i64 {
        // 0, +1, -1, +2, -2, ...
        let offset = if step % 2 == 1 { (step + 1) / 2 } else { -(step / 2) };
        let m = (start + offset).rem_euclid(m2 as i64) as u64;
        acc += alpha_sq(m, phi, q);
        last = m;
        if u < acc {
            break;
        }
    }
    last
}

/// Draw an outcome of the exact backend: first an eigencomponent by its
/// weight, then the outcome from that component's kernel.
pub fn sample_outcome<R: Rng + ?Sized>(cfg: &PeConfig, weights: &[f64], phases: &[f64], rng: &mut R) -> Result<u64> {
    let total: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let j = sample_index(&normalized, rng)?;
    Ok(sample_kernel(phases[j], cfg.q(), rng))
}

/// One phase estimation run.
#[derive(Debug, Clone)]
pub struct PeOutcome {
    pub m: u64,
    pub probability: f64,
    pub post_state: State,
    pub in_good_set: bool,
    /// Good outcome that also meets the ratio condition.
    pub qualifying: bool,
    pub phi_estimate: f64,
    pub energy_estimate: f64,
    pub c0_in: f64,
    pub c0_prime: f64,
    /// Probability mass on the good set under the active backend.
    pub good_set_probability: f64,
}

/// Sample an outcome and collapse the bottom register.
///
/// Outcomes are always drawn from the exact distribution; the Trotter
/// backend then supplies the outcome probability, good-set mass, and
/// post-measurement state from its product-formula powers.
pub fn measure<R: Rng + ?Sized>(
    cfg: &PeConfig,
    spec: &Spectrum,
    powers: Option<&TrotterPowers>,
    psi: &State,
    rng: &mut R,
) -> Result<PeOutcome> {
    let ph = phases(spec, cfg.r)?;
    let (coeffs, weights) = spectral_weights(spec, psi)?;
    let q = cfg.q();
    let m = sample_outcome(cfg, &weights, &ph, rng)?;
    let good = cfg.good_set(ph[0]);
    let (probability, good_set_probability, post_state, c0_prime) = match (cfg.backend, powers) {
        (Backend::Exact, _) => {
            let (post, c0p) = post_measurement_state_exact(cfg, spec, psi, m)?;
            let p = mixture_probability(&weights, &ph, m, q);
            let g = good.iter().map(|&g| mixture_probability(&weights, &ph, g, q)).sum();
            (p, g, post, c0p)
        }
        (Backend::Trotter, Some(powers)) => {
            let u0 = spec.ground_state();
            let v = trotter_outcome_vector(cfg, powers, psi, m)?;
            let p = v.norm_squared();
            if p <= 0.0 {
                return Err(Error::ZeroProbability(m));
            }
            let post = v / C64::new(p.sqrt(), 0.0);
            let c0p = u0.dotc(&post).norm().min(1.0);
            let mut g = 0.0;
            for &gm in &good {
                g += trotter_outcome_probability(cfg, powers, psi, gm)?;
            }
            (p, g, post, c0p)
        }
        (Backend::Trotter, None) => {
            return Err(Error::InvalidParameter(
                "Trotter backend needs controlled-power unitaries".into(),
            ))
        }
    };
    if probability <= 0.0 {
        return Err(Error::ZeroProbability(m));
    }
    Ok(PeOutcome {
        m,
        probability,
        post_state,
        in_good_set: cfg.in_good_set(ph[0], m),
        qualifying: qualifying_outcome(cfg, m, &ph),
        phi_estimate: cfg.phi_estimate(m),
        energy_estimate: cfg.energy_estimate(m),
        c0_in: coeffs[0].norm().min(1.0),
        c0_prime,
        good_set_probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_hamiltonian, GridSpec, PotentialSpec};
    use crate::spectral::eigendecompose;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn direct_alpha(m: u64, phi: f64, q: u32) -> C64 {
        let big_m = (1u64 << q) as f64;
        (0..1u64 << q)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 * (phi - m as f64 / big_m)))
            .sum::<C64>()
            / big_m
    }

    #[test]
    fn alpha_closed_form_matches_sum() {
        let v = alpha_sq(2, 0.3125, 3);
        let expected = (1.0 / 64.0) / (PI / 16.0).sin().powi(2);
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert_relative_eq!(v, 0.41054, epsilon = 1e-5);
        for (m, phi, q) in [(2u64, 0.3125, 3u32), (0, 0.97, 4), (13, 0.1234, 5), (5, 0.0, 3)] {
            let a = alpha(m, phi, q);
            let b = direct_alpha(m, phi, q);
            assert!((a - b).norm() < 1e-12, "{m} {phi} {q}: {a} vs {b}");
            assert_relative_eq!(alpha_sq(m, phi, q), b.norm_sqr(), epsilon = 1e-12);
        }
        assert_eq!(alpha(3, 3.0 / 8.0, 3), C64::new(1.0, 0.0));
    }

    #[test]
    fn alpha_sums_to_one() {
        for phi in [0.0, 0.1, 0.5, 0.777, 0.999] {
            let total: f64 = (0..64).map(|m| alpha_sq(m, phi, 6)).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn good_set_examples() {
        let cfg = PeConfig::new(3, 0, 1.0, Backend::Exact).unwrap();
        assert_eq!(cfg.good_set(0.25), vec![1, 2, 3]);
        let cfg = PeConfig::new(4, 2, 1.0, Backend::Exact).unwrap();
        for phi in [0.123, 0.5, 0.71, 0.4375] {
            let len = cfg.good_set(phi).len();
            assert!(len == 8 || len == 9, "{phi}: {len}");
        }
        let near_zero = cfg.good_set(0.002);
        assert!(near_zero.contains(&(cfg.m2() - 1)));
        assert!(near_zero.contains(&0));
    }

    #[test]
    fn best_outcome_ties_to_smaller() {
        let cfg = PeConfig::new(3, 0, 1.0, Backend::Exact).unwrap();
        assert_eq!(cfg.best_outcome(1.5 / 8.0), 1);
        assert_eq!(cfg.best_outcome(1.6 / 8.0), 2);
        assert_eq!(cfg.best_outcome(7.9 / 8.0), 0);
    }

    fn stage(n: usize, s: f64) -> (Spectrum, StageOperators, f64) {
        let g = GridSpec::new(1, n).unwrap();
        let ham = assemble_hamiltonian(&g, &PotentialSpec::quadratic(1, 8.0, 0.5), s).unwrap();
        let r = 3.0 * g.inv_h().powi(2);
        let spec = eigendecompose(&ham).unwrap();
        let ops = StageOperators::with_spectrum(&ham, r, spec.clone()).unwrap();
        (spec, ops, r)
    }

    #[test]
    fn ground_state_input_keeps_ground_state() {
        let (spec, _, r) = stage(7, 1.0);
        let cfg = PeConfig::new(6, 2, r, Backend::Exact).unwrap();
        let u0 = spec.ground_state();
        let dist = exact_distribution(&cfg, &spec, &u0).unwrap();
        assert_relative_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        let ph = phases(&spec, r).unwrap();
        let good: f64 = cfg.good_set(ph[0]).iter().map(|&m| dist[m as usize]).sum();
        assert!(good >= good_set_probability_bound(1.0, 2));
        let m = cfg.best_outcome(ph[0]);
        let (post, c0) = post_measurement_state_exact(&cfg, &spec, &u0, m).unwrap();
        assert_relative_eq!(c0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(post.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_component_mixture() {
        let (spec, _, r) = stage(7, 1.0);
        let cfg = PeConfig::new(5, 2, r, Backend::Exact).unwrap();
        let mut c = vec![C64::new(0.0, 0.0); 7];
        c[0] = C64::new(0.8f64.sqrt(), 0.0);
        c[1] = C64::new(0.0, 0.2f64.sqrt());
        let psi = spec.synthesize(&c);
        let ph = phases(&spec, r).unwrap();
        let dist = exact_distribution(&cfg, &spec, &psi).unwrap();
        for (m, p) in dist.iter().enumerate() {
            let expected = 0.8 * alpha_sq(m as u64, ph[0], 7) + 0.2 * alpha_sq(m as u64, ph[1], 7);
            assert_relative_eq!(*p, expected, epsilon = 1e-12);
        }
        let m = cfg.best_outcome(ph[0]);
        let (_, c0) = post_measurement_state_exact(&cfg, &spec, &psi, m).unwrap();
        let a0 = 0.8 * alpha_sq(m, ph[0], 7);
        let a1 = 0.2 * alpha_sq(m, ph[1], 7);
        assert_relative_eq!(c0 * c0, a0 / (a0 + a1), epsilon = 1e-12);
    }

    #[test]
    fn exact_powers_reproduce_exact_backend() {
        let (spec, ops, r) = stage(5, 0.6);
        let cfg = PeConfig::new(4, 2, r, Backend::Trotter).unwrap();
        let powers = TrotterPowers::exact(&ops, cfg.q());
        let psi = spec.synthesize(&[
            C64::new(0.7, 0.1),
            C64::new(0.3, -0.4),
            C64::new(0.0, 0.3),
            C64::new(0.2, 0.0),
            C64::new(-0.1, 0.2),
        ]);
        let psi = &psi / C64::new(psi.norm(), 0.0);
        let exact = exact_distribution(&cfg, &spec, &psi).unwrap();
        let trotter = trotter_distribution(&cfg, &powers, &psi).unwrap();
        for (a, b) in exact.iter().zip(&trotter) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_relative_eq!(trotter.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        let u0 = spec.ground_state();
        for m in [0u64, 3, 17, 40] {
            let (pe, ce) = post_measurement_state_exact(&cfg, &spec, &psi, m).unwrap();
            let (pt, ct) = post_measurement_state_trotter(&cfg, &powers, &psi, m, &u0).unwrap();
            assert!((ce - ct).abs() < 1e-10);
            // identical up to a global phase
            let phase = pt.dotc(&pe);
            assert!((phase.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_seeded_and_matches_distribution() {
        let uniform = [0.25; 4];
        let draw = |seed| sample_index(&uniform, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(draw(7), draw(7));
        let point = [0.0, 0.0, 1.0];
        for seed in 0..10 {
            assert_eq!(sample_index(&point, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap(), 2);
        }
        assert!(sample_index(&[0.5, 0.4], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn kernel_sampler_matches_alpha() {
        let q = 5;
        let phi = 0.3217;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = [0u32; 32];
        for _ in 0..draws {
            counts[sample_kernel(phi, q, &mut rng) as usize] += 1;
        }
        for (m, c) in counts.iter().enumerate() {
            let p = alpha_sq(m as u64, phi, q);
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            let f = *c as f64 / draws as f64;
            assert!((f - p).abs() <= 4.0 * sigma + 1e-4, "m={m} f={f} p={p}");
        }
    }

    #[test]
    fn phase_range_enforced() {
        let (spec, _, _) = stage(5, 1.0);
        assert!(matches!(phases(&spec, 0.1), Err(Error::PhaseRange(_))));
    }

    #[test]
    fn trotter_dimension_checks() {
        let (_, ops, r) = stage(5, 1.0);
        let cfg = PeConfig::new(4, 2, r, Backend::Trotter).unwrap();
        let short = TrotterPowers::exact(&ops, 3);
        let psi = State::from_element(5, C64::new(1.0 / 5f64.sqrt(), 0.0));
        assert!(trotter_outcome_vector(&cfg, &short, &psi, 0).is_err());
        let powers = TrotterPowers::exact(&ops, 6);
        let wrong = State::from_element(4, C64::new(0.5, 0.0));
        assert!(trotter_outcome_vector(&cfg, &powers, &wrong, 0).is_err());
        assert!(trotter_outcome_vector(&cfg, &powers, &psi, 64).is_err());
    }
}
