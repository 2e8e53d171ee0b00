//! Phase estimation checked against a literal circuit simulation: Hadamards
//! on the top register, controlled powers, forward Fourier transform.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpe_core::grid::{assemble_hamiltonian, GridSpec, PotentialSpec};
use rpe_core::phase::{self, Backend, PeConfig, TrotterPowers};
use rpe_core::suzuki::{self, PlanOptions, StageOperators};
use rpe_core::{State, C64};

/// Bottom-register blocks `(1/2^q) Σ_k e^{2πi k m/2^q} U^{(k)} ψ` for every
/// `m`, where `U^{(k)}` applies `powers[j]` for each set bit `j` of `k`.
fn circuit(powers: &[DMatrix<C64>], psi: &State) -> Vec<State> {
    let q = powers.len();
    let big = 1usize << q;
    // after Hadamards and controlled powers: block k holds U^{(k)} ψ / 2^{q/2}
    let mut blocks: Vec<State> = Vec::with_capacity(big);
    for k in 0..big {
        let mut v = psi.clone();
        for (j, u) in powers.iter().enumerate() {
            if k >> j & 1 == 1 {
                v = u * v;
            }
        }
        blocks.push(v / C64::new((big as f64).sqrt(), 0.0));
    }
    // forward QFT: |k> -> 2^{-q/2} Σ_m e^{+2πi k m / 2^q} |m>
    (0..big)
        .map(|m| {
            let mut acc = State::zeros(psi.len());
            for (k, b) in blocks.iter().enumerate() {
                let turns = ((k * m) % big) as f64 / big as f64;
                acc += b * C64::from_polar(1.0 / (big as f64).sqrt(), 2.0 * PI * turns);
            }
            acc
        })
        .collect()
}

struct Setup {
    cfg: PeConfig,
    ops: StageOperators,
    exact_powers: Vec<DMatrix<C64>>,
}

fn setup(b: u32, t0: u32) -> Setup {
    let g = GridSpec::new(1, 7).unwrap();
    let ham = assemble_hamiltonian(&g, &PotentialSpec::quadratic(1, 8.0, 0.5), 1.0).unwrap();
    let r = 3.0 * g.inv_h().powi(2);
    let ops = StageOperators::new(&ham, r).unwrap();
    let cfg = PeConfig::new(b, t0, r, Backend::Exact).unwrap();
    let exact_powers = (0..cfg.q()).map(|j| ops.exact_power(j)).collect();
    Setup { cfg, ops, exact_powers }
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> State {
    let v = State::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

#[test]
fn exact_distribution_matches_circuit() {
    let s = setup(6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi = random_state(s.ops.dim(), &mut rng);
    let blocks = circuit(&s.exact_powers, &psi);
    let dist = phase::exact_distribution(&s.cfg, s.ops.spectrum(), &psi).unwrap();
    let total: f64 = blocks.iter().map(|b| b.norm_squared()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (m, block) in blocks.iter().enumerate() {
        assert!((block.norm_squared() - dist[m]).abs() < 1e-12, "m={m}");
    }
}

#[test]
fn eigenvector_peaks_at_its_energy() {
    let s = setup(6, 2);
    let spec = s.ops.spectrum();
    let u0 = spec.ground_state();
    let blocks = circuit(&s.exact_powers, &u0);
    let (m_peak, _) = blocks
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_squared().total_cmp(&b.1.norm_squared()))
        .unwrap();
    let lambda0 = spec.eigenvalues[0];
    let estimate = s.cfg.energy_estimate(m_peak as u64);
    let resolution = 2.0 * PI * s.cfg.r / s.cfg.m2() as f64;
    assert!((estimate - lambda0).abs() <= resolution, "{estimate} vs {lambda0}");
    // amplitude is conj(α(m, φ0)) times u0
    let phi0 = lambda0 / (2.0 * PI * s.cfg.r);
    for m in [m_peak as u64, 0, 17] {
        let amp = u0.dotc(&blocks[m as usize]);
        let expected = phase::alpha(m, phi0, s.cfg.q()).conj();
        assert!((amp - expected).norm() < 1e-12, "m={m}");
    }
}

#[test]
fn post_measurement_states_match_circuit() {
    let s = setup(5, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi = random_state(s.ops.dim(), &mut rng);
    let blocks = circuit(&s.exact_powers, &psi);
    let u0 = s.ops.spectrum().ground_state();
    for m in [0u64, 3, 40, 127] {
        let block = &blocks[m as usize];
        let expected = block / C64::new(block.norm(), 0.0);
        let (post, c0p) = phase::post_measurement_state_exact(&s.cfg, s.ops.spectrum(), &psi, m).unwrap();
        assert!((post.dotc(&expected).norm() - 1.0).abs() < 1e-10, "m={m}");
        assert!((c0p - u0.dotc(&expected).norm()).abs() < 1e-10, "m={m}");
    }
}

#[test]
fn post_measurement_overlap_formula() {
    // c0' = |c0 α0| / sqrt(Σ_j |c_j α_j|²)
    let s = setup(6, 3);
    let spec = s.ops.spectrum();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let psi = random_state(s.ops.dim(), &mut rng);
    let coeffs = spec.coefficients(&psi).unwrap();
    let phases = phase::phases(spec, s.cfg.r).unwrap();
    for m in [1u64, 60, 300] {
        let num = coeffs[0].norm() * phase::alpha_sq(m, phases[0], s.cfg.q()).sqrt();
        let den: f64 = coeffs
            .iter()
            .zip(&phases)
            .map(|(c, p)| c.norm_sqr() * phase::alpha_sq(m, *p, s.cfg.q()))
            .sum::<f64>()
            .sqrt();
        let (_, c0p) = phase::post_measurement_state_exact(&s.cfg, spec, &psi, m).unwrap();
        assert!((c0p - num / den).abs() < 1e-10, "m={m}");
    }
}

#[test]
fn trotter_backend_matches_circuit_with_product_formulas() {
    let s = setup(5, 2);
    let cfg = PeConfig {
        backend: Backend::Trotter,
        ..s.cfg
    };
    let planned: Vec<_> = (0..cfg.q())
        .map(|j| suzuki::plan(1, j, &s.ops, 1e-2 * 0.5f64.powi((cfg.q() - j) as i32), &PlanOptions::default()).unwrap())
        .collect();
    let powers = TrotterPowers::from_planned(planned);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let psi = random_state(s.ops.dim(), &mut rng);
    let blocks = circuit(&powers.unitaries, &psi);
    let dist = phase::trotter_distribution(&cfg, &powers, &psi).unwrap();
    for (m, block) in blocks.iter().enumerate() {
        assert!((block.norm_squared() - dist[m]).abs() < 1e-12, "m={m}");
        let v = phase::trotter_outcome_vector(&cfg, &powers, &psi, m as u64).unwrap();
        assert!((v - block).norm() < 1e-12, "m={m}");
    }
    // exact powers through the Trotter path reproduce the exact backend
    let exact = TrotterPowers::exact(&s.ops, cfg.q());
    let a = phase::trotter_distribution(&cfg, &exact, &psi).unwrap();
    let b = phase::exact_distribution(&s.cfg, s.ops.spectrum(), &psi).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}
