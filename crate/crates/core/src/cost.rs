//! Exponential counts: planned, per-power bounds, and closed-form envelopes.

use serde::{Deserialize, Serialize};

use crate::grid::PotentialSpec;
use crate::rpe::{Mode, Parameters, Prepared, Qubits, RunConfig};
use crate::suzuki::{c_of_k, exponential_count_bound};
use crate::Result;

/// Closed-form total for energy mode:
/// `c(k) C^{(2-η)/(1-η) + (5-2η)/(2k(1-η))} d^{(2-η)/(1-η) + 3/(2k(1-η))} h^{-(3+1/(2k))} L`.
pub fn energy_mode_bound(k: u32, c: f64, d: usize, h: f64, eta: f64, l: u32) -> f64 {
    let kf = k as f64;
    let base = (2.0 - eta) / (1.0 - eta);
    let c_exp = base + (5.0 - 2.0 * eta) / (2.0 * kf * (1.0 - eta));
    let d_exp = base + 3.0 / (2.0 * kf * (1.0 - eta));
    c_of_k(k) * c.powf(c_exp) * (d as f64).powf(d_exp) * h.powf(-(3.0 + 1.0 / (2.0 * kf))) * l as f64
}

/// Closed-form total for state-prep mode:
/// `c(k) C^{1/(2k)} d^{-1/(2k)} h^{-(3+1/(2k))} δ^{-(1+1/(2k))-1/(k(2-η))} L`.
/// The `δ^{-(1+1/(2k))}` factor comes from `2^{t0} ≤ 2/δ` in the top register.
pub fn state_prep_bound(k: u32, c: f64, d: usize, h: f64, eta: f64, delta: f64, l: u32) -> f64 {
    let kf = k as f64;
    let inv = 1.0 / (2.0 * kf);
    c_of_k(k)
        * c.powf(inv)
        * (d as f64).powf(-inv)
        * h.powf(-(3.0 + inv))
        * delta.powf(-(1.0 + inv) - 1.0 / (kf * (2.0 - eta)))
        * l as f64
}

/// `Σ_j` of the per-power bound for stage fraction `s`.
pub fn stage_bound(k: u32, s: f64, d: usize, p: &Parameters) -> u64 {
    (0..p.q)
        .map(|j| exponential_count_bound(k, j, s, d, p.c, p.h, p.eps_s(j), p.r))
        .fold(0u64, u64::saturating_add)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    pub stage: u32,
    pub s: f64,
    /// Summed per-power bound.
    pub bound: u64,
    pub planned: Option<u64>,
    pub kinetic: Option<u64>,
    pub potential: Option<u64>,
    /// `Σ_j ‖W^{2^j} - Ũ_j‖` of the plans.
    pub measured_error: Option<f64>,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub k: u32,
    pub mode: Mode,
    pub d: usize,
    pub parameters: Parameters,
    /// Closed-form envelope for the whole run.
    pub closed_form_bound: f64,
    /// Sum of the per-power bounds over all stages.
    pub summed_bound: u64,
    pub planned: Option<u64>,
    pub per_stage: Vec<StageCost>,
    /// Two oracle queries per potential exponential.
    pub query_estimate: Option<u64>,
    /// Queries plus `d log²(1/h)` gates per kinetic exponential.
    pub operation_estimate: Option<f64>,
    pub qubits: Qubits,
    /// Planned counts within both bounds and measured errors within budget.
    pub audit_pass: bool,
    pub incidents: Vec<String>,
}

/// Bounds only; no plans are built.
pub fn bound_report(prepared: &Prepared) -> CostReport {
    assemble(prepared, false).expect("bound-only report has no fallible steps")
}

/// Bounds plus actual plans for every stage and power.
pub fn cost_report(prepared: &Prepared) -> Result<CostReport> {
    assemble(prepared, true)
}

fn assemble(prepared: &Prepared, with_plans: bool) -> Result<CostReport> {
    let cfg = &prepared.config;
    let p = &prepared.params;
    let d = prepared.grid.d();
    let closed_form_bound = match cfg.mode {
        Mode::Energy => energy_mode_bound(cfg.k, p.c, d, p.h, cfg.eta, p.l),
        Mode::StatePrep => state_prep_bound(cfg.k, p.c, d, p.h, cfg.eta, cfg.delta.unwrap_or(1.0), p.l),
    };
    let mut incidents = Vec::new();
    let mut per_stage = Vec::with_capacity(p.l as usize);
    for stage in 1..=p.l {
        let s = p.stage_fraction(stage);
        let bound = stage_bound(cfg.k, s, d, p);
        let mut row = StageCost {
            stage,
            s,
            bound,
            planned: None,
            kinetic: None,
            potential: None,
            measured_error: None,
            budget: p.stage_budget,
        };
        if with_plans {
            let powers = prepared.stage_powers(stage)?;
            let planned = powers.exponentials();
            let potential: u64 = powers.plans.iter().map(|pl| pl.potential_count()).sum();
            row.planned = Some(planned);
            row.potential = Some(potential);
            row.kinetic = Some(planned - potential);
            row.measured_error = Some(powers.eps_h());
            if planned > bound {
                incidents.push(format!("stage {stage}: planned {planned} exceeds bound {bound}"));
            }
            if powers.eps_h() > p.stage_budget {
                incidents.push(format!(
                    "stage {stage}: measured error {:.3e} exceeds budget {:.3e}",
                    powers.eps_h(),
                    p.stage_budget
                ));
            }
        }
        per_stage.push(row);
    }
    let summed_bound = per_stage.iter().map(|r| r.bound).fold(0u64, u64::saturating_add);
    let planned = with_plans.then(|| per_stage.iter().filter_map(|r| r.planned).sum::<u64>());
    let potential: Option<u64> = with_plans.then(|| per_stage.iter().filter_map(|r| r.potential).sum());
    let kinetic: Option<u64> = with_plans.then(|| per_stage.iter().filter_map(|r| r.kinetic).sum());
    if let Some(n) = planned {
        if n as f64 > closed_form_bound {
            incidents.push(format!("planned total {n} exceeds closed-form bound {closed_form_bound:.6e}"));
        }
    }
    let log_h = (1.0 / p.h).log2();
    let query_estimate = potential.map(|v| 2 * v);
    let operation_estimate = match (query_estimate, kinetic) {
        (Some(q), Some(k)) => Some(q as f64 + k as f64 * d as f64 * log_h * log_h),
        _ => None,
    };
    Ok(CostReport {
        k: cfg.k,
        mode: cfg.mode,
        d,
        parameters: p.clone(),
        closed_form_bound,
        summed_bound,
        planned,
        per_stage,
        query_estimate,
        operation_estimate,
        qubits: Qubits {
            top: p.q,
            bottom: prepared.grid.bottom_qubits(),
        },
        audit_pass: incidents.is_empty(),
        incidents,
    })
}

/// Config for cost sweeps: a radial quadratic centred in the cube whose
/// grid values stay below `c`, with `C` pinned to `c`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_config(d: usize, c: f64, n: usize, eta: f64, k: u32, mode: Mode, delta: Option<f64>) -> RunConfig {
    let potential = if c > 0.0 {
        PotentialSpec::RadialQuadratic {
            strength: 4.0 * c / d as f64,
            center: vec![0.5; d],
        }
    } else {
        PotentialSpec::Zero
    };
    let mut cfg = RunConfig::new(d, n, potential);
    cfg.eta = eta;
    cfg.k = k;
    cfg.mode = mode;
    cfg.delta = delta;
    cfg.potential_bound = Some(c);
    cfg
}
