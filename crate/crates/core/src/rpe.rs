//! The staged repeated phase estimation driver.
//!
//! Stage `ℓ = 1..L` runs phase estimation on `W_ℓ = exp(-i M_{h,ℓ} / R)`
//! with `M_{h,ℓ} = -Δ_h/2 + (ℓ/L) V_h`, carrying the collapsed bottom
//! register into the next stage. The first input is the ground state of
//! `-Δ_h/2`, which is known in closed form. The last outcome gives
//! `Ê = 2πR m / 2^{b+t0}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{
    assemble_hamiltonian, bounds_from_values, sine_ground_state, GridSpec, HamiltonianTerms, PotentialSpec,
    DEFAULT_DIM_CAP,
};
use crate::phase::{self, Backend, PeConfig, TrotterPowers};
use crate::spectral::{eigendecompose, reference_energy, Spectrum};
use crate::suzuki::{self, PlanOptions, StageOperators, SuzukiPlan, DEFAULT_MAX_EXPONENTIALS};
use crate::{Error, Result, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    /// Estimate the ground energy.
    #[default]
    #[serde(rename = "energy")]
    Energy,
    /// Prepare a state close to the ground state.
    #[serde(rename = "state-prep", alias = "state_prep", alias = "state")]
    StatePrep,
}

/// Explicit values replacing selected parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<u32>,
    #[serde(default, rename = "L", alias = "l", skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
}

impl Overrides {
    fn is_empty(&self) -> bool {
        self.b.is_none() && self.t0.is_none() && self.l.is_none()
    }
}

fn default_eta() -> f64 {
    0.5
}
fn default_k() -> u32 {
    1
}
fn default_backend() -> Backend {
    Backend::Exact
}
fn default_repetitions() -> u32 {
    1
}
fn default_dim_cap() -> usize {
    DEFAULT_DIM_CAP
}
fn default_max_exponentials() -> u64 {
    DEFAULT_MAX_EXPONENTIALS
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    /// Grid points per axis. Exactly one of `n` and `eps` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Target relative error; picks `h` as a power of 1/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub potential: PotentialSpec,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
    #[serde(default = "default_max_exponentials")]
    pub max_exponentials: u64,
    /// Replaces the computed `C = max V`; must not be below it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_bound: Option<f64>,
}

impl RunConfig {
    /// Minimal config with defaults for everything optional.
    pub fn new(d: usize, n: usize, potential: PotentialSpec) -> Self {
        RunConfig {
            d,
            n: Some(n),
            eps: None,
            potential,
            eta: default_eta(),
            k: default_k(),
            mode: Mode::Energy,
            delta: None,
            backend: default_backend(),
            seed: 0,
            overrides: Overrides::default(),
            repetitions: default_repetitions(),
            dim_cap: default_dim_cap(),
            max_exponentials: default_max_exponentials(),
            potential_bound: None,
        }
    }

    /// Check ranges that do not need the grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        match (self.n, self.eps) {
            (Some(_), Some(_)) => return bad("give either n or eps, not both".into()),
            (None, None) => return bad("one of n or eps is required".into()),
            (None, Some(e)) if !(e.is_finite() && e > 0.0 && e < 1.0) => {
                return bad(format!("eps = {e} must lie in (0, 1)"))
            }
            _ => {}
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta = {} must lie in (0, 1)", self.eta));
        }
        if self.k == 0 || self.k > 8 {
            return bad(format!("k = {} must lie in 1..=8", self.k));
        }
        match (self.mode, self.delta) {
            (Mode::StatePrep, None) => return bad("state-prep mode needs delta".into()),
            (Mode::StatePrep, Some(dl)) if !(dl > 0.0 && dl < 1.0) => {
                return bad(format!("delta = {dl} must lie in (0, 1)"))
            }
            _ => {}
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.max_exponentials == 0 {
            return bad("max_exponentials must be positive".into());
        }
        if let Some(l) = self.overrides.l {
            if l == 0 {
                return bad("override L must be at least 1".into());
            }
        }
        if let Some(b) = self.overrides.b {
            if b == 0 {
                return bad("override b must be at least 1".into());
            }
        }
        if let Some(c) = self.potential_bound {
            if !(c.is_finite() && c >= 0.0) {
                return bad(format!("potential_bound = {c} must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Resolve the grid from `n` or `eps`.
    pub fn grid(&self) -> Result<GridSpec> {
        self.validate()?;
        let grid = match (self.n, self.eps) {
            (Some(n), _) => GridSpec::with_cap(self.d, n, self.dim_cap)?,
            (None, Some(eps)) => {
                let h = mesh_for_eps(eps, self.d);
                let n = (1.0 / h).round() as usize - 1;
                GridSpec::with_cap(self.d, n, self.dim_cap)?
            }
            (None, None) => unreachable!("validated"),
        };
        check_mesh(grid.h(), self.d)?;
        Ok(grid)
    }
}

/// Largest power of 1/2 that is at most `eps` and below `2π²/(5d²)`.
pub fn mesh_for_eps(eps: f64, d: usize) -> f64 {
    let limit = 2.0 * PI * PI / (5.0 * (d * d) as f64);
    let mut h = 0.5;
    while h > eps || h >= limit {
        h /= 2.0;
    }
    h
}

fn check_mesh(h: f64, d: usize) -> Result<()> {
    let limit = 2.0 * PI * PI / (5.0 * (d * d) as f64);
    if h >= limit {
        return Err(Error::InvalidGrid(format!(
            "mesh h = {h} must be below 2π²/(5d²) = {limit:.4}"
        )));
    }
    Ok(())
}

fn ceil_guarded(x: f64) -> f64 {
    (x - 1e-12 * x.abs().max(1.0)).ceil()
}

/// Selected algorithm parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub h: f64,
    pub r: f64,
    pub b: u32,
    pub t0: u32,
    #[serde(rename = "L")]
    pub l: u32,
    pub q: u32,
    /// Potential bound `C` used for selection.
    pub c: f64,
    /// Per-stage simulation budget: `(Cd/L)²` or `δ^{2/(2-η)}`.
    pub stage_budget: f64,
}

impl Parameters {
    /// `ε^S_j = 2^{j-q} · stage_budget`.
    pub fn eps_s(&self, j: u32) -> f64 {
        self.stage_budget * (2f64).powi(j as i32 - self.q as i32)
    }

    pub fn stage_fraction(&self, stage: u32) -> f64 {
        stage as f64 / self.l as f64
    }
}

/// Parameter selection from the scalar problem data.
#[allow(clippy::too_many_arguments)]
pub fn select_parameters_raw(
    d: usize,
    c: f64,
    h: f64,
    eta: f64,
    mode: Mode,
    delta: Option<f64>,
    overrides: &Overrides,
) -> Result<Parameters> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!("C = {c} must be finite and non-negative")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1)")));
    }
    check_mesh(h, d)?;
    let df = d as f64;
    let r = 3.0 * df / (h * h);
    let b = match overrides.b {
        Some(b) => b,
        None => ceil_guarded((2.0 * r * PI / (df * h)).log2()) as u32,
    };
    let cd = c * df;
    let degenerate = |what: &str| {
        Error::InvalidParameter(format!(
            "C·d = {cd} makes the {what} formula degenerate; set overrides for it explicitly"
        ))
    };
    let (l, t0, stage_budget) = match mode {
        Mode::Energy => {
            let l = match overrides.l {
                Some(l) => l,
                None if cd > 0.0 => (ceil_guarded(cd.powf((2.0 - eta) / (1.0 - eta))) as u32).max(1),
                None => return Err(degenerate("L")),
            };
            let t0 = match overrides.t0 {
                Some(t0) => t0,
                None if cd > 0.0 => {
                    let x = (2.0 - eta) * (l as f64 / cd).log2();
                    (ceil_guarded(x).max(0.0) as u32).max(2)
                }
                None => return Err(degenerate("t0")),
            };
            (l, t0, (cd / l as f64).powi(2))
        }
        Mode::StatePrep => {
            let delta = delta
                .filter(|dl| *dl > 0.0 && *dl < 1.0)
                .ok_or_else(|| Error::InvalidParameter("state-prep mode needs delta in (0, 1)".into()))?;
            let l = match overrides.l {
                Some(l) => l,
                None if cd > 0.0 => (ceil_guarded(cd * delta.powf(-1.0 / (2.0 - eta))) as u32).max(1),
                None => return Err(degenerate("L")),
            };
            let t0 = overrides
                .t0
                .unwrap_or_else(|| (ceil_guarded((2.0 / delta).log2()) as u32).max(2));
            (l, t0, delta.powf(2.0 / (2.0 - eta)))
        }
    };
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    if b + t0 > phase::MAX_TOP_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "b + t0 = {} exceeds {} qubits",
            b + t0,
            phase::MAX_TOP_QUBITS
        )));
    }
    Ok(Parameters {
        h,
        r,
        b,
        t0,
        l,
        q: b + t0,
        c,
        stage_budget,
    })
}

/// Resolve grid, potential values and parameters for a config.
pub fn select_parameters(cfg: &RunConfig) -> Result<(GridSpec, Vec<f64>, Parameters)> {
    let grid = cfg.grid()?;
    let values = cfg.potential.grid_values(&grid)?;
    let bounds = bounds_from_values(&grid, &values);
    let c = match cfg.potential_bound {
        Some(c) if c + 1e-12 * c.abs().max(1.0) < bounds.c => {
            return Err(Error::InvalidParameter(format!(
                "potential_bound {c} is below the grid maximum {}",
                bounds.c
            )))
        }
        Some(c) => c,
        None => bounds.c,
    };
    let params = select_parameters_raw(cfg.d, c, grid.h(), cfg.eta, cfg.mode, cfg.delta, &cfg.overrides)?;
    Ok((grid, values, params))
}

/// Per-stage data shared by every seed.
#[derive(Debug)]
pub struct StageContext {
    pub stage: u32,
    pub ham: HamiltonianTerms,
    pub ops: StageOperators,
    pub phases: Vec<f64>,
    powers: OnceLock<std::result::Result<TrotterPowers, String>>,
}

impl StageContext {
    pub fn spectrum(&self) -> &Spectrum {
        self.ops.spectrum()
    }
}

/// Parameters plus lazily built stages; runs any number of seeds.
#[derive(Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub grid: GridSpec,
    pub params: Parameters,
    values: Vec<f64>,
    stages: Vec<OnceLock<std::result::Result<StageContext, String>>>,
    initial: State,
}

impl Prepared {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let (grid, values, params) = select_parameters(cfg)?;
        let stages = (0..params.l).map(|_| OnceLock::new()).collect();
        Ok(Prepared {
            config: cfg.clone(),
            initial: sine_ground_state(&grid),
            grid,
            params,
            values,
            stages,
        })
    }

    pub fn pe_config(&self) -> PeConfig {
        PeConfig {
            b: self.params.b,
            t0: self.params.t0,
            r: self.params.r,
            backend: self.config.backend,
        }
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            max_exponentials: self.config.max_exponentials,
        }
    }

    /// Eigendata for stage `ℓ ∈ 1..=L`.
    pub fn stage(&self, stage: u32) -> Result<&StageContext> {
        if stage == 0 || stage > self.params.l {
            return Err(Error::InvalidParameter(format!(
                "stage {stage} outside 1..={}",
                self.params.l
            )));
        }
        self.stages[stage as usize - 1]
            .get_or_init(|| self.build_stage(stage).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Eigen(format!("stage {stage}: {e}")))
    }

    fn build_stage(&self, stage: u32) -> Result<StageContext> {
        let s = self.params.stage_fraction(stage);
        let ham = HamiltonianTerms::from_values(self.grid, self.values.clone(), s)?;
        let spectrum = eigendecompose(&ham)?;
        let phases = phase::phases(&spectrum, self.params.r)?;
        let ops = StageOperators::with_spectrum(&ham, self.params.r, spectrum)?;
        Ok(StageContext {
            stage,
            ham,
            ops,
            phases,
            powers: OnceLock::new(),
        })
    }

    /// Product-formula powers `Ũ_j`, `j < q`, for stage `ℓ`.
    pub fn stage_powers(&self, stage: u32) -> Result<&TrotterPowers> {
        let ctx = self.stage(stage)?;
        ctx.powers
            .get_or_init(|| self.build_powers(ctx).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Unreachable(format!("stage {stage}: {e}")))
    }

    fn build_powers(&self, ctx: &StageContext) -> Result<TrotterPowers> {
        let k = self.config.k;
        let opts = self.plan_options();
        let zero_potential = ctx.ham.potential_max() == 0.0;
        let planned: Result<Vec<_>> = (0..self.params.q)
            .into_par_iter()
            .map(|j| {
                let eps = self.params.eps_s(j);
                if zero_potential {
                    // the kinetic factor alone is exact
                    let plan = SuzukiPlan::with_subdivisions(k, j, ctx.ham.s, eps, 1)?;
                    let unitary = ctx.ops.realize(&plan);
                    let error = suzuki::spectral_norm(&(&unitary - ctx.ops.exact_power(j)));
                    let mut plan = plan;
                    plan.measured_error = Some(error);
                    return Ok(suzuki::PlannedPower { plan, unitary, error });
                }
                suzuki::plan(k, j, &ctx.ops, eps, &opts)
            })
            .collect();
        Ok(TrotterPowers::from_planned(planned?))
    }

    /// Ground state of `-Δ_h/2`, the first stage input.
    pub fn initial_state(&self) -> &State {
        &self.initial
    }

    /// One full pass through the stages.
    pub fn trajectory(&self, seed: u64, keep_states: bool) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = self.pe_config();
        let mut psi = self.initial.clone();
        let mut out = Trajectory {
            seed,
            records: Vec::with_capacity(self.params.l as usize),
            states: Vec::new(),
            aborted: None,
        };
        for stage in 1..=self.params.l {
            match self.run_stage(stage, &cfg, &psi, &mut rng) {
                Ok((record, post)) => {
                    out.records.push(record);
                    psi = post;
                    if keep_states {
                        out.states.push(psi.clone());
                    }
                }
                Err(e) => {
                    out.aborted = Some(format!("stage {stage}: {e}"));
                    break;
                }
            }
        }
        out
    }

    fn run_stage(&self, stage: u32, cfg: &PeConfig, psi: &State, rng: &mut ChaCha8Rng) -> Result<(StageRecord, State)> {
        let ctx = self.stage(stage)?;
        let powers = match cfg.backend {
            Backend::Exact => None,
            Backend::Trotter => Some(self.stage_powers(stage)?),
        };
        let outcome = phase::measure(cfg, ctx.spectrum(), powers, psi, rng)?;
        let record = StageRecord {
            stage,
            s: ctx.ham.s,
            m: outcome.m,
            in_good_set: outcome.in_good_set,
            qualifying: outcome.qualifying,
            overlap_in: outcome.c0_in * outcome.c0_in,
            overlap_out: outcome.c0_prime * outcome.c0_prime,
            outcome_probability: outcome.probability,
            good_set_probability: outcome.good_set_probability,
            eps_h_measured: powers.map_or(0.0, |p| p.eps_h()),
            exponentials: powers.map_or(0, |p| p.exponentials()),
            lambda0: ctx.spectrum().eigenvalues[0],
            phi0: ctx.phases[0],
            energy_estimate: outcome.energy_estimate,
        };
        Ok((record, outcome.post_state))
    }

    /// Oracle ground energy of the full Hamiltonian `M_h`.
    pub fn lambda0(&self) -> Result<f64> {
        Ok(self.stage(self.params.l)?.spectrum().eigenvalues[0])
    }

    /// Summarize a trajectory into a single-run report.
    pub fn report(&self, traj: &Trajectory) -> Result<RunReport> {
        let reference = self.reference();
        self.report_with(traj, &reference, vec![RepetitionSummary::from_trajectory(traj, &self.params)])
    }

    fn reference(&self) -> Option<crate::spectral::ReferenceEnergy> {
        if !self.config.potential.is_builtin() {
            return None;
        }
        match reference_energy(&self.grid, &self.config.potential) {
            Ok(r) => {
                if r.warning {
                    log::warn!(
                        "reference energy extrapolation is unreliable: {} vs fine-grid {}",
                        r.value,
                        r.fine
                    );
                }
                Some(r)
            }
            Err(e) => {
                log::warn!("no reference energy: {e}");
                None
            }
        }
    }

    fn report_with(
        &self,
        traj: &Trajectory,
        reference: &Option<crate::spectral::ReferenceEnergy>,
        repetitions: Vec<RepetitionSummary>,
    ) -> Result<RunReport> {
        let lambda0 = self.lambda0()?;
        let p = &self.params;
        let e_hat = repetitions
            .iter()
            .find(|r| r.seed == traj.seed)
            .and_then(|r| r.e_hat)
            .or_else(|| traj.e_hat());
        let last = traj.records.last();
        let abs_error = e_hat.map(|e| (e - lambda0).abs());
        let e0_ref = reference.as_ref().map(|r| r.value);
        Ok(RunReport {
            mode: self.config.mode,
            backend: self.config.backend,
            seed: self.config.seed,
            reported_seed: traj.seed,
            parameters: p.clone(),
            e_hat,
            lambda0_oracle: lambda0,
            e0_ref,
            e0_ref_warning: reference.as_ref().is_some_and(|r| r.warning),
            rel_error: match (e_hat, e0_ref) {
                (Some(e), Some(r)) => Some((1.0 - e / r).abs()),
                _ => None,
            },
            rel_error_discrete: e_hat.map(|e| (1.0 - e / lambda0).abs()),
            abs_error,
            final_in_good_set: last.is_some_and(|r| r.in_good_set && traj.aborted.is_none()),
            final_overlap: last.map(|r| r.overlap_out),
            per_stage: traj.records.clone(),
            p_total_lower_bound: p_total_lower_bound(&traj.records, p),
            n_total: traj.records.iter().map(|r| r.exponentials).sum(),
            qubits: Qubits {
                top: p.q,
                bottom: self.grid.bottom_qubits(),
            },
            success: abs_error.is_some_and(|e| e <= self.grid.d() as f64 * self.grid.h()),
            repetitions,
            aborted: traj.aborted.clone(),
        })
    }

    /// All repetitions, median-boosted report.
    pub fn run(&self) -> Result<RunReport> {
        let seeds = repetition_seeds(self.config.seed, self.config.repetitions);
        let trajectories: Vec<Trajectory> = seeds.par_iter().map(|&s| self.trajectory(s, false)).collect();
        let summaries: Vec<RepetitionSummary> = trajectories
            .iter()
            .map(|t| RepetitionSummary::from_trajectory(t, &self.params))
            .collect();
        let reference = self.reference();
        // lower median over completed runs; aborted runs only if nothing completed
        let mut ranked: Vec<usize> = (0..trajectories.len())
            .filter(|&i| summaries[i].e_hat.is_some())
            .collect();
        ranked.sort_by(|&a, &b| {
            summaries[a]
                .e_hat
                .partial_cmp(&summaries[b].e_hat)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let chosen = if ranked.is_empty() {
            0
        } else {
            ranked[(ranked.len() - 1) / 2]
        };
        self.report_with(&trajectories[chosen], &reference, summaries)
    }
}

/// Seeds for independent repetitions; the first is the configured seed.
pub fn repetition_seeds(seed: u64, repetitions: u32) -> Vec<u64> {
    let mut stream = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![seed];
    for _ in 1..repetitions {
        out.push(stream.next_u64());
    }
    out
}

/// `max(0, p_stage)^L`, where the per-stage floor uses the worst input
/// overlap and the largest simulation error seen.
fn p_total_lower_bound(records: &[StageRecord], p: &Parameters) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let min_overlap = records.iter().map(|r| r.overlap_in).fold(1.0, f64::min);
    let eps_h = records.iter().map(|r| r.eps_h_measured).fold(0.0, f64::max);
    let per_stage = phase::ratio_event_probability_bound(min_overlap, p.t0) - 2.0 * eps_h;
    per_stage.max(0.0).powi(p.l as i32)
}

/// Stages of one seeded run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<StageRecord>,
    /// Post-measurement states per stage, when requested.
    pub states: Vec<State>,
    pub aborted: Option<String>,
}

impl Trajectory {
    /// Energy estimate from the final stage; `None` if the run aborted.
    pub fn e_hat(&self) -> Option<f64> {
        if self.aborted.is_some() {
            return None;
        }
        self.records.last().map(|r| r.energy_estimate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u32,
    pub s: f64,
    pub m: u64,
    pub in_good_set: bool,
    /// Good outcome that also meets the `π²/32` ratio condition.
    pub qualifying: bool,
    pub overlap_in: f64,
    pub overlap_out: f64,
    pub outcome_probability: f64,
    pub good_set_probability: f64,
    pub eps_h_measured: f64,
    #[serde(rename = "N")]
    pub exponentials: u64,
    pub lambda0: f64,
    pub phi0: f64,
    pub energy_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qubits {
    pub top: u32,
    pub bottom: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub seed: u64,
    pub e_hat: Option<f64>,
    pub final_in_good_set: bool,
    pub final_overlap: Option<f64>,
    pub n_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl RepetitionSummary {
    fn from_trajectory(t: &Trajectory, p: &Parameters) -> Self {
        let complete = t.aborted.is_none() && t.records.len() == p.l as usize;
        RepetitionSummary {
            seed: t.seed,
            e_hat: t.e_hat(),
            final_in_good_set: complete && t.records.last().is_some_and(|r| r.in_good_set),
            final_overlap: t.records.last().map(|r| r.overlap_out),
            n_total: t.records.iter().map(|r| r.exponentials).sum(),
            aborted: t.aborted.clone(),
        }
    }
}

/// Outcome of a run. `e_hat` is the (lower) median over repetitions; the
/// stage table belongs to the repetition that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub backend: Backend,
    pub seed: u64,
    /// Seed of the repetition whose stage table is reported.
    pub reported_seed: u64,
    pub parameters: Parameters,
    #[serde(rename = "E_hat")]
    pub e_hat: Option<f64>,
    pub lambda0_oracle: f64,
    /// Extrapolated continuum energy; absent for tabulated potentials.
    #[serde(rename = "E0_ref")]
    pub e0_ref: Option<f64>,
    #[serde(rename = "E0_ref_warning")]
    pub e0_ref_warning: bool,
    /// `|1 - Ê/E0_ref|`.
    pub rel_error: Option<f64>,
    /// `|1 - Ê/λ0(M_h)|`.
    pub rel_error_discrete: Option<f64>,
    pub abs_error: Option<f64>,
    pub final_in_good_set: bool,
    pub final_overlap: Option<f64>,
    pub per_stage: Vec<StageRecord>,
    #[serde(rename = "P_total_lower_bound")]
    pub p_total_lower_bound: f64,
    #[serde(rename = "N_total")]
    pub n_total: u64,
    pub qubits: Qubits,
    /// `|Ê - λ0(M_h)| ≤ d h`; a simulation-only diagnostic.
    pub success: bool,
    pub repetitions: Vec<RepetitionSummary>,
    /// Set when a stage failed; the report then covers completed stages.
    pub aborted: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Prepare and execute a config.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    Prepared::new(cfg)?.run()
}

/// Assemble `M_{h,ℓ}` for a config at an arbitrary stage fraction.
pub fn stage_hamiltonian(cfg: &RunConfig, s: f64) -> Result<HamiltonianTerms> {
    let grid = cfg.grid()?;
    assemble_hamiltonian(&grid, &cfg.potential, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad(n: usize) -> RunConfig {
        RunConfig::new(1, n, PotentialSpec::quadratic(1, 8.0, 0.5))
    }

    #[test]
    fn parameter_examples() {
        let p = select_parameters_raw(1, 2.0, 0.125, 0.5, Mode::Energy, None, &Overrides::default()).unwrap();
        assert_relative_eq!(p.r, 192.0);
        assert_eq!(p.b, 14);
        assert_eq!(p.l, 8);
        assert_eq!(p.t0, 3);
        let sp = select_parameters_raw(1, 2.0, 0.125, 0.5, Mode::StatePrep, Some(0.01), &Overrides::default()).unwrap();
        assert_eq!(sp.l, 44);
        assert_eq!(sp.t0, 8);
    }

    #[test]
    fn parameters_for_quadratic_grids() {
        let (_, _, p) = select_parameters(&quad(15)).unwrap();
        assert_relative_eq!(p.c, 1.53125);
        assert_eq!((p.l, p.t0, p.b, p.q), (4, 3, 17, 20));
        let (_, _, p) = select_parameters(&quad(7)).unwrap();
        assert_relative_eq!(p.c, 1.125);
        assert_eq!((p.l, p.t0, p.b, p.q), (2, 2, 14, 16));
        let mut sp = quad(7);
        sp.mode = Mode::StatePrep;
        sp.delta = Some(0.05);
        let (_, _, p) = select_parameters(&sp).unwrap();
        assert_eq!((p.l, p.t0), (9, 6));
    }

    #[test]
    fn zero_potential_needs_overrides() {
        let mut cfg = RunConfig::new(1, 7, PotentialSpec::Zero);
        assert!(matches!(select_parameters(&cfg), Err(Error::InvalidParameter(_))));
        cfg.overrides.l = Some(2);
        assert!(select_parameters(&cfg).is_err());
        cfg.overrides.t0 = Some(2);
        let (_, _, p) = select_parameters(&cfg).unwrap();
        assert_eq!(p.stage_budget, 0.0);
    }

    #[test]
    fn mesh_from_eps() {
        assert_eq!(mesh_for_eps(0.125, 1), 0.125);
        assert_eq!(mesh_for_eps(0.1, 1), 0.0625);
        assert_eq!(mesh_for_eps(0.9, 3), 0.25);
        let mut cfg = RunConfig::new(1, 7, PotentialSpec::Zero);
        cfg.n = None;
        cfg.eps = Some(0.1);
        assert_eq!(cfg.grid().unwrap().n(), 15);
        cfg.n = Some(15);
        assert!(cfg.grid().is_err());
    }

    #[test]
    fn budget_schedule_sums_below_stage_budget() {
        let (_, _, p) = select_parameters(&quad(7)).unwrap();
        let total: f64 = (0..p.q).map(|j| p.eps_s(j)).sum();
        assert!(total < p.stage_budget);
        assert_relative_eq!(p.stage_budget, (1.125f64 / 2.0).powi(2));
    }

    #[test]
    fn zero_potential_run_recovers_sine_ground_state() {
        let mut cfg = RunConfig::new(1, 7, PotentialSpec::Zero);
        cfg.overrides = Overrides { b: None, t0: Some(2), l: Some(2) };
        let prepared = Prepared::new(&cfg).unwrap();
        let report = prepared.run().unwrap();
        assert!(report.aborted.is_none());
        for r in &report.per_stage {
            assert!(r.in_good_set);
            assert_relative_eq!(r.overlap_out, 1.0, epsilon = 1e-12);
        }
        let e = report.e_hat.unwrap();
        let step = 2.0 * PI * prepared.params.r / (1u64 << prepared.params.q) as f64;
        assert!((e - report.lambda0_oracle).abs() <= step);
        assert!(report.rel_error.unwrap() <= prepared.grid.h());
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = quad(7);
        cfg.seed = 42;
        cfg.repetitions = 3;
        let a = run(&cfg).unwrap().to_json().unwrap();
        let b = run(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        cfg.seed = 43;
        let c = run(&cfg).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn median_of_repetitions() {
        let mut cfg = quad(7);
        cfg.repetitions = 5;
        cfg.seed = 9;
        let report = run(&cfg).unwrap();
        assert_eq!(report.repetitions.len(), 5);
        let mut e: Vec<f64> = report.repetitions.iter().filter_map(|r| r.e_hat).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(report.e_hat, Some(e[2]));
        assert_eq!(repetition_seeds(9, 5)[0], 9);
    }

    #[test]
    fn unreachable_plan_aborts_with_partial_report() {
        let mut cfg = quad(7);
        cfg.backend = Backend::Trotter;
        cfg.max_exponentials = 20;
        let report = run(&cfg).unwrap();
        assert!(report.aborted.is_some());
        assert!(report.per_stage.is_empty());
        assert_eq!(report.e_hat, None);
        assert!(!report.success);
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = quad(7);
        cfg.mode = Mode::StatePrep;
        cfg.delta = Some(0.05);
        cfg.overrides.b = Some(10);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"d":1,"n":7,"potential":{"kind":"zero"},"bogus":1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = quad(7);
        cfg.eta = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = quad(7);
        cfg.mode = Mode::StatePrep;
        assert!(cfg.validate().is_err());
        let mut cfg = quad(7);
        cfg.potential_bound = Some(0.5);
        assert!(select_parameters(&cfg).is_err());
        cfg.potential_bound = Some(4.0);
        assert_relative_eq!(select_parameters(&cfg).unwrap().2.c, 4.0);
    }
}
