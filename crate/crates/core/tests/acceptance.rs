//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use rpe_core::config::CliConfig;
use rpe_core::cost::{cost_report, sweep_config, CostReport};
use rpe_core::grid::PotentialSpec;
use rpe_core::rpe::{Mode, Prepared, RunConfig};
use rpe_core::verify::{
    verify_eigenvector_improvement, verify_gap_and_successive_overlap, verify_lemma3_ratio,
    verify_near_eigenvector_stability, verify_suzuki_order, StageCaseOptions, Verdict,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn quadratic_energy_config() -> RunConfig {
    RunConfig::new(1, 15, PotentialSpec::quadratic(1, 8.0, 0.5))
}

fn energy_correctness() -> Outcome {
    let start = Instant::now();
    let prepared = Prepared::new(&quadratic_energy_config()).expect("valid config");
    let lambda0 = prepared.lambda0().expect("oracle");
    let dh = prepared.grid.h();
    let seeds = 200u64;
    let mut good = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let traj = prepared.trajectory(seed, false);
        let last = match (&traj.aborted, traj.records.last()) {
            (None, Some(r)) => r,
            _ => continue,
        };
        if last.in_good_set {
            good += 1;
            let err = (last.energy_estimate - lambda0).abs();
            worst = worst.max(err);
            violations += (err > dh) as u32;
        }
    }
    let rate = good as f64 / seeds as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && rate >= 0.70 && secs <= 60.0,
        format!(
            "good final outcome {good}/{seeds} (rate {rate:.3} ≥ 0.70), max |E-λ0| {worst:.3e} ≤ dh {dh}, {violations} violations, {secs:.2}s"
        ),
    )
}

fn relative_error_chain() -> Outcome {
    let mut cfg = quadratic_energy_config();
    cfg.repetitions = 5;
    let mut worst: f64 = 0.0;
    let mut h = 0.0;
    let mut failures = 0;
    let runs = 20;
    for base in 0..runs {
        cfg.seed = 1000 + base;
        let prepared = Prepared::new(&cfg).expect("valid config");
        h = prepared.grid.h();
        let report = prepared.run().expect("run completes");
        match report.rel_error {
            Some(e) => {
                worst = worst.max(e);
                failures += (e > h) as u32;
            }
            None => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("median of 5 over {runs} base seeds: max |1 - E/E0_ref| = {worst:.3e} ≤ h = {h}"),
    )
}

fn eigenvector_improvement() -> Outcome {
    let start = Instant::now();
    let r = verify_eigenvector_improvement(200, 1).expect("suite runs");
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.verdict == Verdict::Pass && r.trials >= 200 && secs <= 120.0,
        format!(
            "{} qualifying trials, {} violations of c0' ≥ c0, min margin {:.3e}, {} regenerated, {secs:.2}s",
            r.trials,
            r.failure_count,
            r.min_margin.unwrap_or(f64::NAN),
            r.regenerated
        ),
    )
}

fn near_eigenvector_stability() -> Outcome {
    let r = verify_near_eigenvector_stability(200, 2, &StageCaseOptions::default()).expect("suite runs");
    let eps: Vec<&str> = r.notes.iter().filter(|n| n.contains("ε_H")).map(String::as_str).collect();
    outcome(
        r.verdict == Verdict::Pass && r.trials > 0,
        format!(
            "{} trials, {} violations of 1 - c0'² ≤ 15 ε_H; {}",
            r.trials,
            r.failure_count,
            eps.join("; ")
        ),
    )
}

fn lemma3_probability() -> Outcome {
    let r = verify_lemma3_ratio(10_000, 3, 8, 3, 0.85);
    let c = &r.frequency_checks[0];
    outcome(
        r.verdict == Verdict::Pass,
        format!(
            "joint-event frequency {:.4} vs bound {:.4} - 3σ ({:.4}), far-outcome violations {}",
            c.observed, c.bound, c.sigma, r.failure_count
        ),
    )
}

fn cost_reports() -> Vec<(u32, usize, CostReport)> {
    let mut out = Vec::new();
    for k in [1u32, 2] {
        for n in [7usize, 15] {
            let mut cfg = sweep_config(1, 2.0, n, 0.5, k, Mode::Energy, None);
            cfg.max_exponentials = u64::MAX / 4;
            let prepared = Prepared::new(&cfg).expect("valid sweep config");
            out.push((k, n, cost_report(&prepared).expect("plans build")));
        }
    }
    out
}

fn suzuki_order_and_budget(reports: &[(u32, usize, CostReport)]) -> Outcome {
    let r = verify_suzuki_order(100, 4).expect("suite runs");
    let slopes: Vec<&str> = r.notes.iter().map(String::as_str).collect();
    let mut stages = 0;
    let mut over = 0;
    for (_, _, rep) in reports {
        for row in &rep.per_stage {
            stages += 1;
            over += (row.measured_error.unwrap_or(f64::INFINITY) > row.budget) as u32;
        }
    }
    outcome(
        r.verdict == Verdict::Pass && over == 0,
        format!(
            "{}; {stages} planned stages, {over} with Σ_j measured error above (Cd/L)²",
            slopes.join("; ")
        ),
    )
}

fn gap_overlap() -> Outcome {
    let r = verify_gap_and_successive_overlap().expect("suite runs");
    outcome(
        r.verdict == Verdict::Pass,
        format!("{} checks, {} violations", r.trials, r.failure_count),
    )
}

fn cost_envelope(reports: &[(u32, usize, CostReport)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [1u32, 2] {
        let mut summed = Vec::new();
        for (_, n, rep) in reports.iter().filter(|(kk, _, _)| *kk == k) {
            let over = rep
                .per_stage
                .iter()
                .filter(|row| row.planned.unwrap_or(u64::MAX) > row.bound)
                .count();
            pass &= over == 0;
            parts.push(format!("k={k} h=1/{}: {over} stages over bound", n + 1));
            summed.push(rep.summed_bound as f64);
        }
        let ratio = summed[1] / summed[0];
        let expected = 2f64.powf(3.0 + 1.0 / (2.0 * k as f64));
        let ok = (ratio / expected - 1.0).abs() <= 0.10;
        pass &= ok;
        parts.push(format!("k={k} ratio {ratio:.3} vs {expected:.3}"));
    }
    outcome(pass, parts.join(", "))
}

fn state_prep() -> Outcome {
    let mut cfg = RunConfig::new(1, 7, PotentialSpec::quadratic(1, 8.0, 0.5));
    cfg.mode = Mode::StatePrep;
    cfg.delta = Some(0.05);
    let prepared = Prepared::new(&cfg).expect("valid config");
    let mut completed = 0;
    let mut hit = 0;
    for seed in 0..100 {
        let traj = prepared.trajectory(seed, false);
        if traj.aborted.is_some() {
            continue;
        }
        completed += 1;
        hit += (traj.records.last().expect("stages").overlap_out >= 1.0 - 5.0 * 0.05) as u32;
    }
    let rate = hit as f64 / completed.max(1) as f64;
    outcome(
        completed > 0 && rate >= 0.90,
        format!("final overlap ≥ 0.75 on {hit}/{completed} completed runs ({rate:.3} ≥ 0.90)"),
    )
}

fn determinism() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    let mut pass = true;
    let mut entries: Vec<_> = std::fs::read_dir(&dir)
        .expect("configs directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.to_string_lossy().ends_with(".schema.json"))
        .collect();
    entries.sort();
    for path in entries {
        let cfg = CliConfig::load(&path).expect("shipped config loads");
        let run = |c: &CliConfig| Prepared::new(&c.run).and_then(|p| p.run()).and_then(|r| r.to_json());
        let first = run(&cfg).expect("run");
        let second = run(&cfg).expect("run");
        let dumped = CliConfig::parse(&cfg.to_json().expect("dump")).expect("re-ingest");
        let third = run(&dumped).expect("run");
        let same = first == second && first == third;
        pass &= same;
        names.push(format!(
            "{}{}",
            path.file_name().unwrap().to_string_lossy(),
            if same { "" } else { " (DIFFERS)" }
        ));
    }
    outcome(pass && !names.is_empty(), format!("bit-identical reports: {}", names.join(", ")))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let reports = cost_reports();
    let criteria: Vec<Criterion> = vec![
        ("energy correctness", Box::new(energy_correctness)),
        ("relative error chain", Box::new(relative_error_chain)),
        ("eigenvector improvement", Box::new(eigenvector_improvement)),
        ("near-eigenvector stability", Box::new(near_eigenvector_stability)),
        ("joint-event probability", Box::new(lemma3_probability)),
        ("Suzuki order and budget", Box::new(|| suzuki_order_and_budget(&reports))),
        ("gap and successive overlap", Box::new(gap_overlap)),
        ("cost bound envelope", Box::new(|| cost_envelope(&reports))),
        ("state preparation", Box::new(state_prep)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += (!o.pass) as u32;
        println!(
            "criterion {:>2} {:<28} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() as u32 - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
