use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use rpe_core::config::{CliConfig, Formats, Verbosity};
use rpe_core::cost::{bound_report, cost_report, sweep_config};
use rpe_core::phase::{self, Backend};
use rpe_core::rpe::{mesh_for_eps, Mode, Prepared};
use rpe_core::spectral::eigendecompose;
use rpe_core::verify::{run_suite, SuiteOptions, SuiteReport, Verdict, SUITES};
use rpe_core::{io, Error};

use crate::output::write_atomic;
use crate::{CostArgs, FormatArg, ModeArg, RunArgs, SpectrumArgs, VerifyArgs};

/// Exit 2 for bad input, 1 for failures during computation.
pub enum Failure {
    Config(String),
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Compute(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn compute_err(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

fn init_logging(verbosity: Verbosity) {
    let level = match verbosity {
        Verbosity::Quiet => "error",
        Verbosity::Info => "info",
        Verbosity::Debug => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents).map_err(|e| compute_err(format!("writing {}: {e}", path.display())))
}

pub fn run(args: &RunArgs) -> Result<ExitCode, Failure> {
    let mut cfg = CliConfig::load(&args.config).map_err(|e| config_err(format!("{}: {e}", args.config.display())))?;
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = args.format {
        cfg.output.formats = match f {
            FormatArg::Json => Formats::Json,
            FormatArg::Csv => Formats::Csv,
            FormatArg::Both => Formats::Both,
        };
    }
    if args.dump_config {
        println!("{}", cfg.to_json().map_err(compute_err)?);
        return Ok(ExitCode::SUCCESS);
    }
    init_logging(cfg.output.verbosity);

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| config_err(format!("output dir {}: {e}", dir.display())))?;
    let prepared = Prepared::new(&cfg.run).map_err(config_err)?;
    let p = &prepared.params;
    log::info!(
        "grid n={} d={}, b={} t0={} L={} (C={})",
        prepared.grid.n(),
        prepared.grid.d(),
        p.b,
        p.t0,
        p.l,
        p.c
    );

    let report = prepared.run().map_err(compute_err)?;
    if cfg.output.formats.json() {
        write(&dir.join("report.json"), &(report.to_json().map_err(compute_err)? + "\n"))?;
    }
    if cfg.output.formats.csv() {
        write(&dir.join("stages.csv"), &io::stage_table_csv(&report.per_stage))?;
    }
    if args.dump_states {
        dump_states(&prepared, report.reported_seed, dir)?;
    }
    if args.dump_plans {
        dump_plans(&prepared, dir)?;
    }
    match (&report.aborted, report.e_hat) {
        (None, Some(e)) => {
            log::info!("E_hat = {e:?}, lambda0 = {:?}", report.lambda0_oracle);
            Ok(ExitCode::SUCCESS)
        }
        (reason, _) => Err(Failure::Compute(format!(
            "run did not complete: {}",
            reason.as_deref().unwrap_or("no estimate")
        ))),
    }
}

fn dump_states(prepared: &Prepared, seed: u64, dir: &Path) -> Result<(), Failure> {
    let sub = dir.join("states");
    std::fs::create_dir_all(&sub).map_err(compute_err)?;
    let traj = prepared.trajectory(seed, true);
    let cfg = prepared.pe_config();
    let mut input = prepared.initial_state().clone();
    for (record, post) in traj.records.iter().zip(&traj.states) {
        let ctx = prepared.stage(record.stage).map_err(compute_err)?;
        let dist = match cfg.backend {
            Backend::Exact => phase::exact_distribution(&cfg, ctx.spectrum(), &input),
            Backend::Trotter => prepared
                .stage_powers(record.stage)
                .and_then(|pw| phase::trotter_distribution(&cfg, pw, &input)),
        };
        match dist {
            Ok(d) => {
                let csv = io::distribution_csv(&d, |m| cfg.in_good_set(ctx.phases[0], m));
                write(&sub.join(format!("distribution_stage{:03}.csv", record.stage)), &csv)?;
            }
            Err(e @ Error::OutcomeCap { .. }) => log::warn!("stage {}: distribution skipped: {e}", record.stage),
            Err(e) => return Err(compute_err(e)),
        }
        write(&sub.join(format!("state_stage{:03}.csv", record.stage)), &io::state_csv(post))?;
        input = post.clone();
    }
    Ok(())
}

fn dump_plans(prepared: &Prepared, dir: &Path) -> Result<(), Failure> {
    if prepared.config.backend != Backend::Trotter {
        log::warn!("--dump-plans needs the trotter backend; nothing written");
        return Ok(());
    }
    let sub = dir.join("plans");
    std::fs::create_dir_all(&sub).map_err(compute_err)?;
    for stage in 1..=prepared.params.l {
        let powers = prepared.stage_powers(stage).map_err(compute_err)?;
        for plan in &powers.plans {
            let name = format!("stage{stage:03}_j{:02}.json", plan.j);
            write(&sub.join(name), &(plan.to_json().map_err(compute_err)? + "\n"))?;
        }
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode, Failure> {
    init_logging(Verbosity::Quiet);
    let names: Vec<&str> = if args.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&args.suite.as_str()) {
        vec![args.suite.as_str()]
    } else {
        return Err(Failure::Config(format!(
            "unknown suite '{}'; expected one of {} or all",
            args.suite,
            SUITES.join(", ")
        )));
    };
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| config_err(format!("output dir {}: {e}", dir.display())))?;
    }
    let opts = SuiteOptions {
        trials: args.trials,
        seed: args.seed,
    };
    let mut reports: Vec<SuiteReport> = Vec::new();
    for name in names {
        let start = std::time::Instant::now();
        let report = run_suite(name, &opts).map_err(compute_err)?;
        println!(
            "{:<20} {:<4}  trials={} failures={} regenerated={} ({:.1}s)",
            name,
            if report.verdict == Verdict::Pass { "PASS" } else { "FAIL" },
            report.trials,
            report.failure_count,
            report.regenerated,
            start.elapsed().as_secs_f64()
        );
        for c in &report.frequency_checks {
            println!(
                "    {}: observed {:.4} vs bound {:.4} (σ {:.4}) {}",
                c.name,
                c.observed,
                c.bound,
                c.sigma,
                if c.pass { "ok" } else { "LOW" }
            );
        }
        for f in &report.failures {
            println!("    violation: {} (observed {:?}, bound {:?})", f.inputs, f.observed, f.bound);
        }
        for n in &report.notes {
            println!("    {n}");
        }
        if let Some(dir) = &args.out_dir {
            let json = serde_json::to_string_pretty(&report).map_err(compute_err)?;
            write(&dir.join(format!("{name}.json")), &(json + "\n"))?;
        }
        reports.push(report);
    }
    if let Some(dir) = &args.out_dir {
        write(&dir.join("summary.csv"), &io::suite_summary_csv(&reports))?;
    }
    Ok(if reports.iter().all(|r| r.verdict == Verdict::Pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Largest grid dimension for which a bound-only cost row is built.
const COST_DIM_LIMIT: usize = 1 << 24;

pub fn cost(args: &CostArgs) -> Result<ExitCode, Failure> {
    init_logging(Verbosity::Quiet);
    let bad = |m: String| Err(Failure::Config(m));
    if args.d == 0 {
        return bad("--d must be positive".into());
    }
    if !(args.c.is_finite() && args.c > 0.0) {
        return bad(format!("--c = {} must be positive", args.c));
    }
    if !(args.eps > 0.0 && args.eps < 1.0) {
        return bad(format!("--eps = {} must lie in (0, 1)", args.eps));
    }
    let eps_min = args.eps_min.unwrap_or(args.eps);
    if !(eps_min > 0.0 && eps_min <= args.eps) {
        return bad(format!("--eps-min = {eps_min} must lie in (0, eps]"));
    }
    let mode = match args.mode {
        ModeArg::Energy => Mode::Energy,
        ModeArg::State => Mode::StatePrep,
    };
    if mode == Mode::StatePrep && args.delta.is_none() {
        return bad("--mode state needs --delta".into());
    }

    let h_max = mesh_for_eps(args.eps, args.d);
    let h_min = mesh_for_eps(eps_min, args.d);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for &k in &args.k {
        let mut h = h_max;
        while h >= h_min {
            let n = (1.0 / h).round() as usize - 1;
            let mut cfg = sweep_config(args.d, args.c, n, args.eta, k, mode, args.delta);
            cfg.max_exponentials = args.max_exponentials;
            let dim = n.checked_pow(args.d as u32).unwrap_or(usize::MAX);
            if dim > COST_DIM_LIMIT {
                return bad(format!("h = {h} gives grid dimension above {COST_DIM_LIMIT}"));
            }
            cfg.dim_cap = dim;
            cfg.validate().map_err(config_err)?;
            let prepared = Prepared::new(&cfg).map_err(config_err)?;
            let report = if dim <= args.plan_max_dim {
                match cost_report(&prepared) {
                    Ok(r) => r,
                    Err(Error::Unreachable(msg)) => {
                        log::warn!("h = {h}: planning stopped: {msg}");
                        bound_report(&prepared)
                    }
                    Err(e) => return Err(compute_err(e)),
                }
            } else {
                bound_report(&prepared)
            };
            let p = &report.parameters;
            rows.push(vec![
                k.to_string(),
                format!("{h:?}"),
                n.to_string(),
                p.b.to_string(),
                p.t0.to_string(),
                p.l.to_string(),
                p.q.to_string(),
                report.qubits.bottom.to_string(),
                (p.q + report.qubits.bottom).to_string(),
                report.summed_bound.to_string(),
                format!("{:?}", report.closed_form_bound),
                report.planned.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
            ]);
            h /= 2.0;
        }
    }
    let header = [
        "k",
        "h",
        "n",
        "b",
        "t0",
        "L",
        "qubits_top",
        "qubits_bottom",
        "qubits_total",
        "N_bound",
        "N_closed_form",
        "N_planned",
    ];
    print!("{}", format_table(&header, &rows, args.csv));
    Ok(ExitCode::SUCCESS)
}

fn format_table(header: &[&str], rows: &[Vec<String>], csv: bool) -> String {
    let mut out = String::new();
    if csv {
        out.push_str(&header.join(","));
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        return out;
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    for r in rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn spectrum(args: &SpectrumArgs) -> Result<ExitCode, Failure> {
    init_logging(Verbosity::Quiet);
    let cfg = CliConfig::load(&args.config).map_err(|e| config_err(format!("{}: {e}", args.config.display())))?;
    if !(0.0..=1.0).contains(&args.stage_fraction) {
        return Err(Failure::Config(format!(
            "--stage-fraction = {} must lie in [0, 1]",
            args.stage_fraction
        )));
    }
    let ham = rpe_core::rpe::stage_hamiltonian(&cfg.run, args.stage_fraction).map_err(config_err)?;
    let spec = eigendecompose(&ham).map_err(compute_err)?;
    let csv = io::spectrum_csv(&spec);
    match &args.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
