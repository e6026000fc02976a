//! `lipbo` command line: run BO/LBO experiments on the benchmark suite, audit
//! the registered optima, and execute the desk-scale theory experiments.

mod config;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lipbo::acquisition::{AcquisitionSpec, BaseAcquisition, BetaSchedule, LboMode};
use lipbo::benchmarks::{lookup, reference_optima_audit, REGISTRY};
use lipbo::harness::{
    aggregate, emit_outputs, render_svg, run_experiment, validate_output_dir, LipschitzConfig,
    MethodSummary, RunConfig, RunTrace, SelectionPolicy, SummaryRow,
};
use lipbo::lipschitz::estimate_true_l;
use lipbo::theory::{
    ar_ucb_regret_experiment, harmless_pruning_experiment, BetaVariant, HarmlessStats, PruneMode,
    RegretPolicy, SpaceConfig,
};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "lipbo", version, about = "Bayesian optimization with Lipschitz envelopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimization experiment on a registered benchmark.
    Run(RunArgs),
    /// Scan every registered benchmark against its reference optimum.
    AuditBenchmarks(AuditArgs),
    /// Desk-scale checks of the harmlessness and regret results.
    #[command(subcommand)]
    Theory(TheoryCommand),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Benchmark name (see `lipbo audit-benchmarks` for the registry).
    #[arg(long)]
    benchmark: Option<String>,
    /// Comma-separated acquisitions: ucb, ts, ei, pi, random.
    #[arg(long)]
    acq: Option<String>,
    /// Comma-separated LBO modes: off, truncated, ar.
    #[arg(long)]
    lbo: Option<String>,
    /// Lipschitz estimate: growing, known:<value>, true, off.
    #[arg(long = "l-mode")]
    l_mode: Option<String>,
    /// Growth factor for the growing estimate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Total function evaluations per run (including init points).
    #[arg(long)]
    iters: Option<usize>,
    /// Number of seeds (0..n-1).
    #[arg(long)]
    seeds: Option<usize>,
    /// Explicit comma-separated seed list (overrides --seeds).
    #[arg(long = "seed-list")]
    seed_list: Option<String>,
    /// Output directory for traces, CSV and SVG.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "init-points")]
    init_points: Option<usize>,
    /// Random exploration every k-th iteration (0 disables).
    #[arg(long = "explore-every")]
    explore_every: Option<usize>,
    #[arg(long = "direct-budget")]
    direct_budget: Option<usize>,
    #[arg(long = "ts-candidates")]
    ts_candidates: Option<usize>,
    /// Practical UCB schedule constant c in c*d*log(2t).
    #[arg(long = "beta-c")]
    beta_c: Option<f64>,
    /// Fixed UCB beta (overrides the schedule; supports e.g. 1e16).
    #[arg(long = "beta-fixed")]
    beta_fixed: Option<f64>,
    #[arg(long = "noise-sd")]
    noise_sd: Option<f64>,
    /// Sample count for the offline true-L estimate.
    #[arg(long = "true-l-samples")]
    true_l_samples: Option<usize>,
    /// Flat key-value config file; CLI flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Random samples per benchmark.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Audit a single benchmark instead of the whole registry.
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long, default_value_t = 123)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum TheoryCommand {
    /// Paired-arm random search with and without Lipschitz pruning.
    Harmless(HarmlessArgs),
    /// AR-UCB vs GP-UCB regret on a finite decision space.
    Regret(RegretArgs),
}

#[derive(Args, Debug)]
struct HarmlessArgs {
    #[arg(long, default_value = "branin-2")]
    benchmark: String,
    /// Target accuracy: stop once ref_optimum - f(x) <= eps.
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "true-l-samples", default_value_t = 100_000)]
    true_l_samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RegretArgs {
    /// Grid size of the finite decision space.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// Rounds per seed.
    #[arg(long, default_value_t = 100, name = "T")]
    t_rounds: usize,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// Beta interpretation: literal (paper statement) or srinivas.
    #[arg(long, default_value = "literal")]
    beta: String,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long = "noise-sd", default_value_t = 0.1)]
    noise_sd: f64,
    #[arg(long = "length-scale", default_value_t = 0.2)]
    length_scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::AuditBenchmarks(args) => cmd_audit(args),
        Command::Theory(TheoryCommand::Harmless(args)) => cmd_harmless(args),
        Command::Theory(TheoryCommand::Regret(args)) => cmd_regret(args),
    }
}

fn parse_acq(label: &str) -> Result<Option<BaseAcquisition>> {
    Ok(match label {
        "ucb" => Some(BaseAcquisition::Ucb),
        "ts" => Some(BaseAcquisition::ThompsonSampling),
        "ei" => Some(BaseAcquisition::Ei),
        "pi" => Some(BaseAcquisition::Pi),
        "random" => None,
        other => bail!("unknown acquisition '{other}' (expected ucb, ts, ei, pi or random)"),
    })
}

fn parse_lbo(label: &str) -> Result<LboMode> {
    Ok(match label {
        "off" => LboMode::Off,
        "truncated" => LboMode::Truncated,
        "ar" => LboMode::AcceptReject,
        other => bail!("unknown lbo mode '{other}' (expected off, truncated or ar)"),
    })
}

fn parse_l_mode(raw: &str, kappa: f64) -> Result<LipschitzConfig> {
    if let Some(value) = raw.strip_prefix("known:") {
        let l: f64 = value.parse().with_context(|| format!("known L value '{value}'"))?;
        return Ok(LipschitzConfig::Known(l));
    }
    Ok(match raw {
        "growing" => LipschitzConfig::Growing { kappa },
        "true" => LipschitzConfig::OfflineTrue,
        "off" => LipschitzConfig::Off,
        other => bail!("unknown l-mode '{other}' (expected growing, known:<v>, true or off)"),
    })
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let benchmark = args
        .benchmark
        .or_else(|| file.get("benchmark").map(str::to_string))
        .context("--benchmark is required (flag or config file)")?;
    let acq_raw =
        args.acq.or_else(|| file.get("acq").map(str::to_string)).unwrap_or_else(|| "ei".into());
    let lbo_raw =
        args.lbo.or_else(|| file.get("lbo").map(str::to_string)).unwrap_or_else(|| "off".into());
    let kappa = args.kappa.or(file.parse("kappa")?).unwrap_or(10.0);
    let l_mode_raw = args
        .l_mode
        .or_else(|| file.get("l-mode").map(str::to_string))
        .unwrap_or_else(|| "growing".into());
    let lipschitz = parse_l_mode(&l_mode_raw, kappa)?;
    let iters = args.iters.or(file.parse("iters")?).unwrap_or(100);
    let seeds: Vec<u64> = match args.seed_list.or_else(|| file.get("seed-list").map(str::to_string))
    {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse().with_context(|| format!("seed '{s}'")))
            .collect::<Result<_>>()?,
        None => {
            let n = args.seeds.or(file.parse("seeds")?).unwrap_or(10);
            (0..n as u64).collect()
        }
    };
    let out = args.out.or_else(|| file.get("out").map(PathBuf::from));

    // Validate output paths before any run starts.
    if let Some(dir) = &out {
        validate_output_dir(dir)
            .with_context(|| format!("output directory {} not writable", dir.display()))?;
    }

    let mut combos: Vec<SelectionPolicy> = Vec::new();
    let acq_list: Vec<&str> = acq_raw.split(',').map(str::trim).collect();
    let lbo_list: Vec<&str> = lbo_raw.split(',').map(str::trim).collect();
    let single = acq_list.len() == 1 && lbo_list.len() == 1;
    for acq in &acq_list {
        for lbo in &lbo_list {
            let mode = parse_lbo(lbo)?;
            match parse_acq(acq)? {
                None => {
                    // Random search; any active l-mode turns it into pruned
                    // random search regardless of the lbo column.
                    if !combos.contains(&SelectionPolicy::RandomSearch) {
                        combos.push(SelectionPolicy::RandomSearch);
                    }
                }
                Some(base) => match AcquisitionSpec::new(base, mode) {
                    Ok(spec) => combos.push(SelectionPolicy::Acquisition(spec)),
                    Err(e) if single => return Err(e.into()),
                    Err(_) => {
                        eprintln!("note: skipping invalid pairing {acq}+{lbo}");
                    }
                },
            }
        }
    }
    if combos.is_empty() {
        bail!("no valid acquisition/lbo combination requested");
    }

    let mut all_traces: Vec<RunTrace> = Vec::new();
    for policy in combos {
        let mut cfg = RunConfig::new(&benchmark, policy);
        cfg.lipschitz = lipschitz;
        cfg.iterations = iters;
        cfg.seeds = seeds.clone();
        if let Some(v) = args.init_points.or(file.parse("init-points")?) {
            cfg.init_points = v;
        }
        if let Some(v) = args.explore_every.or(file.parse("explore-every")?) {
            cfg.explore_every = v;
        }
        if let Some(v) = args.direct_budget.or(file.parse("direct-budget")?) {
            cfg.direct_budget = v;
        }
        if let Some(v) = args.ts_candidates.or(file.parse("ts-candidates")?) {
            cfg.ts_candidates = v;
        }
        if let Some(v) = args.noise_sd.or(file.parse("noise-sd")?) {
            cfg.noise_sd = v;
        }
        if let Some(v) = args.true_l_samples.or(file.parse("true-l-samples")?) {
            cfg.true_l_samples = v;
        }
        if let Some(beta) = args.beta_fixed.or(file.parse("beta-fixed")?) {
            cfg.beta = BetaSchedule::Fixed(beta);
        } else if let Some(c) = args.beta_c.or(file.parse("beta-c")?) {
            cfg.beta = BetaSchedule::Practical { c };
        }
        cfg.validate()?;

        let label = cfg.method_label();
        let outcome = run_experiment(&cfg)?;
        for (seed, err) in &outcome.failures {
            eprintln!("warning: {label} seed {seed} failed: {err}");
        }
        let errs: Vec<f64> = outcome.traces.iter().map(|t| t.final_abs_error()).collect();
        if !errs.is_empty() {
            println!(
                "{benchmark} {label}: mean final abs error {:.6e} over {} seeds",
                errs.iter().sum::<f64>() / errs.len() as f64,
                errs.len()
            );
        }
        all_traces.extend(outcome.traces);
    }

    if let Some(dir) = &out {
        let summaries = aggregate(&all_traces);
        let log_scale = lookup(&benchmark)?.log_scale_error;
        let written = emit_outputs(&all_traces, &summaries, &benchmark, log_scale, dir)?;
        println!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let names: Vec<&str> = match &args.benchmark {
        Some(name) => vec![name.as_str()],
        None => REGISTRY.to_vec(),
    };
    let mut failed = false;
    for name in names {
        let bench = lookup(name)?;
        let report = reference_optima_audit(&bench, args.samples, args.seed);
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {name}: ref {:.9}, max found {:.9}, gap {:.3e} ({} samples)",
            bench.ref_optimum, report.max_found, report.gap, report.samples
        );
        if let Some((point, value)) = &report.violation {
            println!("     violation: f({point:?}) = {value}");
            failed = true;
        }
    }
    if failed {
        bail!("audit failed");
    }
    Ok(())
}

fn harmless_csv(stats: &[HarmlessStats]) -> String {
    let mut csv = String::from("mode,trials,mean_evals,median_evals,mean_rejected,censored\n");
    for s in stats {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.mode_label, s.trials, s.mean_evals, s.median_evals, s.mean_rejected, s.censored
        ));
    }
    csv
}

fn cmd_harmless(args: HarmlessArgs) -> Result<()> {
    let bench = lookup(&args.benchmark)?;
    if let Some(dir) = &args.out {
        validate_output_dir(dir)?;
    }
    let true_l = estimate_true_l(
        |p| bench.evaluate_unchecked(p),
        &bench.bounds,
        args.true_l_samples,
        args.seed,
    );
    println!("offline true-L estimate on {}: {:.4}", args.benchmark, true_l);

    let arms = [
        PruneMode::NoPrune,
        PruneMode::PruneKnownL(true_l),
        PruneMode::PruneGrowing { kappa: args.kappa },
    ];
    let mut all = Vec::new();
    for mode in arms {
        let stats = harmless_pruning_experiment(&bench, args.eps, mode, args.trials, args.seed)?;
        println!(
            "{:>14}: mean evals {:>9.1}, median {:>7.1}, mean rejected {:>9.1}, censored {}",
            stats.mode_label, stats.mean_evals, stats.median_evals, stats.mean_rejected,
            stats.censored
        );
        all.push(stats);
    }
    let base = all[0].mean_evals;
    println!(
        "ratios vs no-prune: known-L {:.3}, growing {:.3}",
        all[1].mean_evals / base,
        all[2].mean_evals / base
    );

    if let Some(dir) = &args.out {
        let path = dir.join(format!("harmless_{}.csv", args.benchmark));
        std::fs::write(&path, harmless_csv(&all))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_regret(args: RegretArgs) -> Result<()> {
    let beta = match args.beta.as_str() {
        "literal" => BetaVariant::Literal,
        "srinivas" => BetaVariant::Srinivas,
        other => bail!("unknown beta variant '{other}' (expected literal or srinivas)"),
    };
    if let Some(dir) = &args.out {
        validate_output_dir(dir)?;
    }
    let cfg = SpaceConfig::grid_1d(args.grid, args.length_scale, args.noise_sd)
        .map_err(anyhow::Error::from)?;
    let seeds: Vec<u64> = (0..args.seeds as u64).collect();

    let mut summaries: Vec<MethodSummary> = Vec::new();
    let mut final_means = Vec::new();
    for (policy, label) in [(RegretPolicy::GpUcb, "gp-ucb"), (RegretPolicy::ArUcb, "ar-ucb")] {
        let records =
            ar_ucb_regret_experiment(&cfg, args.t_rounds, args.delta, policy, beta, &seeds)?;
        let bound_violations =
            records.iter().filter(|r| r.total_regret() > r.bound).count();
        let filtered: usize = records.iter().map(|r| r.maximizer_filtered_rounds).sum();
        let fallbacks: usize = records.iter().map(|r| r.fallback_rounds).sum();
        let mean_total: f64 =
            records.iter().map(|r| r.total_regret()).sum::<f64>() / records.len() as f64;
        println!(
            "{label}: mean R(T) {:.3}, bound violations {}/{}, maximizer filtered rounds {}, fallback rounds {}",
            mean_total,
            bound_violations,
            records.len(),
            filtered,
            fallbacks
        );
        final_means.push(mean_total);

        let rows: Vec<SummaryRow> = (0..args.t_rounds)
            .map(|i| {
                let vals: Vec<f64> = records.iter().map(|r| r.cumulative[i]).collect();
                SummaryRow {
                    iteration: i + 1,
                    mean_abs_error: lipbo::stats::mean(&vals),
                    std_abs_error: lipbo::stats::std_pop(&vals),
                    q10: lipbo::stats::quantile(&vals, 0.1),
                    q90: lipbo::stats::quantile(&vals, 0.9),
                }
            })
            .collect();
        summaries.push(MethodSummary { method: label.to_string(), rows });
    }
    println!("ar-ucb / gp-ucb mean R(T) ratio: {:.3}", final_means[1] / final_means[0]);

    if let Some(dir) = &args.out {
        let mut csv = String::from("round,policy,mean_cum_regret,std_cum_regret,q10,q90\n");
        for s in &summaries {
            for r in &s.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.iteration, s.method, r.mean_abs_error, r.std_abs_error, r.q10, r.q90
                ));
            }
        }
        let csv_path = dir.join("regret.csv");
        std::fs::write(&csv_path, csv)?;
        let svg_path = dir.join("regret.svg");
        std::fs::write(&svg_path, render_svg(&summaries, "cumulative regret", false))?;
        println!("wrote {} and {}", csv_path.display(), svg_path.display());
    }
    Ok(())
}
