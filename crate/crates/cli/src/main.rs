//! Command-line runner: simulate single days, train neural brokers, batch
//! evaluations for box plots, and aggregate run directories into summaries.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use gridbroker_core::neuro::{self, Topology};
use gridbroker_core::scenario::{load_scenario, ScenarioConfig};
use gridbroker_core::{
    run_simulation_opts, BrokerPolicy, EvolutionParams, MetricsReport, SimOptions, Trainer,
};

#[derive(Parser)]
#[command(
    name = "gridbroker",
    version,
    about = "Microgrid SLA market simulator with rule-based and neuroevolved broker policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write ledgers plus a metrics report.
    Simulate(SimulateArgs),
    /// Evolve a neural broker on a scenario and write the champion checkpoint.
    Train(TrainArgs),
    /// Run N seeded simulations and collect per-run metrics for box plots.
    Evaluate(EvaluateArgs),
    /// Aggregate metrics CSVs from a directory of runs into a summary.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Seed override; defaults to the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $GRIDBROKER_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate every k-th second, scaling energy by k.
    #[arg(long, default_value_t = 1)]
    dilation: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Broker policy: optimistic, pessimistic, or neural:CHECKPOINT.
    #[arg(long)]
    policy: String,
    /// Print the metrics report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Evaluated generations, counting the initial random population.
    #[arg(long, default_value_t = 500)]
    generations: u32,
    #[arg(long, default_value_t = 50)]
    population: usize,
    /// Network representation.
    #[arg(long, value_enum, default_value_t = TopologyArg::Layered)]
    topology: TopologyArg,
    /// Hidden neurons (layered) or free neurons beyond I/O (fully connected).
    #[arg(long, default_value_t = 2)]
    hidden: usize,
    /// Gaussian mutation standard deviation.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Layered,
    FullyConnected,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    policy: String,
    /// Number of seeded runs; run i uses seed base_seed + i.
    #[arg(long, default_value_t = 100)]
    runs: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing run outputs (searched recursively).
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write summary.csv (default: the input directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the summary as JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Keep exit code 1 for usage problems, 0 for --help/--version.
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Train(args) => train(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn out_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var_os("GRIDBROKER_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn parse_policy(spec: &str, cfg: &ScenarioConfig) -> Result<BrokerPolicy> {
    match spec {
        "optimistic" => Ok(BrokerPolicy::Optimistic),
        "pessimistic" => Ok(BrokerPolicy::Pessimistic),
        other => {
            let Some(path) = other.strip_prefix("neural:") else {
                bail!("unknown policy {other:?}; expected optimistic, pessimistic, or neural:CKPT");
            };
            let (topology, genome) = neuro::load_checkpoint(Path::new(path))
                .with_context(|| format!("loading checkpoint {path}"))?;
            if topology.outputs() != cfg.catalog.len() {
                bail!(
                    "checkpoint topology has {} outputs but the scenario catalog has {} durations",
                    topology.outputs(),
                    cfg.catalog.len()
                );
            }
            Ok(BrokerPolicy::Neural { topology, genome })
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn manifest(cfg: &ScenarioConfig, extra: &[(&str, String)]) -> String {
    let mut s = format!("config_hash={:016x}\n", cfg.content_hash());
    for (key, value) in extra {
        s.push_str(&format!("{key}={value}\n"));
    }
    s
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = load_scenario(&args.common.scenario)?;
    let policy = parse_policy(&args.policy, &cfg)?;
    let opts = SimOptions { seed: args.common.seed, dilation: args.common.dilation };
    let (report, logs) = run_simulation_opts(&cfg, &policy, &opts)?;

    let dir = out_dir(&args.common.out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir, "ledger.csv", &logs.ledger_csv())?;
    write_file(&dir, "events.csv", &logs.events_csv())?;
    let mut metrics_csv = String::from(MetricsReport::CSV_HEADER);
    metrics_csv.push('\n');
    metrics_csv.push_str(&report.csv_row());
    metrics_csv.push('\n');
    write_file(&dir, "metrics.csv", &metrics_csv)?;
    write_file(&dir, "metrics.json", &serde_json::to_string_pretty(&report)?)?;
    write_file(
        &dir,
        "manifest.txt",
        &manifest(
            &cfg,
            &[
                ("command", "simulate".into()),
                ("policy", logs.policy.clone()),
                ("seed", logs.seed.to_string()),
                ("dilation", logs.dilation.to_string()),
                ("sim_length", cfg.sim_length.to_string()),
            ],
        ),
    )?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.pretty());
        println!("outputs            {}", dir.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let cfg = load_scenario(&args.common.scenario)?;
    let topology = match args.topology {
        TopologyArg::Layered => Topology::layered(args.hidden, cfg.catalog.len()),
        TopologyArg::FullyConnected => Topology::fully_connected(args.hidden, cfg.catalog.len()),
    };
    let params = EvolutionParams {
        population_size: args.population,
        generations: args.generations,
        mutation_sigma: args.sigma,
        seed: args.common.seed.unwrap_or(cfg.seed),
        ..Default::default()
    };
    let result = Trainer::new(&cfg, topology, params)
        .with_dilation(args.common.dilation)
        .evolve()?;

    let dir = out_dir(&args.common.out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir, "training_log.csv", &result.history_csv())?;
    let checkpoint = dir.join("champion.genome");
    neuro::save_checkpoint(&checkpoint, &result.topology, &result.champion)?;
    write_file(
        &dir,
        "manifest.txt",
        &manifest(
            &cfg,
            &[
                ("command", "train".into()),
                ("seed", args.common.seed.unwrap_or(cfg.seed).to_string()),
                ("dilation", args.common.dilation.to_string()),
                ("population", args.population.to_string()),
                ("generations", args.generations.to_string()),
            ],
        ),
    )?;

    let last = result.history.last().expect("at least one generation");
    println!(
        "trained {} generations: best fitness {:.6}, reimbursement {:.6}",
        result.history.len(),
        last.best,
        result.champion_record.cost_reimbursement
    );
    println!("champion checkpoint: {}", checkpoint.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    if args.runs == 0 {
        bail!("--runs must be >= 1");
    }
    let cfg = load_scenario(&args.common.scenario)?;
    let policy = parse_policy(&args.policy, &cfg)?;
    let base_seed = args.common.seed.unwrap_or(cfg.seed);
    let dilation = args.common.dilation;

    let reports: Vec<MetricsReport> = (0..args.runs)
        .into_par_iter()
        .map(|i| {
            let opts = SimOptions { seed: Some(base_seed + i), dilation };
            run_simulation_opts(&cfg, &policy, &opts).map(|(report, _)| report)
        })
        .collect::<gridbroker_core::Result<_>>()?;

    let dir = out_dir(&args.common.out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut csv = String::from(MetricsReport::CSV_HEADER);
    csv.push('\n');
    for report in &reports {
        csv.push_str(&report.csv_row());
        csv.push('\n');
    }
    write_file(&dir, "metrics.csv", &csv)?;
    write_file(
        &dir,
        "manifest.txt",
        &manifest(
            &cfg,
            &[
                ("command", "evaluate".into()),
                ("policy", policy.name().into()),
                ("base_seed", base_seed.to_string()),
                ("runs", args.runs.to_string()),
                ("dilation", dilation.to_string()),
            ],
        ),
    )?;
    println!("wrote {} runs to {}", reports.len(), dir.join("metrics.csv").display());
    Ok(())
}

/// Numeric metrics columns summarized by `report`.
const SUMMARY_COLUMNS: &[&str] = &[
    "par",
    "mtbf_s",
    "mttr_s",
    "availability",
    "reactivity",
    "profit",
    "income_ugrid",
    "income_feedin",
    "cost_supply",
    "cost_reimbursement",
    "discomfort",
];

fn report(args: ReportArgs) -> Result<()> {
    let mut files = Vec::new();
    collect_metrics_files(&args.input, &mut files)?;
    files.sort();
    if files.is_empty() {
        bail!("no metrics.csv files under {}", args.input.display());
    }

    // (policy, metric name, value) triples from every run row.
    let mut rows: Vec<(String, Vec<(String, f64)>)> = Vec::new();
    for file in &files {
        let text = std::fs::read_to_string(file)
            .with_context(|| format!("reading {}", file.display()))?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| anyhow!("{} is empty", file.display()))?
            .split(',')
            .collect();
        let policy_idx = header
            .iter()
            .position(|&h| h == "policy")
            .ok_or_else(|| anyhow!("{} has no policy column", file.display()))?;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                bail!(
                    "{}: row width {} != header width {}",
                    file.display(),
                    fields.len(),
                    header.len()
                );
            }
            let mut values = Vec::new();
            for (name, value) in header.iter().zip(&fields) {
                if SUMMARY_COLUMNS.contains(name) {
                    if let Ok(v) = value.parse::<f64>() {
                        if v.is_finite() {
                            values.push((name.to_string(), v));
                        }
                    }
                }
            }
            rows.push((fields[policy_idx].to_string(), values));
        }
    }
    if rows.is_empty() {
        bail!("no data rows under {}", args.input.display());
    }

    let mut policies: Vec<String> = rows.iter().map(|(p, _)| p.clone()).collect();
    policies.sort();
    policies.dedup();
    let mut summary_csv = String::from("policy,metric,count,min,median,max\n");
    let mut pretty = String::new();
    for policy in &policies {
        pretty.push_str(&format!("{policy}:\n"));
        for &metric in SUMMARY_COLUMNS {
            let mut values: Vec<f64> = rows
                .iter()
                .filter(|(p, _)| p == policy)
                .flat_map(|(_, vs)| vs.iter().filter(|(n, _)| n == metric).map(|(_, v)| *v))
                .collect();
            if values.is_empty() {
                continue;
            }
            values.sort_by(f64::total_cmp);
            let n = values.len();
            let median =
                if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 };
            summary_csv.push_str(&format!(
                "{policy},{metric},{n},{},{median},{}\n",
                values[0],
                values[n - 1]
            ));
            pretty.push_str(&format!(
                "  {metric:<20} n={n:<4} min={:<14.6} median={median:<14.6} max={:<14.6}\n",
                values[0],
                values[n - 1]
            ));
        }
    }

    let dir = args.out.clone().unwrap_or_else(|| args.input.clone());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir, "summary.csv", &summary_csv)?;
    if args.json {
        let mut entries = Vec::new();
        for line in summary_csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            entries.push(serde_json::json!({
                "policy": f[0],
                "metric": f[1],
                "count": f[2].parse::<u64>().unwrap_or(0),
                "min": f[3].parse::<f64>().ok(),
                "median": f[4].parse::<f64>().ok(),
                "max": f[5].parse::<f64>().ok(),
            }));
        }
        println!("{}", serde_json::to_string_pretty(&entries)?);
    } else {
        print!("{pretty}");
        println!("summary: {}", dir.join("summary.csv").display());
    }
    Ok(())
}

fn collect_metrics_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_metrics_files(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "metrics.csv") {
            out.push(path);
        }
    }
    Ok(())
}
