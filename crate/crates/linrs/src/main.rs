use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use linrs::config::ExperimentConfig;
use linrs::env::synthetic::{build_filtered_dataset, write_dataset, SyntheticSpec};
use linrs::harness::{run_experiment_on, write_curves, write_summary, ExecutionMode, LoadedData};
use linrs::{Error, Result};

#[derive(Parser)]
#[command(name = "linrs", about = "Contextual bandit benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a filtered synthetic dataset file.
    GenData(GenDataArgs),
    /// Run one experiment from a config file and write curves + summary.
    Run(RunArgs),
    /// Run the same config once per aspiration level, merging summaries.
    SweepAleph(SweepArgs),
    /// Merge summary.csv files and print a runtime/regret table.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Context dimension.
    #[arg(long, default_value_t = 128)]
    d: usize,
    /// Number of arms.
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Per-coordinate variance of the reward-model parameters.
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    /// Variance of the shared per-round noise term.
    #[arg(long, default_value_t = 0.1)]
    noise_var: f64,
    /// Threshold the best mean must exceed and the second best must not.
    #[arg(long, default_value_t = 0.5)]
    aleph_opt: f64,
    /// Rows to keep. Zero writes an empty dataset.
    #[arg(long, default_value_t = 50_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run replications sequentially even when parallel support is built in.
    #[arg(long, default_value_t = false)]
    sequential: bool,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// LinRS aspiration level override.
    #[arg(long)]
    aleph: Option<f64>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Aspiration levels, e.g. --aleph 0.3 --aleph 0.5
    #[arg(long = "aleph", required = true)]
    alephs: Vec<f64>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// summary.csv files to merge.
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
}

fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) {
    if let Some(v) = &ov.policy {
        cfg.policy = v.clone();
    }
    if let Some(v) = &ov.dataset {
        cfg.dataset = v.clone();
    }
    if let Some(v) = ov.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = ov.replications {
        cfg.replications = v;
    }
    if let Some(v) = ov.seed {
        cfg.seed = v;
    }
    if let Some(v) = ov.w {
        cfg.w = Some(v);
    }
    if let Some(v) = ov.eta {
        cfg.eta = Some(v);
    }
    if let Some(v) = ov.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = &ov.out_dir {
        cfg.out_dir = Some(v.display().to_string());
    }
}

fn mode_for(ov: &Overrides) -> ExecutionMode {
    if ov.sequential {
        ExecutionMode::Sequential
    } else {
        ExecutionMode::default()
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg
        .out_dir
        .as_ref()
        .ok_or_else(|| Error::Config("out_dir: required (config field or --out-dir)".into()))?;
    let dir = PathBuf::from(dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn gen_data(args: &GenDataArgs) -> Result<()> {
    let spec = SyntheticSpec {
        dim: args.d,
        arms: args.k,
        sigma: args.sigma,
        noise_var: args.noise_var,
        aleph_opt: args.aleph_opt,
        n: args.n,
        seed: args.seed,
    };
    let ds = build_filtered_dataset(&spec)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    write_dataset(&args.out, &ds)?;
    if ds.rows.is_empty() {
        eprintln!("warning: wrote empty dataset (--n 0)");
    }
    println!(
        "wrote {} rows (d = {}, k = {}, acceptance rate {:.4}) to {}",
        ds.rows.len(),
        spec.dim,
        spec.arms,
        ds.acceptance_rate,
        args.out.display()
    );
    Ok(())
}

fn prepare(config: &Path, ov: &Overrides) -> Result<(ExperimentConfig, LoadedData)> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    apply_overrides(&mut cfg, ov);
    match cfg.env.as_str() {
        "synthetic" | "mushroom" | "jester" => {}
        other => return Err(Error::Config(format!("env: unknown environment {:?}", other))),
    }
    let data = LoadedData::load(&cfg)?;
    cfg.resolve_defaults(data.aleph_opt());
    cfg.validate()?;
    Ok((cfg, data))
}

fn run_one(cfg: &ExperimentConfig, data: &LoadedData, mode: ExecutionMode, dir: &Path) -> Result<()> {
    let result = run_experiment_on(data, cfg, mode)?;
    write_curves(File::create(dir.join("curves.csv"))?, &result)?;
    write_summary(File::create(dir.join("summary.csv"))?, &[&result])?;
    fs::write(dir.join("config.json"), cfg.to_json_pretty())?;
    println!(
        "{}: final regret {:.4} +/- {:.4} over {} replications ({:.3} s mean wall time) -> {}",
        cfg.policy,
        result.final_regret_mean(),
        result.final_regret_std(),
        cfg.replications,
        result.mean_wall_time_s,
        dir.display()
    );
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let (mut cfg, data) = prepare(&args.config, &args.overrides)?;
    if let Some(v) = args.aleph {
        cfg.aleph = Some(v);
        cfg.validate()?;
    }
    let dir = out_dir(&cfg)?;
    run_one(&cfg, &data, mode_for(&args.overrides), &dir)
}

fn sweep_aleph(args: &SweepArgs) -> Result<()> {
    if args.alephs.is_empty() {
        return Err(Error::Config("at least one --aleph value is required".into()));
    }
    let (base, data) = prepare(&args.config, &args.overrides)?;
    let dir = out_dir(&base)?;
    let mode = mode_for(&args.overrides);
    let mut results = Vec::new();
    for &aleph in &args.alephs {
        let mut cfg = base.clone();
        cfg.aleph = Some(aleph);
        cfg.validate()?;
        let sub = dir.join(format!("aleph_{}", aleph));
        fs::create_dir_all(&sub)?;
        run_one(&cfg, &data, mode, &sub)?;
        results.push((aleph, run_summary_row(&sub)?));
    }
    let mut writer = csv::Writer::from_writer(File::create(dir.join("sweep_summary.csv"))?);
    writer
        .write_record([
            "aleph",
            "policy",
            "mean_runtime_s",
            "final_regret_mean",
            "final_regret_std",
            "seeds",
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    for (aleph, row) in &results {
        let mut record = vec![aleph.to_string()];
        record.extend(row.iter().cloned());
        writer
            .write_record(&record)
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    writer.flush()?;
    println!("sweep summary -> {}", dir.join("sweep_summary.csv").display());
    Ok(())
}

fn run_summary_row(dir: &Path) -> Result<Vec<String>> {
    let rows = read_summary(&dir.join("summary.csv"))?;
    rows.into_iter()
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty summary", dir.display())))
}

fn read_summary(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected = ["policy", "mean_runtime_s", "final_regret_mean", "final_regret_std", "seeds"];
    if header != expected {
        return Err(Error::Data(format!(
            "{}: unexpected summary header {:?}",
            path.display(),
            header
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn report(args: &ReportArgs) -> Result<()> {
    let mut merged: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    for path in &args.summaries {
        for row in read_summary(path)? {
            let parse = |s: &str, name: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Data(format!("{}: bad {} value {:?}", path.display(), name, s)))
            };
            let runtime = parse(&row[1], "runtime")?;
            let mean = parse(&row[2], "regret mean")?;
            let std = parse(&row[3], "regret std")?;
            merged.insert(row[0].clone(), (runtime, mean, std));
        }
    }
    let reference = merged.get("linucb").map(|&(rt, _, _)| rt);
    println!(
        "{:<10} {:>14} {:>14} {:>18} {:>16}",
        "policy", "runtime_s", "vs_linucb", "final_regret_mean", "final_regret_std"
    );
    for (policy, (runtime, mean, std)) in &merged {
        let ratio = match reference {
            Some(r) if r > 0.0 => format!("{:.3}", runtime / r),
            _ => "-".to_string(),
        };
        println!(
            "{:<10} {:>14.4} {:>14} {:>18.4} {:>16.4}",
            policy, runtime, ratio, mean, std
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::GenData(args) => gen_data(args),
        Command::Run(args) => run(args),
        Command::SweepAleph(args) => sweep_aleph(args),
        Command::Report(args) => report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
