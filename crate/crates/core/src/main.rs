use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use cran_core::pipeline::{
    self, bench_timing, channel_for, demand_sweep, ete_compare, figure_runs, gen_dataset,
    run_baseline, run_online, train_offline, write_json, Artifacts, Dataset, EvalContext,
    EvalReport, PatternSampler, RunConfig, Scheme, TimingStats,
};
use cran_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cran", version, about = "Green C-RAN RRH switching with DQN and a GBDT power surrogate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed this command draws from.
    #[arg(long)]
    seed: Option<u64>,
    /// Redraws the user geometry and fading.
    #[arg(long)]
    channel_seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve random instances with the exact solver and write a dataset.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Number of rows; defaults to `dataset_size`.
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Fit the surrogate and train the Q-network offline.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV; generated when it does not exist.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a DQN scheme online.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        slots: Option<usize>,
        /// Also write the instant and average power figure data.
        #[arg(long)]
        figures: bool,
        /// Also write the demand sweep.
        #[arg(long)]
        sweep: bool,
    },
    /// Run the AO and OC baselines.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// `ao` or `oc`; both when omitted.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Time the surrogate against the exact solver over several sizes.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        inputs: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Compare DQN-GBDT against DQN-SOCP on the same demand stream.
    Ete {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long)]
        slots: Option<usize>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = common.channel_seed {
        cfg.seeds.channel = c;
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct DatasetSummary {
    rows: usize,
    feasible_rows: usize,
    solver_failures: usize,
    num_rrhs: usize,
    num_users: usize,
    data_seed: u64,
    channel_seed: u64,
}

#[derive(Serialize)]
struct PhaseTiming {
    phase: &'static str,
    seconds: f64,
}

#[derive(Serialize)]
struct RunTiming<'a> {
    scheme: &'a str,
    wall_s: f64,
    decisions: TimingStats,
}

fn write_report(out: &Path, report: &EvalReport, tag: &str, wall_s: f64) -> Result<()> {
    report.write_csv(&out.join(format!("eval_{tag}.csv")))?;
    write_json(&report.summary(), &out.join(format!("eval_{tag}_summary.json")))?;
    write_json(
        &RunTiming {
            scheme: report.scheme.name(),
            wall_s,
            decisions: report.timing,
        },
        &out.join(format!("timing_eval_{tag}.json")),
    )
}

fn gen_data(common: Common, rows: Option<usize>) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(s) = common.seed {
        cfg.seeds.data = s;
    }
    let rows = rows.unwrap_or(cfg.dataset_size);
    if rows == 0 {
        return Err(Error::Config {
            key: "rows".into(),
            reason: "must be >= 1".into(),
        });
    }
    prepare_out(&common.out)?;
    let t0 = Instant::now();
    let channel = channel_for(&cfg.network, cfg.seeds.channel)?;
    let data = gen_dataset(&cfg.network, &channel, rows, cfg.seeds.data, PatternSampler::UniformNonEmpty)?;
    data.write_csv(&common.out.join("dataset.csv"))?;
    write_json(
        &DatasetSummary {
            rows: data.len(),
            feasible_rows: data.num_feasible(),
            solver_failures: data.solver_failures,
            num_rrhs: data.num_rrhs,
            num_users: data.num_users,
            data_seed: cfg.seeds.data,
            channel_seed: cfg.seeds.channel,
        },
        &common.out.join("dataset_summary.json"),
    )?;
    write_json(
        &PhaseTiming {
            phase: "gen-data",
            seconds: t0.elapsed().as_secs_f64(),
        },
        &common.out.join("timing_gen_data.json"),
    )?;
    info!("{} rows, {} feasible", data.len(), data.num_feasible());
    Ok(())
}

fn train(common: Common, data: Option<PathBuf>) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(s) = common.seed {
        cfg.seeds.train = s;
    }
    prepare_out(&common.out)?;
    let t0 = Instant::now();
    let channel = channel_for(&cfg.network, cfg.seeds.channel)?;
    let data_path = data.unwrap_or_else(|| common.out.join("dataset.csv"));
    let dataset = if data_path.exists() {
        Dataset::read_csv(&data_path)?
    } else {
        info!("{} not found, generating", data_path.display());
        let d = gen_dataset(
            &cfg.network,
            &channel,
            cfg.dataset_size,
            cfg.seeds.data,
            PatternSampler::UniformNonEmpty,
        )?;
        d.write_csv(&data_path)?;
        d
    };
    if dataset.num_rrhs != cfg.network.num_rrhs || dataset.num_users != cfg.network.num_users {
        return Err(Error::Dimension(format!(
            "dataset is {}x{}, config is {}x{}",
            dataset.num_rrhs, dataset.num_users, cfg.network.num_rrhs, cfg.network.num_users
        )));
    }
    let outcome = train_offline(&cfg, &dataset, &channel)?;
    outcome.artifacts.save(&common.out)?;
    write_json(&outcome.summary, &common.out.join("train_summary.json"))?;
    pipeline::write_fit_points(&outcome.fit_points, &common.out.join("surrogate_fit.csv"))?;
    pipeline::write_curve(&outcome.power_curve, &common.out.join("gbdt_curve.csv"))?;
    pipeline::write_episode_log(&outcome.episodes, &common.out.join("train_log.csv"))?;
    write_json(
        &PhaseTiming {
            phase: "train",
            seconds: t0.elapsed().as_secs_f64(),
        },
        &common.out.join("timing_train.json"),
    )?;
    info!(
        "trained: R^2 {:.4}, {} episodes",
        outcome.summary.surrogate.power_holdout.r2, outcome.summary.episodes
    );
    Ok(())
}

fn parse_scheme(s: Option<&str>, default: Scheme) -> Result<Scheme> {
    s.map_or(Ok(default), str::parse)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    common: Common,
    artifacts: Option<PathBuf>,
    scheme: Option<String>,
    slots: Option<usize>,
    figures: bool,
    sweep: bool,
) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(s) = common.seed {
        cfg.seeds.eval = s;
    }
    let scheme = parse_scheme(scheme.as_deref(), cfg.scheme)?;
    let slots = slots.unwrap_or(cfg.eval_slots);
    prepare_out(&common.out)?;
    let channel = channel_for(&cfg.network, cfg.seeds.channel)?;
    let ctx = EvalContext::new(&cfg, &channel);
    let art_dir = artifacts.unwrap_or_else(|| common.out.clone());
    let needs_artifacts = !scheme.is_baseline() || figures || sweep;
    let art = if needs_artifacts {
        Some(Artifacts::load(&art_dir)?)
    } else {
        None
    };

    let t0 = Instant::now();
    let report = match (&art, scheme.is_baseline()) {
        (_, true) => run_baseline(&ctx, scheme, slots)?,
        (Some(a), false) => run_online(&ctx, a, scheme, cfg.run.initial_pattern, slots)?,
        (None, false) => unreachable!(),
    };
    write_report(&common.out, &report, scheme.name(), t0.elapsed().as_secs_f64())?;
    info!("{}: {:.3} W average", scheme.name(), report.average_w());

    if let (true, Some(a)) = (figures, &art) {
        let t0 = Instant::now();
        let runs = figure_runs(&ctx, a, slots)?;
        runs.write_instant(&common.out.join("power_instant.csv"))?;
        runs.write_average(&common.out.join("power_average.csv"))?;
        let summaries: Vec<_> = runs.all_on.iter().chain(&runs.one_off).map(|r| r.summary()).collect();
        write_json(&summaries, &common.out.join("figures_summary.json"))?;
        write_json(
            &PhaseTiming {
                phase: "figures",
                seconds: t0.elapsed().as_secs_f64(),
            },
            &common.out.join("timing_figures.json"),
        )?;
    }
    if let (true, Some(a)) = (sweep, &art) {
        let t0 = Instant::now();
        let points = demand_sweep(&cfg, &channel, a)?;
        pipeline::write_sweep(&points, &common.out.join("demand_sweep.csv"))?;
        write_json(
            &PhaseTiming {
                phase: "sweep",
                seconds: t0.elapsed().as_secs_f64(),
            },
            &common.out.join("timing_sweep.json"),
        )?;
    }
    Ok(())
}

fn baseline(common: Common, scheme: Option<String>, slots: Option<usize>) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(s) = common.seed {
        cfg.seeds.eval = s;
    }
    let schemes = match scheme {
        Some(s) => {
            let k: Scheme = s.parse()?;
            if !k.is_baseline() {
                return Err(Error::Config {
                    key: "scheme".into(),
                    reason: format!("{} is not a baseline", k.name()),
                });
            }
            vec![k]
        }
        None => vec![Scheme::Ao, Scheme::Oc],
    };
    let slots = slots.unwrap_or(cfg.eval_slots);
    prepare_out(&common.out)?;
    let channel = channel_for(&cfg.network, cfg.seeds.channel)?;
    let ctx = EvalContext::new(&cfg, &channel);
    for k in schemes {
        let t0 = Instant::now();
        let report = run_baseline(&ctx, k, slots)?;
        write_report(&common.out, &report, k.name(), t0.elapsed().as_secs_f64())?;
        info!("{}: {:.3} W average", k.name(), report.average_w());
    }
    Ok(())
}

fn bench(common: Common, inputs: Option<usize>, repeats: Option<usize>) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(s) = common.seed {
        cfg.seeds.data = s;
    }
    if let Some(n) = inputs {
        cfg.bench.inputs = n;
    }
    if let Some(r) = repeats {
        cfg.bench.repeats = r;
    }
    cfg.validate()?;
    prepare_out(&common.out)?;
    let rows = bench_timing(&cfg)?;
    for r in &rows {
        info!(
            "{}x{}: gbdt {:.2e} s, solver {:.2e} s, speedup {:.1}",
            r.num_rrhs, r.num_users, r.gbdt_s, r.socp_s, r.speedup
        );
    }
    pipeline::write_timing_csv(&rows, &common.out.join("timing_table.csv"))
}

fn ete(common: Common, artifacts: Option<PathBuf>, slots: Option<usize>) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(s) = common.seed {
        cfg.seeds.eval = s;
    }
    let slots = slots.unwrap_or(cfg.eval_slots);
    prepare_out(&common.out)?;
    let channel = channel_for(&cfg.network, cfg.seeds.channel)?;
    let art = Artifacts::load(&artifacts.unwrap_or_else(|| common.out.clone()))?;
    let ctx = EvalContext::new(&cfg, &channel);
    let t0 = Instant::now();
    let report = ete_compare(&ctx, &art, slots)?;
    report.write_csv(&common.out.join("ete_slots.csv"))?;
    let summary = report.summary();
    write_json(&summary, &common.out.join("ete_summary.json"))?;
    write_json(
        &PhaseTiming {
            phase: "ete",
            seconds: t0.elapsed().as_secs_f64(),
        },
        &common.out.join("timing_ete.json"),
    )?;
    info!("relative gap {:.4}", summary.relative_gap);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { common, rows } => gen_data(common, rows),
        Command::Train { common, data } => train(common, data),
        Command::Evaluate {
            common,
            artifacts,
            scheme,
            slots,
            figures,
            sweep,
        } => evaluate(common, artifacts, scheme, slots, figures, sweep),
        Command::Baseline { common, scheme, slots } => baseline(common, scheme, slots),
        Command::Bench {
            common,
            inputs,
            repeats,
        } => bench(common, inputs, repeats),
        Command::Ete {
            common,
            artifacts,
            slots,
        } => ete(common, artifacts, slots),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
