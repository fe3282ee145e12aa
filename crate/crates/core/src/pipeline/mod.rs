//! Orchestration: dataset generation with the exact solver, offline
//! surrogate and Q-learning, online evaluation with fine-tuning, the AO and
//! OC baselines, the paired surrogate-vs-solver comparison, timing and
//! plot-data export.
//!
//! Every output except the timing files is a pure function of the
//! [`RunConfig`] and its seeds.

mod bench;
mod config;
mod dataset;
mod eval;
mod train;

pub use bench::{bench_size, bench_timing, write_timing_csv, TimingRow};
pub use config::{BenchOptions, InitialPattern, RunConfig, RunOptions, Scheme, Seeds};
pub use dataset::{gen_dataset, solve_row, Dataset, DatasetRow, PatternSampler};
pub use eval::{
    demand_sweep, ete_compare, figure_runs, run_baseline, run_online, running_average,
    EteReport, EteSummary, EvalContext, EvalReport, EvalSummary, FigureRuns, SweepPoint,
    TimingStats,
};
pub use train::{
    channel_for, dqn_features, fit_panel, fit_surrogate, initial_pattern, split_indices,
    train_dqn, train_offline, Artifacts, EpisodeLog, FitPoint, PanelFit, SurrogateReport,
    TrainOutcome, TrainSummary, FEASIBILITY_MODEL_FILE, POWER_MODEL_FILE, QNET_FILE, REPLAY_FILE,
};

use std::path::Path;

use serde::Serialize;

use crate::Result;

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_fit_points(points: &[FitPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve(curve: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["round", "train_mse"])?;
    for (k, v) in curve.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_episode_log(log: &[EpisodeLog], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "step", "loss", "epsilon", "episode_return", "slots", "infeasible"])?;
    for e in log {
        w.write_record([
            e.episode.to_string(),
            e.step.to_string(),
            e.loss.map_or_else(String::new, |l| l.to_string()),
            e.epsilon.to_string(),
            e.episode_return.to_string(),
            e.slots.to_string(),
            (e.infeasible as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
