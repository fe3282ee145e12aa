use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::dataset::{gen_dataset, PatternSampler};
use super::train::{channel_for, random_state, split_indices};
use crate::env::{ExactSolver, GbdtSurrogate, PowerOracle};
use crate::gbdt;
use crate::netmodel::{state_features, NetworkConfig};
use crate::rng::{seeded, stream};
use crate::Result;

/// One row of the timing table: mean seconds per input, with the spread of
/// the per-repeat means as the noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub num_rrhs: usize,
    pub num_users: usize,
    pub inputs: usize,
    pub repeats: usize,
    /// Full surrogate: feasibility gate plus power regression.
    pub gbdt_s: f64,
    pub gbdt_sd_s: f64,
    /// Power regression alone.
    pub gbdt_power_only_s: f64,
    pub socp_s: f64,
    pub socp_sd_s: f64,
    pub speedup: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Mean per-input seconds of `f` over `inputs`, once per repeat.
fn time_per_input<F: FnMut(usize) -> f64>(inputs: usize, repeats: usize, mut f: F) -> Vec<f64> {
    (0..repeats)
        .map(|_| {
            let t0 = Instant::now();
            let mut acc = 0.0;
            for i in 0..inputs {
                acc += f(i);
            }
            black_box(acc);
            t0.elapsed().as_secs_f64() / inputs as f64
        })
        .collect()
}

/// Trains a surrogate for one system size and times it against the solver
/// on the same random inputs.
pub fn bench_size(cfg: &RunConfig, network: &NetworkConfig) -> Result<TimingRow> {
    let channel = channel_for(network, cfg.seeds.channel)?;
    let data = gen_dataset(
        network,
        &channel,
        cfg.bench.dataset_size,
        cfg.seeds.data,
        PatternSampler::UniformNonEmpty,
    )?;
    let (train_idx, _) = split_indices(data.len(), cfg.run.holdout_fraction, cfg.seeds.train);
    let power = gbdt::train(&data.regression(&train_idx)?, &cfg.gbdt)?;
    let feasibility = gbdt::train(&data.feasibility(&train_idx)?, &cfg.feasibility)?;
    let surrogate = GbdtSurrogate::new(power, feasibility);
    let exact = ExactSolver::new(network.clone(), channel);

    let mut rng = seeded(cfg.seeds.data, stream::BENCH);
    let inputs: Vec<_> = (0..cfg.bench.inputs).map(|_| random_state(network, &mut rng)).collect();
    let features: Vec<Vec<f64>> = inputs
        .iter()
        .map(|s| state_features(&s.rrh_active, &s.demands_mbps))
        .collect();
    let (n, reps) = (cfg.bench.inputs, cfg.bench.repeats);

    let socp = time_per_input(n, reps, |i| {
        let s = &inputs[i];
        exact
            .evaluate(&s.rrh_active, &s.demands_mbps)
            .map_or(0.0, |o| o.radiated_w)
    });
    let gbdt = time_per_input(n, reps, |i| {
        let s = &inputs[i];
        surrogate
            .evaluate(&s.rrh_active, &s.demands_mbps)
            .map_or(0.0, |o| o.radiated_w)
    });
    let power_only = time_per_input(n, reps, |i| surrogate.power.predict_unchecked(&features[i]));

    let (gbdt_s, gbdt_sd_s) = mean_sd(&gbdt);
    let (socp_s, socp_sd_s) = mean_sd(&socp);
    Ok(TimingRow {
        num_rrhs: network.num_rrhs,
        num_users: network.num_users,
        inputs: n,
        repeats: reps,
        gbdt_s,
        gbdt_sd_s,
        gbdt_power_only_s: mean_sd(&power_only).0,
        socp_s,
        socp_sd_s,
        speedup: socp_s / gbdt_s,
    })
}

pub fn bench_timing(cfg: &RunConfig) -> Result<Vec<TimingRow>> {
    cfg.bench
        .sizes
        .iter()
        .map(|&[m, n]| {
            let network = NetworkConfig {
                num_rrhs: m,
                num_users: n,
                ..cfg.network.clone()
            };
            network.validate()?;
            bench_size(cfg, &network)
        })
        .collect()
}

pub fn write_timing_csv(rows: &[TimingRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
