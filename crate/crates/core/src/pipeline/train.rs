use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{InitialPattern, RunConfig};
use super::dataset::{gen_dataset, Dataset, PatternSampler};
use crate::dqn::{DqnAgent, QNetwork, ReplayBuffer, Transition};
use crate::env::{Environment, ExactSolver, GbdtSurrogate, PowerOracle};
use crate::gbdt::{self, GbdtModel, Metrics};
use crate::netmodel::{sample_channel, ChannelRealization, NetworkConfig, SystemState};
use crate::rng::{seeded, stream, SimRng};
use crate::{Error, Result};
use std::sync::Arc;

pub const POWER_MODEL_FILE: &str = "gbdt_power.json";
pub const FEASIBILITY_MODEL_FILE: &str = "gbdt_feasibility.json";
pub const QNET_FILE: &str = "qnet.json";
pub const REPLAY_FILE: &str = "replay.bin";

/// The fixed channel of a run.
pub fn channel_for(network: &NetworkConfig, channel_seed: u64) -> Result<ChannelRealization> {
    sample_channel(network, &mut seeded(channel_seed, stream::CHANNEL))
}

/// Q-network input: pattern bits, then demands divided by `demand_scale_mbps`.
pub fn dqn_features(state: &SystemState, demand_scale_mbps: f64) -> Vec<f64> {
    let s = if demand_scale_mbps > 0.0 {
        1.0 / demand_scale_mbps
    } else {
        1.0
    };
    state
        .rrh_active
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .chain(state.demands_mbps.iter().map(|d| d * s))
        .collect()
}

pub fn initial_pattern(kind: InitialPattern, m: usize, rng: &mut SimRng) -> Vec<bool> {
    match kind {
        InitialPattern::AllOn => vec![true; m],
        InitialPattern::OneOff => PatternSampler::OneOff.sample(m, rng),
        InitialPattern::Random => PatternSampler::UniformNonEmpty.sample(m, rng),
    }
}

/// Trained models and replay memory handed from offline training to the
/// online phase.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub power: GbdtModel,
    pub feasibility: GbdtModel,
    pub qnet: QNetwork,
    pub buffer: ReplayBuffer,
}

impl Artifacts {
    pub fn surrogate(&self) -> GbdtSurrogate {
        GbdtSurrogate::new(self.power.clone(), self.feasibility.clone())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.power.save(&dir.join(POWER_MODEL_FILE))?;
        self.feasibility.save(&dir.join(FEASIBILITY_MODEL_FILE))?;
        self.qnet.save(&dir.join(QNET_FILE))?;
        self.buffer.save(&dir.join(REPLAY_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            power: GbdtModel::load(&dir.join(POWER_MODEL_FILE))?,
            feasibility: GbdtModel::load(&dir.join(FEASIBILITY_MODEL_FILE))?,
            qnet: QNetwork::load(&dir.join(QNET_FILE))?,
            buffer: ReplayBuffer::load(&dir.join(REPLAY_FILE))?,
        })
    }
}

/// Shuffles `0..n` with the split stream of `seed` and cuts off the last
/// `holdout_fraction` as the test part. Both parts come back sorted.
pub fn split_indices(n: usize, holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed, stream::SPLIT));
    let n_test = ((n as f64) * holdout_fraction).round() as usize;
    let mut test = idx.split_off(n - n_test.min(n));
    idx.sort_unstable();
    test.sort_unstable();
    (idx, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub panel: String,
    pub num_active: usize,
    pub target_w: f64,
    pub predicted_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelFit {
    pub panel: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub mse: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateReport {
    pub power_holdout: Metrics,
    pub feasibility_accuracy: f64,
    pub panels: Vec<PanelFit>,
}

/// Fits the power and feasibility models on the training split and scores
/// them on the holdout.
pub fn fit_surrogate(
    cfg: &RunConfig,
    dataset: &Dataset,
) -> Result<(GbdtModel, GbdtModel, SurrogateReport, Vec<FitPoint>)> {
    if dataset.num_rrhs != cfg.network.num_rrhs || dataset.num_users != cfg.network.num_users {
        return Err(Error::Dimension(format!(
            "dataset is {}x{}, config is {}x{}",
            dataset.num_rrhs, dataset.num_users, cfg.network.num_rrhs, cfg.network.num_users
        )));
    }
    let (train_idx, test_idx) = split_indices(dataset.len(), cfg.run.holdout_fraction, cfg.seeds.train);
    let train_set = dataset.regression(&train_idx)?;
    let test_set = dataset.regression(&test_idx)?;
    let power = gbdt::train(&train_set, &cfg.gbdt)?;
    let power_holdout = gbdt::evaluate(&power, &test_set)?;
    if power_holdout.r2 < cfg.run.r2_floor {
        log::warn!(
            "held-out R^2 {:.4} is below the configured floor {}",
            power_holdout.r2,
            cfg.run.r2_floor
        );
    }

    let feasibility = gbdt::train(&dataset.feasibility(&train_idx)?, &cfg.feasibility)?;
    let feas_test = dataset.feasibility(&test_idx)?;
    let mut correct = 0usize;
    for i in 0..feas_test.len() {
        let p = feasibility.predict(feas_test.features.row(i))?;
        if (p >= 0.5) == (feas_test.targets[i] == 1.0) {
            correct += 1;
        }
    }
    let feasibility_accuracy = correct as f64 / feas_test.len().max(1) as f64;

    let mut points = Vec::new();
    let panels = vec![PanelFit {
        panel: "random".into(),
        train_rows: train_set.len(),
        test_rows: test_set.len(),
        mse: power_holdout.mse,
        r2: power_holdout.r2,
    }];
    for i in 0..test_set.len() {
        let x = test_set.features.row(i);
        points.push(FitPoint {
            panel: "random".into(),
            num_active: x[..cfg.network.num_rrhs].iter().filter(|&&v| v == 1.0).count(),
            target_w: test_set.targets[i],
            predicted_w: power.predict(x)?,
        });
    }
    Ok((
        power,
        feasibility,
        SurrogateReport {
            power_holdout,
            feasibility_accuracy,
            panels,
        },
        points,
    ))
}

/// Fits a dedicated model on a fixed-pattern dataset and scores it on its
/// holdout.
pub fn fit_panel(
    cfg: &RunConfig,
    channel: &ChannelRealization,
    sampler: PatternSampler,
    name: &str,
    seed_offset: u64,
) -> Result<(PanelFit, Vec<FitPoint>)> {
    let data = gen_dataset(
        &cfg.network,
        channel,
        cfg.run.panel_size,
        cfg.seeds.data.wrapping_add(seed_offset),
        sampler,
    )?;
    let (train_idx, test_idx) = split_indices(data.len(), cfg.run.holdout_fraction, cfg.seeds.train);
    let train_set = data.regression(&train_idx)?;
    let test_set = data.regression(&test_idx)?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let model = gbdt::train(&train_set, &cfg.gbdt)?;
    let metrics = gbdt::evaluate(&model, &test_set)?;
    let mut points = Vec::with_capacity(test_set.len());
    for i in 0..test_set.len() {
        points.push(FitPoint {
            panel: name.into(),
            num_active: cfg.network.num_rrhs - usize::from(sampler == PatternSampler::OneOff),
            target_w: test_set.targets[i],
            predicted_w: model.predict(test_set.features.row(i))?,
        });
    }
    Ok((
        PanelFit {
            panel: name.into(),
            train_rows: train_set.len(),
            test_rows: test_set.len(),
            mse: metrics.mse,
            r2: metrics.r2,
        },
        points,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Environment steps taken so far.
    pub step: u64,
    /// Mean training loss over the episode's updates.
    pub loss: Option<f64>,
    pub epsilon: f64,
    /// Sum of unscaled rewards (W).
    pub episode_return: f64,
    pub slots: usize,
    pub infeasible: bool,
}

/// Offline Q-learning against the given reward oracle. Rewards are divided
/// by `P_UB` before they reach the network. Infeasibility ends an episode
/// as a terminal transition; running out of slots does not.
pub fn train_dqn(
    cfg: &RunConfig,
    oracle: Arc<dyn PowerOracle>,
) -> Result<(DqnAgent, Vec<EpisodeLog>)> {
    let net_cfg = &cfg.network;
    let m = net_cfg.num_rrhs;
    let mut agent = DqnAgent::new(m + net_cfg.num_users, m + 1, cfg.dqn.clone(), cfg.seeds.train)?;
    let mut env = Environment::new(net_cfg.clone(), oracle, &vec![true; m], cfg.seeds.train)?;
    let scale = env.p_upper_bound();
    let demand_scale = net_cfg.demand_max_mbps;
    let mut start_rng = seeded(cfg.seeds.train, stream::BASELINE);
    let mut log = Vec::with_capacity(cfg.dqn.episodes);

    for episode in 0..cfg.dqn.episodes {
        let start = initial_pattern(cfg.run.train_initial_pattern, m, &mut start_rng);
        let state = env.reset(&start)?;
        let mut ret = 0.0;
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        let mut slots = 0;
        let mut infeasible = false;
        let mut features = dqn_features(&state, demand_scale);
        for _ in 0..cfg.dqn.episode_length {
            let eps = agent.epsilon();
            let action = agent.act(&features, eps)?;
            let r = env.step(action)?;
            let next = dqn_features(&r.next_state, demand_scale);
            let t = Transition {
                state: features,
                action,
                reward: r.reward / scale,
                next_state: next.clone(),
                terminal: r.terminal,
            };
            if let Some(loss) = agent.observe(t, true).map_err(|e| match e {
                Error::NonFinite(msg) => Error::NonFinite(format!("episode {episode}: {msg}")),
                other => other,
            })? {
                loss_sum += loss;
                updates += 1;
            }
            ret += r.reward;
            slots += 1;
            features = next;
            if r.terminal {
                infeasible = true;
                break;
            }
        }
        log.push(EpisodeLog {
            episode,
            step: agent.steps(),
            loss: (updates > 0).then(|| loss_sum / updates as f64),
            epsilon: agent.epsilon(),
            episode_return: ret,
            slots,
            infeasible,
        });
    }
    Ok((agent, log))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub dataset_rows: usize,
    pub feasible_rows: usize,
    pub surrogate: SurrogateReport,
    pub episodes: usize,
    pub env_steps: u64,
    pub updates: u64,
    pub infeasible_episodes: usize,
    /// Mean unscaled return of the last tenth of the episodes.
    pub late_mean_return: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifacts: Artifacts,
    pub summary: TrainSummary,
    pub fit_points: Vec<FitPoint>,
    /// Per-round training MSE of the power model.
    pub power_curve: Vec<f64>,
    pub episodes: Vec<EpisodeLog>,
}

/// Offline phase: surrogate fit (plus the fixed-pattern fit panels) and
/// Q-learning with exact-solver rewards.
pub fn train_offline(cfg: &RunConfig, dataset: &Dataset, channel: &ChannelRealization) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (power, feasibility, mut report, mut points) = fit_surrogate(cfg, dataset)?;
    for (sampler, name, offset) in [
        (PatternSampler::AllOn, "all-on", 1u64),
        (PatternSampler::OneOff, "one-off", 2u64),
    ] {
        let (panel, pts) = fit_panel(cfg, channel, sampler, name, offset)?;
        report.panels.push(panel);
        points.extend(pts);
    }

    let oracle: Arc<dyn PowerOracle> = Arc::new(ExactSolver::new(cfg.network.clone(), channel.clone()));
    let (agent, episodes) = train_dqn(cfg, oracle)?;
    let tail = (episodes.len() / 10).max(1).min(episodes.len());
    let late_mean_return = if episodes.is_empty() {
        0.0
    } else {
        episodes[episodes.len() - tail..].iter().map(|e| e.episode_return).sum::<f64>() / tail as f64
    };
    let summary = TrainSummary {
        dataset_rows: dataset.len(),
        feasible_rows: dataset.num_feasible(),
        surrogate: report,
        episodes: episodes.len(),
        env_steps: agent.steps(),
        updates: agent.updates(),
        infeasible_episodes: episodes.iter().filter(|e| e.infeasible).count(),
        late_mean_return,
    };
    let power_curve = power.train_mse.clone();
    Ok(TrainOutcome {
        artifacts: Artifacts {
            power,
            feasibility,
            qnet: agent.net.clone(),
            buffer: agent.buffer.clone(),
        },
        summary,
        fit_points: points,
        power_curve,
        episodes,
    })
}

pub(crate) fn random_state(cfg: &NetworkConfig, rng: &mut SimRng) -> SystemState {
    let bits = rng.random_range(1..(1u64 << cfg.num_rrhs));
    SystemState {
        rrh_active: (0..cfg.num_rrhs).map(|i| bits >> i & 1 == 1).collect(),
        demands_mbps: crate::netmodel::sample_demands(cfg, rng),
    }
}
