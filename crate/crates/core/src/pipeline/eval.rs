use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{InitialPattern, RunConfig, Scheme};
use super::train::{dqn_features, initial_pattern, Artifacts};
use crate::dqn::{DqnAgent, Transition};
use crate::env::{Environment, ExactSolver, PowerOracle};
use crate::netmodel::{power_accounting, ChannelRealization, NetworkConfig};
use crate::rng::{seeded, stream};
use crate::{Error, Result};

/// Wall-clock cost of the decisions in a run. Kept out of every
/// deterministic output file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub slots: usize,
    pub total_s: f64,
    pub mean_slot_s: f64,
    pub max_slot_s: f64,
}

impl TimingStats {
    fn from_samples(samples: &[f64]) -> Self {
        let total: f64 = samples.iter().sum();
        Self {
            slots: samples.len(),
            total_s: total,
            mean_slot_s: if samples.is_empty() { 0.0 } else { total / samples.len() as f64 },
            max_slot_s: samples.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub scheme: Scheme,
    pub initial_pattern: InitialPattern,
    pub slots: usize,
    pub average_w: f64,
    pub transmit_w: f64,
    pub state_w: f64,
    pub transition_w: f64,
    /// Slots the exact solver found infeasible (charged `P_UB`).
    pub infeasible_slots: usize,
    /// Slots the reward oracle flagged infeasible.
    pub oracle_infeasible_slots: usize,
    pub mean_active_rrhs: f64,
}

/// Per-slot power of one evaluation run, measured with the exact solver
/// whatever oracle drove the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub initial_pattern: InitialPattern,
    pub instant_w: Vec<f64>,
    pub running_avg_w: Vec<f64>,
    pub actions: Vec<usize>,
    pub feasible: Vec<bool>,
    pub oracle_feasible: Vec<bool>,
    pub active_rrhs: Vec<usize>,
    /// Summed transmit, state and transition terms over feasible slots.
    pub totals_w: [f64; 3],
    pub timing: TimingStats,
}

/// `avg[k] = (x_0 + ... + x_k) / (k + 1)`, summed left to right.
pub fn running_average(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .enumerate()
        .map(|(k, x)| {
            acc += x;
            acc / (k + 1) as f64
        })
        .collect()
}

impl EvalReport {
    fn new(scheme: Scheme, initial_pattern: InitialPattern) -> Self {
        Self {
            scheme,
            initial_pattern,
            instant_w: vec![],
            running_avg_w: vec![],
            actions: vec![],
            feasible: vec![],
            oracle_feasible: vec![],
            active_rrhs: vec![],
            totals_w: [0.0; 3],
            timing: TimingStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.instant_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instant_w.is_empty()
    }

    pub fn average_w(&self) -> f64 {
        self.running_avg_w.last().copied().unwrap_or(0.0)
    }

    pub fn infeasible_slots(&self) -> usize {
        self.feasible.iter().filter(|&&f| !f).count()
    }

    pub fn summary(&self) -> EvalSummary {
        let n = self.len().max(1) as f64;
        EvalSummary {
            scheme: self.scheme,
            initial_pattern: self.initial_pattern,
            slots: self.len(),
            average_w: self.average_w(),
            transmit_w: self.totals_w[0] / n,
            state_w: self.totals_w[1] / n,
            transition_w: self.totals_w[2] / n,
            infeasible_slots: self.infeasible_slots(),
            oracle_infeasible_slots: self.oracle_feasible.iter().filter(|&&f| !f).count(),
            mean_active_rrhs: self.active_rrhs.iter().sum::<usize>() as f64 / n,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["slot", "instant_w", "running_avg_w", "action", "feasible"])?;
        for k in 0..self.len() {
            w.write_record([
                k.to_string(),
                self.instant_w[k].to_string(),
                self.running_avg_w[k].to_string(),
                self.actions[k].to_string(),
                (self.feasible[k] as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything a run needs besides the policy.
pub struct EvalContext<'a> {
    pub cfg: &'a RunConfig,
    /// Physics of the run; may differ from `cfg.network` in a demand sweep.
    pub network: NetworkConfig,
    pub channel: &'a ChannelRealization,
    pub seed: u64,
}

impl<'a> EvalContext<'a> {
    pub fn new(cfg: &'a RunConfig, channel: &'a ChannelRealization) -> Self {
        Self {
            cfg,
            network: cfg.network.clone(),
            channel,
            seed: cfg.seeds.eval,
        }
    }

    fn start_pattern(&self, kind: InitialPattern) -> Vec<bool> {
        // one-off runs of every scheme close the same RRH
        let mut rng = seeded(self.seed, stream::BASELINE);
        initial_pattern(kind, self.network.num_rrhs, &mut rng)
    }

    fn exact(&self) -> ExactSolver {
        ExactSolver::new(self.network.clone(), self.channel.clone())
    }
}

/// AO keeps every RRH on; OC keeps one RRH, drawn from the evaluation seed,
/// asleep. Neither ever switches, so no transition power is charged.
pub fn run_baseline(ctx: &EvalContext, scheme: Scheme, slots: usize) -> Result<EvalReport> {
    let initial = match scheme {
        Scheme::Ao => InitialPattern::AllOn,
        Scheme::Oc => InitialPattern::OneOff,
        other => {
            return Err(Error::config(
                "scheme",
                format!("{} is not a baseline", other.name()),
            ))
        }
    };
    run(ctx, scheme, initial, slots, None)
}

/// Greedy DQN policy with rewards from the surrogate (`DqnGbdt`) or the
/// exact solver (`DqnSocp`), fine-tuned on the fly when enabled.
pub fn run_online(
    ctx: &EvalContext,
    artifacts: &Artifacts,
    scheme: Scheme,
    initial: InitialPattern,
    slots: usize,
) -> Result<EvalReport> {
    if scheme.is_baseline() {
        return Err(Error::config(
            "scheme",
            format!("{} is not a DQN scheme", scheme.name()),
        ));
    }
    run(ctx, scheme, initial, slots, Some(artifacts))
}

fn run(
    ctx: &EvalContext,
    scheme: Scheme,
    initial: InitialPattern,
    slots: usize,
    artifacts: Option<&Artifacts>,
) -> Result<EvalReport> {
    let net_cfg = &ctx.network;
    let m = net_cfg.num_rrhs;
    let exact = ctx.exact();
    let oracle: Arc<dyn PowerOracle> = match scheme {
        Scheme::DqnGbdt => Arc::new(
            artifacts
                .ok_or_else(|| Error::Contract("surrogate scheme needs artifacts".into()))?
                .surrogate(),
        ),
        _ => Arc::new(exact.clone()),
    };
    let mut agent = match artifacts {
        Some(a) if !scheme.is_baseline() => Some(DqnAgent::from_parts(
            a.qnet.clone(),
            a.buffer.clone(),
            ctx.cfg.dqn.clone(),
            ctx.seed,
        )?),
        _ => None,
    };
    let demand_scale = ctx.cfg.network.demand_max_mbps;
    let start = ctx.start_pattern(initial);
    let mut env = Environment::new(net_cfg.clone(), oracle, &start, ctx.seed)?;
    let p_ub = env.p_upper_bound();

    let mut report = EvalReport::new(scheme, initial);
    let mut times = Vec::with_capacity(slots);
    for _ in 0..slots {
        let t0 = Instant::now();
        let state = env.state().clone();
        let features = dqn_features(&state, demand_scale);
        let action = match agent.as_ref() {
            Some(a) => a.greedy(&features)?,
            None => m,
        };
        let r = env.step(action)?;
        if let Some(a) = agent.as_mut() {
            let t = Transition {
                state: features,
                action,
                reward: r.reward / p_ub,
                next_state: dqn_features(&r.next_state, demand_scale),
                terminal: r.terminal,
            };
            a.observe(t, ctx.cfg.run.online_tuning)?;
        }
        times.push(t0.elapsed().as_secs_f64());

        let next_pattern = &r.next_state.rrh_active;
        let (feasible, power) = if scheme == Scheme::DqnGbdt {
            let truth = exact.evaluate(next_pattern, &state.demands_mbps)?;
            let power = power_accounting(&state.rrh_active, next_pattern, truth.radiated_w, net_cfg)?;
            (truth.feasible, power)
        } else {
            (r.feasible, r.power)
        };
        if feasible {
            report.totals_w[0] += power.transmit_w;
            report.totals_w[1] += power.state_w;
            report.totals_w[2] += power.transition_w;
        }
        report.instant_w.push(if feasible { power.total_w } else { p_ub });
        report.actions.push(action);
        report.feasible.push(feasible);
        report.oracle_feasible.push(r.feasible);
        report.active_rrhs.push(next_pattern.iter().filter(|&&b| b).count());
    }
    report.running_avg_w = running_average(&report.instant_w);
    report.timing = TimingStats::from_samples(&times);
    Ok(report)
}

/// Paired DQN-GBDT / DQN-SOCP runs on the same demand stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EteReport {
    pub gbdt: EvalReport,
    pub socp: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EteSummary {
    pub slots: usize,
    pub gbdt_average_w: f64,
    pub socp_average_w: f64,
    /// `|avg_gbdt - avg_socp| / avg_socp`.
    pub relative_gap: f64,
    pub mean_abs_slot_gap_w: f64,
    pub action_agreement: f64,
}

impl EteReport {
    pub fn summary(&self) -> EteSummary {
        let n = self.gbdt.len();
        let (g, s) = (self.gbdt.average_w(), self.socp.average_w());
        let agree = (0..n).filter(|&k| self.gbdt.actions[k] == self.socp.actions[k]).count();
        let abs_gap: f64 = (0..n)
            .map(|k| (self.gbdt.instant_w[k] - self.socp.instant_w[k]).abs())
            .sum();
        EteSummary {
            slots: n,
            gbdt_average_w: g,
            socp_average_w: s,
            relative_gap: if s > 0.0 { (g - s).abs() / s } else { 0.0 },
            mean_abs_slot_gap_w: if n == 0 { 0.0 } else { abs_gap / n as f64 },
            action_agreement: if n == 0 { 1.0 } else { agree as f64 / n as f64 },
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["slot", "gbdt_w", "socp_w", "gap_w", "gbdt_action", "socp_action"])?;
        for k in 0..self.gbdt.len() {
            w.write_record([
                k.to_string(),
                self.gbdt.instant_w[k].to_string(),
                self.socp.instant_w[k].to_string(),
                (self.gbdt.instant_w[k] - self.socp.instant_w[k]).to_string(),
                self.gbdt.actions[k].to_string(),
                self.socp.actions[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn ete_compare(ctx: &EvalContext, artifacts: &Artifacts, slots: usize) -> Result<EteReport> {
    let initial = ctx.cfg.run.initial_pattern;
    Ok(EteReport {
        gbdt: run_online(ctx, artifacts, Scheme::DqnGbdt, initial, slots)?,
        socp: run_online(ctx, artifacts, Scheme::DqnSocp, initial, slots)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub demand_max_mbps: f64,
    pub ao_w: f64,
    pub oc_w: f64,
    pub dqn_gbdt_w: f64,
    pub dqn_gbdt_infeasible: usize,
}

/// Average power of AO, OC and DQN-GBDT as the upper demand bound grows.
/// The policy keeps the training-time feature scaling.
pub fn demand_sweep(cfg: &RunConfig, channel: &ChannelRealization, artifacts: &Artifacts) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &dmax in &cfg.run.sweep_demand_max_mbps {
        let mut ctx = EvalContext::new(cfg, channel);
        ctx.network.demand_max_mbps = dmax;
        let slots = cfg.run.sweep_slots;
        let ao = run_baseline(&ctx, Scheme::Ao, slots)?;
        let oc = run_baseline(&ctx, Scheme::Oc, slots)?;
        let dqn = run_online(&ctx, artifacts, Scheme::DqnGbdt, cfg.run.initial_pattern, slots)?;
        out.push(SweepPoint {
            demand_max_mbps: dmax,
            ao_w: ao.average_w(),
            oc_w: oc.average_w(),
            dqn_gbdt_w: dqn.average_w(),
            dqn_gbdt_infeasible: dqn.infeasible_slots(),
        });
    }
    Ok(out)
}

/// Runs behind the instant and average power figures: DQN-GBDT, DQN-SOCP
/// and AO from all-on, then the same DQN schemes and OC from one-off.
#[derive(Debug, Clone)]
pub struct FigureRuns {
    pub all_on: [EvalReport; 3],
    pub one_off: [EvalReport; 3],
}

pub fn figure_runs(ctx: &EvalContext, artifacts: &Artifacts, slots: usize) -> Result<FigureRuns> {
    let panel = |initial: InitialPattern, baseline: Scheme| -> Result<[EvalReport; 3]> {
        Ok([
            run_online(ctx, artifacts, Scheme::DqnGbdt, initial, slots)?,
            run_online(ctx, artifacts, Scheme::DqnSocp, initial, slots)?,
            run_baseline(ctx, baseline, slots)?,
        ])
    };
    Ok(FigureRuns {
        all_on: panel(InitialPattern::AllOn, Scheme::Ao)?,
        one_off: panel(InitialPattern::OneOff, Scheme::Oc)?,
    })
}

impl FigureRuns {
    pub fn write_instant(&self, path: &Path) -> Result<()> {
        self.write(path, |r, k| r.instant_w[k])
    }

    pub fn write_average(&self, path: &Path) -> Result<()> {
        self.write(path, |r, k| r.running_avg_w[k])
    }

    fn write(&self, path: &Path, value: impl Fn(&EvalReport, usize) -> f64) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "slot",
            "dqn_gbdt_all_on_w",
            "dqn_socp_all_on_w",
            "ao_w",
            "dqn_gbdt_one_off_w",
            "dqn_socp_one_off_w",
            "oc_w",
        ])?;
        let runs: Vec<&EvalReport> = self.all_on.iter().chain(&self.one_off).collect();
        for k in 0..runs[0].len() {
            let mut rec = vec![k.to_string()];
            rec.extend(runs.iter().map(|r| value(r, k).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
