//! The sleep-control environment: one RRH flip (or none) per slot, demands
//! redrawn every slot, reward `P_UB - P_total`.

use std::fmt::Debug;
use std::io::Write;
use std::sync::Arc;

use crate::beamform::{solve_beamforming, BeamformingProblem, SolveStatus, SolverParams};
use crate::gbdt::GbdtModel;
use crate::netmodel::{
    pattern_bits, power_accounting, sample_demands, state_features, ChannelRealization,
    NetworkConfig, PowerBreakdown, SystemState,
};
use crate::rng::{seeded, stream, SimRng};
use crate::{Error, Result};

/// Flips RRH `action`, or leaves the pattern alone when `action == m`.
pub fn apply_action(pattern: &[bool], action: usize) -> Result<Vec<bool>> {
    let m = pattern.len();
    if action > m {
        return Err(Error::Domain(format!("action {action} outside [0, {m}]")));
    }
    let mut next = pattern.to_vec();
    if action < m {
        next[action] = !next[action];
    }
    Ok(next)
}

/// `m (P_A + P_max / eta + P_T)`: every RRH active at full power and switching.
pub fn p_upper_bound(config: &NetworkConfig) -> f64 {
    config.num_rrhs as f64
        * (config.active_power_w
            + config.max_tx_power_w / config.amplifier_efficiency
            + config.transition_power_w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub feasible: bool,
    /// Summed radiated power of the active RRHs; zero when infeasible.
    pub radiated_w: f64,
}

/// Source of the minimal transmit power for a pattern and demand vector.
pub trait PowerOracle: Debug + Send + Sync {
    fn evaluate(&self, pattern: &[bool], demands_mbps: &[f64]) -> Result<OracleOutcome>;
}

/// Solves the beamforming problem exactly.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    pub config: NetworkConfig,
    pub channel: ChannelRealization,
    pub params: SolverParams,
}

impl ExactSolver {
    pub fn new(config: NetworkConfig, channel: ChannelRealization) -> Self {
        Self {
            config,
            channel,
            params: SolverParams::default(),
        }
    }
}

impl PowerOracle for ExactSolver {
    fn evaluate(&self, pattern: &[bool], demands_mbps: &[f64]) -> Result<OracleOutcome> {
        let problem = BeamformingProblem::from_state(&self.channel, pattern, demands_mbps, &self.config)?;
        let sol = solve_beamforming(&problem, &self.params)?;
        match sol.status {
            SolveStatus::Feasible => Ok(OracleOutcome {
                feasible: true,
                radiated_w: sol.total_tx_w,
            }),
            SolveStatus::InfeasibleSinr | SolveStatus::InfeasibleCap => Ok(OracleOutcome {
                feasible: false,
                radiated_w: 0.0,
            }),
            SolveStatus::SolverFailure => Err(Error::SolverFailure(format!(
                "pattern {} demands {demands_mbps:?} after {} iterations",
                pattern_bits(pattern),
                sol.iterations
            ))),
        }
    }
}

/// Boosted-tree regression of the transmit power, gated by a second model
/// trained on 0/1 feasibility labels.
#[derive(Debug, Clone)]
pub struct GbdtSurrogate {
    pub power: GbdtModel,
    pub feasibility: GbdtModel,
    pub threshold: f64,
}

impl GbdtSurrogate {
    pub fn new(power: GbdtModel, feasibility: GbdtModel) -> Self {
        Self {
            power,
            feasibility,
            threshold: 0.5,
        }
    }
}

impl PowerOracle for GbdtSurrogate {
    fn evaluate(&self, pattern: &[bool], demands_mbps: &[f64]) -> Result<OracleOutcome> {
        // closed-form corner cases the models never saw
        if demands_mbps.iter().all(|&d| d <= 0.0) {
            return Ok(OracleOutcome {
                feasible: true,
                radiated_w: 0.0,
            });
        }
        if !pattern.iter().any(|&b| b) {
            return Ok(OracleOutcome {
                feasible: false,
                radiated_w: 0.0,
            });
        }
        let x = state_features(pattern, demands_mbps);
        if self.feasibility.predict(&x)? < self.threshold {
            return Ok(OracleOutcome {
                feasible: false,
                radiated_w: 0.0,
            });
        }
        Ok(OracleOutcome {
            feasible: true,
            radiated_w: self.power.predict(&x)?.max(0.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// State the action was taken in.
    pub state: SystemState,
    pub action: usize,
    /// New pattern with the freshly drawn demands for the next slot.
    pub next_state: SystemState,
    pub reward: f64,
    /// Transmit term is zero on infeasible slots.
    pub power: PowerBreakdown,
    pub feasible: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: NetworkConfig,
    oracle: Arc<dyn PowerOracle>,
    state: SystemState,
    p_upper_bound_w: f64,
    slot: usize,
    terminal: bool,
    rng: SimRng,
}

impl Environment {
    /// The seed drives the demand stream only, so environments with the same
    /// seed see identical demands whatever the oracle or policy.
    pub fn new(
        config: NetworkConfig,
        oracle: Arc<dyn PowerOracle>,
        initial_pattern: &[bool],
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut env = Self {
            p_upper_bound_w: p_upper_bound(&config),
            state: SystemState {
                rrh_active: vec![true; config.num_rrhs],
                demands_mbps: vec![0.0; config.num_users],
            },
            config,
            oracle,
            slot: 0,
            terminal: false,
            rng: seeded(seed, stream::DEMANDS),
        };
        env.reset(initial_pattern)?;
        Ok(env)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn p_upper_bound(&self) -> f64 {
        self.p_upper_bound_w
    }

    pub fn infeasibility_penalty(&self) -> f64 {
        -self.p_upper_bound_w
    }

    pub fn oracle(&self) -> &Arc<dyn PowerOracle> {
        &self.oracle
    }

    pub fn reset(&mut self, pattern: &[bool]) -> Result<SystemState> {
        if pattern.len() != self.config.num_rrhs {
            return Err(Error::Dimension(format!(
                "pattern of length {} for {} RRHs",
                pattern.len(),
                self.config.num_rrhs
            )));
        }
        self.state = SystemState {
            rrh_active: pattern.to_vec(),
            demands_mbps: sample_demands(&self.config, &mut self.rng),
        };
        self.slot = 0;
        self.terminal = false;
        Ok(self.state.clone())
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        let prev = self.state.clone();
        let next_pattern = apply_action(&prev.rrh_active, action)?;
        let outcome = self.oracle.evaluate(&next_pattern, &prev.demands_mbps)?;
        if !outcome.radiated_w.is_finite() {
            return Err(Error::NonFinite("oracle transmit power".into()));
        }
        let power = power_accounting(&prev.rrh_active, &next_pattern, outcome.radiated_w, &self.config)?;
        let reward = if outcome.feasible {
            self.p_upper_bound_w - power.total_w
        } else {
            self.infeasibility_penalty()
        };
        self.state = SystemState {
            rrh_active: next_pattern,
            demands_mbps: sample_demands(&self.config, &mut self.rng),
        };
        self.slot += 1;
        self.terminal = !outcome.feasible;
        Ok(StepResult {
            state: prev,
            action,
            next_state: self.state.clone(),
            reward,
            power,
            feasible: outcome.feasible,
            terminal: self.terminal,
        })
    }
}

/// Appends steps to a CSV trajectory log.
pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record([
            "slot",
            "action",
            "pattern",
            "demands_mbps",
            "transmit_w",
            "state_w",
            "transition_w",
            "total_w",
            "reward",
            "feasible",
        ])?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, slot: usize, r: &StepResult) -> Result<()> {
        let demands: Vec<String> = r.state.demands_mbps.iter().map(|d| d.to_string()).collect();
        self.inner.write_record([
            slot.to_string(),
            r.action.to_string(),
            pattern_bits(&r.next_state.rrh_active),
            demands.join(";"),
            r.power.transmit_w.to_string(),
            r.power.state_w.to_string(),
            r.power.transition_w.to_string(),
            r.power.total_w.to_string(),
            r.reward.to_string(),
            (r.feasible as u8).to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
