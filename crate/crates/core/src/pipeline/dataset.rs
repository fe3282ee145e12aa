use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::beamform::{solve_beamforming, BeamformingProblem, SolveStatus, SolverParams};
use crate::gbdt::{FeatureMatrix, RegressionDataset};
use crate::netmodel::{sample_demands, state_features, ChannelRealization, NetworkConfig};
use crate::rng::{seeded, stream, SimRng};
use crate::{Error, Result};

/// How dataset rows pick their RRH pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternSampler {
    /// Uniform over the `2^m - 1` non-empty active sets.
    UniformNonEmpty,
    AllOn,
    /// Exactly one RRH asleep, chosen uniformly per row.
    OneOff,
}

impl PatternSampler {
    pub fn sample(self, m: usize, rng: &mut SimRng) -> Vec<bool> {
        match self {
            PatternSampler::UniformNonEmpty => {
                let bits: u64 = rng.random_range(1..(1u64 << m));
                (0..m).map(|i| bits >> i & 1 == 1).collect()
            }
            PatternSampler::AllOn => vec![true; m],
            PatternSampler::OneOff => {
                let off = rng.random_range(0..m);
                (0..m).map(|i| i != off).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub pattern: Vec<bool>,
    pub demands_mbps: Vec<f64>,
    /// Minimal radiated power; `None` when the pattern cannot serve the demands.
    pub p_tx_w: Option<f64>,
}

impl DatasetRow {
    pub fn feasible(&self) -> bool {
        self.p_tx_w.is_some()
    }

    pub fn features(&self) -> Vec<f64> {
        state_features(&self.pattern, &self.demands_mbps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_rrhs: usize,
    pub num_users: usize,
    pub rows: Vec<DatasetRow>,
    /// Rows dropped because the solver failed to converge.
    pub solver_failures: usize,
}

/// Solves one row exactly. `Ok(None)` marks a solver failure.
pub fn solve_row(
    config: &NetworkConfig,
    channel: &ChannelRealization,
    pattern: Vec<bool>,
    demands_mbps: Vec<f64>,
) -> Result<Option<DatasetRow>> {
    let problem = BeamformingProblem::from_state(channel, &pattern, &demands_mbps, config)?;
    let sol = solve_beamforming(&problem, &SolverParams::default())?;
    let p_tx_w = match sol.status {
        SolveStatus::Feasible => Some(sol.total_tx_w),
        SolveStatus::InfeasibleSinr | SolveStatus::InfeasibleCap => None,
        SolveStatus::SolverFailure => return Ok(None),
    };
    Ok(Some(DatasetRow {
        pattern,
        demands_mbps,
        p_tx_w,
    }))
}

/// Draws `count` random states and labels them with the exact solver. Row
/// `i` uses its own stream derived from `seed`, and rows come back in index
/// order, so the result does not depend on the thread pool.
pub fn gen_dataset(
    config: &NetworkConfig,
    channel: &ChannelRealization,
    count: usize,
    seed: u64,
    sampler: PatternSampler,
) -> Result<Dataset> {
    config.validate()?;
    let m = config.num_rrhs;
    let solved: Vec<Result<Option<DatasetRow>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(seed, stream::DATASET_ROW + i as u64);
            let pattern = sampler.sample(m, &mut rng);
            let demands = sample_demands(config, &mut rng);
            solve_row(config, channel, pattern, demands)
        })
        .collect();
    let mut rows = Vec::with_capacity(count);
    let mut solver_failures = 0;
    for (i, r) in solved.into_iter().enumerate() {
        match r? {
            Some(row) => rows.push(row),
            None => {
                log::warn!("dataset row {i}: solver failed to converge, skipped");
                solver_failures += 1;
            }
        }
    }
    Ok(Dataset {
        num_rrhs: m,
        num_users: config.num_users,
        rows,
        solver_failures,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_feasible(&self) -> usize {
        self.rows.iter().filter(|r| r.feasible()).count()
    }

    fn matrix(&self, rows: &[&DatasetRow]) -> Result<FeatureMatrix> {
        let width = self.num_rrhs + self.num_users;
        let mut flat = Vec::with_capacity(rows.len() * width);
        for r in rows {
            flat.extend(r.features());
        }
        FeatureMatrix::from_flat(flat, rows.len(), width)
    }

    /// Feasible rows against their transmit power.
    pub fn regression(&self, idx: &[usize]) -> Result<RegressionDataset> {
        let rows: Vec<&DatasetRow> = idx.iter().map(|&i| &self.rows[i]).filter(|r| r.feasible()).collect();
        let y = rows.iter().map(|r| r.p_tx_w.unwrap()).collect();
        RegressionDataset::new(self.matrix(&rows)?, y)
    }

    /// All rows against 0/1 feasibility labels.
    pub fn feasibility(&self, idx: &[usize]) -> Result<RegressionDataset> {
        let rows: Vec<&DatasetRow> = idx.iter().map(|&i| &self.rows[i]).collect();
        let y = rows.iter().map(|r| if r.feasible() { 1.0 } else { 0.0 }).collect();
        RegressionDataset::new(self.matrix(&rows)?, y)
    }

    pub fn header(num_rrhs: usize, num_users: usize) -> Vec<String> {
        (1..=num_rrhs)
            .map(|i| format!("y_{i}"))
            .chain((1..=num_users).map(|i| format!("d_{i}")))
            .chain(["p_tx_w".to_string(), "feasible".to_string()])
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(Self::header(self.num_rrhs, self.num_users))?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.pattern.iter().map(|&b| (b as u8).to_string()).collect();
            rec.extend(r.demands_mbps.iter().map(|d| d.to_string()));
            rec.push(r.p_tx_w.map_or_else(String::new, |p| p.to_string()));
            rec.push((r.feasible() as u8).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let num_rrhs = header.iter().filter(|h| h.starts_with("y_")).count();
        let num_users = header.iter().filter(|h| h.starts_with("d_")).count();
        if header != Self::header(num_rrhs, num_users) {
            return Err(Error::Parse(format!("{}: unexpected dataset header", path.display())));
        }
        let parse = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}:{line}: {e}", path.display())))
        };
        let mut rows = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let mut pattern = Vec::with_capacity(num_rrhs);
            for i in 0..num_rrhs {
                pattern.push(parse(&rec[i], line)? != 0.0);
            }
            let mut demands_mbps = Vec::with_capacity(num_users);
            for i in 0..num_users {
                demands_mbps.push(parse(&rec[num_rrhs + i], line)?);
            }
            let feasible = parse(&rec[num_rrhs + num_users + 1], line)? != 0.0;
            let p = &rec[num_rrhs + num_users];
            let p_tx_w = if feasible { Some(parse(p, line)?) } else { None };
            rows.push(DatasetRow {
                pattern,
                demands_mbps,
                p_tx_w,
            });
        }
        Ok(Self {
            num_rrhs,
            num_users,
            rows,
            solver_failures: 0,
        })
    }
}
