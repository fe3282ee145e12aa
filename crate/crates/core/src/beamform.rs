//! Minimum transmit power downlink beamforming over the active RRHs.
//!
//! The active RRHs act as one distributed array with a single antenna each.
//! For per-user SINR targets the sum-power optimum is obtained through
//! uplink/downlink duality:
//!
//! 1. a virtual uplink power vector `q` is found as the least fixed point of
//!    `q_i = iota_i / (g_i^H (sigma^2 I + sum_{j != i} q_j g_j g_j^H)^{-1} g_i)`,
//!    iterated from `q = 0` (the iterates increase monotonically);
//! 2. the MMSE receivers of that uplink become the downlink beam directions;
//! 3. downlink powers solve the linear system that meets every SINR target
//!    with equality.
//!
//! Here `g_i = conj(h_i)`, so that `h_i^T w = g_i^H w` matches the SINR
//! definition in [`crate::netmodel::compute_sinr`]. Per-RRH caps are checked
//! after the sum-power optimum has been built; a violated cap is reported as
//! [`SolveStatus::InfeasibleCap`] instead of re-optimising.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::netmodel::{compute_sinr, ChannelRealization, NetworkConfig};
use crate::{Error, Result};

/// Uplink powers beyond `UNBOUNDED_FACTOR * sum(caps)` mean the SINR targets
/// cannot be met at any power.
pub const UNBOUNDED_FACTOR: f64 = 1e6;

/// Relative slack accepted on the per-RRH caps.
const CAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 500,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be > 0"));
        }
        if self.max_iterations < 1 {
            return Err(Error::config("max_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Feasible,
    InfeasibleSinr,
    InfeasibleCap,
    /// The fixed point neither converged nor grew without bound.
    SolverFailure,
}

#[derive(Debug, Clone)]
pub struct BeamformingProblem {
    pub active_set: Vec<usize>,
    /// Channel rows of the active RRHs, `(|A|, n)`.
    pub channel: DMatrix<Complex64>,
    pub sinr_targets: Vec<f64>,
    pub per_rrh_cap_w: Vec<f64>,
    pub noise_w: f64,
}

impl BeamformingProblem {
    pub fn new(
        active_set: Vec<usize>,
        channel: DMatrix<Complex64>,
        sinr_targets: Vec<f64>,
        per_rrh_cap_w: Vec<f64>,
        noise_w: f64,
    ) -> Result<Self> {
        if channel.nrows() != active_set.len() {
            return Err(Error::Dimension(format!(
                "{} channel rows for {} active RRHs",
                channel.nrows(),
                active_set.len()
            )));
        }
        if channel.ncols() != sinr_targets.len() {
            return Err(Error::Dimension(format!(
                "{} channel columns for {} SINR targets",
                channel.ncols(),
                sinr_targets.len()
            )));
        }
        if per_rrh_cap_w.len() != active_set.len() {
            return Err(Error::Dimension(format!(
                "{} caps for {} active RRHs",
                per_rrh_cap_w.len(),
                active_set.len()
            )));
        }
        if sinr_targets.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Domain("SINR targets must be finite and >= 0".into()));
        }
        if !(noise_w > 0.0) {
            return Err(Error::Domain("noise power must be > 0".into()));
        }
        Ok(Self {
            active_set,
            channel,
            sinr_targets,
            per_rrh_cap_w,
            noise_w,
        })
    }

    /// Builds the problem for an RRH on/off pattern and demand vector.
    pub fn from_state(
        channel: &ChannelRealization,
        pattern: &[bool],
        demands_mbps: &[f64],
        config: &NetworkConfig,
    ) -> Result<Self> {
        if pattern.len() != channel.num_rrhs() || demands_mbps.len() != channel.num_users() {
            return Err(Error::Dimension(format!(
                "pattern {} / demands {} vs channel {:?}",
                pattern.len(),
                demands_mbps.len(),
                channel.gains().shape()
            )));
        }
        let active: Vec<usize> = (0..pattern.len()).filter(|&r| pattern[r]).collect();
        let (iota, _) = sinr_targets(demands_mbps, config);
        let caps = vec![config.max_tx_power_w; active.len()];
        Self::new(
            active.clone(),
            channel.restrict_rows(&active),
            iota,
            caps,
            config.noise_power_w,
        )
    }

    pub fn num_users(&self) -> usize {
        self.sinr_targets.len()
    }
}

#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    /// Weights `(|A|, n)`; unserved users get zero columns.
    pub weights: DMatrix<Complex64>,
    pub total_tx_w: f64,
    pub per_rrh_tx_w: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Largest relative deviation of an achieved SINR from its target.
    pub residual: f64,
}

impl BeamformingSolution {
    fn empty(problem: &BeamformingProblem, status: SolveStatus, iterations: usize) -> Self {
        Self {
            weights: DMatrix::zeros(problem.active_set.len(), problem.num_users()),
            total_tx_w: 0.0,
            per_rrh_tx_w: vec![0.0; problem.active_set.len()],
            status,
            iterations,
            residual: 0.0,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }

    /// Scatters the per-RRH powers of the active set into a length-`m` vector.
    pub fn per_rrh_full(&self, active_set: &[usize], num_rrhs: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_rrhs];
        for (k, &r) in active_set.iter().enumerate() {
            out[r] = self.per_rrh_tx_w[k];
        }
        out
    }
}

/// Per-user targets `iota = margin (2^(R/B) - 1)` and `mu = (iota + 1) / iota`
/// (`+inf` when `iota = 0`).
pub fn sinr_targets(demands_mbps: &[f64], config: &NetworkConfig) -> (Vec<f64>, Vec<f64>) {
    let iota: Vec<f64> = demands_mbps
        .iter()
        .map(|&r| config.sinr_margin * ((r * 1e6 / config.bandwidth_hz).exp2() - 1.0))
        .collect();
    let mu = iota
        .iter()
        .map(|&i| if i > 0.0 { (i + 1.0) / i } else { f64::INFINITY })
        .collect();
    (iota, mu)
}

pub fn solve_beamforming(
    problem: &BeamformingProblem,
    params: &SolverParams,
) -> Result<BeamformingSolution> {
    solve_impl(problem, params, None)
}

/// Runs the solver and also returns every uplink power iterate (starting
/// with the zero vector), indexed by served user.
pub fn solve_with_trace(
    problem: &BeamformingProblem,
    params: &SolverParams,
) -> Result<(BeamformingSolution, Vec<Vec<f64>>)> {
    let mut trace = Vec::new();
    let sol = solve_impl(problem, params, Some(&mut trace))?;
    Ok((sol, trace))
}

fn solve_impl(
    problem: &BeamformingProblem,
    params: &SolverParams,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<BeamformingSolution> {
    params.validate()?;
    let served: Vec<usize> = (0..problem.num_users())
        .filter(|&u| problem.sinr_targets[u] > 0.0)
        .collect();
    if served.is_empty() {
        return Ok(BeamformingSolution::empty(problem, SolveStatus::Feasible, 0));
    }
    let na = problem.active_set.len();
    if na == 0 {
        return Ok(BeamformingSolution::empty(problem, SolveStatus::InfeasibleSinr, 0));
    }

    // Effective channels normalised by the noise amplitude, so the noise
    // covariance becomes the identity and powers stay in watts.
    let scale = 1.0 / problem.noise_w.sqrt();
    let g: Vec<DVector<Complex64>> = served
        .iter()
        .map(|&u| problem.channel.column(u).map(|h| h.conj() * scale))
        .collect();
    let iota: Vec<f64> = served.iter().map(|&u| problem.sinr_targets[u]).collect();
    let ns = served.len();
    let cap_sum: f64 = problem.per_rrh_cap_w.iter().sum();
    let blowup = UNBOUNDED_FACTOR * cap_sum;

    let mut q = vec![0.0; ns];
    if let Some(t) = trace.as_deref_mut() {
        t.push(q.clone());
    }
    let mut converged = false;
    let mut non_monotone = false;
    let mut iterations = 0;
    for it in 1..=params.max_iterations {
        iterations = it;
        let mut next = vec![0.0; ns];
        for i in 0..ns {
            let mut cov = DMatrix::<Complex64>::identity(na, na);
            for j in 0..ns {
                if j != i && q[j] > 0.0 {
                    cov.gerc(Complex64::new(q[j], 0.0), &g[j], &g[j], Complex64::new(1.0, 0.0));
                }
            }
            let gain = quad_form_inverse(&cov, &g[i])?;
            next[i] = iota[i] / gain;
        }
        let mut change: f64 = 0.0;
        for i in 0..ns {
            if next[i] < q[i] * (1.0 - 1e-12) {
                non_monotone = true;
            }
            if next[i] > 0.0 {
                change = change.max((next[i] - q[i]).abs() / next[i]);
            }
        }
        q = next;
        if let Some(t) = trace.as_deref_mut() {
            t.push(q.clone());
        }
        if q.iter().any(|v| !v.is_finite() || *v > blowup) {
            return Ok(BeamformingSolution::empty(problem, SolveStatus::InfeasibleSinr, it));
        }
        if change < params.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        let status = if non_monotone {
            SolveStatus::SolverFailure
        } else {
            SolveStatus::InfeasibleSinr
        };
        return Ok(BeamformingSolution::empty(problem, status, iterations));
    }

    // MMSE directions from the converged uplink covariance.
    let mut cov = DMatrix::<Complex64>::identity(na, na);
    for j in 0..ns {
        cov.gerc(Complex64::new(q[j], 0.0), &g[j], &g[j], Complex64::new(1.0, 0.0));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SolverFailure("uplink covariance not positive definite".into()))?;
    let dirs: Vec<DVector<Complex64>> = g
        .iter()
        .map(|gi| {
            let v = chol.solve(gi);
            let norm = v.norm();
            v / Complex64::new(norm, 0.0)
        })
        .collect();

    // Downlink powers meeting every target with equality.
    let coupling = DMatrix::from_fn(ns, ns, |i, j| g[i].dotc(&dirs[j]).norm_sqr());
    let system = DMatrix::from_fn(ns, ns, |i, j| {
        if i == j {
            coupling[(i, i)] / iota[i]
        } else {
            -coupling[(i, j)]
        }
    });
    let rhs = DVector::from_element(ns, 1.0);
    let p = match system.lu().solve(&rhs) {
        Some(p) => p,
        None => return Ok(BeamformingSolution::empty(problem, SolveStatus::InfeasibleSinr, iterations)),
    };
    if p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Ok(BeamformingSolution::empty(problem, SolveStatus::InfeasibleSinr, iterations));
    }

    let mut weights = DMatrix::<Complex64>::zeros(na, problem.num_users());
    for (k, &u) in served.iter().enumerate() {
        let amp = Complex64::new(p[k].sqrt(), 0.0);
        for r in 0..na {
            weights[(r, u)] = dirs[k][r] * amp;
        }
    }
    let per_rrh_tx_w: Vec<f64> = (0..na)
        .map(|r| weights.row(r).iter().map(|w| w.norm_sqr()).sum())
        .collect();
    let total_tx_w = per_rrh_tx_w.iter().sum();

    let mut residual: f64 = 0.0;
    for (i, gi) in g.iter().enumerate() {
        let mut interference = 0.0;
        for (j, dj) in dirs.iter().enumerate() {
            if j != i {
                interference += p[j] * gi.dotc(dj).norm_sqr();
            }
        }
        let sinr = p[i] * coupling[(i, i)] / (interference + 1.0);
        residual = residual.max((sinr - iota[i]).abs() / iota[i]);
    }

    let over_cap = per_rrh_tx_w
        .iter()
        .zip(&problem.per_rrh_cap_w)
        .any(|(&p, &cap)| p > cap * (1.0 + CAP_TOLERANCE));
    let status = if over_cap {
        SolveStatus::InfeasibleCap
    } else {
        SolveStatus::Feasible
    };
    Ok(BeamformingSolution {
        weights,
        total_tx_w,
        per_rrh_tx_w,
        status,
        iterations,
        residual,
    })
}

/// `g^H A^{-1} g` for Hermitian positive definite `A`.
fn quad_form_inverse(a: &DMatrix<Complex64>, g: &DVector<Complex64>) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SolverFailure("interference covariance not positive definite".into()))?;
    let x = chol.solve(g);
    Ok(g.dotc(&x).re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Worst relative shortfall below an SINR target (0 when all are met).
    pub max_sinr_violation: f64,
    /// Worst relative excess above an SINR target.
    pub max_sinr_slack: f64,
    /// Worst per-RRH power above its cap, in watts.
    pub max_cap_violation_w: f64,
    pub sinr_ok: bool,
    pub caps_ok: bool,
    /// Every served user sits on its target within the tolerance.
    pub tight: bool,
    pub power_consistent: bool,
}

impl VerificationReport {
    pub fn valid(&self) -> bool {
        self.sinr_ok && self.caps_ok && self.power_consistent
    }
}

/// Recomputes every SINR and per-RRH power of a solution from scratch.
pub fn verify_solution(
    solution: &BeamformingSolution,
    problem: &BeamformingProblem,
    tol: f64,
) -> Result<VerificationReport> {
    let channel = ChannelRealization::new(problem.channel.clone())?;
    let mut violation: f64 = 0.0;
    let mut slack: f64 = 0.0;
    for (u, &target) in problem.sinr_targets.iter().enumerate() {
        if target <= 0.0 {
            continue;
        }
        let sinr = compute_sinr(&solution.weights, &channel, u, problem.noise_w)?;
        let rel = (sinr - target) / target;
        if rel < 0.0 {
            violation = violation.max(-rel);
        } else {
            slack = slack.max(rel);
        }
    }
    let mut cap_violation: f64 = 0.0;
    let mut total = 0.0;
    for (r, &cap) in problem.per_rrh_cap_w.iter().enumerate() {
        let p: f64 = solution.weights.row(r).iter().map(|w| w.norm_sqr()).sum();
        total += p;
        cap_violation = cap_violation.max(p - cap);
    }
    let power_consistent =
        (total - solution.total_tx_w).abs() <= tol * total.max(solution.total_tx_w).max(f64::MIN_POSITIVE);
    Ok(VerificationReport {
        max_sinr_violation: violation,
        max_sinr_slack: slack,
        max_cap_violation_w: cap_violation.max(0.0),
        sinr_ok: violation <= tol,
        caps_ok: cap_violation <= tol * problem.per_rrh_cap_w.iter().cloned().fold(0.0, f64::max),
        tight: violation <= tol && slack <= tol,
        power_consistent,
    })
}
