//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use cran_core::beamform::{solve_beamforming, verify_solution, BeamformingProblem, SolverParams};
use cran_core::env::{Environment, ExactSolver, PowerOracle};
use cran_core::gbdt::{self, GbdtParams, RegressionDataset};
use cran_core::netmodel::{sample_channel, sample_demands, total_power, NetworkConfig};
use cran_core::pipeline::{
    bench_size, channel_for, ete_compare, fit_panel, fit_surrogate, gen_dataset, run_baseline,
    run_online, train_offline, EvalContext, PatternSampler, RunConfig, Scheme,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn default_config() -> RunConfig {
    RunConfig::load(&root().join("configs/default.toml")).unwrap()
}

fn c1_single_user() -> Outcome {
    let gap = common::single_user_gap(100, 2024);
    outcome(gap <= 1e-6, format!("max relative gap {gap:.2e} (tol 1e-6)"))
}

fn c2_search_oracle() -> Outcome {
    let cfg = NetworkConfig {
        num_rrhs: 3,
        num_users: 2,
        ..NetworkConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut found, mut worst_gain, mut worst_gap, mut worst_tight) = (0, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let mut attempts = 0;
    while found < 20 {
        attempts += 1;
        assert!(attempts < 10_000, "no feasible instances");
        let ch = sample_channel(&cfg, &mut rng).unwrap();
        let demands = sample_demands(&cfg, &mut rng);
        let problem = BeamformingProblem::from_state(&ch, &[true; 3], &demands, &cfg).unwrap();
        let sol = solve_beamforming(&problem, &SolverParams::default()).unwrap();
        if !sol.is_feasible() {
            continue;
        }
        let Some(best) =
            common::random_search_power(&problem.channel, &problem.sinr_targets, cfg.noise_power_w, 1_000_000, attempts)
        else {
            continue;
        };
        found += 1;
        let rep = verify_solution(&sol, &problem, 1e-6).unwrap();
        // positive gain means the search beat the solver
        worst_gain = worst_gain.max((sol.total_tx_w - best) / best);
        worst_gap = worst_gap.max((best - sol.total_tx_w) / sol.total_tx_w);
        worst_tight = worst_tight.max(rep.max_sinr_violation.max(rep.max_sinr_slack));
    }
    let pass = worst_gain <= 1e-9 && worst_gap <= 0.005 && worst_tight <= 1e-6;
    outcome(
        pass,
        format!(
            "20 instances: search never below solver (worst {worst_gain:.1e}), search within {:.3}% of solver, SINR deviation {worst_tight:.1e}",
            100.0 * worst_gap
        ),
    )
}

fn c3_gbdt_fit() -> Outcome {
    let mut cfg = default_config();
    cfg.dataset_size = 20_000;
    let ch = channel_for(&cfg.network, cfg.seeds.channel).unwrap();
    let data = gen_dataset(&cfg.network, &ch, cfg.dataset_size, cfg.seeds.data, PatternSampler::UniformNonEmpty).unwrap();
    let (_, _, report, _) = fit_surrogate(&cfg, &data).unwrap();
    cfg.run.panel_size = 20_000;
    let (panel, _) = fit_panel(&cfg, &ch, PatternSampler::AllOn, "all-on", 1).unwrap();
    let r2 = report.power_holdout.r2;
    outcome(
        r2 >= 0.90 && panel.r2 >= 0.95,
        format!("held-out R^2 random {r2:.4} (>= 0.90), all-on {:.4} (>= 0.95)", panel.r2),
    )
}

fn c4_speedup() -> Outcome {
    let mut cfg = default_config();
    cfg.bench.inputs = 1000;
    let row = bench_size(&cfg, &cfg.network).unwrap();
    outcome(
        row.speedup >= 10.0,
        format!(
            "8x4 over 1000 inputs: surrogate {:.2} us, solver {:.2} us, speedup {:.1}x (>= 10x)",
            row.gbdt_s * 1e6,
            row.socp_s * 1e6,
            row.speedup
        ),
    )
}

fn c5_c6_policy() -> (Outcome, Outcome) {
    let cfg = default_config();
    let ch = channel_for(&cfg.network, cfg.seeds.channel).unwrap();
    let t0 = Instant::now();
    let data = gen_dataset(&cfg.network, &ch, cfg.dataset_size, cfg.seeds.data, PatternSampler::UniformNonEmpty).unwrap();
    let trained = train_offline(&cfg, &data, &ch).unwrap();
    let train_s = t0.elapsed().as_secs_f64();
    let art = &trained.artifacts;
    let ctx = EvalContext::new(&cfg, &ch);
    let slots = cfg.eval_slots;

    let dqn = run_online(&ctx, art, Scheme::DqnGbdt, cfg.run.initial_pattern, slots).unwrap();
    let ao = run_baseline(&ctx, Scheme::Ao, slots).unwrap();
    let oc = run_baseline(&ctx, Scheme::Oc, slots).unwrap();
    let (d, a, o) = (dqn.average_w(), ao.average_w(), oc.average_w());
    let margin = a - d;
    let c5 = outcome(
        d < a && d < o && margin >= 4.0,
        format!(
            "{slots} slots: DQN-GBDT {d:.2} W, AO {a:.2} W, OC {o:.2} W, margin vs AO {margin:.2} W (>= 4), {} infeasible, trained in {train_s:.0} s",
            dqn.infeasible_slots()
        ),
    );

    let ete = ete_compare(&ctx, art, slots).unwrap().summary();
    let c6 = outcome(
        ete.relative_gap <= 0.05,
        format!(
            "{} paired slots: GBDT {:.2} W, SOCP {:.2} W, gap {:.3}% (<= 5%)",
            ete.slots,
            ete.gbdt_average_w,
            ete.socp_average_w,
            100.0 * ete.relative_gap
        ),
    );
    (c5, c6)
}

fn c7_gradient() -> Outcome {
    let err = common::gradient_check(0);
    outcome(err <= 1e-4, format!("[12,16,9], 10 inputs: max relative error {err:.2e} (<= 1e-4)"))
}

fn c8_monotone() -> Outcome {
    let mut violations = 0;
    let mut rounds = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..6).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| r[0] * r[1] + (3.0 * r[2]).sin() + rng.random_range(-0.3..0.3))
            .collect();
        let data = RegressionDataset::from_rows(&rows, y).unwrap();
        let params = GbdtParams {
            num_rounds: 200,
            lambda_leaf: 0.0,
            step_length: 0.1,
            seed,
            ..GbdtParams::default()
        };
        let model = gbdt::train(&data, &params).unwrap();
        rounds += model.train_mse.len() - 1;
        violations += model.train_mse.windows(2).filter(|w| w[1] > w[0]).count();
    }
    outcome(violations == 0, format!("5 datasets, {rounds} rounds, {violations} increases"))
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    let cfg = root().join("configs/smoke.toml");
    Command::new(env!("CARGO_BIN_EXE_cran"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .env("RUST_LOG", "error")
        .status()
        .is_ok_and(|s| s.success())
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .filter(|(name, _)| !name.starts_with("timing") && name != "timing_table.csv")
        .map(|(name, p)| (name, std::fs::read(p).unwrap()))
        .collect()
}

fn c9_determinism() -> Outcome {
    let commands: [&[&str]; 6] = [
        &["gen-data"],
        &["train"],
        &["evaluate", "--figures", "--sweep"],
        &["baseline"],
        &["ete"],
        &["bench"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        for c in commands {
            if !run_cli(d.path(), c) {
                return outcome(false, format!("`cran {}` failed", c.join(" ")));
            }
        }
    }
    let (a, b) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()));
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    outcome(
        differing.is_empty() && a.len() == b.len(),
        format!("{} non-timing files compared, differing: {differing:?}", a.len()),
    )
}

fn c10_accounting() -> Outcome {
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let prev: Vec<bool> = (0..8).map(|_| rng.random()).collect();
        let next: Vec<bool> = (0..8).map(|_| rng.random()).collect();
        let tx: Vec<f64> = next.iter().map(|&on| if on { rng.random_range(0.0..1.0) } else { 0.0 }).collect();
        let p = total_power(&prev, &next, &tx, &cfg).unwrap();
        if p.total_w != p.transmit_w + p.state_w + p.transition_w {
            mismatches += 1;
        }
    }
    let zero = NetworkConfig {
        demand_min_mbps: 0.0,
        demand_max_mbps: 0.0,
        ..NetworkConfig::default()
    };
    let ch = sample_channel(&zero, &mut rng).unwrap();
    let oracle: Arc<dyn PowerOracle> = Arc::new(ExactSolver::new(zero.clone(), ch));
    let mut env = Environment::new(zero, oracle, &[true; 8], 0).unwrap();
    let ao = env.step(8).unwrap().power.total_w;
    outcome(
        mismatches == 0 && (ao - 54.4).abs() < 1e-9,
        format!("10^4 draws, {mismatches} mismatches; AO zero-demand power {ao:.12} W"),
    )
}

type Row = (usize, &'static str, Outcome);
type Criterion = (usize, &'static str, fn() -> Outcome);

fn report(results: &mut Vec<Row>, n: usize, name: &'static str, o: Outcome, secs: &str) {
    println!(
        "criterion {n:>2} {} {name}: {} [{secs}]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    results.push((n, name, o));
}

fn main() {
    let mut results: Vec<Row> = Vec::new();
    let timed: [Criterion; 4] = [
        (1, "solver single-user analytic", c1_single_user),
        (2, "solver vs random search", c2_search_oracle),
        (3, "gbdt fit", c3_gbdt_fit),
        (4, "surrogate speedup", c4_speedup),
    ];
    for (n, name, f) in timed {
        let t0 = Instant::now();
        let o = f();
        report(&mut results, n, name, o, &format!("{:.1} s", t0.elapsed().as_secs_f64()));
    }
    let t0 = Instant::now();
    let (c5, c6) = c5_c6_policy();
    let shared = format!("{:.1} s shared", t0.elapsed().as_secs_f64());
    report(&mut results, 5, "policy quality", c5, &shared);
    report(&mut results, 6, "error tolerance", c6, &shared);
    let rest: [Criterion; 4] = [
        (7, "gradient check", c7_gradient),
        (8, "boosting monotonicity", c8_monotone),
        (9, "determinism", c9_determinism),
        (10, "power accounting", c10_accounting),
    ];
    for (n, name, f) in rest {
        let t0 = Instant::now();
        let o = f();
        report(&mut results, n, name, o, &format!("{:.1} s", t0.elapsed().as_secs_f64()));
    }

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
