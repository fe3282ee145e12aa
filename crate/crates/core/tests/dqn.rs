#![allow(clippy::needless_range_loop)]

mod common;

use cran_core::dqn::{
    compute_targets, select_action, sync_target, train_step, Optimizer, OptimizerKind, QNetwork,
    ReplayBuffer, Transition,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn backprop_matches_central_differences() {
    for seed in 0..3 {
        let err = common::gradient_check(seed);
        assert!(err <= 1e-4, "seed {seed}: {err}");
    }
}

fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2];
    v[s] = 1.0;
    v
}

/// Deterministic 2-state, 2-action MDP: action `a` moves to state `a`.
const REWARD: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 2.0]];

fn value_iteration(gamma: f64) -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..2000 {
        let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
        for s in 0..2 {
            for a in 0..2 {
                q[s][a] = REWARD[s][a] + gamma * v[a];
            }
        }
    }
    q
}

#[test]
fn two_state_mdp_converges_to_value_iteration() {
    let gamma = 0.5;
    let oracle = value_iteration(gamma);
    let data: Vec<Transition> = (0..2)
        .flat_map(|s| {
            (0..2).map(move |a| Transition {
                state: one_hot(s),
                action: a,
                reward: REWARD[s][a],
                next_state: one_hot(a),
                terminal: false,
            })
        })
        .collect();
    let batch: Vec<&Transition> = data.iter().collect();
    let mut net = QNetwork::zeros(&[2, 2]).unwrap();
    let mut opt = Optimizer::sgd(0.5);
    let mut target = sync_target(&net);
    let mut loss = f64::INFINITY;
    for _ in 0..500 {
        loss = train_step(&mut net, &target, &batch, gamma, &mut opt).unwrap();
        target = sync_target(&net);
    }
    assert!(loss < 1e-3, "loss {loss}");
    for s in 0..2 {
        let q = net.forward(&one_hot(s)).unwrap();
        for a in 0..2 {
            assert!((q[a] - oracle[s][a]).abs() < 1e-2, "Q({s},{a}) = {} vs {}", q[a], oracle[s][a]);
        }
    }
}

#[test]
fn uniform_exploration_frequencies() {
    let m = 8;
    let net = QNetwork::zeros(&[4, m + 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let mut counts = vec![0usize; m + 1];
    for _ in 0..n {
        counts[select_action(&net, &[0.0; 4], 1.0, &mut rng).unwrap()] += 1;
    }
    let p = 1.0 / (m + 1) as f64;
    for (a, &c) in counts.iter().enumerate() {
        let f = c as f64 / n as f64;
        assert!((f - p).abs() <= 0.02 * p, "action {a}: {f}");
    }
}

#[test]
fn greedy_selection_draws_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = QNetwork::zeros(&[1, 3]).unwrap();
    let last = net.params().len() - 1;
    net.params_mut()[last] = 1.0;
    let before = rng.clone();
    assert_eq!(select_action(&net, &[0.5], 0.0, &mut rng).unwrap(), 2);
    assert_eq!(format!("{rng:?}"), format!("{before:?}"));
}

#[test]
fn replay_sampling_is_uniform() {
    let mut buf = ReplayBuffer::new(10).unwrap();
    for k in 0..10 {
        buf.push(Transition {
            state: vec![k as f64],
            action: 0,
            reward: k as f64,
            next_state: vec![0.0],
            terminal: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 100_000;
    let mut counts = [0usize; 10];
    for _ in 0..draws {
        for t in buf.sample(3, &mut rng).unwrap() {
            counts[t.reward as usize] += 1;
        }
    }
    let expect = draws as f64 * 3.0 / 10.0;
    for (k, &c) in counts.iter().enumerate() {
        assert!((c as f64 - expect).abs() <= 0.02 * expect, "item {k}: {c}");
    }
}

#[test]
fn momentum_and_adam_descend_a_quadratic() {
    for kind in [
        OptimizerKind::Sgd,
        OptimizerKind::Momentum { beta: 0.9 },
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 },
    ] {
        let mut opt = Optimizer::new(kind, 0.05, 2);
        let mut p = vec![3.0, -2.0];
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            opt.apply(&mut p, &g);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2), "{kind:?}: {p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn terminal_targets_ignore_the_future(r in -5.0f64..5.0, gamma in 0.0f64..1.0, seed in 0u64..1000) {
        let net = QNetwork::new(&[3, 4, 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let t = Transition { state: vec![0.0; 3], action: 1, reward: r, next_state: vec![1.0, -1.0, 0.5], terminal: true };
        prop_assert_eq!(compute_targets(&[&t], &net, gamma).unwrap(), vec![r]);
        let nt = Transition { terminal: false, ..t };
        let q = net.forward(&nt.next_state).unwrap();
        let y = compute_targets(&[&nt], &net, gamma).unwrap()[0];
        prop_assert!((y - (r + gamma * q[0].max(q[1]))).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip(n in 0usize..40, cap in 1usize..20) {
        let mut buf = ReplayBuffer::new(cap).unwrap();
        for k in 0..n {
            buf.push(Transition { state: vec![k as f64, 0.5], action: k % 3, reward: -(k as f64), next_state: vec![1.0, 2.0], terminal: k % 2 == 0 });
        }
        prop_assert_eq!(buf.len(), n.min(cap));
        let mut bytes = Vec::new();
        buf.write_to(&mut bytes).unwrap();
        let back = ReplayBuffer::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, buf);
    }

    #[test]
    fn forward_is_finite(x in prop::collection::vec(-1e3f64..1e3, 5), seed in 0u64..1000) {
        let net = QNetwork::new(&[5, 8, 8, 3], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(net.forward(&x).unwrap().iter().all(|v| v.is_finite()));
    }
}
