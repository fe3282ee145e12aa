#![allow(dead_code, clippy::needless_range_loop)]

use cran_core::dqn::QNetwork;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest relative error between backprop and central differences over
/// every parameter of a `[12, 16, 9]` network, ten inputs, one batch each.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [12, 16, 9];
    let mut net = QNetwork::new(&sizes, &mut rng).unwrap();
    for p in net.params_mut() {
        *p += rng.random_range(-0.05..0.05);
    }
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = rng.random_range(0..9);
        let y: f64 = rng.random_range(-2.0..2.0);
        let (_, grad) = net.loss_and_gradient(&[&x], &[a], &[y]).unwrap();
        for k in 0..net.params().len() {
            let orig = net.params()[k];
            net.params_mut()[k] = orig + h;
            let up = net.loss_and_gradient(&[&x], &[a], &[y]).unwrap().0;
            net.params_mut()[k] = orig - h;
            let down = net.loss_and_gradient(&[&x], &[a], &[y]).unwrap().0;
            net.params_mut()[k] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = grad[k].abs().max(fd.abs()).max(1e-8);
            worst = worst.max((grad[k] - fd).abs() / denom);
        }
    }
    worst
}

use cran_core::beamform::{solve_beamforming, BeamformingProblem, SolveStatus, SolverParams};
use cran_core::netmodel::{complex_normal, NetworkConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Worst relative gap between the solver and `iota * noise / |h|^2` over
/// `count` random single-user instances.
pub fn single_user_gap(count: usize, seed: u64) -> f64 {
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let m = rng.random_range(1..=8);
        let scale = 10f64.powf(rng.random_range(-7.0..-5.0));
        let h = DMatrix::from_fn(m, 1, |_, _| complex_normal(&mut rng) * scale);
        let rate: f64 = rng.random_range(5.0..40.0);
        let iota = (rate * 1e6 / cfg.bandwidth_hz).exp2() - 1.0;
        let norm2: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        let expect = iota * cfg.noise_power_w / norm2;
        let problem = BeamformingProblem::new(
            (0..m).collect(),
            h,
            vec![iota],
            vec![f64::INFINITY; m],
            cfg.noise_power_w,
        )
        .unwrap();
        let sol = solve_beamforming(&problem, &SolverParams::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible);
        worst = worst.max((sol.total_tx_w - expect).abs() / expect);
    }
    worst
}

/// Minimum total power for fixed unit beam directions, from the linear
/// SINR-equality system; `None` when no positive power vector exists.
fn power_for_directions(h: &DMatrix<Complex64>, u: &[Vec<Complex64>], iota: &[f64], noise: f64) -> Option<f64> {
    const MAX: usize = 4;
    let n = iota.len();
    assert!(n <= MAX);
    let mut a = [[0.0f64; MAX + 1]; MAX];
    for k in 0..n {
        for j in 0..n {
            let g = (0..h.nrows()).map(|r| h[(r, k)] * u[j][r]).sum::<Complex64>().norm_sqr();
            a[k][j] = if k == j { g / iota[k] } else { -g };
        }
        a[k][n] = noise;
    }
    // Gaussian elimination with partial pivoting
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[piv][c] == 0.0 {
            return None;
        }
        a.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..=n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    let mut p = [0.0; MAX];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * p[k]).sum();
        p[c] = (a[c][n] - s) / a[c][c];
    }
    if p[..n].iter().all(|&x| x > 0.0 && x.is_finite()) {
        Some(p[..n].iter().sum())
    } else {
        None
    }
}

fn random_direction(m: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    normalize((0..m).map(|_| complex_normal(rng)).collect())
}

fn normalize(v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

/// Best total power found by `candidates` random beam-direction draws: a
/// uniform phase first, then Gaussian perturbations of the incumbent with a
/// step size that shrinks on repeated failure.
pub fn random_search_power(
    h: &DMatrix<Complex64>,
    iota: &[f64],
    noise: f64,
    candidates: usize,
    seed: u64,
) -> Option<f64> {
    let (m, n) = (h.nrows(), h.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<Vec<Complex64>>)> = None;
    let uniform = candidates / 10;
    let mut step = 0.5;
    let mut fails = 0;
    for c in 0..candidates {
        let dirs: Vec<Vec<Complex64>> = match (&best, c < uniform) {
            (Some((_, inc)), false) => inc
                .iter()
                .map(|d| normalize(d.iter().map(|x| x + complex_normal(&mut rng) * step).collect()))
                .collect(),
            _ => (0..n).map(|_| random_direction(m, &mut rng)).collect(),
        };
        match power_for_directions(h, &dirs, iota, noise) {
            Some(p) if best.as_ref().is_none_or(|(b, _)| p < *b) => {
                best = Some((p, dirs));
                fails = 0;
            }
            _ if c >= uniform => {
                fails += 1;
                if fails >= 200 {
                    step = (step * 0.5).max(1e-7);
                    fails = 0;
                }
            }
            _ => {}
        }
    }
    best.map(|(p, _)| p)
}
