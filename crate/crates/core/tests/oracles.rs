//! Library results checked against independently written reference code.

#![allow(clippy::needless_range_loop)]

use approx::assert_relative_eq;
use nalgebra::DVector;
use rand::Rng;
use swarmfl::channel::transmission_delay;
use swarmfl::convergence::{convergence_round, ConvergenceInputs};
use swarmfl::fl::{
    first_crossing, make_regression_problem, perfect_links, run_rounds, Dataset, FlState, LossModel,
};
use swarmfl::scenario::DatasetSpec;
use swarmfl::seed;

fn spec(n: usize, dim: usize) -> DatasetSpec {
    DatasetSpec {
        samples_per_follower: n,
        dim,
        noise_std: 0.3,
        feature_decay: 0.8,
        sample_bits: 8e4,
    }
}

/// Hessian `(2/N) Σ x xᵀ` with plain loops.
fn hessian(datasets: &[Dataset]) -> Vec<Vec<f64>> {
    let d = datasets[0].dim();
    let mut h = vec![vec![0.0; d]; d];
    let mut n = 0usize;
    for ds in datasets {
        for s in 0..ds.count() {
            n += 1;
            for a in 0..d {
                for b in 0..d {
                    h[a][b] += ds.features[(a, s)] * ds.features[(b, s)];
                }
            }
        }
    }
    for row in &mut h {
        for x in row {
            *x *= 2.0 / n as f64;
        }
    }
    h
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn curvature_constants_match_jacobi_eigenvalues() {
    for s in 0..4 {
        let (datasets, loss) = make_regression_problem(&spec(30, 6), 4, s).unwrap();
        let eig = jacobi_eigenvalues(hessian(&datasets));
        let mu = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let u = eig.iter().copied().fold(0.0, f64::max);
        let c = loss.constants();
        assert_relative_eq!(c.strong_mu, mu, max_relative = 1e-9);
        assert_relative_eq!(c.lipschitz_u, u, max_relative = 1e-9);
    }
}

#[test]
fn optimum_matches_normal_equations() {
    let (datasets, loss) = make_regression_problem(&spec(25, 4), 3, 9).unwrap();
    let d = 4;
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for ds in &datasets {
        for s in 0..ds.count() {
            for i in 0..d {
                b[i] += ds.features[(i, s)] * ds.labels[s];
                for j in 0..d {
                    a[i][j] += ds.features[(i, s)] * ds.features[(j, s)];
                }
            }
        }
    }
    let w = solve_linear(a, b);
    for (x, y) in w.iter().zip(loss.constants().w_star.iter()) {
        assert_relative_eq!(*x, *y, epsilon = 1e-10);
    }
}

#[test]
fn perfect_links_reduce_to_gradient_descent() {
    let (datasets, loss) = make_regression_problem(&spec(20, 3), 5, 4).unwrap();
    let c = loss.constants().clone();
    let lr = 1.0 / c.lipschitz_u;
    let n: usize = datasets.iter().map(Dataset::count).sum();

    // Plain gradient descent on the mean squared loss.
    let mut w = [0.0; 3];
    let mut gaps = Vec::new();
    for _ in 0..=60 {
        let mut grad = [0.0; 3];
        let mut f = 0.0;
        for ds in &datasets {
            for s in 0..ds.count() {
                let r: f64 = (0..3).map(|j| w[j] * ds.features[(j, s)]).sum::<f64>() - ds.labels[s];
                f += r * r;
                for j in 0..3 {
                    grad[j] += 2.0 * r * ds.features[(j, s)];
                }
            }
        }
        gaps.push(f / n as f64 - c.f_star);
        for j in 0..3 {
            w[j] -= lr * grad[j] / n as f64;
        }
    }

    let mut state = FlState::new(DVector::zeros(3), &loss, &datasets);
    run_rounds(&mut state, &loss, &datasets, lr, 60, 0.0, |_| {
        perfect_links(5)
    });
    for (a, b) in state.gap_history.iter().zip(&gaps) {
        assert!((a - b).abs() <= 1e-9 * gaps[0], "{a} vs {b}");
    }
    for eps in [1e-1, 1e-2, 1e-3] {
        let eps = eps * gaps[0];
        assert_eq!(
            first_crossing(&state.gap_history, eps),
            gaps.iter().position(|&g| g <= eps)
        );
    }
}

#[test]
fn convergence_round_matches_direct_formula() {
    let mut rng = seed::rng(3);
    for _ in 0..200 {
        let counts: Vec<usize> = (0..4).map(|_| rng.random_range(1..100)).collect();
        let probs: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let u = rng.random_range(1.0..10.0);
        let mu = u * rng.random_range(0.01..1.0);
        let l0: f64 = rng.random_range(10.0..1000.0);
        let eps: f64 = l0 * rng.random_range(1e-4..0.9);
        let n: f64 = counts.iter().map(|&c| c as f64).sum();
        let rho: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, p)| c as f64 * p)
            .sum::<f64>()
            * mu
            / (n * u);
        if rho >= 1.0 - 1e-12 {
            continue;
        }
        let raw = (eps / l0).log10() / (1.0 - rho).log10();
        let got = convergence_round(&ConvergenceInputs {
            success_prob: probs,
            counts,
            mu,
            lipschitz_u: u,
            epsilon: eps,
            initial_loss_sum: l0,
        })
        .unwrap();
        // Rounding may differ only when the quotient sits on an integer.
        if (raw - raw.round()).abs() > 1e-9 {
            assert_eq!(got as f64, raw.ceil());
        }
    }
}

#[test]
fn transmission_delay_matches_shannon_rate() {
    for (bits, bw, snr_db) in [(8e3, 1e6, 10.0), (2.4e5, 2e6, 3.0), (1e4, 5e6, 25.0)] {
        let snr: f64 = 10f64.powf(snr_db / 10.0);
        let rate = bw * (1.0 + snr).log2();
        assert_relative_eq!(
            transmission_delay(bits, bw, snr),
            bits / rate,
            max_relative = 1e-12
        );
    }
}

#[test]
fn heterogeneity_bound_covers_fresh_points() {
    let (datasets, loss) = make_regression_problem(&spec(40, 5), 5, 2).unwrap();
    let c = loss.constants();
    let radius = 2.0 * c.w_star.norm();
    let mut rng = seed::rng(77);
    for _ in 0..500 {
        let w = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0)) * (radius / 5f64.sqrt())
            + &c.w_star;
        let g2 = loss.gradient(&w, &datasets).norm_squared();
        for ds in &datasets {
            let gi = loss.local_gradient(&w, ds).norm_squared();
            assert!(
                gi <= c.zeta1 + c.zeta2 * g2 + 1e-9 * gi,
                "{gi} > {} + {} * {g2}",
                c.zeta1,
                c.zeta2
            );
        }
    }
}
