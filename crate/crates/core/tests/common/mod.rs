#![allow(dead_code)]

//! Independent oracles shared by the integration suites. Everything here
//! deliberately avoids the library's solver paths: the series oracle sums
//! the geometric chain directly, the transport oracle is successive
//! shortest augmenting paths, and the softmax used for finite differences
//! is a local reimplementation.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use imlab_core::imitators::js_occupancy_objective;
use imlab_core::mdp::{policy_transition_matrix, Policy, TabularMdp};

/// `(1 - gamma) sum_{t <= T} gamma^t Pr(s_t)` with `T = ceil(ln 1e-10 / ln gamma)`.
pub fn truncated_series_occupancy(mdp: &TabularMdp, pi: &Policy) -> Array1<f64> {
    let gamma = mdp.gamma();
    let p = policy_transition_matrix(mdp, pi).expect("shapes agree");
    let t_max = if gamma == 0.0 {
        0
    } else {
        ((1e-10f64).ln() / gamma.ln()).ceil() as usize
    };
    let mut prob = mdp.init_dist().clone();
    let mut d = prob.clone() * (1.0 - gamma);
    let mut weight = 1.0 - gamma;
    for _ in 1..=t_max {
        let mut next = Array1::zeros(prob.len());
        for s in 0..prob.len() {
            if prob[s] == 0.0 {
                continue;
            }
            for s2 in 0..prob.len() {
                next[s2] += prob[s] * p[[s, s2]];
            }
        }
        prob = next;
        weight *= gamma;
        d = d + &prob * weight;
    }
    d
}

/// Exact transport cost by successive shortest augmenting paths on the
/// bipartite residual graph (Bellman-Ford with supply sources).
pub fn transport_min_cost_flow(cost: &Array2<f64>, mu: &[f64], nu: &[f64]) -> f64 {
    let n = mu.len();
    let eps = 1e-13;
    let mut supply = mu.to_vec();
    let mut demand = nu.to_vec();
    let mut flow = vec![vec![0.0_f64; n]; n];

    loop {
        let remaining: f64 = supply.iter().sum();
        if remaining <= 1e-12 {
            break;
        }
        let nn = 2 * n;
        let mut dist = vec![f64::INFINITY; nn];
        let mut prev: Vec<Option<usize>> = vec![None; nn];
        for (i, &s) in supply.iter().enumerate() {
            if s > eps {
                dist[i] = 0.0;
            }
        }
        for _ in 0..nn {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if dist[i].is_finite() && dist[i] + cost[[i, j]] < dist[n + j] - 1e-15 {
                        dist[n + j] = dist[i] + cost[[i, j]];
                        prev[n + j] = Some(i);
                        changed = true;
                    }
                    if flow[i][j] > eps
                        && dist[n + j].is_finite()
                        && dist[n + j] - cost[[i, j]] < dist[i] - 1e-15
                    {
                        dist[i] = dist[n + j] - cost[[i, j]];
                        prev[i] = Some(n + j);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut target: Option<usize> = None;
        for (j, &d) in demand.iter().enumerate() {
            if d > eps && dist[n + j].is_finite()
                && target.is_none_or(|b| dist[n + j] < dist[n + b]) {
                    target = Some(j);
                }
        }
        let Some(j_end) = target else { break };

        // Trace back to the originating source, collecting arcs.
        let mut arcs: Vec<(usize, usize, bool)> = Vec::new();
        let mut bottleneck = demand[j_end];
        let mut node = n + j_end;
        while let Some(p) = prev[node] {
            if node >= n {
                arcs.push((p, node - n, true));
            } else {
                let j = p - n;
                bottleneck = bottleneck.min(flow[node][j]);
                arcs.push((node, j, false));
            }
            node = p;
        }
        bottleneck = bottleneck.min(supply[node]);
        assert!(bottleneck > 0.0, "degenerate augmentation");
        for &(i, j, forward) in &arcs {
            if forward {
                flow[i][j] += bottleneck;
            } else {
                flow[i][j] -= bottleneck;
            }
        }
        supply[node] -= bottleneck;
        demand[j_end] -= bottleneck;
    }

    (0..n)
        .map(|i| (0..n).map(|j| flow[i][j] * cost[[i, j]]).sum::<f64>())
        .sum()
}

/// Local softmax, independent of the library's.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Central finite differences of the JS objective in logit space.
pub fn fd_js_logit_gradient(
    mdp: &TabularMdp,
    target: &Array2<f64>,
    base: &Policy,
    h: f64,
) -> Array2<f64> {
    let logits = base.table().mapv(f64::ln);
    let mut grad = Array2::zeros(logits.dim());
    for s in 0..logits.nrows() {
        for a in 0..logits.ncols() {
            let mut plus = logits.clone();
            plus[[s, a]] += h;
            let mut minus = logits.clone();
            minus[[s, a]] -= h;
            let j_plus = js_occupancy_objective(
                mdp,
                &Policy::new(softmax(&plus)).unwrap(),
                target,
            )
            .unwrap();
            let j_minus = js_occupancy_objective(
                mdp,
                &Policy::new(softmax(&minus)).unwrap(),
                target,
            )
            .unwrap();
            grad[[s, a]] = (j_plus - j_minus) / (2.0 * h);
        }
    }
    grad
}

/// Random distribution with full support.
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(1e-4..1.0)).collect();
    let sum: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= sum;
    }
    p
}

/// Random distribution that may have zero entries.
pub fn random_sparse_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_range(0.0..1.0) < 0.3 {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            }
        })
        .collect();
    let sum: f64 = p.iter().sum();
    if sum == 0.0 {
        p[0] = 1.0;
        return p;
    }
    for v in p.iter_mut() {
        *v /= sum;
    }
    p
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
