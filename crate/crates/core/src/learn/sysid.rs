//! Filter identification from a single (partially observed) input-output
//! pair: masked least squares with a weighted l1 penalty on the taps, solved
//! by FISTA with adaptive restart.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::graph::ShiftOperator;
use crate::linalg;

#[derive(Debug, Clone)]
pub struct SysIdConfig {
    /// Overestimated filter order.
    pub order: usize,
    /// l1 weight.
    pub gamma: f64,
    /// Per-tap penalty weights; defaults to 1, 2, ..., K+1 so higher shift
    /// orders are penalized harder.
    pub weights: Option<Array1<f64>>,
    pub max_iters: usize,
    pub tol: f64,
}

impl SysIdConfig {
    pub fn new(order: usize, gamma: f64) -> SysIdConfig {
        SysIdConfig {
            order,
            gamma,
            weights: None,
            max_iters: 20_000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SysIdOutcome {
    pub taps: Array1<f64>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Estimate taps from mask-selected rows of y = H(h, S) x.
pub fn system_identify(
    s: &ShiftOperator,
    x: &Array1<f64>,
    y_observed: &Array1<f64>,
    mask: &[usize],
    config: &SysIdConfig,
) -> Result<SysIdOutcome> {
    let n = s.node_count();
    if x.len() != n || y_observed.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len().max(y_observed.len()),
        });
    }
    if mask.is_empty() {
        return Err(Error::InvalidParameter("no observed nodes".into()));
    }
    if mask.iter().any(|&i| i >= n) {
        return Err(Error::NodeOutOfRange {
            index: *mask.iter().max().unwrap(),
            nodes: n,
        });
    }
    if config.gamma < 0.0 {
        return Err(Error::InvalidParameter("gamma must be nonnegative".into()));
    }
    let k = config.order;
    let weights = match &config.weights {
        Some(w) => {
            if w.len() != k + 1 {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: w.len(),
                });
            }
            if w.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter(
                    "penalty weights must be nonnegative".into(),
                ));
            }
            w.clone()
        }
        None => Array1::from_iter((0..=k).map(|i| (i + 1) as f64)),
    };

    // observed regressor rows
    let m = mask.len();
    let mut z = Array2::zeros((m, k + 1));
    let mut shifted = x.clone();
    for kk in 0..=k {
        if kk > 0 {
            shifted = s.matrix().matvec(shifted.view());
        }
        for (row, &i) in mask.iter().enumerate() {
            z[[row, kk]] = shifted[i];
        }
    }
    let rhs = Array1::from_iter(mask.iter().map(|&i| y_observed[i]));

    // Lipschitz constant of the smooth part 2 Z^T Z via power iteration
    let gram = z.t().dot(&z);
    let mut v = Array1::from_elem(k + 1, 1.0);
    let mut lam = 1.0;
    for _ in 0..200 {
        let w = gram.dot(&v);
        lam = linalg::norm2(w.view());
        if lam == 0.0 {
            break;
        }
        v = w / lam;
    }
    let lipschitz = (2.0 * lam).max(1e-12);
    let step = 1.0 / lipschitz;

    let objective = |h: &Array1<f64>| -> f64 {
        let r = z.dot(h) - &rhs;
        r.dot(&r)
            + config.gamma
                * h.iter()
                    .zip(weights.iter())
                    .map(|(&hi, &wi)| wi * hi.abs())
                    .sum::<f64>()
    };

    let mut h = Array1::zeros(k + 1);
    let mut momentum = h.clone();
    let mut t_accel = 1.0f64;
    let mut trace = vec![objective(&h)];
    let mut converged = false;
    for _ in 0..config.max_iters {
        let grad = z.t().dot(&(z.dot(&momentum) - &rhs)) * 2.0;
        let mut candidate = &momentum - &(grad * step);
        for (c, &w) in candidate.iter_mut().zip(weights.iter()) {
            let threshold = config.gamma * w * step;
            *c = if *c > threshold {
                *c - threshold
            } else if *c < -threshold {
                *c + threshold
            } else {
                0.0
            };
        }
        let obj = objective(&candidate);
        let prev = *trace.last().unwrap();
        if obj > prev {
            // adaptive restart: drop momentum, retake the step from h
            t_accel = 1.0;
            momentum = h.clone();
            let grad = z.t().dot(&(z.dot(&momentum) - &rhs)) * 2.0;
            let mut retry = &momentum - &(grad * step);
            for (c, &w) in retry.iter_mut().zip(weights.iter()) {
                let threshold = config.gamma * w * step;
                *c = if *c > threshold {
                    *c - threshold
                } else if *c < -threshold {
                    *c + threshold
                } else {
                    0.0
                };
            }
            let retry_obj = objective(&retry);
            let delta = linalg::norm2((&retry - &h).view());
            h = retry;
            momentum = h.clone();
            trace.push(retry_obj.min(prev));
            if delta <= config.tol {
                converged = true;
                break;
            }
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t_accel * t_accel).sqrt()) / 2.0;
        let beta = (t_accel - 1.0) / t_next;
        momentum = &candidate + &((&candidate - &h) * beta);
        let delta = linalg::norm2((&candidate - &h).view());
        h = candidate;
        t_accel = t_next;
        trace.push(obj);
        if delta <= config.tol {
            converged = true;
            break;
        }
    }
    Ok(SysIdOutcome {
        taps: h,
        objective_trace: trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::ConvFilter;
    use crate::graph::{Graph, GsoKind};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    rows.push((i, j, rng.gen_range(0.2..1.0)));
                }
            }
        }
        for i in 0..n - 1 {
            if !rows.iter().any(|&(a, b, _)| (a, b) == (i, i + 1)) {
                rows.push((i, i + 1, 1.0));
            }
        }
        Graph::from_edge_list_with_nodes(&rows, n, false).unwrap()
    }

    #[test]
    fn exact_recovery_noiseless_full_observation() {
        let g = random_graph(16, 0.35, 1);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let truth = ConvFilter::from_taps(vec![0.7, -0.4, 0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Array1::from_iter((0..16).map(|_| rng.gen_range(-1.0f64..1.0)));
        let y = truth.apply(&s, &x).unwrap();
        let mask: Vec<usize> = (0..16).collect();
        let out = system_identify(&s, &x, &y, &mask, &SysIdConfig::new(2, 0.0)).unwrap();
        for kk in 0..3 {
            assert!(
                (out.taps[kk] - truth.taps()[kk]).abs() <= 1e-8,
                "tap {kk}: {} vs {}",
                out.taps[kk],
                truth.taps()[kk]
            );
        }
    }

    #[test]
    fn huge_gamma_kills_all_taps() {
        let g = random_graph(12, 0.4, 3);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array1::from_iter((0..12).map(|_| rng.gen_range(-1.0f64..1.0)));
        let y = Array1::from_iter((0..12).map(|_| rng.gen_range(-1.0f64..1.0)));
        let mask: Vec<usize> = (0..12).collect();
        let out = system_identify(&s, &x, &y, &mask, &SysIdConfig::new(3, 1e9)).unwrap();
        assert!(out.taps.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn overestimated_order_shrinks_tail() {
        // statistical over 20 trials: trailing taps below 1e-4, leading taps
        // within 1e-2
        let mut ok = 0;
        for trial in 0..20u64 {
            let g = random_graph(20, 0.3, 10 + trial);
            let s = ShiftOperator::from_graph(&g, GsoKind::NormalizedAdjacency).unwrap();
            let truth = ConvFilter::from_taps(vec![0.8, 0.4]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
            let x = Array1::from_iter((0..20).map(|_| rng.gen_range(-1.0f64..1.0)));
            let y = truth.apply(&s, &x).unwrap();
            let mask: Vec<usize> = (0..20).collect();
            let out =
                system_identify(&s, &x, &y, &mask, &SysIdConfig::new(4, 1e-5)).unwrap();
            let leading_ok = (out.taps[0] - 0.8).abs() <= 1e-2 && (out.taps[1] - 0.4).abs() <= 1e-2;
            let tail_ok = out.taps.iter().skip(2).all(|&t| t.abs() <= 1e-4);
            if leading_ok && tail_ok {
                ok += 1;
            }
        }
        assert!(ok >= 16, "only {ok}/20 trials recovered the support");
    }

    #[test]
    fn objective_nonincreasing_with_restarts() {
        let g = random_graph(14, 0.35, 5);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Array1::from_iter((0..14).map(|_| rng.gen_range(-1.0f64..1.0)));
        let y = Array1::from_iter((0..14).map(|_| rng.gen_range(-1.0f64..1.0)));
        let mask: Vec<usize> = (0..14).step_by(2).collect();
        let out = system_identify(&s, &x, &y, &mask, &SysIdConfig::new(3, 0.05)).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "objective rose {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn empty_mask_rejected() {
        let g = random_graph(8, 0.5, 7);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let x = Array1::zeros(8);
        let y = Array1::zeros(8);
        assert!(system_identify(&s, &x, &y, &[], &SysIdConfig::new(2, 0.1)).is_err());
    }
}
