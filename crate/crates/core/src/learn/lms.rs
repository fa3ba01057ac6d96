//! Adapt-then-combine diffusion LMS for distributed filter estimation.
//!
//! Every node keeps its own tap estimate h_i. Each round it takes a local
//! LMS step against its row of the regressor Z = [x, Sx, ..., S^K x], then
//! convex-combines the intermediate estimates of its closed neighborhood.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::graph::{Graph, ShiftOperator};
use crate::linalg;

/// How the regressor matrix is assembled from the input stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmsDataModel {
    /// Z(t) = [x(t), S x(t), ..., S^K x(t)]: the diffusion happens within
    /// one sampling instant.
    Instantaneous,
    /// Z(t) = [x(t), S x(t-1), ..., S^K x(t-K)]: each extra shift applies to
    /// an older sample.
    TimeLagged,
}

/// Step sizes and combination weights for the diffusion run.
#[derive(Debug, Clone)]
pub struct LmsConfig {
    /// Per-node step sizes mu_i > 0.
    pub step_sizes: Array1<f64>,
    /// Combination matrix: c[l][i] is the weight node i gives to neighbor l's
    /// intermediate estimate. Columns must be stochastic and supported on the
    /// closed neighborhood.
    pub combination: Array2<f64>,
    pub rounds: usize,
    pub data_model: LmsDataModel,
}

impl LmsConfig {
    /// Uniform combination over closed neighborhoods: c_{li} = 1/(deg_i + 1).
    pub fn uniform(graph: &Graph, step_size: f64, rounds: usize) -> Result<LmsConfig> {
        let n = graph.node_count();
        let mut combination = Array2::zeros((n, n));
        for i in 0..n {
            let closed = graph.neighbors(i).len() + 1;
            let w = 1.0 / closed as f64;
            combination[[i, i]] = w;
            for &(l, _) in graph.neighbors(i) {
                combination[[l, i]] = w;
            }
        }
        let config = LmsConfig {
            step_sizes: Array1::from_elem(n, step_size),
            combination,
            rounds,
            data_model: LmsDataModel::Instantaneous,
        };
        config.validate(graph)?;
        Ok(config)
    }

    pub fn with_data_model(mut self, model: LmsDataModel) -> LmsConfig {
        self.data_model = model;
        self
    }

    /// Column-stochasticity and support checks.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let n = graph.node_count();
        if self.step_sizes.len() != n || self.combination.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.step_sizes.len(),
            });
        }
        if self.step_sizes.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
            return Err(Error::InvalidParameter(
                "step sizes must be positive".into(),
            ));
        }
        for i in 0..n {
            let mut total = 0.0;
            for l in 0..n {
                let c = self.combination[[l, i]];
                if c < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "combination weight c[{l}][{i}] = {c} is negative"
                    )));
                }
                if c > 0.0 && l != i && graph.weight(i, l) == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "combination weight c[{l}][{i}] off the closed neighborhood"
                    )));
                }
                total += c;
            }
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "combination column {i} sums to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Final per-node estimates plus the error trace.
#[derive(Debug, Clone)]
pub struct LmsOutcome {
    /// N x (K+1): row i holds node i's tap estimate.
    pub taps_per_node: Array2<f64>,
    /// Mean squared prediction error per round over the network.
    pub error_trace: Vec<f64>,
}

/// Run T rounds of adapt-then-combine diffusion LMS. The stream is consumed
/// cyclically when shorter than the number of rounds. Estimates blowing past
/// 1e9 abort with the offending round.
pub fn lms_diffusion(
    stream: &[(Array1<f64>, Array1<f64>)],
    graph: &Graph,
    s: &ShiftOperator,
    k: usize,
    config: &LmsConfig,
    initial: Option<&Array2<f64>>,
) -> Result<LmsOutcome> {
    config.validate(graph)?;
    let n = s.node_count();
    if stream.is_empty() {
        return Err(Error::InvalidParameter("empty data stream".into()));
    }
    for (x, y) in stream {
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len().max(y.len()),
            });
        }
    }
    let mut taps = match initial {
        Some(h0) => {
            if h0.dim() != (n, k + 1) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: h0.dim().0,
                });
            }
            h0.clone()
        }
        None => Array2::zeros((n, k + 1)),
    };
    let mut error_trace = Vec::with_capacity(config.rounds);
    // time-lagged model keeps a window of the last K+1 inputs
    let mut history: std::collections::VecDeque<Array1<f64>> =
        std::collections::VecDeque::with_capacity(k + 1);
    let mut psi = Array2::zeros((n, k + 1));
    for round in 0..config.rounds {
        let (x, y) = &stream[round % stream.len()];
        let z = match config.data_model {
            LmsDataModel::Instantaneous => {
                let mut z = Array2::zeros((n, k + 1));
                let mut shifted = x.clone();
                for kk in 0..=k {
                    if kk > 0 {
                        shifted = s.matrix().matvec(shifted.view());
                    }
                    for i in 0..n {
                        z[[i, kk]] = shifted[i];
                    }
                }
                z
            }
            LmsDataModel::TimeLagged => {
                history.push_front(x.clone());
                if history.len() > k + 1 {
                    history.pop_back();
                }
                let mut z = Array2::zeros((n, k + 1));
                for kk in 0..=k {
                    // column k: S^k applied to x(t - k); absent history
                    // entries (early rounds) contribute zeros
                    if let Some(past) = history.get(kk) {
                        let mut shifted = past.clone();
                        for _ in 0..kk {
                            shifted = s.matrix().matvec(shifted.view());
                        }
                        for i in 0..n {
                            z[[i, kk]] = shifted[i];
                        }
                    }
                }
                z
            }
        };
        // adapt
        let mut sq_err = 0.0;
        for i in 0..n {
            let zi = z.row(i);
            let hi = taps.row(i);
            let err = y[i] - zi.dot(&hi);
            sq_err += err * err;
            let mu = config.step_sizes[i];
            for kk in 0..=k {
                psi[[i, kk]] = taps[[i, kk]] + mu * zi[kk] * err;
            }
        }
        // combine: h_i = sum_l c_{li} psi_l
        for i in 0..n {
            for kk in 0..=k {
                let mut acc = 0.0;
                for l in 0..n {
                    let c = config.combination[[l, i]];
                    if c != 0.0 {
                        acc += c * psi[[l, kk]];
                    }
                }
                taps[[i, kk]] = acc;
            }
        }
        error_trace.push(sq_err / n as f64);
        let worst = taps.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if !worst.is_finite() || worst > 1e9 {
            return Err(Error::Divergence {
                round,
                what: format!("tap magnitude {worst:.3e}"),
            });
        }
    }
    Ok(LmsOutcome {
        taps_per_node: taps,
        error_trace,
    })
}
