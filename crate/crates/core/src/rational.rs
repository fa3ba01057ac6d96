//! Rational (ARMA-type) graph filters: response q(lambda) / p(lambda) with
//! p(lambda) = 1 + sum_p a_p lambda^p, applied by solving P(S) y = Q(S) x.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::conv::ConvFilter;
use crate::error::{Error, Result};
use crate::graph::ShiftOperator;
use crate::linalg;

/// Default stability margin: min |p(lambda)| must stay above this.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFilter {
    /// Numerator taps b_0..b_Q.
    numerator: Vec<f64>,
    /// Denominator taps a_1..a_P (the leading 1 is implicit).
    denominator: Vec<f64>,
}

/// Which solver realizes P(S) y = Q(S) x.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RationalSolver {
    /// Jacobi-preconditioned conjugate gradients; requires symmetric S with
    /// P(S) positive definite.
    Cg,
    /// Dense LU solve; any operator.
    Dense,
}

/// Outcome of an apply call, with solver diagnostics.
#[derive(Debug, Clone)]
pub struct RationalOutput {
    pub signal: Array1<f64>,
    pub iterations: usize,
    /// ||P(S) y - Q(S) x||_2 / ||Q(S) x||_2
    pub relative_residual: f64,
}

impl RationalFilter {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<RationalFilter> {
        if numerator.is_empty() {
            return Err(Error::InvalidParameter(
                "rational filter needs at least b_0".into(),
            ));
        }
        if numerator
            .iter()
            .chain(denominator.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("rational filter coefficients".into()));
        }
        Ok(RationalFilter {
            numerator,
            denominator,
        })
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    /// p(lambda) = 1 + sum a_p lambda^p
    pub fn denominator_at(&self, lambda: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.denominator.iter().rev() {
            acc = (acc + a) * lambda;
        }
        1.0 + acc
    }

    /// q(lambda) = sum b_q lambda^q
    pub fn numerator_at(&self, lambda: f64) -> f64 {
        linalg::horner(&self.numerator, lambda)
    }

    pub fn response_at(&self, lambda: f64) -> f64 {
        self.numerator_at(lambda) / self.denominator_at(lambda)
    }

    /// Grid stability check: true iff min |p(lambda)| >= margin over the grid.
    pub fn check_stability(
        &self,
        interval: (f64, f64),
        grid_size: usize,
        margin: f64,
    ) -> Result<(bool, f64)> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        if self.denominator.is_empty() {
            return Ok((true, 1.0));
        }
        let min_abs = linalg::grid(lo, hi, grid_size.max(2))
            .iter()
            .map(|&l| self.denominator_at(l).abs())
            .fold(f64::INFINITY, f64::min);
        Ok((min_abs >= margin, min_abs))
    }

    /// Solve P(S) y = Q(S) x.
    ///
    /// The CG path demands a symmetric S and verifies min p(lambda) > 0 on the
    /// Gershgorin interval of S before trusting positive definiteness.
    pub fn apply(
        &self,
        s: &ShiftOperator,
        x: &Array1<f64>,
        solver: RationalSolver,
        tol: f64,
        max_iter: usize,
    ) -> Result<RationalOutput> {
        let n = s.node_count();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        // rhs = Q(S) x by shift-and-sum
        let qx = ConvFilter::from_taps(self.numerator.clone())?.apply(s, x)?;
        if self.denominator.is_empty() {
            return Ok(RationalOutput {
                signal: qx,
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let p_taps: Vec<f64> = std::iter::once(1.0)
            .chain(self.denominator.iter().copied())
            .collect();
        let p_filter = ConvFilter::from_taps(p_taps)?;
        let rhs_norm = linalg::norm2(qx.view()).max(f64::MIN_POSITIVE);
        match solver {
            RationalSolver::Dense => {
                let pd = p_filter.dense_operator(s)?;
                let y = linalg::solve(&pd, &qx)?;
                let residual = linalg::norm2((pd.dot(&y) - &qx).view()) / rhs_norm;
                Ok(RationalOutput {
                    signal: y,
                    iterations: 0,
                    relative_residual: residual,
                })
            }
            RationalSolver::Cg => {
                if !s.is_symmetric() {
                    return Err(Error::Unsupported(
                        "cg solver needs a symmetric shift operator".into(),
                    ));
                }
                let (lo, hi) = s.matrix().gershgorin_interval();
                let min_p = linalg::grid(lo, hi, 512)
                    .iter()
                    .map(|&l| self.denominator_at(l))
                    .fold(f64::INFINITY, f64::min);
                if min_p <= 0.0 {
                    return Err(Error::NotPositiveDefinite(format!(
                        "min p(lambda) = {min_p:.3e} on [{lo:.3}, {hi:.3}]"
                    )));
                }
                // Jacobi preconditioner: diagonal of P(S)
                let pd_diag = self.operator_diagonal(s, &p_filter)?;
                let apply_p = |v: &Array1<f64>| p_filter.apply(s, v).expect("dims checked");
                let (y, iterations, abs_residual) =
                    linalg::pcg(&apply_p, &qx, &pd_diag, tol * rhs_norm, max_iter)?;
                Ok(RationalOutput {
                    signal: y,
                    iterations,
                    relative_residual: abs_residual / rhs_norm,
                })
            }
        }
    }

    fn operator_diagonal(&self, s: &ShiftOperator, p: &ConvFilter) -> Result<Array1<f64>> {
        // diag(P(S)) assembled column by column; fine at the solver sizes
        // this crate targets
        let n = s.node_count();
        let taps = p.taps();
        let mut diag = Array1::from_elem(n, taps[0]);
        if taps.len() > 1 {
            for i in 0..n {
                let mut col = Array1::zeros(n);
                col[i] = 1.0;
                for &tap in taps.iter().skip(1) {
                    col = s.matrix().matvec(col.view());
                    diag[i] += tap * col[i];
                }
            }
        }
        // guard against zero diagonal entries
        Ok(diag.mapv(|d| if d.abs() < 1e-12 { 1.0 } else { d }))
    }
}

/// Prony-style linearized LS design on sampled (lambda, beta) pairs:
/// minimizes sum |beta p(lambda) - q(lambda)|^2. Stability is checked on the
/// sample range and reported, not enforced.
pub fn design_prony(
    samples: &[(f64, f64)],
    p_order: usize,
    q_order: usize,
) -> Result<(RationalFilter, bool)> {
    let unknowns = p_order + q_order + 1;
    if samples.len() < unknowns {
        return Err(Error::InvalidParameter(format!(
            "need at least {unknowns} samples, got {}",
            samples.len()
        )));
    }
    let g = samples.len();
    let mut m = Array2::zeros((g, unknowns));
    let mut rhs = Array1::zeros(g);
    for (row, &(lambda, beta)) in samples.iter().enumerate() {
        // beta * (1 + sum a_p l^p) - sum b_q l^q = 0
        let mut lp = lambda;
        for p in 0..p_order {
            m[[row, p]] = beta * lp;
            lp *= lambda;
        }
        let mut lq = 1.0;
        for q in 0..=q_order {
            m[[row, p_order + q]] = -lq;
            lq *= lambda;
        }
        rhs[row] = -beta;
    }
    let sol = linalg::lstsq(&m, &rhs)?;
    let denominator: Vec<f64> = sol.iter().take(p_order).copied().collect();
    let numerator: Vec<f64> = sol.iter().skip(p_order).copied().collect();
    let filter = RationalFilter::new(numerator, denominator)?;
    let lo = samples.iter().map(|&(l, _)| l).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|&(l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let stable = if lo < hi {
        filter
            .check_stability((lo, hi), 512, DEFAULT_STABILITY_MARGIN)?
            .0
    } else {
        filter.denominator_at(lo).abs() >= DEFAULT_STABILITY_MARGIN
    };
    Ok((filter, stable))
}

/// Grid least-squares objective sum |beta - q/p|^2 used by the constrained
/// design and its tests.
pub fn grid_objective(filter: &RationalFilter, samples: &[(f64, f64)]) -> f64 {
    samples
        .iter()
        .map(|&(l, b)| {
            let e = b - filter.response_at(l);
            e * e
        })
        .sum()
}

/// Constrained design by alternating linearized least squares with a
/// per-iteration projection that rescales the denominator until
/// min p(lambda) >= margin on the grid.
///
/// Iterations that do not decrease the true grid objective are discarded, so
/// the returned filter is never worse than the (projected) Prony start.
pub fn design_constrained(
    target: &dyn Fn(f64) -> f64,
    interval: (f64, f64),
    p_order: usize,
    q_order: usize,
    margin: f64,
) -> Result<RationalFilter> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "invalid interval [{lo}, {hi}]"
        )));
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "margin must lie in (0, 1], got {margin}"
        )));
    }
    let grid_pts = linalg::grid(lo, hi, 256);
    let samples: Vec<(f64, f64)> = grid_pts.iter().map(|&l| (l, target(l))).collect();
    if samples.iter().any(|&(_, b)| !b.is_finite()) {
        return Err(Error::NonFinite("target response".into()));
    }

    let project = |den: Vec<f64>| -> Vec<f64> {
        if den.is_empty() {
            return den;
        }
        // margin 1 leaves only p = 1: the polynomial special case
        if margin >= 1.0 {
            return vec![0.0; den.len()];
        }
        let probe = RationalFilter {
            numerator: vec![1.0],
            denominator: den.clone(),
        };
        let min_p = grid_pts
            .iter()
            .map(|&l| probe.denominator_at(l))
            .fold(f64::INFINITY, f64::min);
        if min_p >= margin {
            return den;
        }
        // p_t = 1 - t + t p has grid minimum exactly `margin` at
        // t = (1 - margin) / (1 - min_p)
        let t = ((1.0 - margin) / (1.0 - min_p)).clamp(0.0, 1.0);
        den.into_iter().map(|a| a * t).collect()
    };

    // start from the (projected) Prony solution
    let (prony, _) = design_prony(&samples, p_order, q_order)?;
    let den0 = project(prony.denominator().to_vec());
    let mut best = refit_numerator(&samples, &den0, q_order)?;
    let mut best_obj = grid_objective(&best, &samples);

    let mut current = best.clone();
    for _ in 0..100 {
        // fix b, solve a on the weighted linearized residual, then project
        let new_den = project(refit_denominator(&samples, &current, p_order)?);
        let candidate = refit_numerator(&samples, &new_den, q_order)?;
        let obj = grid_objective(&candidate, &samples);
        let rel_change = (best_obj - obj).abs() / best_obj.max(1e-30);
        if obj < best_obj {
            best = candidate.clone();
            best_obj = obj;
        }
        current = candidate;
        if rel_change < 1e-8 {
            break;
        }
    }
    Ok(best)
}

/// Weighted LS for the numerator with the denominator fixed:
/// min sum w |beta p - q|^2 with w = 1 / p^2 targets the true objective.
fn refit_numerator(
    samples: &[(f64, f64)],
    denominator: &[f64],
    q_order: usize,
) -> Result<RationalFilter> {
    let probe = RationalFilter {
        numerator: vec![1.0],
        denominator: denominator.to_vec(),
    };
    let g = samples.len();
    let mut m = Array2::zeros((g, q_order + 1));
    let mut rhs = Array1::zeros(g);
    for (row, &(lambda, beta)) in samples.iter().enumerate() {
        let p = probe.denominator_at(lambda);
        let w = 1.0 / p.abs().max(1e-12);
        let mut lq = 1.0;
        for q in 0..=q_order {
            m[[row, q]] = w * lq;
            lq *= lambda;
        }
        rhs[row] = w * beta * p;
    }
    let b = linalg::lstsq(&m, &rhs)?;
    RationalFilter::new(b.to_vec(), denominator.to_vec())
}

/// Weighted LS for the denominator with the numerator fixed.
fn refit_denominator(
    samples: &[(f64, f64)],
    current: &RationalFilter,
    p_order: usize,
) -> Result<Vec<f64>> {
    if p_order == 0 {
        return Ok(Vec::new());
    }
    let g = samples.len();
    let mut m = Array2::zeros((g, p_order));
    let mut rhs = Array1::zeros(g);
    for (row, &(lambda, beta)) in samples.iter().enumerate() {
        let p_prev = current.denominator_at(lambda);
        let w = 1.0 / p_prev.abs().max(1e-12);
        let q = current.numerator_at(lambda);
        // beta (1 + sum a_p l^p) - q = 0  =>  sum a_p beta l^p = q - beta
        let mut lp = lambda;
        for p in 0..p_order {
            m[[row, p]] = w * beta * lp;
            lp *= lambda;
        }
        rhs[row] = w * (q - beta);
    }
    let a = linalg::lstsq(&m, &rhs)?;
    Ok(a.to_vec())
}
