//! Graph convolutional (polynomial) filters.
//!
//! A filter is a polynomial in the shift operator, H(S) = sum_k h_k S^k,
//! applied by the shift-and-sum recursion z(k) = S z(k-1) at O(K |E| + K N)
//! cost. Taps live either in the monomial basis or in the shifted-Chebyshev
//! basis; high-order Chebyshev filters are applied through the three-term
//! recursion and never converted to monomials.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ShiftOperator;
use crate::linalg;
use crate::spectral::SpectralBasis;

/// Maximum order for which a Chebyshev-basis filter may be converted to
/// monomial taps; beyond this the high matrix powers are numerically unsafe.
pub const MONOMIAL_CONVERSION_CAP: usize = 10;

/// Tap basis tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapBasis {
    Monomial,
    /// Shifted Chebyshev basis on [0, lambda_max]; taps are (c_0, ..., c_K)
    /// with response c_0 / 2 + sum_{k >= 1} c_k Tbar_k(lambda).
    Chebyshev { lambda_max: f64 },
}

/// Polynomial graph filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvFilter {
    taps: Vec<f64>,
    basis: TapBasis,
}

impl ConvFilter {
    /// Monomial-basis filter from taps (h_0, ..., h_K).
    pub fn from_taps(taps: Vec<f64>) -> Result<ConvFilter> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter("filter needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("filter taps".into()));
        }
        Ok(ConvFilter {
            taps,
            basis: TapBasis::Monomial,
        })
    }

    pub fn from_chebyshev(coeffs: Vec<f64>, lambda_max: f64) -> Result<ConvFilter> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("filter needs at least one tap".into()));
        }
        if coeffs.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("filter taps".into()));
        }
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        Ok(ConvFilter {
            taps: coeffs,
            basis: TapBasis::Chebyshev { lambda_max },
        })
    }

    pub fn identity() -> ConvFilter {
        ConvFilter {
            taps: vec![1.0],
            basis: TapBasis::Monomial,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn basis(&self) -> TapBasis {
        self.basis
    }

    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    /// Apply via shift-and-sum (monomial) or the Chebyshev three-term
    /// recursion. Non-finite intermediates are reported with the hop index.
    pub fn apply(&self, s: &ShiftOperator, x: &Array1<f64>) -> Result<Array1<f64>> {
        let n = s.node_count();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        match self.basis {
            TapBasis::Monomial => {
                let mut y = x.mapv(|v| v * self.taps[0]);
                let mut z = x.clone();
                for (k, &hk) in self.taps.iter().enumerate().skip(1) {
                    z = s.matrix().matvec(z.view());
                    if !z.iter().all(|v| v.is_finite()) {
                        return Err(Error::NonFinite(format!(
                            "shifted signal overflowed at hop {k}"
                        )));
                    }
                    if hk != 0.0 {
                        y.zip_mut_with(&z, |yi, &zi| *yi += hk * zi);
                    }
                }
                Ok(y)
            }
            TapBasis::Chebyshev { lambda_max } => {
                let gamma = lambda_max / 2.0;
                // Tbar_0 x = x, Tbar_1 x = S x / gamma - x
                let mut y = x.mapv(|v| v * (self.taps[0] / 2.0));
                if self.taps.len() == 1 {
                    return Ok(y);
                }
                let mut t_prev = x.clone();
                let sx = s.matrix().matvec(x.view());
                let mut t_curr: Array1<f64> =
                    Array1::from_iter(sx.iter().zip(x.iter()).map(|(&sv, &xv)| sv / gamma - xv));
                y.zip_mut_with(&t_curr, |yi, &ti| *yi += self.taps[1] * ti);
                for (k, &ck) in self.taps.iter().enumerate().skip(2) {
                    // Tbar_k x = (2/gamma)(S - gamma I) Tbar_{k-1} x - Tbar_{k-2} x
                    let st = s.matrix().matvec(t_curr.view());
                    let mut t_next = Array1::zeros(n);
                    for i in 0..n {
                        t_next[i] = 2.0 / gamma * (st[i] - gamma * t_curr[i]) - t_prev[i];
                    }
                    if !t_next.iter().all(|v: &f64| v.is_finite()) {
                        return Err(Error::NonFinite(format!(
                            "Chebyshev recursion overflowed at hop {k}"
                        )));
                    }
                    y.zip_mut_with(&t_next, |yi, &ti| *yi += ck * ti);
                    t_prev = t_curr;
                    t_curr = t_next;
                }
                Ok(y)
            }
        }
    }

    /// Pointwise frequency response on a set of (real) frequencies.
    pub fn frequency_response(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&l| self.response_at(l)).collect()
    }

    pub fn response_at(&self, lambda: f64) -> f64 {
        match self.basis {
            TapBasis::Monomial => linalg::horner(&self.taps, lambda),
            TapBasis::Chebyshev { lambda_max } => {
                let gamma = lambda_max / 2.0;
                let t = (lambda - gamma) / gamma;
                // Clenshaw over T_k(t) with the halved leading coefficient
                let mut b1 = 0.0;
                let mut b2 = 0.0;
                for &c in self.taps.iter().skip(1).rev() {
                    let b0 = 2.0 * t * b1 - b2 + c;
                    b2 = b1;
                    b1 = b0;
                }
                self.taps[0] / 2.0 + t * b1 - b2
            }
        }
    }

    pub fn response_at_complex(&self, lambda: Complex64) -> Complex64 {
        match self.basis {
            TapBasis::Monomial => self
                .taps
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * lambda + c),
            TapBasis::Chebyshev { lambda_max } => {
                let gamma = lambda_max / 2.0;
                let t = (lambda - gamma) / gamma;
                let mut b1 = Complex64::new(0.0, 0.0);
                let mut b2 = Complex64::new(0.0, 0.0);
                for &c in self.taps.iter().skip(1).rev() {
                    let b0 = t * b1 * 2.0 - b2 + c;
                    b2 = b1;
                    b1 = b0;
                }
                self.taps[0] / 2.0 + t * b1 - b2
            }
        }
    }

    /// Convert Chebyshev taps to the monomial basis (order <= 10 only).
    pub fn to_monomial(&self) -> Result<ConvFilter> {
        match self.basis {
            TapBasis::Monomial => Ok(self.clone()),
            TapBasis::Chebyshev { lambda_max } => {
                let k = self.order();
                if k > MONOMIAL_CONVERSION_CAP {
                    return Err(Error::Unsupported(format!(
                        "monomial conversion capped at order {MONOMIAL_CONVERSION_CAP}, filter has order {k}"
                    )));
                }
                let gamma = lambda_max / 2.0;
                // polynomials in lambda, coefficient vectors of length k+1
                let mut monomial = vec![0.0; k + 1];
                let mut t_prev = vec![0.0; k + 1];
                let mut t_curr = vec![0.0; k + 1];
                t_prev[0] = 1.0; // Tbar_0 = 1
                monomial[0] += self.taps[0] / 2.0;
                if k >= 1 {
                    // Tbar_1 = lambda / gamma - 1
                    t_curr[0] = -1.0;
                    t_curr[1] = 1.0 / gamma;
                    for (dst, src) in monomial.iter_mut().zip(t_curr.iter()) {
                        *dst += self.taps[1] * src;
                    }
                }
                for kk in 2..=k {
                    // Tbar_k = (2/gamma)(lambda - gamma) Tbar_{k-1} - Tbar_{k-2}
                    let mut t_next = vec![0.0; k + 1];
                    for d in 0..kk {
                        t_next[d + 1] += 2.0 / gamma * t_curr[d];
                        t_next[d] -= 2.0 * t_curr[d];
                    }
                    for d in 0..=k {
                        t_next[d] -= t_prev[d];
                    }
                    for (dst, src) in monomial.iter_mut().zip(t_next.iter()) {
                        *dst += self.taps[kk] * src;
                    }
                    t_prev = t_curr;
                    t_curr = t_next;
                }
                ConvFilter::from_taps(monomial)
            }
        }
    }

    /// Dense H(S) = sum h_k S^k; an oracle path for small operators.
    pub fn dense_operator(&self, s: &ShiftOperator) -> Result<Array2<f64>> {
        let mono = self.to_monomial()?;
        let n = s.node_count();
        let dense = s.to_dense();
        let mut acc = Array2::eye(n) * mono.taps[0];
        let mut power = Array2::eye(n);
        for &hk in mono.taps.iter().skip(1) {
            power = power.dot(&dense);
            acc = acc + &power * hk;
        }
        Ok(acc)
    }
}

/// Report from the exact operator-match design.
#[derive(Debug, Clone)]
pub struct ExactMatchDesign {
    pub filter: ConvFilter,
    /// ||H(S) - B||_F
    pub residual: f64,
    /// True when K < D (one below the paper's stated degree); the minimal
    /// interpolating degree K = D - 1 still matches exactly.
    pub degree_warning: bool,
}

const COMMUTATOR_REL_TOL: f64 = 1e-8;
const EIGENVALUE_GROUP_TOL: f64 = 1e-8;
const BETA_MATCH_TOL: f64 = 1e-6;

/// Design taps so that H(S) = B for an operator B simultaneously
/// diagonalizable with S. Checks the commutator, the equal-beta condition on
/// repeated eigenvalues, and solves the Vandermonde system on distinct
/// eigenvalues by least squares.
pub fn design_exact_match(
    b: &Array2<f64>,
    basis: &SpectralBasis,
    s: &ShiftOperator,
    k: usize,
) -> Result<ExactMatchDesign> {
    let n = s.node_count();
    if b.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim().0,
        });
    }
    let sd = s.to_dense();
    let comm = sd.dot(b) - b.dot(&sd);
    let scale = linalg::frobenius(&sd) * linalg::frobenius(b);
    if linalg::frobenius(&comm) > COMMUTATOR_REL_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::MatchCondition(format!(
            "S and B do not commute: ||SB - BS||_F = {:.3e}",
            linalg::frobenius(&comm)
        )));
    }
    // beta = diag(V^{-1} B V)
    let bc = b.mapv(|v| Complex64::new(v, 0.0));
    let m = basis.inverse().dot(&bc).dot(basis.eigenvectors());
    let beta: Vec<Complex64> = (0..n).map(|i| m[[i, i]]).collect();
    let lambdas = basis.eigenvalues();

    // group eigenvalues, check equal beta within groups
    let spread = lambdas
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut groups: Vec<(Complex64, Complex64)> = Vec::new(); // (lambda, beta)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        lambdas[i]
            .re
            .total_cmp(&lambdas[j].re)
            .then(lambdas[i].im.total_cmp(&lambdas[j].im))
    });
    for idx in order {
        match groups.last() {
            Some(&(rep, rep_beta))
                if (lambdas[idx] - rep).norm() <= EIGENVALUE_GROUP_TOL * spread =>
            {
                if (beta[idx] - rep_beta).norm() > BETA_MATCH_TOL * rep_beta.norm().max(1.0) {
                    return Err(Error::MatchCondition(format!(
                        "repeated eigenvalue {:.6} carries distinct responses {:.6} vs {:.6}",
                        rep.re, rep_beta.re, beta[idx].re
                    )));
                }
            }
            _ => groups.push((lambdas[idx], beta[idx])),
        }
    }
    let d = groups.len();
    if k + 1 < d {
        return Err(Error::MatchCondition(format!(
            "order K = {k} cannot interpolate {d} distinct eigenvalues (need K >= {})",
            d - 1
        )));
    }
    let degree_warning = k < d;

    let points: Vec<Complex64> = groups.iter().map(|&(l, _)| l).collect();
    let targets = Array1::from_iter(groups.iter().map(|&(_, b)| b));
    let vm = linalg::vandermonde_complex(&points, k);
    let h = linalg::lstsq_complex(&vm, &targets)?;
    let max_imag = h.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
    let scale_taps = h.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1.0);
    if max_imag > 1e-8 * scale_taps {
        return Err(Error::MatchCondition(format!(
            "matched taps are not real (max imaginary part {max_imag:.3e})"
        )));
    }
    let filter = ConvFilter::from_taps(h.iter().map(|c| c.re).collect())?;
    let residual = linalg::frobenius(&(filter.dense_operator(s)? - b));
    Ok(ExactMatchDesign {
        filter,
        residual,
        degree_warning,
    })
}

/// Least-squares universal design of order `k` on a uniform grid over
/// [lo, hi], solved by orthogonal factorization.
pub fn design_ls_universal(
    target: &dyn Fn(f64) -> f64,
    interval: (f64, f64),
    k: usize,
    grid_size: usize,
) -> Result<ConvFilter> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "invalid design interval [{lo}, {hi}]"
        )));
    }
    if grid_size < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "grid size {grid_size} below K + 1 = {}",
            k + 1
        )));
    }
    let pts = linalg::grid(lo, hi, grid_size);
    let samples: Vec<(f64, f64)> = pts.iter().map(|&l| (l, target(l))).collect();
    design_ls_from_samples(&samples, k)
}

/// Least-squares fit of monomial taps to sampled (lambda, beta) pairs.
pub fn design_ls_from_samples(samples: &[(f64, f64)], k: usize) -> Result<ConvFilter> {
    if samples.len() < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "need at least K + 1 = {} samples, got {}",
            k + 1,
            samples.len()
        )));
    }
    if samples.iter().any(|&(l, b)| !l.is_finite() || !b.is_finite()) {
        return Err(Error::NonFinite("design samples".into()));
    }
    let points: Vec<f64> = samples.iter().map(|&(l, _)| l).collect();
    let rhs = Array1::from_iter(samples.iter().map(|&(_, b)| b));
    let vm = linalg::vandermonde(&points, k);
    let taps = linalg::lstsq(&vm, &rhs)?;
    ConvFilter::from_taps(taps.to_vec())
}

/// Chebyshev design: closed-form coefficients on [0, lambda_max] by the
/// quadrature c_k = (2/pi) * int_0^pi cos(k t) beta(gamma (cos t + 1)) dt.
pub fn design_chebyshev(
    target: &dyn Fn(f64) -> f64,
    lambda_max: f64,
    k: usize,
    quad_points: usize,
) -> Result<ConvFilter> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let m = quad_points.max(k + 2);
    let gamma = lambda_max / 2.0;
    // composite trapezoid on [0, pi]; integrand samples reused for every k
    let thetas = linalg::grid(0.0, std::f64::consts::PI, m);
    let mut samples = Vec::with_capacity(m);
    for &t in &thetas {
        let v = target(gamma * (t.cos() + 1.0));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "target response at lambda = {}",
                gamma * (t.cos() + 1.0)
            )));
        }
        samples.push(v);
    }
    let h = std::f64::consts::PI / ((m - 1) as f64);
    let mut coeffs = Vec::with_capacity(k + 1);
    for kk in 0..=k {
        let mut acc = 0.0;
        for (i, &t) in thetas.iter().enumerate() {
            let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
            acc += w * (kk as f64 * t).cos() * samples[i];
        }
        coeffs.push(2.0 / std::f64::consts::PI * acc * h);
    }
    ConvFilter::from_chebyshev(coeffs, lambda_max)
}

/// Frobenius-optimal taps for an arbitrary dense target:
/// h = pinv([vec(I) vec(S) ... vec(S^K)]) vec(B).
pub fn design_nonspectral(b: &Array2<f64>, s: &ShiftOperator, k: usize) -> Result<(ConvFilter, f64)> {
    let n = s.node_count();
    if b.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim().0,
        });
    }
    let dense = s.to_dense();
    let mut theta = Array2::zeros((n * n, k + 1));
    let mut power = Array2::eye(n);
    for col in 0..=k {
        for i in 0..n {
            for j in 0..n {
                theta[[i * n + j, col]] = power[[i, j]];
            }
        }
        if col < k {
            power = power.dot(&dense);
        }
    }
    let mut rhs = Array1::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            rhs[i * n + j] = b[[i, j]];
        }
    }
    let taps = linalg::lstsq(&theta, &rhs)?;
    let residual = linalg::norm2((theta.dot(&taps) - &rhs).view());
    Ok((ConvFilter::from_taps(taps.to_vec())?, residual))
}

/// Integral Lipschitz constant C = max over the grid of |lambda h'(lambda)|.
pub fn integral_lipschitz_constant(
    filter: &ConvFilter,
    interval: (f64, f64),
    grid_size: usize,
) -> Result<f64> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "invalid interval [{lo}, {hi}]"
        )));
    }
    let mono = filter.to_monomial()?;
    let taps = mono.taps();
    // derivative coefficients sum_k k h_k lambda^{k-1}
    let deriv: Vec<f64> = taps
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &h)| k as f64 * h)
        .collect();
    if deriv.is_empty() {
        return Ok(0.0);
    }
    let pts = linalg::grid(lo, hi, grid_size.max(2));
    Ok(pts
        .iter()
        .map(|&l| (l * linalg::horner(&deriv, l)).abs())
        .fold(0.0, f64::max))
}

/// First-order output-deviation bound eps (1 + 8 sqrt(N)) C ||x||_2 under a
/// relative shift perturbation of size eps.
pub fn stability_bound(c: f64, eps: f64, n: usize, x_norm: f64) -> Result<f64> {
    if eps < 0.0 || c < 0.0 || x_norm < 0.0 {
        return Err(Error::InvalidParameter(
            "stability bound needs nonnegative inputs".into(),
        ));
    }
    Ok(eps * (1.0 + 8.0 * (n as f64).sqrt()) * c * x_norm)
}
