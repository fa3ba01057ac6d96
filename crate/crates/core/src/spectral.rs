//! Spectral analysis: eigendecomposition of shift operators, the graph
//! Fourier transform, variation measures and bandlimited projections.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{GsoKind, ShiftOperator};
use crate::linalg;

/// Default node cap for the dense complex solver used on non-symmetric GSOs.
pub const DEFAULT_EIGEN_CAP: usize = 2000;

const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Eigenvector basis of a shift operator.
///
/// Symmetric sources keep a real orthonormal basis with ascending eigenvalues;
/// everything else is held in complex form with `V^{-1}` materialized.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    values: Array1<Complex64>,
    vectors: Array2<Complex64>,
    inverse: Array2<Complex64>,
    real: Option<(Array1<f64>, Array2<f64>)>,
}

impl SpectralBasis {
    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn symmetric_source(&self) -> bool {
        self.real.is_some()
    }

    pub fn eigenvalues(&self) -> &Array1<Complex64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &Array2<Complex64> {
        &self.vectors
    }

    pub fn inverse(&self) -> &Array2<Complex64> {
        &self.inverse
    }

    /// Real ascending eigenvalues; only for symmetric sources.
    pub fn real_eigenvalues(&self) -> Result<&Array1<f64>> {
        self.real
            .as_ref()
            .map(|(v, _)| v)
            .ok_or_else(|| Error::Unsupported("basis is not from a symmetric operator".into()))
    }

    /// Real orthonormal eigenvectors; only for symmetric sources.
    pub fn real_eigenvectors(&self) -> Result<&Array2<f64>> {
        self.real
            .as_ref()
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Unsupported("basis is not from a symmetric operator".into()))
    }

    /// Forward GFT: x_tilde = V^{-1} x.
    pub fn gft(&self, x: &Array1<f64>) -> Result<Array1<Complex64>> {
        self.check_len(x.len())?;
        if let Some((_, v)) = &self.real {
            let xt = v.t().dot(x);
            return Ok(xt.mapv(|r| Complex64::new(r, 0.0)));
        }
        let xc = x.mapv(|r| Complex64::new(r, 0.0));
        Ok(self.inverse.dot(&xc))
    }

    /// Inverse GFT: x = V x_tilde.
    pub fn igft(&self, coeffs: &Array1<Complex64>) -> Result<Array1<Complex64>> {
        self.check_len(coeffs.len())?;
        Ok(self.vectors.dot(coeffs))
    }

    /// Forward GFT for symmetric sources, staying real.
    pub fn gft_real(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_len(x.len())?;
        let (_, v) = self
            .real
            .as_ref()
            .ok_or_else(|| Error::Unsupported("real GFT needs a symmetric source".into()))?;
        Ok(v.t().dot(x))
    }

    /// Inverse GFT for symmetric sources.
    pub fn igft_real(&self, coeffs: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_len(coeffs.len())?;
        let (_, v) = self
            .real
            .as_ref()
            .ok_or_else(|| Error::Unsupported("real GFT needs a symmetric source".into()))?;
        Ok(v.dot(coeffs))
    }

    /// Apply a pointwise spectral response: x -> V diag(response) V^{-1} x,
    /// keeping the real fast path for symmetric sources.
    pub fn filter_real(&self, response: &Array1<f64>, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_len(x.len())?;
        if response.len() != self.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.node_count(),
                got: response.len(),
            });
        }
        let (_, v) = self
            .real
            .as_ref()
            .ok_or_else(|| Error::Unsupported("spectral filtering needs a symmetric source".into()))?;
        let mut xt = v.t().dot(x);
        xt.zip_mut_with(response, |c, &r| *c *= r);
        Ok(v.dot(&xt))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.node_count(),
                got,
            });
        }
        Ok(())
    }

    /// CSV rows (index, Re lambda, Im lambda).
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("index,re_lambda,im_lambda\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, v.re, v.im));
        }
        out
    }
}

/// Eigendecompose a shift operator with the default size cap for the
/// non-symmetric dense path.
pub fn eigendecompose(s: &ShiftOperator) -> Result<SpectralBasis> {
    eigendecompose_capped(s, DEFAULT_EIGEN_CAP)
}

/// Eigendecompose, failing when a non-symmetric operator exceeds `cap` nodes
/// or when the reconstruction residual betrays a (numerically)
/// non-diagonalizable matrix.
pub fn eigendecompose_capped(s: &ShiftOperator, cap: usize) -> Result<SpectralBasis> {
    let n = s.node_count();
    let dense = s.to_dense();
    let norm = linalg::frobenius(&dense);
    if s.is_symmetric() {
        let (vals, vecs) = linalg::eigh_ascending(&dense)?;
        let basis = SpectralBasis {
            values: vals.mapv(|r| Complex64::new(r, 0.0)),
            vectors: vecs.mapv(|r| Complex64::new(r, 0.0)),
            inverse: vecs.t().mapv(|r| Complex64::new(r, 0.0)),
            real: Some((vals, vecs)),
        };
        return Ok(basis);
    }
    if n > cap {
        return Err(Error::EigenCapExceeded { n, cap });
    }
    let (vals, vecs) = linalg::eig_sorted(&dense)?;
    let inverse = linalg::inv_complex(&vecs)?;
    // reconstruction check: ||S - V diag(lambda) V^{-1}||_F <= tol * ||S||_F
    let mut recon = vecs.clone();
    for (mut col, v) in recon.columns_mut().into_iter().zip(vals.iter()) {
        col.mapv_inplace(|c| c * v);
    }
    let recon = recon.dot(&inverse);
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let diff = recon[[i, j]] - Complex64::new(dense[[i, j]], 0.0);
            residual += diff.norm_sqr();
        }
    }
    let residual = residual.sqrt();
    let tolerance = RECONSTRUCTION_TOL * norm.max(f64::MIN_POSITIVE);
    if residual > tolerance {
        return Err(Error::NonDiagonalizable {
            residual,
            tolerance,
        });
    }
    Ok(SpectralBasis {
        values: vals,
        vectors: vecs,
        inverse,
        real: None,
    })
}

/// Quadratic variation TV_2(x) = x^T L x for a symmetric Laplacian.
pub fn tv2(l: &ShiftOperator, x: &Array1<f64>) -> Result<f64> {
    if l.kind() != GsoKind::Laplacian {
        return Err(Error::InvalidParameter(format!(
            "tv2 needs kind=laplacian, got {}",
            l.kind()
        )));
    }
    if !l.is_symmetric() {
        return Err(Error::Unsupported("tv2 needs a symmetric laplacian".into()));
    }
    if x.len() != l.node_count() {
        return Err(Error::DimensionMismatch {
            expected: l.node_count(),
            got: x.len(),
        });
    }
    let lx = l.matrix().matvec(x.view());
    // clamp away negative rounding noise
    Ok(x.dot(&lx).max(0.0))
}

/// Total variation TV_1(x) = ||x - S x||_1 with S = |lambda_max|^{-1} A.
pub fn tv1(a: &ShiftOperator, x: &Array1<f64>) -> Result<f64> {
    if a.kind() != GsoKind::Adjacency {
        return Err(Error::InvalidParameter(format!(
            "tv1 needs kind=adjacency, got {}",
            a.kind()
        )));
    }
    if x.len() != a.node_count() {
        return Err(Error::DimensionMismatch {
            expected: a.node_count(),
            got: x.len(),
        });
    }
    let radius = spectral_radius(a)?;
    if radius == 0.0 {
        return Err(Error::InvalidParameter(
            "tv1 undefined for the zero adjacency (lambda_max = 0)".into(),
        ));
    }
    let sx = a.matrix().matvec(x.view());
    Ok(x.iter()
        .zip(sx.iter())
        .map(|(xi, si)| (xi - si / radius).abs())
        .sum())
}

/// Spectral radius |lambda|_max of a shift operator. Symmetric operators use
/// power iteration; directed ones fall back to the dense complex solver.
pub fn spectral_radius(s: &ShiftOperator) -> Result<f64> {
    if s.matrix().nnz() == 0 {
        return Ok(0.0);
    }
    if s.is_symmetric() {
        return Ok(linalg::power_iteration_radius(s.matrix(), 500, 1e-12));
    }
    let (vals, _) = linalg::eig_sorted(&s.to_dense())?;
    Ok(vals.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Order eigenvalue indices by increasing variability: distance
/// |lambda_ref - lambda_i| in the complex plane from the reference
/// eigenvalue (the one with largest real part). Ties break by descending
/// real part, then ascending imaginary part.
pub fn directed_frequency_order(basis: &SpectralBasis) -> Vec<usize> {
    let vals = basis.eigenvalues();
    let reference = vals
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .unwrap_or(Complex64::new(0.0, 0.0));
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| {
        let di = (reference - vals[i]).norm();
        let dj = (reference - vals[j]).norm();
        di.total_cmp(&dj)
            .then(vals[j].re.total_cmp(&vals[i].re))
            .then(vals[i].im.total_cmp(&vals[j].im))
    });
    order
}

/// Project onto the K lowest-variation basis vectors (real, symmetric source).
pub fn bandlimit_project(basis: &SpectralBasis, x: &Array1<f64>, k: usize) -> Result<Array1<f64>> {
    let n = basis.node_count();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "bandlimit needs 1 <= K <= N, got K = {k}, N = {n}"
        )));
    }
    let mut coeffs = basis.gft_real(x)?;
    for i in k..n {
        coeffs[i] = 0.0; // symmetric: ascending-eigenvalue order
    }
    basis.igft_real(&coeffs)
}

/// Complex-basis projection using the directed frequency order; idempotent.
pub fn bandlimit_project_complex(
    basis: &SpectralBasis,
    x: &Array1<f64>,
    k: usize,
) -> Result<Array1<Complex64>> {
    let n = basis.node_count();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "bandlimit needs 1 <= K <= N, got K = {k}, N = {n}"
        )));
    }
    let order = directed_frequency_order(basis);
    let keep: std::collections::HashSet<usize> = order[..k].iter().copied().collect();
    let mut coeffs = basis.gft(x)?;
    for i in 0..n {
        if !keep.contains(&i) {
            coeffs[i] = Complex64::new(0.0, 0.0);
        }
    }
    basis.igft(&coeffs)
}
