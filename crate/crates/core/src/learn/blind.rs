//! Blind deconvolution by lifting: recover an input signal and filter taps
//! jointly from one output, through the convex program
//! min ||y - A(Z)||^2 + gamma1 ||Z||_* + gamma2 ||Z||_{2,1} over the lifted
//! matrix Z standing in for x h^T.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::SpectralBasis;

#[derive(Debug, Clone)]
pub struct BlindConfig {
    /// Nuclear-norm weight (low rank).
    pub gamma_rank: f64,
    /// Row-sparsity weight (sparse input signal).
    pub gamma_rows: f64,
    pub max_iters: usize,
    /// Consensus ADMM penalty.
    pub rho: f64,
}

impl BlindConfig {
    pub fn new(gamma_rank: f64, gamma_rows: f64) -> BlindConfig {
        BlindConfig {
            gamma_rank,
            gamma_rows,
            max_iters: 800,
            rho: 0.25,
        }
    }
}

/// Solution of the lifted program with its rank-1 reading.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    /// N x (K+1) lifted estimate.
    pub z: Array2<f64>,
    pub objective_trace: Vec<f64>,
    /// Input factor from the leading singular triplet, scaled by sqrt(sigma).
    pub factor_x: Array1<f64>,
    /// Tap factor, scaled by sqrt(sigma).
    pub factor_h: Array1<f64>,
    pub converged: bool,
}

/// The lifting operator as a dense matrix A with
/// A[j, k N + i] = lambda_j^k [(V^T)^{-1}]_{ij}, composed with the inverse
/// GFT so that A vec(x h^T) = H(S) x in the vertex domain.
pub fn lifting_matrix(basis: &SpectralBasis, order: usize) -> Result<Array2<f64>> {
    let n = basis.node_count();
    let v = basis.real_eigenvectors()?; // orthonormal: (V^T)^{-1} = V
    let lambdas = basis.real_eigenvalues()?;
    let mut spectral = Array2::zeros((n, n * (order + 1)));
    for j in 0..n {
        let mut power = 1.0;
        for k in 0..=order {
            for i in 0..n {
                spectral[[j, k * n + i]] = power * v[[i, j]];
            }
            power *= lambdas[j];
        }
    }
    Ok(v.dot(&spectral))
}

fn vec_of(z: &Array2<f64>) -> Array1<f64> {
    let (n, cols) = z.dim();
    let mut out = Array1::zeros(n * cols);
    for k in 0..cols {
        for i in 0..n {
            out[k * n + i] = z[[i, k]];
        }
    }
    out
}

fn mat_of(v: &Array1<f64>, n: usize, cols: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n, cols));
    for k in 0..cols {
        for i in 0..n {
            out[[i, k]] = v[k * n + i];
        }
    }
    out
}

/// Objective value of the lifted program.
pub fn lifted_objective(
    a: &Array2<f64>,
    y: &Array1<f64>,
    config: &BlindConfig,
    z: &Array2<f64>,
) -> Result<f64> {
    let r = a.dot(&vec_of(z)) - y;
    let (_, sv, _) = linalg::svd(z)?;
    let nuclear: f64 = sv.sum();
    let rows: f64 = (0..z.nrows()).map(|i| linalg::norm2(z.row(i))).sum();
    Ok(r.dot(&r) + config.gamma_rank * nuclear + config.gamma_rows * rows)
}

/// Solve the lifted program by three-block consensus ADMM: an exact prox for
/// the data term, singular-value soft-thresholding for the nuclear norm, and
/// row shrinkage for the l2,1 norm.
pub fn blind_deconvolve(
    basis: &SpectralBasis,
    y: &Array1<f64>,
    order: usize,
    config: &BlindConfig,
) -> Result<LiftedSolution> {
    let n = basis.node_count();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if config.gamma_rank < 0.0 || config.gamma_rows < 0.0 {
        return Err(Error::InvalidParameter(
            "regularization weights must be nonnegative".into(),
        ));
    }
    let a = lifting_matrix(basis, order)?;
    let cols = order + 1;
    let dim = n * cols;
    let rho = config.rho;
    // prefactor the data prox: (2 A^T A + rho I) z = 2 A^T y + rho v
    let mut gram = a.t().dot(&a) * 2.0;
    for i in 0..dim {
        gram[[i, i]] += rho;
    }
    let chol = linalg::cholesky_lower(&gram)?;
    let solve_spd = |rhs: &Array1<f64>| -> Result<Array1<f64>> {
        use ndarray_linalg::{Diag, SolveTriangular, UPLO};
        let w = chol
            .solve_triangular(UPLO::Lower, Diag::NonUnit, rhs)
            .map_err(Error::linalg)?;
        chol.t()
            .to_owned()
            .solve_triangular(UPLO::Upper, Diag::NonUnit, &w)
            .map_err(Error::linalg)
    };
    let aty2 = a.t().dot(y) * 2.0;

    let prox_data = |v: &Array2<f64>| -> Result<Array2<f64>> {
        let rhs = &aty2 + &(vec_of(v) * rho);
        Ok(mat_of(&solve_spd(&rhs)?, n, cols))
    };
    let prox_nuclear = |v: &Array2<f64>| -> Result<Array2<f64>> {
        if config.gamma_rank == 0.0 {
            return Ok(v.clone());
        }
        let (u, sv, vt) = linalg::svd(v)?;
        let threshold = config.gamma_rank / rho;
        let r = sv.len();
        let mut out = Array2::zeros(v.dim());
        for t in 0..r {
            let s = (sv[t] - threshold).max(0.0);
            if s == 0.0 {
                continue;
            }
            for i in 0..v.nrows() {
                for j in 0..v.ncols() {
                    out[[i, j]] += s * u[[i, t]] * vt[[t, j]];
                }
            }
        }
        Ok(out)
    };
    let prox_rows = |v: &Array2<f64>| -> Result<Array2<f64>> {
        if config.gamma_rows == 0.0 {
            return Ok(v.clone());
        }
        let threshold = config.gamma_rows / rho;
        let mut out = v.clone();
        for mut row in out.rows_mut() {
            let norm = row.dot(&row).sqrt();
            let scale = if norm > threshold {
                1.0 - threshold / norm
            } else {
                0.0
            };
            row.mapv_inplace(|x| x * scale);
        }
        Ok(out)
    };

    let mut consensus = Array2::<f64>::zeros((n, cols));
    let mut duals = vec![Array2::<f64>::zeros((n, cols)); 3];
    let mut trace = Vec::with_capacity(config.max_iters);
    let mut converged = false;
    for _ in 0..config.max_iters {
        let z0 = prox_data(&(&consensus - &duals[0]))?;
        let z1 = prox_nuclear(&(&consensus - &duals[1]))?;
        let z2 = prox_rows(&(&consensus - &duals[2]))?;
        let prev = consensus.clone();
        consensus = (&z0 + &duals[0] + &z1 + &duals[1] + &z2 + &duals[2]) / 3.0;
        duals[0] = &duals[0] + &z0 - &consensus;
        duals[1] = &duals[1] + &z1 - &consensus;
        duals[2] = &duals[2] + &z2 - &consensus;
        trace.push(lifted_objective(&a, y, config, &consensus)?);
        let step = linalg::frobenius(&(&consensus - &prev));
        let spread = linalg::frobenius(&(&z0 - &consensus))
            + linalg::frobenius(&(&z1 - &consensus))
            + linalg::frobenius(&(&z2 - &consensus));
        if step <= 1e-12 && spread <= 1e-10 {
            converged = true;
            break;
        }
    }
    // rank-1 reading from the leading singular triplet
    let (u, sv, vt) = linalg::svd(&consensus)?;
    let sigma = sv[0].max(0.0);
    let scale = sigma.sqrt();
    let factor_x = Array1::from_iter((0..n).map(|i| scale * u[[i, 0]]));
    let factor_h = Array1::from_iter((0..cols).map(|j| scale * vt[[0, j]]));
    Ok(LiftedSolution {
        z: consensus,
        objective_trace: trace,
        factor_x,
        factor_h,
        converged,
    })
}
