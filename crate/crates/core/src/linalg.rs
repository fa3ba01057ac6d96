//! Thin wrappers over the LAPACK-backed dense routines plus a few small
//! numerical utilities shared across modules.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use ndarray_linalg::{
    Cholesky, Eig, Eigh, Inverse, LeastSquaresSvd, Solve, SVD, UPLO,
};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Symmetric eigendecomposition, eigenvalues ascending, orthonormal columns.
pub fn eigh_ascending(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (vals, vecs) = a.eigh(UPLO::Lower).map_err(Error::linalg)?;
    Ok((vals, vecs))
}

/// General (possibly complex) eigendecomposition, sorted by (Re, Im).
pub fn eig_sorted(a: &Array2<f64>) -> Result<(Array1<Complex64>, Array2<Complex64>)> {
    let (vals, vecs) = a.eig().map_err(Error::linalg)?;
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        vals[i]
            .re
            .total_cmp(&vals[j].re)
            .then(vals[i].im.total_cmp(&vals[j].im))
    });
    let sorted_vals = Array1::from_iter(order.iter().map(|&i| vals[i]));
    let mut sorted_vecs = Array2::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        sorted_vecs
            .column_mut(new)
            .assign(&vecs.index_axis(Axis(1), old));
    }
    Ok((sorted_vals, sorted_vecs))
}

pub fn inv_complex(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    a.inv().map_err(Error::linalg)
}

pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    a.solve(b).map_err(Error::linalg)
}

/// Minimum-norm least-squares solution of A x = b (SVD based).
pub fn lstsq(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let sol = a.least_squares(b).map_err(Error::linalg)?;
    Ok(sol.solution)
}

pub fn lstsq_complex(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let sol = a.least_squares(b).map_err(Error::linalg)?;
    Ok(sol.solution)
}

pub fn svd(a: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (u, s, vt) = a.svd(true, true).map_err(Error::linalg)?;
    Ok((
        u.ok_or_else(|| Error::Linalg("missing U factor".into()))?,
        s,
        vt.ok_or_else(|| Error::Linalg("missing V^T factor".into()))?,
    ))
}

pub fn cholesky_lower(a: &Array2<f64>) -> Result<Array2<f64>> {
    a.cholesky(UPLO::Lower)
        .map_err(|e| Error::NotPositiveDefinite(e.to_string()))
}

/// Vandermonde matrix with rows [1, x, x^2, ..., x^degree].
pub fn vandermonde(points: &[f64], degree: usize) -> Array2<f64> {
    let mut m = Array2::zeros((points.len(), degree + 1));
    for (i, &x) in points.iter().enumerate() {
        let mut p = 1.0;
        for k in 0..=degree {
            m[[i, k]] = p;
            p *= x;
        }
    }
    m
}

pub fn vandermonde_complex(points: &[Complex64], degree: usize) -> Array2<Complex64> {
    let mut m = Array2::zeros((points.len(), degree + 1));
    for (i, &x) in points.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for k in 0..=degree {
            m[[i, k]] = p;
            p *= x;
        }
    }
    m
}

/// Horner evaluation of sum_k c_k x^k.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Estimate of the spectral radius |lambda|_max by power iteration.
///
/// Runs `steps` iterations with a deterministic start vector, stopping early
/// once the Rayleigh estimate is stable to `rel_tol`. Returns 0 for the zero
/// matrix.
pub fn power_iteration_radius(s: &CsrMatrix, steps: usize, rel_tol: f64) -> f64 {
    let n = s.nrows();
    if n == 0 || s.nnz() == 0 {
        return 0.0;
    }
    // fixed quasi-random start; avoids special orthogonality to common eigenvectors
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + 0.01 * ((i as f64) + 1.0).sin()));
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm);
    let mut estimate = 0.0f64;
    for _ in 0..steps {
        let w = s.matvec(v.view());
        let wnorm = w.dot(&w).sqrt();
        if wnorm == 0.0 || !wnorm.is_finite() {
            return estimate;
        }
        let next = wnorm; // |lambda| estimate for unit v
        let done = (next - estimate).abs() <= rel_tol * next.max(1e-300);
        estimate = next;
        v = w / wnorm;
        if done {
            break;
        }
    }
    estimate
}

/// Uniform grid of `count >= 2` points over [lo, hi].
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "grid needs at least two points");
    let step = (hi - lo) / ((count - 1) as f64);
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// Group sorted real values into clusters of equal values up to `tol`,
/// returning one representative (the mean) per group and the member indices.
pub fn group_close(values: ArrayView1<f64>, tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for idx in order {
        let v = values[idx];
        match groups.last_mut() {
            Some((rep, members)) if (v - *rep).abs() <= tol => {
                let k = members.len() as f64;
                *rep = (*rep * k + v) / (k + 1.0);
                members.push(idx);
            }
            _ => groups.push((v, vec![idx])),
        }
    }
    groups
}

/// Jacobi-preconditioned conjugate gradients for SPD operators given as a
/// closure. Returns (solution, iterations, final absolute residual).
pub(crate) fn pcg(
    apply: &dyn Fn(&Array1<f64>) -> Array1<f64>,
    rhs: &Array1<f64>,
    diag: &Array1<f64>,
    abs_tol: f64,
    max_iter: usize,
) -> Result<(Array1<f64>, usize, f64)> {
    let n = rhs.len();
    let mut x = Array1::zeros(n);
    let mut r = rhs.clone();
    let mut z = &r / diag;
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut iterations = 0;
    let mut rnorm = norm2(r.view());
    while rnorm > abs_tol && iterations < max_iter {
        let ap = apply(&p);
        let denom = p.dot(&ap);
        if !(denom.is_finite() && denom > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "curvature p^T A p = {denom:.3e} in cg"
            )));
        }
        let alpha = rz / denom;
        x.zip_mut_with(&p, |xi, &pi| *xi += alpha * pi);
        r.zip_mut_with(&ap, |ri, &api| *ri -= alpha * api);
        rnorm = norm2(r.view());
        z = &r / diag;
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p = &z + &(&p * beta);
        iterations += 1;
    }
    if rnorm > abs_tol {
        return Err(Error::NoConvergence(format!(
            "cg residual {rnorm:.3e} above {abs_tol:.3e} after {iterations} iterations"
        )));
    }
    Ok((x, iterations, rnorm))
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm2(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn power_iteration_on_path_laplacian() {
        let l = array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        let s = CsrMatrix::from_dense(&l).unwrap();
        let r = power_iteration_radius(&s, 500, 1e-12);
        assert!((r - 3.0).abs() < 1e-6, "radius {r}");
    }

    #[test]
    fn horner_matches_naive() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let x = 1.7f64;
        let naive: f64 = c
            .iter()
            .enumerate()
            .map(|(k, &ck)| ck * x.powi(k as i32))
            .sum();
        assert!((horner(&c, x) - naive).abs() < 1e-12);
    }

    #[test]
    fn group_close_merges() {
        let v = array![0.0, 1.0, 1.0 + 1e-12, 2.0];
        let groups = group_close(v.view(), 1e-9);
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[1].1.len(), 2);
    }
}
