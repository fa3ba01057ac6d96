//! Filters beyond the shift-invariant convolution: node-varying and
//! edge-varying linear filters, the nonlinear Volterra and median filters,
//! and filters driven by several shift operators at once.

use ndarray::{Array1, Array2};

use crate::conv::ConvFilter;
use crate::error::{Error, Result};
use crate::graph::ShiftOperator;
use crate::linalg;
use crate::sparse::CsrMatrix;
use crate::spectral::SpectralBasis;

/// Threshold below which an eigenvector entry u_i counts as zero in the
/// node-varying match conditions.
pub const NODE_MATCH_ZERO_TOL: f64 = 1e-10;

/// Per-node tap table: row k holds the node-specific taps h_{k, 1..N}.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVaryingFilter {
    coeffs: Array2<f64>, // (K+1) x N
}

impl NodeVaryingFilter {
    pub fn new(coeffs: Array2<f64>) -> Result<NodeVaryingFilter> {
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("node-varying coefficients".into()));
        }
        if coeffs.nrows() == 0 {
            return Err(Error::InvalidParameter("needs at least hop 0".into()));
        }
        Ok(NodeVaryingFilter { coeffs })
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    pub fn node_count(&self) -> usize {
        self.coeffs.ncols()
    }

    /// y = sum_k diag(h_k) S^k x via the shift recursion.
    pub fn apply(&self, s: &ShiftOperator, x: &Array1<f64>) -> Result<Array1<f64>> {
        let n = s.node_count();
        if x.len() != n || self.node_count() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len().max(self.node_count()),
            });
        }
        let mut y = Array1::zeros(n);
        let mut z = x.clone();
        for k in 0..=self.order() {
            if k > 0 {
                z = s.matrix().matvec(z.view());
            }
            for i in 0..n {
                y[i] += self.coeffs[[k, i]] * z[i];
            }
        }
        Ok(y)
    }

    pub fn dense_operator(&self, s: &ShiftOperator) -> Result<Array2<f64>> {
        let n = s.node_count();
        if self.node_count() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.node_count(),
            });
        }
        let sd = s.to_dense();
        let mut acc = Array2::zeros((n, n));
        let mut power = Array2::eye(n);
        for k in 0..=self.order() {
            if k > 0 {
                power = power.dot(&sd);
            }
            for i in 0..n {
                for j in 0..n {
                    acc[[i, j]] += self.coeffs[[k, i]] * power[[i, j]];
                }
            }
        }
        Ok(acc)
    }
}

/// Edge-varying filter: y = sum_k H_k S^k x with H_0 diagonal and each H_k
/// supported on the graph support plus the diagonal.
#[derive(Debug, Clone)]
pub struct EdgeVaryingFilter {
    mats: Vec<CsrMatrix>,
}

impl EdgeVaryingFilter {
    /// Validates the support constraint against `s`.
    pub fn new(mats: Vec<CsrMatrix>, s: &ShiftOperator) -> Result<EdgeVaryingFilter> {
        if mats.is_empty() {
            return Err(Error::InvalidParameter("needs at least H_0".into()));
        }
        let n = s.node_count();
        for (k, m) in mats.iter().enumerate() {
            if m.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.nrows(),
                });
            }
            for i in 0..n {
                for (j, v) in m.row(i) {
                    if v == 0.0 {
                        continue;
                    }
                    if k == 0 && i != j {
                        return Err(Error::SupportViolation { row: i, col: j });
                    }
                    if i != j && s.matrix().get(i, j) == 0.0 {
                        return Err(Error::SupportViolation { row: i, col: j });
                    }
                }
            }
        }
        Ok(EdgeVaryingFilter { mats })
    }

    pub fn mats(&self) -> &[CsrMatrix] {
        &self.mats
    }

    pub fn order(&self) -> usize {
        self.mats.len() - 1
    }

    /// y = sum_k H_k (S^k x): the raw shifts propagate through S, the edge
    /// weights only reweight locally.
    pub fn apply(&self, s: &ShiftOperator, x: &Array1<f64>) -> Result<Array1<f64>> {
        let n = s.node_count();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut y = self.mats[0].matvec(x.view());
        let mut z = x.clone();
        for k in 1..=self.order() {
            z = s.matrix().matvec(z.view());
            let contribution = self.mats[k].matvec(z.view());
            y.zip_mut_with(&contribution, |a, &b| *a += b);
        }
        Ok(y)
    }

    pub fn dense_operator(&self, s: &ShiftOperator) -> Result<Array2<f64>> {
        let n = s.node_count();
        let sd = s.to_dense();
        let mut acc = Array2::zeros((n, n));
        let mut power = Array2::eye(n);
        for (k, m) in self.mats.iter().enumerate() {
            if k > 0 {
                power = power.dot(&sd);
            }
            acc = acc + m.to_dense().dot(&power);
        }
        Ok(acc)
    }
}

/// Volterra filter: sparse table of multi-index coefficients over elementwise
/// products of the shifted signals.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraFilter {
    shift_order: usize,
    degree_caps: Vec<u32>,
    /// (multi-index l_0..l_K, coefficient); only nonzero entries are stored.
    terms: Vec<(Vec<u32>, f64)>,
}

/// Dense multi-index enumeration is forbidden beyond this table size.
pub const VOLTERRA_TABLE_CAP: f64 = 1e6;

impl VolterraFilter {
    pub fn new(degree_caps: Vec<u32>, terms: Vec<(Vec<u32>, f64)>) -> Result<VolterraFilter> {
        if degree_caps.is_empty() {
            return Err(Error::InvalidParameter("needs at least L_0".into()));
        }
        let table: f64 = degree_caps.iter().map(|&l| (l + 1) as f64).product();
        if table > VOLTERRA_TABLE_CAP {
            return Err(Error::InvalidParameter(format!(
                "dense multi-index table of size {table:.1e} exceeds cap {VOLTERRA_TABLE_CAP:.0e}"
            )));
        }
        for (idx, coeff) in &terms {
            if idx.len() != degree_caps.len() {
                return Err(Error::InvalidParameter(
                    "multi-index length must match number of degree caps".into(),
                ));
            }
            if idx.iter().zip(&degree_caps).any(|(l, cap)| l > cap) {
                return Err(Error::InvalidParameter(format!(
                    "multi-index {idx:?} exceeds degree caps {degree_caps:?}"
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::NonFinite("volterra coefficient".into()));
            }
        }
        Ok(VolterraFilter {
            shift_order: degree_caps.len() - 1,
            degree_caps,
            terms,
        })
    }

    pub fn shift_order(&self) -> usize {
        self.shift_order
    }

    pub fn degree_caps(&self) -> &[u32] {
        &self.degree_caps
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn apply(&self, s: &ShiftOperator, x: &Array1<f64>) -> Result<Array1<f64>> {
        let n = s.node_count();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        // precompute shifted signals z^(k)
        let mut shifts: Vec<Array1<f64>> = Vec::with_capacity(self.shift_order + 1);
        shifts.push(x.clone());
        for _ in 1..=self.shift_order {
            let next = s.matrix().matvec(shifts.last().unwrap().view());
            shifts.push(next);
        }
        let mut y = Array1::zeros(n);
        for (idx, coeff) in &self.terms {
            let mut term = Array1::from_elem(n, *coeff);
            for (k, &power) in idx.iter().enumerate() {
                if power == 0 {
                    continue;
                }
                for i in 0..n {
                    term[i] *= shifts[k][i].powi(power as i32);
                }
            }
            if !term.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("volterra term {idx:?} overflowed")));
            }
            y.zip_mut_with(&term, |a, &b| *a += b);
        }
        Ok(y)
    }
}

/// Median filter: each node outputs the median of a multiset holding h_k
/// copies of its k-shifted value.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianFilter {
    replications: Vec<u32>,
}

impl MedianFilter {
    pub fn new(replications: Vec<u32>) -> Result<MedianFilter> {
        if replications.iter().map(|&r| r as u64).sum::<u64>() == 0 {
            return Err(Error::InvalidParameter(
                "median filter needs at least one replication".into(),
            ));
        }
        Ok(MedianFilter { replications })
    }

    pub fn replications(&self) -> &[u32] {
        &self.replications
    }

    /// Even total replication returns the midpoint of the two central values.
    pub fn apply(&self, s: &ShiftOperator, x: &Array1<f64>) -> Result<Array1<f64>> {
        let n = s.node_count();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let k_max = self.replications.len() - 1;
        let mut shifts: Vec<Array1<f64>> = Vec::with_capacity(k_max + 1);
        shifts.push(x.clone());
        for _ in 1..=k_max {
            let next = s.matrix().matvec(shifts.last().unwrap().view());
            shifts.push(next);
        }
        let total: usize = self.replications.iter().map(|&r| r as usize).sum();
        let mut y = Array1::zeros(n);
        let mut values = Vec::with_capacity(total);
        for i in 0..n {
            values.clear();
            for (k, &reps) in self.replications.iter().enumerate() {
                for _ in 0..reps {
                    values.push(shifts[k][i]);
                }
            }
            values.sort_by(|a, b| a.total_cmp(b));
            y[i] = if total % 2 == 1 {
                values[total / 2]
            } else {
                0.5 * (values[total / 2 - 1] + values[total / 2])
            };
        }
        Ok(y)
    }
}

/// Parallel bank of convolutional filters over multiple shift operators:
/// y = sum_q sum_k h_{qk} S_q^k x.
#[derive(Debug, Clone)]
pub struct MultiGsoFilter {
    coeffs: Array2<f64>, // Q x (K+1)
}

impl MultiGsoFilter {
    pub fn new(coeffs: Array2<f64>) -> Result<MultiGsoFilter> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::InvalidParameter("empty coefficient matrix".into()));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("multi-gso coefficients".into()));
        }
        Ok(MultiGsoFilter { coeffs })
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn apply(&self, gsos: &[&ShiftOperator], x: &Array1<f64>) -> Result<Array1<f64>> {
        if gsos.len() != self.coeffs.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.nrows(),
                got: gsos.len(),
            });
        }
        let n = x.len();
        if gsos.iter().any(|s| s.node_count() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: gsos.iter().map(|s| s.node_count()).max().unwrap_or(0),
            });
        }
        let mut y = Array1::zeros(n);
        for (q, s) in gsos.iter().enumerate() {
            let taps: Vec<f64> = self.coeffs.row(q).to_vec();
            let part = ConvFilter::from_taps(taps)?.apply(s, x)?;
            y.zip_mut_with(&part, |a, &b| *a += b);
        }
        Ok(y)
    }
}

/// Report from the exact node-varying match.
#[derive(Debug, Clone)]
pub struct NodeVaryingDesign {
    pub filter: NodeVaryingFilter,
    pub residual: f64,
    /// Nodes whose u_i entries sat within an order of magnitude of the zero
    /// threshold; their rows are well-defined but numerically delicate.
    pub borderline_nodes: Vec<usize>,
}

/// Exact node-varying operator match (symmetric shift operators).
///
/// For each node i with u_i = V^T e_i and bbar_i = V^T B^T e_i, requires
/// [bbar_i]_j = 0 wherever [u_i]_j = 0 and equal ratios across repeated
/// eigenvalues, then interpolates per-node taps on the distinct eigenvalues.
pub fn design_node_varying_exact(
    b: &Array2<f64>,
    basis: &SpectralBasis,
    s: &ShiftOperator,
    k: usize,
) -> Result<NodeVaryingDesign> {
    let n = s.node_count();
    if b.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim().0,
        });
    }
    let v = basis.real_eigenvectors()?;
    let lambdas = basis.real_eigenvalues()?;
    let groups = linalg::group_close(
        lambdas.view(),
        1e-8 * lambdas.iter().fold(1.0f64, |m, &x| m.max(x.abs())),
    );
    let d = groups.len();
    if k + 1 < d {
        return Err(Error::MatchCondition(format!(
            "order K = {k} cannot interpolate {d} distinct eigenvalues"
        )));
    }
    let scale = linalg::frobenius(b).max(1.0);
    let bt_v = b.dot(v); // row i gives bbar_i^T = e_i^T B V
    let mut coeffs = Array2::zeros((k + 1, n));
    let mut borderline = Vec::new();
    for i in 0..n {
        let u_i = v.row(i);
        let bbar_i = bt_v.row(i);
        // condition 1 and per-group ratio targets
        let mut ratios: Vec<f64> = Vec::with_capacity(d);
        let mut any_borderline = false;
        for (g, (_, members)) in groups.iter().enumerate() {
            let mut ratio: Option<f64> = None;
            for &j in members {
                let u = u_i[j];
                let bb = bbar_i[j];
                if u.abs() <= NODE_MATCH_ZERO_TOL {
                    if bb.abs() > 1e-8 * scale {
                        return Err(Error::MatchCondition(format!(
                            "node {i}: target has energy {bb:.3e} on eigenvector {j} invisible to the node (u = {u:.3e})"
                        )));
                    }
                    continue;
                }
                if u.abs() <= NODE_MATCH_ZERO_TOL * 10.0 {
                    any_borderline = true;
                }
                let r = bb / u;
                match ratio {
                    None => ratio = Some(r),
                    Some(prev) => {
                        if (r - prev).abs() > 1e-6 * prev.abs().max(1.0) {
                            return Err(Error::MatchCondition(format!(
                                "node {i}: repeated eigenvalue group {g} carries unequal ratios {prev:.6e} vs {r:.6e}"
                            )));
                        }
                    }
                }
            }
            ratios.push(ratio.unwrap_or(0.0));
        }
        if any_borderline {
            borderline.push(i);
        }
        // interpolate taps through (lambda_g, ratio_g)
        let points: Vec<f64> = groups.iter().map(|&(l, _)| l).collect();
        let vm = linalg::vandermonde(&points, k);
        let rhs = Array1::from_vec(ratios);
        let taps = linalg::lstsq(&vm, &rhs)?;
        for kk in 0..=k {
            coeffs[[kk, i]] = taps[kk];
        }
    }
    let filter = NodeVaryingFilter::new(coeffs)?;
    let residual = linalg::frobenius(&(filter.dense_operator(s)? - b));
    Ok(NodeVaryingDesign {
        filter,
        residual,
        borderline_nodes: borderline,
    })
}

/// Which structure the least-squares varying design should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VaryingKind {
    Node,
    Edge,
}

/// Result of the data-driven varying design.
#[derive(Debug)]
pub enum VaryingDesign {
    Node(NodeVaryingFilter),
    Edge(EdgeVaryingFilter),
}

/// Least-squares fit of a node- or edge-varying filter to input/output pairs.
///
/// Each node's taps decouple, so the fit is a per-node least squares over the
/// locally observed shifted signals. Underdetermined nodes are solved in the
/// minimum-norm sense and reported through the returned flag.
pub fn design_varying_ls(
    kind: VaryingKind,
    data: &[(Array1<f64>, Array1<f64>)],
    s: &ShiftOperator,
    k: usize,
) -> Result<(VaryingDesign, bool)> {
    let n = s.node_count();
    if data.is_empty() {
        return Err(Error::InvalidParameter("no data pairs".into()));
    }
    for (x, y) in data {
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len().max(y.len()),
            });
        }
    }
    let t = data.len();
    // shifted versions of every input
    let mut shifted: Vec<Vec<Array1<f64>>> = Vec::with_capacity(t);
    for (x, _) in data {
        let mut per = Vec::with_capacity(k + 1);
        per.push(x.clone());
        for _ in 1..=k {
            let next = s.matrix().matvec(per.last().unwrap().view());
            per.push(next);
        }
        shifted.push(per);
    }
    let mut underdetermined = false;
    match kind {
        VaryingKind::Node => {
            let mut coeffs = Array2::zeros((k + 1, n));
            for i in 0..n {
                let mut m = Array2::zeros((t, k + 1));
                let mut rhs = Array1::zeros(t);
                for (row, (_, y)) in data.iter().enumerate() {
                    for kk in 0..=k {
                        m[[row, kk]] = shifted[row][kk][i];
                    }
                    rhs[row] = y[i];
                }
                if t < k + 1 {
                    underdetermined = true;
                }
                let taps = linalg::lstsq(&m, &rhs)?;
                for kk in 0..=k {
                    coeffs[[kk, i]] = taps[kk];
                }
            }
            Ok((
                VaryingDesign::Node(NodeVaryingFilter::new(coeffs)?),
                underdetermined,
            ))
        }
        VaryingKind::Edge => {
            // unknowns per node i: H_0[i,i] plus H_k[i,j] for j in N(i) u {i}
            let mut support: Vec<Vec<usize>> = Vec::with_capacity(n);
            for i in 0..n {
                let mut cols: Vec<usize> = s.matrix().row(i).map(|(j, _)| j).collect();
                if !cols.contains(&i) {
                    cols.push(i);
                }
                cols.sort_unstable();
                support.push(cols);
            }
            let mut triplets: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); k + 1];
            for i in 0..n {
                let cols = &support[i];
                let unknowns = 1 + k * cols.len();
                if t < unknowns {
                    underdetermined = true;
                }
                let mut m = Array2::zeros((t, unknowns));
                let mut rhs = Array1::zeros(t);
                for (row, (x, y)) in data.iter().enumerate() {
                    m[[row, 0]] = x[i];
                    for kk in 1..=k {
                        for (c, &j) in cols.iter().enumerate() {
                            m[[row, 1 + (kk - 1) * cols.len() + c]] = shifted[row][kk][j];
                        }
                    }
                    rhs[row] = y[i];
                }
                let sol = linalg::lstsq(&m, &rhs)?;
                triplets[0].push((i, i, sol[0]));
                for kk in 1..=k {
                    for (c, &j) in cols.iter().enumerate() {
                        triplets[kk].push((i, j, sol[1 + (kk - 1) * cols.len() + c]));
                    }
                }
            }
            let mats: Vec<CsrMatrix> = triplets
                .into_iter()
                .map(|t| CsrMatrix::from_triplets(n, &t))
                .collect::<Result<_>>()?;
            Ok((
                VaryingDesign::Edge(EdgeVaryingFilter::new(mats, s)?),
                underdetermined,
            ))
        }
    }
}

/// Group-sparse design of a two-GSO filter:
/// min (1/2 mu) ||y - Z h||^2 + ||h_1||^2 / (2 alpha) + ||h_2||^2 / (2 (1 - alpha)).
///
/// The quadratic objective has a closed-form block-ridge solution; the
/// returned group norms expose which operator the data favors.
pub fn design_multi_gso_group(
    data: &[(Array1<f64>, Array1<f64>)],
    gsos: (&ShiftOperator, &ShiftOperator),
    k: usize,
    mu: f64,
    alpha: f64,
) -> Result<(MultiGsoFilter, f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let n = gsos.0.node_count();
    if gsos.1.node_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gsos.1.node_count(),
        });
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("no data pairs".into()));
    }
    let t = data.len();
    let cols = 2 * (k + 1);
    let mut z = Array2::zeros((t * n, cols));
    let mut rhs = Array1::zeros(t * n);
    for (row_block, (x, y)) in data.iter().enumerate() {
        for (q, s) in [gsos.0, gsos.1].iter().enumerate() {
            let mut shifted = x.clone();
            for kk in 0..=k {
                if kk > 0 {
                    shifted = s.matrix().matvec(shifted.view());
                }
                for i in 0..n {
                    z[[row_block * n + i, q * (k + 1) + kk]] = shifted[i];
                }
            }
        }
        for i in 0..n {
            rhs[row_block * n + i] = y[i];
        }
    }
    // (Z^T Z / mu + D) h = Z^T y / mu
    let mut gram = z.t().dot(&z) / mu;
    for kk in 0..=k {
        gram[[kk, kk]] += 1.0 / alpha;
        gram[[k + 1 + kk, k + 1 + kk]] += 1.0 / (1.0 - alpha);
    }
    let h = linalg::solve(&gram, &(z.t().dot(&rhs) / mu))?;
    let mut coeffs = Array2::zeros((2, k + 1));
    for kk in 0..=k {
        coeffs[[0, kk]] = h[kk];
        coeffs[[1, kk]] = h[k + 1 + kk];
    }
    let norm1 = linalg::norm2(coeffs.row(0));
    let norm2 = linalg::norm2(coeffs.row(1));
    Ok((MultiGsoFilter::new(coeffs)?, norm1, norm2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{path_graph, star_graph, Graph, GsoKind};
    use crate::spectral::eigendecompose;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    rows.push((i, j, rng.gen_range(0.2..1.5)));
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

    fn random_signal(n: usize, seed: u64) -> Array1<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array1::from_iter((0..n).map(|_| rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn node_varying_constant_rows_reduce_to_conv() {
        let g = random_graph(12, 0.4, 1);
        let s = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let taps = vec![0.5, -0.3, 0.1];
        let coeffs = Array2::from_shape_fn((3, 12), |(k, _)| taps[k]);
        let nv = NodeVaryingFilter::new(coeffs).unwrap();
        let x = random_signal(12, 2);
        let a = nv.apply(&s, &x).unwrap();
        let b = ConvFilter::from_taps(taps).unwrap().apply(&s, &x).unwrap();
        assert!(linalg::norm2((&a - &b).view()) <= 1e-12);
    }

    #[test]
    fn node_varying_identity_row() {
        let g = path_graph(5).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut coeffs = Array2::zeros((2, 5));
        coeffs.row_mut(0).fill(1.0);
        let nv = NodeVaryingFilter::new(coeffs).unwrap();
        let x = random_signal(5, 3);
        assert_eq!(nv.apply(&s, &x).unwrap(), x);
    }

    #[test]
    fn node_varying_matches_dense_oracle() {
        let g = random_graph(15, 0.3, 4);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs = Array2::from_shape_fn((4, 15), |_| rng.gen_range(-1.0..1.0));
        let nv = NodeVaryingFilter::new(coeffs).unwrap();
        let x = random_signal(15, 6);
        let fast = nv.apply(&s, &x).unwrap();
        let dense = nv.dense_operator(&s).unwrap().dot(&x);
        assert!(linalg::norm2((&fast - &dense).view()) <= 1e-10);
    }

    #[test]
    fn edge_varying_scaled_identity_reduces_to_conv() {
        let g = random_graph(10, 0.4, 7);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let taps = [0.7, -0.2, 0.4];
        let mats: Vec<CsrMatrix> = taps
            .iter()
            .map(|&h| {
                let mut eye = CsrMatrix::identity(10);
                eye.scale(h);
                eye
            })
            .collect();
        let ev = EdgeVaryingFilter::new(mats, &s).unwrap();
        let x = random_signal(10, 8);
        let a = ev.apply(&s, &x).unwrap();
        let b = ConvFilter::from_taps(taps.to_vec())
            .unwrap()
            .apply(&s, &x)
            .unwrap();
        assert!(linalg::norm2((&a - &b).view()) <= 1e-12);
    }

    #[test]
    fn edge_varying_h1_equals_s_gives_s_squared() {
        let g = path_graph(6).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mats = vec![CsrMatrix::zero(6), s.matrix().clone()];
        let ev = EdgeVaryingFilter::new(mats, &s).unwrap();
        let x = random_signal(6, 9);
        let y = ev.apply(&s, &x).unwrap();
        let want = s.matrix().matvec(s.matrix().matvec(x.view()).view());
        assert!(linalg::norm2((&y - &want).view()) <= 1e-14);
    }

    #[test]
    fn edge_varying_random_supported_matches_dense() {
        let g = random_graph(12, 0.35, 10);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mats = Vec::new();
        for k in 0..3 {
            let mut triplets = Vec::new();
            for i in 0..12 {
                triplets.push((i, i, rng.gen_range(-1.0..1.0)));
                if k > 0 {
                    for (j, _) in s.matrix().row(i) {
                        triplets.push((i, j, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
            mats.push(CsrMatrix::from_triplets(12, &triplets).unwrap());
        }
        let ev = EdgeVaryingFilter::new(mats, &s).unwrap();
        let x = random_signal(12, 12);
        let fast = ev.apply(&s, &x).unwrap();
        let dense = ev.dense_operator(&s).unwrap().dot(&x);
        assert!(linalg::norm2((&fast - &dense).view()) <= 1e-10);
    }

    #[test]
    fn edge_varying_support_violation_rejected() {
        let g = path_graph(4).unwrap(); // no edge (0, 3)
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let h1 = CsrMatrix::from_triplets(4, &[(0, 3, 1.0)]).unwrap();
        let err = EdgeVaryingFilter::new(vec![CsrMatrix::identity(4), h1], &s).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { row: 0, col: 3 }));
        // H_0 must be diagonal
        let h0 = CsrMatrix::from_triplets(4, &[(0, 1, 1.0)]).unwrap();
        let err = EdgeVaryingFilter::new(vec![h0], &s).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { row: 0, col: 1 }));
    }

    #[test]
    fn varying_filters_break_permutation_equivariance() {
        // generic coefficients: some permutation must move the output
        let g = random_graph(9, 0.4, 13);
        let s = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let coeffs = Array2::from_shape_fn((3, 9), |_| rng.gen_range(-1.0..1.0));
        let nv = NodeVaryingFilter::new(coeffs).unwrap();
        let x = random_signal(9, 15);
        let mut found = false;
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..9).collect();
            perm.shuffle(&mut rng);
            let sp = s.permute(&perm).unwrap();
            let xp = crate::graph::permute_signal(&x, &perm);
            let lhs = nv.apply(&sp, &xp).unwrap();
            let rhs = crate::graph::permute_signal(&nv.apply(&s, &x).unwrap(), &perm);
            if linalg::norm2((&lhs - &rhs).view()) > 1e-3 {
                found = true;
                break;
            }
        }
        assert!(found, "no symmetry-breaking permutation found");
    }

    #[test]
    fn node_varying_exact_recovers_convolutional_target() {
        // generic weighted graph: eigenvectors have no exact zero entries, so
        // every node constrains every eigenvalue and the rows come out equal
        // (path graphs have symmetry zeros that leave rows underdetermined)
        let g = random_graph(6, 0.6, 52);
        let s = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let basis = eigendecompose(&s).unwrap();
        let truth = ConvFilter::from_taps(vec![0.3, -0.5, 0.2, 0.0, 0.1, 0.05]).unwrap();
        let b = truth.dense_operator(&s).unwrap();
        let design = design_node_varying_exact(&b, &basis, &s, 5).unwrap();
        assert!(design.residual <= 1e-6 * linalg::frobenius(&b).max(1.0));
        // all rows agree (shared-tap structure recovered); raw taps are only
        // determined up to Vandermonde conditioning, so compare rows pairwise
        for kk in 0..=5 {
            for i in 1..6 {
                assert!(
                    (design.filter.coeffs()[[kk, i]] - design.filter.coeffs()[[kk, 0]]).abs()
                        < 1e-6,
                    "row {kk} node {i} differs"
                );
            }
        }
    }

    #[test]
    fn node_varying_exact_handles_row_scaled_operator() {
        // B = diag(d) H(S): per-node scaled spectral operator
        let g = path_graph(7).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let basis = eigendecompose(&s).unwrap();
        let h = ConvFilter::from_taps(vec![0.4, 0.2, -0.1, 0.05, 0.0, 0.02, 0.01]).unwrap();
        let mut b = h.dense_operator(&s).unwrap();
        let d = array![1.0, -0.5, 2.0, 0.3, 1.5, -1.0, 0.8];
        for i in 0..7 {
            for j in 0..7 {
                b[[i, j]] *= d[i];
            }
        }
        let design = design_node_varying_exact(&b, &basis, &s, 6).unwrap();
        assert!(
            design.residual <= 1e-6 * linalg::frobenius(&b).max(1.0),
            "residual {}",
            design.residual
        );
    }

    #[test]
    fn node_varying_exact_reports_violating_node() {
        // star-graph leaf symmetry gives eigenvectors with exact zero entries;
        // demanding response there at a blind node must fail, naming the node
        let star = star_graph(5).unwrap();
        let sl = ShiftOperator::from_graph(&star, GsoKind::Laplacian).unwrap();
        let sbasis = eigendecompose(&sl).unwrap();
        let v = sbasis.real_eigenvectors().unwrap();
        let mut found = None;
        'outer: for j in 0..5 {
            for i in 0..5 {
                if v[[i, j]].abs() <= 1e-12 {
                    found = Some((i, j));
                    break 'outer;
                }
            }
        }
        let (node, vec_idx) = found.expect("star laplacian has zero eigenvector entries");
        let mut b = Array2::zeros((5, 5));
        for c in 0..5 {
            b[[node, c]] = v[[c, vec_idx]];
        }
        let err = design_node_varying_exact(&b, &sbasis, &sl, 4).unwrap_err();
        match err {
            Error::MatchCondition(msg) => {
                assert!(msg.contains(&format!("node {node}")), "{msg}")
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn varying_ls_recovers_planted_node_filter() {
        let g = random_graph(10, 0.4, 16);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let coeffs = Array2::from_shape_fn((3, 10), |_| rng.gen_range(-1.0..1.0));
        let truth = NodeVaryingFilter::new(coeffs).unwrap();
        let data: Vec<(Array1<f64>, Array1<f64>)> = (0..8)
            .map(|t| {
                let x = random_signal(10, 100 + t);
                let y = truth.apply(&s, &x).unwrap();
                (x, y)
            })
            .collect();
        let (design, under) = design_varying_ls(VaryingKind::Node, &data, &s, 2).unwrap();
        assert!(!under);
        match design {
            VaryingDesign::Node(f) => {
                let diff = f.coeffs() - truth.coeffs();
                assert!(diff.iter().all(|v| v.abs() < 1e-6));
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn varying_ls_underdetermined_flagged() {
        let g = random_graph(10, 0.5, 18);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let data = vec![(random_signal(10, 19), random_signal(10, 20))];
        let (_, under) = design_varying_ls(VaryingKind::Edge, &data, &s, 2).unwrap();
        assert!(under);
    }

    #[test]
    fn varying_ls_identity_target_node_kind() {
        let g = random_graph(8, 0.5, 21);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let data: Vec<(Array1<f64>, Array1<f64>)> = (0..6)
            .map(|t| {
                let x = random_signal(8, 200 + t);
                (x.clone(), x)
            })
            .collect();
        let (design, _) = design_varying_ls(VaryingKind::Node, &data, &s, 2).unwrap();
        match design {
            VaryingDesign::Node(f) => {
                for i in 0..8 {
                    assert!((f.coeffs()[[0, i]] - 1.0).abs() < 1e-8);
                    assert!(f.coeffs()[[1, i]].abs() < 1e-8);
                    assert!(f.coeffs()[[2, i]].abs() < 1e-8);
                }
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn volterra_linear_terms_reduce_to_conv() {
        let g = random_graph(9, 0.4, 22);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let taps = [0.6, -0.3, 0.2];
        let terms = vec![
            (vec![1, 0, 0], taps[0]),
            (vec![0, 1, 0], taps[1]),
            (vec![0, 0, 1], taps[2]),
        ];
        let vf = VolterraFilter::new(vec![1, 1, 1], terms).unwrap();
        let x = random_signal(9, 23);
        let a = vf.apply(&s, &x).unwrap();
        let b = ConvFilter::from_taps(taps.to_vec())
            .unwrap()
            .apply(&s, &x)
            .unwrap();
        assert!(linalg::norm2((&a - &b).view()) <= 1e-12);
    }

    #[test]
    fn volterra_pure_square() {
        let g = path_graph(5).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let vf = VolterraFilter::new(vec![2], vec![(vec![2], 1.0)]).unwrap();
        let x = random_signal(5, 24);
        let y = vf.apply(&s, &x).unwrap();
        for i in 0..5 {
            assert!((y[i] - x[i] * x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn volterra_spreads_bandlimited_energy() {
        // quadratic term pushes energy outside the input band
        let g = path_graph(8).unwrap();
        let l = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let basis = eigendecompose(&l).unwrap();
        let x = crate::spectral::bandlimit_project(&basis, &random_signal(8, 25), 2).unwrap();
        let vf = VolterraFilter::new(vec![2, 1], vec![(vec![2, 0], 1.0)]).unwrap();
        let y = vf.apply(&l, &x).unwrap();
        let yt = basis.gft_real(&y).unwrap();
        let out_band: f64 = (2..8).map(|i| yt[i] * yt[i]).sum();
        assert!(out_band > 1e-6, "quadratic output stayed bandlimited");
    }

    #[test]
    fn volterra_permutation_equivariant() {
        let g = random_graph(8, 0.5, 47);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let vf = VolterraFilter::new(
            vec![2, 2],
            vec![(vec![1, 0], 0.5), (vec![0, 2], -0.3), (vec![1, 1], 0.2)],
        )
        .unwrap();
        let x = random_signal(8, 48);
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        let sp = s.permute(&perm).unwrap();
        let xp = crate::graph::permute_signal(&x, &perm);
        let lhs = vf.apply(&sp, &xp).unwrap();
        let rhs = crate::graph::permute_signal(&vf.apply(&s, &x).unwrap(), &perm);
        assert!(linalg::norm2((&lhs - &rhs).view()) <= 1e-10);
    }

    #[test]
    fn median_identity_and_pure_shift() {
        let g = path_graph(6).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let x = random_signal(6, 26);
        let ident = MedianFilter::new(vec![1]).unwrap();
        assert_eq!(ident.apply(&s, &x).unwrap(), x);
        let shift_only = MedianFilter::new(vec![0, 3]).unwrap();
        let want = s.matrix().matvec(x.view());
        assert_eq!(shift_only.apply(&s, &x).unwrap(), want);
        assert!(MedianFilter::new(vec![0, 0]).is_err());
    }

    #[test]
    fn median_bounds_star_outlier() {
        // at N = 5 the hub multiset is explicit: {x_0, sum(leaves), x_0 * 4}
        // wait: shifts on the star adjacency: [Sx]_0 = sum leaves,
        // [S^2 x]_0 = 4 x_0; sorting shows the outlier only enters once
        let g = star_graph(5).unwrap();
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let x = array![1.0, 2.0, 3.0, 4.0, 1000.0];
        let f = MedianFilter::new(vec![1, 1, 1]).unwrap();
        let y = f.apply(&s, &x).unwrap();
        // hub: multiset {1, 1009, 4} -> median 4 = second-smallest clean value
        assert_eq!(y[0], 4.0);
        // an affine filter with the same weights would exceed 300
        let lin = ConvFilter::from_taps(vec![1.0 / 3.0; 3]).unwrap();
        let ylin = lin.apply(&s, &x).unwrap();
        assert!(ylin[0] > 300.0);
    }

    #[test]
    fn median_is_monotone() {
        let g = random_graph(10, 0.4, 27);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let f = MedianFilter::new(vec![1, 2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let x = random_signal(10, 29);
        let bump = Array1::from_iter((0..10).map(|_| rng.gen_range(0.0..0.5)));
        let x2 = &x + &bump;
        let y1 = f.apply(&s, &x).unwrap();
        let y2 = f.apply(&s, &x2).unwrap();
        for i in 0..10 {
            assert!(y2[i] >= y1[i] - 1e-12);
        }
    }

    #[test]
    fn median_permutation_equivariant() {
        let g = random_graph(10, 0.4, 30);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let f = MedianFilter::new(vec![1, 1, 2]).unwrap();
        let x = random_signal(10, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mut perm: Vec<usize> = (0..10).collect();
        perm.shuffle(&mut rng);
        let sp = s.permute(&perm).unwrap();
        let xp = crate::graph::permute_signal(&x, &perm);
        let lhs = f.apply(&sp, &xp).unwrap();
        let rhs = crate::graph::permute_signal(&f.apply(&s, &x).unwrap(), &perm);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn multi_gso_single_operator_reduces_to_conv() {
        let g = random_graph(8, 0.5, 33);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let taps = vec![0.2, 0.5, -0.1];
        let f =
            MultiGsoFilter::new(Array2::from_shape_vec((1, 3), taps.clone()).unwrap()).unwrap();
        let x = random_signal(8, 34);
        let a = f.apply(&[&s], &x).unwrap();
        let b = ConvFilter::from_taps(taps).unwrap().apply(&s, &x).unwrap();
        assert!(linalg::norm2((&a - &b).view()) <= 1e-12);
    }

    #[test]
    fn multi_gso_merged_coefficients_linear() {
        let g = random_graph(8, 0.5, 35);
        let s = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let c1 = array![[0.1, 0.4], [0.3, -0.2]];
        let merged = array![[0.4, 0.2]];
        let x = random_signal(8, 36);
        let two = MultiGsoFilter::new(c1).unwrap().apply(&[&s, &s], &x).unwrap();
        let one = MultiGsoFilter::new(merged).unwrap().apply(&[&s], &x).unwrap();
        assert!(linalg::norm2((&two - &one).view()) <= 1e-12);
    }

    #[test]
    fn multi_gso_matches_dense_oracle() {
        let g1 = random_graph(10, 0.4, 37);
        let g2 = random_graph(10, 0.3, 38);
        let s1 = ShiftOperator::from_graph(&g1, GsoKind::Adjacency).unwrap();
        let s2 = ShiftOperator::from_graph(&g2, GsoKind::Laplacian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let coeffs = Array2::from_shape_fn((2, 4), |_| rng.gen_range(-0.5..0.5));
        let f = MultiGsoFilter::new(coeffs.clone()).unwrap();
        let x = random_signal(10, 40);
        let fast = f.apply(&[&s1, &s2], &x).unwrap();
        let mut dense = Array2::zeros((10, 10));
        for (q, s) in [&s1, &s2].iter().enumerate() {
            let taps: Vec<f64> = coeffs.row(q).to_vec();
            dense = dense
                + ConvFilter::from_taps(taps)
                    .unwrap()
                    .dense_operator(s)
                    .unwrap();
        }
        let want = dense.dot(&x);
        assert!(linalg::norm2((&fast - &want).view()) <= 1e-10);
    }

    #[test]
    fn group_design_selects_generating_operator() {
        let g1 = random_graph(30, 0.15, 41);
        let g2 = random_graph(30, 0.15, 42);
        let s1 = ShiftOperator::from_graph(&g1, GsoKind::Adjacency).unwrap();
        let s2 = ShiftOperator::from_graph(&g2, GsoKind::Adjacency).unwrap();
        // h_0 = 0: the hop-0 regressor column is literally shared between
        // the two operators, so any identity tap would split across groups
        let truth = ConvFilter::from_taps(vec![0.0, 0.8, 0.3]).unwrap();
        let data: Vec<(Array1<f64>, Array1<f64>)> = (0..12)
            .map(|t| {
                let x = random_signal(30, 300 + t);
                let y = truth.apply(&s1, &x).unwrap();
                (x, y)
            })
            .collect();
        let (_, n1, n2) = design_multi_gso_group(&data, (&s1, &s2), 2, 1e-6, 0.5).unwrap();
        assert!(n2 < 0.1 * n1, "norms {n1} vs {n2}");
    }

    #[test]
    fn group_design_limits() {
        let g1 = random_graph(10, 0.4, 43);
        let g2 = random_graph(10, 0.4, 44);
        let s1 = ShiftOperator::from_graph(&g1, GsoKind::Adjacency).unwrap();
        let s2 = ShiftOperator::from_graph(&g2, GsoKind::Adjacency).unwrap();
        let data = vec![(random_signal(10, 45), random_signal(10, 46))];
        // huge mu: regularization dominates, h -> 0
        let (_, n1, n2) = design_multi_gso_group(&data, (&s1, &s2), 2, 1e9, 0.5).unwrap();
        assert!(n1 < 1e-6 && n2 < 1e-6, "{n1} {n2}");
        // alpha -> 1 hammers h_2
        let (_, _, n2_hard) = design_multi_gso_group(&data, (&s1, &s2), 2, 1.0, 0.999999).unwrap();
        let (_, _, n2_soft) = design_multi_gso_group(&data, (&s1, &s2), 2, 1.0, 0.5).unwrap();
        assert!(n2_hard < 1e-3 * n2_soft.max(1e-12) || n2_hard < 1e-9);
        // invalid alpha
        assert!(design_multi_gso_group(&data, (&s1, &s2), 2, 1.0, 1.0).is_err());
    }
}
