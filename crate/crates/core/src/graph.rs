//! Graph representation and shift-operator construction.
//!
//! A [`Graph`] stores the topology; a [`ShiftOperator`] is an N x N matrix
//! whose off-diagonal support matches the edge set. Following the usual
//! convention, an edge (i, j) puts its weight at row j, column i, so that
//! `S x` at a node aggregates over its in-neighbors.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const SYMMETRY_TOL: f64 = 1e-12;

/// Weighted graph on nodes 0..N. Undirected graphs store each edge once
/// with `src < dst`.
#[derive(Debug, Clone)]
pub struct Graph {
    node_count: usize,
    directed: bool,
    edges: Vec<(usize, usize, f64)>,
    // neighbor lists; for undirected graphs both directions are present
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Build a graph from an edge list, inferring N = 1 + max index.
    pub fn from_edge_list(rows: &[(usize, usize, f64)], directed: bool) -> Result<Graph> {
        let n = rows
            .iter()
            .map(|&(s, d, _)| s.max(d) + 1)
            .max()
            .unwrap_or(0);
        Self::from_edge_list_with_nodes(rows, n, directed)
    }

    /// Build a graph with an explicit node count (allows isolated nodes).
    pub fn from_edge_list_with_nodes(
        rows: &[(usize, usize, f64)],
        node_count: usize,
        directed: bool,
    ) -> Result<Graph> {
        if node_count == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node".into()));
        }
        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(rows.len());
        let mut seen = std::collections::HashSet::new();
        for &(src, dst, w) in rows {
            if src >= node_count || dst >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: src.max(dst),
                    nodes: node_count,
                });
            }
            if src == dst {
                return Err(Error::InvalidEdge {
                    src,
                    dst,
                    reason: "self-loops are not allowed".into(),
                });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidEdge {
                    src,
                    dst,
                    reason: format!("weight {w} must be strictly positive and finite"),
                });
            }
            let key = if directed {
                (src, dst)
            } else {
                (src.min(dst), src.max(dst))
            };
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { src, dst });
            }
            let (s, d) = if directed { (src, dst) } else { key };
            edges.push((s, d, w));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(s, d, w) in &edges {
            adjacency[s].push((d, w));
            if !directed {
                adjacency[d].push((s, w));
            }
        }
        for nbrs in adjacency.iter_mut() {
            nbrs.sort_by_key(|&(j, _)| j);
        }
        Ok(Graph {
            node_count,
            directed,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as stored: once per undirected edge (src < dst).
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Out-neighbors of `i` (all neighbors for undirected graphs), ascending.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Symmetric weight lookup; 0 when no edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|idx| self.adjacency[i][idx].1)
            .unwrap_or(0.0)
    }

    /// In-degree-style weighted degree used by the Laplacian builders.
    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in self.undirected_neighbors_raw(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.node_count
    }

    fn undirected_neighbors_raw(&self, i: usize) -> &[(usize, f64)] {
        // connectivity check ignores direction for directed graphs
        &self.adjacency[i]
    }

    /// Two-coloring; `Ok((part0, part1))` when bipartite, otherwise the witness
    /// node closing an odd cycle.
    pub fn bipartition(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let n = self.node_count;
        let mut color: Vec<i8> = vec![-1; n];
        // symmetrized adjacency for the traversal
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(s, d, _) in &self.edges {
            adj[s].push(d);
            adj[d].push(s);
        }
        for start in 0..n {
            if color[start] >= 0 {
                continue;
            }
            color[start] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &j in &adj[i] {
                    if color[j] < 0 {
                        color[j] = 1 - color[i];
                        queue.push_back(j);
                    } else if color[j] == color[i] {
                        return Err(Error::NotBipartite { witness: j });
                    }
                }
            }
        }
        let part0 = (0..n).filter(|&i| color[i] == 0).collect();
        let part1 = (0..n).filter(|&i| color[i] == 1).collect();
        Ok((part0, part1))
    }
}

/// Directed cycle on N >= 2 nodes: adjacency with A[(n+1) mod N][n] = 1,
/// the graph whose convolution is the circular convolution.
pub fn cycle_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "cycle graph needs N >= 2, got {n}"
        )));
    }
    let rows: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    Graph::from_edge_list_with_nodes(&rows, n, true)
}

/// Undirected path 0 - 1 - ... - (N-1) with unit weights.
pub fn path_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "path graph needs N >= 2, got {n}"
        )));
    }
    let rows: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    Graph::from_edge_list_with_nodes(&rows, n, false)
}

/// Complete graph K_N with unit weights.
pub fn complete_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "complete graph needs N >= 2, got {n}"
        )));
    }
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            rows.push((i, j, 1.0));
        }
    }
    Graph::from_edge_list_with_nodes(&rows, n, false)
}

/// Star graph: node 0 is the hub.
pub fn star_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "star graph needs N >= 2, got {n}"
        )));
    }
    let rows: Vec<(usize, usize, f64)> = (1..n).map(|i| (0, i, 1.0)).collect();
    Graph::from_edge_list_with_nodes(&rows, n, false)
}

/// How edges are selected when building a similarity graph from features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityMode {
    /// Keep pairs with distance <= epsilon.
    Epsilon(f64),
    /// k nearest neighbors, symmetrized by union.
    Knn(usize),
    /// All pairs (epsilon -> infinity).
    Full,
}

/// Build an undirected similarity graph with Gaussian-kernel weights
/// exp(-dist / (2 theta^2)), where dist is the Euclidean distance.
pub fn build_similarity_graph(
    features: &[Vec<f64>],
    mode: SimilarityMode,
    kernel_width: f64,
) -> Result<Graph> {
    let n = features.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "similarity graph needs at least two points".into(),
        ));
    }
    if !(kernel_width.is_finite() && kernel_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width theta must be positive, got {kernel_width}"
        )));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::InvalidParameter(
            "feature vectors must share a common length".into(),
        ));
    }
    match mode {
        SimilarityMode::Epsilon(eps) if !(eps.is_finite() && eps > 0.0) => {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {eps}"
            )))
        }
        SimilarityMode::Knn(k) if k == 0 || k >= n => {
            return Err(Error::InvalidParameter(format!(
                "knn needs 1 <= k < N, got k = {k}, N = {n}"
            )))
        }
        _ => {}
    }

    let dist = |i: usize, j: usize| -> f64 {
        features[i]
            .iter()
            .zip(&features[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let kernel = |d: f64| (-d / (2.0 * kernel_width * kernel_width)).exp();

    let mut keep: Vec<(usize, usize)> = Vec::new();
    match mode {
        SimilarityMode::Epsilon(eps) => {
            for i in 0..n {
                for j in i + 1..n {
                    if dist(i, j) <= eps {
                        keep.push((i, j));
                    }
                }
            }
        }
        SimilarityMode::Full => {
            for i in 0..n {
                for j in i + 1..n {
                    keep.push((i, j));
                }
            }
        }
        SimilarityMode::Knn(k) => {
            let mut selected = std::collections::HashSet::new();
            for i in 0..n {
                let mut others: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, dist(i, j)))
                    .collect();
                // ties resolved by the lower index for determinism
                others.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                for &(j, _) in others.iter().take(k) {
                    selected.insert((i.min(j), i.max(j)));
                }
            }
            keep = selected.into_iter().collect();
            keep.sort_unstable();
        }
    }
    let rows: Vec<(usize, usize, f64)> = keep
        .into_iter()
        .map(|(i, j)| (i, j, kernel(dist(i, j))))
        .collect();
    Graph::from_edge_list_with_nodes(&rows, n, false)
}

/// The matrix flavor a shift operator was built as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GsoKind {
    Adjacency,
    Laplacian,
    NormalizedAdjacency,
    NormalizedLaplacian,
    RandomWalkLaplacian,
    Custom,
}

impl std::fmt::Display for GsoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GsoKind::Adjacency => "adjacency",
            GsoKind::Laplacian => "laplacian",
            GsoKind::NormalizedAdjacency => "normalized_adjacency",
            GsoKind::NormalizedLaplacian => "normalized_laplacian",
            GsoKind::RandomWalkLaplacian => "random_walk_laplacian",
            GsoKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A graph shift operator: off-diagonal entries vanish outside the edge set.
#[derive(Debug, Clone)]
pub struct ShiftOperator {
    matrix: CsrMatrix,
    kind: GsoKind,
    symmetric: bool,
}

impl ShiftOperator {
    /// Build the requested GSO from a graph.
    pub fn from_graph(graph: &Graph, kind: GsoKind) -> Result<ShiftOperator> {
        let n = graph.node_count();
        let undirected_only = matches!(
            kind,
            GsoKind::Laplacian | GsoKind::NormalizedAdjacency | GsoKind::NormalizedLaplacian
        );
        if undirected_only && graph.directed() {
            return Err(Error::DirectedUnsupported {
                kind: kind.to_string(),
            });
        }
        let degrees: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
        let needs_degrees = matches!(
            kind,
            GsoKind::NormalizedAdjacency
                | GsoKind::NormalizedLaplacian
                | GsoKind::RandomWalkLaplacian
        );
        if needs_degrees {
            if let Some(node) = degrees.iter().position(|&d| d <= 0.0) {
                return Err(Error::ZeroDegree {
                    node,
                    context: format!("cannot build {kind}"),
                });
            }
        }

        // adjacency triplets in the row = destination convention
        let mut adj: Vec<(usize, usize, f64)> = Vec::new();
        for &(s, d, w) in graph.edges() {
            adj.push((d, s, w));
            if !graph.directed() {
                adj.push((s, d, w));
            }
        }

        let triplets: Vec<(usize, usize, f64)> = match kind {
            GsoKind::Adjacency => adj,
            GsoKind::Laplacian => {
                let mut t: Vec<(usize, usize, f64)> =
                    adj.into_iter().map(|(i, j, w)| (i, j, -w)).collect();
                for (i, &d) in degrees.iter().enumerate() {
                    if d != 0.0 {
                        t.push((i, i, d));
                    }
                }
                t
            }
            GsoKind::NormalizedAdjacency => adj
                .into_iter()
                .map(|(i, j, w)| (i, j, w / (degrees[i].sqrt() * degrees[j].sqrt())))
                .collect(),
            GsoKind::NormalizedLaplacian => {
                let mut t: Vec<(usize, usize, f64)> = adj
                    .into_iter()
                    .map(|(i, j, w)| (i, j, -w / (degrees[i].sqrt() * degrees[j].sqrt())))
                    .collect();
                for i in 0..n {
                    t.push((i, i, 1.0));
                }
                t
            }
            GsoKind::RandomWalkLaplacian => {
                let mut t: Vec<(usize, usize, f64)> = adj
                    .into_iter()
                    .map(|(i, j, w)| (i, j, -w / degrees[i]))
                    .collect();
                for i in 0..n {
                    t.push((i, i, 1.0));
                }
                t
            }
            GsoKind::Custom => {
                return Err(Error::InvalidParameter(
                    "custom operators are built with ShiftOperator::custom".into(),
                ))
            }
        };
        let matrix = CsrMatrix::from_triplets(n, &triplets)?;
        let symmetric = matrix.asymmetry() <= SYMMETRY_TOL;
        Ok(ShiftOperator {
            matrix,
            kind,
            symmetric,
        })
    }

    /// Wrap an arbitrary matrix; its off-diagonal support defines the edge set.
    /// Diagonal entries (self-loops) are permitted here.
    pub fn custom(matrix: &Array2<f64>) -> Result<ShiftOperator> {
        let csr = CsrMatrix::from_dense(matrix)?;
        if !csr.is_finite() {
            return Err(Error::NonFinite("custom shift operator".into()));
        }
        let symmetric = csr.asymmetry() <= SYMMETRY_TOL;
        Ok(ShiftOperator {
            matrix: csr,
            kind: GsoKind::Custom,
            symmetric,
        })
    }

    pub(crate) fn from_csr(matrix: CsrMatrix, kind: GsoKind) -> ShiftOperator {
        let symmetric = matrix.asymmetry() <= SYMMETRY_TOL;
        ShiftOperator {
            matrix,
            kind,
            symmetric,
        }
    }

    pub fn node_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> GsoKind {
        self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.matrix.to_dense()
    }

    /// Relabel nodes: output[i][j] = input[perm[i]][perm[j]], i.e. P^T S P for
    /// the permutation matrix P with P e_i = e_{perm(i)}. Kind is preserved.
    pub fn permute(&self, perm: &[usize]) -> Result<ShiftOperator> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(Error::InvalidPermutation { nodes: n });
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidPermutation { nodes: n });
            }
            seen[p] = true;
        }
        // inverse map: old index -> new index
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut triplets = Vec::with_capacity(self.matrix.nnz());
        for i in 0..n {
            for (j, v) in self.matrix.row(i) {
                triplets.push((inv[i], inv[j], v));
            }
        }
        let matrix = CsrMatrix::from_triplets(n, &triplets)?;
        Ok(ShiftOperator {
            matrix,
            kind: self.kind,
            symmetric: self.symmetric,
        })
    }
}

/// Permute a signal consistently with [`ShiftOperator::permute`]:
/// output[i] = x[perm[i]].
pub fn permute_signal(x: &ndarray::Array1<f64>, perm: &[usize]) -> ndarray::Array1<f64> {
    ndarray::Array1::from_iter(perm.iter().map(|&p| x[p]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh_ascending;

    #[test]
    fn from_edge_list_path() {
        let g = Graph::from_edge_list(&[(0, 1, 1.0), (1, 2, 1.0)], false).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 1.0); // symmetric view
        assert_eq!(g.weight(0, 2), 0.0);
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = Graph::from_edge_list(&[(0, 1, 1.0), (0, 1, 2.0)], false).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
        // reversed duplicate counts too for undirected graphs
        let err = Graph::from_edge_list(&[(0, 1, 1.0), (1, 0, 2.0)], false).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
    }

    #[test]
    fn isolated_nodes_via_override() {
        let g = Graph::from_edge_list_with_nodes(&[], 4, false).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn negative_weight_rejected() {
        let err = Graph::from_edge_list(&[(0, 1, -1.0)], false).unwrap_err();
        assert!(matches!(err, Error::InvalidEdge { .. }));
    }

    #[test]
    fn laplacian_two_nodes() {
        let g = Graph::from_edge_list(&[(0, 1, 1.0)], false).unwrap();
        let l = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let d = l.to_dense();
        assert_eq!(d[[0, 0]], 1.0);
        assert_eq!(d[[0, 1]], -1.0);
        assert_eq!(d[[1, 0]], -1.0);
        assert_eq!(d[[1, 1]], 1.0);
        // unit degrees: normalized laplacian coincides
        let ln = ShiftOperator::from_graph(&g, GsoKind::NormalizedLaplacian).unwrap();
        assert_eq!(ln.to_dense(), d);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let g = complete_graph(5).unwrap();
        let l = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let ones = ndarray::Array1::ones(5);
        let y = l.matrix().matvec(ones.view());
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn complete_graph_laplacian_spectrum() {
        // eigenvalues {0, N, ..., N}, checked against the dense eigensolver
        let n = 6;
        let g = complete_graph(n).unwrap();
        let l = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let (vals, _) = eigh_ascending(&l.to_dense()).unwrap();
        assert!(vals[0].abs() < 1e-10);
        for i in 1..n {
            assert!((vals[i] - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_degree_rejected_for_normalized() {
        let g = Graph::from_edge_list_with_nodes(&[(0, 1, 1.0)], 3, false).unwrap();
        let err = ShiftOperator::from_graph(&g, GsoKind::NormalizedLaplacian).unwrap_err();
        assert!(matches!(err, Error::ZeroDegree { node: 2, .. }));
    }

    #[test]
    fn cycle_adjacency_matches_shift_register() {
        // Fig.-2-style matrix: a single 1 per column, wrapping N -> 1
        let g = cycle_graph(6).unwrap();
        let a = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let d = a.to_dense();
        for n in 0..6 {
            for m in 0..6 {
                let want = if m == (n + 1) % 6 { 1.0 } else { 0.0 };
                assert_eq!(d[[(n + 1) % 6, n]], 1.0);
                assert_eq!(d[[m, n]], if m == (n + 1) % 6 { want } else { 0.0 });
            }
        }
        // two applications delay e_0 twice: matrix power oracle
        let sq = d.dot(&d);
        let e0 = ndarray::Array1::from_iter((0..6).map(|i| if i == 0 { 1.0 } else { 0.0 }));
        let shifted = sq.dot(&e0);
        for i in 0..6 {
            assert_eq!(shifted[i], if i == 2 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn cycle_two_nodes_is_swap() {
        let g = cycle_graph(2).unwrap();
        let a = ShiftOperator::from_graph(&g, GsoKind::Adjacency).unwrap();
        let d = a.to_dense();
        assert_eq!(d[[0, 1]], 1.0);
        assert_eq!(d[[1, 0]], 1.0);
        assert_eq!(d[[0, 0]], 0.0);
    }

    #[test]
    fn cycle_needs_two_nodes() {
        assert!(cycle_graph(1).is_err());
    }

    #[test]
    fn gso_support_invariant() {
        // off-support entries stay exactly zero for every kind
        let g = Graph::from_edge_list(&[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 0.5), (0, 3, 1.5)], false)
            .unwrap();
        for kind in [
            GsoKind::Adjacency,
            GsoKind::Laplacian,
            GsoKind::NormalizedAdjacency,
            GsoKind::NormalizedLaplacian,
            GsoKind::RandomWalkLaplacian,
        ] {
            let s = ShiftOperator::from_graph(&g, kind).unwrap();
            let d = s.to_dense();
            for i in 0..4 {
                for j in 0..4 {
                    if i != j && g.weight(i, j) == 0.0 {
                        assert_eq!(d[[i, j]], 0.0, "kind {kind} entry ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_preserves_spectrum() {
        let g = Graph::from_edge_list(&[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 3.0)], false)
            .unwrap();
        let l = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        let perm = vec![2, 0, 3, 1];
        let lp = l.permute(&perm).unwrap();
        assert_eq!(lp.kind(), GsoKind::Laplacian);
        let (v1, _) = eigh_ascending(&l.to_dense()).unwrap();
        let (v2, _) = eigh_ascending(&lp.to_dense()).unwrap();
        for i in 0..4 {
            assert!((v1[i] - v2[i]).abs() < 1e-9);
        }
        // identity permutation leaves the matrix unchanged
        let id = l.permute(&[0, 1, 2, 3]).unwrap();
        assert_eq!(id.to_dense(), l.to_dense());
        // swap(0,1) on the path laplacian exchanges rows/cols 0 and 1
        let p3 = path_graph(3).unwrap();
        let lp3 = ShiftOperator::from_graph(&p3, GsoKind::Laplacian).unwrap();
        let swapped = lp3.permute(&[1, 0, 2]).unwrap().to_dense();
        let orig = lp3.to_dense();
        assert_eq!(swapped[[0, 0]], orig[[1, 1]]);
        assert_eq!(swapped[[0, 2]], orig[[1, 2]]);
    }

    #[test]
    fn non_bijective_permutation_rejected() {
        let g = path_graph(3).unwrap();
        let l = ShiftOperator::from_graph(&g, GsoKind::Laplacian).unwrap();
        assert!(l.permute(&[0, 0, 1]).is_err());
        assert!(l.permute(&[0, 1]).is_err());
    }

    #[test]
    fn similarity_identical_points_full_weight() {
        let feats = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let g = build_similarity_graph(&feats, SimilarityMode::Full, 0.7).unwrap();
        assert!((g.weight(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn similarity_knn_collinear_points_make_path() {
        // exhaustive check: 3 collinear points spaced 1 apart, k = 1
        let feats = vec![vec![0.0], vec![1.0], vec![2.0]];
        let g = build_similarity_graph(&feats, SimilarityMode::Knn(1), 1.0).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.weight(0, 1) > 0.0);
        assert!(g.weight(1, 2) > 0.0);
        assert_eq!(g.weight(0, 2), 0.0);
    }

    #[test]
    fn similarity_full_mode_is_complete() {
        let feats = vec![vec![0.0, 0.1], vec![1.0, 0.3], vec![0.5, 2.0], vec![3.0, 1.0]];
        let g = build_similarity_graph(&feats, SimilarityMode::Full, 1.0).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn similarity_rejects_bad_params() {
        let feats = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(build_similarity_graph(&feats, SimilarityMode::Knn(3), 1.0).is_err());
        assert!(build_similarity_graph(&feats, SimilarityMode::Epsilon(-1.0), 1.0).is_err());
        assert!(build_similarity_graph(&feats, SimilarityMode::Full, 0.0).is_err());
    }

    #[test]
    fn bipartition_of_path_and_witness_on_triangle() {
        let p = path_graph(4).unwrap();
        let (a, b) = p.bipartition().unwrap();
        assert_eq!(a, vec![0, 2]);
        assert_eq!(b, vec![1, 3]);
        let tri = Graph::from_edge_list(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], false).unwrap();
        assert!(tri.bipartition().is_err());
    }
}
