//! Weighted directed graphs, their Laplacians, and the named formation
//! topologies.
//!
//! Conventions: `weights[(i, j)] = w_ij > 0` means agent `i` measures agent
//! `j`, so influence flows from `j` to `i`. A graph contains a connected
//! spanning tree when some root vertex influences every other vertex; for
//! the Laplacian this is exactly the condition for a simple zero eigenvalue
//! with all remaining eigenvalues in the open right half plane.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::inf_norm_mat;
use crate::numfmt::fmt_g;

/// Row-sum tolerance for an n-dimensional Laplacian; row sums accumulate
/// n rounding errors.
pub fn tol_rowsum(n: usize) -> f64 {
    1e-9 * n as f64
}

/// The formation topologies used throughout the bundled scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Directed path: each vehicle measures the one ahead; vehicle 1 leads.
    AheadPath,
    /// Directed path reversed: each vehicle measures the one behind; the
    /// last vehicle leads.
    BehindPath,
    /// Undirected path: both neighbors measured.
    UndirPath,
    /// Directed cycle: each vehicle measures its predecessor, with
    /// wraparound.
    AheadCycle,
}

impl Topology {
    pub const ALL: [Topology; 4] = [
        Topology::AheadPath,
        Topology::BehindPath,
        Topology::UndirPath,
        Topology::AheadCycle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Topology::AheadPath => "ahead_path",
            Topology::BehindPath => "behind_path",
            Topology::UndirPath => "undir_path",
            Topology::AheadCycle => "ahead_cycle",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .iter()
            .copied()
            .find(|t| t.id() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown topology id `{s}` (expected one of: ahead_path, behind_path, \
                     undir_path, ahead_cycle)"
                ))
            })
    }
}

/// Build one of the named unit-weight topologies. Sizes below 2 are
/// rejected; a formation of one vehicle has no edges to name.
pub fn named_topology(kind: Topology, n: usize) -> Result<WeightedDigraph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "named topology `{kind}` needs n >= 2, got {n}"
        )));
    }
    let mut w = DMatrix::<f64>::zeros(n, n);
    match kind {
        Topology::AheadPath => {
            for i in 1..n {
                w[(i, i - 1)] = 1.0;
            }
        }
        Topology::BehindPath => {
            for i in 0..n - 1 {
                w[(i, i + 1)] = 1.0;
            }
        }
        Topology::UndirPath => {
            for i in 1..n {
                w[(i, i - 1)] = 1.0;
                w[(i - 1, i)] = 1.0;
            }
        }
        Topology::AheadCycle => {
            for i in 0..n {
                w[(i, (i + n - 1) % n)] = 1.0;
            }
        }
    }
    WeightedDigraph::new(w)
}

/// A weighted directed graph stored as its adjacency matrix.
///
/// Invariants: square, all weights nonnegative and finite, zero diagonal,
/// at least one vertex. Zero-weight entries are absent edges. Values are
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    weights: DMatrix<f64>,
}

impl WeightedDigraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "adjacency matrix must be square and nonempty, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight ({}, {}) = {w} is not a finite nonnegative number",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "self-loop at vertex {} (diagonal must be exactly zero)",
                        i + 1
                    )));
                }
            }
        }
        Ok(WeightedDigraph { weights })
    }

    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    /// Build from 0-based `(i, j, w)` triples. Duplicate edges are rejected;
    /// zero-weight entries are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::<f64>::zeros(n, n);
        for &(i, j, weight) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of bounds for n = {n}"
                )));
            }
            if weight == 0.0 {
                continue;
            }
            if w[(i, j)] != 0.0 {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            w[(i, j)] = weight;
        }
        Self::new(w)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    /// The weighted graph Laplacian: `-w_ij` off the diagonal, row sums of
    /// weights on it.
    pub fn laplacian(&self) -> LaplacianMatrix {
        LaplacianMatrix::from_graph(self)
    }

    /// Lowest-index vertex whose influence reaches every other vertex, if
    /// one exists. Influence follows measurements: `w_ij > 0` lets vertex
    /// `j` steer vertex `i`.
    pub fn spanning_tree_root(&self) -> Option<usize> {
        (0..self.n()).find(|&r| self.influence_reach(r).iter().all(|&seen| seen))
    }

    pub fn has_connected_spanning_tree(&self) -> bool {
        self.spanning_tree_root().is_some()
    }

    fn influence_reach(&self, root: usize) -> Vec<bool> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for (v, flag) in seen.iter_mut().enumerate() {
                if !*flag && self.weights[(v, u)] > 0.0 {
                    *flag = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Boolean reachability within at most `q` hops along edge direction:
    /// entry (i, j) is true iff `[sum_{k<=q} W^k]_{ij}` is nonzero. Computed
    /// on the zero pattern, never on numeric powers.
    pub fn hop_mask(&self, q: usize) -> Vec<Vec<bool>> {
        let n = self.n();
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| self.weights[(i, j)] > 0.0).collect())
            .collect();
        let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        for _ in 0..q {
            let mut next = reach.clone();
            for i in 0..n {
                for k in 0..n {
                    if reach[i][k] {
                        for j in 0..n {
                            if adj[k][j] {
                                next[i][j] = true;
                            }
                        }
                    }
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        reach
    }

    /// Serialize to the plain-text edge-list format: a `n <count>` header,
    /// then `i j w` lines with 1-based indices in row-major order.
    pub fn to_edge_list(&self) -> String {
        let n = self.n();
        let mut out = format!("n {n}\n");
        for i in 0..n {
            for j in 0..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push_str(&format!("{} {} {}\n", i + 1, j + 1, fmt_g(w, 17)));
                }
            }
        }
        out
    }

    /// Parse the edge-list format produced by [`to_edge_list`].
    /// Blank lines and `#` comments are skipped.
    ///
    /// [`to_edge_list`]: WeightedDigraph::to_edge_list
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::Config("edge list is empty".into()))?;
        let mut parts = header.split_whitespace();
        let n = match (parts.next(), parts.next(), parts.next()) {
            (Some("n"), Some(count), None) => count.parse::<usize>().map_err(|_| {
                Error::Config(format!("line {lineno}: bad vertex count `{count}`"))
            })?,
            _ => {
                return Err(Error::Config(format!(
                    "line {lineno}: expected header `n <count>`, got `{header}`"
                )))
            }
        };

        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Config(format!(
                    "line {lineno}: expected `i j w`, got `{line}`"
                )));
            }
            let i: usize = fields[0]
                .parse()
                .map_err(|_| Error::Config(format!("line {lineno}: bad index `{}`", fields[0])))?;
            let j: usize = fields[1]
                .parse()
                .map_err(|_| Error::Config(format!("line {lineno}: bad index `{}`", fields[1])))?;
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Config(format!("line {lineno}: bad weight `{}`", fields[2])))?;
            if i < 1 || i > n || j < 1 || j > n {
                return Err(Error::Config(format!(
                    "line {lineno}: edge ({i}, {j}) out of range 1..={n}"
                )));
            }
            edges.push((i - 1, j - 1, w));
        }
        Self::from_edges(n, &edges)
    }
}

/// A weighted graph Laplacian: zero row sums, nonpositive off-diagonal
/// entries, nonnegative diagonal.
///
/// The generating digraph is recovered from the off-diagonal entries and
/// cached along with the spanning-tree root, so structural queries are free
/// after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    entries: DMatrix<f64>,
    source: WeightedDigraph,
    root: Option<usize>,
    max_abs_row_sum: f64,
}

impl LaplacianMatrix {
    /// Validate and wrap a raw matrix. Off-diagonal entries must be
    /// nonpositive and every row must sum to zero within `tol_rowsum(n)`
    /// scaled by the matrix magnitude.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::InvalidLaplacian(format!(
                "matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = inf_norm_mat(&entries).max(1.0);
        let entry_tol = 1e-12 * scale;
        let rowsum_tol = tol_rowsum(n) * scale;

        let mut weights = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut rowsum = 0.0;
            for j in 0..n {
                let e = entries[(i, j)];
                if !e.is_finite() {
                    return Err(Error::InvalidLaplacian(format!(
                        "entry ({}, {}) is not finite",
                        i + 1,
                        j + 1
                    )));
                }
                rowsum += e;
                if i != j {
                    if e > entry_tol {
                        return Err(Error::InvalidLaplacian(format!(
                            "off-diagonal entry ({}, {}) = {e} is positive",
                            i + 1,
                            j + 1
                        )));
                    }
                    weights[(i, j)] = (-e).max(0.0);
                } else if e < -entry_tol {
                    return Err(Error::InvalidLaplacian(format!(
                        "diagonal entry {} = {e} is negative",
                        i + 1
                    )));
                }
            }
            if rowsum.abs() > rowsum_tol {
                return Err(Error::InvalidLaplacian(format!(
                    "row {} sums to {rowsum}, beyond tolerance {rowsum_tol}",
                    i + 1
                )));
            }
        }
        let source = WeightedDigraph::new(weights)?;
        Ok(Self::assemble(entries, source))
    }

    /// Exact Laplacian of a digraph: `[L]_ij = -w_ij` for `i != j` and
    /// `[L]_ii = sum_k w_ik`.
    pub fn from_graph(g: &WeightedDigraph) -> Self {
        let n = g.n();
        let mut entries = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                let w = g.weight(i, j);
                if i != j && w > 0.0 {
                    entries[(i, j)] = -w;
                    diag += w;
                }
            }
            entries[(i, i)] = diag;
        }
        Self::assemble(entries, g.clone())
    }

    fn assemble(entries: DMatrix<f64>, source: WeightedDigraph) -> Self {
        let n = entries.nrows();
        let ones = crate::linalg::ones(n);
        let residual = &entries * ones;
        let max_abs_row_sum = crate::linalg::inf_norm_vec(&residual);
        let root = source.spanning_tree_root();
        LaplacianMatrix {
            entries,
            source,
            root,
            max_abs_row_sum,
        }
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// The digraph whose Laplacian this is.
    pub fn source(&self) -> &WeightedDigraph {
        &self.source
    }

    /// Cached spanning-tree root of the source graph.
    pub fn spanning_tree_root(&self) -> Option<usize> {
        self.root
    }

    pub fn has_spanning_tree(&self) -> bool {
        self.root.is_some()
    }

    /// Largest absolute row-sum residual (zero up to rounding).
    pub fn max_abs_row_sum(&self) -> f64 {
        self.max_abs_row_sum
    }

    pub fn inf_norm(&self) -> f64 {
        inf_norm_mat(&self.entries)
    }

    /// Scale by a nonnegative factor; reweights every edge.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::Domain(format!(
                "Laplacian scale factor must be finite and nonnegative, got {factor}"
            )));
        }
        Self::new(&self.entries * factor)
    }

    /// Sum of two Laplacians over the same vertex set (edge-union graph).
    pub fn add(&self, other: &LaplacianMatrix) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add a {}-vertex Laplacian to a {}-vertex one",
                other.n(),
                self.n()
            )));
        }
        Self::new(&self.entries + &other.entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn ahead_path_laplacian_rows() {
        let g = named_topology(Topology::AheadPath, 3).unwrap();
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(2, 1), 1.0);
        assert_eq!(g.weights().iter().filter(|&&w| w != 0.0).count(), 2);
        let l = g.laplacian();
        let expected = dmatrix![
            0.0, 0.0, 0.0;
            -1.0, 1.0, 0.0;
            0.0, -1.0, 1.0
        ];
        assert_eq!(l.entries(), &expected);
    }

    #[test]
    fn behind_path_laplacian_rows() {
        let l = named_topology(Topology::BehindPath, 3).unwrap().laplacian();
        let expected = dmatrix![
            1.0, -1.0, 0.0;
            0.0, 1.0, -1.0;
            0.0, 0.0, 0.0
        ];
        assert_eq!(l.entries(), &expected);
    }

    #[test]
    fn two_node_cycle_is_symmetric() {
        let l = named_topology(Topology::AheadCycle, 2).unwrap().laplacian();
        let expected = dmatrix![1.0, -1.0; -1.0, 1.0];
        assert_eq!(l.entries(), &expected);
    }

    #[test]
    fn undirected_path_of_four() {
        let l = named_topology(Topology::UndirPath, 4).unwrap().laplacian();
        let expected = dmatrix![
            1.0, -1.0, 0.0, 0.0;
            -1.0, 2.0, -1.0, 0.0;
            0.0, -1.0, 2.0, -1.0;
            0.0, 0.0, -1.0, 1.0
        ];
        assert_eq!(l.entries(), &expected);
    }

    #[test]
    fn empty_graph_has_zero_laplacian() {
        let l = WeightedDigraph::empty(3).unwrap().laplacian();
        assert_eq!(l.entries(), &DMatrix::zeros(3, 3));
        assert_eq!(l.max_abs_row_sum(), 0.0);
    }

    #[test]
    fn weighted_two_node_laplacian() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        let expected = dmatrix![2.0, -2.0; -3.0, 3.0];
        assert_eq!(g.laplacian().entries(), &expected);
    }

    #[test]
    fn named_topology_rejects_tiny_sizes() {
        for kind in Topology::ALL {
            assert!(matches!(
                named_topology(kind, 1),
                Err(Error::InvalidSize(_))
            ));
        }
    }

    #[test]
    fn cycle_spanning_tree_any_root() {
        let g = named_topology(Topology::AheadCycle, 10).unwrap();
        assert_eq!(g.spanning_tree_root(), Some(0));
        // rotate: every vertex is a valid root in a cycle
        for r in 0..10 {
            assert!(g.influence_reach(r).iter().all(|&s| s));
        }
    }

    #[test]
    fn ahead_path_root_is_the_leader() {
        let g = named_topology(Topology::AheadPath, 10).unwrap();
        assert_eq!(g.spanning_tree_root(), Some(0));
    }

    #[test]
    fn behind_path_root_is_the_last_vehicle() {
        let g = named_topology(Topology::BehindPath, 7).unwrap();
        assert_eq!(g.spanning_tree_root(), Some(6));
    }

    #[test]
    fn disjoint_two_cycles_have_no_root() {
        let g = WeightedDigraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)],
        )
        .unwrap();
        assert_eq!(g.spanning_tree_root(), None);
    }

    #[test]
    fn zero_weight_edges_are_absent() {
        let g = WeightedDigraph::from_edges(3, &[(0, 1, 0.0), (1, 2, 1.0)]).unwrap();
        assert!(!g.has_edge(0, 1));
        assert!(g.has_edge(1, 2));
    }

    #[test]
    fn self_loops_rejected() {
        let g = WeightedDigraph::from_edges(2, &[(0, 0, 1.0)]);
        assert!(matches!(g, Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn hop_mask_counts_walks() {
        let g = named_topology(Topology::UndirPath, 5).unwrap();
        let one = g.hop_mask(1);
        assert!(one[0][1] && one[1][0] && one[2][2]);
        assert!(!one[0][2]);
        let two = g.hop_mask(2);
        assert!(two[0][2]);
        assert!(!two[0][3]);
        let zero = g.hop_mask(0);
        assert!(zero[3][3] && !zero[3][2]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = WeightedDigraph::from_edges(
            4,
            &[(0, 1, 0.125), (2, 0, 1.0 / 3.0), (3, 2, 2.5e-7)],
        )
        .unwrap();
        let text = g.to_edge_list();
        let back = WeightedDigraph::from_edge_list(&text).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn edge_list_reports_bad_lines() {
        let err = WeightedDigraph::from_edge_list("n 2\n1 5 1.0\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        let err = WeightedDigraph::from_edge_list("m 2\n").unwrap_err();
        assert!(err.to_string().contains("header"));
    }

    #[test]
    fn laplacian_new_rejects_bad_matrices() {
        assert!(LaplacianMatrix::new(dmatrix![1.0, 1.0; -1.0, 1.0]).is_err());
        assert!(LaplacianMatrix::new(dmatrix![1.0, -1.0; -1.0, 0.5]).is_err());
        assert!(LaplacianMatrix::new(dmatrix![-1.0, 1.0; 1.0, -1.0]).is_err());
    }

    #[test]
    fn laplacian_scale_and_add() {
        let l = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let scaled = l.scale(2.5).unwrap();
        assert_eq!(scaled.entries()[(1, 0)], -2.5);
        assert!(l.scale(-1.0).is_err());
        let both = l
            .add(&named_topology(Topology::BehindPath, 3).unwrap().laplacian())
            .unwrap();
        assert_eq!(both.entries()[(0, 1)], -1.0);
        assert_eq!(both.entries()[(1, 1)], 2.0);
        assert!(both.has_spanning_tree());
    }

    #[test]
    fn laplacian_recovers_source_graph() {
        let g = WeightedDigraph::from_edges(3, &[(0, 2, 0.75), (2, 1, 1.25)]).unwrap();
        let l = g.laplacian();
        assert_eq!(l.source(), &g);
    }
}
