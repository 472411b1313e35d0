//! Feature matrices from graphs and files, and base-measure weighting.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{numerical_rank, FeatureMatrix, Matrix};
use crate::scalar::Scalar;

/// Undirected simple graph on vertices `0..vertices` with an ordered edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_weights(vertices, edges, None)
    }

    pub fn with_weights(
        vertices: usize,
        edges: Vec<(usize, usize)>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if vertices < 2 {
            return Err(Error::Argument("graph needs at least 2 vertices".into()));
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in &edges {
            if u >= vertices || v >= vertices {
                return Err(Error::Argument(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::Argument(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Argument(format!("repeated edge ({u}, {v})")));
            }
        }
        if let Some(w) = &weights {
            if w.len() != edges.len() {
                return Err(Error::Dimension(format!(
                    "{} weights for {} edges",
                    w.len(),
                    edges.len()
                )));
            }
            if let Some(bad) = w.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Argument(format!(
                    "edge weight {bad} is not positive"
                )));
            }
        }
        Ok(Self {
            vertices,
            edges,
            weights,
        })
    }

    /// The complete graph `K_m`, edges in lexicographic order.
    pub fn complete(m: usize) -> Result<Self> {
        let edges = (0..m)
            .flat_map(|u| (u + 1..m).map(move |v| (u, v)))
            .collect();
        Self::new(m, edges)
    }

    pub fn path(m: usize) -> Result<Self> {
        Self::new(m, (1..m).map(|v| (v - 1, v)).collect())
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Adjacency lists holding `(neighbour, edge index)` pairs.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// True when the given edges form a spanning tree.
    pub fn is_spanning_tree(&self, edge_idx: &[usize]) -> bool {
        if edge_idx.len() + 1 != self.vertices {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &e in edge_idx {
            let Some(&(u, v)) = self.edges.get(e) else {
                return false;
            };
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }

    /// Reads the edge-list format: first line `m`, then `u v [w]` per edge.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing vertex count".into(),
        })?;
        let m: usize = header.parse().map_err(|e| Error::Parse {
            line,
            message: format!("vertex count: {e}"),
        })?;
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        let mut any_weight = false;
        for (line, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 && toks.len() != 3 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `u v [w]`, got {} fields", toks.len()),
                });
            }
            let num = |t: &str| {
                t.parse::<usize>().map_err(|e| Error::Parse {
                    line,
                    message: format!("vertex {t:?}: {e}"),
                })
            };
            edges.push((num(toks[0])?, num(toks[1])?));
            let w = match toks.get(2) {
                Some(t) => {
                    any_weight = true;
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        message: format!("weight {t:?}: {e}"),
                    })?
                }
                None => 1.0,
            };
            weights.push(w);
        }
        Self::with_weights(m, edges, any_weight.then_some(weights))
    }

    pub fn load_edge_list(path: &Path) -> Result<Self> {
        Self::parse_edge_list(&std::fs::read_to_string(path)?)
    }
}

/// Preferential-attachment graph `BA(m, k)`.
///
/// Starts from the complete graph on `k` vertices; each further vertex
/// attaches to `k` distinct existing vertices, each drawn with probability
/// proportional to its degree (uniformly while all degrees are zero).
pub fn barabasi_albert(m: usize, k: usize, seed: u64) -> Result<Graph> {
    if k < 1 || m <= k {
        return Err(Error::Argument(format!(
            "BA(m={m}, k={k}) needs m > k >= 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (0..k)
        .flat_map(|u| (u + 1..k).map(move |v| (u, v)))
        .collect();
    let mut degree = vec![0usize; m];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    for new in k..m {
        let mut targets: Vec<usize> = Vec::with_capacity(k);
        while targets.len() < k {
            let pool: Vec<usize> = (0..new).filter(|v| !targets.contains(v)).collect();
            let total: usize = pool.iter().map(|&v| degree[v]).sum();
            let pick = if total == 0 {
                pool[rng.random_range(0..pool.len())]
            } else {
                let mut ticket = rng.random_range(0..total);
                *pool
                    .iter()
                    .find(|&&v| {
                        if ticket < degree[v] {
                            true
                        } else {
                            ticket -= degree[v];
                            false
                        }
                    })
                    .expect("ticket within total degree")
            };
            targets.push(pick);
        }
        targets.sort_unstable();
        for t in targets {
            edges.push((t, new));
            degree[t] += 1;
            degree[new] += 1;
        }
    }
    Graph::new(m, edges)
}

/// Reduced vertex-edge incidence matrix: `+1` at the lower endpoint, `-1` at
/// the higher one, last vertex's row dropped. Bases are spanning trees.
pub fn incidence_feature_matrix<T: Scalar>(g: &Graph) -> Result<FeatureMatrix<T>> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let r = g.vertices() - 1;
    let mut a = Matrix::zeros(r, g.num_edges());
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let (lo, hi) = (u.min(v), u.max(v));
        if lo < r {
            a[(lo, e)] = T::one();
        }
        if hi < r {
            a[(hi, e)] = -T::one();
        }
    }
    FeatureMatrix::new(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Columns scaled by `√q_i`; acceptance uses the scaled volumes.
    SqrtQ,
    /// Zonotope columns scaled by `q_i`; acceptance uses the unscaled volumes.
    QScaled,
}

/// Per-item base measure `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasure {
    q: Vec<f64>,
    mode: WeightMode,
}

impl BaseMeasure {
    pub fn new(q: Vec<f64>, mode: WeightMode) -> Result<Self> {
        if let Some(bad) = q.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Argument(format!(
                "base measure weight {bad} is not positive"
            )));
        }
        Ok(Self { q, mode })
    }

    /// i.i.d. `Unif(0, 1]` weights from a ChaCha8 stream seeded with `seed`.
    pub fn uniform_random(n: usize, seed: u64, mode: WeightMode) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // 1 - U lies in (0, 1], so weights stay positive
        let q = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        Self { q, mode }
    }

    pub fn weights(&self) -> &[f64] {
        &self.q
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }
}

/// Feature matrices a weighted sampler works with.
#[derive(Clone, Debug)]
pub struct WeightedFeatures<T> {
    /// Matrix whose zonotope the chain moves in.
    pub zonotope: FeatureMatrix<T>,
    /// Matrix whose basis volumes enter the acceptance ratio.
    pub acceptance: FeatureMatrix<T>,
    /// `√q`-scaled matrix: its squared volumes are the target basis law.
    pub target: FeatureMatrix<T>,
}

impl<T: Scalar> WeightedFeatures<T> {
    pub fn unweighted(a: &FeatureMatrix<T>) -> Self {
        Self {
            zonotope: a.clone(),
            acceptance: a.clone(),
            target: a.clone(),
        }
    }
}

/// Applies `q` to `A`. Both modes lead to the basis law
/// `∝ det²(A_{:B}) Π_{i∈B} q_i` under the volume-squared zonotope chain.
pub fn apply_base_measure<T: Scalar>(
    a: &FeatureMatrix<T>,
    q: &BaseMeasure,
) -> Result<WeightedFeatures<T>> {
    if q.weights().len() != a.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} columns",
            q.weights().len(),
            a.len()
        )));
    }
    let sqrt_q: Vec<T> = q
        .weights()
        .iter()
        .map(|&w| T::from_f64_lossy(w.sqrt()))
        .collect();
    let target = a.scale_columns(&sqrt_q)?;
    Ok(match q.mode() {
        WeightMode::SqrtQ => WeightedFeatures {
            zonotope: target.clone(),
            acceptance: target.clone(),
            target,
        },
        WeightMode::QScaled => {
            let full: Vec<T> = q.weights().iter().map(|&w| T::from_f64_lossy(w)).collect();
            WeightedFeatures {
                zonotope: a.scale_columns(&full)?,
                acceptance: a.clone(),
                target,
            }
        }
    })
}

/// Column-wise Gaussian jitter `N(0, sd²)` restoring full rank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub sd: f64,
    pub seed: u64,
}

/// Parses the matrix format: a header `r n`, then `r` rows of `n` reals.
/// Blank lines and `#` comments are skipped.
pub fn parse_feature_matrix<T: Scalar>(
    text: &str,
    jitter: Option<Jitter>,
) -> Result<FeatureMatrix<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing `r n` header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: hline,
            message: format!("header: {e}"),
        })?;
    let [r, n] = dims[..] else {
        return Err(Error::Parse {
            line: hline,
            message: format!("header needs 2 integers, got {}", dims.len()),
        });
    };
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(r);
    for (line, l) in lines {
        if rows.len() == r {
            return Err(Error::Parse {
                line,
                message: format!("more than {r} rows"),
            });
        }
        let row = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map(T::from_f64_lossy)
                    .map_err(|e| Error::Parse {
                        line,
                        message: format!("entry {t:?}: {e}"),
                    })
            })
            .collect::<Result<Vec<T>>>()?;
        if row.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("row has {} entries, expected {n}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.len() != r {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {r} rows, found {}", rows.len()),
        });
    }
    let mut m = Matrix::from_rows(&rows)?;
    if let Some(j) = jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(j.seed);
        for col in 0..n {
            for v in m.col_mut(col) {
                *v += T::from_f64_lossy(j.sd * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    if r > 0 && r < n && numerical_rank(&m, T::rank_rtol()) < r && jitter.is_none() {
        return Err(Error::RankDeficient {
            rank: numerical_rank(&m, T::rank_rtol()),
            expected: r,
        });
    }
    FeatureMatrix::new(m)
}

pub fn load_feature_matrix<T: Scalar>(
    path: &Path,
    jitter: Option<Jitter>,
) -> Result<FeatureMatrix<T>> {
    parse_feature_matrix(&std::fs::read_to_string(path)?, jitter)
}

/// Writes the matrix format read by [`parse_feature_matrix`].
pub fn format_feature_matrix<T: Scalar>(a: &FeatureMatrix<T>) -> String {
    let mut out = format!("{} {}\n", a.rank(), a.len());
    for i in 0..a.rank() {
        let row: Vec<String> = a.matrix().row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "2 4\n1 2 0 -1\n0 1 2 1\n";

    #[test]
    fn triangle_incidence() {
        let a: FeatureMatrix<f64> = incidence_feature_matrix(&Graph::complete(3).unwrap()).unwrap();
        assert_eq!((a.rank(), a.len()), (2, 3));
        let bases = a.enumerate_bases(1000).unwrap();
        assert_eq!(bases.len(), 3);
        for b in bases {
            assert!((a.abs_det(b.indices()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k10_dimensions() {
        let a: FeatureMatrix<f64> =
            incidence_feature_matrix(&Graph::complete(10).unwrap()).unwrap();
        assert_eq!((a.rank(), a.len()), (9, 45));
        // Cayley: 10^8 spanning trees
        assert!((a.cauchy_binet_total() - 1e8).abs() < 1e-2);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
        assert_eq!(
            incidence_feature_matrix::<f64>(&g).unwrap_err(),
            Error::Disconnected
        );
    }

    #[test]
    fn ba_shape_and_determinism() {
        let g = barabasi_albert(20, 2, 5).unwrap();
        assert_eq!(g.vertices(), 20);
        assert_eq!(g.num_edges(), 1 + 18 * 2);
        assert!(g.is_connected());
        assert_eq!(g, barabasi_albert(20, 2, 5).unwrap());
        let a: FeatureMatrix<f64> = incidence_feature_matrix(&g).unwrap();
        assert_eq!(a.rank(), 19);
        assert!(barabasi_albert(2, 2, 0).is_err());
        assert!(barabasi_albert(5, 0, 0).is_err());
    }

    #[test]
    fn ba_small_is_connected() {
        for seed in 0..10 {
            let g = barabasi_albert(3, 2, seed).unwrap();
            assert!(g.is_connected());
            let g = barabasi_albert(6, 1, seed).unwrap();
            assert!(g.is_connected());
            assert_eq!(g.num_edges(), 5);
        }
    }

    #[test]
    fn parse_round_trip() {
        let a: FeatureMatrix<f64> = parse_feature_matrix(FIG1, None).unwrap();
        assert_eq!(a.matrix().row(0), vec![1.0, 2.0, 0.0, -1.0]);
        let again: FeatureMatrix<f64> =
            parse_feature_matrix(&format_feature_matrix(&a), None).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn duplicate_column_keeps_rank() {
        let a: FeatureMatrix<f64> =
            parse_feature_matrix("2 5\n1 2 0 -1 -1\n0 1 2 1 1\n", None).unwrap();
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn rank_deficient_needs_jitter() {
        let text = "2 3\n1 2 3\n2 4 6\n";
        assert!(matches!(
            parse_feature_matrix::<f64>(text, None),
            Err(Error::RankDeficient { .. })
        ));
        let a: FeatureMatrix<f64> =
            parse_feature_matrix(text, Some(Jitter { sd: 1e-3, seed: 1 })).unwrap();
        assert_eq!(a.rank(), 2);
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_feature_matrix::<f64>("2 4\n1 2 0 -1\n0 1 2\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("3\n0 1\n1 2 2.5\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.weights(), Some(&[1.0, 2.5][..]));
        assert!(Graph::parse_edge_list("3\n0 1 -1\n").is_err());
        assert!(matches!(
            Graph::parse_edge_list("3\n0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn unit_weights_change_nothing() {
        let a: FeatureMatrix<f64> = parse_feature_matrix(FIG1, None).unwrap();
        for mode in [WeightMode::SqrtQ, WeightMode::QScaled] {
            let w = apply_base_measure(&a, &BaseMeasure::new(vec![1.0; 4], mode).unwrap()).unwrap();
            assert_eq!(w.zonotope, a);
            assert_eq!(w.acceptance, a);
        }
    }

    #[test]
    fn nonpositive_weight_rejected() {
        assert!(BaseMeasure::new(vec![1.0, 0.0], WeightMode::QScaled).is_err());
    }

    #[test]
    fn random_weights_are_seeded() {
        let a = BaseMeasure::uniform_random(45, 9, WeightMode::QScaled);
        assert_eq!(a, BaseMeasure::uniform_random(45, 9, WeightMode::QScaled));
        assert!(a.weights().iter().all(|&q| q > 0.0 && q <= 1.0));
    }
}
