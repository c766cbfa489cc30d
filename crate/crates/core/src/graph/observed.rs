use nalgebra::DMatrix;

use super::{template::TemplateGraph, GraphError};
use crate::linalg::{principal, schur_complement};

/// Links retained per node when a dense precision is turned into a graph.
pub const KEEP_LINKS: usize = 8;

/// Graph over the observed positions of one block and one color.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedGraph {
    /// Template indices of the nodes, ascending.
    pub nodes: Vec<usize>,
    /// Dense precision of the observed nodes.
    pub precision: DMatrix<f64>,
    /// Sparsified weighted adjacency, zero diagonal.
    pub adjacency: DMatrix<f64>,
    pub self_loops: Vec<f64>,
}

impl ObservedGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `D - A + H` of the sparsified graph; the matrix the lifting works on.
    pub fn laplacian(&self) -> DMatrix<f64> {
        laplacian_of(&self.adjacency, &self.self_loops)
    }
}

pub fn laplacian_of(adjacency: &DMatrix<f64>, self_loops: &[f64]) -> DMatrix<f64> {
    let n = adjacency.nrows();
    let mut l = -adjacency.clone();
    for i in 0..n {
        l[(i, i)] = adjacency.row(i).sum() + self_loops[i];
    }
    l
}

/// Splits a generalized Laplacian into `A = max(-L, 0)` off the diagonal and
/// `H = L_ii - Σ_j A_ij` (clamped at 0), then keeps a link only if it is among
/// the `keep` heaviest links of at least one endpoint (ties to the smaller
/// neighbour index).
pub fn sparsify(l: &DMatrix<f64>, keep: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = l.nrows();
    let full = DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { 0.0 } else { (-l[(i, j)]).max(0.0) },
    );
    let self_loops = (0..n)
        .map(|i| (l[(i, i)] - full.row(i).sum()).max(0.0))
        .collect();
    let mut kept = vec![false; n * n];
    let mut order = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| full[(i, j)] > 0.0));
        order.sort_by(|&a, &b| full[(i, b)].total_cmp(&full[(i, a)]).then(a.cmp(&b)));
        for &j in order.iter().take(keep) {
            kept[i * n + j] = true;
            kept[j * n + i] = true;
        }
    }
    let adjacency = DMatrix::from_fn(
        n,
        n,
        |i, j| if kept[i * n + j] { full[(i, j)] } else { 0.0 },
    );
    (adjacency, self_loops)
}

/// Precision of the observed positions: the Schur complement of the missing
/// block of the template precision, then sparsified for lifting.
pub fn observed_graph(
    template: &TemplateGraph,
    occupied: &[usize],
) -> Result<ObservedGraph, GraphError> {
    observed_from_precision(&template.laplacian(), occupied)
}

/// [`observed_graph`] for an arbitrary template precision `q`.
pub fn observed_from_precision(
    q: &DMatrix<f64>,
    occupied: &[usize],
) -> Result<ObservedGraph, GraphError> {
    if occupied.is_empty() {
        return Err(GraphError::EmptyObservation);
    }
    let n = q.nrows();
    let mut nodes = occupied.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.last().is_some_and(|&m| m >= n) {
        return Err(GraphError::Dimension(format!(
            "node index outside {n}-node template"
        )));
    }
    let missing: Vec<usize> = (0..n).filter(|i| nodes.binary_search(i).is_err()).collect();
    let precision = if missing.is_empty() {
        principal(q, &nodes)
    } else {
        schur_complement(q, &nodes, &missing, 1e-8).ok_or(GraphError::SingularQ { attempts: 2 })?
    };
    let (adjacency, self_loops) = sparsify(&precision, KEEP_LINKS);
    Ok(ObservedGraph {
        nodes,
        precision,
        adjacency,
        self_loops,
    })
}

/// `k`-nearest-neighbour graph over positions `(row, col)` with weights
/// `exp(-d² / 2σ²)`, `σ` the mean neighbour distance, symmetrized by union
/// and without self-loops.
pub fn distance_graph(nodes: &[usize], positions: &[(f64, f64)], k: usize) -> ObservedGraph {
    assert_eq!(nodes.len(), positions.len());
    let n = positions.len();
    let dist = |a: usize, b: usize| {
        let (p, q) = (positions[a], positions[b]);
        (p.0 - q.0).hypot(p.1 - q.1)
    };
    let mut links = Vec::new();
    for i in 0..n {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist(i, j), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        links.extend(cand.into_iter().take(k).map(|(d, j)| (i, j, d)));
    }
    let sigma = if links.is_empty() {
        1.0
    } else {
        links.iter().map(|l| l.2).sum::<f64>() / links.len() as f64
    };
    let mut adjacency = DMatrix::zeros(n, n);
    for &(i, j, d) in &links {
        let w = (-d * d / (2.0 * sigma * sigma)).exp();
        adjacency[(i, j)] = w;
        adjacency[(j, i)] = w;
    }
    let self_loops = vec![0.0; n];
    let precision = laplacian_of(&adjacency, &self_loops);
    ObservedGraph {
        nodes: nodes.to_vec(),
        precision,
        adjacency,
        self_loops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn no_coupling_keeps_observed_block() {
        let g = TemplateGraph::new(4, vec![(0, 1), (2, 3)], vec![1.0, 2.0], vec![0.5; 4]);
        let obs = observed_graph(&g, &[0, 1]).unwrap();
        assert!(max_abs_diff(&obs.precision, &principal(&g.laplacian(), &[0, 1])) < 1e-15);
    }

    #[test]
    fn two_node_distance_graph() {
        let g = distance_graph(&[0, 1], &[(0.0, 0.0), (3.0, 4.0)], 4);
        assert!((g.adjacency[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(g.self_loops, vec![0.0, 0.0]);
    }

    #[test]
    fn grid_distance_graph_degrees() {
        let pos: Vec<(f64, f64)> = (0..25).map(|i| ((i / 5) as f64, (i % 5) as f64)).collect();
        let g = distance_graph(&(0..25).collect::<Vec<_>>(), &pos, 4);
        for i in 0..25 {
            let deg = (0..25).filter(|&j| g.adjacency[(i, j)] > 0.0).count();
            assert!((1..=8).contains(&deg));
            for j in 0..25 {
                assert_eq!(g.adjacency[(i, j)], g.adjacency[(j, i)]);
            }
        }
    }

    #[test]
    fn knn_matches_exhaustive_scan() {
        let pos: Vec<(f64, f64)> = (0..20)
            .map(|i| (((i * 37) % 11) as f64, ((i * 53) % 13) as f64 * 0.7))
            .collect();
        let g = distance_graph(&(0..20).collect::<Vec<_>>(), &pos, 4);
        for i in 0..20 {
            // Exhaustive: j is a neighbour of i iff fewer than 4 nodes are strictly closer
            // (or equally close with a smaller index).
            for j in 0..20 {
                if i == j {
                    continue;
                }
                let d = |a: usize, b: usize| (pos[a].0 - pos[b].0).hypot(pos[a].1 - pos[b].1);
                let rank = |x: usize, y: usize| {
                    (0..20)
                        .filter(|&z| z != x && (d(x, z) < d(x, y) || (d(x, z) == d(x, y) && z < y)))
                        .count()
                };
                let linked = rank(i, j) < 4 || rank(j, i) < 4;
                assert_eq!(g.adjacency[(i, j)] > 0.0, linked, "{i} {j}");
            }
        }
    }

    #[test]
    fn sparsified_self_loops_are_nonnegative() {
        let edges = super::super::lattice_edges(8);
        let w: Vec<f64> = (0..edges.len())
            .map(|i| 0.1 + (i % 7) as f64 * 0.2)
            .collect();
        let g = TemplateGraph::new(64, edges, w, vec![0.05; 64]);
        let occupied: Vec<usize> = (0..64).filter(|i| i % 3 != 0).collect();
        let obs = observed_graph(&g, &occupied).unwrap();
        assert!(obs.self_loops.iter().all(|&h| h >= 0.0));
        for i in 0..obs.len() {
            let deg = (0..obs.len())
                .filter(|&j| obs.adjacency[(i, j)] > 0.0)
                .count();
            assert!(deg >= 1);
        }
    }
}
