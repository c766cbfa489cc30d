use nalgebra::DMatrix;

/// Identifier of the 8-connected lattice topology in bank files.
pub const LATTICE_TOPOLOGY: u8 = 1;

/// Edges of the 8-connected `side × side` lattice, nodes in raster order,
/// each edge `(i, j)` with `i < j`, sorted.
pub fn lattice_edges(side: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            let mut push = |rr: usize, cc: usize| edges.push((i, rr * side + cc));
            if c + 1 < side {
                push(r, c + 1);
            }
            if r + 1 < side {
                if c > 0 {
                    push(r + 1, c - 1);
                }
                push(r + 1, c);
                if c + 1 < side {
                    push(r + 1, c + 1);
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Generalized Laplacian over the full block template: `L = B dg(w) Bᵀ + dg(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub self_loops: Vec<f64>,
}

impl TemplateGraph {
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
        self_loops: Vec<f64>,
    ) -> Self {
        assert_eq!(edges.len(), weights.len());
        assert_eq!(self_loops.len(), n);
        Self {
            n,
            edges,
            weights,
            self_loops,
        }
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.self_loops));
        for (&(i, j), &w) in self.edges.iter().zip(&self.weights) {
            l[(i, j)] -= w;
            l[(j, i)] -= w;
            l[(i, i)] += w;
            l[(j, j)] += w;
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_has_210_edges() {
        let e = lattice_edges(8);
        assert_eq!(e.len(), 210);
        assert!(e.iter().all(|&(i, j)| i < j && j < 64));
        let mut d = e.clone();
        d.dedup();
        assert_eq!(d.len(), 210);
    }

    #[test]
    fn laplacian_structure() {
        let g = TemplateGraph::new(3, vec![(0, 1), (1, 2)], vec![2.0, 0.5], vec![0.0, 0.1, 0.0]);
        let l = g.laplacian();
        assert_eq!(l[(1, 1)], 2.6);
        assert_eq!(l[(0, 2)], 0.0);
        assert_eq!(l[(1, 2)], -0.5);
        let row_sums: Vec<f64> = (0..3).map(|i| l.row(i).sum()).collect();
        assert!((row_sums[0]).abs() < 1e-15 && (row_sums[1] - 0.1).abs() < 1e-15);
    }
}
