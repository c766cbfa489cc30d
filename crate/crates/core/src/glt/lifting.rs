use nalgebra::DMatrix;

use super::bipartition::{bipartition_mst, Bipartition};
use super::kron::{kron_reconnect, BipartiteGraph, SINGULAR_JITTER};
use super::GltError;
use crate::graph::{laplacian_of, sparsify, ObservedGraph, KEEP_LINKS};
use crate::linalg::schur_complement;
use crate::util::round_half_away;

/// Links kept per prediction node after Kron re-connection.
pub const K_SPARSE: usize = 4;

/// Everything needed to run the lifting ladder on one graph. Both encoder and
/// decoder derive it from the occupancy and mode alone.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingPlan {
    pub n: usize,
    /// Bipartite graph of each level, indices into the original nodes.
    pub levels: Vec<BipartiteGraph>,
    /// Nodes that end in the low band, ascending.
    pub low: Vec<usize>,
}

/// Whether predict and update sums are rounded (integer-to-integer lifting).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Exact,
    Integer,
}

/// Coefficients in scan order: low band, then the high bands from the coarsest
/// level down to level 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingCoefficients {
    pub values: Vec<f64>,
    /// Band lengths in scan order.
    pub bands: Vec<usize>,
}

impl LiftingCoefficients {
    pub fn low(&self) -> &[f64] {
        &self.values[..self.bands[0]]
    }

    /// High band of `level` (1-based).
    pub fn high(&self, level: usize) -> &[f64] {
        let idx = self.bands.len() - level;
        let start: usize = self.bands[..idx].iter().sum();
        &self.values[start..start + self.bands[idx]]
    }
}

impl LiftingPlan {
    /// Standard plan: MST bipartition at every level.
    pub fn build(
        adjacency: &DMatrix<f64>,
        self_loops: &[f64],
        levels: usize,
        k_sparse: usize,
    ) -> Result<Self, GltError> {
        Self::build_with(adjacency, self_loops, levels, k_sparse, |_, a| {
            bipartition_mst(a)
        })
    }

    /// Plan with caller-chosen bipartitions. `choose(level, adjacency)` sees the
    /// level graph in local indices. The level-`l+1` graph is the Kron
    /// reduction of the level-`l` Laplacian onto its update set, sparsified
    /// with [`KEEP_LINKS`].
    pub fn build_with(
        adjacency: &DMatrix<f64>,
        self_loops: &[f64],
        levels: usize,
        k_sparse: usize,
        mut choose: impl FnMut(usize, &DMatrix<f64>) -> Bipartition,
    ) -> Result<Self, GltError> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n || self_loops.len() != n {
            return Err(GltError::GraphMismatch {
                expected: n,
                found: self_loops.len(),
            });
        }
        let mut nodes: Vec<usize> = (0..n).collect();
        let mut adj = adjacency.clone();
        let mut h = self_loops.to_vec();
        let mut plan = Vec::with_capacity(levels);
        for level in 0..levels {
            if nodes.len() < 2 {
                break;
            }
            let part = choose(level, &adj);
            if part.len() != nodes.len() {
                return Err(GltError::GraphMismatch {
                    expected: nodes.len(),
                    found: part.len(),
                });
            }
            if part.predict.is_empty() || part.update.is_empty() {
                break;
            }
            let l = laplacian_of(&adj, &h);
            let local = kron_reconnect(&l, &part, Some(k_sparse))?;
            plan.push(remap(&local, &nodes));
            if level + 1 < levels {
                let reduced = schur_complement(&l, &part.update, &part.predict, SINGULAR_JITTER)
                    .ok_or(GltError::SingularPP)?;
                (adj, h) = sparsify(&reduced, KEEP_LINKS);
            }
            nodes = part.update.iter().map(|&i| nodes[i]).collect();
        }
        Ok(Self {
            n,
            levels: plan,
            low: nodes,
        })
    }

    /// Node index for every scan position.
    pub fn scan_order(&self) -> Vec<usize> {
        let mut order = self.low.clone();
        for bg in self.levels.iter().rev() {
            order.extend(&bg.predict);
        }
        order
    }

    pub fn band_sizes(&self) -> Vec<usize> {
        std::iter::once(self.low.len())
            .chain(self.levels.iter().rev().map(|bg| bg.predict.len()))
            .collect()
    }

    pub fn forward(
        &self,
        signal: &[f64],
        rounding: Rounding,
    ) -> Result<LiftingCoefficients, GltError> {
        if signal.len() != self.n {
            return Err(GltError::GraphMismatch {
                expected: self.n,
                found: signal.len(),
            });
        }
        let mut x = signal.to_vec();
        for bg in &self.levels {
            for (k, &p) in bg.predict.iter().enumerate() {
                let s: f64 = bg.prediction_weights(k).map(|(u, w)| w * x[u]).sum();
                x[p] -= round(s, rounding);
            }
            for (k, &u) in bg.update.iter().enumerate() {
                let s: f64 = bg.update_links[k].iter().map(|&(p, w)| w * x[p]).sum();
                x[u] += round(s, rounding);
            }
        }
        Ok(LiftingCoefficients {
            values: self.scan_order().iter().map(|&i| x[i]).collect(),
            bands: self.band_sizes(),
        })
    }

    pub fn inverse(&self, coeffs: &[f64], rounding: Rounding) -> Result<Vec<f64>, GltError> {
        if coeffs.len() != self.n {
            return Err(GltError::GraphMismatch {
                expected: self.n,
                found: coeffs.len(),
            });
        }
        let mut x = vec![0.0; self.n];
        for (&i, &c) in self.scan_order().iter().zip(coeffs) {
            x[i] = c;
        }
        for bg in self.levels.iter().rev() {
            for (k, &u) in bg.update.iter().enumerate() {
                let s: f64 = bg.update_links[k].iter().map(|&(p, w)| w * x[p]).sum();
                x[u] -= round(s, rounding);
            }
            for (k, &p) in bg.predict.iter().enumerate() {
                let s: f64 = bg.prediction_weights(k).map(|(u, w)| w * x[u]).sum();
                x[p] += round(s, rounding);
            }
        }
        Ok(x)
    }
}

#[inline]
fn round(x: f64, rounding: Rounding) -> f64 {
    match rounding {
        Rounding::Exact => x,
        Rounding::Integer => round_half_away(x),
    }
}

fn remap(bg: &BipartiteGraph, nodes: &[usize]) -> BipartiteGraph {
    let map = |v: &[usize]| v.iter().map(|&i| nodes[i]).collect::<Vec<_>>();
    let map_links = |rows: &[Vec<(usize, f64)>]| {
        rows.iter()
            .map(|r| r.iter().map(|&(i, w)| (nodes[i], w)).collect())
            .collect::<Vec<Vec<_>>>()
    };
    BipartiteGraph {
        predict: map(&bg.predict),
        update: map(&bg.update),
        links: map_links(&bg.links),
        self_loops: bg.self_loops.clone(),
        update_links: map_links(&bg.update_links),
    }
}

/// Two-level plan for an observed graph with the codec's sparsification.
pub fn lifting_plan(g: &ObservedGraph, levels: usize) -> Result<LiftingPlan, GltError> {
    LiftingPlan::build(&g.adjacency, &g.self_loops, levels, K_SPARSE)
}

pub fn lift_forward(plan: &LiftingPlan, signal: &[f64]) -> Result<LiftingCoefficients, GltError> {
    plan.forward(signal, Rounding::Exact)
}

pub fn lift_inverse(
    plan: &LiftingPlan,
    coeffs: &LiftingCoefficients,
) -> Result<Vec<f64>, GltError> {
    plan.inverse(&coeffs.values, Rounding::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::distance_graph;
    use proptest::prelude::*;

    fn path(n: usize, self_loop: f64) -> (DMatrix<f64>, Vec<f64>) {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
            a[(i + 1, i)] = 1.0;
        }
        (a, vec![self_loop; n])
    }

    fn random_graph(
        n: usize,
        edges: &[(usize, usize, f64)],
        loops: &[f64],
    ) -> (DMatrix<f64>, Vec<f64>) {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            let (i, j) = (i % n, j % n);
            if i != j {
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        (a, loops[..n].to_vec())
    }

    #[test]
    fn zero_signal_gives_zero_coefficients() {
        let (a, h) = path(9, 0.1);
        let plan = LiftingPlan::build(&a, &h, 2, K_SPARSE).unwrap();
        let c = plan.forward(&[0.0; 9], Rounding::Exact).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
        assert!(plan
            .inverse(&[0.0; 9], Rounding::Exact)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn path_behaves_like_cdf53() {
        // Seven nodes: the root of the path is its first max-degree node (1),
        // so P = odd positions and interior predictions average two neighbours.
        let (a, h) = path(7, 0.0);
        let plan = LiftingPlan::build(&a, &h, 1, K_SPARSE).unwrap();
        assert_eq!(plan.levels[0].predict, vec![1, 3, 5]);
        let f = [1.0, 5.0, 3.0, 2.0, 7.0, 4.0, 6.0];
        let c = plan.forward(&f, Rounding::Exact).unwrap();
        let high = [5.0 - 2.0, 2.0 - 5.0, 4.0 - 6.5];
        for (got, want) in c.high(1).iter().zip(high) {
            assert!((got - want).abs() < 1e-12);
        }
        // Update: inner nodes take a quarter of both neighbours, ends half of one.
        let low = [
            1.0 + 0.5 * high[0],
            3.0 + 0.25 * (high[0] + high[1]),
            7.0 + 0.25 * (high[1] + high[2]),
            6.0 + 0.5 * high[2],
        ];
        for (got, want) in c.low().iter().zip(low) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_signal_has_zero_high_bands_without_self_loops() {
        let pos: Vec<(f64, f64)> = (0..16)
            .map(|i| ((i / 4) as f64 * 2.0, (i % 4) as f64 * 2.0))
            .collect();
        let g = distance_graph(&(0..16).collect::<Vec<_>>(), &pos, 4);
        let plan = lifting_plan(&g, 2).unwrap();
        assert_eq!(plan.levels.len(), 2);
        let c = plan.forward(&[37.0; 16], Rounding::Exact).unwrap();
        for level in 1..=2 {
            assert!(
                c.high(level).iter().all(|v| v.abs() < 1e-9),
                "{:?}",
                c.high(level)
            );
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let (a, h) = path(4, 0.0);
        let plan = LiftingPlan::build(&a, &h, 2, K_SPARSE).unwrap();
        assert_eq!(
            plan.forward(&[1.0; 3], Rounding::Exact),
            Err(GltError::GraphMismatch {
                expected: 4,
                found: 3
            })
        );
        assert!(plan.inverse(&[1.0; 5], Rounding::Exact).is_err());
    }

    proptest! {
        #[test]
        fn exact_lifting_reconstructs(
            n in 1usize..40,
            edges in proptest::collection::vec((0usize..40, 0usize..40, 0.01f64..3.0), 0..120),
            loops in proptest::collection::vec(0.0f64..1.0, 40),
            signal in proptest::collection::vec(-500.0f64..500.0, 40),
        ) {
            let (a, h) = random_graph(n, &edges, &loops);
            let plan = LiftingPlan::build(&a, &h, 2, K_SPARSE).unwrap();
            let c = plan.forward(&signal[..n], Rounding::Exact).unwrap();
            prop_assert_eq!(c.values.len(), n);
            prop_assert_eq!(c.bands.iter().sum::<usize>(), n);
            let back = plan.inverse(&c.values, Rounding::Exact).unwrap();
            for (x, y) in back.iter().zip(&signal[..n]) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn integer_lifting_is_lossless(
            n in 1usize..40,
            edges in proptest::collection::vec((0usize..40, 0usize..40, 0.01f64..3.0), 0..120),
            loops in proptest::collection::vec(0.0f64..1.0, 40),
            signal in proptest::collection::vec(-1023i32..1023, 40),
        ) {
            let (a, h) = random_graph(n, &edges, &loops);
            let plan = LiftingPlan::build(&a, &h, 2, K_SPARSE).unwrap();
            let f: Vec<f64> = signal[..n].iter().map(|&v| v as f64).collect();
            let c = plan.forward(&f, Rounding::Integer).unwrap();
            prop_assert!(c.values.iter().all(|v| v.fract() == 0.0));
            prop_assert_eq!(plan.inverse(&c.values, Rounding::Integer).unwrap(), f);
        }

        #[test]
        fn prediction_rows_are_sparse_and_bipartite(
            n in 2usize..40,
            edges in proptest::collection::vec((0usize..40, 0usize..40, 0.01f64..3.0), 0..200),
            loops in proptest::collection::vec(0.0f64..1.0, 40),
        ) {
            let (a, h) = random_graph(n, &edges, &loops);
            let plan = LiftingPlan::build(&a, &h, 2, K_SPARSE).unwrap();
            for bg in &plan.levels {
                for (k, row) in bg.links.iter().enumerate() {
                    prop_assert!(row.len() <= K_SPARSE);
                    prop_assert!(row.iter().all(|&(u, w)| w > 0.0 && bg.update.binary_search(&u).is_ok()));
                    prop_assert!(bg.self_loops[k] >= 0.0);
                }
            }
        }
    }
}
