use std::collections::VecDeque;

use nalgebra::DMatrix;

/// Split of the nodes into an update set `U` and a prediction set `P`, both
/// ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub update: Vec<usize>,
    pub predict: Vec<usize>,
}

impl Bipartition {
    pub fn len(&self) -> usize {
        self.update.len() + self.predict.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds a bipartition from a membership mask (`true` = prediction set).
    pub fn from_mask(is_predict: &[bool]) -> Self {
        let (predict, update): (Vec<usize>, Vec<usize>) =
            (0..is_predict.len()).partition(|&i| is_predict[i]);
        Self { update, predict }
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Attach the larger root under the smaller one so the result does not
        // depend on the visiting order.
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

/// Maximum-weight spanning forest of the positive entries of a symmetric
/// adjacency matrix. Kruskal over edges by descending weight, ties broken by
/// the smaller `(i, j)` pair. Edges are returned in acceptance order.
pub fn max_spanning_forest(adjacency: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let n = adjacency.nrows();
    let mut edges: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let w = adjacency[(i, j)];
            (w > 0.0).then_some((i, j, w))
        })
        .collect();
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut sets = DisjointSets::new(n);
    edges
        .into_iter()
        .filter(|&(i, j, _)| sets.union(i, j))
        .collect()
}

/// Two-colors the maximum spanning forest by BFS depth. Each tree is rooted at
/// its node of highest tree degree (ties to the smaller index); even depths go
/// to `P` and odd depths to `U`, so a path `a-b-c` yields `P = {b}`. Isolated
/// nodes go to `U` and pass straight to the low band.
pub fn bipartition_mst(adjacency: &DMatrix<f64>) -> Bipartition {
    let n = adjacency.nrows();
    let forest = max_spanning_forest(adjacency);
    let mut tree: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, _) in &forest {
        tree[i].push(j);
        tree[j].push(i);
    }
    for nb in tree.iter_mut() {
        nb.sort_unstable();
    }
    let mut component = vec![usize::MAX; n];
    let mut is_predict = vec![false; n];
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        // Collect the component, then pick its root.
        let mut members = vec![start];
        component[start] = start;
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            k += 1;
            for &w in &tree[v] {
                if component[w] == usize::MAX {
                    component[w] = start;
                    members.push(w);
                }
            }
        }
        if members.len() == 1 {
            continue;
        }
        let root = *members
            .iter()
            .max_by(|&&a, &&b| tree[a].len().cmp(&tree[b].len()).then(b.cmp(&a)))
            .unwrap();
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            is_predict[v] = depth[v] % 2 == 0;
            for &w in &tree[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    Bipartition::from_mask(&is_predict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    #[test]
    fn path_puts_middle_in_prediction_set() {
        let part = bipartition_mst(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]));
        assert_eq!(
            part,
            Bipartition {
                update: vec![0, 2],
                predict: vec![1]
            }
        );
    }

    #[test]
    fn single_and_isolated_nodes_go_to_update() {
        assert_eq!(
            bipartition_mst(&DMatrix::zeros(1, 1)),
            Bipartition {
                update: vec![0],
                predict: vec![]
            }
        );
        let part = bipartition_mst(&graph(4, &[(0, 1, 2.0)]));
        assert_eq!(
            part,
            Bipartition {
                update: vec![1, 2, 3],
                predict: vec![0]
            }
        );
    }

    #[test]
    fn heavy_edges_win_the_tree() {
        // Triangle: the light edge (0, 2) is dropped.
        let forest = max_spanning_forest(&graph(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)]));
        assert_eq!(forest, vec![(0, 1, 3.0), (1, 2, 2.0)]);
    }

    /// Exhaustive maximum over all spanning forests with as many edges as the
    /// number of nodes minus the number of components.
    fn brute_force_best(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
        let size = {
            let mut s = DisjointSets::new(n);
            edges.iter().filter(|e| s.union(e.0, e.1)).count()
        };
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << edges.len()) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let mut s = DisjointSets::new(n);
            let mut ok = true;
            let mut total = 0.0;
            for (k, e) in edges.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    ok &= s.union(e.0, e.1);
                    total += e.2;
                }
            }
            if ok {
                best = best.max(total);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn spanning_weight_matches_exhaustive_search(
            n in 2usize..=7,
            raw in proptest::collection::vec((0usize..7, 0usize..7, 0.1f64..5.0), 1..12),
        ) {
            let mut edges: Vec<(usize, usize, f64)> = Vec::new();
            for (i, j, w) in raw {
                let (i, j) = (i % n, j % n);
                if i != j && !edges.iter().any(|e| (e.0, e.1) == (i.min(j), i.max(j))) {
                    edges.push((i.min(j), i.max(j), w));
                }
            }
            prop_assume!(!edges.is_empty() && edges.len() <= 12);
            let forest = max_spanning_forest(&graph(n, &edges));
            let total: f64 = forest.iter().map(|e| e.2).sum();
            prop_assert!((total - brute_force_best(n, &edges)).abs() < 1e-9);
        }

        #[test]
        fn partition_covers_nodes_and_tree_edges_cross(
            n in 1usize..30,
            raw in proptest::collection::vec((0usize..30, 0usize..30, 0.1f64..5.0), 0..80),
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(i, j, w)| (i % n, j % n, w)).filter(|e| e.0 != e.1).collect();
            let a = graph(n, &edges);
            let part = bipartition_mst(&a);
            let mut all: Vec<usize> = part.update.iter().chain(&part.predict).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            if n >= 2 {
                prop_assert!(!part.update.is_empty());
            }
            for (i, j, _) in max_spanning_forest(&a) {
                prop_assert_ne!(part.predict.contains(&i), part.predict.contains(&j));
            }
        }
    }
}
