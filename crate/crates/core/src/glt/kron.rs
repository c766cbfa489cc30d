use nalgebra::DMatrix;

use super::{bipartition::Bipartition, GltError};
use crate::linalg::{block, principal, spd_inverse};

/// Bipartite re-connection of a graph: every prediction node links only to
/// update nodes. Indices refer to the nodes of the input Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub predict: Vec<usize>,
    pub update: Vec<usize>,
    /// Per prediction node: `(update node, A'_pu > 0)`.
    pub links: Vec<Vec<(usize, f64)>>,
    /// Per prediction node: self-loop `h'_p >= 0`.
    pub self_loops: Vec<f64>,
    /// Per update node: `(prediction node, weight)` of the update filter.
    pub update_links: Vec<Vec<(usize, f64)>>,
}

impl BipartiteGraph {
    /// Predictor weights `A'_pu / (D'_p + h'_p)` of prediction row `k`.
    pub fn prediction_weights(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let total = self.links[k].iter().map(|l| l.1).sum::<f64>() + self.self_loops[k];
        self.links[k]
            .iter()
            .map(move |&(u, a)| (u, if total > 0.0 { a / total } else { 0.0 }))
    }

    /// Dense `|P| × |U|` prediction matrix.
    pub fn prediction_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.predict.len(), self.update.len());
        for k in 0..self.predict.len() {
            for (u, w) in self.prediction_weights(k) {
                let col = self
                    .update
                    .binary_search(&u)
                    .expect("link into the update set");
                m[(k, col)] = w;
            }
        }
        m
    }
}

/// Diagonal loading used when `L_PP` is numerically singular.
pub const SINGULAR_JITTER: f64 = 1e-8;

/// Kron re-connection on the Laplacian `l`. The coupling `W = -L_PP⁻¹ L_PU`
/// is the MMSE predictor of `f_P` from `f_U`; negative entries are clamped and
/// the row rescaled to its original sum. Each row becomes a bipartite node with
/// `A'_pu = W_pu / (L_PP⁻¹)_pp` and `h'_p` carrying the remainder, so the
/// self-loop predictor reproduces `W`. With `keep = Some(k)` only the `k`
/// largest weights per row survive, rescaled to the pre-sparsification sum.
/// The update filter is `½` times the row-normalized `Wᵀ`.
pub fn kron_reconnect(
    l: &DMatrix<f64>,
    part: &Bipartition,
    keep: Option<usize>,
) -> Result<BipartiteGraph, GltError> {
    let n = l.nrows();
    if part.len() != n || l.ncols() != n {
        return Err(GltError::GraphMismatch {
            expected: n,
            found: part.len(),
        });
    }
    let (p_idx, u_idx) = (&part.predict, &part.update);
    let lpp_inv = spd_inverse(&principal(l, p_idx), SINGULAR_JITTER).ok_or(GltError::SingularPP)?;
    let w = -(&lpp_inv * block(l, p_idx, u_idx));

    let mut links = Vec::with_capacity(p_idx.len());
    let mut self_loops = Vec::with_capacity(p_idx.len());
    for k in 0..p_idx.len() {
        let mut row: Vec<(usize, f64)> = (0..u_idx.len()).map(|c| (c, w[(k, c)])).collect();
        let sum: f64 = row.iter().map(|r| r.1).sum();
        row.iter_mut().for_each(|r| r.1 = r.1.max(0.0));
        rescale(&mut row, sum);
        row.retain(|r| r.1 > 0.0);
        if let Some(k) = keep {
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            row.truncate(k);
            rescale(&mut row, sum);
            row.sort_by_key(|r| r.0);
        }
        let diag = lpp_inv[(k, k)];
        let scale = if diag > 0.0 { 1.0 / diag } else { 0.0 };
        let kept: f64 = row.iter().map(|r| r.1).sum();
        links.push(
            row.iter()
                .map(|&(c, wt)| (u_idx[c], wt * scale))
                .collect::<Vec<_>>(),
        );
        self_loops.push((scale * (1.0 - kept)).max(0.0));
    }

    let bg = BipartiteGraph {
        predict: p_idx.clone(),
        update: u_idx.clone(),
        links,
        self_loops,
        update_links: Vec::new(),
    };
    let mut update_links: Vec<Vec<(usize, f64)>> = vec![Vec::new(); u_idx.len()];
    for k in 0..bg.predict.len() {
        for (u, wt) in bg.prediction_weights(k) {
            let col = u_idx.binary_search(&u).unwrap();
            update_links[col].push((bg.predict[k], wt));
        }
    }
    for row in update_links.iter_mut() {
        let total: f64 = row.iter().map(|r| r.1).sum();
        row.iter_mut().for_each(|r| r.1 = 0.5 * r.1 / total);
    }
    Ok(BipartiteGraph { update_links, ..bg })
}

/// Scales positive entries so they sum to `target`, when both are positive.
fn rescale(row: &mut [(usize, f64)], target: f64) {
    let current: f64 = row.iter().map(|r| r.1).sum();
    if current > 0.0 && target > 0.0 {
        row.iter_mut().for_each(|r| r.1 *= target / current);
    }
}
