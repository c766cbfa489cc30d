use nalgebra::{DMatrix, DVector};

use super::{template::TemplateGraph, GraphError};
use crate::linalg::{log_det_spd, symmetrize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnConfig {
    /// Stop when the relative objective change of a sweep falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Diagonal loading `reg_scale · trace(S) / n` added to the covariance.
    pub reg_scale: f64,
    /// How many times the loading is multiplied by 10 after a failure.
    pub max_retries: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_sweeps: 500,
            reg_scale: 1e-4,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub graph: TemplateGraph,
    /// Final `log det Q - tr(Q S)` against the loaded covariance.
    pub objective: f64,
    /// Objective after initialization and after every sweep.
    pub history: Vec<f64>,
    pub sweeps: usize,
    /// `false` when the sweep budget ran out first; the last iterate is kept.
    pub converged: bool,
    /// Diagonal loading that was finally used.
    pub reg: f64,
}

/// `log det Q - tr(Q S)`, or `None` when `Q` is not positive definite.
pub fn laplacian_objective(q: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<f64> {
    Some(log_det_spd(q)? - q.component_mul(s).sum())
}

/// Maximum-likelihood generalized Laplacian with support on `edges`:
/// maximizes `log det Q - tr(Q S)` over `Q = Σ w_e b_e b_eᵀ + dg(h)`, `w, h ≥ 0`.
///
/// Exact coordinate ascent: along a rank-one direction `u` the objective is
/// `log(1 + t uᵀΣu) - t uᵀSu`, maximized at `t = 1/uᵀSu - 1/uᵀΣu` and then
/// projected onto the nonnegativity constraint. `Σ = Q⁻¹` is kept current
/// with Sherman-Morrison and refreshed exactly after every sweep.
pub fn learn_laplacian(
    s: &DMatrix<f64>,
    edges: &[(usize, usize)],
    cfg: &LearnConfig,
) -> Result<LearnOutcome, GraphError> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(GraphError::Dimension(format!(
            "covariance is {}x{}",
            n,
            s.ncols()
        )));
    }
    if n == 0 {
        return Err(GraphError::EmptyObservation);
    }
    if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= n || j >= n || i == j) {
        return Err(GraphError::Dimension(format!(
            "edge ({i}, {j}) invalid for {n} nodes"
        )));
    }
    let trace = s.trace().max(f64::MIN_POSITIVE);
    let mut reg = cfg.reg_scale * trace / n as f64;
    for _ in 0..=cfg.max_retries {
        let loaded = symmetrize(s.clone()) + DMatrix::identity(n, n) * reg;
        if let Some(out) = ascend(&loaded, edges, cfg, reg) {
            return Ok(out);
        }
        reg *= 10.0;
    }
    Err(GraphError::SingularQ {
        attempts: cfg.max_retries + 1,
    })
}

fn assemble(n: usize, edges: &[(usize, usize)], w: &[f64], h: &[f64]) -> DMatrix<f64> {
    TemplateGraph::new(n, edges.to_vec(), w.to_vec(), h.to_vec()).laplacian()
}

fn ascend(
    s: &DMatrix<f64>,
    edges: &[(usize, usize)],
    cfg: &LearnConfig,
    reg: f64,
) -> Option<LearnOutcome> {
    let n = s.nrows();
    if (0..n).any(|i| s[(i, i)] <= 0.0) {
        return None;
    }
    let mut w = vec![0.0; edges.len()];
    let mut h: Vec<f64> = (0..n).map(|i| 1.0 / s[(i, i)]).collect();
    let mut sigma = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| s[(i, i)]));
    let mut objective = laplacian_objective(&assemble(n, edges, &w, &h), s)?;
    let mut history = vec![objective];
    let mut converged = false;
    let mut sweeps = 0;
    let mut z = DVector::zeros(n);

    while sweeps < cfg.max_sweeps {
        for (e, &(i, j)) in edges.iter().enumerate() {
            let a = sigma[(i, i)] + sigma[(j, j)] - 2.0 * sigma[(i, j)];
            let sv = s[(i, i)] + s[(j, j)] - 2.0 * s[(i, j)];
            let t = (1.0 / sv - 1.0 / a).max(-w[e]);
            if t != 0.0 && t.is_finite() {
                w[e] += t;
                for k in 0..n {
                    z[k] = sigma[(k, i)] - sigma[(k, j)];
                }
                sigma.ger(-t / (1.0 + t * a), &z, &z, 1.0);
            }
        }
        for i in 0..n {
            let a = sigma[(i, i)];
            let t = (1.0 / s[(i, i)] - 1.0 / a).max(-h[i]);
            if t != 0.0 && t.is_finite() {
                h[i] += t;
                z.copy_from(&sigma.column(i));
                sigma.ger(-t / (1.0 + t * a), &z, &z, 1.0);
            }
        }
        sweeps += 1;
        let q = assemble(n, edges, &w, &h);
        let chol = q.clone().cholesky()?;
        sigma = symmetrize(chol.inverse());
        let next = laplacian_objective(&q, s)?;
        history.push(next);
        let change = (next - objective).abs() / objective.abs().max(1e-300);
        objective = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !objective.is_finite() {
        return None;
    }
    Some(LearnOutcome {
        graph: TemplateGraph::new(n, edges.to_vec(), w, h),
        objective,
        history,
        sweeps,
        converged,
        reg,
    })
}
