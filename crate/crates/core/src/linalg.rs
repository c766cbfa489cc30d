//! Dense helpers on top of nalgebra for the small symmetric matrices used by
//! graph learning and lifting (at most 64×64).

use nalgebra::DMatrix;

/// Rows and columns `idx` of `m`, in the given order.
pub fn principal(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    block(m, idx, idx)
}

/// Rows `rows` and columns `cols` of `m`.
pub fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Inverse of a symmetric positive definite matrix. When Cholesky fails the
/// diagonal is loaded with `jitter` and the factorization retried once.
pub fn spd_inverse(m: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    if let Some(ch) = m.clone().cholesky() {
        return Some(symmetrize(ch.inverse()));
    }
    let n = m.nrows();
    let loaded = m + DMatrix::identity(n, n) * jitter;
    loaded.cholesky().map(|ch| symmetrize(ch.inverse()))
}

/// `log det` of an SPD matrix, `None` if it is not positive definite.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let ch = m.clone().cholesky()?;
    Some(
        2.0 * ch
            .l_dirty()
            .diagonal()
            .iter()
            .take(m.nrows())
            .map(|d| d.ln())
            .sum::<f64>(),
    )
}

/// Schur complement of `m[elim, elim]`: `m[keep,keep] - m[keep,elim] m[elim,elim]^-1 m[elim,keep]`.
pub fn schur_complement(
    m: &DMatrix<f64>,
    keep: &[usize],
    elim: &[usize],
    jitter: f64,
) -> Option<DMatrix<f64>> {
    let kk = principal(m, keep);
    if elim.is_empty() {
        return Some(kk);
    }
    let ee_inv = spd_inverse(&principal(m, elim), jitter)?;
    let ke = block(m, keep, elim);
    Some(symmetrize(kk - &ke * ee_inv * ke.transpose()))
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schur_of_tridiagonal() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let s = schur_complement(&q, &[0, 1], &[2], 0.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.5]);
        assert!(max_abs_diff(&s, &expect) < 1e-15);
    }

    #[test]
    fn log_det_matches_product_of_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        assert!((log_det_spd(&m).unwrap() - 36f64.ln()).abs() < 1e-12);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(log_det_spd(&neg).is_none());
    }
}
