use std::f64::consts::PI;

use super::{tensor::TensorEigen, IntraError};

/// Steering matrix of the adaptive Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Symmetric positive definite `[[c00, c01], [c01, c11]]` in `(h, v)` coordinates.
    pub c: [[f64; 2]; 2],
    pub sigma: f64,
    /// Elongation `(λ2 + p2) / (λ1 + p2)`.
    pub epsilon: f64,
    /// Scale `sqrt(λ1 λ2 + p1) / n`.
    pub phi: f64,
}

impl KernelParams {
    pub fn det(&self) -> f64 {
        self.c[0][0] * self.c[1][1] - self.c[0][1] * self.c[1][0]
    }

    #[inline]
    fn quad(&self, dh: f64, dv: f64) -> f64 {
        self.c[0][0] * dh * dh + 2.0 * self.c[0][1] * dh * dv + self.c[1][1] * dv * dv
    }
}

/// `C = φ [e1 e2] diag(1/ε, ε) [e1 e2]ᵀ`.
pub fn kernel_params(eig: &TensorEigen, n: usize, sigma: f64, p1: f64, p2: f64) -> KernelParams {
    let n = n.max(1) as f64;
    let epsilon = (eig.lambda2 + p2) / (eig.lambda1 + p2);
    let phi = (eig.lambda1 * eig.lambda2 + p1).sqrt() / n;
    let (l1, l2) = (phi / epsilon, phi * epsilon);
    let [x1, y1] = eig.e1;
    let [x2, y2] = eig.e2;
    let c01 = l1 * x1 * y1 + l2 * x2 * y2;
    KernelParams {
        c: [
            [l1 * x1 * x1 + l2 * x2 * x2, c01],
            [c01, l1 * y1 * y1 + l2 * y2 * y2],
        ],
        sigma,
        epsilon,
        phi,
    }
}

/// Kernel value `sqrt(det C) / (2πσ²) · exp(-dᵀCd / 2σ²)` at offset `(dh, dv)`.
pub fn kernel_weight(kp: &KernelParams, dh: f64, dv: f64) -> f64 {
    let s2 = kp.sigma * kp.sigma;
    kp.det().max(0.0).sqrt() / (2.0 * PI * s2) * (-kp.quad(dh, dv) / (2.0 * s2)).exp()
}

/// A reference pixel at offset `(dh, dv)` from the predicted position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub dh: f64,
    pub dv: f64,
    pub value: f64,
}

/// Kernel-weighted average of the references. The common kernel factor and
/// the smallest exponent are divided out before exponentiating, so weights
/// cannot all underflow.
pub fn predict_pixel(refs: &[RefSample], kp: &KernelParams) -> Result<f64, IntraError> {
    if refs.is_empty() {
        return Err(IntraError::EmptyReferenceSet);
    }
    let s2 = 2.0 * kp.sigma * kp.sigma;
    let min_q = refs
        .iter()
        .map(|r| kp.quad(r.dh, r.dv))
        .fold(f64::INFINITY, f64::min);
    let (mut num, mut den) = (0.0, 0.0);
    for r in refs {
        let w = (-(kp.quad(r.dh, r.dv) - min_q) / s2).exp();
        num += w * r.value;
        den += w;
    }
    Ok(num / den)
}
