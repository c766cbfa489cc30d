use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use super::{gradient::Gradient, IntraError};

/// Symmetric 2×2 matrix `[[a, b], [b, c]]` in `(h, v)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructureTensor {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl StructureTensor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn accumulate(&mut self, g: Gradient) {
        self.a += g.dh * g.dh;
        self.b += g.dh * g.dv;
        self.c += g.dv * g.dv;
    }

    pub fn scaled(self, s: f64) -> Self {
        Self {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
        }
    }
}

impl std::ops::Add for StructureTensor {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
        }
    }
}

/// Eigen-decomposition with `lambda1 <= lambda2`; `e1` is the edge direction
/// and `e2` the dominant gradient direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

impl TensorEigen {
    /// Eigen-decomposition of the zero tensor.
    pub fn isotropic() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
            e1: [0.0, 1.0],
            e2: [1.0, 0.0],
        }
    }
}

fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    let flip = v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0);
    let v = if flip { [-v[0], -v[1]] } else { v };
    // Adding 0.0 turns -0.0 into 0.0
    [v[0] + 0.0, v[1] + 0.0]
}

/// Closed-form decomposition of a symmetric 2×2 matrix. Negative eigenvalues
/// from round-off are clamped to zero.
pub fn eigen2x2(t: StructureTensor) -> TensorEigen {
    let mean = 0.5 * (t.a + t.c);
    let half_diff = 0.5 * (t.a - t.c);
    let radius = half_diff.hypot(t.b);
    let angle = 0.5 * (2.0 * t.b).atan2(t.a - t.c);
    let (s, c) = angle.sin_cos();
    TensorEigen {
        lambda1: (mean - radius).max(0.0),
        lambda2: (mean + radius).max(0.0),
        e1: canonical_sign([-s, c]),
        e2: canonical_sign([c, s]),
    }
}

/// Unit vectors from the block being coded towards its reference blocks:
/// up-left, left, up-right, up. The up-right direction is stored with the
/// sign of the other entries folded in; only `|v·e|` matters for the weight.
pub const REFERENCE_DIRECTIONS: [[f64; 2]; 4] = [
    [-FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    [-1.0, 0.0],
    [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [0.0, -1.0],
];

/// Weight of a reference block whose edge makes angle `theta` with the
/// direction towards it. Continuous at `theta = pi/2`.
pub fn reference_weight(theta: f64, delta: f64) -> f64 {
    let folded = if theta < FRAC_PI_2 { theta } else { PI - theta };
    (-folded / delta).exp()
}

/// Reference block tensor and its pixel count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefTensor {
    pub tensor: StructureTensor,
    pub count: usize,
}

/// Weighted average `(1/c) Σ w_i H_i / n_i` of the available reference
/// tensors, indexed like [`REFERENCE_DIRECTIONS`]. References with zero
/// pixels are skipped.
pub fn estimate_input_tensor(
    refs: &[Option<RefTensor>; 4],
    delta: f64,
) -> Result<StructureTensor, IntraError> {
    let mut sum = StructureTensor::zero();
    let mut total = 0.0;
    for (r, v) in refs.iter().zip(REFERENCE_DIRECTIONS) {
        let Some(r) = r else { continue };
        if r.count == 0 {
            continue;
        }
        let e = eigen2x2(r.tensor).e1;
        let cos = (v[0] * e[0] + v[1] * e[1]).clamp(-1.0, 1.0);
        let w = reference_weight(cos.acos(), delta);
        sum = sum + r.tensor.scaled(w / r.count as f64);
        total += w;
    }
    if total == 0.0 {
        return Err(IntraError::NoReferences);
    }
    Ok(sum.scaled(1.0 / total))
}
