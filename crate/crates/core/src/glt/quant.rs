use super::GltError;
use crate::util::round_half_away;

pub const QP_MIN: i32 = 4;
pub const QP_MAX: i32 = 36;

/// Quantization parameter, validated to `[QP_MIN, QP_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Qp(i32);

impl Qp {
    pub fn new(qp: i32) -> Result<Self, GltError> {
        if (QP_MIN..=QP_MAX).contains(&qp) {
            Ok(Self(qp))
        } else {
            Err(GltError::QpOutOfRange(qp))
        }
    }

    pub fn get(self) -> i32 {
        self.0
    }

    /// Step size `2^((QP - 4) / 6)`: 1 at QP 4, doubling every 6 steps.
    pub fn step(self) -> f64 {
        ((self.0 - QP_MIN) as f64 / 6.0).exp2()
    }
}

/// Quantized coefficients of one graph in scan order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedBlock {
    pub qp: Qp,
    pub levels: Vec<i64>,
    /// Band lengths in scan order.
    pub bands: Vec<usize>,
}

/// Mid-tread uniform quantizer, rounding half away from zero.
pub fn quantize(coeffs: &[f64], bands: &[usize], qp: Qp) -> QuantizedBlock {
    let step = qp.step();
    let levels = coeffs
        .iter()
        .map(|&c| round_half_away(c / step) as i64)
        .collect();
    QuantizedBlock {
        qp,
        levels,
        bands: bands.to_vec(),
    }
}

pub fn dequantize(block: &QuantizedBlock) -> Vec<f64> {
    let step = block.qp.step();
    block.levels.iter().map(|&l| l as f64 * step).collect()
}
