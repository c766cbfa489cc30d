use std::f64::consts::PI;

use crate::intra::TensorEigen;

/// Residual block class: DC, or one of 8 edge orientations `(k - 3)·π/8`
/// for `k` in `0..8`, i.e. `-3π/8 ..= π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeId {
    Dc,
    Directional(u8),
}

impl ModeId {
    pub const ALL: [ModeId; 9] = [
        ModeId::Dc,
        ModeId::Directional(0),
        ModeId::Directional(1),
        ModeId::Directional(2),
        ModeId::Directional(3),
        ModeId::Directional(4),
        ModeId::Directional(5),
        ModeId::Directional(6),
        ModeId::Directional(7),
    ];

    pub fn code(self) -> u8 {
        match self {
            ModeId::Dc => 0,
            ModeId::Directional(k) => k + 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ModeId::Dc),
            1..=8 => Some(ModeId::Directional(code - 1)),
            _ => None,
        }
    }

    /// Edge angle of a directional mode.
    pub fn angle(self) -> Option<f64> {
        match self {
            ModeId::Dc => None,
            ModeId::Directional(k) => Some((k as f64 - 3.0) * PI / 8.0),
        }
    }
}

/// DC when `(λ2 + p) / (λ1 + p) < threshold`, otherwise the orientation bin
/// `[θ - π/16, θ + π/16)` holding the angle of `e1`. The angle is measured
/// from the `+h` axis towards `+v` and reduced modulo π into `[-7π/16, 9π/16)`.
pub fn classify_block(eig: &TensorEigen, p: f64, threshold: f64) -> ModeId {
    if (eig.lambda2 + p) / (eig.lambda1 + p) < threshold {
        return ModeId::Dc;
    }
    let gamma = eig.e1[1].atan2(eig.e1[0]);
    let lo = -7.0 * PI / 16.0;
    let reduced = gamma - PI * ((gamma - lo) / PI).floor();
    let bin = ((reduced - lo) / (PI / 8.0)).floor().clamp(0.0, 7.0);
    ModeId::Directional(bin as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edge(angle: f64) -> TensorEigen {
        let (s, c) = angle.sin_cos();
        TensorEigen {
            lambda1: 0.1,
            lambda2: 100.0,
            e1: [c, s],
            e2: [-s, c],
        }
    }

    #[test]
    fn isotropic_is_dc() {
        let e = TensorEigen {
            lambda1: 3.0,
            lambda2: 3.0,
            ..TensorEigen::isotropic()
        };
        assert_eq!(classify_block(&e, 0.001, 1.5), ModeId::Dc);
    }

    #[test]
    fn horizontal_edge() {
        assert_eq!(classify_block(&edge(0.0), 0.001, 1.5).angle(), Some(0.0));
        // e1 and -e1 describe the same edge.
        assert_eq!(classify_block(&edge(PI), 0.001, 1.5).angle(), Some(0.0));
    }

    #[test]
    fn bin_edges() {
        assert_eq!(
            classify_block(&edge(PI / 2.0 - 0.01), 0.001, 1.5),
            ModeId::Directional(7)
        );
        assert_eq!(
            classify_block(&edge(-PI / 2.0 + 0.01), 0.001, 1.5),
            ModeId::Directional(7)
        );
        assert_eq!(
            classify_block(&edge(-7.0 * PI / 16.0 + 1e-9), 0.001, 1.5),
            ModeId::Directional(0)
        );
        assert_eq!(
            classify_block(&edge(PI / 16.0 - 1e-9), 0.001, 1.5),
            ModeId::Directional(3)
        );
        assert_eq!(
            classify_block(&edge(PI / 16.0 + 1e-9), 0.001, 1.5),
            ModeId::Directional(4)
        );
    }

    #[test]
    fn codes_round_trip() {
        for m in ModeId::ALL {
            assert_eq!(ModeId::from_code(m.code()), Some(m));
        }
        assert_eq!(ModeId::from_code(9), None);
    }

    proptest! {
        #[test]
        fn every_angle_has_exactly_one_bin(angle in -10.0f64..10.0) {
            let m = classify_block(&edge(angle), 0.001, 1.5);
            let theta = m.angle().unwrap();
            // Distance to the bin center modulo π is at most π/16.
            let d = (angle - theta).rem_euclid(PI);
            let d = d.min(PI - d);
            prop_assert!(d <= PI / 16.0 + 1e-9);
        }
    }
}
