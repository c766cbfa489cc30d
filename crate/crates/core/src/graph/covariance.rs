use nalgebra::DMatrix;

/// Running sums for the plug-in covariance of incompletely observed vectors
/// with the mean fixed at zero. Accumulators over disjoint shards merge into
/// the accumulator of their union.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugInCovariance {
    pub n: usize,
    sums: Vec<f64>,
    counts: Vec<u64>,
    pub observations: u64,
}

impl PlugInCovariance {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            sums: vec![0.0; n * n],
            counts: vec![0; n * n],
            observations: 0,
        }
    }

    /// Adds one observation; `None` entries are missing.
    pub fn observe(&mut self, values: &[Option<f64>]) {
        assert_eq!(values.len(), self.n);
        let present: Vec<(usize, f64)> = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect();
        for &(a, fa) in &present {
            for &(b, fb) in &present {
                self.sums[a * self.n + b] += fa * fb;
                self.counts[a * self.n + b] += 1;
            }
        }
        self.observations += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.n, other.n);
        self.sums
            .iter_mut()
            .zip(&other.sums)
            .for_each(|(a, b)| *a += b);
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        self.observations += other.observations;
    }

    pub fn pair_count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.n + b]
    }

    /// `S̃[a,b] = Σ r_a r_b f_a f_b / Σ r_a r_b`; pairs never observed together are 0.
    pub fn estimate(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |a, b| {
            let k = self.counts[a * self.n + b];
            if k == 0 {
                0.0
            } else {
                self.sums[a * self.n + b] / k as f64
            }
        })
    }
}

/// One-shot plug-in estimate over a list of observations.
pub fn plug_in_covariance(n: usize, observations: &[Vec<Option<f64>>]) -> DMatrix<f64> {
    let mut acc = PlugInCovariance::new(n);
    observations.iter().for_each(|o| acc.observe(o));
    acc.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_complete_observation_is_outer_product() {
        let f = [1.0, -2.0, 3.0];
        let s = plug_in_covariance(3, &[f.iter().map(|&v| Some(v)).collect()]);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(s[(a, b)], f[a] * f[b]);
            }
        }
    }

    #[test]
    fn never_observed_pairs_are_zero() {
        let s = plug_in_covariance(2, &[vec![Some(1.0), None], vec![None, Some(2.0)]]);
        assert_eq!(s[(0, 1)], 0.0);
        assert_eq!((s[(0, 0)], s[(1, 1)]), (1.0, 4.0));
    }

    proptest! {
        #[test]
        fn matches_triple_loop(obs in proptest::collection::vec(proptest::collection::vec(proptest::option::of(-5.0f64..5.0), 6), 1..30)) {
            let s = plug_in_covariance(6, &obs);
            for a in 0..6 {
                for b in 0..6 {
                    let (mut num, mut den) = (0.0, 0.0);
                    for o in &obs {
                        let ra = o[a].is_some() as u8 as f64;
                        let rb = o[b].is_some() as u8 as f64;
                        num += ra * rb * o[a].unwrap_or(0.0) * o[b].unwrap_or(0.0);
                        den += ra * rb;
                    }
                    let expect = if den == 0.0 { 0.0 } else { num / den };
                    prop_assert!((s[(a, b)] - expect).abs() < 1e-12);
                    prop_assert_eq!(s[(a, b)], s[(b, a)]);
                }
            }
        }

        #[test]
        fn merge_equals_single_pass(obs in proptest::collection::vec(proptest::collection::vec(proptest::option::of(-5.0f64..5.0), 4), 2..20), split in 1usize..19) {
            let split = split.min(obs.len() - 1);
            let mut left = PlugInCovariance::new(4);
            obs[..split].iter().for_each(|o| left.observe(o));
            let mut right = PlugInCovariance::new(4);
            obs[split..].iter().for_each(|o| right.observe(o));
            left.merge(&right);
            let whole = plug_in_covariance(4, &obs);
            let merged = left.estimate();
            prop_assert!(crate::linalg::max_abs_diff(&merged, &whole) < 1e-12);
        }
    }
}
