//! Receiver-side demosaicking inside a single SAI: every missing color of a
//! position is a kernel-weighted average of same-color samples of that SAI,
//! steered by the kernel of the block the position belongs to.

use rayon::prelude::*;

use super::CodecConfig;
use crate::container::{Color, LightField, SAIArray, SparseSAI};
use crate::intra::{
    block_grid, kernel_params, lossless_residuals, predict_pixel, KernelParams, RefSample,
    TensorEigen,
};
use crate::util::round_half_away;

/// Smallest interpolation window radius; it grows up to the reference radius
/// until a same-color sample is found.
pub const MIN_WINDOW: usize = 2;

/// Interpolates the full-color view of `sai`. `kernels` holds one kernel per
/// block in raster order; missing entries use the isotropic kernel.
pub fn demosaic_sai(
    sai: &SparseSAI,
    kernels: &[KernelParams],
    config: &CodecConfig,
) -> Vec<[u16; 3]> {
    let (w, h) = (sai.width, sai.height);
    let bs = config.block_size;
    let max = ((1u32 << sai.bit_depth) - 1) as f64;
    let (_, grid_cols) = block_grid(w, h, bs);
    let isotropic = kernel_params(
        &TensorEigen::isotropic(),
        1,
        config.sigma,
        config.p1,
        config.p2,
    );
    let radius_cap = config.ref_radius.max(MIN_WINDOW);

    let planes: [Vec<Option<f64>>; 3] = Color::ALL.map(|color| {
        sai.cells()
            .iter()
            .map(|c| c.filter(|p| p.color == color).map(|p| p.value as f64))
            .collect()
    });
    // A color with no sample in the SAI falls back to the mean of all samples.
    let mean = |v: &mut dyn Iterator<Item = f64>| {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        (n > 0).then(|| s / n as f64)
    };
    let overall = mean(&mut sai.pixels().map(|p| p.3 as f64)).unwrap_or(0.0);
    let means: [f64; 3] =
        std::array::from_fn(|k| mean(&mut planes[k].iter().flatten().copied()).unwrap_or(overall));

    let mut out = vec![[0u16; 3]; w * h];
    let mut refs = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let kp = kernels
                .get((r / bs) * grid_cols + c / bs)
                .unwrap_or(&isotropic);
            for k in 0..3 {
                if let Some(v) = planes[k][r * w + c] {
                    out[r * w + c][k] = v as u16;
                    continue;
                }
                let mut radius = MIN_WINDOW;
                let value = loop {
                    refs.clear();
                    let (r0, r1) = (r.saturating_sub(radius), (r + radius + 1).min(h));
                    let (c0, c1) = (c.saturating_sub(radius), (c + radius + 1).min(w));
                    for rr in r0..r1 {
                        for cc in c0..c1 {
                            if let Some(v) = planes[k][rr * w + cc] {
                                refs.push(RefSample {
                                    dh: cc as f64 - c as f64,
                                    dv: rr as f64 - r as f64,
                                    value: v,
                                });
                            }
                        }
                    }
                    if let Ok(v) = predict_pixel(&refs, kp) {
                        break v;
                    }
                    if radius >= radius_cap {
                        break means[k];
                    }
                    radius += 1;
                };
                out[r * w + c][k] = round_half_away(value).clamp(0.0, max) as u16;
            }
        }
    }
    out
}

/// Demosaics uncoded SAIs, taking each block's kernel from a lossless run of
/// the intra front-end so the result matches what a decoder would produce at
/// lossless quality.
pub fn demosaic_array(arr: &SAIArray, config: &CodecConfig) -> LightField {
    let p = &arr.params;
    let intra = config.intra_params();
    let views: Vec<Vec<[u16; 3]>> = arr
        .sais
        .par_iter()
        .map(|sai| {
            let kernels: Vec<KernelParams> = lossless_residuals(sai, &intra, false)
                .into_iter()
                .map(|(_, b)| b.kernel)
                .collect();
            demosaic_sai(sai, &kernels, config)
        })
        .collect();
    let mut lf = LightField::filled(
        p.views_u,
        p.views_v,
        p.sai_width,
        p.sai_height,
        arr.bit_depth,
        [0; 3],
    );
    let n = lf.view_len();
    for (i, v) in views.into_iter().enumerate() {
        lf.data[i * n..(i + 1) * n].copy_from_slice(&v);
    }
    lf
}
