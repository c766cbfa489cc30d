//! PSNR over 4:4:4 RGB views, bits per pixel and the RD CSV.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::CodecError;
use crate::container::LightField;

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;
pub const CSV_HEADER: &str = "qp,bpp,psnr_r,psnr_g,psnr_b,psnr_avg";

pub fn psnr(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewPsnr {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    /// PSNR of the MSE pooled over the three channels.
    pub rgb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub views: Vec<ViewPsnr>,
    /// Channel PSNRs averaged over views.
    pub psnr_r: f64,
    pub psnr_g: f64,
    pub psnr_b: f64,
    pub psnr_avg: f64,
}

/// Per-view PSNR of `recon` against `truth`.
pub fn evaluate(recon: &LightField, truth: &LightField) -> Result<Metrics, CodecError> {
    let same = recon.views_u == truth.views_u
        && recon.views_v == truth.views_v
        && recon.width == truth.width
        && recon.height == truth.height
        && recon.data.len() == truth.data.len();
    if !same {
        return Err(CodecError::ShapeMismatch(format!(
            "reconstruction {}x{} views of {}x{} vs ground truth {}x{} views of {}x{}",
            recon.views_u,
            recon.views_v,
            recon.width,
            recon.height,
            truth.views_u,
            truth.views_v,
            truth.width,
            truth.height
        )));
    }
    let peak = ((1u32 << truth.bit_depth) - 1) as f64;
    let n = truth.view_len();
    let views: Vec<ViewPsnr> = (0..truth.views_u * truth.views_v)
        .map(|v| {
            let mut sse = [0.0f64; 3];
            for (a, b) in recon.view(v).iter().zip(truth.view(v)) {
                for k in 0..3 {
                    let d = a[k] as f64 - b[k] as f64;
                    sse[k] += d * d;
                }
            }
            let mse = sse.map(|s| s / n.max(1) as f64);
            ViewPsnr {
                r: psnr(mse[0], peak),
                g: psnr(mse[1], peak),
                b: psnr(mse[2], peak),
                rgb: psnr(mse.iter().sum::<f64>() / 3.0, peak),
            }
        })
        .collect();
    let mean = |f: fn(&ViewPsnr) -> f64| {
        if views.is_empty() {
            PSNR_CAP
        } else {
            views.iter().map(f).sum::<f64>() / views.len() as f64
        }
    };
    Ok(Metrics {
        psnr_r: mean(|v| v.r),
        psnr_g: mean(|v| v.g),
        psnr_b: mean(|v| v.b),
        psnr_avg: mean(|v| v.rgb),
        views,
    })
}

/// Pixel count that bits are spread over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BppBasis {
    /// Every position of every SAI grid.
    #[default]
    Sai,
    /// Every sensor sample of the raw frame.
    Sensor,
}

/// Whole-stream bits divided by the pixel count.
pub fn bits_per_pixel(stream_bytes: usize, pixels: usize) -> f64 {
    if pixels == 0 {
        0.0
    } else {
        (stream_bytes * 8) as f64 / pixels as f64
    }
}

/// One rate-distortion point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdRow {
    pub qp: i32,
    pub bpp: f64,
    pub psnr_r: f64,
    pub psnr_g: f64,
    pub psnr_b: f64,
    pub psnr_avg: f64,
}

impl RdRow {
    pub fn new(qp: i32, bpp: f64, m: &Metrics) -> Self {
        Self {
            qp,
            bpp,
            psnr_r: m.psnr_r,
            psnr_g: m.psnr_g,
            psnr_b: m.psnr_b,
            psnr_avg: m.psnr_avg,
        }
    }

    /// Parses a line written by the `Display` impl.
    pub fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 6 {
            return None;
        }
        let num = |i: usize| f[i].parse::<f64>().ok();
        Some(Self {
            qp: f[0].parse().ok()?,
            bpp: num(1)?,
            psnr_r: num(2)?,
            psnr_g: num(3)?,
            psnr_b: num(4)?,
            psnr_avg: num(5)?,
        })
    }
}

impl fmt::Display for RdRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{:.6},{:.4},{:.4},{:.4},{:.4}",
            self.qp, self.bpp, self.psnr_r, self.psnr_g, self.psnr_b, self.psnr_avg
        )
    }
}
