//! Embedding and editing quality metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adapters::FeatureExtractor;
use crate::error::{Error, Result};
use crate::tensor::{Image, Mask};

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub perceptual: f64,
}

impl MetricReport {
    pub fn compute(a: &Image, b: &Image, fx: &dyn FeatureExtractor) -> Result<Self> {
        let mse = mse(a, b)?;
        Ok(Self {
            mse,
            psnr_db: psnr_from_mse(mse),
            ssim: ssim(a, b)?,
            perceptual: perceptual_distance(a, b, fx, None)?,
        })
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_shape(b, "mse")?;
    let n = a.len() as f64;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        / n)
}

/// Peak signal-to-noise ratio with peak 1.0, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable "valid" Gaussian filtering of one plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), k1 = 0.01,
/// k2 = 0.03, dynamic range 1, valid windows only, averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_shape(b, "ssim")?;
    let (c, h, w) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::WindowTooLarge {
            window: SSIM_WINDOW,
            height: h,
            width: w,
        });
    }
    let k = gaussian_kernel();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for ch in 0..c {
        let x = a.channel(ch);
        let y = b.channel(ch);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
        let (mx, oh, ow) = filter_valid(x, h, w, &k);
        let (my, ..) = filter_valid(y, h, w, &k);
        let (sxx, ..) = filter_valid(&xx, h, w, &k);
        let (syy, ..) = filter_valid(&yy, h, w, &k);
        let (sxy, ..) = filter_valid(&xy, h, w, &k);
        let mut acc = 0.0;
        for i in 0..oh * ow {
            let vx = sxx[i] - mx[i] * mx[i];
            let vy = syy[i] - my[i] * my[i];
            let cov = sxy[i] - mx[i] * my[i];
            acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2))
                / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += acc / (oh * ow) as f64;
    }
    Ok(total / c as f64)
}

/// Sum over extractor layers of the (optionally masked) squared feature
/// difference, each layer normalized by its feature count. Layers are
/// weighted uniformly.
pub fn perceptual_distance(
    a: &Image,
    b: &Image,
    fx: &dyn FeatureExtractor,
    masks: Option<&[Mask]>,
) -> Result<f64> {
    a.ensure_shape(b, "perceptual_distance")?;
    let fa = fx.extract(a)?;
    let fb = fx.extract(b)?;
    if let Some(m) = masks {
        if m.len() != fa.len() {
            return Err(Error::shape("perceptual mask layers", fa.len(), m.len()));
        }
    }
    let mut total = 0.0;
    for (l, (pa, pb)) in fa.iter().zip(&fb).enumerate() {
        let plane = pa.plane_len();
        let mask = match masks {
            Some(m) => {
                pa.ensure_plane(&m[l], &format!("perceptual mask at layer {l}"))?;
                Some(m[l].as_slice())
            }
            None => None,
        };
        let sum: f64 = pa
            .as_slice()
            .iter()
            .zip(pb.as_slice())
            .enumerate()
            .map(|(i, (x, y))| {
                let wgt = mask.map_or(1.0, |m| m[i % plane]);
                (wgt * (x - y)).powi(2)
            })
            .sum();
        total += sum / pa.len() as f64;
    }
    Ok(total)
}

/// Per-image metric rows plus a mean row, written as CSV.
#[derive(Debug, Clone, Default)]
pub struct MetricTable {
    pub rows: Vec<(String, MetricReport)>,
}

impl MetricTable {
    pub fn push(&mut self, name: impl Into<String>, report: MetricReport) {
        self.rows.push((name.into(), report));
    }

    pub fn mean(&self) -> Option<MetricReport> {
        if self.rows.is_empty() {
            return None;
        }
        let n = self.rows.len() as f64;
        let sum = |f: fn(&MetricReport) -> f64| self.rows.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
        Some(MetricReport {
            mse: sum(|r| r.mse),
            psnr_db: sum(|r| r.psnr_db),
            ssim: sum(|r| r.ssim),
            perceptual: sum(|r| r.perceptual),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,mse,psnr_db,ssim,perceptual\n");
        let mut row = |name: &str, r: &MetricReport| {
            let _ = writeln!(out, "{name},{:.6e},{:.4},{:.6},{:.6e}", r.mse, r.psnr_db, r.ssim, r.perceptual);
        };
        for (name, r) in &self.rows {
            row(name, r);
        }
        if let Some(m) = self.mean() {
            row("mean", &m);
        }
        out
    }
}
