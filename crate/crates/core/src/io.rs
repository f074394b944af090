//! 8-bit PNG import/export.
//!
//! Export quantizes `clamp(v, 0, 1) * 255` with round-half-to-even, so golden
//! images are bit-exact across platforms. Masks are written as linear
//! grayscale.

use std::path::Path;

use image::{imageops::FilterType, GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::tensor::{Image, Mask, Tensor3};

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round_ties_even() as u8
}

pub fn to_rgb8(image: &Image) -> Result<RgbImage> {
    if image.channels() != 3 {
        return Err(Error::shape("RGB export channels", 3, image.channels()));
    }
    let (h, w) = (image.height(), image.width());
    Ok(RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        image::Rgb([
            quantize(image.get(0, y, x)),
            quantize(image.get(1, y, x)),
            quantize(image.get(2, y, x)),
        ])
    }))
}

pub fn from_rgb8(rgb: &RgbImage) -> Image {
    let (w, h) = rgb.dimensions();
    Tensor3::from_fn(3, h as usize, w as usize, |c, y, x| {
        rgb.get_pixel(x as u32, y as u32)[c] as f64 / 255.0
    })
}

pub fn save_image(path: &Path, image: &Image) -> Result<()> {
    to_rgb8(image)?.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_mask(path: &Path, mask: &Mask) -> Result<()> {
    let (h, w) = mask.shape();
    let img = GrayImage::from_fn(w as u32, h as u32, |x, y| {
        image::Luma([quantize(mask.get(y as usize, x as usize))])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads an RGB image; when `size` is given and differs, resizes with a
/// triangle filter to `(height, width)`.
pub fn load_image(path: &Path, size: Option<(usize, usize)>) -> Result<Image> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rgb = img.to_rgb8();
    if let Some((h, w)) = size {
        if rgb.dimensions() != (w as u32, h as u32) {
            log::info!(
                "resizing {} from {:?} to {}x{}",
                path.display(),
                rgb.dimensions(),
                w,
                h
            );
            rgb = image::imageops::resize(&rgb, w as u32, h as u32, FilterType::Triangle);
        }
    }
    Ok(from_rgb8(&rgb))
}
