//! Dense planar arrays used for images, parser maps, feature maps and masks.
//!
//! Everything is `f64`, row-major, channel-planar (`c, y, x`).

use std::fmt;

use crate::error::{Error, Result};

/// A `(channels, height, width)` array.
#[derive(Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

/// An RGB image, `3 x height x width`, nominally in `[0, 1]`.
pub type Image = Tensor3;

impl fmt::Debug for Tensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor3({}x{}x{})", self.channels, self.height, self.width)
    }
}

impl Tensor3 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::shape("Tensor3::from_vec", expected, data.len()));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    /// Stacks equally sized planes into channels.
    pub fn stack(planes: &[Mask]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidConfig("cannot stack zero planes".into()))?;
        let (h, w) = first.shape();
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            if p.shape() != (h, w) {
                return Err(Error::shape("Tensor3::stack", fmt_hw(h, w), fmt_hw(p.height, p.width)));
            }
            data.extend_from_slice(p.as_slice());
        }
        Tensor3::from_vec(planes.len(), h, w, data)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(c, y, x);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies one channel out as a mask-shaped plane.
    pub fn plane(&self, c: usize) -> Mask {
        Mask {
            height: self.height,
            width: self.width,
            data: self.channel(c).to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn ensure_shape(&self, other: &Tensor3, context: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(context, fmt_shape(self.shape()), fmt_shape(other.shape())));
        }
        Ok(())
    }

    /// Checks that a mask can broadcast over this tensor's spatial dims.
    pub fn ensure_plane(&self, mask: &Mask, context: &str) -> Result<()> {
        if (self.height, self.width) != mask.shape() {
            return Err(Error::shape(
                context,
                fmt_hw(self.height, self.width),
                fmt_hw(mask.height, mask.width),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn add_assign(&mut self, other: &Tensor3) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|v| *v *= k);
    }
}

/// A single `height x width` plane. Masks are probabilities in `[0, 1]`,
/// but the type is also used for unconstrained 2-D data (e.g. noise).
#[derive(Clone, PartialEq)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask({}x{})", self.height, self.width)
    }
}

impl Mask {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape("Mask::from_vec", height * width, data.len()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Mask, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same(other, "Mask::zip_map")?;
        Ok(Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn ensure_same(&self, other: &Mask, context: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                context,
                fmt_hw(self.height, self.width),
                fmt_hw(other.height, other.width),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True when every value lies in `[0, 1]`.
    pub fn is_probability(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Area-average downsampling by an integer factor in both dimensions.
    pub fn downsample_area(&self, factor: usize) -> Result<Mask> {
        if factor == 0 || !self.height.is_multiple_of(factor) || !self.width.is_multiple_of(factor) {
            return Err(Error::shape(
                "Mask::downsample_area",
                format!("dims divisible by {factor}"),
                fmt_hw(self.height, self.width),
            ));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let (h, w) = (self.height / factor, self.width / factor);
        let norm = 1.0 / (factor * factor) as f64;
        Ok(Mask::from_fn(h, w, |y, x| {
            let mut acc = 0.0;
            for dy in 0..factor {
                let row = (y * factor + dy) * self.width + x * factor;
                acc += self.data[row..row + factor].iter().sum::<f64>();
            }
            acc * norm
        }))
    }
}

pub(crate) fn fmt_hw(h: usize, w: usize) -> String {
    format!("{h}x{w}")
}

pub(crate) fn fmt_shape((c, h, w): (usize, usize, usize)) -> String {
    format!("{c}x{h}x{w}")
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
