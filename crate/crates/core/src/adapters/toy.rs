//! Small analytic models for desk-scale runs and tests.
//!
//! The toy generator is a sigmoid over a linear combination of fixed spatial
//! bases (one basis per latent coordinate, each tinting a single color
//! channel) plus nearest-upsampled noise planes. Its layout lines up with the
//! toy classifier and parser: a square "feature" patch sits in the middle of
//! a "skin" area framed by a dark "background" border. This gives edits a
//! known optimum: raise or lower one color inside the patch.
//!
//! Resizing: every toy model runs at the generator's native resolution and
//! rejects other sizes. Inputs are resized by the caller before editing.

use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{
    default_union_regions, Classifier, FeatureExtractor, Generator, GeneratorGrad, GeneratorInfo,
    ModelSet, Parser,
};
use crate::error::{Error, Result};
use crate::latent::{LatentCode, NoiseStack};
use crate::masks::AttributeRegionMap;
use crate::tensor::{fmt_shape, sigmoid, Image, Mask, Tensor3};

pub const RED: usize = 0;
pub const GREEN: usize = 1;
pub const BLUE: usize = 2;

/// Half-open pixel rectangle `[y0, y1) x [x0, x1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub y0: usize,
    pub y1: usize,
    pub x0: usize,
    pub x1: usize,
}

impl Rect {
    pub fn new(y0: usize, y1: usize, x0: usize, x1: usize) -> Self {
        Self { y0, y1, x0, x1 }
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        (self.y0..self.y1).contains(&y) && (self.x0..self.x1).contains(&x)
    }

    pub fn area(&self) -> usize {
        (self.y1 - self.y0) * (self.x1 - self.x0)
    }

    pub fn grow(&self, by: isize) -> Self {
        let g = |v: usize, d: isize| (v as isize + d).max(0) as usize;
        Self {
            y0: g(self.y0, -by),
            y1: g(self.y1, by),
            x0: g(self.x0, -by),
            x1: g(self.x1, by),
        }
    }

    fn soft(&self, y: usize, x: usize, edge: f64) -> f64 {
        let (yc, xc) = (y as f64 + 0.5, x as f64 + 0.5);
        sigmoid((yc - self.y0 as f64) / edge)
            * sigmoid((self.y1 as f64 - yc) / edge)
            * sigmoid((xc - self.x0 as f64) / edge)
            * sigmoid((self.x1 as f64 - xc) / edge)
    }
}

#[derive(Debug, Clone, Copy)]
enum Pattern {
    Const,
    RampX,
    RampY,
    Patch(Rect),
    Ring { outer: Rect, inner: Rect },
    Border(usize),
    HalfLeft,
    HalfTop,
    Bump { cy: f64, cx: f64, sigma: f64 },
    Cos { fx: f64, fy: f64 },
}

impl Pattern {
    fn eval(&self, y: usize, x: usize, size: usize, edge: f64) -> f64 {
        let s = size as f64;
        let (u, v) = ((x as f64 + 0.5) / s, (y as f64 + 0.5) / s);
        match *self {
            Pattern::Const => 1.0,
            Pattern::RampX => 2.0 * u - 1.0,
            Pattern::RampY => 2.0 * v - 1.0,
            Pattern::Patch(r) => r.soft(y, x, edge),
            Pattern::Ring { outer, inner } => outer.soft(y, x, edge) - inner.soft(y, x, edge),
            Pattern::Border(width) => {
                1.0 - Rect::new(width, size - width, width, size - width).soft(y, x, edge)
            }
            Pattern::HalfLeft => sigmoid((0.5 - u) * s / edge.max(1.0)),
            Pattern::HalfTop => sigmoid((0.5 - v) * s / edge.max(1.0)),
            Pattern::Bump { cy, cx, sigma } => {
                let d2 = (u - cx).powi(2) + (v - cy).powi(2);
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            Pattern::Cos { fx, fy } => {
                (std::f64::consts::TAU * fx * u).cos() * (std::f64::consts::TAU * fy * v).cos()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyGeneratorConfig {
    pub size: usize,
    pub latent_layers: usize,
    pub style_dim: usize,
    pub noise_resolutions: Vec<(usize, usize)>,
    /// The central feature patch the toy classifier and parser key on.
    pub feature: Rect,
    /// Width of the dark background frame.
    pub border: usize,
    /// Edge softness of the patch bases, in pixels.
    pub edge: f64,
    /// Per-color gain of each noise plane.
    pub noise_gain: [f64; 3],
    /// Spread of the latent sampler around its center.
    pub latent_spread: f64,
}

impl Default for ToyGeneratorConfig {
    fn default() -> Self {
        Self {
            size: 32,
            latent_layers: 4,
            style_dim: 8,
            noise_resolutions: vec![(8, 8), (16, 16), (32, 32)],
            feature: Rect::new(10, 22, 10, 22),
            border: 4,
            edge: 0.1,
            noise_gain: [0.15, 0.12, 0.13],
            latent_spread: 0.5,
        }
    }
}

/// Deterministic sigmoid-of-linear-bases generator.
#[derive(Debug)]
pub struct ToyGenerator {
    config: ToyGeneratorConfig,
    info: GeneratorInfo,
    /// `slots x 3 x size x size`, flattened.
    bases: Vec<f64>,
    center: Vec<f64>,
}

impl ToyGenerator {
    pub fn new(config: ToyGeneratorConfig) -> Result<Self> {
        let size = config.size;
        for &(h, w) in &config.noise_resolutions {
            if h == 0 || w == 0 || !size.is_multiple_of(h) || !size.is_multiple_of(w) {
                return Err(Error::InvalidConfig(format!(
                    "noise resolution {h}x{w} does not divide output size {size}"
                )));
            }
        }
        if config.feature.y1 > size || config.feature.x1 > size || config.border * 2 >= size {
            return Err(Error::InvalidConfig("toy layout does not fit output size".into()));
        }
        let info = GeneratorInfo {
            latent_layer_count: config.latent_layers,
            style_dim: config.style_dim,
            noise_resolutions: config.noise_resolutions.clone(),
            output_size: (size, size),
        };
        info.validate()?;

        let slots = config.latent_layers * config.style_dim;
        let plane = size * size;
        let mut bases = vec![0.0; slots * 3 * plane];
        for s in 0..slots {
            let (pattern, color) = slot_pattern(&config, s);
            let base = (s * 3 + color) * plane;
            for y in 0..size {
                for x in 0..size {
                    bases[base + y * size + x] = pattern.eval(y, x, size, config.edge);
                }
            }
        }

        let mut center = vec![0.0; slots];
        for (s, v) in [(0, -0.5), (1, 1.0), (2, -1.0)] {
            if s < slots {
                center[s] = v;
            }
        }

        Ok(Self {
            config,
            info,
            bases,
            center,
        })
    }

    pub fn config(&self) -> &ToyGeneratorConfig {
        &self.config
    }

    /// The center of the latent sampler; the mean latent converges here.
    pub fn latent_center(&self) -> LatentCode {
        LatentCode::from_vec(
            self.config.latent_layers,
            self.config.style_dim,
            self.center.clone(),
        )
        .expect("center sized from config")
    }

    fn slots(&self) -> usize {
        self.config.latent_layers * self.config.style_dim
    }

    fn pre_activation(&self, w: &LatentCode, n: &NoiseStack) -> Vec<f64> {
        let size = self.config.size;
        let plane = size * size;
        let mut pre = vec![0.0; 3 * plane];
        for (s, &coef) in w.as_slice().iter().enumerate().take(self.slots()) {
            if coef == 0.0 {
                continue;
            }
            let basis = &self.bases[s * 3 * plane..(s + 1) * 3 * plane];
            for (p, b) in pre.iter_mut().zip(basis) {
                *p += coef * b;
            }
        }
        for ch in n.channels() {
            let (fy, fx) = (size / ch.height(), size / ch.width());
            for y in 0..size {
                for x in 0..size {
                    let v = ch.get(y / fy, x / fx);
                    for (c, gain) in self.config.noise_gain.iter().enumerate() {
                        pre[c * plane + y * size + x] += gain * v;
                    }
                }
            }
        }
        pre
    }
}

/// Slot table: layer 0 holds global color/ramps, layer 1 the feature patch
/// and the ring around it, layer 2 the frame and half-planes, layer 3 and
/// beyond low-frequency cosines.
fn slot_pattern(cfg: &ToyGeneratorConfig, slot: usize) -> (Pattern, usize) {
    let patch = cfg.feature;
    let ring = Pattern::Ring {
        outer: patch.grow(2),
        inner: patch,
    };
    let inner = Pattern::Patch(patch.grow(-2));
    let table: [(Pattern, usize); 32] = [
        (Pattern::Const, RED),
        (Pattern::Const, GREEN),
        (Pattern::Const, BLUE),
        (Pattern::RampX, RED),
        (Pattern::RampY, GREEN),
        (Pattern::RampX, BLUE),
        (Pattern::RampY, RED),
        (Pattern::RampX, GREEN),
        (Pattern::Patch(patch), RED),
        (Pattern::Patch(patch), GREEN),
        (Pattern::Patch(patch), BLUE),
        (ring, BLUE),
        (ring, RED),
        (ring, GREEN),
        (inner, BLUE),
        (inner, RED),
        (Pattern::Border(cfg.border), RED),
        (Pattern::Border(cfg.border), GREEN),
        (Pattern::Border(cfg.border), BLUE),
        (Pattern::HalfLeft, RED),
        (Pattern::HalfTop, GREEN),
        (Pattern::HalfLeft, BLUE),
        (Pattern::HalfTop, RED),
        (
            Pattern::Bump {
                cy: 0.3,
                cx: 0.3,
                sigma: 0.15,
            },
            GREEN,
        ),
        (Pattern::Cos { fx: 1.0, fy: 0.0 }, RED),
        (Pattern::Cos { fx: 0.0, fy: 1.0 }, GREEN),
        (Pattern::Cos { fx: 1.0, fy: 1.0 }, BLUE),
        (Pattern::Cos { fx: 2.0, fy: 0.0 }, RED),
        (Pattern::Cos { fx: 0.0, fy: 2.0 }, GREEN),
        (Pattern::Cos { fx: 2.0, fy: 1.0 }, BLUE),
        (Pattern::Cos { fx: 1.0, fy: 2.0 }, RED),
        (Pattern::Cos { fx: 2.0, fy: 2.0 }, GREEN),
    ];
    // Layers are laid out at style_dim stride; map slot to the table by
    // (layer, index) so non-default style dims keep layer semantics.
    let (layer, k) = (slot / cfg.style_dim, slot % cfg.style_dim);
    if layer < 4 && k < 8 {
        table[layer * 8 + k]
    } else {
        let f = 1.0 + (slot % 3) as f64;
        (
            Pattern::Cos {
                fx: f,
                fy: ((slot / 3) % 3) as f64,
            },
            slot % 3,
        )
    }
}

impl Generator for ToyGenerator {
    fn info(&self) -> &GeneratorInfo {
        &self.info
    }

    fn sample_latent(&self, rng: &mut dyn RngCore) -> LatentCode {
        let values = self
            .center
            .iter()
            .map(|&c| {
                let z: f64 = StandardNormal.sample(rng);
                c + self.config.latent_spread * z
            })
            .collect();
        LatentCode::from_vec(self.config.latent_layers, self.config.style_dim, values)
            .expect("sized from config")
    }

    fn generate(&self, w: &LatentCode, n: &NoiseStack) -> Result<Image> {
        self.check_inputs(w, n)?;
        let size = self.config.size;
        let pre = self.pre_activation(w, n);
        Tensor3::from_vec(3, size, size, pre.into_iter().map(sigmoid).collect())
    }

    fn generate_vjp(
        &self,
        w: &LatentCode,
        n: &NoiseStack,
        grad_output: &Image,
    ) -> Result<GeneratorGrad> {
        self.check_inputs(w, n)?;
        let size = self.config.size;
        if grad_output.shape() != (3, size, size) {
            return Err(Error::shape(
                "generator output gradient",
                fmt_shape((3, size, size)),
                fmt_shape(grad_output.shape()),
            ));
        }
        let plane = size * size;
        let pre = self.pre_activation(w, n);
        let grad_pre: Vec<f64> = pre
            .iter()
            .zip(grad_output.as_slice())
            .map(|(&p, &g)| {
                let s = sigmoid(p);
                g * s * (1.0 - s)
            })
            .collect();

        let mut latent = LatentCode::zeros(self.config.latent_layers, self.config.style_dim);
        for (s, out) in latent.as_mut_slice().iter_mut().enumerate() {
            let basis = &self.bases[s * 3 * plane..(s + 1) * 3 * plane];
            *out = basis.iter().zip(&grad_pre).map(|(b, g)| b * g).sum();
        }

        let mut noise = NoiseStack::zeros(&self.config.noise_resolutions);
        for ch in noise.channels_mut() {
            let (fy, fx) = (size / ch.height(), size / ch.width());
            for y in 0..size {
                for x in 0..size {
                    let mut acc = 0.0;
                    for (c, gain) in self.config.noise_gain.iter().enumerate() {
                        acc += gain * grad_pre[c * plane + y * size + x];
                    }
                    let (ny, nx) = (y / fy, x / fx);
                    let cur = ch.get(ny, nx);
                    ch.set(ny, nx, cur + acc);
                }
            }
        }
        Ok(GeneratorGrad { latent, noise })
    }
}

/// One attribute of the toy classifier: mean of one color channel over a
/// rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyAttribute {
    pub name: String,
    pub channel: usize,
    pub rect: Rect,
}

#[derive(Debug, Clone)]
pub struct ToyClassifier {
    attributes: Vec<ToyAttribute>,
    names: Vec<String>,
    size: (usize, usize),
}

impl ToyClassifier {
    pub fn new(attributes: Vec<ToyAttribute>, size: (usize, usize)) -> Result<Self> {
        for a in &attributes {
            if a.channel >= 3 || a.rect.area() == 0 || a.rect.y1 > size.0 || a.rect.x1 > size.1 {
                return Err(Error::InvalidConfig(format!("bad toy attribute `{}`", a.name)));
            }
        }
        let names = attributes.iter().map(|a| a.name.clone()).collect();
        Ok(Self {
            attributes,
            names,
            size,
        })
    }

    fn check(&self, image: &Image) -> Result<()> {
        if image.shape() != (3, self.size.0, self.size.1) {
            return Err(Error::shape(
                "classifier input",
                fmt_shape((3, self.size.0, self.size.1)),
                fmt_shape(image.shape()),
            ));
        }
        Ok(())
    }
}

impl Classifier for ToyClassifier {
    fn attribute_names(&self) -> &[String] {
        &self.names
    }

    fn classify(&self, image: &Image) -> Result<Vec<f64>> {
        self.check(image)?;
        Ok(self
            .attributes
            .iter()
            .map(|a| {
                let r = a.rect;
                let mut acc = 0.0;
                for y in r.y0..r.y1 {
                    for x in r.x0..r.x1 {
                        acc += image.get(a.channel, y, x);
                    }
                }
                acc / r.area() as f64
            })
            .collect())
    }

    fn classify_vjp(&self, image: &Image, grad_probs: &[f64]) -> Result<Image> {
        self.check(image)?;
        if grad_probs.len() != self.attributes.len() {
            return Err(Error::shape(
                "classifier output gradient",
                self.attributes.len(),
                grad_probs.len(),
            ));
        }
        let mut grad = Tensor3::zeros(3, image.height(), image.width());
        for (a, &g) in self.attributes.iter().zip(grad_probs) {
            let r = a.rect;
            let share = g / r.area() as f64;
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    let v = grad.get(a.channel, y, x);
                    grad.set(a.channel, y, x, v + share);
                }
            }
        }
        Ok(grad)
    }
}

/// `sigmoid(sharpness * (I[channel] - threshold))`, flipped when `above` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub channel: usize,
    pub threshold: f64,
    pub above: bool,
}

/// A toy region is the product of its threshold conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyRegion {
    pub name: String,
    pub conditions: Vec<Threshold>,
}

#[derive(Debug, Clone)]
pub struct ToyParser {
    regions: Vec<ToyRegion>,
    names: Vec<String>,
    sharpness: f64,
}

impl ToyParser {
    pub fn new(regions: Vec<ToyRegion>, sharpness: f64) -> Result<Self> {
        if regions.is_empty() || !sharpness.is_finite() || sharpness <= 0.0 {
            return Err(Error::InvalidConfig("toy parser needs regions and sharpness > 0".into()));
        }
        let names = regions.iter().map(|r| r.name.clone()).collect();
        Ok(Self {
            regions,
            names,
            sharpness,
        })
    }

    /// Single-condition parser; used in tests.
    pub fn single(name: &str, channel: usize, threshold: f64, sharpness: f64) -> Self {
        Self::new(
            vec![ToyRegion {
                name: name.into(),
                conditions: vec![Threshold {
                    channel,
                    threshold,
                    above: true,
                }],
            }],
            sharpness,
        )
        .expect("valid")
    }

    fn condition(&self, t: &Threshold, v: f64) -> (f64, f64) {
        let sign = if t.above { 1.0 } else { -1.0 };
        let s = sigmoid(self.sharpness * sign * (v - t.threshold));
        (s, self.sharpness * sign * s * (1.0 - s))
    }

    fn check(&self, image: &Image) -> Result<()> {
        if image.channels() != 3 {
            return Err(Error::shape("parser input channels", 3, image.channels()));
        }
        Ok(())
    }
}

impl Parser for ToyParser {
    fn region_names(&self) -> &[String] {
        &self.names
    }

    fn parse(&self, image: &Image) -> Result<Tensor3> {
        self.check(image)?;
        let (h, w) = (image.height(), image.width());
        let mut out = Tensor3::zeros(self.regions.len(), h, w);
        for (r, region) in self.regions.iter().enumerate() {
            for y in 0..h {
                for x in 0..w {
                    let v: f64 = region
                        .conditions
                        .iter()
                        .map(|t| self.condition(t, image.get(t.channel, y, x)).0)
                        .product();
                    out.set(r, y, x, v);
                }
            }
        }
        Ok(out)
    }

    fn parse_vjp(&self, image: &Image, grad_map: &Tensor3) -> Result<Image> {
        self.check(image)?;
        let (h, w) = (image.height(), image.width());
        if grad_map.shape() != (self.regions.len(), h, w) {
            return Err(Error::shape(
                "parser output gradient",
                fmt_shape((self.regions.len(), h, w)),
                fmt_shape(grad_map.shape()),
            ));
        }
        let mut grad = Tensor3::zeros(3, h, w);
        for (r, region) in self.regions.iter().enumerate() {
            for y in 0..h {
                for x in 0..w {
                    let g = grad_map.get(r, y, x);
                    if g == 0.0 {
                        continue;
                    }
                    let terms: Vec<(f64, f64)> = region
                        .conditions
                        .iter()
                        .map(|t| self.condition(t, image.get(t.channel, y, x)))
                        .collect();
                    for (i, t) in region.conditions.iter().enumerate() {
                        let others: f64 = terms
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(_, &(v, _))| v)
                            .product();
                        let v = grad.get(t.channel, y, x);
                        grad.set(t.channel, y, x, v + g * terms[i].1 * others);
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// Average-pool pyramid followed by a fixed channel mix and `tanh`.
#[derive(Debug, Clone)]
pub struct ToyExtractor {
    scales: Vec<usize>,
    /// Per layer, `out_channels x 3` mixing weights.
    mixes: Vec<Vec<[f64; 3]>>,
}

impl ToyExtractor {
    pub fn new(scales: Vec<usize>, out_channels: usize) -> Self {
        let mixes = (0..scales.len())
            .map(|l| {
                (0..out_channels)
                    .map(|o| {
                        let mut row = [0.0; 3];
                        for (c, v) in row.iter_mut().enumerate() {
                            *v = (1.3 * (l + 1) as f64 * (o + 1) as f64 + 0.7 * c as f64).cos();
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        Self { scales, mixes }
    }

    /// Five layers at scales 1, 2, 4, 8, 16 with four channels each.
    pub fn five_layer() -> Self {
        Self::new(vec![1, 2, 4, 8, 16], 4)
    }

    fn pool(image: &Image, s: usize) -> Result<Tensor3> {
        let (h, w) = (image.height(), image.width());
        if h % s != 0 || w % s != 0 {
            return Err(Error::shape(
                "feature extractor input",
                format!("dims divisible by {s}"),
                format!("{h}x{w}"),
            ));
        }
        let mut out = Tensor3::zeros(3, h / s, w / s);
        let norm = 1.0 / (s * s) as f64;
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    let (py, px) = (y / s, x / s);
                    let v = out.get(c, py, px);
                    out.set(c, py, px, v + norm * image.get(c, y, x));
                }
            }
        }
        Ok(out)
    }
}

impl FeatureExtractor for ToyExtractor {
    fn scales(&self) -> &[usize] {
        &self.scales
    }

    fn extract(&self, image: &Image) -> Result<Vec<Tensor3>> {
        if image.channels() != 3 {
            return Err(Error::shape("feature extractor channels", 3, image.channels()));
        }
        self.scales
            .iter()
            .zip(&self.mixes)
            .map(|(&s, mix)| {
                let pooled = Self::pool(image, s)?;
                let (_, h, w) = pooled.shape();
                Ok(Tensor3::from_fn(mix.len(), h, w, |o, y, x| {
                    let z: f64 = (0..3).map(|c| mix[o][c] * pooled.get(c, y, x)).sum();
                    z.tanh()
                }))
            })
            .collect()
    }

    fn extract_vjp(&self, image: &Image, grad_features: &[Tensor3]) -> Result<Image> {
        if grad_features.len() != self.scales.len() {
            return Err(Error::shape(
                "feature gradient layers",
                self.scales.len(),
                grad_features.len(),
            ));
        }
        let (h, w) = (image.height(), image.width());
        let mut grad = Tensor3::zeros(3, h, w);
        for ((&s, mix), gf) in self.scales.iter().zip(&self.mixes).zip(grad_features) {
            let pooled = Self::pool(image, s)?;
            let (_, ph, pw) = pooled.shape();
            if gf.shape() != (mix.len(), ph, pw) {
                return Err(Error::shape(
                    format!("feature gradient at scale {s}"),
                    fmt_shape((mix.len(), ph, pw)),
                    fmt_shape(gf.shape()),
                ));
            }
            let mut grad_pooled = Tensor3::zeros(3, ph, pw);
            for (o, row) in mix.iter().enumerate() {
                for y in 0..ph {
                    for x in 0..pw {
                        let z: f64 = (0..3).map(|c| row[c] * pooled.get(c, y, x)).sum();
                        let t = z.tanh();
                        let gz = gf.get(o, y, x) * (1.0 - t * t);
                        for (c, m) in row.iter().enumerate() {
                            let v = grad_pooled.get(c, y, x);
                            grad_pooled.set(c, y, x, v + gz * m);
                        }
                    }
                }
            }
            let norm = 1.0 / (s * s) as f64;
            for c in 0..3 {
                for y in 0..h {
                    for x in 0..w {
                        let v = grad.get(c, y, x);
                        grad.set(c, y, x, v + norm * grad_pooled.get(c, y / s, x / s));
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// Single layer returning the image itself.
#[derive(Debug, Clone, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn scales(&self) -> &[usize] {
        &[1]
    }

    fn extract(&self, image: &Image) -> Result<Vec<Tensor3>> {
        Ok(vec![image.clone()])
    }

    fn extract_vjp(&self, _image: &Image, grad_features: &[Tensor3]) -> Result<Image> {
        match grad_features {
            [g] => Ok(g.clone()),
            other => Err(Error::shape("feature gradient layers", 1, other.len())),
        }
    }
}

/// Attribute names understood by [`toy_classifier`].
pub const REGION_MEAN_UP: &str = "region_mean_up";
pub const REGION_GLOW: &str = "region_glow";

pub fn toy_classifier(config: &ToyGeneratorConfig) -> ToyClassifier {
    let probe = config.feature.grow(-1);
    ToyClassifier::new(
        vec![
            ToyAttribute {
                name: REGION_MEAN_UP.into(),
                channel: RED,
                rect: probe,
            },
            ToyAttribute {
                name: REGION_GLOW.into(),
                channel: GREEN,
                rect: probe,
            },
        ],
        (config.size, config.size),
    )
    .expect("layout validated by generator config")
}

/// Regions: `skin` (green), `feature` (blue), `hair` (strong red) and
/// `background` (neither green nor blue).
pub fn toy_parser() -> ToyParser {
    let cond = |channel, threshold, above| Threshold {
        channel,
        threshold,
        above,
    };
    ToyParser::new(
        vec![
            ToyRegion {
                name: "skin".into(),
                conditions: vec![cond(GREEN, 0.5, true)],
            },
            ToyRegion {
                name: "feature".into(),
                conditions: vec![cond(BLUE, 0.5, true)],
            },
            ToyRegion {
                name: "hair".into(),
                conditions: vec![cond(RED, 0.75, true)],
            },
            ToyRegion {
                name: "background".into(),
                conditions: vec![cond(GREEN, 0.3, false), cond(BLUE, 0.5, false)],
            },
        ],
        16.0,
    )
    .expect("static regions")
}

pub fn toy_region_map() -> AttributeRegionMap {
    AttributeRegionMap::from_pairs([
        (REGION_MEAN_UP, &["feature"][..]),
        (REGION_GLOW, &["feature"][..]),
    ])
}

/// The default toy model set.
pub fn toy_models() -> ModelSet {
    toy_models_with(ToyGeneratorConfig::default()).expect("default toy config is valid")
}

pub fn toy_models_with(config: ToyGeneratorConfig) -> Result<ModelSet> {
    let classifier = toy_classifier(&config);
    let generator = ToyGenerator::new(config)?;
    let parser = toy_parser();
    let union_regions = default_union_regions(&parser);
    Ok(ModelSet {
        generator: Arc::new(generator),
        classifier: Arc::new(classifier),
        parser: Arc::new(parser),
        extractor: Some(Arc::new(ToyExtractor::five_layer())),
        regions: toy_region_map(),
        skin_region: "skin".into(),
        union_regions,
    })
}

/// A latent code rendering the reference toy face: dark frame, green skin,
/// blue feature patch with dim red.
pub fn face_latent(config: &ToyGeneratorConfig) -> LatentCode {
    let mut w = LatentCode::zeros(config.latent_layers, config.style_dim);
    let d = config.style_dim;
    let mut put = |layer: usize, k: usize, v: f64| {
        if layer < config.latent_layers && k < d {
            w.layer_mut(layer)[k] = v;
        }
    };
    put(0, 0, -1.0);
    put(0, 1, 1.5);
    put(0, 2, -1.5);
    put(0, 3, 0.2);
    put(0, 4, -0.2);
    put(1, 1, -3.0);
    put(1, 2, 3.0);
    put(2, 1, -4.0);
    put(3, 0, 0.15);
    put(3, 1, 0.1);
    w
}

/// Renders [`face_latent`] with zero noise.
pub fn face_image(models: &ModelSet, config: &ToyGeneratorConfig) -> Result<Image> {
    let g = &models.generator;
    g.generate(
        &face_latent(config),
        &NoiseStack::zeros(&g.info().noise_resolutions),
    )
}

/// Builds a binary mask of a rectangle; handy in tests and demos.
pub fn rect_mask(height: usize, width: usize, rect: Rect) -> Mask {
    Mask::from_fn(height, width, |y, x| if rect.contains(y, x) { 1.0 } else { 0.0 })
}
