//! Differentiable loss terms and the weighted objectives built from them.
//!
//! Each term comes as a value function and a `*_grad` variant returning the
//! value together with the gradient with respect to its differentiable
//! input. The composite objectives run the models and return the gradient
//! with respect to the generated image; the optimizer chains that through
//! the generator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adapters::ModelSet;
use crate::error::{Error, Result};
use crate::latent::{pyramid_levels, NoiseStack};
use crate::masks::{channel_union, channel_union_vjp, AttributeRegionMap, BlendMode, UnionMasks};
use crate::tensor::{Image, Mask, Tensor3};

/// Probability clamp applied before logarithms.
pub const PROB_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeTarget {
    pub name: String,
    pub present: bool,
}

impl AttributeTarget {
    pub fn present(name: &str) -> Self {
        Self {
            name: name.into(),
            present: true,
        }
    }

    pub fn absent(name: &str) -> Self {
        Self {
            name: name.into(),
            present: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditMode {
    #[default]
    Local,
    Global,
}

/// What to edit and how strongly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditSpec {
    pub attributes: Vec<AttributeTarget>,
    /// Label smoothing; doubles as the intensity dial.
    pub epsilon: f64,
    /// Target-region size factor.
    pub alpha: Option<f64>,
    pub mode: EditMode,
    /// Overrides the blending mode derived from `mode` and the attributes.
    pub blend: Option<BlendMode>,
}

impl EditSpec {
    pub fn new(attributes: Vec<AttributeTarget>) -> Self {
        Self {
            attributes,
            epsilon: 0.05,
            alpha: None,
            mode: EditMode::Local,
            blend: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_mode(mut self, mode: EditMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::InvalidConfig("attributes: at least one attribute is required".into()));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon: {} is outside [0, 0.5)",
                self.epsilon
            )));
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidConfig(format!("alpha: {a} must be > 0")));
            }
        }
        Ok(())
    }

    /// `1 - epsilon` for present attributes, `epsilon` for absent ones.
    pub fn smoothed_labels(&self) -> Vec<f64> {
        self.attributes
            .iter()
            .map(|a| if a.present { 1.0 - self.epsilon } else { self.epsilon })
            .collect()
    }

    pub fn attribute_names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn blend_mode(&self, map: &AttributeRegionMap) -> BlendMode {
        if let Some(b) = self.blend {
            return b;
        }
        match self.mode {
            EditMode::Global => BlendMode::Global,
            EditMode::Local if self.attributes.iter().any(|a| map.is_shape_changing(&a.name)) => {
                BlendMode::HairShape
            }
            EditMode::Local => BlendMode::Standard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_m: f64,
    pub lambda_c: f64,
    pub lambda_s: f64,
    pub lambda_p: f64,
    pub lambda_r: f64,
}

impl LossWeights {
    /// Published defaults; the size term is off.
    pub const PAPER: LossWeights = LossWeights {
        lambda_m: 2.0,
        lambda_c: 0.005,
        lambda_s: 0.5,
        lambda_p: 0.0,
        lambda_r: 1.0,
    };

    pub fn appearance_only(lambda_m: f64) -> Self {
        Self {
            lambda_m,
            lambda_c: 0.0,
            lambda_s: 0.0,
            lambda_p: 0.0,
            lambda_r: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_m", self.lambda_m),
            ("lambda_c", self.lambda_c),
            ("lambda_s", self.lambda_s),
            ("lambda_p", self.lambda_p),
            ("lambda_r", self.lambda_r),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name}: {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::PAPER
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Appearance,
    Semantic,
    Shape,
    Size,
    NoiseRegularizer,
}

impl Term {
    pub fn label(self) -> &'static str {
        match self {
            Term::Appearance => "L_M",
            Term::Semantic => "L_C",
            Term::Shape => "L_S",
            Term::Size => "L_P",
            Term::NoiseRegularizer => "L_R",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub term: Term,
    pub value: f64,
    pub weight: f64,
}

/// Evaluated terms of one objective call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub terms: Vec<TermValue>,
    pub total: f64,
    /// Classifier outputs for the edited attributes, when evaluated.
    pub probabilities: Vec<f64>,
    /// Per-attribute divergences averaged into `L_C`.
    pub attribute_kl: Vec<f64>,
}

impl LossReport {
    fn push(&mut self, term: Term, value: f64, weight: f64) {
        self.terms.push(TermValue {
            term,
            value,
            weight,
        });
        self.total += weight * value;
    }

    pub fn get(&self, term: Term) -> Option<f64> {
        self.terms.iter().find(|t| t.term == term).map(|t| t.value)
    }

    pub fn has(&self, term: Term) -> bool {
        self.get(term).is_some()
    }

    pub fn weighted_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight * t.value).sum()
    }

    pub fn first_non_finite(&self) -> Option<Term> {
        self.terms.iter().find(|t| !t.value.is_finite()).map(|t| t.term)
    }
}

// ---------------------------------------------------------------------------
// Individual terms

/// Squared L2 norm of the masked difference, mask broadcast over channels.
pub fn appearance_loss(image_gen: &Image, image_in: &Image, preserve: &Mask) -> Result<f64> {
    check_appearance(image_gen, image_in, preserve)?;
    let m = preserve.as_slice();
    let plane = m.len();
    Ok(image_gen
        .as_slice()
        .iter()
        .zip(image_in.as_slice())
        .enumerate()
        .map(|(i, (g, x))| {
            let d = m[i % plane] * (g - x);
            d * d
        })
        .sum())
}

pub fn appearance_loss_grad(image_gen: &Image, image_in: &Image, preserve: &Mask) -> Result<(f64, Image)> {
    check_appearance(image_gen, image_in, preserve)?;
    let m = preserve.as_slice();
    let plane = m.len();
    let mut value = 0.0;
    let mut grad = Tensor3::zeros(image_gen.channels(), image_gen.height(), image_gen.width());
    for (i, ((g, x), o)) in image_gen
        .as_slice()
        .iter()
        .zip(image_in.as_slice())
        .zip(grad.as_mut_slice())
        .enumerate()
    {
        let mk = m[i % plane];
        let diff = g - x;
        value += (mk * diff).powi(2);
        *o = 2.0 * mk * mk * diff;
    }
    Ok((value, grad))
}

fn check_appearance(image_gen: &Image, image_in: &Image, preserve: &Mask) -> Result<()> {
    image_gen.ensure_shape(image_in, "appearance_loss images")?;
    image_gen.ensure_plane(preserve, "appearance_loss mask")
}

/// `D_KL(Bernoulli(p) || Bernoulli(q))`, both clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let p = clamp_prob(p);
    let q = clamp_prob(q);
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// Derivative of [`bernoulli_kl`] in its first argument; zero where the
/// clamp is active.
pub fn bernoulli_kl_dp(p: f64, q: f64) -> f64 {
    if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
        return 0.0;
    }
    let q = clamp_prob(q);
    (p / q).ln() - ((1.0 - p) / (1.0 - q)).ln()
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean Bernoulli divergence between predictions and smoothed labels.
pub fn semantic_loss(probs: &[f64], targets: &[f64]) -> Result<f64> {
    Ok(semantic_loss_grad(probs, targets)?.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub per_attribute: Vec<f64>,
}

pub fn semantic_loss_grad(probs: &[f64], targets: &[f64]) -> Result<SemanticEval> {
    if probs.len() != targets.len() || probs.is_empty() {
        return Err(Error::shape("semantic_loss", targets.len().max(1), probs.len()));
    }
    let k = probs.len() as f64;
    let per_attribute: Vec<f64> = probs.iter().zip(targets).map(|(&p, &y)| bernoulli_kl(p, y)).collect();
    let grad = probs
        .iter()
        .zip(targets)
        .map(|(&p, &y)| bernoulli_kl_dp(p, y) / k)
        .collect();
    Ok(SemanticEval {
        value: per_attribute.iter().sum::<f64>() / k,
        grad,
        per_attribute,
    })
}

/// `||reference - target_gen||^2`; the reference is a constant.
pub fn shape_loss(reference: &Mask, target_gen: &Mask) -> Result<f64> {
    Ok(shape_loss_grad(reference, target_gen)?.0)
}

pub fn shape_loss_grad(reference: &Mask, target_gen: &Mask) -> Result<(f64, Mask)> {
    reference.ensure_same(target_gen, "shape_loss")?;
    let value = reference
        .as_slice()
        .iter()
        .zip(target_gen.as_slice())
        .map(|(r, g)| (r - g).powi(2))
        .sum();
    let grad = target_gen.zip_map(reference, |g, r| 2.0 * (g - r))?;
    Ok((value, grad))
}

/// Fraction of the image covered by a mask.
pub fn portion(mask: &Mask) -> f64 {
    mask.mean()
}

/// Divergence between the generated portion and `alpha` times the input
/// portion. The scaled target is clamped into the open unit interval.
pub fn size_loss(portion_gen: f64, portion_in: f64, alpha: f64) -> f64 {
    bernoulli_kl(portion_gen, alpha * portion_in)
}

pub fn size_loss_dp(portion_gen: f64, portion_in: f64, alpha: f64) -> f64 {
    bernoulli_kl_dp(portion_gen, alpha * portion_in)
}

/// Lag-1 circular autocorrelation penalty over each noise channel and its
/// 2x2-average pyramid down to 8x8.
pub fn noise_regularizer(noise: &NoiseStack) -> f64 {
    noise
        .channels()
        .iter()
        .flat_map(pyramid_levels)
        .map(|level| {
            let (ax, ay) = lag_correlations(&level);
            ax * ax + ay * ay
        })
        .sum()
}

pub fn noise_regularizer_grad(noise: &NoiseStack) -> (f64, NoiseStack) {
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(noise.len());
    for ch in noise.channels() {
        let levels = pyramid_levels(ch);
        let level_grads: Vec<Mask> = levels
            .iter()
            .map(|level| {
                let (ax, ay) = lag_correlations(level);
                value += ax * ax + ay * ay;
                let (h, w) = level.shape();
                let n = (h * w) as f64;
                Mask::from_fn(h, w, |y, x| {
                    let horiz = level.get(y, (x + w - 1) % w) + level.get(y, (x + 1) % w);
                    let vert = level.get((y + h - 1) % h, x) + level.get((y + 1) % h, x);
                    2.0 * ax * horiz / n + 2.0 * ay * vert / n
                })
            })
            .collect();
        // Fold coarse-level gradients back through the averaging.
        let mut acc = level_grads.last().cloned().expect("at least one level");
        for g in level_grads.iter().rev().skip(1) {
            let (h, w) = g.shape();
            acc = Mask::from_fn(h, w, |y, x| g.get(y, x) + 0.25 * acc.get(y / 2, x / 2));
        }
        grads.push(acc);
    }
    (value, NoiseStack::from_channels(grads))
}

fn lag_correlations(level: &Mask) -> (f64, f64) {
    let (h, w) = level.shape();
    let n = (h * w) as f64;
    let mut ax = 0.0;
    let mut ay = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = level.get(y, x);
            ax += v * level.get(y, (x + w - 1) % w);
            ay += v * level.get((y + h - 1) % h, x);
        }
    }
    (ax / n, ay / n)
}

/// Layer-masked squared feature distance, `sum_l ||S^l * (f_gen^l - f_in^l)||^2`,
/// given precomputed features.
pub fn masked_feature_loss_grad(
    features_gen: &[Tensor3],
    features_in: &[Tensor3],
    masks: &[Mask],
) -> Result<(f64, Vec<Tensor3>)> {
    if features_gen.len() != features_in.len() || features_gen.len() != masks.len() {
        return Err(Error::shape(
            "global appearance layers",
            features_gen.len(),
            format!("{} inputs / {} masks", features_in.len(), masks.len()),
        ));
    }
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(features_gen.len());
    for (l, ((fg, fi), m)) in features_gen.iter().zip(features_in).zip(masks).enumerate() {
        fg.ensure_shape(fi, &format!("features at layer {l}"))?;
        fg.ensure_plane(m, &format!("union mask at layer {l}"))?;
        let (v, g) = appearance_loss_grad(fg, fi, m)?;
        value += v;
        grads.push(g);
    }
    Ok((value, grads))
}

/// Global-editing replacement for the appearance loss: a perceptual
/// distance over the face union with per-layer downscaled masks.
pub fn global_appearance_loss(
    image_gen: &Image,
    image_in: &Image,
    union_per_layer: &[Mask],
    fx: &dyn crate::adapters::FeatureExtractor,
) -> Result<f64> {
    let fg = fx.extract(image_gen)?;
    let fi = fx.extract(image_in)?;
    Ok(masked_feature_loss_grad(&fg, &fi, union_per_layer)?.0)
}

pub fn global_appearance_loss_grad(
    image_gen: &Image,
    features_in: &[Tensor3],
    union_per_layer: &[Mask],
    fx: &dyn crate::adapters::FeatureExtractor,
) -> Result<(f64, Image)> {
    let fg = fx.extract(image_gen)?;
    let (v, g) = masked_feature_loss_grad(&fg, features_in, union_per_layer)?;
    Ok((v, fx.extract_vjp(image_gen, &g)?))
}

// ---------------------------------------------------------------------------
// Composite objectives

/// Everything fixed for the duration of one edit: the input image, the
/// masks parsed from it, and the resolved attribute bookkeeping.
#[derive(Debug, Clone)]
pub struct EditContext {
    pub image_in: Image,
    pub parsed_in: Tensor3,
    /// Classifier output index per edited attribute.
    pub attribute_indices: Vec<usize>,
    pub labels: Vec<f64>,
    /// Parser channels forming the target region.
    pub target_channels: Vec<usize>,
    pub skin_in: Mask,
    pub target_in: Mask,
    pub portion_in: f64,
    pub alpha: f64,
    pub mode: EditMode,
    /// Face union and its features; present in global mode.
    pub global: Option<GlobalContext>,
}

#[derive(Debug, Clone)]
pub struct GlobalContext {
    pub union: UnionMasks,
    pub features_in: Vec<Tensor3>,
}

impl EditContext {
    /// Parses the input once and resolves attribute and region indices.
    pub fn new(models: &ModelSet, image_in: &Image, spec: &EditSpec) -> Result<Self> {
        spec.validate()?;
        let classifier = models.classifier.as_ref();
        let parser = models.parser.as_ref();
        let attribute_indices = spec
            .attributes
            .iter()
            .map(|a| {
                classifier
                    .attribute_index(&a.name)
                    .ok_or_else(|| Error::UnknownAttribute(a.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let names = spec.attribute_names();
        let target_channels = models.regions.channels_for(&names, parser.region_names())?;
        let skin_channel = crate::masks::region_channel(parser.region_names(), &models.skin_region)?;

        let parsed_in = parser.parse(image_in)?;
        let skin_in = channel_union(&parsed_in, &[skin_channel])?;
        let target_in = channel_union(&parsed_in, &target_channels)?;
        let portion_in = portion(&target_in);

        let global = match spec.mode {
            EditMode::Local => None,
            EditMode::Global => {
                let fx = models.extractor.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("global mode requires a feature extractor".into())
                })?;
                let union_channels = models
                    .union_regions
                    .iter()
                    .map(|r| crate::masks::region_channel(parser.region_names(), r))
                    .collect::<Result<Vec<_>>>()?;
                let union = crate::masks::union_face_mask(&parsed_in, &union_channels, fx.scales())?;
                let features_in = fx.extract(image_in)?;
                Some(GlobalContext { union, features_in })
            }
        };

        Ok(Self {
            image_in: image_in.clone(),
            parsed_in,
            attribute_indices,
            labels: spec.smoothed_labels(),
            target_channels,
            skin_in,
            target_in,
            portion_in,
            alpha: spec.alpha.unwrap_or(1.0),
            mode: spec.mode,
            global,
        })
    }
}

/// Masks that change during optimization; treated as constants within one
/// objective evaluation.
#[derive(Debug, Clone)]
pub struct DynamicMasks {
    pub preserve: Mask,
    pub shape_reference: Mask,
}

/// Weighted latent-stage objective evaluated at `image_gen`. Returns the
/// report and the gradient of the weighted total with respect to the image.
///
/// `parsed_gen` must be supplied when the shape or size weight is positive.
pub fn latent_objective(
    models: &ModelSet,
    ctx: &EditContext,
    image_gen: &Image,
    parsed_gen: Option<&Tensor3>,
    masks: &DynamicMasks,
    weights: &LossWeights,
) -> Result<(LossReport, Image)> {
    let mut report = LossReport::default();
    let mut grad = Tensor3::zeros(image_gen.channels(), image_gen.height(), image_gen.width());

    if weights.lambda_m > 0.0 {
        let (v, g) = appearance_term(models, ctx, image_gen, &masks.preserve)?;
        report.push(Term::Appearance, v, weights.lambda_m);
        axpy(&mut grad, weights.lambda_m, &g);
    }

    if weights.lambda_c > 0.0 {
        let all = models.classifier.classify(image_gen)?;
        let probs: Vec<f64> = ctx.attribute_indices.iter().map(|&i| all[i]).collect();
        let sem = semantic_loss_grad(&probs, &ctx.labels)?;
        let mut grad_all = vec![0.0; all.len()];
        for (&i, g) in ctx.attribute_indices.iter().zip(&sem.grad) {
            grad_all[i] += weights.lambda_c * g;
        }
        let g = models.classifier.classify_vjp(image_gen, &grad_all)?;
        grad.add_assign(&g);
        report.push(Term::Semantic, sem.value, weights.lambda_c);
        report.probabilities = probs;
        report.attribute_kl = sem.per_attribute;
    }

    if weights.lambda_s > 0.0 || weights.lambda_p > 0.0 {
        let parsed = parsed_gen.ok_or_else(|| {
            Error::InvalidConfig("shape/size terms need the parsed generated image".into())
        })?;
        let target_gen = channel_union(parsed, &ctx.target_channels)?;
        let mut grad_target = Mask::zeros(target_gen.height(), target_gen.width());
        if weights.lambda_s > 0.0 {
            let (v, g) = shape_loss_grad(&masks.shape_reference, &target_gen)?;
            report.push(Term::Shape, v, weights.lambda_s);
            for (o, gi) in grad_target.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *o += weights.lambda_s * gi;
            }
        }
        if weights.lambda_p > 0.0 {
            let p = portion(&target_gen);
            let v = size_loss(p, ctx.portion_in, ctx.alpha);
            let dp = size_loss_dp(p, ctx.portion_in, ctx.alpha) / target_gen.len() as f64;
            report.push(Term::Size, v, weights.lambda_p);
            for o in grad_target.as_mut_slice() {
                *o += weights.lambda_p * dp;
            }
        }
        let grad_map = channel_union_vjp(parsed, &ctx.target_channels, &grad_target)?;
        let g = models.parser.parse_vjp(image_gen, &grad_map)?;
        grad.add_assign(&g);
    }

    Ok((report, grad))
}

/// Noise-stage objective: appearance plus the noise regularizer. Semantic
/// and shape terms are never evaluated here.
pub fn noise_objective(
    models: &ModelSet,
    ctx: &EditContext,
    image_gen: &Image,
    noise: &NoiseStack,
    preserve: &Mask,
    weights: &LossWeights,
) -> Result<(LossReport, Image, NoiseStack)> {
    let mut report = LossReport::default();
    let mut grad = Tensor3::zeros(image_gen.channels(), image_gen.height(), image_gen.width());
    let mut grad_noise = NoiseStack::zeros(&noise.resolutions());

    if weights.lambda_m > 0.0 {
        let (v, g) = appearance_term(models, ctx, image_gen, preserve)?;
        report.push(Term::Appearance, v, weights.lambda_m);
        axpy(&mut grad, weights.lambda_m, &g);
    }
    if weights.lambda_r > 0.0 {
        let (v, g) = noise_regularizer_grad(noise);
        report.push(Term::NoiseRegularizer, v, weights.lambda_r);
        for (o, gi) in grad_noise.channels_mut().iter_mut().zip(g.channels()) {
            for (a, b) in o.as_mut_slice().iter_mut().zip(gi.as_slice()) {
                *a += weights.lambda_r * b;
            }
        }
    }
    Ok((report, grad, grad_noise))
}

fn appearance_term(
    models: &ModelSet,
    ctx: &EditContext,
    image_gen: &Image,
    preserve: &Mask,
) -> Result<(f64, Image)> {
    match (&ctx.mode, &ctx.global) {
        (EditMode::Global, Some(global)) => {
            let fx = models
                .extractor
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("global mode requires a feature extractor".into()))?;
            global_appearance_loss_grad(image_gen, &global.features_in, &global.union.per_layer, fx)
        }
        _ => appearance_loss_grad(image_gen, &ctx.image_in, preserve),
    }
}

fn axpy(acc: &mut Tensor3, k: f64, x: &Tensor3) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *a += k * b;
    }
}

/// Level shapes used by [`noise_regularizer`] for one channel; exposed for
/// inspection.
pub fn regularizer_levels(plane: &Mask) -> Vec<(usize, usize)> {
    pyramid_levels(plane).iter().map(Mask::shape).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appearance_examples() {
        let a = Tensor3::filled(3, 2, 2, 0.4);
        let b = Tensor3::filled(3, 2, 2, 0.3);
        let ones = Mask::filled(2, 2, 1.0);
        assert_eq!(appearance_loss(&a, &a, &ones).unwrap(), 0.0);
        assert_eq!(appearance_loss(&a, &b, &Mask::zeros(2, 2)).unwrap(), 0.0);
        // 12 entries of 0.1^2.
        assert!((appearance_loss(&a, &b, &ones).unwrap() - 0.12).abs() < 1e-12);
    }

    #[test]
    fn appearance_shape_errors() {
        let a = Tensor3::zeros(3, 2, 2);
        assert!(appearance_loss(&a, &a, &Mask::zeros(3, 2)).is_err());
        assert!(appearance_loss(&a, &Tensor3::zeros(3, 2, 3), &Mask::zeros(2, 2)).is_err());
    }

    #[test]
    fn semantic_zero_at_target_and_averages() {
        assert_eq!(semantic_loss(&[0.95, 0.05], &[0.95, 0.05]).unwrap(), 0.0);
        let kl = bernoulli_kl(0.7, 0.4);
        let v = semantic_loss(&[0.7, 0.4], &[0.4, 0.4]).unwrap();
        assert!((v - kl / 2.0).abs() < 1e-15);
    }

    #[test]
    fn semantic_clamps_degenerate_labels() {
        let v = semantic_loss(&[0.5], &[1.0]).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(semantic_loss(&[], &[]).is_err());
    }

    #[test]
    fn semantic_decreases_toward_label() {
        let y = 0.95;
        let mut prev = f64::INFINITY;
        for i in 0..=18 {
            let p = 0.05 + 0.05 * i as f64;
            let v = semantic_loss(&[p], &[y]).unwrap();
            assert!(v < prev, "p={p}");
            prev = v;
        }
    }

    #[test]
    fn shape_examples() {
        let m = Mask::from_fn(4, 4, |y, x| ((y + x) % 2) as f64);
        assert_eq!(shape_loss(&m, &m).unwrap(), 0.0);
        let mut other = m.clone();
        let mut flipped = 0;
        for i in 0..5 {
            let v = other.as_slice()[i];
            other.as_mut_slice()[i] = 1.0 - v;
            flipped += 1;
        }
        assert_eq!(shape_loss(&m, &other).unwrap(), flipped as f64);
    }

    #[test]
    fn portion_examples() {
        assert_eq!(portion(&Mask::filled(4, 4, 1.0)), 1.0);
        assert_eq!(portion(&Mask::from_fn(4, 4, |y, _| (y < 2) as u8 as f64)), 0.5);
        let mut m = Mask::zeros(8, 8);
        for i in 0..13 {
            m.as_mut_slice()[i * 3] = 1.0;
        }
        assert_eq!(portion(&m), 13.0 / 64.0);
    }

    #[test]
    fn size_zero_at_scaled_target() {
        assert!(size_loss(0.3, 0.2, 1.5).abs() < 1e-15);
        assert_eq!(size_loss(0.2, 0.2, 1.0), 0.0);
        // alpha * portion beyond 1 still finite.
        assert!(size_loss(0.9, 0.8, 2.0).is_finite());
    }

    #[test]
    fn noise_constant_channel() {
        let c = 0.7;
        let n = NoiseStack::from_channels(vec![Mask::filled(8, 8, c)]);
        assert!((noise_regularizer(&n) - 2.0 * c.powi(4)).abs() < 1e-12);
        assert_eq!(noise_regularizer(&NoiseStack::zeros(&[(8, 8), (32, 32)])), 0.0);
    }

    #[test]
    fn regularizer_level_shapes() {
        assert_eq!(regularizer_levels(&Mask::zeros(16, 16)), vec![(16, 16), (8, 8)]);
        assert_eq!(regularizer_levels(&Mask::zeros(4, 4)), vec![(4, 4)]);
    }

    #[test]
    fn report_total_matches_weighted_sum() {
        let mut r = LossReport::default();
        r.push(Term::Appearance, 1.25, 2.0);
        r.push(Term::Semantic, 3.5, 0.005);
        assert_eq!(r.total, r.weighted_sum());
        assert_eq!(r.get(Term::Semantic), Some(3.5));
        assert!(!r.has(Term::Shape));
    }

    #[test]
    fn edit_spec_validation() {
        let spec = EditSpec::new(vec![AttributeTarget::present("a")]);
        assert!(spec.validate().is_ok());
        assert!(spec.clone().with_epsilon(0.5).validate().is_err());
        assert!(spec.clone().with_alpha(0.0).validate().is_err());
        assert!(EditSpec::new(vec![]).validate().is_err());
        assert_eq!(spec.with_epsilon(0.1).smoothed_labels(), vec![0.9]);
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::PAPER.validate().is_ok());
        let mut w = LossWeights::PAPER;
        w.lambda_c = -1.0;
        assert!(w.validate().is_err());
        w.lambda_c = f64::NAN;
        assert!(w.validate().is_err());
    }
}
