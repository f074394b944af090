//! The staged editing schedule.
//!
//! 1. Parse the input once, start from the mean latent with zero noise.
//! 2. Warm-up: appearance loss only.
//! 3. Latent stage: the full weighted objective, with the flexible masks
//!    recomputed from the current render.
//! 4. Noise stage: `w` frozen, noise drawn from a standard normal and
//!    optimized against appearance plus the noise regularizer.
//! 5. Blend the final render into the input.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapters::{toy::IdentityExtractor, FeatureExtractor, ModelSet};
use crate::compositor::blend;
use crate::error::{Error, Result};
use crate::latent::{LatentCode, NoiseStack};
use crate::masks::{
    blend_mask, channel_union, region_channel, relaxed_preserve_mask, relaxed_shape_target,
    BlendMode, MaskSource, RegionMaskSet,
};
use crate::metrics::MetricReport;
use crate::objectives::{
    latent_objective, noise_objective, portion, DynamicMasks, EditContext, EditSpec, LossReport,
    LossWeights,
};
use crate::tensor::{Image, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64, params: AdamParams) -> Self {
        Self {
            lr,
            params,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, x: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(x.len(), grad.len());
        let AdamParams { beta1, beta2, eps } = self.params;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        for i in 0..x.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            x[i] -= self.lr * mhat / (vhat.sqrt() + eps);
        }
    }
}

/// Stop a stage once the best loss improved by less than `rel_tol`
/// (relative) over the last `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub rel_tol: f64,
    pub window: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            rel_tol: 1e-5,
            window: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub weights: LossWeights,
    pub lr_latent: f64,
    pub lr_noise: f64,
    pub warmup_iters: usize,
    pub latent_iters: usize,
    pub noise_iters: usize,
    pub mean_latent_samples: usize,
    pub seed: u64,
    pub frame_dump_every: Option<usize>,
    /// Recompute the flexible masks every k latent-stage iterations.
    pub mask_refresh_every: usize,
    /// Use the relaxed preserve mask and shape reference.
    pub flexible_masks: bool,
    pub early_stop: Option<EarlyStop>,
    pub adam: AdamParams,
}

impl OptimConfig {
    /// Published learning rates with budgets sized for a full-scale generator.
    pub fn paper() -> Self {
        Self {
            weights: LossWeights::PAPER,
            lr_latent: 0.001,
            lr_noise: 0.1,
            warmup_iters: 200,
            latent_iters: 800,
            noise_iters: 400,
            mean_latent_samples: 50_000,
            seed: 0,
            frame_dump_every: None,
            mask_refresh_every: 1,
            flexible_masks: true,
            early_stop: None,
            adam: AdamParams::default(),
        }
    }

    /// Budgets, latent learning rate and semantic weight for the toy models.
    pub fn toy() -> Self {
        Self {
            weights: LossWeights {
                lambda_c: 0.05,
                ..LossWeights::PAPER
            },
            lr_latent: 0.1,
            warmup_iters: 200,
            latent_iters: 200,
            noise_iters: 100,
            mean_latent_samples: 1000,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        for (name, v) in [("lr_latent", self.lr_latent), ("lr_noise", self.lr_noise)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name}: {v} must be > 0")));
            }
        }
        if self.mean_latent_samples == 0 {
            return Err(Error::InvalidConfig("mean_latent_samples: must be >= 1".into()));
        }
        if self.mask_refresh_every == 0 {
            return Err(Error::InvalidConfig("mask_refresh_every: must be >= 1".into()));
        }
        if self.frame_dump_every == Some(0) {
            return Err(Error::InvalidConfig("frame_dump_every: must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Warmup,
    Latent,
    Noise,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Warmup => "warmup",
            Stage::Latent => "latent",
            Stage::Noise => "noise",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    pub iteration: usize,
    pub report: LossReport,
}

/// Renders the loss trace as `stage iteration term value` lines.
pub fn format_trace(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    for e in trace {
        for t in &e.report.terms {
            out.push_str(&format!("{}\t{}\t{}\t{:.12e}\n", e.stage, e.iteration, t.term, t.value));
        }
        out.push_str(&format!("{}\t{}\ttotal\t{:.12e}\n", e.stage, e.iteration, e.report.total));
    }
    out
}

/// Hooks into a running edit. All methods default to no-ops.
pub trait EditObserver {
    fn on_iteration(&mut self, _stage: Stage, _iteration: usize, _report: &LossReport) {}
    fn on_frame(&mut self, _stage: Stage, _iteration: usize, _image: &Image) {}
    fn on_stage_end(&mut self, _stage: Stage, _w: &LatentCode, _n: &NoiseStack) {}
}

#[derive(Debug, Default)]
pub struct NoopObserver;

impl EditObserver for NoopObserver {}

#[derive(Debug, Clone)]
pub struct EditResult {
    pub w_final: LatentCode,
    pub n_final: NoiseStack,
    /// Final render `G(w, n)`.
    pub image_gen: Image,
    /// The render blended into the input.
    pub image_out: Image,
    pub trace: Vec<TraceEntry>,
    /// Masks parsed from the input.
    pub masks: RegionMaskSet,
    /// Target region parsed from the final render.
    pub target_gen: Mask,
    pub blend_mask: Mask,
    pub blend_mode: BlendMode,
}

impl EditResult {
    pub fn stage_trace(&self, stage: Stage) -> impl Iterator<Item = &TraceEntry> {
        self.trace.iter().filter(move |e| e.stage == stage)
    }

    /// Last report of a stage, if the stage ran.
    pub fn stage_final(&self, stage: Stage) -> Option<&LossReport> {
        self.stage_trace(stage).last().map(|e| &e.report)
    }
}

/// Mean of `samples` latent codes drawn from the generator's sampler.
pub fn mean_latent(generator: &dyn crate::adapters::Generator, samples: usize, seed: u64) -> Result<LatentCode> {
    if samples == 0 {
        return Err(Error::InvalidConfig("mean_latent: samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let info = generator.info();
    let mut acc = LatentCode::zeros(info.latent_layer_count, info.style_dim);
    for _ in 0..samples {
        let w = generator.sample_latent(&mut rng);
        for (a, v) in acc.as_mut_slice().iter_mut().zip(w.as_slice()) {
            *a += v;
        }
    }
    let inv = 1.0 / samples as f64;
    acc.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
    Ok(acc)
}

struct StageRunner<'a> {
    stage: Stage,
    iters: usize,
    early_stop: Option<EarlyStop>,
    frame_every: Option<usize>,
    trace: &'a mut Vec<TraceEntry>,
    observer: &'a mut dyn EditObserver,
}

impl StageRunner<'_> {
    /// Runs `iters` descent steps. `eval(i)` evaluates the objective at the
    /// current parameters and returns the report, the flat gradient and the
    /// render (for frames); `apply` takes the gradient step.
    fn run(
        &mut self,
        mut eval: impl FnMut(usize) -> Result<(LossReport, Vec<f64>, Image)>,
        mut apply: impl FnMut(&[f64]),
    ) -> Result<()> {
        let mut best = f64::INFINITY;
        let mut best_history: Vec<f64> = Vec::new();
        for i in 0..self.iters {
            let (report, grad, image) = eval(i)?;
            if let Some(term) = report.first_non_finite() {
                return Err(self.non_finite(i, term.label()));
            }
            if !report.total.is_finite() {
                return Err(self.non_finite(i, "total"));
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(self.non_finite(i, "gradient"));
            }
            self.observer.on_iteration(self.stage, i, &report);
            if let Some(k) = self.frame_every {
                if i % k == 0 {
                    self.observer.on_frame(self.stage, i, &image);
                }
            }
            best = best.min(report.total);
            self.trace.push(TraceEntry {
                stage: self.stage,
                iteration: i,
                report,
            });
            apply(&grad);

            if let Some(es) = self.early_stop {
                best_history.push(best);
                if best_history.len() > es.window {
                    let old = best_history[best_history.len() - 1 - es.window];
                    let improvement = (old - best) / old.abs().max(f64::MIN_POSITIVE);
                    if improvement < es.rel_tol {
                        log::debug!("{} stage converged at iteration {i}", self.stage);
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    fn non_finite(&self, iteration: usize, term: &str) -> Error {
        Error::NonFinite {
            stage: self.stage.to_string(),
            iteration,
            term: term.into(),
        }
    }
}

/// Runs the full edit. Deterministic for a given `cfg.seed`.
pub fn run_edit(models: &ModelSet, input: &Image, spec: &EditSpec, cfg: &OptimConfig) -> Result<EditResult> {
    run_edit_observed(models, input, spec, cfg, &mut NoopObserver)
}

pub fn run_edit_observed(
    models: &ModelSet,
    input: &Image,
    spec: &EditSpec,
    cfg: &OptimConfig,
    observer: &mut dyn EditObserver,
) -> Result<EditResult> {
    cfg.validate()?;
    let generator = models.generator.as_ref();
    let parser = models.parser.as_ref();
    let info = generator.info().clone();
    let (oh, ow) = info.output_size;
    if input.shape() != (3, oh, ow) {
        return Err(Error::shape(
            "input image",
            format!("3x{oh}x{ow}"),
            format!("{}x{}x{}", input.channels(), input.height(), input.width()),
        ));
    }

    // Stage 0: input masks and initialization.
    let ctx = EditContext::new(models, input, spec)?;
    let weights = cfg.weights;
    let mut w = mean_latent(generator, cfg.mean_latent_samples, cfg.seed)?;
    let zero_noise = NoiseStack::zeros(&info.noise_resolutions);
    let mut trace = Vec::new();
    let mut adam_w = Adam::new(w.as_slice().len(), cfg.lr_latent, cfg.adam);

    let warmup_masks = DynamicMasks {
        preserve: ctx.skin_in.clone(),
        shape_reference: ctx.target_in.clone(),
    };
    let warmup_weights = LossWeights::appearance_only(weights.lambda_m);

    {
        let w_cell = std::cell::RefCell::new(&mut w);
        StageRunner {
            stage: Stage::Warmup,
            iters: cfg.warmup_iters,
            early_stop: cfg.early_stop,
            frame_every: cfg.frame_dump_every,
            trace: &mut trace,
            observer,
        }
        .run(
            |_| {
                let w = w_cell.borrow();
                let image = generator.generate(&w, &zero_noise)?;
                let (report, grad_img) =
                    latent_objective(models, &ctx, &image, None, &warmup_masks, &warmup_weights)?;
                let g = generator.generate_vjp(&w, &zero_noise, &grad_img)?;
                Ok((report, g.latent.as_slice().to_vec(), image))
            },
            |grad| adam_w.step(w_cell.borrow_mut().as_mut_slice(), grad),
        )?;
    }
    observer.on_stage_end(Stage::Warmup, &w, &zero_noise);

    // Latent stage with flexible masks.
    let needs_parse = weights.lambda_s > 0.0 || weights.lambda_p > 0.0;
    let mut masks = warmup_masks.clone();
    {
        let w_cell = std::cell::RefCell::new(&mut w);
        let masks_cell = std::cell::RefCell::new(&mut masks);
        StageRunner {
            stage: Stage::Latent,
            iters: cfg.latent_iters,
            early_stop: cfg.early_stop,
            frame_every: cfg.frame_dump_every,
            trace: &mut trace,
            observer,
        }
        .run(
            |i| {
                let w = w_cell.borrow();
                let image = generator.generate(&w, &zero_noise)?;
                let refresh = cfg.flexible_masks && i % cfg.mask_refresh_every == 0;
                let parsed = if needs_parse || refresh {
                    Some(parser.parse(&image)?)
                } else {
                    None
                };
                if refresh {
                    let target_gen = channel_union(parsed.as_ref().expect("parsed"), &ctx.target_channels)?;
                    let mut m = masks_cell.borrow_mut();
                    m.preserve = relaxed_preserve_mask(&ctx.skin_in, &target_gen)?;
                    m.shape_reference = relaxed_shape_target(&ctx.target_in, &target_gen)?;
                }
                let m = masks_cell.borrow();
                let (report, grad_img) =
                    latent_objective(models, &ctx, &image, parsed.as_ref(), &m, &weights)?;
                let g = generator.generate_vjp(&w, &zero_noise, &grad_img)?;
                Ok((report, g.latent.as_slice().to_vec(), image))
            },
            |grad| adam_w.step(w_cell.borrow_mut().as_mut_slice(), grad),
        )?;
    }
    observer.on_stage_end(Stage::Latent, &w, &zero_noise);

    // Noise stage: w frozen.
    let image_latent = generator.generate(&w, &zero_noise)?;
    let target_latent = channel_union(&parser.parse(&image_latent)?, &ctx.target_channels)?;
    let preserve_noise = if cfg.flexible_masks {
        relaxed_preserve_mask(&ctx.skin_in, &target_latent)?
    } else {
        ctx.skin_in.clone()
    };
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);
    let mut noise = if cfg.noise_iters > 0 {
        NoiseStack::standard_normal(&info.noise_resolutions, &mut noise_rng)
    } else {
        zero_noise.clone()
    };
    {
        let noise_cell = std::cell::RefCell::new(&mut noise);
        let mut adam_n = Adam::new(noise_cell.borrow().to_flat().len(), cfg.lr_noise, cfg.adam);
        StageRunner {
            stage: Stage::Noise,
            iters: cfg.noise_iters,
            early_stop: cfg.early_stop,
            frame_every: cfg.frame_dump_every,
            trace: &mut trace,
            observer,
        }
        .run(
            |_| {
                let n = noise_cell.borrow();
                let image = generator.generate(&w, &n)?;
                let (report, grad_img, grad_reg) =
                    noise_objective(models, &ctx, &image, &n, &preserve_noise, &weights)?;
                let g = generator.generate_vjp(&w, &n, &grad_img)?;
                let mut flat = g.noise.to_flat();
                for (a, b) in flat.iter_mut().zip(grad_reg.to_flat()) {
                    *a += b;
                }
                Ok((report, flat, image))
            },
            |grad| {
                let mut n = noise_cell.borrow_mut();
                let mut flat = n.to_flat();
                adam_n.step(&mut flat, grad);
                n.copy_from_flat(&flat);
            },
        )?;
    }
    observer.on_stage_end(Stage::Noise, &w, &noise);

    // Blending.
    let image_gen = generator.generate(&w, &noise)?;
    let target_gen = channel_union(&parser.parse(&image_gen)?, &ctx.target_channels)?;
    let mode = spec.blend_mode(&models.regions);
    let union = ctx.global.as_ref().map(|g| g.union.full.clone());
    let b = blend_mask(&ctx.skin_in, &ctx.target_in, &target_gen, union.as_ref(), mode)?;
    let image_out = blend(&image_gen, input, &b)?;

    Ok(EditResult {
        w_final: w,
        n_final: noise,
        image_gen,
        image_out,
        trace,
        masks: RegionMaskSet {
            skin: ctx.skin_in.clone(),
            target: ctx.target_in.clone(),
            union,
            source: MaskSource::FromInput,
        },
        target_gen,
        blend_mask: b,
        blend_mode: mode,
    })
}

/// One independent edit per `epsilon`, all sharing `cfg.seed`.
pub fn intensity_sweep(
    models: &ModelSet,
    input: &Image,
    spec: &EditSpec,
    cfg: &OptimConfig,
    epsilons: &[f64],
) -> Result<Vec<EditResult>> {
    epsilons
        .iter()
        .map(|&eps| run_edit(models, input, &spec.clone().with_epsilon(eps), cfg))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SizeSweepEntry {
    pub alpha: f64,
    pub initial_portion: f64,
    pub final_portion: f64,
    pub result: EditResult,
}

/// One independent edit per `alpha`; needs a positive size weight.
pub fn size_sweep(
    models: &ModelSet,
    input: &Image,
    spec: &EditSpec,
    cfg: &OptimConfig,
    alphas: &[f64],
) -> Result<Vec<SizeSweepEntry>> {
    if cfg.weights.lambda_p <= 0.0 {
        return Err(Error::InvalidConfig("lambda_p: size sweeps need a positive size weight".into()));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let result = run_edit(models, input, &spec.clone().with_alpha(alpha), cfg)?;
            Ok(SizeSweepEntry {
                alpha,
                initial_portion: portion(&result.masks.target),
                final_portion: portion(&result.target_gen),
                result,
            })
        })
        .collect()
}

/// Region embedded by [`invert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMask {
    /// Union of all face regions.
    #[default]
    Face,
    /// Face union without the hair region.
    NoHair,
    SkinOnly,
}

#[derive(Debug, Clone)]
pub struct InversionResult {
    pub w: LatentCode,
    pub image_gen: Image,
    pub image_out: Image,
    pub mask: Mask,
    pub metrics: MetricReport,
    pub trace: Vec<TraceEntry>,
}

/// Default iteration budget of [`invert`].
pub const INVERT_ITERS: usize = 2000;

/// Masked-MSE-only embedding of a face region, blended back with the same
/// mask and scored against the input.
pub fn invert(
    models: &ModelSet,
    input: &Image,
    region: InversionMask,
    iterations: usize,
    cfg: &OptimConfig,
) -> Result<InversionResult> {
    cfg.validate()?;
    let generator = models.generator.as_ref();
    let parser = models.parser.as_ref();
    let info = generator.info().clone();
    let (oh, ow) = info.output_size;
    if input.shape() != (3, oh, ow) {
        return Err(Error::shape(
            "input image",
            format!("3x{oh}x{ow}"),
            format!("{}x{}x{}", input.channels(), input.height(), input.width()),
        ));
    }
    let parsed = parser.parse(input)?;
    let names = parser.region_names();
    let channels: Vec<usize> = match region {
        InversionMask::SkinOnly => vec![region_channel(names, &models.skin_region)?],
        InversionMask::Face | InversionMask::NoHair => models
            .union_regions
            .iter()
            .filter(|r| region != InversionMask::NoHair || r.as_str() != "hair")
            .map(|r| region_channel(names, r))
            .collect::<Result<_>>()?,
    };
    let mask = channel_union(&parsed, &channels)?;

    let mut w = mean_latent(generator, cfg.mean_latent_samples, cfg.seed)?;
    let noise = NoiseStack::zeros(&info.noise_resolutions);
    let mut adam = Adam::new(w.as_slice().len(), cfg.lr_latent, cfg.adam);
    let mut trace = Vec::new();
    let lambda_m = cfg.weights.lambda_m.max(f64::MIN_POSITIVE);
    {
        let w_cell = std::cell::RefCell::new(&mut w);
        StageRunner {
            stage: Stage::Warmup,
            iters: iterations,
            early_stop: cfg.early_stop,
            frame_every: None,
            trace: &mut trace,
            observer: &mut NoopObserver,
        }
        .run(
            |_| {
                let w = w_cell.borrow();
                let image = generator.generate(&w, &noise)?;
                let (v, g) = crate::objectives::appearance_loss_grad(&image, input, &mask)?;
                let mut report = LossReport::default();
                report.terms.push(crate::objectives::TermValue {
                    term: crate::objectives::Term::Appearance,
                    value: v,
                    weight: lambda_m,
                });
                report.total = lambda_m * v;
                let mut g = g;
                g.scale(lambda_m);
                let gw = generator.generate_vjp(&w, &noise, &g)?;
                Ok((report, gw.latent.as_slice().to_vec(), image))
            },
            |grad| adam.step(w_cell.borrow_mut().as_mut_slice(), grad),
        )?;
    }

    let image_gen = generator.generate(&w, &noise)?;
    let image_out = blend(&image_gen, input, &mask)?;
    let fallback = IdentityExtractor;
    let fx: &dyn FeatureExtractor = match &models.extractor {
        Some(fx) => fx.as_ref(),
        None => &fallback,
    };
    let metrics = MetricReport::compute(&image_out, input, fx)?;
    Ok(InversionResult {
        w,
        image_gen,
        image_out,
        mask,
        metrics,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::toy::{toy_models, ToyGenerator, ToyGeneratorConfig};
    use crate::adapters::Generator;

    #[test]
    fn adam_minimizes_quadratic() {
        let mut x = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.1, AdamParams::default());
        for _ in 0..500 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            opt.step(&mut x, &g);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-2), "{x:?}");
    }

    #[test]
    fn mean_latent_single_sample_is_that_sample() {
        let g = ToyGenerator::new(ToyGeneratorConfig::default()).unwrap();
        let m = mean_latent(&g, 1, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(m, g.sample_latent(&mut rng));
        assert!(mean_latent(&g, 0, 9).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimConfig::paper().validate().is_ok());
        let mut c = OptimConfig::toy();
        c.lr_noise = 0.0;
        assert!(c.validate().is_err());
        let mut c = OptimConfig::toy();
        c.mask_refresh_every = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_attribute_fails_before_optimizing() {
        let models = toy_models();
        let input = Image::filled(3, 32, 32, 0.5);
        let spec = EditSpec::new(vec![crate::objectives::AttributeTarget::present("nope")]);
        let err = run_edit(&models, &input, &spec, &OptimConfig::toy()).unwrap_err();
        assert!(matches!(err, Error::UnknownAttribute(_)), "{err}");
    }

    #[test]
    fn wrong_input_size_is_rejected() {
        let models = toy_models();
        let spec = EditSpec::new(vec![crate::objectives::AttributeTarget::present("region_mean_up")]);
        let err = run_edit(&models, &Image::zeros(3, 16, 16), &spec, &OptimConfig::toy()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn trace_format_lines() {
        let mut r = LossReport::default();
        r.terms.push(crate::objectives::TermValue {
            term: crate::objectives::Term::Appearance,
            value: 0.5,
            weight: 2.0,
        });
        r.total = 1.0;
        let s = format_trace(&[TraceEntry {
            stage: Stage::Latent,
            iteration: 3,
            report: r,
        }]);
        assert_eq!(s.lines().count(), 2);
        assert!(s.starts_with("latent\t3\tL_M\t5.0"));
    }
}
