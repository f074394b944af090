#![allow(dead_code)]

use latentedit_core::adapters::toy::{
    face_image, face_latent, toy_models, ToyExtractor, ToyGeneratorConfig, REGION_GLOW, REGION_MEAN_UP,
};
use latentedit_core::latent::{LatentCode, NoiseStack};
use latentedit_core::masks::{channel_union, relaxed_preserve_mask, relaxed_shape_target};
use latentedit_core::objectives::{
    appearance_loss_grad, latent_objective, noise_objective, noise_regularizer, noise_regularizer_grad,
    DynamicMasks, EditContext,
};
use latentedit_core::{AttributeTarget, EditMode, EditSpec, FeatureExtractor, Image, LossWeights, ModelSet, Tensor3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, so coordinates whose true
/// gradient vanishes are judged by absolute error instead.
pub const REL_FLOOR: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-4;
pub const COORDS_PER_TERM: usize = 16;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Largest relative error between `analytic` and central differences of
/// `f` at `x`, over `COORDS_PER_TERM` random coordinates.
pub fn fd_max_rel_err(f: impl Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64], seed: u64) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = COORDS_PER_TERM.min(x.len());
    let mut worst: f64 = 0.0;
    for i in sample(&mut rng, x.len(), k) {
        let mut xp = x.to_vec();
        xp[i] += FD_STEP;
        let fp = f(&xp);
        xp[i] -= 2.0 * FD_STEP;
        let fm = f(&xp);
        let numeric = (fp - fm) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

pub fn cfg() -> ToyGeneratorConfig {
    ToyGeneratorConfig::default()
}

/// Toy face plus a checkerboard the zero-noise generator cannot reproduce.
pub fn textured_face(models: &ModelSet, amp: f64) -> Image {
    let face = face_image(models, &cfg()).unwrap();
    Tensor3::from_fn(3, face.height(), face.width(), |c, y, x| {
        let s = if (x + y + c) % 2 == 0 { 1.0 } else { -1.0 };
        (face.get(c, y, x) + amp * s).clamp(0.0, 1.0)
    })
}

/// A latent near the toy face, off the saturated regime.
pub fn probe_latent(seed: u64) -> LatentCode {
    let mut w = face_latent(&cfg());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in w.as_mut_slice() {
        *v = 0.6 * *v + rng.gen_range(-0.3..0.3);
    }
    w
}

pub fn probe_noise(models: &ModelSet, seed: u64) -> NoiseStack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NoiseStack::standard_normal(&models.generator.info().noise_resolutions, &mut rng)
}

pub fn random_image(rng: &mut impl Rng, h: usize, w: usize) -> Image {
    Tensor3::from_fn(3, h, w, |_, _, _| rng.gen_range(0.05..0.95))
}

fn zero_noise(models: &ModelSet) -> NoiseStack {
    NoiseStack::zeros(&models.generator.info().noise_resolutions)
}

/// Max relative error of the latent-stage objective's `w` gradient with only
/// the given weights active.
pub fn latent_term_error(models: &ModelSet, spec: &EditSpec, weights: LossWeights, seed: u64) -> f64 {
    let input = textured_face(models, 0.01);
    let ctx = EditContext::new(models, &input, spec).unwrap();
    let w0 = probe_latent(seed);
    let n = zero_noise(models);
    let g = &models.generator;
    let parsed0 = models.parser.parse(&g.generate(&w0, &n).unwrap()).unwrap();
    let t_gen = channel_union(&parsed0, &ctx.target_channels).unwrap();
    let masks = DynamicMasks {
        preserve: relaxed_preserve_mask(&ctx.skin_in, &t_gen).unwrap(),
        shape_reference: relaxed_shape_target(&ctx.target_in, &t_gen).unwrap(),
    };
    let eval = |w: &LatentCode| {
        let img = g.generate(w, &n).unwrap();
        let parsed = models.parser.parse(&img).unwrap();
        let (r, gi) = latent_objective(models, &ctx, &img, Some(&parsed), &masks, &weights).unwrap();
        (r.total, img, gi)
    };
    let (_, img, gi) = eval(&w0);
    let grad = g.generate_vjp(&w0, &n, &gi).unwrap().latent;
    let _ = img;
    let f = |x: &[f64]| eval(&LatentCode::from_vec(w0.layers(), w0.style_dim(), x.to_vec()).unwrap()).0;
    fd_max_rel_err(f, w0.as_slice(), grad.as_slice(), seed + 1)
}

fn only(f: impl FnOnce(&mut LossWeights)) -> LossWeights {
    let mut w = LossWeights {
        lambda_m: 0.0,
        lambda_c: 0.0,
        lambda_s: 0.0,
        lambda_p: 0.0,
        lambda_r: 0.0,
    };
    f(&mut w);
    w
}

fn mean_up() -> EditSpec {
    EditSpec::new(vec![AttributeTarget::present(REGION_MEAN_UP)])
}

pub fn appearance_image_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_image(&mut rng, 8, 8);
    let b = random_image(&mut rng, 8, 8);
    let m = latentedit_core::Mask::from_fn(8, 8, |_, _| rng.gen_range(0.0..1.0));
    let (_, g) = appearance_loss_grad(&a, &b, &m).unwrap();
    let f = |x: &[f64]| {
        let img = Tensor3::from_vec(3, 8, 8, x.to_vec()).unwrap();
        appearance_loss_grad(&img, &b, &m).unwrap().0
    };
    fd_max_rel_err(f, a.as_slice(), g.as_slice(), seed)
}

pub fn appearance_error(seed: u64) -> f64 {
    latent_term_error(&toy_models(), &mean_up(), only(|w| w.lambda_m = 2.0), seed)
}

pub fn semantic_error(seed: u64) -> f64 {
    let spec = EditSpec::new(vec![
        AttributeTarget::present(REGION_MEAN_UP),
        AttributeTarget::absent(REGION_GLOW),
    ]);
    latent_term_error(&toy_models(), &spec, only(|w| w.lambda_c = 1.0), seed)
}

pub fn shape_error(seed: u64) -> f64 {
    latent_term_error(&toy_models(), &mean_up(), only(|w| w.lambda_s = 1.0), seed)
}

pub fn size_error(seed: u64) -> f64 {
    let spec = mean_up().with_alpha(1.5);
    latent_term_error(&toy_models(), &spec, only(|w| w.lambda_p = 1.0), seed)
}

pub fn full_latent_error(seed: u64) -> f64 {
    let w = LossWeights {
        lambda_p: 10.0,
        ..LossWeights::PAPER
    };
    latent_term_error(&toy_models(), &mean_up().with_alpha(1.2), w, seed)
}

pub fn global_appearance_error(seed: u64) -> f64 {
    let mut models = toy_models();
    models.extractor = Some(Arc::new(ToyExtractor::five_layer()) as Arc<dyn FeatureExtractor>);
    let spec = mean_up().with_mode(EditMode::Global);
    latent_term_error(&models, &spec, only(|w| w.lambda_m = 1.0), seed)
}

pub fn regularizer_error(seed: u64) -> f64 {
    let models = toy_models();
    let n0 = probe_noise(&models, seed);
    let (_, g) = noise_regularizer_grad(&n0);
    let f = |x: &[f64]| {
        let mut n = n0.clone();
        n.copy_from_flat(x);
        noise_regularizer(&n)
    };
    fd_max_rel_err(f, &n0.to_flat(), &g.to_flat(), seed)
}

/// The full noise-stage objective, through the generator, in `n`.
pub fn noise_objective_error(seed: u64) -> f64 {
    let models = toy_models();
    let input = textured_face(&models, 0.01);
    let ctx = EditContext::new(&models, &input, &mean_up()).unwrap();
    let w = probe_latent(seed);
    let n0 = probe_noise(&models, seed);
    let g = &models.generator;
    let weights = LossWeights::PAPER;
    let preserve = ctx.skin_in.clone();
    let eval = |n: &NoiseStack| {
        let img = g.generate(&w, n).unwrap();
        noise_objective(&models, &ctx, &img, n, &preserve, &weights).unwrap()
    };
    let (_, gi, gn) = eval(&n0);
    let mut grad = g.generate_vjp(&w, &n0, &gi).unwrap().noise.to_flat();
    for (a, b) in grad.iter_mut().zip(gn.to_flat()) {
        *a += b;
    }
    let f = |x: &[f64]| {
        let mut n = n0.clone();
        n.copy_from_flat(x);
        eval(&n).0.total
    };
    fd_max_rel_err(f, &n0.to_flat(), &grad, seed + 7)
}

/// Every loss term's gradient check, by name.
pub fn gradient_suite(seed: u64) -> Vec<(&'static str, f64)> {
    vec![
        ("appearance (image)", appearance_image_error(seed)),
        ("appearance (w)", appearance_error(seed)),
        ("semantic (w)", semantic_error(seed)),
        ("shape (w)", shape_error(seed)),
        ("size (w)", size_error(seed)),
        ("latent objective (w)", full_latent_error(seed)),
        ("noise regularizer (n)", regularizer_error(seed)),
        ("noise objective (n)", noise_objective_error(seed)),
        ("global appearance (w)", global_appearance_error(seed)),
    ]
}
