mod common;

use common::*;
use latentedit_core::adapters::toy::{toy_models, ToyExtractor};
use latentedit_core::{FeatureExtractor, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(name: &str, err: f64) {
    assert!(err < GRAD_TOL, "{name}: max relative error {err:e}");
}

#[test]
fn appearance_gradients() {
    for seed in 0..3 {
        check("appearance image", appearance_image_error(seed));
        check("appearance w", appearance_error(seed));
    }
}

#[test]
fn semantic_gradient() {
    for seed in 0..3 {
        check("semantic", semantic_error(seed));
    }
}

#[test]
fn shape_gradient() {
    for seed in 0..3 {
        check("shape", shape_error(seed));
    }
}

#[test]
fn size_gradient() {
    for seed in 0..3 {
        check("size", size_error(seed));
    }
}

#[test]
fn combined_latent_gradient() {
    check("latent objective", full_latent_error(11));
}

#[test]
fn noise_gradients() {
    for seed in 0..3 {
        check("regularizer", regularizer_error(seed));
        check("noise objective", noise_objective_error(seed));
    }
}

#[test]
fn global_appearance_gradient() {
    for seed in 0..2 {
        check("global appearance", global_appearance_error(seed));
    }
}

#[test]
fn generator_vjp_in_w_and_n() {
    let models = toy_models();
    let g = &models.generator;
    let w0 = probe_latent(3);
    let n0 = probe_noise(&models, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cot = Tensor3::from_fn(3, 32, 32, |_, _, _| rng.gen_range(-1.0..1.0));
    let dot = |img: &Tensor3| img.as_slice().iter().zip(cot.as_slice()).map(|(a, b)| a * b).sum::<f64>();
    let grad = g.generate_vjp(&w0, &n0, &cot).unwrap();

    let fw = |x: &[f64]| {
        let w = latentedit_core::LatentCode::from_vec(w0.layers(), w0.style_dim(), x.to_vec()).unwrap();
        dot(&g.generate(&w, &n0).unwrap())
    };
    check("generator w", fd_max_rel_err(fw, w0.as_slice(), grad.latent.as_slice(), 1));

    let fn_ = |x: &[f64]| {
        let mut n = n0.clone();
        n.copy_from_flat(x);
        dot(&g.generate(&w0, &n).unwrap())
    };
    check("generator n", fd_max_rel_err(fn_, &n0.to_flat(), &grad.noise.to_flat(), 2));
}

#[test]
fn classifier_parser_extractor_vjps() {
    let models = toy_models();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let img = random_image(&mut rng, 32, 32);

    let cot_c: Vec<f64> = (0..models.classifier.attribute_names().len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let gc = models.classifier.classify_vjp(&img, &cot_c).unwrap();
    let fc = |x: &[f64]| {
        let p = models.classifier.classify(&Tensor3::from_vec(3, 32, 32, x.to_vec()).unwrap()).unwrap();
        p.iter().zip(&cot_c).map(|(a, b)| a * b).sum::<f64>()
    };
    // Sample inside the classifier's window, where the gradient lives.
    let sub: Vec<usize> = (0..3)
        .flat_map(|c| (11..21).flat_map(move |y| (11..21).map(move |x| (c * 32 + y) * 32 + x)))
        .collect();
    let restricted = |x: &[f64]| {
        let mut full = img.as_slice().to_vec();
        for (k, &i) in sub.iter().enumerate() {
            full[i] = x[k];
        }
        fc(&full)
    };
    let x_sub: Vec<f64> = sub.iter().map(|&i| img.as_slice()[i]).collect();
    let g_sub: Vec<f64> = sub.iter().map(|&i| gc.as_slice()[i]).collect();
    check("classifier", fd_max_rel_err(restricted, &x_sub, &g_sub, 3));

    let parsed = models.parser.parse(&img).unwrap();
    let cot_p = Tensor3::from_fn(parsed.channels(), 32, 32, |_, _, _| rng.gen_range(-1.0..1.0));
    let gp = models.parser.parse_vjp(&img, &cot_p).unwrap();
    let fp = |x: &[f64]| {
        let p = models.parser.parse(&Tensor3::from_vec(3, 32, 32, x.to_vec()).unwrap()).unwrap();
        p.as_slice().iter().zip(cot_p.as_slice()).map(|(a, b)| a * b).sum::<f64>()
    };
    check("parser", fd_max_rel_err(fp, img.as_slice(), gp.as_slice(), 4));

    let fx = ToyExtractor::five_layer();
    let feats = fx.extract(&img).unwrap();
    let cot_f: Vec<Tensor3> = feats
        .iter()
        .map(|f| Tensor3::from_fn(f.channels(), f.height(), f.width(), |_, _, _| rng.gen_range(-1.0..1.0)))
        .collect();
    let gf = fx.extract_vjp(&img, &cot_f).unwrap();
    let ff = |x: &[f64]| {
        let f = fx.extract(&Tensor3::from_vec(3, 32, 32, x.to_vec()).unwrap()).unwrap();
        f.iter()
            .zip(&cot_f)
            .map(|(a, b)| a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p * q).sum::<f64>())
            .sum::<f64>()
    };
    check("extractor", fd_max_rel_err(ff, img.as_slice(), gf.as_slice(), 5));
}

