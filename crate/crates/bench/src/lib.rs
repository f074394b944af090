//! Shared fixtures for the benchmarks.

use latentedit_core::adapters::toy::{face_image, toy_models, ToyGeneratorConfig};
use latentedit_core::{AttributeTarget, EditSpec, Image, ModelSet, OptimConfig};

/// Toy models, the toy face and a single-attribute edit.
pub fn fixture() -> (ModelSet, Image, EditSpec) {
    let models = toy_models();
    let image = face_image(&models, &ToyGeneratorConfig::default()).expect("toy face renders");
    let spec = EditSpec::new(vec![AttributeTarget::present("region_mean_up")]);
    (models, image, spec)
}

/// Toy preset shrunk to `iters` iterations per stage.
pub fn short_config(iters: usize) -> OptimConfig {
    OptimConfig {
        warmup_iters: iters,
        latent_iters: iters,
        noise_iters: iters,
        mean_latent_samples: 64,
        ..OptimConfig::toy()
    }
}
