//! Contracts for the differentiable models consumed by the editor.
//!
//! Every model exposes a forward pass and a vector-Jacobian product (VJP):
//! given the upstream gradient of a scalar with respect to the model output,
//! it returns the gradient with respect to the model input. The optimizer
//! chains these by hand; there is no tape.
//!
//! Handles are immutable after construction and `Send + Sync`, so a single
//! set of models can back several concurrent edit jobs.

pub mod registry;
pub mod toy;

use std::sync::Arc;

use rand::RngCore;

use crate::error::Result;
use crate::latent::{LatentCode, NoiseStack};
use crate::masks::AttributeRegionMap;
use crate::tensor::{Image, Tensor3};

/// Capability metadata of a generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorInfo {
    pub latent_layer_count: usize,
    pub style_dim: usize,
    /// One `(height, width)` entry per noise input, non-decreasing.
    pub noise_resolutions: Vec<(usize, usize)>,
    /// `(height, width)` of the 3-channel output.
    pub output_size: (usize, usize),
}

impl GeneratorInfo {
    pub fn noise_channel_count(&self) -> usize {
        self.noise_resolutions.len()
    }

    /// Checks the structural invariants: power-of-two, non-decreasing noise
    /// resolutions.
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        let mut prev = (0, 0);
        for (i, &(h, w)) in self.noise_resolutions.iter().enumerate() {
            if !h.is_power_of_two() || !w.is_power_of_two() {
                return Err(Error::InvalidConfig(format!(
                    "noise channel {i} resolution {h}x{w} is not a power of two"
                )));
            }
            if h < prev.0 || w < prev.1 {
                return Err(Error::InvalidConfig(format!(
                    "noise channel {i} resolution {h}x{w} decreases"
                )));
            }
            prev = (h, w);
        }
        Ok(())
    }
}

/// Gradients returned by [`Generator::generate_vjp`].
#[derive(Debug, Clone)]
pub struct GeneratorGrad {
    pub latent: LatentCode,
    pub noise: NoiseStack,
}

pub trait Generator: Send + Sync {
    fn info(&self) -> &GeneratorInfo;

    /// Draws one latent code from the generator's latent distribution.
    fn sample_latent(&self, rng: &mut dyn RngCore) -> LatentCode;

    fn generate(&self, w: &LatentCode, n: &NoiseStack) -> Result<Image>;

    /// Gradient of `<grad_output, generate(w, n)>` with respect to `w` and `n`.
    fn generate_vjp(&self, w: &LatentCode, n: &NoiseStack, grad_output: &Image)
        -> Result<GeneratorGrad>;

    fn check_inputs(&self, w: &LatentCode, n: &NoiseStack) -> Result<()> {
        let info = self.info();
        w.ensure_shape(info.latent_layer_count, info.style_dim)?;
        n.ensure_shape(&info.noise_resolutions)
    }
}

pub trait Classifier: Send + Sync {
    fn attribute_names(&self) -> &[String];

    /// One probability per attribute, in `attribute_names` order.
    fn classify(&self, image: &Image) -> Result<Vec<f64>>;

    fn classify_vjp(&self, image: &Image, grad_probs: &[f64]) -> Result<Image>;

    fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names().iter().position(|a| a == name)
    }
}

pub trait Parser: Send + Sync {
    fn region_names(&self) -> &[String];

    /// `L x height x width` map of region probabilities.
    fn parse(&self, image: &Image) -> Result<Tensor3>;

    fn parse_vjp(&self, image: &Image, grad_map: &Tensor3) -> Result<Image>;

    fn region_index(&self, name: &str) -> Option<usize> {
        self.region_names().iter().position(|r| r == name)
    }
}

pub trait FeatureExtractor: Send + Sync {
    /// Spatial downscale factor of each layer relative to the input.
    fn scales(&self) -> &[usize];

    fn layer_count(&self) -> usize {
        self.scales().len()
    }

    fn extract(&self, image: &Image) -> Result<Vec<Tensor3>>;

    fn extract_vjp(&self, image: &Image, grad_features: &[Tensor3]) -> Result<Image>;
}

/// The bundle of models and region bookkeeping an edit job runs against.
#[derive(Clone)]
pub struct ModelSet {
    pub generator: Arc<dyn Generator>,
    pub classifier: Arc<dyn Classifier>,
    pub parser: Arc<dyn Parser>,
    pub extractor: Option<Arc<dyn FeatureExtractor>>,
    pub regions: AttributeRegionMap,
    /// Parser region forming the appearance-preservation mask.
    pub skin_region: String,
    /// Parser regions whose union forms the face mask for global edits.
    pub union_regions: Vec<String>,
}

impl std::fmt::Debug for ModelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSet")
            .field("generator", self.generator.info())
            .field("attributes", &self.classifier.attribute_names())
            .field("regions", &self.parser.region_names())
            .field("skin_region", &self.skin_region)
            .field("union_regions", &self.union_regions)
            .finish()
    }
}

/// Default face-union channels: every parser region except `background`.
pub fn default_union_regions(parser: &dyn Parser) -> Vec<String> {
    parser
        .region_names()
        .iter()
        .filter(|r| r.as_str() != "background")
        .cloned()
        .collect()
}
