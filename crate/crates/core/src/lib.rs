//! Attribute editing by masked optimization of a generator's latent code
//! and noise inputs.
//!
//! The pipeline parses the input into region masks, fits the generator to
//! the input with those masks, steers the classifier output with the
//! flexible masks in place, refines the per-pixel noise, and finally blends
//! the render back into the input. Models are plugged in through the traits
//! in [`adapters`]; [`adapters::toy`] ships small analytic stand-ins.

pub mod adapters;
pub mod checkpoint;
pub mod compositor;
pub mod error;
pub mod io;
pub mod latent;
pub mod masks;
pub mod metrics;
pub mod objectives;
pub mod optimizer;
pub mod tensor;

pub use adapters::{
    Classifier, FeatureExtractor, Generator, GeneratorGrad, GeneratorInfo, ModelSet, Parser,
};
pub use error::{Error, Result};
pub use latent::{LatentCode, NoiseStack};
pub use masks::{AttributeRegionMap, BlendMode, RegionMaskSet};
pub use metrics::MetricReport;
pub use objectives::{AttributeTarget, EditMode, EditSpec, LossReport, LossWeights, Term};
pub use optimizer::{run_edit, EditResult, OptimConfig, Stage};
pub use tensor::{Image, Mask, Tensor3};
