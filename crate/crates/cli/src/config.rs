//! Job manifests: a TOML file plus command-line overrides.

use std::path::PathBuf;
use std::str::FromStr;

use latentedit_core::adapters::registry::ModelSpec;
use latentedit_core::optimizer::{EarlyStop, InversionMask, OptimConfig, INVERT_ITERS};
use latentedit_core::{AttributeTarget, EditMode, EditSpec, LossWeights};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `NAME`, `NAME=present` or `NAME=absent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrArg(pub AttributeTarget);

impl FromStr for AttrArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, state) = match s.split_once('=') {
            Some((n, v)) => (n.trim(), v.trim()),
            None => (s.trim(), "present"),
        };
        if name.is_empty() {
            return Err(format!("`{s}`: attribute name is empty"));
        }
        match state {
            "present" => Ok(Self(AttributeTarget::present(name))),
            "absent" => Ok(Self(AttributeTarget::absent(name))),
            other => Err(format!("`{s}`: expected `present` or `absent`, got `{other}`")),
        }
    }
}

impl Serialize for AttrArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let state = if self.0.present { "present" } else { "absent" };
        s.serialize_str(&format!("{}={state}", self.0.name))
    }
}

impl<'de> Deserialize<'de> for AttrArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `toy` when the generator adapter is the toy one, else `paper`.
    #[default]
    Auto,
    Toy,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditSection {
    #[serde(default)]
    pub attributes: Vec<AttrArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub mode: EditMode,
}

/// Optimizer settings; unset fields come from the preset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimSection {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_latent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_latent_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_refresh_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flexible_masks: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<EarlyStop>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_r: Option<f64>,
}

impl WeightsSection {
    fn apply(&self, w: &mut LossWeights) {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut w.lambda_m, self.lambda_m);
        set(&mut w.lambda_c, self.lambda_c);
        set(&mut w.lambda_s, self.lambda_s);
        set(&mut w.lambda_p, self.lambda_p);
        set(&mut w.lambda_r, self.lambda_r);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    #[serde(default = "yes")]
    pub masks: bool,
    #[serde(default = "yes")]
    pub trace: bool,
    #[serde(default = "yes")]
    pub checkpoint: bool,
    /// Also write the alternative blends next to the standard one.
    #[serde(default)]
    pub variants: bool,
    /// Dump a render every N iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
}

fn yes() -> bool {
    true
}

impl Default for ExportSection {
    fn default() -> Self {
        Self {
            masks: true,
            trace: true,
            checkpoint: true,
            variants: false,
            frames: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Epsilon,
    Alpha,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epsilon" => Ok(Self::Epsilon),
            "alpha" => Ok(Self::Alpha),
            other => Err(format!("expected `epsilon` or `alpha`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParam,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertSection {
    #[serde(default)]
    pub region: InversionMask,
    #[serde(default = "default_invert_iters")]
    pub iterations: usize,
}

fn default_invert_iters() -> usize {
    INVERT_ITERS
}

impl Default for InvertSection {
    fn default() -> Self {
        Self {
            region: InversionMask::default(),
            iterations: INVERT_ITERS,
        }
    }
}

/// A complete job description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub models: ModelSpec,
    #[serde(default)]
    pub edit: EditSection,
    #[serde(default)]
    pub optim: OptimSection,
    #[serde(default)]
    pub export: ExportSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invert: Option<InvertSection>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_jobs() -> usize {
    1
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            output_dir: default_out(),
            jobs: default_jobs(),
            models: ModelSpec::default(),
            edit: EditSection::default(),
            optim: OptimSection::default(),
            export: ExportSection::default(),
            sweep: None,
            invert: None,
        }
    }
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn edit_spec(&self) -> Result<EditSpec, CliError> {
        let mut spec = EditSpec::new(self.edit.attributes.iter().map(|a| a.0.clone()).collect());
        if let Some(e) = self.edit.epsilon {
            spec.epsilon = e;
        }
        spec.alpha = self.edit.alpha;
        spec.mode = self.edit.mode;
        spec.validate().map_err(|e| CliError::Config(format!("edit.{}", strip_invalid(&e))))?;
        Ok(spec)
    }

    pub fn optim_config(&self) -> Result<OptimConfig, CliError> {
        let o = &self.optim;
        let toy = match o.preset {
            Preset::Auto => self.models.generator.name == "toy",
            Preset::Toy => true,
            Preset::Paper => false,
        };
        let mut cfg = if toy { OptimConfig::toy() } else { OptimConfig::paper() };
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = o.$f { cfg.$f = v; })*};
        }
        take!(lr_latent, lr_noise, warmup_iters, latent_iters, noise_iters, mean_latent_samples, mask_refresh_every, flexible_masks, seed);
        if o.early_stop.is_some() {
            cfg.early_stop = o.early_stop;
        }
        if let Some(w) = &o.weights {
            w.apply(&mut cfg.weights);
        }
        cfg.frame_dump_every = self.export.frames;
        cfg.validate().map_err(|e| CliError::Config(format!("optim.{}", strip_invalid(&e))))?;
        Ok(cfg)
    }

    /// Checks everything that does not need the models.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.inputs.is_empty() {
            return Err(CliError::Config("inputs: at least one input image is required".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("jobs: must be >= 1".into()));
        }
        self.edit_spec()?;
        self.optim_config()?;
        Ok(())
    }
}

fn strip_invalid(e: &latentedit_core::Error) -> String {
    match e {
        latentedit_core::Error::InvalidConfig(msg) => msg.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attr_syntax() {
        assert_eq!("a".parse::<AttrArg>().unwrap().0, AttributeTarget::present("a"));
        assert_eq!("a=absent".parse::<AttrArg>().unwrap().0, AttributeTarget::absent("a"));
        assert!("a=maybe".parse::<AttrArg>().is_err());
        assert!("=absent".parse::<AttrArg>().is_err());
    }

    #[test]
    fn presets_follow_generator() {
        let mut job = JobConfig::default();
        assert_eq!(job.optim_config().unwrap(), OptimConfig::toy());
        job.models.generator.name = "stylegan2".into();
        assert_eq!(job.optim_config().unwrap(), OptimConfig::paper());
        job.optim.preset = Preset::Toy;
        job.optim.lr_latent = Some(0.3);
        assert_eq!(job.optim_config().unwrap().lr_latent, 0.3);
    }

    #[test]
    fn errors_name_the_field() {
        let mut job = JobConfig {
            inputs: vec!["x.png".into()],
            ..JobConfig::default()
        };
        let err = job.validate().unwrap_err().to_string();
        assert!(err.contains("edit.attributes"), "{err}");
        job.edit.attributes.push("a".parse().unwrap());
        job.optim.lr_noise = Some(-1.0);
        let err = job.validate().unwrap_err().to_string();
        assert!(err.contains("optim.lr_noise"), "{err}");
        let err = JobConfig::from_toml("bogus = 1").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }
}
