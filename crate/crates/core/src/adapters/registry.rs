//! Name-based adapter discovery.
//!
//! Each model slot (generator, classifier, parser, feature extractor) is
//! resolved independently by name. A factory receives the optional
//! checkpoint path from configuration; its file format is the adapter's
//! business.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::toy::{self, ToyExtractor, ToyGenerator, ToyGeneratorConfig};
use super::{default_union_regions, Classifier, FeatureExtractor, Generator, ModelSet, Parser};
use crate::error::{Error, Result};
use crate::masks::AttributeRegionMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl AdapterSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            checkpoint: None,
        }
    }
}

impl Default for AdapterSpec {
    fn default() -> Self {
        Self::named("toy")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub generator: AdapterSpec,
    #[serde(default)]
    pub classifier: AdapterSpec,
    #[serde(default)]
    pub parser: AdapterSpec,
    #[serde(default)]
    pub extractor: AdapterSpec,
    /// Parser region used as the appearance-preservation mask.
    #[serde(default = "default_skin")]
    pub skin_region: String,
    /// Face-union regions; empty means every non-background region.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub union_regions: Vec<String>,
}

fn default_skin() -> String {
    "skin".into()
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            generator: AdapterSpec::default(),
            classifier: AdapterSpec::default(),
            parser: AdapterSpec::default(),
            extractor: AdapterSpec::default(),
            skin_region: default_skin(),
            union_regions: Vec::new(),
        }
    }
}

type Factory<T> = Box<dyn Fn(Option<&Path>) -> Result<Arc<T>> + Send + Sync>;

/// Registered factories per model slot. Region maps are keyed by the
/// classifier adapter name.
pub struct AdapterRegistry {
    generators: BTreeMap<String, Factory<dyn Generator>>,
    classifiers: BTreeMap<String, Factory<dyn Classifier>>,
    parsers: BTreeMap<String, Factory<dyn Parser>>,
    extractors: BTreeMap<String, Factory<dyn FeatureExtractor>>,
    region_maps: BTreeMap<String, AttributeRegionMap>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

fn no_checkpoint(adapter: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => Err(Error::ModelLoad {
            adapter: adapter.into(),
            reason: format!("takes no checkpoint (got {})", p.display()),
        }),
        None => Ok(()),
    }
}

impl AdapterRegistry {
    pub fn empty() -> Self {
        Self {
            generators: BTreeMap::new(),
            classifiers: BTreeMap::new(),
            parsers: BTreeMap::new(),
            extractors: BTreeMap::new(),
            region_maps: BTreeMap::new(),
        }
    }

    /// Registry with the `toy` adapters.
    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register_generator("toy", |ckpt| {
            no_checkpoint("toy", ckpt)?;
            Ok(Arc::new(ToyGenerator::new(ToyGeneratorConfig::default())?) as Arc<dyn Generator>)
        });
        reg.register_classifier("toy", |ckpt| {
            no_checkpoint("toy", ckpt)?;
            Ok(Arc::new(toy::toy_classifier(&ToyGeneratorConfig::default())) as Arc<dyn Classifier>)
        });
        reg.register_parser("toy", |ckpt| {
            no_checkpoint("toy", ckpt)?;
            Ok(Arc::new(toy::toy_parser()) as Arc<dyn Parser>)
        });
        reg.register_extractor("toy", |ckpt| {
            no_checkpoint("toy", ckpt)?;
            Ok(Arc::new(ToyExtractor::five_layer()) as Arc<dyn FeatureExtractor>)
        });
        reg.region_maps.insert("toy".into(), toy::toy_region_map());
        reg.region_maps.insert("celeba".into(), AttributeRegionMap::celeba());
        reg
    }

    pub fn register_generator(
        &mut self,
        name: &str,
        f: impl Fn(Option<&Path>) -> Result<Arc<dyn Generator>> + Send + Sync + 'static,
    ) {
        self.generators.insert(name.into(), Box::new(f));
    }

    pub fn register_classifier(
        &mut self,
        name: &str,
        f: impl Fn(Option<&Path>) -> Result<Arc<dyn Classifier>> + Send + Sync + 'static,
    ) {
        self.classifiers.insert(name.into(), Box::new(f));
    }

    pub fn register_parser(
        &mut self,
        name: &str,
        f: impl Fn(Option<&Path>) -> Result<Arc<dyn Parser>> + Send + Sync + 'static,
    ) {
        self.parsers.insert(name.into(), Box::new(f));
    }

    pub fn register_extractor(
        &mut self,
        name: &str,
        f: impl Fn(Option<&Path>) -> Result<Arc<dyn FeatureExtractor>> + Send + Sync + 'static,
    ) {
        self.extractors.insert(name.into(), Box::new(f));
    }

    pub fn register_region_map(&mut self, classifier: &str, map: AttributeRegionMap) {
        self.region_maps.insert(classifier.into(), map);
    }

    pub fn load(&self, spec: &ModelSpec) -> Result<ModelSet> {
        fn pick<'a, T: ?Sized>(
            table: &'a BTreeMap<String, Factory<T>>,
            slot: &str,
            spec: &AdapterSpec,
        ) -> Result<&'a Factory<T>> {
            table.get(&spec.name).ok_or_else(|| Error::ModelLoad {
                adapter: spec.name.clone(),
                reason: format!("no {slot} adapter registered under this name"),
            })
        }
        let checkpoint = |s: &AdapterSpec| -> Result<()> {
            if let Some(p) = &s.checkpoint {
                if !p.exists() {
                    return Err(Error::ModelLoad {
                        adapter: s.name.clone(),
                        reason: format!("checkpoint {} not found", p.display()),
                    });
                }
            }
            Ok(())
        };
        for s in [&spec.generator, &spec.classifier, &spec.parser, &spec.extractor] {
            checkpoint(s)?;
        }

        let generator = pick(&self.generators, "generator", &spec.generator)?(
            spec.generator.checkpoint.as_deref(),
        )?;
        let classifier = pick(&self.classifiers, "classifier", &spec.classifier)?(
            spec.classifier.checkpoint.as_deref(),
        )?;
        let parser = pick(&self.parsers, "parser", &spec.parser)?(spec.parser.checkpoint.as_deref())?;
        let extractor = pick(&self.extractors, "extractor", &spec.extractor)?(
            spec.extractor.checkpoint.as_deref(),
        )?;
        let regions = self
            .region_maps
            .get(&spec.classifier.name)
            .cloned()
            .ok_or_else(|| Error::ModelLoad {
                adapter: spec.classifier.name.clone(),
                reason: "no attribute-region map registered".into(),
            })?;

        if parser.region_index(&spec.skin_region).is_none() {
            return Err(Error::UnknownRegion(spec.skin_region.clone()));
        }
        let union_regions = if spec.union_regions.is_empty() {
            default_union_regions(parser.as_ref())
        } else {
            for r in &spec.union_regions {
                if parser.region_index(r).is_none() {
                    return Err(Error::UnknownRegion(r.clone()));
                }
            }
            spec.union_regions.clone()
        };

        Ok(ModelSet {
            generator,
            classifier,
            parser,
            extractor: Some(extractor),
            regions,
            skin_region: spec.skin_region.clone(),
            union_regions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_toy() {
        let models = AdapterRegistry::default().load(&ModelSpec::default()).unwrap();
        assert_eq!(models.generator.info().latent_layer_count, 4);
        assert_eq!(models.union_regions, vec!["skin", "feature", "hair"]);
    }

    #[test]
    fn unknown_adapter_is_a_load_error() {
        let spec = ModelSpec {
            generator: AdapterSpec::named("stylegan2"),
            ..ModelSpec::default()
        };
        let err = AdapterRegistry::default().load(&spec).unwrap_err();
        assert!(matches!(err, Error::ModelLoad { .. }), "{err}");
    }

    #[test]
    fn missing_checkpoint_is_a_load_error() {
        let mut spec = ModelSpec::default();
        spec.parser.checkpoint = Some("/nonexistent/parser.bin".into());
        assert!(matches!(
            AdapterRegistry::default().load(&spec),
            Err(Error::ModelLoad { .. })
        ));
    }
}
