//! Probabilistic region masks: extraction from parser output, the flexible
//! relaxations applied during optimization, and blending masks.
//!
//! Every operation here is a pure function of its inputs and keeps values
//! in `[0, 1]`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mask, Tensor3};

/// Attribute name to the parser regions it edits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeRegionMap {
    regions: BTreeMap<String, Vec<String>>,
    /// Attributes that change the region's outline (blended with the
    /// generated target mask).
    #[serde(default)]
    shape_changing: BTreeSet<String>,
}

impl AttributeRegionMap {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a [&'a str])>) -> Self {
        Self {
            regions: pairs
                .into_iter()
                .map(|(a, rs)| (a.to_string(), rs.iter().map(|r| r.to_string()).collect()))
                .collect(),
            shape_changing: BTreeSet::new(),
        }
    }

    /// The CelebA attribute set over CelebAMask-HQ parser labels.
    pub fn celeba() -> Self {
        let hair = &["hair"][..];
        let mouth = &["u_lip", "l_lip", "mouth"][..];
        let brows = &["l_brow", "r_brow"][..];
        let nose = &["nose"][..];
        let eyes = &["l_eye", "r_eye"][..];
        let mut map = Self::from_pairs([
            ("Blond_Hair", hair),
            ("Brown_Hair", hair),
            ("Black_Hair", hair),
            ("Gray_Hair", hair),
            ("Straight_Hair", hair),
            ("Wavy_Hair", hair),
            ("Wearing_Lipstick", mouth),
            ("Smiling", mouth),
            ("Mouth_Slightly_Open", mouth),
            ("Bushy_Eyebrows", brows),
            ("Arched_Eyebrows", brows),
            ("Pointy_Nose", nose),
            ("Big_Nose", nose),
            ("Narrow_Eyes", eyes),
        ]);
        map.mark_shape_changing("Straight_Hair");
        map.mark_shape_changing("Wavy_Hair");
        map
    }

    pub fn insert(&mut self, attribute: &str, regions: Vec<String>) {
        self.regions.insert(attribute.into(), regions);
    }

    pub fn mark_shape_changing(&mut self, attribute: &str) {
        self.shape_changing.insert(attribute.into());
    }

    pub fn is_shape_changing(&self, attribute: &str) -> bool {
        self.shape_changing.contains(attribute)
    }

    pub fn regions_for(&self, attribute: &str) -> Result<&[String]> {
        self.regions
            .get(attribute)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownAttribute(attribute.into()))
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Resolves the union of the regions of `attributes` to parser channel
    /// indices, deduplicated and sorted.
    pub fn channels_for<S: AsRef<str>>(
        &self,
        attributes: &[S],
        region_names: &[String],
    ) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for a in attributes {
            for r in self.regions_for(a.as_ref())? {
                set.insert(region_channel(region_names, r)?);
            }
        }
        Ok(set.into_iter().collect())
    }
}

pub fn region_channel(region_names: &[String], region: &str) -> Result<usize> {
    region_names
        .iter()
        .position(|r| r == region)
        .ok_or_else(|| Error::UnknownRegion(region.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    FromInput,
    FromGenerated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMaskSet {
    pub skin: Mask,
    pub target: Mask,
    /// Face union, present in global editing mode.
    pub union: Option<Mask>,
    pub source: MaskSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    #[default]
    Standard,
    HairShape,
    Global,
}

/// Clamped pixel-wise sum of selected parser channels.
pub fn channel_union(parsed: &Tensor3, channels: &[usize]) -> Result<Mask> {
    let (l, h, w) = parsed.shape();
    let mut out = Mask::zeros(h, w);
    for &c in channels {
        if c >= l {
            return Err(Error::shape("parser channel", format!("< {l}"), c));
        }
        for (o, v) in out.as_mut_slice().iter_mut().zip(parsed.channel(c)) {
            *o += v;
        }
    }
    Ok(out.map(|v| v.clamp(0.0, 1.0)))
}

/// Gradient of [`channel_union`] with respect to the parser map. The clamp
/// passes gradient where the unclamped sum lies in `[0, 1)`.
pub fn channel_union_vjp(parsed: &Tensor3, channels: &[usize], grad: &Mask) -> Result<Tensor3> {
    let (l, h, w) = parsed.shape();
    if grad.shape() != (h, w) {
        return Err(Error::shape(
            "channel_union gradient",
            format!("{h}x{w}"),
            format!("{}x{}", grad.height(), grad.width()),
        ));
    }
    let mut raw = vec![0.0; h * w];
    for &c in channels {
        for (o, v) in raw.iter_mut().zip(parsed.channel(c)) {
            *o += v;
        }
    }
    let mut out = Tensor3::zeros(l, h, w);
    for &c in channels {
        for ((o, &s), &g) in out.channel_mut(c).iter_mut().zip(&raw).zip(grad.as_slice()) {
            if (0.0..1.0).contains(&s) {
                *o += g;
            }
        }
    }
    Ok(out)
}

/// Target-region mask of one attribute.
pub fn target_mask(
    parsed: &Tensor3,
    region_names: &[String],
    attribute: &str,
    map: &AttributeRegionMap,
) -> Result<Mask> {
    let channels = map.channels_for(&[attribute], region_names)?;
    channel_union(parsed, &channels)
}

/// Preserve fewer pixels where the generated target region has grown:
/// `max(skin_in - target_gen, 0)`.
pub fn relaxed_preserve_mask(skin_in: &Mask, target_gen: &Mask) -> Result<Mask> {
    skin_in.zip_map(target_gen, |s, t| (s - t).max(0.0))
}

/// The union of the input and generated target regions, `min(a + b, 1)`;
/// covers at least the input region.
pub fn relaxed_shape_target(target_in: &Mask, target_gen: &Mask) -> Result<Mask> {
    target_in.zip_map(target_gen, |a, b| (a + b).min(1.0))
}

pub fn blend_mask(
    skin_in: &Mask,
    target_in: &Mask,
    target_gen: &Mask,
    union: Option<&Mask>,
    mode: BlendMode,
) -> Result<Mask> {
    match mode {
        BlendMode::Standard => skin_in.zip_map(target_in, |a, b| (a + b).clamp(0.0, 1.0)),
        BlendMode::HairShape => skin_in.zip_map(target_gen, |a, b| (a + b).clamp(0.0, 1.0)),
        BlendMode::Global => {
            let u = union.ok_or_else(|| {
                Error::InvalidConfig("global blending requires the face-union mask".into())
            })?;
            u.ensure_same(skin_in, "blend_mask(global)")?;
            Ok(u.clone())
        }
    }
}

/// The face-union mask and its area-averaged copies at each feature scale.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionMasks {
    pub full: Mask,
    pub per_layer: Vec<Mask>,
}

pub fn union_face_mask(parsed: &Tensor3, channels: &[usize], scales: &[usize]) -> Result<UnionMasks> {
    let full = channel_union(parsed, channels)?;
    let per_layer = scales
        .iter()
        .map(|&s| full.downsample_area(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnionMasks { full, per_layer })
}
