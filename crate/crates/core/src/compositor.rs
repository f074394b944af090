//! Final compositing of the generated render with the input image.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::masks::{blend_mask, BlendMode, RegionMaskSet};
use crate::tensor::{Image, Mask};

/// `b * generated + (1 - b) * input`, mask broadcast over channels. No
/// clamping is applied, so outputs stay in `[0, 1]` exactly when the inputs
/// do.
pub fn blend(image_gen: &Image, image_in: &Image, b: &Mask) -> Result<Image> {
    image_gen.ensure_shape(image_in, "blend images")?;
    image_gen.ensure_plane(b, "blend mask")?;
    let plane = b.len();
    let m = b.as_slice();
    let mut out = image_in.clone();
    for (i, (o, &g)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(image_gen.as_slice())
        .enumerate()
    {
        let w = m[i % plane];
        *o = w * g + (1.0 - w) * *o;
    }
    Ok(out)
}

/// Standard blend next to the two skin-free alternatives: the input target
/// region and the generated target region.
pub fn blend_variants(
    image_gen: &Image,
    image_in: &Image,
    masks: &RegionMaskSet,
    target_gen: &Mask,
) -> Result<BTreeMap<String, Image>> {
    let standard = blend_mask(&masks.skin, &masks.target, target_gen, None, BlendMode::Standard)?;
    let mut out = BTreeMap::new();
    out.insert("standard".to_string(), blend(image_gen, image_in, &standard)?);
    out.insert("target_in".to_string(), blend(image_gen, image_in, &masks.target)?);
    out.insert("target_gen".to_string(), blend(image_gen, image_in, target_gen)?);
    Ok(out)
}
