//! Optimization variables: the per-layer latent code and the noise stack.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Mask;

/// Per-layer style vectors (extended latent space).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    layers: usize,
    style_dim: usize,
    values: Vec<f64>,
}

impl LatentCode {
    pub fn zeros(layers: usize, style_dim: usize) -> Self {
        Self {
            layers,
            style_dim,
            values: vec![0.0; layers * style_dim],
        }
    }

    pub fn from_vec(layers: usize, style_dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != layers * style_dim {
            return Err(Error::shape(
                "LatentCode::from_vec",
                format!("{layers}x{style_dim}"),
                values.len(),
            ));
        }
        Ok(Self {
            layers,
            style_dim,
            values,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn style_dim(&self) -> usize {
        self.style_dim
    }

    pub fn layer(&self, l: usize) -> &[f64] {
        &self.values[l * self.style_dim..(l + 1) * self.style_dim]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.values[l * self.style_dim..(l + 1) * self.style_dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_shape(&self, layers: usize, style_dim: usize) -> Result<()> {
        if self.layers != layers {
            return Err(Error::shape("latent layer count", layers, self.layers));
        }
        if self.style_dim != style_dim {
            return Err(Error::shape("latent style_dim", style_dim, self.style_dim));
        }
        Ok(())
    }
}

/// Multi-resolution noise channels, one plane per generator noise input.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStack {
    channels: Vec<Mask>,
}

impl NoiseStack {
    pub fn zeros(resolutions: &[(usize, usize)]) -> Self {
        Self {
            channels: resolutions.iter().map(|&(h, w)| Mask::zeros(h, w)).collect(),
        }
    }

    pub fn standard_normal<R: Rng + ?Sized>(resolutions: &[(usize, usize)], rng: &mut R) -> Self {
        Self {
            channels: resolutions
                .iter()
                .map(|&(h, w)| Mask::from_fn(h, w, |_, _| rng.sample(StandardNormal)))
                .collect(),
        }
    }

    pub fn from_channels(channels: Vec<Mask>) -> Self {
        Self { channels }
    }

    pub fn channels(&self) -> &[Mask] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Mask] {
        &mut self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn resolutions(&self) -> Vec<(usize, usize)> {
        self.channels.iter().map(Mask::shape).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(Mask::is_finite)
    }

    pub fn ensure_shape(&self, resolutions: &[(usize, usize)]) -> Result<()> {
        if self.channels.len() != resolutions.len() {
            return Err(Error::shape(
                "noise channel count",
                resolutions.len(),
                self.channels.len(),
            ));
        }
        for (i, (ch, &(h, w))) in self.channels.iter().zip(resolutions).enumerate() {
            if ch.shape() != (h, w) {
                return Err(Error::shape(
                    format!("noise channel {i}"),
                    format!("{h}x{w}"),
                    format!("{}x{}", ch.height(), ch.width()),
                ));
            }
        }
        Ok(())
    }

    /// Flattened view used by the optimizer.
    pub fn to_flat(&self) -> Vec<f64> {
        self.channels
            .iter()
            .flat_map(|c| c.as_slice().iter().copied())
            .collect()
    }

    /// Inverse of [`NoiseStack::to_flat`]; `flat` must have the same total length.
    pub fn copy_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for ch in &mut self.channels {
            let n = ch.len();
            ch.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        debug_assert_eq!(offset, flat.len());
    }
}

/// One level of the averaging pyramid: 2x2 block means.
pub fn pyramid_down(plane: &Mask) -> Mask {
    let (h, w) = (plane.height() / 2, plane.width() / 2);
    Mask::from_fn(h, w, |y, x| {
        0.25 * (plane.get(2 * y, 2 * x)
            + plane.get(2 * y, 2 * x + 1)
            + plane.get(2 * y + 1, 2 * x)
            + plane.get(2 * y + 1, 2 * x + 1))
    })
}

/// The pyramid views of one noise channel: the original resolution, then
/// repeated 2x2 averaging while the plane is larger than 8x8.
pub fn pyramid_levels(plane: &Mask) -> Vec<Mask> {
    let mut levels = vec![plane.clone()];
    loop {
        let last = levels.last().expect("non-empty");
        let (h, w) = last.shape();
        if h <= 8 || w <= 8 || h % 2 != 0 || w % 2 != 0 {
            break;
        }
        let next = pyramid_down(last);
        levels.push(next);
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pyramid_stops_at_eight() {
        let sizes: Vec<_> = pyramid_levels(&Mask::zeros(32, 32))
            .iter()
            .map(Mask::shape)
            .collect();
        assert_eq!(sizes, vec![(32, 32), (16, 16), (8, 8)]);
        assert_eq!(pyramid_levels(&Mask::zeros(8, 8)).len(), 1);
        assert_eq!(pyramid_levels(&Mask::zeros(4, 4)).len(), 1);
    }

    #[test]
    fn flat_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::SeedableRng;
        let n = NoiseStack::standard_normal(&[(8, 8), (16, 16)], &mut rng);
        let mut m = NoiseStack::zeros(&[(8, 8), (16, 16)]);
        m.copy_from_flat(&n.to_flat());
        assert_eq!(m, n);
    }

    #[test]
    fn shape_errors_name_channel() {
        let n = NoiseStack::zeros(&[(8, 8), (16, 16)]);
        let err = n.ensure_shape(&[(8, 8), (32, 32)]).unwrap_err();
        assert!(err.to_string().contains("noise channel 1"), "{err}");
    }
}
