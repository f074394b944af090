//! Flat container of named `f64` arrays.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "LEDCKPT\0"
//! version  u32      = 1
//! count    u32      number of entries
//! entry*:
//!   name_len u32, name (UTF-8)
//!   ndim     u32, dims (u64 each)
//!   data     f64 x prod(dims)
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::latent::{LatentCode, NoiseStack};
use crate::tensor::Mask;

pub const MAGIC: &[u8; 8] = b"LEDCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn write_arrays<W: Write>(mut out: W, arrays: &[NamedArray]) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(arrays.len() as u32).to_le_bytes())?;
    for a in arrays {
        debug_assert_eq!(a.dims.iter().product::<usize>(), a.data.len());
        out.write_all(&(a.name.len() as u32).to_le_bytes())?;
        out.write_all(a.name.as_bytes())?;
        out.write_all(&(a.dims.len() as u32).to_le_bytes())?;
        for &d in &a.dims {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in &a.data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    Error::Checkpoint(format!("truncated input: {e}"))
}

pub fn read_arrays<R: Read>(mut input: R) -> Result<Vec<NamedArray>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut input)?;
    let mut arrays = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut input)? as usize;
        let mut name = vec![0u8; len];
        input.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("name is not UTF-8".into()))?;
        let ndim = read_u32(&mut input)? as usize;
        let dims = (0..ndim)
            .map(|_| read_u64(&mut input).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b = [0u8; 8];
            input.read_exact(&mut b).map_err(truncated)?;
            data.push(f64::from_le_bytes(b));
        }
        arrays.push(NamedArray { name, dims, data });
    }
    Ok(arrays)
}

/// Latent code as `w` and noise channels as `noise.{i}`.
pub fn latent_noise_arrays(w: &LatentCode, n: &NoiseStack) -> Vec<NamedArray> {
    let mut out = vec![NamedArray {
        name: "w".into(),
        dims: vec![w.layers(), w.style_dim()],
        data: w.as_slice().to_vec(),
    }];
    for (i, ch) in n.channels().iter().enumerate() {
        out.push(NamedArray {
            name: format!("noise.{i}"),
            dims: vec![ch.height(), ch.width()],
            data: ch.as_slice().to_vec(),
        });
    }
    out
}

pub fn latent_noise_from_arrays(arrays: &[NamedArray]) -> Result<(LatentCode, NoiseStack)> {
    let w = arrays
        .iter()
        .find(|a| a.name == "w")
        .ok_or_else(|| Error::Checkpoint("missing entry `w`".into()))?;
    let [layers, dim] = w.dims[..] else {
        return Err(Error::Checkpoint("`w` must be 2-D".into()));
    };
    let latent = LatentCode::from_vec(layers, dim, w.data.clone())?;
    let mut channels = Vec::new();
    for i in 0.. {
        let Some(a) = arrays.iter().find(|a| a.name == format!("noise.{i}")) else {
            break;
        };
        let [h, wd] = a.dims[..] else {
            return Err(Error::Checkpoint(format!("`noise.{i}` must be 2-D")));
        };
        channels.push(Mask::from_vec(h, wd, a.data.clone())?);
    }
    Ok((latent, NoiseStack::from_channels(channels)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(vals in proptest::collection::vec(-1e6f64..1e6, 8), noise in proptest::collection::vec(-5f64..5.0, 16)) {
            let w = LatentCode::from_vec(2, 4, vals).unwrap();
            let n = NoiseStack::from_channels(vec![Mask::from_vec(4, 4, noise).unwrap()]);
            let mut buf = Vec::new();
            write_arrays(&mut buf, &latent_noise_arrays(&w, &n)).unwrap();
            let (w2, n2) = latent_noise_from_arrays(&read_arrays(&buf[..]).unwrap()).unwrap();
            prop_assert_eq!(w2, w);
            prop_assert_eq!(n2, n);
        }
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_arrays(&mut buf, &[]).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &0u32.to_le_bytes());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_arrays(&b"NOTACKPT"[..]).is_err());
        let mut buf = Vec::new();
        write_arrays(
            &mut buf,
            &[NamedArray {
                name: "x".into(),
                dims: vec![2],
                data: vec![1.0, 2.0],
            }],
        )
        .unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_arrays(&buf[..]).is_err());
    }
}
