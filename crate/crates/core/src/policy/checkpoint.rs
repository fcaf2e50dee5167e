//! Binary checkpoint format.
//!
//! ```text
//! "GFP1"                      magic + format version
//! u32 LE                      number of affine layers L
//! (L + 1) x u32 LE            layer widths, input first
//! f64 LE ...                  per layer: weights (row-major, out x in), then biases
//! f64 LE                      log_std
//! ```

use std::fs;
use std::path::Path;

use super::mlp::{GaussianMlpPolicy, Layer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 3] = b"GFP";
const VERSION: u8 = b'1';

pub fn to_bytes(policy: &GaussianMlpPolicy) -> Vec<u8> {
    let sizes = policy.layer_sizes();
    let mut out = Vec::with_capacity(8 + 4 * sizes.len() + 8 * policy.num_params());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(policy.layers.len() as u32).to_le_bytes());
    for w in sizes {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    for p in policy.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::Format {
                offset: self.at,
                message: format!("truncated file while reading {what}"),
            });
        }
        let out = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<GaussianMlpPolicy> {
    let mut r = Reader { bytes, at: 0 };
    let magic = r.take(3, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, not a policy checkpoint".into(),
        });
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(Error::Format {
            offset: 3,
            message: format!(
                "unsupported version {:?}, expected version {:?}",
                version as char, VERSION as char
            ),
        });
    }
    let count_at = r.at;
    let layer_count = r.u32("layer count")? as usize;
    if layer_count == 0 {
        return Err(Error::Format {
            offset: count_at,
            message: "layer count must be >= 1".into(),
        });
    }
    let mut widths = Vec::with_capacity(layer_count + 1);
    for _ in 0..=layer_count {
        let at = r.at;
        let w = r.u32("layer width")? as usize;
        if w == 0 {
            return Err(Error::Format {
                offset: at,
                message: "layer width must be >= 1".into(),
            });
        }
        widths.push(w);
    }
    let mut layers = Vec::with_capacity(layer_count);
    for w in widths.windows(2) {
        let mut layer = Layer::zeros(w[0], w[1]);
        for v in layer.weights.iter_mut() {
            *v = r.f64("weights")?;
        }
        for v in layer.bias.iter_mut() {
            *v = r.f64("biases")?;
        }
        layers.push(layer);
    }
    let log_std = r.f64("log_std")?;
    if r.at != bytes.len() {
        return Err(Error::Format {
            offset: r.at,
            message: format!("{} trailing bytes", bytes.len() - r.at),
        });
    }
    Ok(GaussianMlpPolicy { layers, log_std })
}

pub fn save_policy(policy: &GaussianMlpPolicy, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_bytes(policy))?;
    Ok(())
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<GaussianMlpPolicy> {
    from_bytes(&fs::read(path)?)
}
