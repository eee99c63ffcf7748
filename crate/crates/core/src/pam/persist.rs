//! Binary weight file.
//!
//! Little-endian layout:
//!
//! ```text
//! "PAMW" | u32 version | u32 n_c | u32 n_k | u32 w
//! f64 theta_a | f64 theta_b | f64 eta_a_plus | f64 eta_a_minus | f64 eta_b_plus | f64 eta_b_minus
//! u64 rng state | n_c x u32 start-context rows
//! A: (n_c*n_k)^2 f32 row-major | B: n_c^2 f32 row-major
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! Iteration caps, `weight_init_std` and `sample_width` are not stored and
//! load at their defaults.

use std::path::Path;

use super::{PamModel, PamParams};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const MAGIC: &[u8; 4] = b"PAMW";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 * 4 + 6 * 8 + 8;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(Error::Format {
                offset: self.buf.len(),
                reason: format!("truncated: need {end} bytes"),
            });
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32_block(&mut self, count: usize) -> Result<Vec<f32>> {
        let start = self.pos;
        let raw = self.take(count * 4)?;
        raw.chunks_exact(4)
            .enumerate()
            .map(|(k, c)| {
                let v = f32::from_le_bytes(c.try_into().unwrap());
                if v.is_finite() && (-1.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(Error::Format {
                        offset: start + 4 * k,
                        reason: format!("weight {v} outside [-1, 1]"),
                    })
                }
            })
            .collect()
    }
}

impl PamModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let latent = p.latent_size();
        let mut out = Vec::with_capacity(
            HEADER_LEN + 4 * (p.n_c + latent * latent + p.n_c * p.n_c) + 4,
        );
        out.extend_from_slice(MAGIC);
        for v in [FORMAT_VERSION, p.n_c as u32, p.n_k as u32, p.w as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [
            p.theta_a,
            p.theta_b,
            p.eta_a_plus,
            p.eta_a_minus,
            p.eta_b_plus,
            p.eta_b_minus,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.rng.state().to_le_bytes());
        for r in &self.start_rows {
            out.extend_from_slice(&r.to_le_bytes());
        }
        for w in self.transition.iter().chain(&self.emission) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format {
                offset: 0,
                reason: "bad magic".into(),
            });
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format {
                offset: 4,
                reason: format!("unsupported version {version}"),
            });
        }
        let n_c = r.u32()? as usize;
        let n_k = r.u32()? as usize;
        let w = r.u32()? as usize;
        let mut params = PamParams::new(n_c, n_k, w);
        params.theta_a = r.f64()?;
        params.theta_b = r.f64()?;
        params.eta_a_plus = r.f64()?;
        params.eta_a_minus = r.f64()?;
        params.eta_b_plus = r.f64()?;
        params.eta_b_minus = r.f64()?;
        params.validate().map_err(|e| Error::Format {
            offset: 8,
            reason: e.to_string(),
        })?;
        let rng = Rng::from_state(r.u64()?);

        let latent = params.latent_size();
        let expected = HEADER_LEN + 4 * (n_c + latent * latent + n_c * n_c) + 4;
        if bytes.len() != expected {
            return Err(Error::Format {
                offset: bytes.len().min(expected),
                reason: format!("expected {expected} bytes, found {}", bytes.len()),
            });
        }
        let payload_len = expected - 4;
        let stored = u32::from_le_bytes(bytes[payload_len..].try_into().unwrap());
        if crc32fast::hash(&bytes[..payload_len]) != stored {
            return Err(Error::Format {
                offset: payload_len,
                reason: "checksum mismatch".into(),
            });
        }

        let mut start_rows = Vec::with_capacity(n_c);
        for _ in 0..n_c {
            let at = r.pos;
            let row = r.u32()?;
            if row as usize >= n_k {
                return Err(Error::Format {
                    offset: at,
                    reason: format!("start row {row} >= n_k {n_k}"),
                });
            }
            start_rows.push(row);
        }
        let transition = r.f32_block(latent * latent)?;
        let emission = r.f32_block(n_c * n_c)?;
        Ok(Self {
            params,
            transition,
            emission,
            start_rows,
            rng,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
