//! Model checkpoint file.
//!
//! Little-endian layout:
//!
//! ```text
//! "HYCQM1"            6 bytes
//! n, d                u32 each
//! W_p                 d*n f64, row-major
//! b_p                 d f64
//! w_f, b_f            f64 each
//! eps_ball            f64
//! activation tag      u8 (0 = relu)
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Activation, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"HYCQM1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub eps_ball: f64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let p = &self.params;
        p.validate()?;
        let n = u32::try_from(p.n).map_err(|_| Error::InvalidConfig("n exceeds u32".into()))?;
        let d = u32::try_from(p.d).map_err(|_| Error::InvalidConfig("d exceeds u32".into()))?;
        let mut out = Vec::with_capacity(6 + 8 + 8 * (p.num_params() + 1) + 1);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&n.to_le_bytes());
        out.extend_from_slice(&d.to_le_bytes());
        for v in p.w_p.iter().chain(&p.b_p) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [p.w_f, p.b_f, self.eps_ball] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(p.activation.tag());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(6)? != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        let n = r.u32()? as usize;
        let d = r.u32()? as usize;
        if n == 0 || d == 0 {
            return Err(bad("zero dimension"));
        }
        let expected = d
            .checked_mul(n)
            .and_then(|m| m.checked_add(d + 3))
            .and_then(|m| m.checked_mul(8))
            .and_then(|m| m.checked_add(6 + 8 + 1))
            .ok_or_else(|| bad("dimensions overflow"))?;
        if bytes.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes for n={n}, d={d}, found {}",
                bytes.len()
            )));
        }
        let w_p = (0..d * n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let b_p = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let w_f = r.f64()?;
        let b_f = r.f64()?;
        let eps_ball = r.f64()?;
        let activation =
            Activation::from_tag(r.take(1)?[0]).ok_or_else(|| bad("unknown activation tag"))?;
        let params = ModelParams {
            n,
            d,
            w_p,
            b_p,
            w_f,
            b_f,
            activation,
        };
        params.validate()?;
        if !(eps_ball > 0.0 && eps_ball < 0.1) {
            return Err(bad(&format!("eps_ball {eps_ball} out of range")));
        }
        Ok(Self { params, eps_ball })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn bad(reason: &str) -> Error {
    Error::Format {
        what: "checkpoint",
        reason: reason.to_string(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| bad("truncated"))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
