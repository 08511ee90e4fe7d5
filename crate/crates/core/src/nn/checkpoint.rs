//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "OCFK"  magic
//! u32     format version
//! u64     entry count
//! entry*: u32 name length, name bytes (UTF-8), u64 rows, u64 cols,
//!         rows*cols f64 payload
//! ```
//!
//! Entry names are namespaced: `param/`, `buffer/`, `adam/` and `meta/`.
//! Text metadata is stored one byte per `f64` in a `1 x len` entry.

use std::io::{Read, Write};

use indexmap::IndexMap;

use super::{AdamConfig, AdamState, Buffers, ParamSet, Tensor2};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"OCFK";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to resume or run a trained model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub params: ParamSet,
    pub buffers: Buffers,
    pub adam: Option<AdamState>,
    /// Text metadata (architecture descriptor, training record), typically JSON.
    pub meta: IndexMap<String, String>,
}

fn text_entry(s: &str) -> Tensor2 {
    let bytes: Vec<f64> = s.bytes().map(f64::from).collect();
    Tensor2::from_vec(1, bytes.len(), bytes).expect("sized")
}

fn entry_text(name: &str, t: &Tensor2) -> Result<String> {
    let bytes = t
        .data()
        .iter()
        .map(|&v| {
            if (0.0..=255.0).contains(&v) && v.fract() == 0.0 {
                Ok(v as u8)
            } else {
                Err(Error::Checkpoint(format!("entry {name:?} is not text")))
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    String::from_utf8(bytes).map_err(|_| Error::Checkpoint(format!("entry {name:?} is not UTF-8")))
}

impl Checkpoint {
    /// Flattens to named entries in a stable order.
    pub fn to_entries(&self) -> Vec<(String, Tensor2)> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            out.push((format!("meta/{k}"), text_entry(v)));
        }
        for (k, p) in self.params.iter() {
            out.push((format!("param/{k}"), p.value.clone()));
        }
        for (k, v) in &self.buffers {
            out.push((format!("buffer/{k}"), v.clone()));
        }
        if let Some(adam) = &self.adam {
            let c = adam.config;
            out.push((
                "adam/config".into(),
                Tensor2::from_rows(&[&[c.lr, c.beta1, c.beta2, c.eps]]),
            ));
            out.push(("adam/step".into(), Tensor2::filled(1, 1, adam.step as f64)));
            for (k, (m, v)) in &adam.moments {
                out.push((format!("adam/m/{k}"), m.clone()));
                out.push((format!("adam/v/{k}"), v.clone()));
            }
        }
        out
    }

    pub fn from_entries(entries: Vec<(String, Tensor2)>) -> Result<Self> {
        let mut ck = Checkpoint::default();
        let mut adam_config = None;
        let mut adam_step = None;
        let mut firsts: IndexMap<String, Tensor2> = IndexMap::new();
        let mut seconds: IndexMap<String, Tensor2> = IndexMap::new();
        for (name, t) in entries {
            if let Some(k) = name.strip_prefix("meta/") {
                ck.meta.insert(k.to_string(), entry_text(&name, &t)?);
            } else if let Some(k) = name.strip_prefix("param/") {
                ck.params.insert(k, t)?;
            } else if let Some(k) = name.strip_prefix("buffer/") {
                ck.buffers.insert(k.to_string(), t);
            } else if name == "adam/config" {
                if t.shape() != (1, 4) {
                    return Err(Error::Checkpoint("adam/config must be 1x4".into()));
                }
                let d = t.data();
                adam_config = Some(AdamConfig {
                    lr: d[0],
                    beta1: d[1],
                    beta2: d[2],
                    eps: d[3],
                });
            } else if name == "adam/step" {
                adam_step = Some(t.get(0, 0) as u64);
            } else if let Some(k) = name.strip_prefix("adam/m/") {
                firsts.insert(k.to_string(), t);
            } else if let Some(k) = name.strip_prefix("adam/v/") {
                seconds.insert(k.to_string(), t);
            } else {
                return Err(Error::Checkpoint(format!("unrecognized entry {name:?}")));
            }
        }
        if let Some(config) = adam_config {
            let mut state = AdamState::new(config);
            state.step = adam_step.unwrap_or(0);
            for (k, m) in firsts {
                let v = seconds
                    .shift_remove(&k)
                    .ok_or_else(|| Error::Checkpoint(format!("adam moment {k:?} lacks v")))?;
                state.moments.insert(k, (m, v));
            }
            ck.adam = Some(state);
        }
        Ok(ck)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let entries = self.to_entries();
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(entries.len() as u64).to_le_bytes())?;
        for (name, t) in &entries {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(t.rows() as u64).to_le_bytes())?;
            w.write_all(&(t.cols() as u64).to_le_bytes())?;
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic, not an OCFK checkpoint".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let count = read_u64(r)?;
        let mut entries = Vec::new();
        for _ in 0..count {
            let len = read_u32(r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("entry name is not UTF-8".into()))?;
            let rows = read_u64(r)? as usize;
            let cols = read_u64(r)? as usize;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Checkpoint(format!("entry {name:?} too large")))?;
            let mut bytes = vec![0u8; n * 8];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            entries.push((name, Tensor2::from_vec(rows, cols, data)?));
        }
        Self::from_entries(entries)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        Self::read_from(&mut bytes)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
