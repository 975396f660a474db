//! Externally produced pair vectors, keyed by `(text_hash(a), text_hash(b))`.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic    4 bytes  "CQPV"
//! version  u32      1
//! dim      u32
//! count    u64
//! count × { hash_a u64, hash_b u64, dim × f32 }
//! ```
//!
//! JSON layout: `{"dim": D, "entries": [{"a": u64, "b": u64, "vector": [..]}]}`.
//! The reader picks the format from the leading magic bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::encoder::{text_hash, PairEncoder};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CQPV";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrecomputedTable {
    dim: usize,
    vectors: HashMap<(u64, u64), Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    a: u64,
    b: u64,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    dim: usize,
    entries: Vec<JsonEntry>,
}

impl PrecomputedTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, text_a: &str, text_b: &str, vector: Vec<f64>) -> Result<()> {
        self.insert_hashed(text_hash(text_a), text_hash(text_b), vector)
    }

    pub fn insert_hashed(&mut self, a: u64, b: u64, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector of length {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite entry for pair ({a:016x}, {b:016x})"
            )));
        }
        self.vectors.insert((a, b), vector);
        Ok(())
    }

    fn sorted_keys(&self) -> Vec<(u64, u64)> {
        let mut keys: Vec<_> = self.vectors.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn write_binary(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        w.write_u64::<LittleEndian>(self.vectors.len() as u64)?;
        for key in self.sorted_keys() {
            w.write_u64::<LittleEndian>(key.0)?;
            w.write_u64::<LittleEndian>(key.1)?;
            for v in &self.vectors[&key] {
                w.write_f32::<LittleEndian>(*v as f32)?;
            }
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let bad = |m: &str| Error::Invalid(format!("precomputed table: {m}"));
        let io = |e: std::io::Error| bad(&e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io)?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let dim = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let count = r.read_u64::<LittleEndian>().map_err(io)?;
        let mut table = Self::new(dim);
        for _ in 0..count {
            let a = r.read_u64::<LittleEndian>().map_err(io)?;
            let b = r.read_u64::<LittleEndian>().map_err(io)?;
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                v.push(r.read_f32::<LittleEndian>().map_err(io)? as f64);
            }
            table.insert_hashed(a, b, v)?;
        }
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String> {
        let t = JsonTable {
            dim: self.dim,
            entries: self
                .sorted_keys()
                .into_iter()
                .map(|k| JsonEntry {
                    a: k.0,
                    b: k.1,
                    vector: self.vectors[&k].clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&t)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: JsonTable = serde_json::from_str(text)?;
        let mut table = Self::new(t.dim);
        for e in t.entries {
            table.insert_hashed(e.a, e.b, e.vector)?;
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(MAGIC) {
            Self::read_binary(&mut bytes.as_slice())
        } else {
            Self::from_json(std::str::from_utf8(&bytes).map_err(|e| Error::Invalid(e.to_string()))?)
        }
    }

    pub fn write(&self, path: impl AsRef<Path>, binary: bool) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        if binary {
            self.write_binary(&mut w).map_err(|e| Error::io(path, e))?;
        } else {
            w.write_all(self.to_json()?.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl PairEncoder for PrecomputedTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text_a: &str, text_b: &str) -> Result<Vec<f64>> {
        let key = (text_hash(text_a), text_hash(text_b));
        self.vectors.get(&key).cloned().ok_or(Error::MissingPair(key.0, key.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PrecomputedTable {
        let mut t = PrecomputedTable::new(3);
        t.insert("rice", "rice university", vec![0.5, -1.0, 2.0]).unwrap();
        t.insert("rice university", "rice", vec![0.25, 0.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn lookup_is_ordered_pair() {
        let t = table();
        assert_eq!(t.encode("rice", "rice university").unwrap(), vec![0.5, -1.0, 2.0]);
        assert_eq!(t.encode("rice university", "rice").unwrap()[0], 0.25);
        assert!(matches!(t.encode("x", "y"), Err(Error::MissingPair(..))));
        assert!(PrecomputedTable::new(2).insert("a", "b", vec![1.0]).is_err());
    }

    #[test]
    fn binary_layout() {
        let t = table();
        let mut bytes = Vec::new();
        t.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"CQPV");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 8 + 2 * (16 + 3 * 4));
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(PrecomputedTable::read_binary(&mut bytes.as_slice()).unwrap(), t);
    }

    #[test]
    fn files_in_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let t = table();
        for (name, binary) in [("t.bin", true), ("t.json", false)] {
            let p = dir.path().join(name);
            t.write(&p, binary).unwrap();
            assert_eq!(PrecomputedTable::read(&p).unwrap(), t);
        }
    }
}
