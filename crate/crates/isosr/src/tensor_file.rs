//! Self-describing container for named float32 tensors.
//!
//! ```text
//! magic "ISOSRTNS" | u32 version | u64 header length | JSON header | tensor data (f32 LE)
//! ```
//!
//! The JSON header holds a free-form `meta` object and, per tensor, its name, shape and element
//! offset into the data section.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

const MAGIC: &[u8; 8] = b"ISOSRTNS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    meta: serde_json::Value,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorFile {
    pub meta: serde_json::Value,
    tensors: Vec<TensorInfo>,
    data: Vec<f32>,
}

impl TensorFile {
    pub fn new(meta: serde_json::Value) -> Self {
        Self { meta, tensors: Vec::new(), data: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], values: &[f32]) {
        assert_eq!(shape.iter().product::<usize>(), values.len(), "tensor shape and data disagree");
        self.tensors.push(TensorInfo { name: name.into(), shape: shape.to_vec(), offset: self.data.len() });
        self.data.extend_from_slice(values);
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f32])> {
        let t = self.tensors.iter().find(|t| t.name == name)?;
        let n: usize = t.shape.iter().product();
        Some((&t.shape, &self.data[t.offset..t.offset + n]))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::to_vec(&Header { meta: self.meta.clone(), tensors: self.tensors.clone() })
            .map_err(|e| IoError::format(path, e.to_string()))?;
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let res = (|| {
            w.write_all(MAGIC)?;
            w.write_u32::<LittleEndian>(VERSION)?;
            w.write_u64::<LittleEndian>(header.len() as u64)?;
            w.write_all(&header)?;
            for &v in &self.data {
                w.write_f32::<LittleEndian>(v)?;
            }
            w.flush()
        })();
        res.map_err(|e| IoError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| IoError::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| IoError::io(path, e))?;
        if &magic != MAGIC {
            return Err(IoError::format(path, "not a tensor file"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(|e| IoError::io(path, e))?;
        if version != VERSION {
            return Err(IoError::Mismatch(format!("{}: tensor file version {version}, expected {VERSION}", path.display())));
        }
        let len = r.read_u64::<LittleEndian>().map_err(|e| IoError::io(path, e))? as usize;
        let mut header = Vec::new();
        (&mut r).take(len as u64).read_to_end(&mut header).map_err(|e| IoError::io(path, e))?;
        if header.len() != len {
            return Err(IoError::format(path, "truncated header"));
        }
        let header: Header = serde_json::from_slice(&header).map_err(|e| IoError::format(path, e.to_string()))?;
        let total = header
            .tensors
            .iter()
            .map(|t| t.offset + t.shape.iter().product::<usize>())
            .max()
            .unwrap_or(0);
        let mut data = vec![0f32; total];
        r.read_f32_into::<LittleEndian>(&mut data).map_err(|e| IoError::io(path, e))?;
        Ok(Self { meta: header.meta, tensors: header.tensors, data })
    }
}
