//! Precomputed per-residue embedding files.
//!
//! Little-endian binary: header `"KEPLAEMB"`, version `u32`, `D_p` `u32`,
//! record count `u64`; then per record the id length `u16`, id bytes, `K`
//! `u32` and a row-major `f32` matrix of `D_p x K`. A text sidecar
//! `<file>.idx` lists `id<TAB>offset<TAB>K` per record.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use crate::kernel::Tensor;

use super::EncoderError;

pub const EMB_MAGIC: &[u8; 8] = b"KEPLAEMB";
pub const EMB_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8;

/// In-memory map from protein id to its `D_p x K` residue matrix.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EmbeddingStore {
    dim: usize,
    records: BTreeMap<String, Tensor>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    pub id: String,
    pub offset: u64,
    pub len: usize,
}

pub fn index_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".idx");
    PathBuf::from(s)
}

fn format_err(path: &Path, msg: impl std::fmt::Display) -> EncoderError {
    EncoderError::Format(format!("{}: {msg}", path.display()))
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self { dim, records: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, matrix: Tensor) -> Result<(), EncoderError> {
        let id = id.into();
        if matrix.rows() != self.dim {
            return Err(EncoderError::Input(format!(
                "embedding for {id} has {} rows, expected {}",
                matrix.rows(),
                self.dim
            )));
        }
        if id.len() > u16::MAX as usize {
            return Err(EncoderError::Input("embedding id too long".into()));
        }
        self.records.insert(id, matrix);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Tensor> {
        self.records.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Writes the binary file and its index sidecar. Records are ordered by id.
    pub fn save(&self, path: &Path) -> Result<(), EncoderError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(EMB_MAGIC);
        buf.extend_from_slice(&EMB_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        let mut index = String::new();
        for (id, m) in &self.records {
            index.push_str(&format!("{id}\t{}\t{}\n", buf.len(), m.cols()));
            buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
            buf.extend_from_slice(id.as_bytes());
            buf.extend_from_slice(&(m.cols() as u32).to_le_bytes());
            for &v in m.data() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        fs::write(path, buf)?;
        fs::write(index_path(path), index)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EncoderError> {
        let bytes = fs::read(path)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0, path };
        let (dim, count) = cur.header()?;
        let mut store = Self::new(dim);
        for _ in 0..count {
            let (id, m) = cur.record(dim)?;
            if store.records.insert(id.clone(), m).is_some() {
                return Err(format_err(path, format!("duplicate id {id}")));
            }
        }
        if cur.pos != bytes.len() {
            return Err(format_err(path, "trailing bytes after last record"));
        }
        Ok(store)
    }
}

pub fn load_index(path: &Path) -> Result<Vec<IndexEntry>, EncoderError> {
    let ipath = index_path(path);
    let text = fs::read_to_string(&ipath)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || format_err(&ipath, format!("line {}: expected id, offset, K", n + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(IndexEntry {
                id: f[0].to_string(),
                offset: f[1].parse().map_err(|_| bad())?,
                len: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Reads one record through its index entry without loading the whole file.
pub fn read_record(path: &Path, entry: &IndexEntry) -> Result<Tensor, EncoderError> {
    let mut file = fs::File::open(path)?;
    let mut head = [0u8; HEADER_LEN];
    file.read_exact(&mut head)?;
    let (dim, _) = Cursor { bytes: &head, pos: 0, path }.header()?;
    file.seek(SeekFrom::Start(entry.offset))?;
    let size = 2 + entry.id.len() + 4 + dim * entry.len * 4;
    let mut buf = vec![0u8; size];
    file.read_exact(&mut buf)?;
    let (id, m) = Cursor { bytes: &buf, pos: 0, path }.record(dim)?;
    if id != entry.id {
        return Err(format_err(path, format!("index points at {id}, expected {}", entry.id)));
    }
    Ok(m)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EncoderError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format_err(self.path, "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, EncoderError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, EncoderError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, EncoderError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn header(&mut self) -> Result<(usize, u64), EncoderError> {
        if self.take(8)? != EMB_MAGIC {
            return Err(format_err(self.path, "bad magic"));
        }
        let version = self.u32()?;
        if version != EMB_VERSION {
            return Err(format_err(self.path, format!("unsupported version {version}")));
        }
        let dim = self.u32()? as usize;
        Ok((dim, self.u64()?))
    }

    fn record(&mut self, dim: usize) -> Result<(String, Tensor), EncoderError> {
        let n = self.u16()? as usize;
        let id = std::str::from_utf8(self.take(n)?)
            .map_err(|_| format_err(self.path, "id is not UTF-8"))?
            .to_string();
        let k = self.u32()? as usize;
        let raw = self.take(dim * k * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        let m = Tensor::new(dim, k, data).map_err(|e| format_err(self.path, e))?;
        Ok((id, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_index() {
        let dir = std::env::temp_dir().join(format!("kepla-emb-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.emb");
        let mut store = EmbeddingStore::new(2);
        store.insert("P2", Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]]).unwrap()).unwrap();
        store.insert("P1", Tensor::from_rows(&[vec![0.25], vec![-1.0]]).unwrap()).unwrap();
        store.save(&path).unwrap();
        assert_eq!(EmbeddingStore::load(&path).unwrap(), store);
        let index = load_index(&path).unwrap();
        assert_eq!(index.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["P1", "P2"]);
        assert_eq!(index[0].offset, HEADER_LEN as u64);
        assert_eq!(&read_record(&path, &index[1]).unwrap(), store.get("P2").unwrap());
        assert!(store.insert("bad", Tensor::zeros(3, 1)).is_err());

        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(EmbeddingStore::load(&path), Err(EncoderError::Format(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
