//! Versioned binary persistence for MIPS indexes.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes   b"POLIDX01" (format version baked in)
//! variant          u8        0 = exact, 1 = graph
//! padding          3 bytes
//! p, l             u32, u32
//! -- graph only --
//! m, ef_construction, ef_search   u32 ×3
//! seed             u64
//! entry_point      u32
//! max_level        u32
//! -- payload --
//! embeddings       p·l × f64, row-major
//! -- graph only --
//! per node: n_levels u32, then per level: count u32 + count × u32 ids
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{HnswIndex, MipsConfig, MipsIndex, VectorStore};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"POLIDX01";
const VARIANT_EXACT: u8 = 0;
const VARIANT_GRAPH: u8 = 1;

pub(super) fn save(index: &MipsIndex, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let variant = match index {
        MipsIndex::Exact(_) => VARIANT_EXACT,
        MipsIndex::Graph(_) => VARIANT_GRAPH,
    };
    w.write_u8(variant)?;
    w.write_all(&[0u8; 3])?;
    let store = index.store();
    w.write_u32::<LittleEndian>(store.len() as u32)?;
    w.write_u32::<LittleEndian>(store.dim() as u32)?;

    if let MipsIndex::Graph(graph) = index {
        let params = graph.params();
        w.write_u32::<LittleEndian>(params.m as u32)?;
        w.write_u32::<LittleEndian>(params.ef_construction as u32)?;
        w.write_u32::<LittleEndian>(params.ef_search as u32)?;
        w.write_u64::<LittleEndian>(params.seed)?;
        w.write_u32::<LittleEndian>(graph.entry_point())?;
        w.write_u32::<LittleEndian>(graph.max_level() as u32)?;
    }

    for &v in store.raw() {
        w.write_f64::<LittleEndian>(v)?;
    }

    if let MipsIndex::Graph(graph) = index {
        for levels in graph.adjacency() {
            w.write_u32::<LittleEndian>(levels.len() as u32)?;
            for level in levels {
                w.write_u32::<LittleEndian>(level.len() as u32)?;
                for &id in level {
                    w.write_u32::<LittleEndian>(id)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub(super) fn load(path: &Path) -> Result<MipsIndex> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad index magic {:?}; expected {:?} (wrong file or format version)",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MAGIC),
        )));
    }
    let variant = r.read_u8()?;
    let mut pad = [0u8; 3];
    r.read_exact(&mut pad)?;
    let p = r.read_u32::<LittleEndian>()? as usize;
    let l = r.read_u32::<LittleEndian>()? as usize;
    if p == 0 || l == 0 {
        return Err(Error::Format("index declares an empty embedding matrix".into()));
    }

    let config = if variant == VARIANT_GRAPH {
        let m = r.read_u32::<LittleEndian>()? as usize;
        let ef_construction = r.read_u32::<LittleEndian>()? as usize;
        let ef_search = r.read_u32::<LittleEndian>()? as usize;
        let seed = r.read_u64::<LittleEndian>()?;
        let entry = r.read_u32::<LittleEndian>()?;
        let max_level = r.read_u32::<LittleEndian>()? as usize;
        Some((
            MipsConfig {
                m,
                ef_construction,
                ef_search,
                seed,
            },
            entry,
            max_level,
        ))
    } else if variant == VARIANT_EXACT {
        None
    } else {
        return Err(Error::Format(format!("unknown index variant byte {variant}")));
    };

    let mut data = vec![0f64; p * l];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    let store = VectorStore::from_raw(data, p, l);

    match config {
        None => Ok(MipsIndex::Exact(super::ExactIndex { store })),
        Some((params, entry, max_level)) => {
            let mut connections = Vec::with_capacity(p);
            for _ in 0..p {
                let n_levels = r.read_u32::<LittleEndian>()? as usize;
                let mut levels = Vec::with_capacity(n_levels);
                for _ in 0..n_levels {
                    let count = r.read_u32::<LittleEndian>()? as usize;
                    let mut ids = vec![0u32; count];
                    r.read_u32_into::<LittleEndian>(&mut ids)?;
                    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= p) {
                        return Err(Error::Format(format!(
                            "neighbor id {bad} out of range for catalog of {p}"
                        )));
                    }
                    levels.push(ids);
                }
                connections.push(levels);
            }
            Ok(MipsIndex::Graph(HnswIndex::from_parts(
                store,
                connections,
                entry,
                max_level,
                &params,
            )))
        }
    }
}
