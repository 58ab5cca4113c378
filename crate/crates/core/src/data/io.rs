//! On-disk formats for prepared datasets.
//!
//! A prepared-dataset directory contains:
//!
//! - `meta.json` — [`super::DatasetMeta`].
//! - `beta.bin`, `contexts_train.bin`, `contexts_test.bin` — matrices in
//!   the shared binary layout: a 16-byte header (`b"POMAT001"`, rows `u32`,
//!   cols `u32`, little-endian) followed by row-major `f64` values.
//!   Policy parameters are saved in the same layout.
//! - `labels_train.txt`, `labels_test.txt` — one line per context row:
//!   `<dense user id>: <space-separated held-out item ids>`.
//! - `user_ids.txt`, `item_ids.txt` — dense-to-raw id maps, one raw id per
//!   line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::svd::CsrBinaryMatrix;
use super::{DatasetMeta, EmbeddedDataset, InteractionDataset, PreparedDataset};
use crate::error::{Error, Result};
use crate::policy::{ItemEmbeddings, PolicyParams};

pub const PREPARED_FORMAT_VERSION: u32 = 1;
const MATRIX_MAGIC: &[u8; 8] = b"POMAT001";

/// FNV-1a over the little-endian bytes of a matrix plus its shape.
pub fn fingerprint_matrix(m: &Array2<f64>) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        }
    };
    eat(&(m.nrows() as u64).to_le_bytes());
    eat(&(m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        eat(&v.to_le_bytes());
    }
    hash
}

/// FNV-1a over a sparse binary matrix's structure.
pub fn fingerprint_csr(m: &CsrBinaryMatrix) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        }
    };
    eat(&(m.n_rows() as u64).to_le_bytes());
    eat(&(m.n_cols() as u64).to_le_bytes());
    for r in 0..m.n_rows() {
        for &c in m.row(r) {
            eat(&c.to_le_bytes());
        }
        eat(&u32::MAX.to_le_bytes());
    }
    hash
}

/// Write a matrix in the shared binary layout.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_u32::<LittleEndian>(m.nrows() as u32)?;
    w.write_u32::<LittleEndian>(m.ncols() as u32)?;
    for &v in m.iter() {
        w.write_f64::<LittleEndian>(v)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Format(format!(
            "bad matrix magic in {}: {:?}",
            path.display(),
            String::from_utf8_lossy(&magic)
        )));
    }
    let rows = r.read_u32::<LittleEndian>()? as usize;
    let cols = r.read_u32::<LittleEndian>()? as usize;
    let mut data = vec![0f64; rows * cols];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| Error::Format(format!("matrix shape: {e}")))
}

pub fn write_params(path: &Path, params: &PolicyParams) -> Result<()> {
    write_matrix(path, params.matrix())
}

pub fn read_params(path: &Path) -> Result<PolicyParams> {
    PolicyParams::new(read_matrix(path)?)
}

fn write_labels(path: &Path, users: &[usize], labels: &[Vec<u32>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (&user, items) in users.iter().zip(labels) {
        let joined: Vec<String> = items.iter().map(|i| i.to_string()).collect();
        writeln!(w, "{user}: {}", joined.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

fn read_labels(path: &Path) -> Result<(Vec<usize>, Vec<Vec<u32>>)> {
    let mut users = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (user, rest) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "expected `<user>: <items>`".into(),
        })?;
        let user: usize = user.trim().parse().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("bad user index: {e}"),
        })?;
        let items = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad item id {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        users.push(user);
        labels.push(items);
    }
    Ok((users, labels))
}

fn write_id_map(path: &Path, ids: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for id in ids {
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dense-to-raw id map written by the prepare step.
pub fn read_id_map(path: &Path) -> Result<Vec<String>> {
    BufReader::new(File::open(path)?)
        .lines()
        .map(|l| l.map_err(Error::from))
        .collect()
}

/// Write a prepared dataset (and the id maps of its source) to `dir`.
pub fn save_prepared(dir: &Path, prepared: &PreparedDataset, source: &InteractionDataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let meta = serde_json::to_string_pretty(&prepared.meta)
        .map_err(|e| Error::Format(format!("meta serialization: {e}")))?;
    std::fs::write(dir.join("meta.json"), meta)?;
    write_matrix(&dir.join("beta.bin"), prepared.beta.matrix())?;
    write_matrix(&dir.join("contexts_train.bin"), &prepared.train.contexts)?;
    write_matrix(&dir.join("contexts_test.bin"), &prepared.test.contexts)?;
    write_labels(
        &dir.join("labels_train.txt"),
        &prepared.train.users,
        &prepared.train.labels,
    )?;
    write_labels(
        &dir.join("labels_test.txt"),
        &prepared.test.users,
        &prepared.test.labels,
    )?;
    write_id_map(&dir.join("user_ids.txt"), source.user_ids())?;
    write_id_map(&dir.join("item_ids.txt"), source.item_ids())?;
    Ok(())
}

/// Load a prepared dataset directory written by [`save_prepared`].
pub fn load_prepared(dir: &Path) -> Result<PreparedDataset> {
    let meta_text = std::fs::read_to_string(dir.join("meta.json"))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Format(format!("meta.json: {e}")))?;
    if meta.format_version != PREPARED_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "prepared dataset format version {} unsupported (expected {})",
            meta.format_version, PREPARED_FORMAT_VERSION
        )));
    }
    let beta = ItemEmbeddings::new(read_matrix(&dir.join("beta.bin"))?)?;
    let fingerprint = fingerprint_matrix(beta.matrix());
    if format!("{fingerprint:016x}") != meta.beta_fingerprint {
        return Err(Error::Format(
            "beta.bin does not match the fingerprint recorded in meta.json".into(),
        ));
    }

    let load_split = |contexts: &str, labels: &str| -> Result<EmbeddedDataset> {
        let contexts = read_matrix(&dir.join(contexts))?;
        let (users, labels) = read_labels(&dir.join(labels))?;
        if contexts.nrows() != users.len() {
            return Err(Error::Format(format!(
                "{} rows vs {} label lines",
                contexts.nrows(),
                users.len()
            )));
        }
        Ok(EmbeddedDataset {
            contexts,
            labels,
            users,
            beta_fingerprint: fingerprint,
        })
    };

    let train = load_split("contexts_train.bin", "labels_train.txt")?;
    let test = load_split("contexts_test.bin", "labels_test.txt")?;
    Ok(PreparedDataset {
        meta,
        beta,
        train,
        test,
    })
}
