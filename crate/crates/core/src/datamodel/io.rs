//! Dataset directory layout:
//!
//! ```text
//! meta.json     N, C, d_v, d_s, class_names, optional super_class, endianness
//! visual.bin    N x d_v little-endian f32, row-major
//! semantic.bin  C x d_s little-endian f32, row-major
//! labels.bin    N little-endian u32
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Split};
use crate::error::{dim_err, Error, Result};
use crate::Tensor;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    format_version: u32,
    n: usize,
    c: usize,
    d_v: usize,
    d_s: usize,
    class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    super_class: Option<Vec<usize>>,
    endianness: String,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read(path)?)
}

/// Little-endian f32 row-major encoding of a matrix.
pub fn write_matrix_f32(path: &Path, m: &Tensor<f64>) -> Result<()> {
    let mut out = Vec::with_capacity(m.len() * 4);
    for &v in m.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_matrix_f32(path: &Path, rows: usize, cols: usize) -> Result<Tensor<f64>> {
    let bytes = read_file(path)?;
    let want = rows * cols * 4;
    if bytes.len() != want {
        return Err(dim_err(
            "load_dataset",
            format!("{} holds {} bytes, metadata implies {want}", path.display(), bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Tensor::new(vec![rows, cols], data)
}

pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    let meta = DatasetMeta {
        format_version: FORMAT_VERSION,
        n: ds.num_samples(),
        c: ds.num_classes(),
        d_v: ds.d_v(),
        d_s: ds.d_s(),
        class_names: ds.class_names.clone(),
        super_class: ds.super_class.clone(),
        endianness: "little".into(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    write_matrix_f32(&dir.join("visual.bin"), &ds.visual)?;
    write_matrix_f32(&dir.join("semantic.bin"), &ds.semantic)?;
    let mut labels = Vec::with_capacity(ds.labels.len() * 4);
    for &l in &ds.labels {
        let l = u32::try_from(l).map_err(|_| Error::Input(format!("label {l} exceeds u32")))?;
        labels.extend_from_slice(&l.to_le_bytes());
    }
    fs::write(dir.join("labels.bin"), labels)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta: DatasetMeta = serde_json::from_slice(&read_file(&dir.join("meta.json"))?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Version(format!(
            "dataset format {} (expected {FORMAT_VERSION})",
            meta.format_version
        )));
    }
    if meta.endianness != "little" {
        return Err(Error::Input(format!("unsupported endianness {:?}", meta.endianness)));
    }
    if meta.class_names.len() != meta.c {
        return Err(dim_err("load_dataset", format!("C = {} but {} class names", meta.c, meta.class_names.len())));
    }
    let visual = read_matrix_f32(&dir.join("visual.bin"), meta.n, meta.d_v)?;
    let semantic = read_matrix_f32(&dir.join("semantic.bin"), meta.c, meta.d_s)?;
    let raw = read_file(&dir.join("labels.bin"))?;
    if raw.len() != meta.n * 4 {
        return Err(dim_err(
            "load_dataset",
            format!("labels.bin holds {} bytes, metadata implies {}", raw.len(), meta.n * 4),
        ));
    }
    let labels = raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    Dataset::new(visual, semantic, labels, meta.class_names, meta.super_class)
}

pub fn save_split(path: &Path, split: &Split) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(split)?)?;
    Ok(())
}

/// Reads a split file; explicit class lists (for instance published splits)
/// are accepted as-is and validated when paired with a dataset.
pub fn load_split(path: &Path) -> Result<Split> {
    let mut split: Split = serde_json::from_slice(&read_file(path)?)?;
    split.seen_classes.sort_unstable();
    split.unseen_classes.sort_unstable();
    Ok(split)
}
