//! IDT1 point-cloud container and run manifests.
//!
//! Container layout, all little-endian, no padding:
//!
//! ```text
//! offset  size      field
//! 0       4         magic "IDT1"
//! 4       1         dtype (0x00 = f32)
//! 5       1         rank (always 2)
//! 6       8         rows N (u64)
//! 14      8         cols D (u64)
//! 22      4*N*D     row-major f32 payload
//! ```

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"IDT1";
pub const DTYPE_F32: u8 = 0x00;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 2 * 8;

/// Serializes a row-major matrix into IDT1 bytes.
///
/// This is the raw format layer: it checks shape and finiteness but not
/// the point-cloud minimum size, so it can describe any matrix.
pub fn encode_matrix(values: &[f64], rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows.checked_mul(cols) != Some(values.len()) {
        return Err(Error::InvalidCloud(format!(
            "{} values do not fill a {rows}x{cols} matrix",
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    out.extend_from_slice(MAGIC);
    out.push(DTYPE_F32);
    out.push(2);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for (i, &v) in values.iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::InvalidCloud(format!(
                "value {v} at flat index {i} is not a finite f32"
            )));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

/// Parses IDT1 bytes into `(values, rows, cols)`.
pub fn decode_matrix(bytes: &[u8]) -> Result<(Vec<f64>, usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"IDT1\"",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    if bytes[4] != DTYPE_F32 {
        return Err(Error::Format(format!("unsupported dtype code 0x{:02x}", bytes[4])));
    }
    if bytes[5] != 2 {
        return Err(Error::Format(format!("rank {} is not 2", bytes[5])));
    }
    let rows = read_u64(&bytes[6..14]);
    let cols = read_u64(&bytes[14..22]);
    let payload = &bytes[HEADER_LEN..];
    let count = usize::try_from(rows)
        .ok()
        .zip(usize::try_from(cols).ok())
        .and_then(|(r, c)| r.checked_mul(c))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| Error::Format(format!("shape {rows}x{cols} overflows")))?;
    if payload.len() != count * 4 {
        return Err(Error::Format(format!(
            "declared {rows}x{cols} needs {} payload bytes, found {}",
            count * 4,
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((values, rows as usize, cols as usize))
}

fn read_u64(b: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf.copy_from_slice(b);
    u64::from_le_bytes(buf)
}

pub fn cloud_to_bytes(cloud: &PointCloud) -> Result<Vec<u8>> {
    encode_matrix(cloud.as_slice(), cloud.n_points(), cloud.dim())
}

/// Parses IDT1 bytes and validates the result as a point cloud. Any
/// content that is not a valid cloud is reported as a format error.
pub fn cloud_from_bytes(bytes: &[u8]) -> Result<PointCloud> {
    let (values, rows, cols) = decode_matrix(bytes)?;
    PointCloud::new(values, rows, cols).map_err(|e| match e {
        Error::InvalidCloud(msg) => Error::Format(msg),
        other => other,
    })
}

pub fn write_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = cloud_to_bytes(cloud)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    cloud_from_bytes(&bytes)
}

/// Experimental condition a run was recorded under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Paradigm {
    /// In-context learning with `k` demonstrations; `k = 0` is the zero-shot baseline.
    Icl { k: u64 },
    /// Fine-tuned checkpoint after `step` gradient updates.
    Sft { step: u64 },
}

impl Paradigm {
    pub fn is_zero_shot(&self) -> bool {
        matches!(self, Paradigm::Icl { k: 0 })
    }

    /// Label used when grouping runs across models and datasets, e.g.
    /// `icl-5` or `sft`. Fine-tuning steps are not part of the label.
    pub fn label(&self) -> String {
        match self {
            Paradigm::Icl { k } => format!("icl-{k}"),
            Paradigm::Sft { .. } => "sft".to_string(),
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Paradigm::Icl { k } => write!(f, "icl-{k}"),
            Paradigm::Sft { step } => write!(f, "sft-{step}"),
        }
    }
}

/// Description of one extraction run: which model and dataset, under which
/// paradigm, and where each layer's cloud lives.
///
/// `layer_files[i]` holds layer `i`; index 0 is the embedding output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model_name: String,
    pub dataset_name: String,
    pub paradigm: Paradigm,
    pub layer_files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Free-form run details (e.g. fine-tuning hyperparameters); carried, not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
    /// Directory relative layer paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunManifest {
    pub fn layer_count(&self) -> usize {
        self.layer_files.len()
    }

    pub fn layer_path(&self, index: usize) -> PathBuf {
        self.base_dir.join(&self.layer_files[index])
    }

    pub fn layer_paths(&self) -> Vec<PathBuf> {
        (0..self.layer_files.len()).map(|i| self.layer_path(i)).collect()
    }

    /// Parses and validates manifest JSON without touching layer files.
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: RunManifest =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_files.is_empty() {
            return Err(Error::Format("manifest lists no layer files".into()));
        }
        if let Some(acc) = self.accuracy {
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::Format(format!("accuracy {acc} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Reads a manifest and checks that every layer file exists, resolving
/// relative paths against the manifest's own directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest = RunManifest::from_json(&text)?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for layer in manifest.layer_paths() {
        if !layer.is_file() {
            return Err(Error::MissingLayerFile(layer));
        }
    }
    Ok(manifest)
}

pub fn write_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, manifest.to_json() + "\n").map_err(|e| Error::io(path, e))
}
