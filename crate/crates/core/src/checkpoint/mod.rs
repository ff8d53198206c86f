//! Checkpoint loading and saving.
//!
//! A checkpoint is a directory holding two files:
//!
//! * `config.json` — the [`ModelConfig`] fields in snake_case (an optional
//!   `format_version` key, currently `1`, is accepted for forward
//!   compatibility).
//! * `weights.bin` — raw little-endian `f32` values, all tensors
//!   concatenated row-major in a fixed order: `token_embedding`; then for
//!   each layer in index order: `attn_norm`, `q`, `k`, `v`, `o`,
//!   `ffn_norm`, `gate`, `up`, `down`; then `final_norm`; then
//!   `output_head` if the embeddings are untied.
//!
//! The format is dependency-free and bit-exact: saving and reloading a
//! model reproduces every tensor bitwise, and two saves of the same model
//! produce byte-identical blobs.

mod dataset;
mod tokenizer;

pub use dataset::{load_dataset, DatasetRecord, SUPPORTED_LANGS};
pub use tokenizer::{Tokenizer, BOS_TOKEN, EOS_TOKEN, SPECIAL_TOKENS};

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prng;
use crate::tensor::Matrix;

/// Current checkpoint format version. Bump only on layout changes.
pub const FORMAT_VERSION: u32 = 1;

const CONFIG_FILE: &str = "config.json";
const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("missing checkpoint file: {0}")]
    MissingFile(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown checkpoint format version {0} (this build reads version {FORMAT_VERSION})")]
    UnknownFormatVersion(u32),
    #[error("weight blob size mismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: u64, found: u64 },
    #[error("tensor {tensor} has shape {found:?}, config requires {expected:?}")]
    ShapeMismatch {
        tensor: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite value in tensor {0}")]
    NonFinite(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("tokenizer error: {0}")]
    Tokenizer(String),
}

/// Architecture hyperparameters for a decoder-only transformer
/// (pre-norm RMSNorm, rotary positions, SwiGLU feed-forward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    #[serde(default = "default_rope_theta")]
    pub rope_theta: f64,
    #[serde(default = "default_norm_eps")]
    pub norm_eps: f64,
    #[serde(default)]
    pub tied_embeddings: bool,
}

fn default_rope_theta() -> f64 {
    10000.0
}

fn default_norm_eps() -> f64 {
    1e-5
}

impl ModelConfig {
    /// A small untied byte-vocabulary config, handy for tests and toys.
    pub fn toy(n_layers: usize) -> Self {
        ModelConfig {
            n_layers,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            vocab_size: 258,
            max_seq_len: 2048,
            rope_theta: 10000.0,
            norm_eps: 1e-5,
            tied_embeddings: false,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<(), CheckpointError> {
        let err = |msg: String| Err(CheckpointError::InvalidConfig(msg));
        if self.n_layers < 1 {
            return err("n_layers must be >= 1".into());
        }
        for (name, v) in [
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("max_seq_len", self.max_seq_len),
        ] {
            if v < 1 {
                return err(format!("{name} must be >= 1"));
            }
        }
        if self.vocab_size < 4 {
            return err("vocab_size must be >= 4 (special tokens reserved)".into());
        }
        if self.d_model % self.n_heads != 0 {
            return err(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if !(self.rope_theta > 0.0) {
            return err("rope_theta must be positive".into());
        }
        if !(self.norm_eps > 0.0) {
            return err("norm_eps must be positive".into());
        }
        Ok(())
    }
}

/// One transformer block's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub attn_norm: Vec<f32>, // [d_model]
    pub wq: Matrix,          // [d_model x d_model]
    pub wk: Matrix,          // [d_model x d_model]
    pub wv: Matrix,          // [d_model x d_model]
    pub wo: Matrix,          // [d_model x d_model]
    pub ffn_norm: Vec<f32>,  // [d_model]
    pub w_gate: Matrix,      // [d_model x d_ff]
    pub w_up: Matrix,        // [d_model x d_ff]
    pub w_down: Matrix,      // [d_ff x d_model]
}

/// Full parameter set for a model.
///
/// `output_head` is `None` when the config ties embeddings; the output
/// projection then reads `token_embedding` rows directly (the transpose of
/// the stored matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub token_embedding: Matrix, // [vocab_size x d_model]
    pub layers: Vec<LayerWeights>,
    pub final_norm: Vec<f32>,          // [d_model]
    pub output_head: Option<Matrix>,   // [d_model x vocab_size]
}

impl WeightSet {
    /// Checks every tensor shape against `config` and scans for NaN/Inf.
    pub fn validate(&self, config: &ModelConfig) -> Result<(), CheckpointError> {
        config.validate()?;
        let d = config.d_model;
        let check_mat = |name: String, m: &Matrix, shape: (usize, usize)| {
            if m.shape() != shape {
                return Err(CheckpointError::ShapeMismatch {
                    tensor: name,
                    expected: shape,
                    found: m.shape(),
                });
            }
            if m.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(CheckpointError::NonFinite(name));
            }
            Ok(())
        };
        let check_vec = |name: String, v: &[f32], len: usize| {
            if v.len() != len {
                return Err(CheckpointError::ShapeMismatch {
                    tensor: name,
                    expected: (len, 1),
                    found: (v.len(), 1),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CheckpointError::NonFinite(name));
            }
            Ok(())
        };

        check_mat(
            "token_embedding".into(),
            &self.token_embedding,
            (config.vocab_size, d),
        )?;
        if self.layers.len() != config.n_layers {
            return Err(CheckpointError::InvalidConfig(format!(
                "weight set has {} layers, config requires {}",
                self.layers.len(),
                config.n_layers
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            check_vec(format!("layers.{i}.attn_norm"), &layer.attn_norm, d)?;
            check_mat(format!("layers.{i}.q"), &layer.wq, (d, d))?;
            check_mat(format!("layers.{i}.k"), &layer.wk, (d, d))?;
            check_mat(format!("layers.{i}.v"), &layer.wv, (d, d))?;
            check_mat(format!("layers.{i}.o"), &layer.wo, (d, d))?;
            check_vec(format!("layers.{i}.ffn_norm"), &layer.ffn_norm, d)?;
            check_mat(format!("layers.{i}.gate"), &layer.w_gate, (d, config.d_ff))?;
            check_mat(format!("layers.{i}.up"), &layer.w_up, (d, config.d_ff))?;
            check_mat(format!("layers.{i}.down"), &layer.w_down, (config.d_ff, d))?;
        }
        check_vec("final_norm".into(), &self.final_norm, d)?;
        match (&self.output_head, config.tied_embeddings) {
            (Some(head), false) => check_mat("output_head".into(), head, (d, config.vocab_size))?,
            (None, true) => {}
            (Some(_), true) => {
                return Err(CheckpointError::InvalidConfig(
                    "tied_embeddings set but an output_head is present".into(),
                ))
            }
            (None, false) => {
                return Err(CheckpointError::InvalidConfig(
                    "untied config but no output_head present".into(),
                ))
            }
        }
        Ok(())
    }

    /// Total number of f32 values in serialization order.
    fn param_count(config: &ModelConfig) -> usize {
        let d = config.d_model;
        let per_layer = d + 4 * d * d + d + 2 * d * config.d_ff + config.d_ff * d;
        let head = if config.tied_embeddings {
            0
        } else {
            d * config.vocab_size
        };
        config.vocab_size * d + config.n_layers * per_layer + d + head
    }
}

// Sidecar JSON: the ModelConfig fields plus an optional format_version.
#[derive(Serialize, Deserialize)]
struct ConfigFile {
    #[serde(default = "default_format_version", skip_serializing_if = "is_default_version")]
    format_version: u32,
    #[serde(flatten)]
    config: ModelConfig,
}

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn is_default_version(v: &u32) -> bool {
    *v == FORMAT_VERSION
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads a checkpoint directory, validating shapes and finiteness.
///
/// Fails without returning partial data: any size mismatch, non-finite
/// value, or unknown format version is an error.
pub fn load_model(path: &Path) -> Result<(ModelConfig, WeightSet), CheckpointError> {
    let config_path = path.join(CONFIG_FILE);
    let weights_path = path.join(WEIGHTS_FILE);
    for p in [&config_path, &weights_path] {
        if !p.is_file() {
            return Err(CheckpointError::MissingFile(p.display().to_string()));
        }
    }

    let raw = fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
    let parsed: ConfigFile = serde_json::from_str(&raw)
        .map_err(|e| CheckpointError::InvalidConfig(format!("{}: {e}", config_path.display())))?;
    if parsed.format_version != FORMAT_VERSION {
        return Err(CheckpointError::UnknownFormatVersion(parsed.format_version));
    }
    let config = parsed.config;
    config.validate()?;

    let expected_bytes = (WeightSet::param_count(&config) * 4) as u64;
    let found_bytes = fs::metadata(&weights_path).map_err(io_err(&weights_path))?.len();
    if found_bytes != expected_bytes {
        return Err(CheckpointError::SizeMismatch {
            expected: expected_bytes,
            found: found_bytes,
        });
    }

    let file = fs::File::open(&weights_path).map_err(io_err(&weights_path))?;
    let mut reader = BufReader::new(file);
    let mut read_f32s = |n: usize| -> Result<Vec<f32>, CheckpointError> {
        let mut buf = vec![0u8; n * 4];
        reader.read_exact(&mut buf).map_err(io_err(&weights_path))?;
        Ok(buf
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    };

    let d = config.d_model;
    let token_embedding = Matrix::from_vec(config.vocab_size, d, read_f32s(config.vocab_size * d)?);
    let mut layers = Vec::with_capacity(config.n_layers);
    for _ in 0..config.n_layers {
        layers.push(LayerWeights {
            attn_norm: read_f32s(d)?,
            wq: Matrix::from_vec(d, d, read_f32s(d * d)?),
            wk: Matrix::from_vec(d, d, read_f32s(d * d)?),
            wv: Matrix::from_vec(d, d, read_f32s(d * d)?),
            wo: Matrix::from_vec(d, d, read_f32s(d * d)?),
            ffn_norm: read_f32s(d)?,
            w_gate: Matrix::from_vec(d, config.d_ff, read_f32s(d * config.d_ff)?),
            w_up: Matrix::from_vec(d, config.d_ff, read_f32s(d * config.d_ff)?),
            w_down: Matrix::from_vec(config.d_ff, d, read_f32s(config.d_ff * d)?),
        });
    }
    let final_norm = read_f32s(d)?;
    let output_head = if config.tied_embeddings {
        None
    } else {
        Some(Matrix::from_vec(d, config.vocab_size, read_f32s(d * config.vocab_size)?))
    };

    let weights = WeightSet {
        token_embedding,
        layers,
        final_norm,
        output_head,
    };
    weights.validate(&config)?;
    Ok((config, weights))
}

/// Saves a checkpoint directory (creating it if needed).
///
/// Validates before writing anything, so a bad weight set never leaves a
/// partial artifact on disk.
pub fn save_model(
    config: &ModelConfig,
    weights: &WeightSet,
    path: &Path,
) -> Result<(), CheckpointError> {
    weights.validate(config)?;
    fs::create_dir_all(path).map_err(io_err(path))?;

    let config_path = path.join(CONFIG_FILE);
    let file = ConfigFile {
        format_version: FORMAT_VERSION,
        config: config.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CheckpointError::InvalidConfig(e.to_string()))?;
    fs::write(&config_path, json + "\n").map_err(io_err(&config_path))?;

    let weights_path = path.join(WEIGHTS_FILE);
    let out = fs::File::create(&weights_path).map_err(io_err(&weights_path))?;
    let mut writer = BufWriter::new(out);
    let mut write_f32s = |vals: &[f32]| -> Result<(), CheckpointError> {
        for v in vals {
            writer.write_all(&v.to_le_bytes()).map_err(io_err(&weights_path))?;
        }
        Ok(())
    };

    write_f32s(weights.token_embedding.as_slice())?;
    for layer in &weights.layers {
        write_f32s(&layer.attn_norm)?;
        write_f32s(layer.wq.as_slice())?;
        write_f32s(layer.wk.as_slice())?;
        write_f32s(layer.wv.as_slice())?;
        write_f32s(layer.wo.as_slice())?;
        write_f32s(&layer.ffn_norm)?;
        write_f32s(layer.w_gate.as_slice())?;
        write_f32s(layer.w_up.as_slice())?;
        write_f32s(layer.w_down.as_slice())?;
    }
    write_f32s(&weights.final_norm)?;
    if let Some(head) = &weights.output_head {
        write_f32s(head.as_slice())?;
    }
    writer.flush().map_err(io_err(&weights_path))?;
    Ok(())
}

/// Fills a weight set deterministically from PCG64 (see `prng`).
///
/// Every tensor is drawn in serialization order; each value is
/// `(2u - 1) / sqrt(d_model)` with `u` uniform in `[0, 1)`, so all values
/// lie strictly inside `(-1, 1) / sqrt(d_model)`. The same `(config, seed)`
/// pair always produces identical weights.
pub fn init_random_model(config: &ModelConfig, seed: u64) -> WeightSet {
    let mut rng = prng::seeded(seed);
    let scale = 1.0 / (config.d_model as f64).sqrt();
    let mut draw = |n: usize| -> Vec<f32> {
        (0..n)
            .map(|_| ((2.0 * prng::unit_f64(&mut rng) - 1.0) * scale) as f32)
            .collect()
    };

    let d = config.d_model;
    let token_embedding = Matrix::from_vec(config.vocab_size, d, draw(config.vocab_size * d));
    let mut layers = Vec::with_capacity(config.n_layers);
    for _ in 0..config.n_layers {
        layers.push(LayerWeights {
            attn_norm: draw(d),
            wq: Matrix::from_vec(d, d, draw(d * d)),
            wk: Matrix::from_vec(d, d, draw(d * d)),
            wv: Matrix::from_vec(d, d, draw(d * d)),
            wo: Matrix::from_vec(d, d, draw(d * d)),
            ffn_norm: draw(d),
            w_gate: Matrix::from_vec(d, config.d_ff, draw(d * config.d_ff)),
            w_up: Matrix::from_vec(d, config.d_ff, draw(d * config.d_ff)),
            w_down: Matrix::from_vec(config.d_ff, d, draw(config.d_ff * d)),
        });
    }
    let final_norm = draw(d);
    let output_head = if config.tied_embeddings {
        None
    } else {
        Some(Matrix::from_vec(d, config.vocab_size, draw(d * config.vocab_size)))
    };

    WeightSet {
        token_embedding,
        layers,
        final_norm,
        output_head,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation_catches_bad_dims() {
        let mut cfg = ModelConfig::toy(4);
        cfg.n_heads = 5; // 64 % 5 != 0
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::toy(4);
        cfg.vocab_size = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::toy(4);
        cfg.n_layers = 0;
        assert!(cfg.validate().is_err());
        assert!(ModelConfig::toy(4).validate().is_ok());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let cfg = ModelConfig::toy(2);
        let a = init_random_model(&cfg, 42);
        let b = init_random_model(&cfg, 42);
        assert_eq!(a, b);
        let c = init_random_model(&cfg, 43);
        assert_ne!(a, c);
        // |value| < 10 and finite, scanned over every tensor.
        let scan = |m: &Matrix| m.as_slice().iter().all(|v| v.is_finite() && v.abs() < 10.0);
        assert!(scan(&a.token_embedding));
        for l in &a.layers {
            assert!(scan(&l.wq) && scan(&l.wk) && scan(&l.wv) && scan(&l.wo));
            assert!(scan(&l.w_gate) && scan(&l.w_up) && scan(&l.w_down));
            assert!(l.attn_norm.iter().chain(&l.ffn_norm).all(|v| v.abs() < 10.0));
        }
        assert!(scan(a.output_head.as_ref().unwrap()));
    }

    #[test]
    fn save_load_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::toy(4);
        let weights = init_random_model(&cfg, 7);
        save_model(&cfg, &weights, dir.path()).unwrap();
        let (cfg2, weights2) = load_model(dir.path()).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(weights, weights2);
        assert_eq!(cfg2.n_layers, 4);
        assert_eq!(cfg2.d_model, 64);
    }

    #[test]
    fn two_saves_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::toy(2);
        let weights = init_random_model(&cfg, 7);
        save_model(&cfg, &weights, dir_a.path()).unwrap();
        save_model(&cfg, &weights, dir_b.path()).unwrap();
        let blob_a = fs::read(dir_a.path().join(WEIGHTS_FILE)).unwrap();
        let blob_b = fs::read(dir_b.path().join(WEIGHTS_FILE)).unwrap();
        assert_eq!(blob_a, blob_b);
    }

    #[test]
    fn truncated_blob_is_a_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::toy(2);
        save_model(&cfg, &init_random_model(&cfg, 1), dir.path()).unwrap();
        let weights_path = dir.path().join(WEIGHTS_FILE);
        let mut blob = fs::read(&weights_path).unwrap();
        blob.truncate(blob.len() - 4); // drop one float
        fs::write(&weights_path, blob).unwrap();
        match load_model(dir.path()) {
            Err(CheckpointError::SizeMismatch { .. }) => {}
            other => panic!("expected SizeMismatch, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_weights_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::toy(2);
        let mut weights = init_random_model(&cfg, 1);
        weights.layers[1].wq.as_mut_slice()[10] = f32::NAN;
        assert!(matches!(
            save_model(&cfg, &weights, dir.path()),
            Err(CheckpointError::NonFinite(_))
        ));
        // Nothing was written.
        assert!(!dir.path().join(WEIGHTS_FILE).exists());
    }

    #[test]
    fn shape_mismatch_detected_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::toy(2);
        let mut weights = init_random_model(&cfg, 1);
        weights.final_norm.pop();
        assert!(matches!(
            save_model(&cfg, &weights, dir.path()),
            Err(CheckpointError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn unknown_format_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::toy(2);
        save_model(&cfg, &init_random_model(&cfg, 1), dir.path()).unwrap();
        let config_path = dir.path().join(CONFIG_FILE);
        let raw = fs::read_to_string(&config_path).unwrap();
        let patched = raw.replacen("{", "{\n  \"format_version\": 9,", 1);
        fs::write(&config_path, patched).unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(CheckpointError::UnknownFormatVersion(9))
        ));
    }

    #[test]
    fn missing_files_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(CheckpointError::MissingFile(_))
        ));
    }

    #[test]
    fn tied_checkpoint_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ModelConfig::toy(2);
        cfg.tied_embeddings = true;
        let weights = init_random_model(&cfg, 5);
        assert!(weights.output_head.is_none());
        save_model(&cfg, &weights, dir.path()).unwrap();
        let (cfg2, weights2) = load_model(dir.path()).unwrap();
        assert!(cfg2.tied_embeddings);
        assert_eq!(weights, weights2);
    }
}
