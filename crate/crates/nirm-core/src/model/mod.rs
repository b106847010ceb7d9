//! The node-influence ranking model: local feature construction, a shared
//! feature-scoring kernel, stacked multi-head graph-attention layers, and the
//! local/global scoring heads whose sum is the dismantling score.
//!
//! Parameters live in one flat `f64` buffer addressed through [`ParamLayout`],
//! which keeps the optimizer, L2 penalty, finite-difference checks, and
//! serialization uniform across tensors.

mod backward;
mod features;
mod forward;

pub use backward::{loss_and_gradients, loss_value};
pub use features::{build_features, FEATURE_DIM};
pub use forward::{
    ablation_scores, attention_coefficients, feature_score, forward, fuse, gat_forward,
    global_score, local_score, nirm_rank, ForwardState, IntermediateScore,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("model file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Architecture hyperparameters. The defaults are the trained configuration:
/// three attention layers with 8/4/2 heads and 32/16/8-dimensional outputs,
/// a 5→8→1 feature scorer, LeakyReLU slope 0.2, dropout 0.1 on attention
/// coefficients and 0.2 on layer inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Attention heads per layer.
    pub heads: Vec<usize>,
    /// Output embedding dimension per layer; must be divisible by the head count.
    pub layer_dims: Vec<usize>,
    pub leaky_slope: f64,
    pub attention_dropout: f64,
    pub hidden_dropout: f64,
    /// Hidden width of the feature-scoring kernel.
    pub scorer_hidden: usize,
    /// Attention transforms carry no bias terms; recorded here so serialized
    /// models are self-describing.
    pub w2_bias: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            heads: vec![8, 4, 2],
            layer_dims: vec![32, 16, 8],
            leaky_slope: 0.2,
            attention_dropout: 0.1,
            hidden_dropout: 0.2,
            scorer_hidden: 8,
            w2_bias: false,
        }
    }
}

impl ModelConfig {
    pub fn layers(&self) -> usize {
        self.layer_dims.len()
    }

    /// Per-head output dimension of layer `l`.
    pub fn head_dim(&self, l: usize) -> usize {
        self.layer_dims[l] / self.heads[l]
    }

    /// Input dimension of layer `l`; the first layer consumes the scalar
    /// initial score.
    pub fn layer_input_dim(&self, l: usize) -> usize {
        if l == 0 {
            1
        } else {
            self.layer_dims[l - 1]
        }
    }

    pub fn final_dim(&self) -> usize {
        *self.layer_dims.last().expect("at least one layer")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.layer_dims.is_empty() {
            return bad("at least one attention layer required".into());
        }
        if self.layer_dims.len() != self.heads.len() {
            return bad(format!(
                "{} layer dims but {} head counts",
                self.layer_dims.len(),
                self.heads.len()
            ));
        }
        for (l, (&dim, &h)) in self.layer_dims.iter().zip(&self.heads).enumerate() {
            if h == 0 || dim == 0 || dim % h != 0 {
                return bad(format!("layer {l}: dim {dim} not divisible by heads {h}"));
            }
        }
        if self.scorer_hidden == 0 {
            return bad("scorer hidden width must be positive".into());
        }
        for (name, p) in [
            ("attention_dropout", self.attention_dropout),
            ("hidden_dropout", self.hidden_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1)"));
            }
        }
        if self.w2_bias {
            return bad("w2_bias = true is not supported".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Offsets of every named tensor inside the flat parameter buffer.
///
/// Order: feature scorer (`w1a`, `b1a`, `w1b`, `b1b`), then per layer and
/// head the attention vector `a_l{l}_h{h}` (length `2 * head_dim`) and the
/// transform `w2_l{l}_h{h}` (`head_dim x input_dim`, row-major), then the
/// global projection `p`.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    tensors: Vec<TensorInfo>,
    total: usize,
    pub(crate) w1a: usize,
    pub(crate) b1a: usize,
    pub(crate) w1b: usize,
    pub(crate) b1b: usize,
    pub(crate) attention: Vec<Vec<usize>>,
    pub(crate) transform: Vec<Vec<usize>>,
    pub(crate) projection: usize,
}

impl ParamLayout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut tensors = Vec::new();
        let mut offset = 0usize;
        let mut push = |name: String, shape: Vec<usize>, offset: &mut usize| {
            let len: usize = shape.iter().product();
            let at = *offset;
            tensors.push(TensorInfo {
                name,
                shape,
                offset: at,
                len,
            });
            *offset += len;
            at
        };

        let hidden = cfg.scorer_hidden;
        let w1a = push("w1a".into(), vec![hidden, FEATURE_DIM], &mut offset);
        let b1a = push("b1a".into(), vec![hidden], &mut offset);
        let w1b = push("w1b".into(), vec![1, hidden], &mut offset);
        let b1b = push("b1b".into(), vec![1], &mut offset);

        let mut attention = Vec::new();
        let mut transform = Vec::new();
        for l in 0..cfg.layers() {
            let hd = cfg.head_dim(l);
            let in_dim = cfg.layer_input_dim(l);
            let mut a_offsets = Vec::new();
            let mut w_offsets = Vec::new();
            for h in 0..cfg.heads[l] {
                a_offsets.push(push(format!("a_l{l}_h{h}"), vec![2 * hd], &mut offset));
                w_offsets.push(push(format!("w2_l{l}_h{h}"), vec![hd, in_dim], &mut offset));
            }
            attention.push(a_offsets);
            transform.push(w_offsets);
        }
        let projection = push("p".into(), vec![cfg.final_dim()], &mut offset);

        ParamLayout {
            tensors,
            total: offset,
            w1a,
            b1a,
            w1b,
            b1b,
            attention,
            transform,
            projection,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.tensors
    }
}

/// Per-tensor parameter accounting for a config.
#[derive(Debug, Clone)]
pub struct ParamCount {
    pub total: usize,
    pub tensors: Vec<TensorInfo>,
}

pub fn count_parameters(cfg: &ModelConfig) -> ParamCount {
    let layout = ParamLayout::new(cfg);
    ParamCount {
        total: layout.total(),
        tensors: layout.tensors().to_vec(),
    }
}

/// A config plus its flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    config: ModelConfig,
    data: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let total = ParamLayout::new(&config).total();
        Ok(ModelParameters {
            config,
            data: vec![0.0; total],
        })
    }

    pub fn from_values(config: ModelConfig, data: Vec<f64>) -> Result<Self, ModelError> {
        config.validate()?;
        let total = ParamLayout::new(&config).total();
        if data.len() != total {
            return Err(ModelError::Format(format!(
                "expected {total} parameter values, got {}",
                data.len()
            )));
        }
        Ok(ModelParameters { config, data })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(&self.config)
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        let layout = self.layout();
        layout
            .tensors()
            .iter()
            .find(|t| t.name == name)
            .map(|t| &self.data[t.offset..t.offset + t.len])
    }

    /// Self-describing JSON: the config block plus one named entry per tensor
    /// with explicit shape and row-major values. `serde_json` prints floats
    /// in shortest-roundtrip form, so save/load is bit-exact.
    pub fn to_json(&self) -> String {
        let layout = self.layout();
        let tensors: Vec<TensorEntry> = layout
            .tensors()
            .iter()
            .map(|t| TensorEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
                values: self.data[t.offset..t.offset + t.len].to_vec(),
            })
            .collect();
        let file = ModelFile {
            config: self.config.clone(),
            tensors,
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.config.validate()?;
        let layout = ParamLayout::new(&file.config);
        if file.tensors.len() != layout.tensors().len() {
            return Err(ModelError::Format(format!(
                "expected {} tensors, found {}",
                layout.tensors().len(),
                file.tensors.len()
            )));
        }
        let mut data = vec![0.0; layout.total()];
        for (want, got) in layout.tensors().iter().zip(&file.tensors) {
            if want.name != got.name {
                return Err(ModelError::Format(format!(
                    "tensor order mismatch: expected '{}', found '{}'",
                    want.name, got.name
                )));
            }
            if want.shape != got.shape {
                return Err(ModelError::Format(format!(
                    "tensor '{}': expected shape {:?}, found {:?}",
                    want.name, want.shape, got.shape
                )));
            }
            if got.values.len() != want.len {
                return Err(ModelError::Format(format!(
                    "tensor '{}': expected {} values, found {}",
                    want.name,
                    want.len,
                    got.values.len()
                )));
            }
            data[want.offset..want.offset + want.len].copy_from_slice(&got.values);
        }
        Ok(ModelParameters {
            config: file.config,
            data,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    config: ModelConfig,
    tensors: Vec<TensorEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameter_accounting() {
        let count = count_parameters(&ModelConfig::default());
        // feature scorer: 8*5 + 8 + 8 + 1 = 57
        let scorer: usize = count
            .tensors
            .iter()
            .filter(|t| t.name.starts_with("w1") || t.name.starts_with("b1"))
            .map(|t| t.len)
            .sum();
        assert_eq!(scorer, 57);
        // attention + transforms per layer: 96 + 544 + 144 = 784
        for (l, want) in [(0usize, 96usize), (1, 544), (2, 144)] {
            let layer_total: usize = count
                .tensors
                .iter()
                .filter(|t| t.name.contains(&format!("_l{l}_")))
                .map(|t| t.len)
                .sum();
            assert_eq!(layer_total, want, "layer {l}");
        }
        let projection = count.tensors.iter().find(|t| t.name == "p").unwrap();
        assert_eq!(projection.len, 8);
        assert_eq!(count.total, 57 + 784 + 8);
    }

    #[test]
    fn layout_offsets_are_contiguous() {
        let layout = ParamLayout::new(&ModelConfig::default());
        let mut expected = 0;
        for t in layout.tensors() {
            assert_eq!(t.offset, expected);
            assert_eq!(t.len, t.shape.iter().product::<usize>());
            expected += t.len;
        }
        assert_eq!(expected, layout.total());
    }

    #[test]
    fn serialization_round_trip_is_bit_exact() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let cfg = ModelConfig::default();
        let total = ParamLayout::new(&cfg).total();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<f64> = (0..total).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let params = ModelParameters::from_values(cfg, data).unwrap();
        let json = params.to_json();
        let restored = ModelParameters::from_json(&json).unwrap();
        assert_eq!(params.values(), restored.values());
        assert_eq!(params.config(), restored.config());
        // and the re-serialized bytes match too
        assert_eq!(json, restored.to_json());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ModelConfig::default();
        cfg.layer_dims = vec![30, 16, 8]; // 30 not divisible by 8 heads
        assert!(cfg.validate().is_err());

        let mut cfg = ModelConfig::default();
        cfg.heads = vec![8, 4];
        assert!(cfg.validate().is_err());

        let mut cfg = ModelConfig::default();
        cfg.w2_bias = true;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn malformed_model_files_are_rejected() {
        let params = ModelParameters::zeros(ModelConfig::default()).unwrap();
        let json = params.to_json();
        let broken = json.replacen("\"w1a\"", "\"wxx\"", 1);
        assert!(ModelParameters::from_json(&broken).is_err());
        assert!(ModelParameters::from_json("{}").is_err());
    }
}
