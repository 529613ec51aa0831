use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::numerics::{
    init_params, read_bundle, seeded_rng, write_bundle, Bundle, InitScheme, Matrix, ParamSet,
    ParamTensor,
};

use super::{MnmConfig, ModelError, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// `1 × (d · (1 + entities))`
    pub weight: ParamTensor,
    /// `1 × 1`
    pub bias: ParamTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub attention: AttentionParams,
    /// `d × d`
    pub transform: ParamTensor,
}

/// Every trainable matrix of the network. Pathways refer to layers by
/// index, so in the shared variants both pathways read the same tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct MnmParams {
    pub config: MnmConfig,
    pub layers: Vec<LayerParams>,
    /// Attention of the second pathway, one per layer; only for `MNM-DA`.
    pub second_attention: Vec<AttentionParams>,
    /// `2 × classifier_width`
    pub classifier: ParamTensor,
    /// `2 × 1`
    pub classifier_bias: ParamTensor,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    format: String,
    version: u32,
    config: MnmConfig,
}

const CHECKPOINT_FORMAT: &str = "mnm-model";
const CHECKPOINT_VERSION: u32 = 1;

impl MnmParams {
    /// Glorot-uniform weights and zero biases drawn from `config.seed`.
    pub fn init(config: &MnmConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        let d = config.dim;
        let width = config.attention_width();
        let attention = |name: String, rng: &mut _| -> Result<AttentionParams, ModelError> {
            Ok(AttentionParams {
                weight: ParamTensor::new(format!("{name}.weight"), init_params(1, width, InitScheme::Xavier, rng)?),
                bias: ParamTensor::new(format!("{name}.bias"), Matrix::zeros(1, 1)),
            })
        };
        let mut layers = Vec::with_capacity(config.layers);
        for k in 1..=config.layers {
            let att = attention(format!("layer{k}.attention"), &mut rng)?;
            let transform = ParamTensor::new(
                format!("layer{k}.transform"),
                init_params(d, d, InitScheme::Xavier, &mut rng)?,
            );
            layers.push(LayerParams {
                attention: att,
                transform,
            });
        }
        let mut second_attention = Vec::new();
        if config.variant == Variant::DifferentAttention {
            for k in 1..=config.layers {
                second_attention.push(attention(format!("layer{k}.attention2"), &mut rng)?);
            }
        }
        let classifier = ParamTensor::new(
            "classifier.weight",
            init_params(2, config.classifier_width(), InitScheme::Xavier, &mut rng)?,
        );
        let classifier_bias = ParamTensor::new("classifier.bias", Matrix::zeros(2, 1));
        Ok(Self {
            config: config.clone(),
            layers,
            second_attention,
            classifier,
            classifier_bias,
        })
    }

    /// Attention used by `pathway` (0 or 1) at layer index `k` (0-based).
    pub fn attention_for(&self, pathway: usize, k: usize) -> &AttentionParams {
        if pathway == 1 && !self.second_attention.is_empty() {
            &self.second_attention[k]
        } else {
            &self.layers[k].attention
        }
    }

    pub(crate) fn attention_for_mut(&mut self, pathway: usize, k: usize) -> &mut AttentionParams {
        if pathway == 1 && !self.second_attention.is_empty() {
            &mut self.second_attention[k]
        } else {
            &mut self.layers[k].attention
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for t in self.tensors_mut() {
            t.zero_grad();
        }
    }

    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> Result<(), ModelError> {
        let meta = CheckpointMeta {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
        };
        let bundle = Bundle {
            metadata: serde_json::to_string(&meta).map_err(|e| ModelError::Checkpoint(e.to_string()))?,
            tensors: self
                .tensors()
                .into_iter()
                .map(|t| (t.name.clone(), t.value.clone()))
                .collect(),
        };
        write_bundle(w, &bundle)?;
        Ok(())
    }

    /// Loads a checkpoint; when `expected` is given its config must match
    /// the stored one.
    pub fn read_checkpoint<R: Read>(r: &mut R, expected: Option<&MnmConfig>) -> Result<Self, ModelError> {
        let bundle = read_bundle(r)?;
        let meta: CheckpointMeta = serde_json::from_str(&bundle.metadata)
            .map_err(|e| ModelError::Checkpoint(format!("bad metadata: {e}")))?;
        if meta.format != CHECKPOINT_FORMAT || meta.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                meta.format, meta.version
            )));
        }
        if let Some(exp) = expected {
            if exp != &meta.config {
                return Err(ModelError::Checkpoint(format!(
                    "checkpoint config {:?} does not match requested {:?}",
                    meta.config, exp
                )));
            }
        }
        let mut params = Self::init(&meta.config)?;
        let stored = bundle.tensors.len();
        let mut expected_count = 0;
        for t in params.tensors_mut() {
            expected_count += 1;
            let m = bundle
                .get(&t.name)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing tensor {}", t.name)))?;
            if m.shape() != t.value.shape() {
                return Err(ModelError::Checkpoint(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    t.name,
                    m.shape(),
                    t.value.shape()
                )));
            }
            t.value = m.clone();
        }
        if stored != expected_count {
            return Err(ModelError::Checkpoint(format!(
                "checkpoint has {stored} tensors, config implies {expected_count}"
            )));
        }
        Ok(params)
    }
}

impl ParamSet for MnmParams {
    fn tensors(&self) -> Vec<&ParamTensor> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.attention.weight);
            out.push(&l.attention.bias);
            out.push(&l.transform);
        }
        for a in &self.second_attention {
            out.push(&a.weight);
            out.push(&a.bias);
        }
        out.push(&self.classifier);
        out.push(&self.classifier_bias);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.attention.weight);
            out.push(&mut l.attention.bias);
            out.push(&mut l.transform);
        }
        for a in &mut self.second_attention {
            out.push(&mut a.weight);
            out.push(&mut a.bias);
        }
        out.push(&mut self.classifier);
        out.push(&mut self.classifier_bias);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KnowledgeMode;

    #[test]
    fn shapes_follow_the_config() {
        for variant in Variant::ALL {
            for knowledge in KnowledgeMode::ALL {
                let cfg = MnmConfig {
                    layers: 3,
                    dim: 5,
                    variant,
                    knowledge,
                    ..MnmConfig::default()
                };
                let p = MnmParams::init(&cfg).unwrap();
                assert_eq!(p.param_count(), cfg.expected_param_count(), "{cfg:?}");
                assert_eq!(p.layers[0].attention.weight.value.shape(), (1, cfg.attention_width()));
                assert_eq!(p.classifier.value.shape(), (2, cfg.classifier_width()));
                assert_eq!(p.second_attention.len(), if variant == Variant::DifferentAttention { 3 } else { 0 });
            }
        }
    }

    #[test]
    fn zero_layers_rejected() {
        let cfg = MnmConfig { layers: 0, ..MnmConfig::default() };
        assert!(MnmParams::init(&cfg).is_err());
        let cfg = MnmConfig { layers: 9, ..MnmConfig::default() };
        assert!(MnmParams::init(&cfg).is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_mismatch() {
        let cfg = MnmConfig { layers: 2, dim: 4, ..MnmConfig::default() };
        let p = MnmParams::init(&cfg).unwrap();
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        let back = MnmParams::read_checkpoint(&mut buf.as_slice(), Some(&cfg)).unwrap();
        assert_eq!(back, p);
        let other = MnmConfig { layers: 3, ..cfg };
        assert!(MnmParams::read_checkpoint(&mut buf.as_slice(), Some(&other)).is_err());
    }
}
