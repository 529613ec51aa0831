use serde::{Deserialize, Serialize};

use super::ModelError;

/// Architecture variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Two memory networks sharing every attention and transform parameter.
    #[serde(rename = "MNM")]
    Mnm,
    /// One memory network whose attention sees both entities at once.
    #[serde(rename = "MNM-Single")]
    Single,
    /// Two memory networks with separate attention parameters.
    #[serde(rename = "MNM-DA")]
    DifferentAttention,
    /// Like `Mnm` but with dimension-wise max pooling of the weighted memory.
    #[serde(rename = "MNM-Max")]
    MaxPooling,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Mnm,
        Variant::Single,
        Variant::DifferentAttention,
        Variant::MaxPooling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mnm => "MNM",
            Variant::Single => "MNM-Single",
            Variant::DifferentAttention => "MNM-DA",
            Variant::MaxPooling => "MNM-Max",
        }
    }
}

/// Where entity seeds come from and whether the pair relation vector is
/// fed to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KnowledgeMode {
    /// Averaged word vectors for entities, no relation vector.
    #[serde(rename = "AE")]
    AveragedEntities,
    /// Knowledge-base entity vectors, no relation vector.
    #[serde(rename = "TE")]
    TransEEntities,
    /// Averaged word vectors for entities plus the relation vector.
    #[serde(rename = "AE-TR")]
    AveragedEntitiesWithRelation,
    /// Knowledge-base entity vectors plus the relation vector.
    #[serde(rename = "full")]
    Full,
}

impl KnowledgeMode {
    pub const ALL: [KnowledgeMode; 4] = [
        KnowledgeMode::AveragedEntities,
        KnowledgeMode::TransEEntities,
        KnowledgeMode::AveragedEntitiesWithRelation,
        KnowledgeMode::Full,
    ];

    pub fn uses_kb_entities(self) -> bool {
        matches!(self, KnowledgeMode::TransEEntities | KnowledgeMode::Full)
    }

    pub fn uses_relation(self) -> bool {
        matches!(self, KnowledgeMode::AveragedEntitiesWithRelation | KnowledgeMode::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            KnowledgeMode::AveragedEntities => "AE",
            KnowledgeMode::TransEEntities => "TE",
            KnowledgeMode::AveragedEntitiesWithRelation => "AE-TR",
            KnowledgeMode::Full => "full",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant {s:?} (MNM, MNM-Single, MNM-DA, MNM-Max)"))
    }
}

impl std::str::FromStr for KnowledgeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KnowledgeMode::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown knowledge mode {s:?} (AE, TE, AE-TR, full)"))
    }
}

pub const MAX_LAYERS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnmConfig {
    pub layers: usize,
    pub dim: usize,
    pub variant: Variant,
    pub knowledge: KnowledgeMode,
    pub position_encoding: bool,
    pub seed: u64,
}

impl Default for MnmConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            dim: 100,
            variant: Variant::Mnm,
            knowledge: KnowledgeMode::Full,
            position_encoding: true,
            seed: 1,
        }
    }
}

impl MnmConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(1..=MAX_LAYERS).contains(&self.layers) {
            return Err(ModelError::Config(format!(
                "layers must be in [1, {MAX_LAYERS}], got {}",
                self.layers
            )));
        }
        if self.dim == 0 {
            return Err(ModelError::Config("dim must be positive".into()));
        }
        Ok(())
    }

    /// Number of entity states a pathway carries (2 for the single network).
    pub fn entities_per_pathway(&self) -> usize {
        if self.variant == Variant::Single {
            2
        } else {
            1
        }
    }

    pub fn pathways(&self) -> usize {
        if self.variant == Variant::Single {
            1
        } else {
            2
        }
    }

    /// Width of the attention input `[m_i; e…]`.
    pub fn attention_width(&self) -> usize {
        self.dim * (1 + self.entities_per_pathway())
    }

    /// Width of the classifier input `[e′₁; e′₂; (r)]`.
    pub fn classifier_width(&self) -> usize {
        if self.knowledge.uses_relation() {
            3 * self.dim
        } else {
            2 * self.dim
        }
    }

    /// Closed-form trainable parameter count.
    pub fn expected_param_count(&self) -> usize {
        let attention = self.attention_width() + 1;
        let per_layer = attention + self.dim * self.dim;
        let second = if self.variant == Variant::DifferentAttention {
            attention
        } else {
            0
        };
        self.layers * (per_layer + second) + 2 * self.classifier_width() + 2
    }
}
