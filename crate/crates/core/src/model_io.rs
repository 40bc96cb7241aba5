//! Model files.
//!
//! Layout: the line `sidkit-model`, one line of JSON header (format
//! version, model kind and everything needed to rebuild the model except
//! weights), then the weight arrays as little-endian `f64` in header order.
//! Array lengths follow from the header, and trailing bytes are an error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DialectLabel, LabelVocab};
use crate::dialect::{DialectClassifier, SvmModel};
use crate::features::FeatureConfig;
use crate::joint::JointLinearModel;

const MAGIC: &[u8] = b"sidkit-model\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("not a sidkit model file")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("malformed model header: {0}")]
    Header(String),
    #[error("model file truncated: expected {expected} weight bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Header {
    Joint {
        format_version: u32,
        vocab: LabelVocab,
        features: FeatureConfig,
    },
    Svm {
        format_version: u32,
        classes: Vec<DialectLabel>,
        dimension: usize,
    },
    Majority {
        format_version: u32,
        label: DialectLabel,
    },
    Random {
        format_version: u32,
        distribution: Vec<(DialectLabel, f64)>,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Joint(JointLinearModel),
    Dialect(DialectClassifier),
}

fn push_array(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Joint(_) => "joint",
            SavedModel::Dialect(DialectClassifier::Svm(_)) => "svm",
            SavedModel::Dialect(DialectClassifier::Majority(_)) => "majority",
            SavedModel::Dialect(DialectClassifier::Random { .. }) => "random",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let format_version = FORMAT_VERSION;
        let (header, arrays): (Header, Vec<&[f64]>) = match self {
            SavedModel::Joint(m) => (
                Header::Joint {
                    format_version,
                    vocab: m.vocab().clone(),
                    features: m.feature_config().clone(),
                },
                vec![m.intent_weights(), m.intent_bias(), m.slot_weights(), m.slot_bias()],
            ),
            SavedModel::Dialect(DialectClassifier::Svm(m)) => (
                Header::Svm {
                    format_version,
                    classes: m.classes().to_vec(),
                    dimension: m.dimension(),
                },
                vec![m.weights()],
            ),
            SavedModel::Dialect(DialectClassifier::Majority(label)) => (
                Header::Majority { format_version, label: *label },
                vec![],
            ),
            SavedModel::Dialect(DialectClassifier::Random { distribution, seed }) => (
                Header::Random {
                    format_version,
                    distribution: distribution.clone(),
                    seed: *seed,
                },
                vec![],
            ),
        };
        let mut out = MAGIC.to_vec();
        out.extend(serde_json::to_vec(&header).expect("header serialises"));
        out.push(b'\n');
        for a in arrays {
            push_array(&mut out, a);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelIoError> {
        let rest = bytes.strip_prefix(MAGIC).ok_or(ModelIoError::BadMagic)?;
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ModelIoError::Header("missing header line".into()))?;
        let (header, body) = (&rest[..nl], &rest[nl + 1..]);

        let value: serde_json::Value =
            serde_json::from_slice(header).map_err(|e| ModelIoError::Header(e.to_string()))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ModelIoError::Header("missing format_version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(ModelIoError::Version { found });
        }
        let header: Header =
            serde_json::from_value(value).map_err(|e| ModelIoError::Header(e.to_string()))?;

        let mut reader = ArrayReader { body, pos: 0 };
        let model = match header {
            Header::Joint { vocab, features, .. } => {
                let canonical = LabelVocab::new(
                    vocab.intents().iter().cloned(),
                    vocab.slot_types().iter().cloned(),
                    vocab.dialects().iter().copied(),
                );
                if canonical != vocab {
                    return Err(ModelIoError::Inconsistent("vocabulary is not sorted".into()));
                }
                features
                    .validate()
                    .map_err(|e| ModelIoError::Inconsistent(e.to_string()))?;
                let ni = vocab.intents().len();
                let nt = vocab.num_tags();
                let d = features.dimension;
                let iw = reader.take(ni * d)?;
                let ib = reader.take(ni)?;
                let sw = reader.take(nt * d)?;
                let sb = reader.take(nt)?;
                SavedModel::Joint(
                    JointLinearModel::from_parts(vocab, features, iw, ib, sw, sb)
                        .map_err(ModelIoError::Inconsistent)?,
                )
            }
            Header::Svm { classes, dimension, .. } => {
                let w = reader.take(classes.len().saturating_mul(dimension))?;
                SavedModel::Dialect(DialectClassifier::Svm(
                    SvmModel::from_parts(classes, dimension, w).map_err(ModelIoError::Inconsistent)?,
                ))
            }
            Header::Majority { label, .. } => SavedModel::Dialect(DialectClassifier::Majority(label)),
            Header::Random { distribution, seed, .. } => {
                let sum: f64 = distribution.iter().map(|(_, p)| p).sum();
                if distribution.iter().any(|(_, p)| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(ModelIoError::Inconsistent("random baseline distribution".into()));
                }
                SavedModel::Dialect(DialectClassifier::Random { distribution, seed })
            }
        };
        if reader.pos != body.len() {
            return Err(ModelIoError::Inconsistent(format!(
                "{} trailing bytes",
                body.len() - reader.pos
            )));
        }
        Ok(model)
    }
}

struct ArrayReader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl ArrayReader<'_> {
    fn take(&mut self, n: usize) -> Result<Vec<f64>, ModelIoError> {
        let need = n.saturating_mul(8);
        let available = self.body.len() - self.pos;
        if need > available {
            return Err(ModelIoError::Truncated { expected: self.pos + need, found: self.body.len() });
        }
        let out = self.body[self.pos..self.pos + need]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        self.pos += need;
        Ok(out)
    }
}
