//! Hashed sparse features shared by the joint model and the dialect SVM.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("feature dimension {0} is not a power of two")]
    Dimension(usize),
    #[error("char n-gram range {0}..={1} is empty or starts at zero")]
    NgramRange(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub dimension: usize,
    pub char_ngram_min: usize,
    pub char_ngram_max: usize,
    /// Context radius, in tokens, for slot features.
    pub window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            dimension: 1 << 18,
            char_ngram_min: 2,
            char_ngram_max: 4,
            window: 2,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !self.dimension.is_power_of_two() {
            return Err(FeatureError::Dimension(self.dimension));
        }
        if self.char_ngram_min == 0 || self.char_ngram_min > self.char_ngram_max {
            return Err(FeatureError::NgramRange(
                self.char_ngram_min,
                self.char_ngram_max,
            ));
        }
        Ok(())
    }

    /// Bucket of a feature string: FNV-1a masked to the dimension.
    pub fn index(&self, feature: &str) -> usize {
        (fnv1a64(feature) & (self.dimension as u64 - 1)) as usize
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    /// Builds a vector from unsorted entries, summing duplicates.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        SparseVec { entries: merged }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map_or(0.0, |k| self.entries[k].1)
    }
}

/// Word shape with runs collapsed: `Bergen` → `Xx`, `07:30` → `d:d`.
pub fn word_shape(token: &str) -> String {
    let mut out = String::new();
    for ch in token.chars() {
        let class = if ch.is_uppercase() {
            'X'
        } else if ch.is_lowercase() {
            'x'
        } else if ch.is_numeric() {
            'd'
        } else {
            ch
        };
        if !out.ends_with(class) || !matches!(class, 'X' | 'x' | 'd') {
            out.push(class);
        }
    }
    out
}

/// Own features of one token: lowercased identity, word shape, and
/// boundary-marked char n-grams of the lowercased form.
fn own_features(token: &str, config: &FeatureConfig, out: &mut Vec<(usize, f64)>) {
    let lower = token.to_lowercase();
    out.push((config.index(&format!("w[0]={lower}")), 1.0));
    out.push((config.index(&format!("s={}", word_shape(token))), 1.0));
    let chars: Vec<char> = std::iter::once('^')
        .chain(lower.chars())
        .chain(std::iter::once('$'))
        .collect();
    for n in config.char_ngram_min..=config.char_ngram_max {
        for gram in chars.windows(n) {
            let gram: String = gram.iter().collect();
            out.push((config.index(&format!("c={gram}")), 1.0));
        }
    }
}

/// Features of a whole utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFeatures {
    /// Mean of the tokens' own features.
    pub pooled: SparseVec,
    /// Own features plus windowed context identities, one vector per token.
    pub per_token: Vec<SparseVec>,
}

pub fn featurize_instance<S: AsRef<str>>(tokens: &[S], config: &FeatureConfig) -> InstanceFeatures {
    let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let n = tokens.len();
    let mut pooled = Vec::new();
    let mut per_token = Vec::with_capacity(n);
    let w = config.window as isize;
    for (i, token) in tokens.iter().enumerate() {
        let mut own = Vec::new();
        own_features(token.as_ref(), config, &mut own);
        let scale = 1.0 / n as f64;
        pooled.extend(own.iter().map(|&(k, v)| (k, v * scale)));

        let mut feats = own;
        for off in -w..=w {
            if off == 0 {
                continue;
            }
            let j = i as isize + off;
            let word = if j < 0 {
                "<s>"
            } else if j as usize >= n {
                "</s>"
            } else {
                lower[j as usize].as_str()
            };
            feats.push((config.index(&format!("w[{off}]={word}")), 1.0));
        }
        per_token.push(SparseVec::from_entries(feats));
    }
    InstanceFeatures {
        pooled: SparseVec::from_entries(pooled),
        per_token,
    }
}

/// Binary presence of lowercased unigrams plus a constant bias feature.
pub fn unigram_presence<S: AsRef<str>>(tokens: &[S], dimension: usize) -> SparseVec {
    let mask = dimension as u64 - 1;
    let mut idx: Vec<usize> = tokens
        .iter()
        .map(|t| (fnv1a64(&format!("u={}", t.as_ref().to_lowercase())) & mask) as usize)
        .chain(std::iter::once((fnv1a64("<bias>") & mask) as usize))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    SparseVec {
        entries: idx.into_iter().map(|i| (i, 1.0)).collect(),
    }
}
