//! Lexical mapping from Bokmål to dialectal forms, and silver corpus
//! generation by token substitution.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{CorpusError, DialectLabel, SidInstance};
use crate::features::fnv1a64;

/// Lexicon shipped with the crate (`data/lexicon.tsv`).
pub const STARTER_LEXICON: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Load { line: usize, message: String },
    #[error("cannot map into the source variety B")]
    TargetIsSource,
    #[error("instance {0:?} is not Bokmål")]
    NotBokmal(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Case-insensitive Bokmål form → per-dialect variant lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, BTreeMap<DialectLabel, Vec<String>>>,
}

impl Lexicon {
    pub fn starter() -> Self {
        load_lexicon(STARTER_LEXICON).expect("bundled lexicon is well-formed")
    }

    /// Adds variants, skipping ones already listed for the same pair.
    /// Variants must be non-empty single tokens.
    pub fn insert(
        &mut self,
        bokmal: &str,
        dialect: DialectLabel,
        variants: impl IntoIterator<Item = String>,
    ) -> Result<(), String> {
        let key = bokmal.to_lowercase();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(format!("Bokmål form {bokmal:?} must be a single token"));
        }
        let variants: Vec<String> = variants.into_iter().collect();
        if variants.is_empty() {
            return Err("empty variant list".into());
        }
        if let Some(v) = variants
            .iter()
            .find(|v| v.is_empty() || v.chars().any(char::is_whitespace))
        {
            return Err(format!("variant {v:?} must be a non-empty single token"));
        }
        let list = self.entries.entry(key).or_default().entry(dialect).or_default();
        for v in variants {
            if !list.contains(&v) {
                list.push(v);
            }
        }
        Ok(())
    }

    pub fn variants(&self, token: &str, dialect: DialectLabel) -> Option<&[String]> {
        self.entries
            .get(&token.to_lowercase())?
            .get(&dialect)
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads `bokmål<TAB>dialect<TAB>v1|v2|...` rows; `#` lines are comments.
pub fn load_lexicon(source: &str) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::default();
    for (idx, line) in source.lines().enumerate() {
        let err = |message: String| LexiconError::Load {
            line: idx + 1,
            message,
        };
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [bokmal, dialect, variants] = cols[..] else {
            return Err(err(format!("expected 3 tab-separated columns, got {}", cols.len())));
        };
        let dialect = DialectLabel::from_str(dialect).map_err(|e| err(e.to_string()))?;
        if variants.is_empty() {
            return Err(err("empty variant field".into()));
        }
        lex.insert(bokmal, dialect, variants.split('|').map(str::to_string))
            .map_err(err)?;
    }
    Ok(lex)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariantPolicy {
    /// Always the first listed variant.
    #[default]
    First,
    /// Uniform choice, seeded by (seed, instance id, token position).
    SeededRandom,
}

impl FromStr for VariantPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(VariantPolicy::First),
            "random" => Ok(VariantPolicy::SeededRandom),
            other => Err(format!("unknown variant policy {other:?} (first|random)")),
        }
    }
}

fn choose<'a>(
    variants: &'a [String],
    policy: VariantPolicy,
    seed: u64,
    id: &str,
    position: usize,
) -> &'a str {
    match policy {
        VariantPolicy::First => &variants[0],
        VariantPolicy::SeededRandom => {
            let key = fnv1a64(&format!("{seed}\u{1f}{id}\u{1f}{position}"));
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            &variants[rng.gen_range(0..variants.len())]
        }
    }
}

/// Rewrites every lexicon-covered token into its `target` variant and sets
/// the dialect to `target`. Slots and intent are untouched.
pub fn apply_lexicon(
    instance: &SidInstance,
    target: DialectLabel,
    lex: &Lexicon,
    policy: VariantPolicy,
    seed: u64,
) -> Result<SidInstance, LexiconError> {
    if target == DialectLabel::B {
        return Err(LexiconError::TargetIsSource);
    }
    let id = instance.id().unwrap_or("");
    let tokens = instance
        .tokens()
        .iter()
        .enumerate()
        .map(|(pos, tok)| match lex.variants(tok, target) {
            Some(vs) => choose(vs, policy, seed, id, pos).to_string(),
            None => tok.clone(),
        })
        .collect();
    Ok(instance
        .clone()
        .with_tokens(tokens)?
        .with_dialect(Some(target)))
}

/// Target dialects of silver copies, in output order.
pub const SILVER_TARGETS: [DialectLabel; 3] = [DialectLabel::V, DialectLabel::T, DialectLabel::N];

/// Bokmål originals (labelled B), then a V copy of each, then T copies,
/// then N copies. Copies get `#V`/`#T`/`#N` appended to their ids.
pub fn generate_silver(
    instances: &[SidInstance],
    lex: &Lexicon,
    policy: VariantPolicy,
    seed: u64,
) -> Result<Vec<SidInstance>, LexiconError> {
    if let Some(bad) = instances
        .iter()
        .find(|i| i.dialect().is_some_and(|d| d != DialectLabel::B))
    {
        return Err(LexiconError::NotBokmal(bad.id().unwrap_or("").to_string()));
    }
    let mut out: Vec<SidInstance> = instances
        .iter()
        .map(|i| i.clone().with_dialect(Some(DialectLabel::B)))
        .collect();
    for target in SILVER_TARGETS {
        for inst in instances {
            let mapped = apply_lexicon(inst, target, lex, policy, seed)?;
            let id = inst.id().map(|id| format!("{id}#{target}"));
            out.push(mapped.with_id(id)?);
        }
    }
    Ok(out)
}
