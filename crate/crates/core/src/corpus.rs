//! Data model and file I/O for slot/intent corpora.
//!
//! A corpus is a list of [`SidInstance`]s stored in a block format: one block
//! per utterance, blocks separated by a blank line.
//!
//! ```text
//! # id = 90/9
//! # intent = alarm/set_alarm
//! # dialect = V
//! Sett	O
//! alarm	O
//! for	O
//! kl.	B-datetime
//! 6	I-datetime
//!
//! ```
//!
//! The tag column may be `_` on every token line of a block, meaning the
//! instance carries no slot annotation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line} (block {block}): {message}")]
    Parse {
        line: usize,
        block: usize,
        message: String,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid dialect label {0:?} (expected one of B, N, T, V)")]
    InvalidDialect(String),
    #[error("invalid slot tag {0:?}")]
    InvalidTag(String),
    #[error("tag sequence is not BIO-valid at position {0}")]
    InvalidBio(usize),
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("need at least 3 distinct origin keys to split, found {0}")]
    TooFewOrigins(usize),
    #[error("instance at position {0} has no id, cannot derive its origin key")]
    MissingId(usize),
}

/// Dialect classes, in vocabulary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DialectLabel {
    /// Bokmål
    B,
    /// North Norwegian
    N,
    /// Trøndersk
    T,
    /// West Norwegian
    V,
}

impl DialectLabel {
    pub const ALL: [DialectLabel; 4] = [
        DialectLabel::B,
        DialectLabel::N,
        DialectLabel::T,
        DialectLabel::V,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DialectLabel::B => "B",
            DialectLabel::N => "N",
            DialectLabel::T => "T",
            DialectLabel::V => "V",
        }
    }
}

impl fmt::Display for DialectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DialectLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B" => Ok(DialectLabel::B),
            "N" => Ok(DialectLabel::N),
            "T" => Ok(DialectLabel::T),
            "V" => Ok(DialectLabel::V),
            other => Err(CorpusError::InvalidDialect(other.to_string())),
        }
    }
}

/// A single BIO tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotTag {
    Outside,
    Begin(String),
    Inside(String),
}

impl SlotTag {
    pub fn label(&self) -> Option<&str> {
        match self {
            SlotTag::Outside => None,
            SlotTag::Begin(l) | SlotTag::Inside(l) => Some(l),
        }
    }
}

impl fmt::Display for SlotTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotTag::Outside => f.write_str("O"),
            SlotTag::Begin(l) => write!(f, "B-{l}"),
            SlotTag::Inside(l) => write!(f, "I-{l}"),
        }
    }
}

impl FromStr for SlotTag {
    type Err = CorpusError;

    /// Accepts `O`, `B-<label>` or `I-<label>`. Labels are non-empty and may
    /// not contain whitespace, since predictions are written space-joined.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(SlotTag::Outside);
        }
        let bad = || CorpusError::InvalidTag(s.to_string());
        let (prefix, label) = s.split_once('-').ok_or_else(bad)?;
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(bad());
        }
        match prefix {
            "B" => Ok(SlotTag::Begin(label.to_string())),
            "I" => Ok(SlotTag::Inside(label.to_string())),
            _ => Err(bad()),
        }
    }
}

/// One utterance with its optional annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidInstance {
    id: Option<String>,
    tokens: Vec<String>,
    slots: Option<Vec<SlotTag>>,
    intent: Option<String>,
    dialect: Option<DialectLabel>,
}

fn check_field(what: &str, value: &str) -> Result<(), CorpusError> {
    if value.is_empty() || value.contains(['\t', '\n', '\r']) || value.trim() != value {
        return Err(CorpusError::InvalidInstance(format!(
            "{what} {value:?} must be non-empty with no surrounding whitespace, tabs or newlines"
        )));
    }
    Ok(())
}

impl SidInstance {
    pub fn new(
        id: Option<String>,
        tokens: Vec<String>,
        slots: Option<Vec<SlotTag>>,
        intent: Option<String>,
        dialect: Option<DialectLabel>,
    ) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::InvalidInstance("no tokens".into()));
        }
        if let Some(t) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(CorpusError::InvalidInstance(format!(
                "token {t:?} is empty or contains whitespace"
            )));
        }
        if let Some(s) = &slots {
            if s.len() != tokens.len() {
                return Err(CorpusError::InvalidInstance(format!(
                    "{} tokens but {} slot tags",
                    tokens.len(),
                    s.len()
                )));
            }
        }
        if let Some(id) = &id {
            check_field("id", id)?;
        }
        if let Some(intent) = &intent {
            check_field("intent", intent)?;
        }
        Ok(SidInstance {
            id,
            tokens,
            slots,
            intent,
            dialect,
        })
    }

    /// Unlabelled instance from tokens only.
    pub fn from_tokens<S: Into<String>>(
        tokens: impl IntoIterator<Item = S>,
    ) -> Result<Self, CorpusError> {
        Self::new(
            None,
            tokens.into_iter().map(Into::into).collect(),
            None,
            None,
            None,
        )
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    /// The part of the id before the first `/`. All dialectal renderings of
    /// one source sentence share this key.
    pub fn origin_key(&self) -> Option<&str> {
        self.id
            .as_deref()
            .map(|id| id.split_once('/').map_or(id, |(head, _)| head))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn slots(&self) -> Option<&[SlotTag]> {
        self.slots.as_deref()
    }

    pub fn intent(&self) -> Option<&str> {
        self.intent.as_deref()
    }

    pub fn dialect(&self) -> Option<DialectLabel> {
        self.dialect
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Whitespace-joined tokens.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn with_id(mut self, id: Option<String>) -> Result<Self, CorpusError> {
        if let Some(id) = &id {
            check_field("id", id)?;
        }
        self.id = id;
        Ok(self)
    }

    pub fn with_dialect(mut self, dialect: Option<DialectLabel>) -> Self {
        self.dialect = dialect;
        self
    }

    pub fn with_intent(mut self, intent: Option<String>) -> Result<Self, CorpusError> {
        if let Some(intent) = &intent {
            check_field("intent", intent)?;
        }
        self.intent = intent;
        Ok(self)
    }

    /// Replaces the tokens, keeping the slot alignment.
    pub fn with_tokens(self, tokens: Vec<String>) -> Result<Self, CorpusError> {
        Self::new(self.id, tokens, self.slots, self.intent, self.dialect)
    }

    pub fn with_slots(self, slots: Option<Vec<SlotTag>>) -> Result<Self, CorpusError> {
        Self::new(self.id, self.tokens, slots, self.intent, self.dialect)
    }

    /// Keeps only the token positions for which `keep` returns true, along
    /// with their tags. Tags are BIO-repaired afterwards. Returns `None` when
    /// nothing is left.
    pub fn retain_tokens(&self, mut keep: impl FnMut(&str) -> bool) -> Option<Self> {
        let mask: Vec<bool> = self.tokens.iter().map(|t| keep(t)).collect();
        let tokens: Vec<String> = self
            .tokens
            .iter()
            .zip(&mask)
            .filter(|(_, k)| **k)
            .map(|(t, _)| t.clone())
            .collect();
        if tokens.is_empty() {
            return None;
        }
        let slots = self.slots.as_ref().map(|s| {
            let kept: Vec<SlotTag> = s
                .iter()
                .zip(&mask)
                .filter(|(_, k)| **k)
                .map(|(t, _)| t.clone())
                .collect();
            validate_bio(&kept).1
        });
        Some(SidInstance {
            id: self.id.clone(),
            tokens,
            slots,
            intent: self.intent.clone(),
            dialect: self.dialect,
        })
    }
}

/// A labelled token span, `start` inclusive and `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Label inventories observed in a corpus, each sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelVocab {
    intents: Vec<String>,
    slot_types: Vec<String>,
    dialects: Vec<DialectLabel>,
}

impl LabelVocab {
    pub fn new(
        intents: impl IntoIterator<Item = String>,
        slot_types: impl IntoIterator<Item = String>,
        dialects: impl IntoIterator<Item = DialectLabel>,
    ) -> Self {
        LabelVocab {
            intents: intents.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
            slot_types: slot_types
                .into_iter()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            dialects: dialects
                .into_iter()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }

    pub fn intents(&self) -> &[String] {
        &self.intents
    }

    pub fn slot_types(&self) -> &[String] {
        &self.slot_types
    }

    pub fn dialects(&self) -> &[DialectLabel] {
        &self.dialects
    }

    /// Tag inventory: `O` first, then `B-x`, `I-x` for each slot type in order.
    pub fn tags(&self) -> Vec<SlotTag> {
        std::iter::once(SlotTag::Outside)
            .chain(self.slot_types.iter().flat_map(|l| {
                [SlotTag::Begin(l.clone()), SlotTag::Inside(l.clone())]
            }))
            .collect()
    }

    pub fn num_tags(&self) -> usize {
        2 * self.slot_types.len() + 1
    }

    pub fn intent_index(&self, intent: &str) -> Option<usize> {
        self.intents.binary_search_by(|x| x.as_str().cmp(intent)).ok()
    }

    /// Index of `tag` in [`LabelVocab::tags`].
    pub fn tag_index(&self, tag: &SlotTag) -> Option<usize> {
        match tag {
            SlotTag::Outside => Some(0),
            SlotTag::Begin(l) | SlotTag::Inside(l) => {
                let k = self.slot_types.binary_search(l).ok()?;
                Some(1 + 2 * k + usize::from(matches!(tag, SlotTag::Inside(_))))
            }
        }
    }
}

pub fn build_vocab(instances: &[SidInstance]) -> LabelVocab {
    LabelVocab::new(
        instances.iter().filter_map(|i| i.intent.clone()),
        instances
            .iter()
            .filter_map(|i| i.slots.as_ref())
            .flatten()
            .filter_map(|t| t.label().map(str::to_string)),
        instances.iter().filter_map(|i| i.dialect),
    )
}

/// Checks BIO well-formedness and returns a repaired copy in which every
/// `I-x` not preceded by `B-x` or `I-x` becomes `B-x`.
pub fn validate_bio(tags: &[SlotTag]) -> (bool, Vec<SlotTag>) {
    let mut valid = true;
    let mut repaired = Vec::with_capacity(tags.len());
    let mut prev: Option<&str> = None;
    for tag in tags {
        let fixed = match tag {
            SlotTag::Inside(l) if prev != Some(l.as_str()) => {
                valid = false;
                SlotTag::Begin(l.clone())
            }
            other => other.clone(),
        };
        prev = tag.label();
        repaired.push(fixed);
    }
    (valid, repaired)
}

pub fn is_valid_bio(tags: &[SlotTag]) -> bool {
    let mut prev: Option<&str> = None;
    for tag in tags {
        if let SlotTag::Inside(l) = tag {
            if prev != Some(l.as_str()) {
                return false;
            }
        }
        prev = tag.label();
    }
    true
}

/// Maximal `B I*` runs of a BIO-valid sequence.
pub fn extract_spans(tags: &[SlotTag]) -> Result<Vec<Span>, CorpusError> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open: Option<Span> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            SlotTag::Outside => spans.extend(open.take()),
            SlotTag::Begin(l) => {
                spans.extend(open.take());
                open = Some(Span {
                    label: l.clone(),
                    start: i,
                    end: i + 1,
                });
            }
            SlotTag::Inside(l) => match open.as_mut() {
                Some(span) if span.label == *l => span.end = i + 1,
                _ => return Err(CorpusError::InvalidBio(i)),
            },
        }
    }
    spans.extend(open);
    Ok(spans)
}

/// Inverse of [`extract_spans`] for non-overlapping spans.
pub fn spans_to_tags(spans: &[Span], len: usize) -> Vec<SlotTag> {
    let mut tags = vec![SlotTag::Outside; len];
    for span in spans {
        for (i, tag) in tags.iter_mut().enumerate().take(span.end).skip(span.start) {
            *tag = if i == span.start {
                SlotTag::Begin(span.label.clone())
            } else {
                SlotTag::Inside(span.label.clone())
            };
        }
    }
    tags
}

/// Drops every instance whose whitespace-joined text already occurred.
pub fn deduplicate(instances: &[SidInstance]) -> Vec<SidInstance> {
    let mut seen = HashSet::new();
    instances
        .iter()
        .filter(|i| seen.insert(i.text()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<SidInstance>,
    pub dev: Vec<SidInstance>,
    pub test: Vec<SidInstance>,
}

impl Split {
    pub fn parts(&self) -> [&[SidInstance]; 3] {
        [&self.train, &self.dev, &self.test]
    }
}

/// Splits into train/dev/test so that no origin key lands in two parts.
///
/// Origin groups are shuffled with a seeded generator and each group goes to
/// the part whose instance count is furthest below its target. A part that
/// would otherwise stay empty takes the last groups.
pub fn split_by_origin(
    instances: &[SidInstance],
    ratios: [f64; 3],
    seed: u64,
) -> Result<Split, CorpusError> {
    if ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite())
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(CorpusError::InvalidRatios(ratios));
    }

    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (pos, inst) in instances.iter().enumerate() {
        let key = inst.origin_key().ok_or(CorpusError::MissingId(pos))?;
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(pos);
    }
    if order.len() < 3 {
        return Err(CorpusError::TooFewOrigins(order.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let total = instances.len() as f64;
    let targets = ratios.map(|r| r * total);
    let mut counts = [0usize; 3];
    let mut assignment = vec![0usize; instances.len()];
    for (k, key) in order.iter().enumerate() {
        let remaining = order.len() - k;
        let empty: Vec<usize> = (0..3).filter(|&p| counts[p] == 0).collect();
        let part = if !empty.is_empty() && remaining <= empty.len() {
            empty[0]
        } else {
            let mut best = 0;
            for p in 1..3 {
                let deficit = targets[p] - counts[p] as f64;
                if deficit > targets[best] - counts[best] as f64 {
                    best = p;
                }
            }
            best
        };
        for &pos in &groups[key] {
            assignment[pos] = part;
        }
        counts[part] += groups[key].len();
    }

    let mut split = Split::default();
    for (inst, part) in instances.iter().zip(assignment) {
        match part {
            0 => split.train.push(inst.clone()),
            1 => split.dev.push(inst.clone()),
            _ => split.test.push(inst.clone()),
        }
    }
    Ok(split)
}

/// Parses the block format described in the module docs.
pub fn parse_sid_file(source: &str) -> Result<Vec<SidInstance>, CorpusError> {
    let mut instances = Vec::new();
    if source.is_empty() {
        return Ok(instances);
    }
    let mut block = BlockBuilder::default();
    let mut block_no = 1;
    let mut last_line = 0;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let err = |message: String| CorpusError::Parse {
            line: line_no,
            block: block_no,
            message,
        };
        if line.is_empty() {
            if !block.is_empty() {
                instances.push(block.finish().map_err(err)?);
                block = BlockBuilder::default();
                block_no += 1;
            }
            continue;
        }
        block.push_line(line).map_err(err)?;
    }
    if !block.is_empty() {
        instances.push(block.finish().map_err(|message| CorpusError::Parse {
            line: last_line,
            block: block_no,
            message,
        })?);
    }
    if !source.ends_with('\n') {
        return Err(CorpusError::Parse {
            line: last_line,
            block: block_no,
            message: "missing trailing newline".into(),
        });
    }
    Ok(instances)
}

#[derive(Default)]
struct BlockBuilder {
    id: Option<String>,
    intent: Option<String>,
    dialect: Option<DialectLabel>,
    // 0 = nothing yet, 1 = id, 2 = intent, 3 = dialect
    meta_stage: u8,
    tokens: Vec<String>,
    tags: Vec<Option<SlotTag>>,
}

impl BlockBuilder {
    fn is_empty(&self) -> bool {
        self.meta_stage == 0 && self.tokens.is_empty()
    }

    fn push_line(&mut self, line: &str) -> Result<(), String> {
        if let Some((token, tag)) = line.split_once('\t') {
            if token.is_empty() {
                return Err("empty token".into());
            }
            let tag = match tag {
                "_" => None,
                t => Some(SlotTag::from_str(t).map_err(|e| e.to_string())?),
            };
            self.tokens.push(token.to_string());
            self.tags.push(tag);
            return Ok(());
        }
        let Some(meta) = line.strip_prefix("# ") else {
            return Err(format!("expected `<token>\\t<tag>` or metadata, got {line:?}"));
        };
        if !self.tokens.is_empty() {
            return Err("metadata line after token lines".into());
        }
        let (key, value) = meta
            .split_once(" = ")
            .ok_or_else(|| format!("malformed metadata line {line:?}"))?;
        let stage = match key {
            "id" => 1,
            "intent" => 2,
            "dialect" => 3,
            other => return Err(format!("unknown metadata key {other:?}")),
        };
        if stage <= self.meta_stage {
            return Err(format!("metadata key {key:?} duplicated or out of order"));
        }
        self.meta_stage = stage;
        match stage {
            1 => self.id = Some(value.to_string()),
            2 => self.intent = Some(value.to_string()),
            _ => self.dialect = Some(value.parse().map_err(|e: CorpusError| e.to_string())?),
        }
        Ok(())
    }

    fn finish(self) -> Result<SidInstance, String> {
        if self.tokens.is_empty() {
            return Err("block has metadata but no tokens".into());
        }
        let labelled = self.tags.iter().filter(|t| t.is_some()).count();
        let slots = if labelled == 0 {
            None
        } else if labelled == self.tags.len() {
            Some(self.tags.into_iter().flatten().collect())
        } else {
            return Err(format!(
                "{} tokens but only {labelled} slot tags",
                self.tokens.len()
            ));
        };
        SidInstance::new(self.id, self.tokens, slots, self.intent, self.dialect)
            .map_err(|e| e.to_string())
    }
}

pub fn write_sid_file(instances: &[SidInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        write_block(&mut out, inst);
    }
    out
}

fn write_block(out: &mut String, inst: &SidInstance) {
    use std::fmt::Write;
    if let Some(id) = &inst.id {
        let _ = writeln!(out, "# id = {id}");
    }
    if let Some(intent) = &inst.intent {
        let _ = writeln!(out, "# intent = {intent}");
    }
    if let Some(d) = inst.dialect {
        let _ = writeln!(out, "# dialect = {d}");
    }
    for (i, token) in inst.tokens.iter().enumerate() {
        match &inst.slots {
            Some(s) => {
                let _ = writeln!(out, "{token}\t{}", s[i]);
            }
            None => {
                let _ = writeln!(out, "{token}\t_");
            }
        }
    }
    out.push('\n');
}
