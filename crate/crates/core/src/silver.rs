//! Silver dialect labelling: transcription cleanup, city-to-dialect mapping,
//! two-classifier agreement filtering and distribution-matched downsampling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{DialectLabel, SidInstance};

/// City table shipped with the crate (`data/cities.tsv`).
pub const STARTER_CITIES: &str = include_str!("../data/cities.tsv");

// Slack for float round-off when comparing M·p against integer counts.
const FLOOR_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SilverError {
    #[error("unknown city {0:?}")]
    UnknownCity(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("class {0} has positive target proportion but no instances")]
    EmptyClass(DialectLabel),
    #[error("instance at position {0} has no dialect label")]
    Unlabelled(usize),
    #[error("minimum length must be at least 1")]
    MinLength,
}

/// Labels of the four-way written-standard classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NorDialLabel {
    Bokmal,
    Nynorsk,
    Dialect,
    Mixed,
}

impl NorDialLabel {
    pub const ALL: [NorDialLabel; 4] = [
        NorDialLabel::Bokmal,
        NorDialLabel::Nynorsk,
        NorDialLabel::Dialect,
        NorDialLabel::Mixed,
    ];
}

impl fmt::Display for NorDialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NorDialLabel::Bokmal => "Bokmål",
            NorDialLabel::Nynorsk => "Nynorsk",
            NorDialLabel::Dialect => "Dialect",
            NorDialLabel::Mixed => "Mixed",
        })
    }
}

impl FromStr for NorDialLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "bokmål" | "bokmal" => Ok(NorDialLabel::Bokmal),
            "nynorsk" => Ok(NorDialLabel::Nynorsk),
            "dialect" | "dialectal" => Ok(NorDialLabel::Dialect),
            "mixed" => Ok(NorDialLabel::Mixed),
            _ => Err(format!("unknown NorDial label {s:?}")),
        }
    }
}

/// Drops pause markers (`#`) and fully parenthesised tokens such as `(mm)`.
pub fn clean_transcription<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_transcription_marker(t))
        .map(str::to_string)
        .collect()
}

pub fn is_transcription_marker(token: &str) -> bool {
    token == "#" || (token.len() >= 2 && token.starts_with('(') && token.ends_with(')'))
}

/// [`clean_transcription`] on an instance, keeping slot tags aligned.
/// `None` if every token was a marker.
pub fn clean_instance(instance: &SidInstance) -> Option<SidInstance> {
    instance.retain_tokens(|t| !is_transcription_marker(t))
}

/// Keeps instances with at least `min_tokens` tokens.
pub fn filter_min_length(
    instances: &[SidInstance],
    min_tokens: usize,
) -> Result<Vec<SidInstance>, SilverError> {
    if min_tokens == 0 {
        return Err(SilverError::MinLength);
    }
    Ok(instances
        .iter()
        .filter(|i| i.len() >= min_tokens)
        .cloned()
        .collect())
}

/// Case-insensitive city → dialect table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeoMapping {
    entries: HashMap<String, DialectLabel>,
}

impl GeoMapping {
    pub fn starter() -> Self {
        Self::parse(STARTER_CITIES).expect("bundled city table is well-formed")
    }

    /// Reads `city<TAB>dialect` rows; `#` lines are comments.
    pub fn parse(source: &str) -> Result<Self, SilverError> {
        let mut entries = HashMap::new();
        for (idx, line) in source.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| SilverError::Parse {
                line: idx + 1,
                message,
            };
            let (city, dialect) = line
                .split_once('\t')
                .ok_or_else(|| err("expected city<TAB>dialect".into()))?;
            if city.is_empty() {
                return Err(err("empty city name".into()));
            }
            let dialect = dialect.parse().map_err(|e: crate::corpus::CorpusError| err(e.to_string()))?;
            entries.insert(city.to_lowercase(), dialect);
        }
        Ok(GeoMapping { entries })
    }

    pub fn insert(&mut self, city: &str, dialect: DialectLabel) {
        self.entries.insert(city.to_lowercase(), dialect);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn map_geolocation(city: &str, geo: &GeoMapping) -> Result<DialectLabel, SilverError> {
    geo.entries
        .get(&city.to_lowercase())
        .copied()
        .ok_or_else(|| SilverError::UnknownCity(city.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Keep(DialectLabel),
    Discard,
}

/// Combines the dialect classifier and the written-standard classifier.
///
/// Rules, first match wins:
/// 1. Nynorsk or Mixed from the standard classifier: discard.
/// 2. N, V or T from the dialect classifier: keep that label.
/// 3. B from both (B and Bokmål): keep B.
/// 4. Anything else: discard.
pub fn agreement_filter(pred_dialect: DialectLabel, pred_nordial: NorDialLabel) -> Agreement {
    use DialectLabel::*;
    use NorDialLabel::*;
    match (pred_dialect, pred_nordial) {
        (_, Nynorsk | Mixed) => Agreement::Discard,
        (d @ (N | V | T), _) => Agreement::Keep(d),
        (B, Bokmal) => Agreement::Keep(B),
        (B, Dialect) => Agreement::Discard,
    }
}

/// One row of a prediction-pair file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionPair {
    pub instance_id: String,
    pub dialect: DialectLabel,
    pub nordial: NorDialLabel,
}

/// Reads `instance_id<TAB>dialect_pred<TAB>nordial_pred` rows.
pub fn parse_prediction_pairs(source: &str) -> Result<Vec<PredictionPair>, SilverError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| SilverError::Parse {
            line: idx + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, dialect, nordial] = cols[..] else {
            return Err(err(format!("expected 3 columns, got {}", cols.len())));
        };
        out.push(PredictionPair {
            instance_id: id.to_string(),
            dialect: dialect
                .parse()
                .map_err(|e: crate::corpus::CorpusError| err(e.to_string()))?,
            nordial: nordial.parse().map_err(err)?,
        });
    }
    Ok(out)
}

/// Target class proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    proportions: BTreeMap<DialectLabel, f64>,
}

impl DistributionSpec {
    /// Proportions must be non-negative and sum to 1 within 1e-9.
    pub fn new(proportions: impl IntoIterator<Item = (DialectLabel, f64)>) -> Result<Self, SilverError> {
        let mut map = BTreeMap::new();
        for (d, p) in proportions {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(SilverError::Distribution(format!("proportion {p} for {d}")));
            }
            if map.insert(d, p).is_some() {
                return Err(SilverError::Distribution(format!("{d} listed twice")));
            }
        }
        let sum: f64 = map.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SilverError::Distribution(format!("proportions sum to {sum}")));
        }
        Ok(DistributionSpec { proportions: map })
    }

    /// Normalises non-negative weights into proportions.
    pub fn from_weights(weights: impl IntoIterator<Item = (DialectLabel, f64)>) -> Result<Self, SilverError> {
        let weights: Vec<(DialectLabel, f64)> = weights.into_iter().collect();
        if weights.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(SilverError::Distribution("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(SilverError::Distribution("weights sum to zero".into()));
        }
        let mut map = BTreeMap::new();
        for (d, w) in weights {
            if map.insert(d, w / total).is_some() {
                return Err(SilverError::Distribution(format!("{d} listed twice")));
            }
        }
        Ok(DistributionSpec { proportions: map })
    }

    /// Dialect distribution of the shared-task development set
    /// (1500 V, 900 T, 600 N, 300 B).
    pub fn development() -> Self {
        Self::from_weights([
            (DialectLabel::V, 1500.0),
            (DialectLabel::T, 900.0),
            (DialectLabel::N, 600.0),
            (DialectLabel::B, 300.0),
        ])
        .expect("constant weights")
    }

    pub fn proportion(&self, d: DialectLabel) -> f64 {
        self.proportions.get(&d).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (DialectLabel, f64)> + '_ {
        self.proportions.iter().map(|(d, p)| (*d, *p))
    }
}

impl FromStr for DistributionSpec {
    type Err = SilverError;

    /// `V:0.4545,T:0.2727,N:0.1818,B:0.0909`. Values are weights and are
    /// normalised, so rounded percentages are accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut weights = Vec::new();
        for part in s.split(',') {
            let (d, w) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| SilverError::Distribution(format!("expected LABEL:weight, got {part:?}")))?;
            let d: DialectLabel = d
                .parse()
                .map_err(|e: crate::corpus::CorpusError| SilverError::Distribution(e.to_string()))?;
            let w: f64 = w
                .parse()
                .map_err(|_| SilverError::Distribution(format!("bad weight {w:?}")))?;
            weights.push((d, w));
        }
        Self::from_weights(weights)
    }
}

fn floor_eps(x: f64) -> usize {
    (x + FLOOR_EPS).floor() as usize
}

/// Per-class sample sizes for a pool: the largest total `M` with
/// `M·p_c ≤ available_c` for every class, then `floor(M·p_c)` per class.
pub fn downsample_targets(
    available: &BTreeMap<DialectLabel, usize>,
    spec: &DistributionSpec,
) -> Result<BTreeMap<DialectLabel, usize>, SilverError> {
    let mut total = f64::INFINITY;
    for (d, p) in spec.iter() {
        if p <= 0.0 {
            continue;
        }
        let have = available.get(&d).copied().unwrap_or(0);
        if have == 0 {
            return Err(SilverError::EmptyClass(d));
        }
        total = total.min(have as f64 / p);
    }
    let m = floor_eps(total) as f64;
    Ok(spec.iter().map(|(d, p)| (d, floor_eps(m * p))).collect())
}

/// Samples per class, without replacement, to match `spec`. Selected
/// instances keep their input order.
pub fn downsample_to_distribution(
    instances: &[SidInstance],
    spec: &DistributionSpec,
    seed: u64,
) -> Result<Vec<SidInstance>, SilverError> {
    let mut by_class: BTreeMap<DialectLabel, Vec<usize>> = BTreeMap::new();
    for (pos, inst) in instances.iter().enumerate() {
        let d = inst.dialect().ok_or(SilverError::Unlabelled(pos))?;
        by_class.entry(d).or_default().push(pos);
    }
    let available = by_class.iter().map(|(d, v)| (*d, v.len())).collect();
    let targets = downsample_targets(&available, spec)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for (d, mut positions) in by_class {
        let k = targets.get(&d).copied().unwrap_or(0);
        positions.shuffle(&mut rng);
        chosen.extend(positions.into_iter().take(k));
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|p| instances[p].clone()).collect())
}
