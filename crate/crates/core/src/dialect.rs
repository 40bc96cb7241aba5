//! Dialect classifiers: a one-vs-rest linear SVM over unigram presence
//! features trained with Pegasos, plus majority and random baselines.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::DialectLabel;
use crate::features::{fnv1a64, unigram_presence, SparseVec};

const MIN_SCALE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DialectModelError {
    #[error("{texts} texts but {labels} labels")]
    LengthMismatch { texts: usize, labels: usize },
    #[error("class {0} has no training examples")]
    MissingClass(DialectLabel),
    #[error("need at least two classes and as many examples, found {classes} classes in {examples} examples")]
    TooFewClasses { classes: usize, examples: usize },
    #[error("no labels to fit")]
    Empty,
    #[error("invalid SVM configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    /// Pegasos regularisation strength.
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
    pub dimension: usize,
    /// Classes that must all be present in the training data. Defaults to
    /// the observed label set.
    pub classes: Option<Vec<DialectLabel>>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            regularization: 1e-4,
            epochs: 30,
            seed: 0,
            dimension: 1 << 18,
            classes: None,
        }
    }
}

/// One weight row per class, stored feature-major (`col * classes + row`).
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    classes: Vec<DialectLabel>,
    dimension: usize,
    weights: Vec<f64>,
}

impl SvmModel {
    pub fn zeros(classes: Vec<DialectLabel>, dimension: usize) -> Self {
        let weights = vec![0.0; classes.len() * dimension];
        SvmModel { classes, dimension, weights }
    }

    pub(crate) fn from_parts(
        classes: Vec<DialectLabel>,
        dimension: usize,
        weights: Vec<f64>,
    ) -> Result<Self, String> {
        if !dimension.is_power_of_two() {
            return Err(format!("dimension {dimension} is not a power of two"));
        }
        if weights.len() != classes.len() * dimension {
            return Err("SVM weight shape mismatch".into());
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err("SVM classes must be strictly sorted".into());
        }
        Ok(SvmModel { classes, dimension, weights })
    }

    pub fn classes(&self) -> &[DialectLabel] {
        &self.classes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, class: usize, col: usize) -> f64 {
        self.weights[col * self.classes.len() + class]
    }

    pub fn set_weight(&mut self, class: usize, col: usize, value: f64) {
        let k = self.classes.len();
        self.weights[col * k + class] = value;
    }

    pub fn scores(&self, x: &SparseVec) -> Vec<f64> {
        let k = self.classes.len();
        let mut s = vec![0.0; k];
        for (col, v) in x.iter() {
            for (sc, w) in s.iter_mut().zip(&self.weights[col * k..(col + 1) * k]) {
                *sc += w * v;
            }
        }
        s
    }

    pub fn featurize<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVec {
        unigram_presence(tokens, self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DialectClassifier {
    Svm(SvmModel),
    Majority(DialectLabel),
    /// Draws from a fixed label distribution, reproducibly per
    /// (seed, instance counter).
    Random {
        distribution: Vec<(DialectLabel, f64)>,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Majority,
    Random,
}

fn sign(label: DialectLabel, class: DialectLabel) -> f64 {
    if label == class {
        1.0
    } else {
        -1.0
    }
}

/// Regularised one-vs-rest hinge objective, summed over classes:
/// `Σ_c λ/2 ‖w_c‖² + 1/n Σ_i max(0, 1 − y_ic ⟨w_c, x_i⟩)`.
pub fn svm_objective(
    model: &SvmModel,
    data: &[SparseVec],
    labels: &[DialectLabel],
    regularization: f64,
) -> f64 {
    let norm: f64 = model.weights.iter().map(|w| w * w).sum();
    let mut hinge = 0.0;
    for (x, &y) in data.iter().zip(labels) {
        for (c, s) in model.scores(x).into_iter().enumerate() {
            hinge += (1.0 - sign(y, model.classes[c]) * s).max(0.0);
        }
    }
    0.5 * regularization * norm + hinge / data.len() as f64
}

/// Subgradient of [`svm_objective`], dense and feature-major like the
/// model weights. At a kink (margin exactly 1) the hinge term contributes
/// nothing.
pub fn svm_subgradient(
    model: &SvmModel,
    data: &[SparseVec],
    labels: &[DialectLabel],
    regularization: f64,
) -> Vec<f64> {
    let k = model.classes.len();
    let mut g: Vec<f64> = model.weights.iter().map(|w| regularization * w).collect();
    let inv_n = 1.0 / data.len() as f64;
    for (x, &y) in data.iter().zip(labels) {
        for (c, s) in model.scores(x).into_iter().enumerate() {
            let yc = sign(y, model.classes[c]);
            if yc * s < 1.0 {
                for (col, v) in x.iter() {
                    g[col * k + c] -= inv_n * yc * v;
                }
            }
        }
    }
    g
}

pub fn train_svm<S: AsRef<str>>(
    texts: &[Vec<S>],
    labels: &[DialectLabel],
    config: &SvmConfig,
) -> Result<DialectClassifier, DialectModelError> {
    train_svm_traced(texts, labels, config).map(|(m, _)| m)
}

/// Pegasos with step `1/(λ·t)`, one pass over a freshly shuffled order per
/// epoch. Also returns the training objective after each epoch.
pub fn train_svm_traced<S: AsRef<str>>(
    texts: &[Vec<S>],
    labels: &[DialectLabel],
    config: &SvmConfig,
) -> Result<(DialectClassifier, Vec<f64>), DialectModelError> {
    if texts.len() != labels.len() {
        return Err(DialectModelError::LengthMismatch {
            texts: texts.len(),
            labels: labels.len(),
        });
    }
    if !(config.regularization > 0.0) || !config.regularization.is_finite() {
        return Err(DialectModelError::Config("regularization must be positive".into()));
    }
    if config.epochs == 0 {
        return Err(DialectModelError::Config("epochs must be at least 1".into()));
    }
    if !config.dimension.is_power_of_two() {
        return Err(DialectModelError::Config(format!(
            "dimension {} is not a power of two",
            config.dimension
        )));
    }
    let mut observed: Vec<DialectLabel> = labels.to_vec();
    observed.sort();
    observed.dedup();
    if let Some(required) = &config.classes {
        if let Some(missing) = required.iter().find(|c| !observed.contains(c)) {
            return Err(DialectModelError::MissingClass(*missing));
        }
    }
    if observed.len() < 2 || labels.len() < observed.len() {
        return Err(DialectModelError::TooFewClasses {
            classes: observed.len(),
            examples: labels.len(),
        });
    }

    let k = observed.len();
    let data: Vec<SparseVec> = texts
        .iter()
        .map(|t| unigram_presence(t, config.dimension))
        .collect();
    let lambda = config.regularization;
    let mut model = SvmModel::zeros(observed, config.dimension);
    let mut scale = 1.0;
    let mut t: u64 = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &data[i];
            let scores: Vec<f64> = model.scores(x).into_iter().map(|s| s * scale).collect();

            let factor = 1.0 - eta * lambda;
            if factor == 0.0 {
                model.weights.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= factor;
                if scale < MIN_SCALE {
                    model.weights.iter_mut().for_each(|w| *w *= scale);
                    scale = 1.0;
                }
            }
            for (c, s) in scores.into_iter().enumerate() {
                let y = sign(labels[i], model.classes[c]);
                if y * s < 1.0 {
                    let step = eta * y / scale;
                    for (col, v) in x.iter() {
                        model.weights[col * k + c] += step * v;
                    }
                }
            }
        }
        let snapshot = SvmModel {
            classes: model.classes.clone(),
            dimension: model.dimension,
            weights: model.weights.iter().map(|w| w * scale).collect(),
        };
        history.push(svm_objective(&snapshot, &data, labels, lambda));
    }
    if scale != 1.0 {
        model.weights.iter_mut().for_each(|w| *w *= scale);
    }
    Ok((DialectClassifier::Svm(model), history))
}

fn counts(labels: &[DialectLabel]) -> BTreeMap<DialectLabel, usize> {
    let mut m = BTreeMap::new();
    for l in labels {
        *m.entry(*l).or_insert(0) += 1;
    }
    m
}

pub fn fit_baseline(
    labels: &[DialectLabel],
    kind: BaselineKind,
    seed: u64,
) -> Result<DialectClassifier, DialectModelError> {
    if labels.is_empty() {
        return Err(DialectModelError::Empty);
    }
    let counts = counts(labels);
    Ok(match kind {
        BaselineKind::Majority => {
            let mut best = None;
            for (&label, &n) in &counts {
                if best.map_or(true, |(_, m)| n > m) {
                    best = Some((label, n));
                }
            }
            DialectClassifier::Majority(best.expect("non-empty").0)
        }
        BaselineKind::Random => {
            let total = labels.len() as f64;
            DialectClassifier::Random {
                distribution: counts
                    .into_iter()
                    .map(|(l, n)| (l, n as f64 / total))
                    .collect(),
                seed,
            }
        }
    })
}

/// Predicts one instance. `counter` is the instance's position in the
/// prediction stream and only matters for the random baseline.
pub fn predict_dialect<S: AsRef<str>>(
    classifier: &DialectClassifier,
    tokens: &[S],
    counter: u64,
) -> DialectLabel {
    match classifier {
        DialectClassifier::Svm(model) => {
            let scores = model.scores(&model.featurize(tokens));
            let mut best = 0;
            for (c, s) in scores.iter().enumerate() {
                if *s > scores[best] {
                    best = c;
                }
            }
            model.classes[best]
        }
        DialectClassifier::Majority(label) => *label,
        DialectClassifier::Random { distribution, seed } => {
            let key = fnv1a64(&format!("{seed}\u{1f}{counter}"));
            let u: f64 = ChaCha8Rng::seed_from_u64(key).gen();
            let mut acc = 0.0;
            for (label, p) in distribution {
                acc += p;
                if u < acc {
                    return *label;
                }
            }
            distribution
                .iter()
                .rev()
                .find(|(_, p)| *p > 0.0)
                .map(|(l, _)| *l)
                .expect("distribution has positive mass")
        }
    }
}

pub fn predict_dialects<S: AsRef<str>>(
    classifier: &DialectClassifier,
    texts: &[Vec<S>],
) -> Vec<DialectLabel> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| predict_dialect(classifier, t, i as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use DialectLabel::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn separable_two_class() {
        let texts: Vec<Vec<String>> = [
            "eg vil ha kaffi",
            "kva gjer eg no",
            "eg heiter ola",
            "jeg vil ha kaffe",
            "hva gjør jeg nå",
            "jeg heter ola",
        ]
        .iter()
        .map(|s| toks(s))
        .collect();
        let labels = [V, V, V, B, B, B];
        let config = SvmConfig { dimension: 1 << 12, ..Default::default() };
        let clf = train_svm(&texts, &labels, &config).unwrap();
        assert_eq!(predict_dialects(&clf, &texts), labels);
        assert_eq!(clf, train_svm(&texts, &labels, &config).unwrap());
    }

    #[test]
    fn svm_errors() {
        let texts = vec![toks("a"), toks("b")];
        let config = SvmConfig { dimension: 1 << 8, ..Default::default() };
        assert!(matches!(
            train_svm(&texts, &[V], &config),
            Err(DialectModelError::LengthMismatch { .. })
        ));
        assert!(matches!(
            train_svm(&texts, &[V, V], &config),
            Err(DialectModelError::TooFewClasses { .. })
        ));
        let strict = SvmConfig { classes: Some(DialectLabel::ALL.to_vec()), ..config.clone() };
        assert_eq!(train_svm(&texts, &[V, B], &strict), Err(DialectModelError::MissingClass(N)));
        let bad = SvmConfig { regularization: 0.0, ..config };
        assert!(matches!(train_svm(&texts, &[V, B], &bad), Err(DialectModelError::Config(_))));
    }

    #[test]
    fn zero_svm_picks_first_class() {
        let clf = DialectClassifier::Svm(SvmModel::zeros(vec![B, N, T, V], 1 << 8));
        assert_eq!(predict_dialect(&clf, &["hei"], 0), B);
    }

    #[test]
    fn majority_baseline() {
        let mut labels = vec![V; 962];
        labels.extend(vec![T; 580]);
        labels.extend(vec![N; 386]);
        labels.extend(vec![B; 188]);
        let clf = fit_baseline(&labels, BaselineKind::Majority, 0).unwrap();
        assert_eq!(clf, DialectClassifier::Majority(V));
        assert_eq!(predict_dialect(&clf, &["x"], 3), V);
        // ties resolve to label order
        let tie = fit_baseline(&[T, N, T, N], BaselineKind::Majority, 0).unwrap();
        assert_eq!(tie, DialectClassifier::Majority(N));
        assert_eq!(fit_baseline(&[], BaselineKind::Majority, 0), Err(DialectModelError::Empty));
    }

    #[test]
    fn random_baseline() {
        let point = fit_baseline(&[T, T, T], BaselineKind::Random, 1).unwrap();
        assert_eq!(point, DialectClassifier::Random { distribution: vec![(T, 1.0)], seed: 1 });
        assert!((0..50).all(|i| predict_dialect(&point, &["x"], i) == T));

        let uniform = fit_baseline(&[B, N, T, V], BaselineKind::Random, 7).unwrap();
        let DialectClassifier::Random { distribution, .. } = &uniform else { unreachable!() };
        assert!(distribution.iter().all(|(_, p)| *p == 0.25));
        let a: Vec<_> = (0..100).map(|i| predict_dialect(&uniform, &["x"], i)).collect();
        let b: Vec<_> = (0..100).map(|i| predict_dialect(&uniform, &["y"], i)).collect();
        assert_eq!(a, b);
        for l in DialectLabel::ALL {
            assert!(a.contains(&l));
        }
    }

    #[test]
    fn objective_decreases() {
        let texts: Vec<Vec<String>> = (0..40)
            .map(|i| toks(&format!("w{} {} f{}", i % 7, ["eg", "jeg", "æ"][i % 3], i % 5)))
            .collect();
        let labels: Vec<DialectLabel> = (0..40).map(|i| [V, B, T][i % 3]).collect();
        let config = SvmConfig { dimension: 1 << 10, epochs: 10, ..Default::default() };
        let (_, history) = train_svm_traced(&texts, &labels, &config).unwrap();
        assert!(history.last().unwrap() < &history[0]);
    }
}
