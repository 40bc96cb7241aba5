//! Joint intent detection and slot filling over hashed linear features.
//!
//! Two softmax heads share one feature map: the intent head scores the mean
//! of the tokens' own features, the slot head scores each token's windowed
//! features. Training minimises
//!
//! ```text
//! L_total = λ · L_slot + (1 − λ) · L_intent
//! ```
//!
//! where `L_slot` is the mean token cross-entropy and `L_intent` the mean
//! instance cross-entropy of a batch.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{validate_bio, LabelVocab, SidInstance, SlotTag};
use crate::features::{featurize_instance, FeatureConfig, FeatureError, InstanceFeatures, SparseVec};

// Renormalisation threshold for the lazily applied weight decay.
const MIN_SCALE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("instance at position {0} lacks an intent or slot annotation")]
    MissingAnnotation(usize),
    #[error("intent {0:?} is not in the vocabulary")]
    UnknownIntent(String),
    #[error("slot tag {0:?} is not in the vocabulary")]
    UnknownTag(String),
    #[error("vocabulary has no intents")]
    EmptyVocab,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("cannot predict on an empty token sequence")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the slot loss; the intent loss gets `1 − lambda`.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.7,
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 32,
            weight_decay: 1e-5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.weight_decay >= 0.0) || self.learning_rate * self.weight_decay >= 1.0 {
            return bad("weight decay must be non-negative and below 1 / learning rate");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub loss_slot: f64,
    pub loss_intent: f64,
    pub loss_total: f64,
}

impl LossBreakdown {
    pub fn combine(loss_slot: f64, loss_intent: f64, lambda: f64) -> Self {
        LossBreakdown {
            loss_slot,
            loss_intent,
            loss_total: loss_slot * lambda + loss_intent * (1.0 - lambda),
        }
    }
}

/// Two-head linear model. Weight matrices are stored feature-major:
/// entry `(row, col)` lives at `col * rows + row`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLinearModel {
    vocab: LabelVocab,
    features: FeatureConfig,
    tags: Vec<SlotTag>,
    pub(crate) intent_weights: Vec<f64>,
    pub(crate) intent_bias: Vec<f64>,
    pub(crate) slot_weights: Vec<f64>,
    pub(crate) slot_bias: Vec<f64>,
}

impl JointLinearModel {
    /// Zero-initialised model.
    pub fn new(vocab: LabelVocab, features: FeatureConfig) -> Result<Self, ModelError> {
        features.validate()?;
        let ni = vocab.intents().len();
        let nt = vocab.num_tags();
        Ok(JointLinearModel {
            tags: vocab.tags(),
            intent_weights: vec![0.0; ni * features.dimension],
            intent_bias: vec![0.0; ni],
            slot_weights: vec![0.0; nt * features.dimension],
            slot_bias: vec![0.0; nt],
            vocab,
            features,
        })
    }

    pub(crate) fn from_parts(
        vocab: LabelVocab,
        features: FeatureConfig,
        intent_weights: Vec<f64>,
        intent_bias: Vec<f64>,
        slot_weights: Vec<f64>,
        slot_bias: Vec<f64>,
    ) -> Result<Self, String> {
        features.validate().map_err(|e| e.to_string())?;
        let ni = vocab.intents().len();
        let nt = vocab.num_tags();
        let d = features.dimension;
        if intent_weights.len() != ni * d
            || intent_bias.len() != ni
            || slot_weights.len() != nt * d
            || slot_bias.len() != nt
        {
            return Err("weight shapes do not match vocabulary and dimension".into());
        }
        Ok(JointLinearModel {
            tags: vocab.tags(),
            vocab,
            features,
            intent_weights,
            intent_bias,
            slot_weights,
            slot_bias,
        })
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.features
    }

    pub fn num_intents(&self) -> usize {
        self.intent_bias.len()
    }

    pub fn num_tags(&self) -> usize {
        self.slot_bias.len()
    }

    pub fn intent_weight(&self, row: usize, col: usize) -> f64 {
        self.intent_weights[col * self.num_intents() + row]
    }

    pub fn slot_weight(&self, row: usize, col: usize) -> f64 {
        self.slot_weights[col * self.num_tags() + row]
    }

    pub fn set_intent_weight(&mut self, row: usize, col: usize, value: f64) {
        let n = self.num_intents();
        self.intent_weights[col * n + row] = value;
    }

    pub fn set_slot_weight(&mut self, row: usize, col: usize, value: f64) {
        let n = self.num_tags();
        self.slot_weights[col * n + row] = value;
    }

    pub fn intent_weights(&self) -> &[f64] {
        &self.intent_weights
    }

    pub fn slot_weights(&self) -> &[f64] {
        &self.slot_weights
    }

    pub fn intent_bias(&self) -> &[f64] {
        &self.intent_bias
    }

    pub fn slot_bias(&self) -> &[f64] {
        &self.slot_bias
    }

    pub fn intent_bias_mut(&mut self) -> &mut [f64] {
        &mut self.intent_bias
    }

    pub fn slot_bias_mut(&mut self) -> &mut [f64] {
        &mut self.slot_bias
    }

    /// Multiplies every weight and bias of both heads by `factor`.
    pub fn scale_parameters(&mut self, factor: f64) {
        for w in self
            .intent_weights
            .iter_mut()
            .chain(&mut self.intent_bias)
            .chain(&mut self.slot_weights)
            .chain(&mut self.slot_bias)
        {
            *w *= factor;
        }
    }

    pub fn intent_logits(&self, pooled: &SparseVec) -> Vec<f64> {
        head_logits(&self.intent_weights, 1.0, &self.intent_bias, pooled)
    }

    pub fn slot_logits(&self, token: &SparseVec) -> Vec<f64> {
        head_logits(&self.slot_weights, 1.0, &self.slot_bias, token)
    }

    fn encode(&self, instances: &[SidInstance]) -> Result<Vec<Encoded>, ModelError> {
        instances
            .iter()
            .enumerate()
            .map(|(pos, inst)| {
                let (Some(intent), Some(slots)) = (inst.intent(), inst.slots()) else {
                    return Err(ModelError::MissingAnnotation(pos));
                };
                let intent = self
                    .vocab
                    .intent_index(intent)
                    .ok_or_else(|| ModelError::UnknownIntent(intent.to_string()))?;
                let tags = slots
                    .iter()
                    .map(|t| {
                        self.vocab
                            .tag_index(t)
                            .ok_or_else(|| ModelError::UnknownTag(t.to_string()))
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Encoded {
                    features: featurize_instance(inst.tokens(), &self.features),
                    intent,
                    tags,
                })
            })
            .collect()
    }
}

fn head_logits(weights: &[f64], scale: f64, bias: &[f64], x: &SparseVec) -> Vec<f64> {
    let rows = bias.len();
    let mut z = vec![0.0; rows];
    for (col, v) in x.iter() {
        let block = &weights[col * rows..(col + 1) * rows];
        for (zr, w) in z.iter_mut().zip(block) {
            *zr += w * v;
        }
    }
    for (zr, b) in z.iter_mut().zip(bias) {
        *zr = *zr * scale + b;
    }
    z
}

/// Softmax probabilities and the cross-entropy of `gold`.
fn softmax_xent(z: &[f64], gold: usize) -> (Vec<f64>, f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = max + sum.ln() - z[gold];
    (exps.into_iter().map(|e| e / sum).collect(), loss)
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate().skip(1) {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

struct Encoded {
    features: InstanceFeatures,
    intent: usize,
    tags: Vec<usize>,
}

/// Gradient of `L_total`. Weight blocks are keyed by feature column, each
/// value holding one entry per head row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointGradient {
    pub intent: BTreeMap<usize, Vec<f64>>,
    pub intent_bias: Vec<f64>,
    pub slot: BTreeMap<usize, Vec<f64>>,
    pub slot_bias: Vec<f64>,
}

impl JointGradient {
    pub fn intent_weight(&self, row: usize, col: usize) -> f64 {
        self.intent.get(&col).map_or(0.0, |g| g[row])
    }

    pub fn slot_weight(&self, row: usize, col: usize) -> f64 {
        self.slot.get(&col).map_or(0.0, |g| g[row])
    }
}

/// Weight view used during training: true weights are `scale * raw`.
struct Heads<'a> {
    intent: (&'a [f64], f64, &'a [f64]),
    slot: (&'a [f64], f64, &'a [f64]),
}

impl<'a> Heads<'a> {
    fn of(model: &'a JointLinearModel) -> Self {
        Heads {
            intent: (&model.intent_weights, 1.0, &model.intent_bias),
            slot: (&model.slot_weights, 1.0, &model.slot_bias),
        }
    }
}

fn accumulate(grad: &mut BTreeMap<usize, Vec<f64>>, bias: &mut [f64], x: &SparseVec, d: &[f64]) {
    for (col, v) in x.iter() {
        let g = grad.entry(col).or_insert_with(|| vec![0.0; d.len()]);
        for (gr, dr) in g.iter_mut().zip(d) {
            *gr += dr * v;
        }
    }
    for (b, dr) in bias.iter_mut().zip(d) {
        *b += dr;
    }
}

fn batch_loss(
    heads: &Heads<'_>,
    batch: &[&Encoded],
    lambda: f64,
    mut grad: Option<&mut JointGradient>,
) -> LossBreakdown {
    let n_tokens: usize = batch.iter().map(|e| e.tags.len()).sum();
    let (iw, is, ib) = heads.intent;
    let (sw, ss, sb) = heads.slot;
    let intent_scale = (1.0 - lambda) / batch.len() as f64;
    let slot_scale = lambda / n_tokens as f64;
    let mut intent_sum = 0.0;
    let mut slot_sum = 0.0;
    for enc in batch {
        let z = head_logits(iw, is, ib, &enc.features.pooled);
        let (mut p, loss) = softmax_xent(&z, enc.intent);
        intent_sum += loss;
        if let Some(g) = grad.as_deref_mut() {
            if intent_scale != 0.0 {
                p[enc.intent] -= 1.0;
                p.iter_mut().for_each(|v| *v *= intent_scale);
                accumulate(&mut g.intent, &mut g.intent_bias, &enc.features.pooled, &p);
            }
        }
        for (x, &gold) in enc.features.per_token.iter().zip(&enc.tags) {
            let z = head_logits(sw, ss, sb, x);
            let (mut p, loss) = softmax_xent(&z, gold);
            slot_sum += loss;
            if let Some(g) = grad.as_deref_mut() {
                if slot_scale != 0.0 {
                    p[gold] -= 1.0;
                    p.iter_mut().for_each(|v| *v *= slot_scale);
                    accumulate(&mut g.slot, &mut g.slot_bias, x, &p);
                }
            }
        }
    }
    LossBreakdown::combine(
        slot_sum / n_tokens as f64,
        intent_sum / batch.len() as f64,
        lambda,
    )
}

fn check_lambda(lambda: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(ModelError::Config(format!("lambda {lambda} outside [0, 1]")))
    }
}

/// Loss of `model` on a batch of fully annotated instances.
pub fn multitask_loss(
    model: &JointLinearModel,
    batch: &[SidInstance],
    lambda: f64,
) -> Result<LossBreakdown, ModelError> {
    check_lambda(lambda)?;
    if batch.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let enc = model.encode(batch)?;
    let refs: Vec<&Encoded> = enc.iter().collect();
    Ok(batch_loss(&Heads::of(model), &refs, lambda, None))
}

/// Loss and its analytic gradient with respect to every parameter.
pub fn multitask_gradient(
    model: &JointLinearModel,
    batch: &[SidInstance],
    lambda: f64,
) -> Result<(LossBreakdown, JointGradient), ModelError> {
    check_lambda(lambda)?;
    if batch.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let enc = model.encode(batch)?;
    let refs: Vec<&Encoded> = enc.iter().collect();
    let mut grad = JointGradient {
        intent_bias: vec![0.0; model.num_intents()],
        slot_bias: vec![0.0; model.num_tags()],
        ..Default::default()
    };
    let loss = batch_loss(&Heads::of(model), &refs, lambda, Some(&mut grad));
    Ok((loss, grad))
}

/// Dense head weights with lazily applied multiplicative decay.
struct DecayedHead {
    raw: Vec<f64>,
    scale: f64,
}

impl DecayedHead {
    fn step(&mut self, grad: &BTreeMap<usize, Vec<f64>>, lr: f64, decay: f64) {
        self.scale *= 1.0 - lr * decay;
        if self.scale < MIN_SCALE {
            let s = self.scale;
            self.raw.iter_mut().for_each(|w| *w *= s);
            self.scale = 1.0;
        }
        let step = lr / self.scale;
        for (col, g) in grad {
            let rows = g.len();
            for (w, gr) in self.raw[col * rows..(col + 1) * rows].iter_mut().zip(g) {
                *w -= step * gr;
            }
        }
    }

    fn into_weights(self) -> Vec<f64> {
        if self.scale == 1.0 {
            return self.raw;
        }
        let s = self.scale;
        self.raw.into_iter().map(|w| w * s).collect()
    }
}

/// Trains from zero weights; returns the final-epoch model.
pub fn train_joint(
    corpus: &[SidInstance],
    vocab: &LabelVocab,
    features: &FeatureConfig,
    config: &TrainConfig,
) -> Result<JointLinearModel, ModelError> {
    train_joint_traced(corpus, vocab, features, config).map(|(m, _)| m)
}

/// Like [`train_joint`], also returning the full-corpus loss after each epoch.
pub fn train_joint_traced(
    corpus: &[SidInstance],
    vocab: &LabelVocab,
    features: &FeatureConfig,
    config: &TrainConfig,
) -> Result<(JointLinearModel, Vec<LossBreakdown>), ModelError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    if vocab.intents().is_empty() {
        return Err(ModelError::EmptyVocab);
    }
    let model = JointLinearModel::new(vocab.clone(), features.clone())?;
    let encoded = model.encode(corpus)?;
    let all: Vec<&Encoded> = encoded.iter().collect();

    let lambda = config.lambda;
    let train_intent = lambda < 1.0;
    let train_slot = lambda > 0.0;
    let JointLinearModel {
        vocab,
        features,
        tags,
        intent_weights,
        mut intent_bias,
        slot_weights,
        mut slot_bias,
    } = model;
    let mut intent = DecayedHead { raw: intent_weights, scale: 1.0 };
    let mut slot = DecayedHead { raw: slot_weights, scale: 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Encoded> = chunk.iter().map(|&i| &encoded[i]).collect();
            let mut grad = JointGradient {
                intent_bias: vec![0.0; intent_bias.len()],
                slot_bias: vec![0.0; slot_bias.len()],
                ..Default::default()
            };
            let heads = Heads {
                intent: (&intent.raw, intent.scale, &intent_bias),
                slot: (&slot.raw, slot.scale, &slot_bias),
            };
            batch_loss(&heads, &batch, lambda, Some(&mut grad));
            if train_intent {
                intent.step(&grad.intent, config.learning_rate, config.weight_decay);
                for (b, g) in intent_bias.iter_mut().zip(&grad.intent_bias) {
                    *b -= config.learning_rate * g;
                }
            }
            if train_slot {
                slot.step(&grad.slot, config.learning_rate, config.weight_decay);
                for (b, g) in slot_bias.iter_mut().zip(&grad.slot_bias) {
                    *b -= config.learning_rate * g;
                }
            }
        }
        let heads = Heads {
            intent: (&intent.raw, intent.scale, &intent_bias),
            slot: (&slot.raw, slot.scale, &slot_bias),
        };
        history.push(batch_loss(&heads, &all, lambda, None));
    }

    let model = JointLinearModel {
        vocab,
        features,
        tags,
        intent_weights: intent.into_weights(),
        intent_bias,
        slot_weights: slot.into_weights(),
        slot_bias,
    };
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPrediction {
    pub intent: String,
    /// BIO-valid tag sequence, one per token.
    pub slots: Vec<SlotTag>,
}

/// Argmax intent and per-token argmax tags, BIO-repaired. Ties go to the
/// earlier vocabulary entry.
pub fn predict_joint<S: AsRef<str>>(
    model: &JointLinearModel,
    tokens: &[S],
) -> Result<JointPrediction, ModelError> {
    if tokens.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if model.num_intents() == 0 {
        return Err(ModelError::EmptyVocab);
    }
    let feats = featurize_instance(tokens, &model.features);
    let intent = argmax(&model.intent_logits(&feats.pooled));
    let raw: Vec<SlotTag> = feats
        .per_token
        .iter()
        .map(|x| model.tags[argmax(&model.slot_logits(x))].clone())
        .collect();
    Ok(JointPrediction {
        intent: model.vocab.intents()[intent].clone(),
        slots: validate_bio(&raw).1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, is_valid_bio};
    use rand::Rng;

    fn small_features() -> FeatureConfig {
        FeatureConfig {
            dimension: 1 << 8,
            ..Default::default()
        }
    }

    fn instance(text: &str, tags: &str, intent: &str) -> SidInstance {
        SidInstance::new(
            None,
            text.split(' ').map(str::to_string).collect(),
            Some(tags.split(' ').map(|t| t.parse().unwrap()).collect()),
            Some(intent.into()),
            None,
        )
        .unwrap()
    }

    fn toy_corpus() -> Vec<SidInstance> {
        vec![
            instance("sett alarm kl. 6", "O O B-datetime I-datetime", "alarm/set_alarm"),
            instance("blir det sol i dag", "O O B-weather O B-datetime", "weather/find"),
            instance("alarm i morgen", "O B-datetime I-datetime", "alarm/set_alarm"),
            instance("regn i Bergen", "B-weather O B-location", "weather/find"),
        ]
    }

    #[test]
    fn loss_arithmetic() {
        let l = LossBreakdown::combine(1.0, 0.0, 0.7);
        assert!((l.loss_total - 0.7).abs() < 1e-15);
        let l = LossBreakdown::combine(0.4, 1.3, 0.0);
        assert_eq!(l.loss_total, l.loss_intent);
    }

    #[test]
    fn zero_model_loss_is_log_classes() {
        let corpus = toy_corpus();
        let vocab = build_vocab(&corpus);
        let model = JointLinearModel::new(vocab.clone(), small_features()).unwrap();
        let l = multitask_loss(&model, &corpus, 0.7).unwrap();
        assert!((l.loss_intent - (vocab.intents().len() as f64).ln()).abs() < 1e-12);
        assert!((l.loss_slot - (vocab.num_tags() as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_errors() {
        let corpus = toy_corpus();
        let vocab = build_vocab(&corpus[..1]);
        let model = JointLinearModel::new(vocab, small_features()).unwrap();
        assert!(matches!(
            multitask_loss(&model, &corpus, 0.7),
            Err(ModelError::UnknownTag(_) | ModelError::UnknownIntent(_))
        ));
        let bare = vec![SidInstance::from_tokens(["x"]).unwrap()];
        assert_eq!(
            multitask_loss(&model, &bare, 0.7),
            Err(ModelError::MissingAnnotation(0))
        );
        assert!(multitask_loss(&model, &corpus[..1], 1.5).is_err());
    }

    #[test]
    fn zero_model_predicts_first_labels() {
        let vocab = build_vocab(&toy_corpus());
        let model = JointLinearModel::new(vocab.clone(), small_features()).unwrap();
        let p = predict_joint(&model, &["hei", "der"]).unwrap();
        assert_eq!(p.intent, vocab.intents()[0]);
        assert_eq!(p.slots, vec![SlotTag::Outside; 2]);
        assert_eq!(predict_joint::<&str>(&model, &[]), Err(ModelError::EmptyInput));
    }

    #[test]
    fn predictions_are_bio_valid_even_for_random_weights() {
        let vocab = build_vocab(&toy_corpus());
        let mut model = JointLinearModel::new(vocab, small_features()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        model.slot_weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
        for k in 0..20 {
            let toks: Vec<String> = (0..(k % 7 + 1)).map(|j| format!("t{}", j * k)).collect();
            let p = predict_joint(&model, &toks).unwrap();
            assert!(is_valid_bio(&p.slots));
            assert_eq!(p.slots.len(), toks.len());
        }
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = toy_corpus();
        let vocab = build_vocab(&corpus);
        let config = TrainConfig { epochs: 5, batch_size: 2, seed: 11, ..Default::default() };
        let a = train_joint(&corpus, &vocab, &small_features(), &config).unwrap();
        let b = train_joint(&corpus, &vocab, &small_features(), &config).unwrap();
        let bits = |m: &JointLinearModel| -> Vec<u64> {
            m.intent_weights.iter().chain(&m.slot_weights).map(|w| w.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a, b);
    }

    #[test]
    fn training_fits_toy_corpus() {
        let corpus = toy_corpus();
        let vocab = build_vocab(&corpus);
        let config = TrainConfig { epochs: 100, batch_size: 2, seed: 1, ..Default::default() };
        let model = train_joint(&corpus, &vocab, &small_features(), &config).unwrap();
        for inst in &corpus {
            let p = predict_joint(&model, inst.tokens()).unwrap();
            assert_eq!(Some(p.intent.as_str()), inst.intent());
        }
    }

    #[test]
    fn rejects_bad_config() {
        let corpus = toy_corpus();
        let vocab = build_vocab(&corpus);
        for config in [
            TrainConfig { lambda: -0.1, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(matches!(
                train_joint(&corpus, &vocab, &small_features(), &config),
                Err(ModelError::Config(_))
            ));
        }
        assert_eq!(
            train_joint(&[], &vocab, &small_features(), &TrainConfig::default()),
            Err(ModelError::EmptyCorpus)
        );
    }

    #[test]
    fn decayed_head_matches_plain_update() {
        let mut head = DecayedHead { raw: vec![1.0, -2.0, 0.5, 3.0], scale: 1.0 };
        let mut plain = head.raw.clone();
        let mut grad = BTreeMap::new();
        grad.insert(1, vec![0.25, -0.5]);
        for _ in 0..3 {
            head.step(&grad, 0.1, 0.2);
            for w in plain.iter_mut() {
                *w *= 1.0 - 0.02;
            }
            plain[2] -= 0.1 * 0.25;
            plain[3] -= 0.1 * -0.5;
        }
        for (a, b) in head.into_weights().iter().zip(&plain) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
