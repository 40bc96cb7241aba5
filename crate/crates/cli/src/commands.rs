use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use sidkit::corpus::{build_vocab, deduplicate, parse_sid_file, split_by_origin, write_sid_file};
use sidkit::dialect::{fit_baseline, predict_dialects, train_svm, BaselineKind};
use sidkit::eval::{per_dialect_report, score_sid};
use sidkit::joint::{predict_joint, train_joint};
use sidkit::lexmap::{generate_silver, load_lexicon, Lexicon, LexiconError, VariantPolicy};
use sidkit::model_io::SavedModel;
use sidkit::predictions::{
    parse_dialect_predictions, parse_joint_predictions, write_dialect_predictions,
    write_joint_predictions, DialectPredictionRow, JointPredictionRow,
};
use sidkit::silver::{
    agreement_filter, clean_instance, downsample_to_distribution, filter_min_length,
    map_geolocation, parse_prediction_pairs, Agreement, DistributionSpec, GeoMapping, SilverError,
};
use sidkit::{FeatureConfig, SidInstance, SvmConfig, TrainConfig};

use crate::config::RunConfig;
use crate::CliError;

/// Files to write once every input has been validated.
#[derive(Debug, Default)]
pub struct Outputs(Vec<(PathBuf, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.0.push((path.into(), bytes.into()));
    }

    pub fn write(self) -> Result<(), CliError> {
        for (path, bytes) in self.0 {
            fs::write(&path, bytes)
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {path}: {e}")))
}

fn read_corpus(path: &str) -> Result<Vec<SidInstance>, CliError> {
    parse_sid_file(&read(path)?).map_err(|e| CliError::input(format!("{path}: {e}")))
}

/// Instance ids, which must be present and unique.
fn ids(instances: &[SidInstance], path: &str) -> Result<Vec<String>, CliError> {
    let mut seen = HashSet::new();
    instances
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let id = i
                .id()
                .ok_or_else(|| CliError::contract(format!("{path}: instance {} has no id", k + 1)))?;
            if !seen.insert(id) {
                return Err(CliError::contract(format!("{path}: duplicate instance id {id:?}")));
            }
            Ok(id.to_string())
        })
        .collect()
}

pub fn dedup(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let corpus = read_corpus(input)?;
    let kept = deduplicate(&corpus);
    eprintln!("removed {}", corpus.len() - kept.len());
    let mut outputs = Outputs::default();
    outputs.add(out, write_sid_file(&kept));
    Ok(outputs)
}

pub fn split(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let input = cfg.require("in")?;
    let prefix = cfg.require("out_prefix")?;
    let ratios = cfg.ratios()?;
    let seed = cfg.parse("seed")?;
    let corpus = read_corpus(input)?;
    let split = split_by_origin(&corpus, ratios, seed).map_err(|e| CliError::contract(e.to_string()))?;
    let mut outputs = Outputs::default();
    for (name, part) in ["train", "dev", "test"].iter().zip(split.parts()) {
        eprintln!("{name}: {} instances", part.len());
        outputs.add(format!("{prefix}.{name}.sid"), write_sid_file(part));
    }
    Ok(outputs)
}

pub fn augment(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let policy: VariantPolicy = cfg.parse("policy")?;
    let seed = cfg.parse("seed")?;
    let lexicon = match cfg.get("lexicon") {
        Some(path) => load_lexicon(&read(path)?).map_err(|e| CliError::input(format!("{path}: {e}")))?,
        None => Lexicon::starter(),
    };
    let corpus = read_corpus(input)?;
    let silver = generate_silver(&corpus, &lexicon, policy, seed).map_err(|e| match e {
        LexiconError::Load { .. } => CliError::input(e.to_string()),
        _ => CliError::contract(e.to_string()),
    })?;
    eprintln!("{} instances -> {} silver instances", corpus.len(), silver.len());
    let mut outputs = Outputs::default();
    outputs.add(out, write_sid_file(&silver));
    Ok(outputs)
}

/// `instance_id<TAB>city` rows.
fn parse_cities(source: &str, path: &str) -> Result<HashMap<String, String>, CliError> {
    let mut out = HashMap::new();
    for (idx, line) in source.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, city) = line
            .split_once('\t')
            .filter(|(id, city)| !id.is_empty() && !city.is_empty() && !city.contains('\t'))
            .ok_or_else(|| CliError::input(format!("{path} line {}: expected instance_id<TAB>city", idx + 1)))?;
        if out.insert(id.to_string(), city.to_string()).is_some() {
            return Err(CliError::input(format!("{path} line {}: duplicate instance id {id:?}", idx + 1)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AnnotateMode {
    /// Dialect from the speaker's city.
    Semi,
    /// Dialect from two agreeing classifiers.
    Auto,
}

pub fn annotate(cfg: &RunConfig, mode: AnnotateMode) -> Result<Outputs, CliError> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let seed = cfg.parse("seed")?;
    let min_tokens: usize = cfg.parse("min_tokens")?;
    let dist = match cfg.require("dist")? {
        "none" => None,
        _ => Some(cfg.parse::<DistributionSpec>("dist")?),
    };
    let corpus = read_corpus(input)?;
    let ids = ids(&corpus, input)?;

    // Resolve the label source before touching the corpus.
    enum Source {
        Geo(GeoMapping, HashMap<String, String>),
        Pairs(HashMap<String, Agreement>),
    }
    let source = match mode {
        AnnotateMode::Semi => {
            let geo = match cfg.get("geo") {
                Some(path) => GeoMapping::parse(&read(path)?).map_err(|e| CliError::input(format!("{path}: {e}")))?,
                None => GeoMapping::starter(),
            };
            let path = cfg.require("cities")?;
            Source::Geo(geo, parse_cities(&read(path)?, path)?)
        }
        AnnotateMode::Auto => {
            let path = cfg.require("preds")?;
            let pairs = parse_prediction_pairs(&read(path)?).map_err(|e| CliError::input(format!("{path}: {e}")))?;
            let mut map = HashMap::new();
            for p in pairs {
                let verdict = agreement_filter(p.dialect, p.nordial);
                if map.insert(p.instance_id.clone(), verdict).is_some() {
                    return Err(CliError::input(format!("{path}: duplicate instance id {:?}", p.instance_id)));
                }
            }
            Source::Pairs(map)
        }
    };

    let cleaned: Vec<SidInstance> = corpus
        .iter()
        .zip(&ids)
        .filter_map(|(inst, id)| {
            let c = clean_instance(inst);
            if c.is_none() {
                eprintln!("dropped {id}: only transcription markers");
            }
            c
        })
        .collect();
    let long = filter_min_length(&cleaned, min_tokens).map_err(|e| CliError::config(e.to_string()))?;
    eprintln!("{} of {} instances have at least {min_tokens} tokens", long.len(), corpus.len());

    let mut labelled = Vec::new();
    for inst in long {
        let id = inst.id().expect("ids checked").to_string();
        let label = match &source {
            Source::Geo(geo, cities) => match cities.get(&id) {
                None => {
                    eprintln!("dropped {id}: no city");
                    None
                }
                Some(city) => match map_geolocation(city, geo) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        eprintln!("dropped {id}: {e}");
                        None
                    }
                },
            },
            Source::Pairs(pairs) => match pairs.get(&id) {
                None => {
                    eprintln!("dropped {id}: no classifier predictions");
                    None
                }
                Some(Agreement::Discard) => None,
                Some(Agreement::Keep(d)) => Some(*d),
            },
        };
        if let Some(d) = label {
            labelled.push(inst.with_dialect(Some(d)));
        }
    }
    eprintln!("{} instances labelled", labelled.len());

    let result = match dist {
        Some(spec) if !labelled.is_empty() => {
            downsample_to_distribution(&labelled, &spec, seed).map_err(|e| match e {
                SilverError::EmptyClass(_) => CliError::contract(format!("cannot downsample: {e}")),
                other => CliError::contract(other.to_string()),
            })?
        }
        _ => labelled,
    };
    eprintln!("wrote {} instances", result.len());
    let mut outputs = Outputs::default();
    outputs.add(out, write_sid_file(&result));
    Ok(outputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TrainTask {
    /// Joint intent and slot model.
    Joint,
    /// Linear SVM dialect classifier.
    Svm,
    /// Most frequent dialect.
    Majority,
    /// Dialect drawn from the training distribution.
    Random,
}

fn dialect_data(corpus: &[SidInstance], path: &str) -> Result<(Vec<Vec<String>>, Vec<sidkit::DialectLabel>), CliError> {
    corpus
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let d = i
                .dialect()
                .ok_or_else(|| CliError::contract(format!("{path}: instance {} has no dialect", k + 1)))?;
            Ok((i.tokens().to_vec(), d))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.into_iter().unzip())
}

pub fn train(cfg: &RunConfig, task: TrainTask) -> Result<Outputs, CliError> {
    let input = cfg.require("in")?;
    let model_path = cfg.require("model")?;
    let seed = cfg.parse("seed")?;
    let model = match task {
        TrainTask::Joint => {
            let features = FeatureConfig {
                dimension: cfg.parse("dimension")?,
                char_ngram_min: cfg.parse("char_ngram_min")?,
                char_ngram_max: cfg.parse("char_ngram_max")?,
                window: cfg.parse("window")?,
            };
            features.validate().map_err(|e| CliError::config(e.to_string()))?;
            let config = TrainConfig {
                lambda: cfg.parse("lambda")?,
                learning_rate: cfg.parse("learning_rate")?,
                epochs: cfg.parse("epochs")?,
                batch_size: cfg.parse("batch_size")?,
                weight_decay: cfg.parse("weight_decay")?,
                seed,
            };
            config.validate().map_err(|e| CliError::config(e.to_string()))?;
            let corpus = read_corpus(input)?;
            let vocab = build_vocab(&corpus);
            let model = train_joint(&corpus, &vocab, &features, &config)
                .map_err(|e| CliError::contract(format!("{input}: {e}")))?;
            SavedModel::Joint(model)
        }
        TrainTask::Svm => {
            let config = SvmConfig {
                regularization: cfg.parse("svm_regularization")?,
                epochs: cfg.parse("svm_epochs")?,
                dimension: cfg.parse("svm_dimension")?,
                seed,
                classes: None,
            };
            let corpus = read_corpus(input)?;
            let (texts, labels) = dialect_data(&corpus, input)?;
            let clf = train_svm(&texts, &labels, &config).map_err(|e| CliError::contract(e.to_string()))?;
            SavedModel::Dialect(clf)
        }
        TrainTask::Majority | TrainTask::Random => {
            let kind = if task == TrainTask::Majority { BaselineKind::Majority } else { BaselineKind::Random };
            let corpus = read_corpus(input)?;
            let (_, labels) = dialect_data(&corpus, input)?;
            SavedModel::Dialect(fit_baseline(&labels, kind, seed).map_err(|e| CliError::contract(e.to_string()))?)
        }
    };
    eprintln!("trained {} model", model.kind());
    let mut outputs = Outputs::default();
    outputs.add(model_path, model.to_bytes());
    Ok(outputs)
}

pub fn load_model(path: &str) -> Result<SavedModel, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("cannot read {path}: {e}")))?;
    SavedModel::from_bytes(&bytes).map_err(|e| CliError::input(format!("{path}: {e}")))
}

pub fn predict(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let model = load_model(cfg.require("model")?)?;
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let corpus = read_corpus(input)?;
    let ids = ids(&corpus, input)?;
    let text = match &model {
        SavedModel::Joint(m) => {
            let rows = corpus
                .iter()
                .zip(ids)
                .map(|(inst, id)| {
                    let p = predict_joint(m, inst.tokens()).map_err(|e| CliError::contract(e.to_string()))?;
                    Ok(JointPredictionRow { instance_id: id, intent: p.intent, slots: p.slots })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            write_joint_predictions(&rows)
        }
        SavedModel::Dialect(clf) => {
            let texts: Vec<Vec<String>> = corpus.iter().map(|i| i.tokens().to_vec()).collect();
            let rows: Vec<DialectPredictionRow> = ids
                .into_iter()
                .zip(predict_dialects(clf, &texts))
                .map(|(instance_id, dialect)| DialectPredictionRow { instance_id, dialect })
                .collect();
            write_dialect_predictions(&rows)
        }
    };
    eprintln!("predicted {} instances with a {} model", corpus.len(), model.kind());
    let mut outputs = Outputs::default();
    outputs.add(out, text);
    Ok(outputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScoreTask {
    /// Span F1, intent accuracy and their λ-weighted average.
    Sid,
    /// Per-dialect precision, recall, F1 and weighted F1.
    Dialect,
}

/// Aligns predictions to gold by id; the id sets must be equal.
fn align<'a, T>(gold_ids: &[String], preds: &'a [T], id_of: impl Fn(&T) -> &str) -> Result<Vec<&'a T>, CliError> {
    let by_id: HashMap<&str, &T> = preds.iter().map(|p| (id_of(p), p)).collect();
    let missing: Vec<&str> = gold_ids.iter().map(String::as_str).filter(|id| !by_id.contains_key(id)).collect();
    let gold_set: HashSet<&str> = gold_ids.iter().map(String::as_str).collect();
    let extra: Vec<&str> = preds.iter().map(&id_of).filter(|id| !gold_set.contains(id)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(CliError::contract(format!(
            "gold and prediction ids differ: {} without prediction (first {:?}), {} unknown (first {:?})",
            missing.len(),
            missing.first(),
            extra.len(),
            extra.first()
        )));
    }
    Ok(gold_ids.iter().map(|id| by_id[id.as_str()]).collect())
}

pub fn score(cfg: &RunConfig, task: ScoreTask) -> Result<(Outputs, String), CliError> {
    let gold_path = cfg.require("gold")?;
    let preds_path = cfg.require("preds")?;
    let gold = read_corpus(gold_path)?;
    let gold_ids = ids(&gold, gold_path)?;
    let preds_text = read(preds_path)?;
    let (report, summary) = match task {
        ScoreTask::Sid => {
            let lambda: f64 = cfg.parse("lambda")?;
            let preds = parse_joint_predictions(&preds_text).map_err(|e| CliError::input(format!("{preds_path}: {e}")))?;
            let aligned = align(&gold_ids, &preds, |p| &p.instance_id)?;
            let mut gold_slots = Vec::new();
            let mut gold_intents = Vec::new();
            for (k, inst) in gold.iter().enumerate() {
                let (Some(slots), Some(intent)) = (inst.slots(), inst.intent()) else {
                    return Err(CliError::contract(format!("{gold_path}: instance {} lacks slots or intent", k + 1)));
                };
                if slots.len() != aligned[k].slots.len() {
                    return Err(CliError::contract(format!(
                        "{}: {} gold tags but {} predicted",
                        gold_ids[k],
                        slots.len(),
                        aligned[k].slots.len()
                    )));
                }
                gold_slots.push(slots);
                gold_intents.push(intent);
            }
            let pred_slots: Vec<&[sidkit::SlotTag]> = aligned.iter().map(|p| p.slots.as_slice()).collect();
            let pred_intents: Vec<&str> = aligned.iter().map(|p| p.intent.as_str()).collect();
            let s = score_sid(&gold_slots, &pred_slots, &gold_intents, &pred_intents, lambda)
                .map_err(|e| CliError::contract(e.to_string()))?;
            let c = s.slot.counts;
            let report = format!(
                "metric\tvalue\nslot_precision\t{:.6}\nslot_recall\t{:.6}\nslot_f1\t{:.6}\nintent_accuracy\t{:.6}\nlambda\t{lambda}\nlambda_average\t{:.6}\ngold_spans\t{}\npredicted_spans\t{}\nmatched_spans\t{}\n",
                s.slot.precision, s.slot.recall, s.slot.f1, s.intent_accuracy, s.lambda_average,
                c.gold, c.predicted, c.true_positives
            );
            let summary = format!(
                "slot_f1\tintent_acc\tlambda_avg\n{:.6}\t{:.6}\t{:.6}\n",
                s.slot.f1, s.intent_accuracy, s.lambda_average
            );
            (report, summary)
        }
        ScoreTask::Dialect => {
            let preds = parse_dialect_predictions(&preds_text).map_err(|e| CliError::input(format!("{preds_path}: {e}")))?;
            let aligned = align(&gold_ids, &preds, |p| &p.instance_id)?;
            let (_, gold_labels) = dialect_data(&gold, gold_path)?;
            let pred_labels: Vec<_> = aligned.iter().map(|p| p.dialect).collect();
            let r = per_dialect_report(&gold_labels, &pred_labels).map_err(|e| CliError::contract(e.to_string()))?;
            let report = format!("{}\n{}", r.to_tsv(), r.confusion_tsv());
            (report, format!("weighted_f1\n{:.6}\n", r.weighted_f1))
        }
    };
    let mut outputs = Outputs::default();
    if let Some(out) = cfg.get("out") {
        outputs.add(Path::new(out), report);
    }
    Ok((outputs, summary))
}
