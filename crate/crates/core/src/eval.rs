//! Shared-task metrics: exact-match span F1, intent accuracy, weighted F1
//! with per-class reports, and the lambda average of slot F1 and intent
//! accuracy.
//!
//! All scores reduce integer counts first and divide once at the end, so
//! counts gathered in any order (or in parallel, via the `merge` methods)
//! give identical results.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Display, Write};

use thiserror::Error;

use crate::corpus::{extract_spans, validate_bio, DialectLabel, SlotTag};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("gold has {gold} items but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("instance {index}: gold has {gold} tags but prediction has {pred}")]
    TagLengthMismatch { index: usize, gold: usize, pred: usize },
    #[error("nothing to score")]
    Empty,
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Span match counts, additive across instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpanCounts {
    pub true_positives: usize,
    pub gold: usize,
    pub predicted: usize,
}

impl SpanCounts {
    pub fn merge(self, other: SpanCounts) -> SpanCounts {
        SpanCounts {
            true_positives: self.true_positives + other.true_positives,
            gold: self.gold + other.gold,
            predicted: self.predicted + other.predicted,
        }
    }

    /// Counts for one instance; both sides are BIO-repaired first.
    pub fn of_instance(gold: &[SlotTag], pred: &[SlotTag]) -> SpanCounts {
        let spans = |tags: &[SlotTag]| {
            extract_spans(&validate_bio(tags).1).expect("repaired tags are BIO-valid")
        };
        let gold: HashSet<_> = spans(gold).into_iter().collect();
        let pred = spans(pred);
        SpanCounts {
            true_positives: pred.iter().filter(|s| gold.contains(*s)).count(),
            gold: gold.len(),
            predicted: pred.len(),
        }
    }

    pub fn scores(self) -> SpanScores {
        if self.gold == 0 && self.predicted == 0 {
            return SpanScores { precision: 1.0, recall: 1.0, f1: 1.0, counts: self };
        }
        let precision = ratio(self.true_positives, self.predicted);
        let recall = ratio(self.true_positives, self.gold);
        SpanScores { precision, recall, f1: harmonic(precision, recall), counts: self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: SpanCounts,
}

/// Micro-averaged exact-match span precision, recall and F1.
pub fn span_f1<G: AsRef<[SlotTag]>, P: AsRef<[SlotTag]>>(
    gold: &[G],
    pred: &[P],
) -> Result<SpanScores, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    let mut total = SpanCounts::default();
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g.len() != p.len() {
            return Err(EvalError::TagLengthMismatch { index, gold: g.len(), pred: p.len() });
        }
        total = total.merge(SpanCounts::of_instance(g, p));
    }
    Ok(total.scores())
}

pub fn intent_accuracy<S: PartialEq>(gold: &[S], pred: &[S]) -> Result<f64, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    Ok(ratio(hits, gold.len()))
}

fn check_unit(name: &'static str, value: f64) -> Result<(), EvalError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(EvalError::OutOfRange { name, value })
    }
}

/// `λ · slot_f1 + (1 − λ) · intent_accuracy`.
pub fn lambda_average(slot_f1: f64, intent_accuracy: f64, lambda: f64) -> Result<f64, EvalError> {
    check_unit("slot_f1", slot_f1)?;
    check_unit("intent_accuracy", intent_accuracy)?;
    check_unit("lambda", lambda)?;
    Ok(lambda * slot_f1 + (1.0 - lambda) * intent_accuracy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidScores {
    pub slot: SpanScores,
    pub intent_accuracy: f64,
    pub lambda_average: f64,
}

pub fn score_sid<G: AsRef<[SlotTag]>, P: AsRef<[SlotTag]>, S: PartialEq>(
    gold_slots: &[G],
    pred_slots: &[P],
    gold_intents: &[S],
    pred_intents: &[S],
    lambda: f64,
) -> Result<SidScores, EvalError> {
    let slot = span_f1(gold_slots, pred_slots)?;
    let intent_accuracy = intent_accuracy(gold_intents, pred_intents)?;
    Ok(SidScores {
        slot,
        intent_accuracy,
        lambda_average: lambda_average(slot.f1, intent_accuracy, lambda)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class report over a fixed label list. `confusion[g][p]` counts gold
/// label `g` predicted as `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<L> {
    pub labels: Vec<L>,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<usize>>,
    pub weighted_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

impl<L: PartialEq> EvalReport<L> {
    pub fn class(&self, label: &L) -> Option<&ClassMetrics> {
        self.labels.iter().position(|l| l == label).map(|i| &self.per_class[i])
    }
}

impl<L: Display> EvalReport<L> {
    /// `label precision recall f1 support` rows, then weighted, macro and
    /// accuracy summary rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tprecision\trecall\tf1\tsupport\n");
        for (l, m) in self.labels.iter().zip(&self.per_class) {
            let _ = writeln!(
                out,
                "{l}\t{:.6}\t{:.6}\t{:.6}\t{}",
                m.precision, m.recall, m.f1, m.support
            );
        }
        let total: usize = self.per_class.iter().map(|m| m.support).sum();
        let _ = writeln!(out, "weighted_f1\t\t\t{:.6}\t{total}", self.weighted_f1);
        let _ = writeln!(out, "macro_f1\t\t\t{:.6}\t{total}", self.macro_f1);
        let _ = writeln!(out, "accuracy\t\t\t{:.6}\t{total}", self.accuracy);
        out
    }

    /// Confusion matrix with gold labels as rows.
    pub fn confusion_tsv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for l in &self.labels {
            let _ = write!(out, "\t{l}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            let _ = write!(out, "{l}");
            for n in row {
                let _ = write!(out, "\t{n}");
            }
            out.push('\n');
        }
        out
    }
}

impl<L: Display> Display for EvalReport<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>9} {:>9} {:>9} {:>8}", "label", "precision", "recall", "f1", "support")?;
        for (l, m) in self.labels.iter().zip(&self.per_class) {
            writeln!(
                f,
                "{:<12} {:>9.2} {:>9.2} {:>9.2} {:>8}",
                l.to_string(),
                100.0 * m.precision,
                100.0 * m.recall,
                100.0 * m.f1,
                m.support
            )?;
        }
        writeln!(f, "weighted F1 {:.2}", 100.0 * self.weighted_f1)?;
        write!(f, "macro F1 {:.2}", 100.0 * self.macro_f1)
    }
}

fn report_over<L: PartialEq + Clone>(
    labels: Vec<L>,
    gold: &[L],
    pred: &[L],
) -> Result<EvalReport<L>, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let k = labels.len();
    let index = |l: &L| labels.iter().position(|x| x == l).expect("label list covers inputs");
    let mut confusion = vec![vec![0usize; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        confusion[index(g)][index(p)] += 1;
    }
    let n = gold.len();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        per_class.push(ClassMetrics { precision, recall, f1: harmonic(precision, recall), support });
    }
    let weighted_f1 = per_class
        .iter()
        .map(|m| m.support as f64 / n as f64 * m.f1)
        .sum();
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64;
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        labels,
        per_class,
        confusion,
        weighted_f1,
        macro_f1,
        accuracy: ratio(correct, n),
    })
}

/// Support-weighted F1 over the union of gold and predicted labels.
pub fn weighted_f1<L: Ord + Clone>(gold: &[L], pred: &[L]) -> Result<EvalReport<L>, EvalError> {
    let labels: Vec<L> = gold
        .iter()
        .chain(pred)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    report_over(labels, gold, pred)
}

/// Report with a row for each of the four dialect labels, present or not.
pub fn per_dialect_report(
    gold: &[DialectLabel],
    pred: &[DialectLabel],
) -> Result<EvalReport<DialectLabel>, EvalError> {
    report_over(DialectLabel::ALL.to_vec(), gold, pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DialectLabel::*;

    fn tags(s: &str) -> Vec<SlotTag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn span_f1_examples() {
        let g = vec![tags("B-a I-a O B-b")];
        let s = span_f1(&g, &g).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));

        let none = vec![tags("O O O O")];
        let s = span_f1(&g, &none).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));

        let g = vec![tags("O O O B-datetime I-datetime")];
        let p = vec![tags("O O O B-datetime O")];
        let s = span_f1(&g, &p).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));

        let g = vec![tags("B-a O B-b O O")];
        let p = vec![tags("B-a O O O B-c")];
        let s = span_f1(&g, &p).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));

        let empty = vec![tags("O O")];
        assert_eq!(span_f1(&empty, &empty).unwrap().f1, 1.0);
    }

    #[test]
    fn span_f1_repairs_predictions() {
        // I-a after O is read as B-a
        let g = vec![tags("O B-a I-a")];
        let p = vec![tags("O I-a I-a")];
        assert_eq!(span_f1(&g, &p).unwrap().f1, 1.0);
    }

    #[test]
    fn span_f1_length_errors() {
        let g = vec![tags("O")];
        assert!(matches!(span_f1(&g, &[] as &[Vec<SlotTag>]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(
            span_f1(&g, &[tags("O O")]),
            Err(EvalError::TagLengthMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(intent_accuracy(&["a", "b"], &["a", "b"]), Ok(1.0));
        assert_eq!(intent_accuracy(&["a", "b"], &["c", "d"]), Ok(0.0));
        assert_eq!(intent_accuracy(&["a", "b", "c", "d"], &["a", "b", "c", "x"]), Ok(0.75));
        assert_eq!(intent_accuracy::<&str>(&[], &[]), Err(EvalError::Empty));
        assert!(intent_accuracy(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn lambda_average_examples() {
        assert!((lambda_average(0.7909, 0.9864, 0.7).unwrap() - 0.8496).abs() < 5e-5);
        assert!((lambda_average(0.8537, 0.9629, 0.7).unwrap() - 0.8865).abs() < 5e-5);
        for lambda in [0.0, 0.3, 1.0] {
            assert!((lambda_average(0.42, 0.42, lambda).unwrap() - 0.42).abs() < 1e-15);
        }
        assert!(lambda_average(1.2, 0.5, 0.7).is_err());
        assert!(lambda_average(0.5, 0.5, -0.1).is_err());
    }

    #[test]
    fn weighted_f1_examples() {
        let gold = [V, V, T, N, B];
        assert_eq!(weighted_f1(&gold, &gold).unwrap().weighted_f1, 1.0);

        let mut gold = vec![V; 225];
        gold.extend(vec![T; 135]);
        gold.extend(vec![N; 89]);
        gold.extend(vec![B; 45]);
        let pred = vec![V; gold.len()];
        let r = weighted_f1(&gold, &pred).unwrap();
        let s = 225.0 / 494.0;
        assert!((r.weighted_f1 - 2.0 * s * s / (1.0 + s)).abs() < 1e-12);
        assert!((r.weighted_f1 - (225.0 / 494.0) * (450.0 / 719.0)).abs() < 1e-12);
        assert_eq!(r.confusion[r.labels.iter().position(|l| *l == V).unwrap()][3], 225);
    }

    #[test]
    fn dialect_report_has_all_rows() {
        let gold = [V, T, N, B];
        let r = per_dialect_report(&gold, &gold).unwrap();
        assert!(r.per_class.iter().all(|m| m.f1 == 1.0));
        let r = per_dialect_report(&[V, B], &[V, V]).unwrap();
        assert_eq!(r.class(&B).unwrap().f1, 0.0);
        assert_eq!(r.labels, DialectLabel::ALL);
        assert_eq!(r.class(&T).unwrap().support, 0);
        let tsv = r.to_tsv();
        assert!(tsv.starts_with("label\tprecision"));
        assert_eq!(tsv.lines().count(), 1 + 4 + 3);
        assert_eq!(r.confusion_tsv().lines().count(), 5);
    }

    #[test]
    fn weighted_f1_errors() {
        assert_eq!(weighted_f1::<DialectLabel>(&[], &[]), Err(EvalError::Empty));
        assert!(weighted_f1(&[V], &[V, B]).is_err());
    }
}
