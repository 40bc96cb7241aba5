use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;

use sidkit::corpus::{
    build_vocab, deduplicate, extract_spans, is_valid_bio, parse_sid_file, split_by_origin,
    spans_to_tags, validate_bio, write_sid_file,
};
use sidkit::eval::{lambda_average, span_f1, weighted_f1};
use sidkit::joint::{predict_joint, train_joint};
use sidkit::lexmap::{apply_lexicon, generate_silver, Lexicon, VariantPolicy};
use sidkit::model_io::SavedModel;
use sidkit::silver::{clean_transcription, downsample_targets, downsample_to_distribution, DistributionSpec};
use sidkit::synth::{origin_corpus, sid_corpus};
use sidkit::{DialectLabel, FeatureConfig, SidInstance, SlotTag, TrainConfig};

fn dialect() -> impl Strategy<Value = DialectLabel> {
    prop::sample::select(DialectLabel::ALL.to_vec())
}

fn raw_tag() -> impl Strategy<Value = SlotTag> {
    prop_oneof![
        Just(SlotTag::Outside),
        prop::sample::select(vec!["datetime", "location", "contact"]).prop_map(|l| SlotTag::Begin(l.into())),
        prop::sample::select(vec!["datetime", "location", "contact"]).prop_map(|l| SlotTag::Inside(l.into())),
    ]
}

/// BIO-valid tags, built from arbitrary tags by the repair rule.
fn bio_tags(len: usize) -> impl Strategy<Value = Vec<SlotTag>> {
    prop::collection::vec(raw_tag(), len).prop_map(|t| validate_bio(&t).1)
}

const WORDS: [&str; 12] = [
    "jeg", "hva", "ikke", "vil", "ha", "alarm", "kl.", "07:30", "Bergen", "æ", "(mm)", "#",
];

fn tokens(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()).prop_map(String::from), 1..=max)
}

fn annotated() -> impl Strategy<Value = SidInstance> {
    tokens(8).prop_flat_map(|toks| {
        let n = toks.len();
        (
            Just(toks),
            bio_tags(n),
            prop::option::of("[a-z]{1,5}/[a-z_]{1,8}"),
            prop::option::of(dialect()),
            prop::option::of("[a-z0-9]{1,4}(/[0-9]{1,2})?"),
        )
            .prop_map(|(toks, tags, intent, dialect, id)| {
                SidInstance::new(id, toks, Some(tags), intent, dialect).expect("valid instance")
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn file_format_round_trips(xs in prop::collection::vec(annotated(), 0..12)) {
        let text = write_sid_file(&xs);
        prop_assert_eq!(parse_sid_file(&text).unwrap(), xs.clone());
        prop_assert_eq!(write_sid_file(&parse_sid_file(&text).unwrap()), text);
    }

    #[test]
    fn dedup_is_idempotent_and_order_preserving(xs in prop::collection::vec(annotated(), 0..20)) {
        let once = deduplicate(&xs);
        prop_assert_eq!(deduplicate(&once), once.clone());
        let texts: Vec<String> = once.iter().map(SidInstance::text).collect();
        prop_assert_eq!(texts.iter().collect::<HashSet<_>>().len(), texts.len());
        // first occurrences, in input order
        let mut seen = HashSet::new();
        let expected: Vec<String> = xs.iter().map(SidInstance::text).filter(|t| seen.insert(t.clone())).collect();
        prop_assert_eq!(texts, expected);
    }

    #[test]
    fn spans_and_tags_are_inverse(tags in (1usize..12).prop_flat_map(bio_tags)) {
        prop_assert!(is_valid_bio(&tags));
        let spans = extract_spans(&tags).unwrap();
        prop_assert_eq!(spans_to_tags(&spans, tags.len()), tags);
    }

    #[test]
    fn repair_is_idempotent(raw in prop::collection::vec(raw_tag(), 0..12)) {
        let (valid, fixed) = validate_bio(&raw);
        prop_assert_eq!(valid, fixed == raw);
        prop_assert_eq!(validate_bio(&fixed), (true, fixed.clone()));
    }

    #[test]
    fn lexicon_keeps_annotations(inst in annotated(), target in prop::sample::select(vec![DialectLabel::V, DialectLabel::T, DialectLabel::N]), seed: u64) {
        let lex = Lexicon::starter();
        for policy in [VariantPolicy::First, VariantPolicy::SeededRandom] {
            let out = apply_lexicon(&inst, target, &lex, policy, seed).unwrap();
            prop_assert_eq!(out.len(), inst.len());
            prop_assert_eq!(out.slots(), inst.slots());
            prop_assert_eq!(out.intent(), inst.intent());
            prop_assert_eq!(out.dialect(), Some(target));
            for (a, b) in out.tokens().iter().zip(inst.tokens()) {
                prop_assert!(a == b || lex.variants(b, target).is_some_and(|v| v.contains(a)));
            }
        }
    }

    #[test]
    fn coverage_is_monotone(inst in annotated(), keep in prop::collection::vec(any::<bool>(), 3)) {
        let rows = [("jeg", "eg"), ("hva", "kva"), ("ikke", "ikkje")];
        let mut small = Lexicon::default();
        let mut large = Lexicon::default();
        for ((b, v), k) in rows.iter().zip(&keep) {
            if *k {
                small.insert(b, DialectLabel::V, [v.to_string()]).unwrap();
            }
            large.insert(b, DialectLabel::V, [v.to_string()]).unwrap();
        }
        let changed = |lex: &Lexicon| {
            let out = apply_lexicon(&inst, DialectLabel::V, lex, VariantPolicy::First, 0).unwrap();
            out.tokens().iter().zip(inst.tokens()).filter(|(a, b)| a != b).count()
        };
        prop_assert!(changed(&small) <= changed(&large));
    }

    #[test]
    fn silver_is_four_times_input(xs in prop::collection::vec(annotated(), 0..10)) {
        let xs: Vec<SidInstance> = xs.into_iter().map(|i| i.with_dialect(None)).collect();
        let out = generate_silver(&xs, &Lexicon::starter(), VariantPolicy::First, 1).unwrap();
        prop_assert_eq!(out.len(), 4 * xs.len());
        for (k, d) in [DialectLabel::B, DialectLabel::V, DialectLabel::T, DialectLabel::N].iter().enumerate() {
            for i in &out[k * xs.len()..(k + 1) * xs.len()] {
                prop_assert_eq!(i.dialect(), Some(*d));
            }
        }
    }

    #[test]
    fn cleanup_is_idempotent_subsequence(toks in tokens(12)) {
        let once = clean_transcription(&toks);
        prop_assert_eq!(clean_transcription(&once), once.clone());
        let mut rest = toks.iter();
        for t in &once {
            prop_assert!(rest.any(|u| u == t), "order changed");
        }
    }

    #[test]
    fn downsample_hits_floor_targets(
        avail in prop::collection::vec(1usize..60, 4),
        weights in prop::collection::vec(1u32..20, 4),
        seed: u64,
    ) {
        let spec = DistributionSpec::from_weights(
            DialectLabel::ALL.iter().zip(&weights).map(|(&d, &w)| (d, f64::from(w))),
        ).unwrap();
        let mut pool = Vec::new();
        let mut available = BTreeMap::new();
        for (&d, &n) in DialectLabel::ALL.iter().zip(&avail) {
            available.insert(d, n);
            for k in 0..n {
                pool.push(SidInstance::from_tokens([format!("{d}{k}")]).unwrap().with_dialect(Some(d)));
            }
        }
        // largest whole M with M·p_c ≤ available_c, by search
        let fits = |m: usize| spec.iter().all(|(d, p)| m as f64 * p <= available[&d] as f64 + 1e-9);
        let m = (0..).take_while(|&m| fits(m)).last().unwrap();
        let targets = downsample_targets(&available, &spec).unwrap();
        for (d, p) in spec.iter() {
            prop_assert_eq!(targets[&d], (m as f64 * p + 1e-9).floor() as usize);
            prop_assert!(targets[&d] <= available[&d]);
        }
        let out = downsample_to_distribution(&pool, &spec, seed).unwrap();
        let mut got: BTreeMap<DialectLabel, usize> = BTreeMap::new();
        for i in &out {
            *got.entry(i.dialect().unwrap()).or_insert(0) += 1;
        }
        got.retain(|_, n| *n > 0);
        let mut want = targets.clone();
        want.retain(|_, n| *n > 0);
        prop_assert_eq!(got, want);
        prop_assert_eq!(out.iter().map(SidInstance::text).collect::<HashSet<_>>().len(), out.len());
    }

    #[test]
    fn splits_are_disjoint(seed in 0u64..10_000, groups in 3usize..30) {
        let corpus = origin_corpus(120, groups, seed);
        let split = split_by_origin(&corpus, [0.6, 0.2, 0.2], seed).unwrap();
        let keys: Vec<HashSet<&str>> = split.parts().iter()
            .map(|p| p.iter().map(|i| i.origin_key().unwrap()).collect())
            .collect();
        prop_assert!(keys[0].is_disjoint(&keys[1]));
        prop_assert!(keys[0].is_disjoint(&keys[2]));
        prop_assert!(keys[1].is_disjoint(&keys[2]));
        prop_assert_eq!(split.parts().iter().map(|p| p.len()).sum::<usize>(), corpus.len());
    }

    #[test]
    fn metrics_ignore_instance_order(
        pairs in prop::collection::vec((1usize..8).prop_flat_map(|n| (bio_tags(n), bio_tags(n))), 1..20),
        labels in prop::collection::vec((dialect(), dialect()), 1..40),
        rotate in 0usize..40,
    ) {
        let (g, p): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let a = span_f1(&g, &p).unwrap();
        let k = rotate % pairs.len();
        let (mut g2, mut p2) = (g.clone(), p.clone());
        g2.rotate_left(k);
        p2.rotate_left(k);
        g2.reverse();
        p2.reverse();
        prop_assert_eq!(span_f1(&g2, &p2).unwrap().counts, a.counts);

        let (gl, pl): (Vec<_>, Vec<_>) = labels.iter().copied().unzip();
        let r = weighted_f1(&gl, &pl).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.weighted_f1));
        let (mut gl2, mut pl2) = (gl.clone(), pl.clone());
        gl2.reverse();
        pl2.reverse();
        prop_assert_eq!(weighted_f1(&gl2, &pl2).unwrap().confusion, r.confusion);
        prop_assert!((weighted_f1(&gl2, &pl2).unwrap().weighted_f1 - r.weighted_f1).abs() < 1e-12);
    }

    #[test]
    fn lambda_average_moves_toward_slot_score(s in 0.0f64..=1.0, i in 0.0f64..=1.0, l1 in 0.0f64..=1.0, l2 in 0.0f64..=1.0) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let a = lambda_average(s, i, lo).unwrap();
        let b = lambda_average(s, i, hi).unwrap();
        if s >= i {
            prop_assert!(b >= a - 1e-12);
        } else {
            prop_assert!(b <= a + 1e-12);
        }
        prop_assert!((lambda_average(s, s, l1).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn majority_closed_form(v in 1usize..300, t in 0usize..300, n in 0usize..300, b in 0usize..300) {
        use DialectLabel::*;
        prop_assume!(v > t && v > n && v > b);
        let gold: Vec<DialectLabel> = [(V, v), (T, t), (N, n), (B, b)]
            .iter()
            .flat_map(|&(l, k)| std::iter::repeat(l).take(k))
            .collect();
        let pred = vec![V; gold.len()];
        let s = v as f64 / gold.len() as f64;
        let got = weighted_f1(&gold, &pred).unwrap().weighted_f1;
        prop_assert!((got - 2.0 * s * s / (1.0 + s)).abs() < 1e-12);
    }
}

fn small_features() -> FeatureConfig {
    FeatureConfig { dimension: 1 << 12, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn predictions_survive_scaling_and_reload(seed in 0u64..1000, factor in 0.01f64..100.0) {
        let corpus = sid_corpus(40, seed);
        let vocab = build_vocab(&corpus);
        let config = TrainConfig { epochs: 5, seed, ..Default::default() };
        let model = train_joint(&corpus, &vocab, &small_features(), &config).unwrap();
        let mut scaled = model.clone();
        scaled.scale_parameters(factor);
        let SavedModel::Joint(loaded) = SavedModel::from_bytes(&SavedModel::Joint(model.clone()).to_bytes()).unwrap() else {
            panic!("wrong model kind");
        };
        for inst in sid_corpus(20, seed + 1) {
            let p = predict_joint(&model, inst.tokens()).unwrap();
            prop_assert_eq!(&predict_joint(&loaded, inst.tokens()).unwrap(), &p);
            prop_assert_eq!(predict_joint(&scaled, inst.tokens()).unwrap().intent, p.intent);
        }
    }
}
