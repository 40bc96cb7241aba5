//! Seeded synthetic corpora for tests, demos and sanity checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DialectLabel, SidInstance, SlotTag};

/// Intents of the synthetic SID corpus and their signalling keywords.
pub const SYNTH_INTENTS: [(&str, &str); 3] = [
    ("alarm/set_alarm", "alarm"),
    ("reminder/set_reminder", "påminnelse"),
    ("weather/find", "værmelding"),
];

/// Slot types of the synthetic SID corpus.
pub const SYNTH_SLOTS: [&str; 4] = ["contact", "datetime", "location", "number"];

const FILLERS: [&str; 18] = [
    "jeg", "vil", "ha", "en", "for", "på", "i", "og", "du", "kan", "det", "meg", "med", "til",
    "om", "gjerne", "takk", "se",
];

const SYLLABLES: [&str; 10] = ["ka", "ri", "to", "ne", "sa", "mo", "li", "be", "da", "vu"];

fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect()
}

/// Tokens realising one slot type, each with a distinctive shape.
fn slot_tokens(slot: &str, rng: &mut ChaCha8Rng) -> Vec<String> {
    match slot {
        "contact" => vec![format!("@{}", word(rng, 2))],
        "datetime" => vec![
            "kl.".to_string(),
            format!("{:02}:{:02}", rng.gen_range(0..24), rng.gen_range(0..60)),
        ],
        "location" => {
            let len = rng.gen_range(1..3);
            let mut w = word(rng, len);
            w.push_str("vik");
            let mut c = w.chars();
            let first = c.next().expect("non-empty").to_uppercase().collect::<String>();
            vec![first + c.as_str()]
        }
        _ => vec![rng.gen_range(10..10_000).to_string()],
    }
}

/// Utterances with one of three intents, each marked by its own keyword,
/// and one or two slots of four types, each marked by its token shape.
pub fn sid_corpus(n: usize, seed: u64) -> Vec<SidInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let (intent, keyword) = SYNTH_INTENTS[rng.gen_range(0..SYNTH_INTENTS.len())];
            let mut segments: Vec<Vec<(String, SlotTag)>> = Vec::new();
            segments.push(vec![(keyword.to_string(), SlotTag::Outside)]);
            for _ in 0..rng.gen_range(2..6) {
                let f = FILLERS.choose(&mut rng).expect("non-empty");
                segments.push(vec![(f.to_string(), SlotTag::Outside)]);
            }
            let n_slots = rng.gen_range(1..3);
            for slot in SYNTH_SLOTS.choose_multiple(&mut rng, n_slots) {
                let toks = slot_tokens(slot, &mut rng);
                segments.push(
                    toks.into_iter()
                        .enumerate()
                        .map(|(i, t)| {
                            let tag = if i == 0 {
                                SlotTag::Begin(slot.to_string())
                            } else {
                                SlotTag::Inside(slot.to_string())
                            };
                            (t, tag)
                        })
                        .collect(),
                );
            }
            segments.shuffle(&mut rng);
            let (tokens, tags): (Vec<String>, Vec<SlotTag>) = segments.into_iter().flatten().unzip();
            SidInstance::new(
                Some(format!("syn{k}")),
                tokens,
                Some(tags),
                Some(intent.to_string()),
                None,
            )
            .expect("generated instance is well-formed")
        })
        .collect()
}

/// Bokmål forms covered by the starter lexicon with distinct V, T and N
/// renderings for at least two of the three dialects.
const MAPPED: [&str; 16] = [
    "jeg", "ikke", "hvem", "hvordan", "hvorfor", "hvilken", "noe", "mye", "bare", "de", "dem",
    "vi", "dere", "være", "også", "morgen",
];

const NEUTRAL: [&str; 14] = [
    "bil", "hus", "kaffe", "tog", "buss", "mat", "film", "bok", "sol", "regn", "tur", "skole",
    "jobb", "fest",
];

/// Bokmål sentences mixing lexicon-covered forms with neutral words, ids
/// `b<k>/0`, dialect B.
pub fn bokmal_corpus(n: usize, seed: u64) -> Vec<SidInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let n_mapped = rng.gen_range(2..4);
            let mut tokens: Vec<String> = MAPPED
                .choose_multiple(&mut rng, n_mapped)
                .map(|s| s.to_string())
                .collect();
            for _ in 0..rng.gen_range(2..5) {
                tokens.push(NEUTRAL.choose(&mut rng).expect("non-empty").to_string());
            }
            tokens.shuffle(&mut rng);
            SidInstance::new(Some(format!("b{k}/0")), tokens, None, None, Some(DialectLabel::B))
                .expect("generated instance is well-formed")
        })
        .collect()
}

/// `n` unlabelled instances spread over `groups` origin keys (every group
/// non-empty), ids `<group>/<k>`.
pub fn origin_corpus(n: usize, groups: usize, seed: u64) -> Vec<SidInstance> {
    assert!(groups >= 1 && n >= groups, "need at least one instance per group");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<usize> = (0..groups)
        .chain((groups..n).map(|_| rng.gen_range(0..groups)))
        .collect();
    assignment.shuffle(&mut rng);
    assignment
        .into_iter()
        .enumerate()
        .map(|(k, g)| {
            SidInstance::from_tokens([format!("w{k}")])
                .and_then(|i| i.with_id(Some(format!("{g}/{k}"))))
                .expect("generated instance is well-formed")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, is_valid_bio};
    use std::collections::HashSet;

    #[test]
    fn sid_corpus_shape() {
        let xs = sid_corpus(100, 1);
        assert_eq!(xs, sid_corpus(100, 1));
        let v = build_vocab(&xs);
        assert_eq!(v.intents().len(), 3);
        assert_eq!(v.slot_types(), SYNTH_SLOTS);
        assert!(xs.iter().all(|i| is_valid_bio(i.slots().unwrap())));
    }

    #[test]
    fn origin_corpus_covers_groups() {
        let xs = origin_corpus(500, 60, 3);
        let keys: HashSet<_> = xs.iter().map(|i| i.origin_key().unwrap().to_string()).collect();
        assert_eq!(keys.len(), 60);
        assert_eq!(xs.len(), 500);
    }
}
