//! Deterministic synthetic intent catalogs for scale experiments.
//!
//! Each tag owns a handful of invented topic words. Patterns combine one or
//! two topic words with shared filler vocabulary, an interrogative and an
//! occasional stopword, in random order. A small share of patterns borrows a
//! topic word from another tag, and some characters are respelled with a
//! homophone variant so folding is exercised.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::intents::{Intent, IntentCatalog};
use crate::text::{normalize, stem, PreprocessConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub tags: usize,
    pub patterns: usize,
    pub topic_words_per_tag: usize,
    pub filler_words: usize,
    /// Probability that a pattern includes a topic word of another tag.
    pub confuser_rate: f64,
    /// Per-character probability of respelling with a homophone variant.
    pub variant_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tags: 60,
            patterns: 850,
            topic_words_per_tag: 4,
            filler_words: 40,
            confuser_rate: 0.15,
            variant_rate: 0.05,
            seed: 42,
        }
    }
}

const INTERROGATIVES: &[&str] = &["ምን", "መቼ", "የት", "ማን", "እንዴት", "ስንት", "የትኛው"];
const STOPWORDS: &[&str] = &["ነው", "እና", "ላይ", "ውስጥ"];

/// Consonant families that take no part in homophone folding.
const FAMILY_BASES: &[u32] = &[
    0x1208, 0x1218, 0x1228, 0x1230, 0x1238, 0x1240, 0x1260, 0x1270, 0x1278, 0x1290, 0x1298, 0x12A8,
    0x12C8, 0x12D8, 0x12E0, 0x12F0, 0x1300, 0x1308, 0x1320, 0x1328, 0x1330, 0x1348, 0x1350,
];

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(3..=4);
    (0..syllables)
        .map(|_| {
            let base = FAMILY_BASES.choose(rng).expect("nonempty");
            char::from_u32(base + rng.random_range(0..7)).expect("valid Ethiopic")
        })
        .collect()
}

/// Draws words that survive preprocessing unchanged and whose stems are
/// distinct from each other and from anything in `taken`.
fn fresh_words(
    n: usize,
    rng: &mut ChaCha8Rng,
    rules: &PreprocessConfig,
    taken: &mut HashSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = random_word(rng);
        if normalize(&w, rules.folding()) != w
            || stem(&w, rules.stemmer()) != w
            || rules.stoplist().contains(&w)
            || !taken.insert(w.clone())
        {
            continue;
        }
        out.push(w);
    }
    out
}

fn respell(
    text: &str,
    variants: &BTreeMap<char, Vec<char>>,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> String {
    text.chars()
        .map(|c| match variants.get(&c) {
            Some(vs) if rng.random::<f64>() < rate => *vs.choose(rng).expect("nonempty"),
            _ => c,
        })
        .collect()
}

pub fn synthetic_catalog(config: &SynthConfig) -> IntentCatalog {
    assert!(
        config.tags >= 1 && config.patterns >= config.tags,
        "need at least one pattern per tag"
    );
    let rules = PreprocessConfig::default_rules();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut taken: HashSet<String> = INTERROGATIVES.iter().map(|s| s.to_string()).collect();

    let topics: Vec<Vec<String>> = (0..config.tags)
        .map(|_| fresh_words(config.topic_words_per_tag, &mut rng, &rules, &mut taken))
        .collect();
    let fillers = fresh_words(config.filler_words, &mut rng, &rules, &mut taken);

    let mut variants: BTreeMap<char, Vec<char>> = BTreeMap::new();
    for family in rules.folding().families() {
        variants.insert(family[0], family[1..].to_vec());
    }

    let base = config.patterns / config.tags;
    let extra = config.patterns % config.tags;
    let mut seen_patterns = BTreeSet::new();
    let intents = (0..config.tags)
        .map(|t| {
            let wanted = base + usize::from(t < extra);
            let mut patterns = Vec::with_capacity(wanted);
            while patterns.len() < wanted {
                let mut words: Vec<String> = Vec::new();
                let own = rng.random_range(1..=2.min(topics[t].len()));
                words.extend(topics[t].choose_multiple(&mut rng, own).cloned());
                if config.tags > 1 && rng.random::<f64>() < config.confuser_rate {
                    let mut other = rng.random_range(0..config.tags - 1);
                    if other >= t {
                        other += 1;
                    }
                    words.push(topics[other].choose(&mut rng).expect("nonempty").clone());
                }
                let n_fill = rng.random_range(0..=2);
                words.extend(fillers.choose_multiple(&mut rng, n_fill).cloned());
                words.push(
                    INTERROGATIVES
                        .choose(&mut rng)
                        .expect("nonempty")
                        .to_string(),
                );
                if rng.random::<f64>() < 0.3 {
                    words.push(STOPWORDS.choose(&mut rng).expect("nonempty").to_string());
                }
                words.shuffle(&mut rng);
                let text = respell(&words.join(" "), &variants, config.variant_rate, &mut rng);
                if seen_patterns.insert(text.clone()) {
                    patterns.push(text);
                }
            }
            Intent {
                tag: format!("topic_{t:02}"),
                patterns,
                responses: vec![
                    format!("ስለ {} መረጃ፦ {}", topics[t][0], topics[t].join(" ")),
                    format!("{} በተመለከተ የሚመለከተውን ቢሮ ይጠይቁ።", topics[t][0]),
                ],
                context_set: None,
                context_filter: None,
            }
        })
        .collect();
    IntentCatalog::new(intents, format!("<synthetic seed={}>", config.seed))
        .expect("generated catalog is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{make_dataset, BowMode};
    use crate::intents::catalog_stats;

    #[test]
    fn default_scale_counts() {
        let c = synthetic_catalog(&SynthConfig::default());
        let s = catalog_stats(&c);
        assert_eq!((s.tags, s.patterns), (60, 850));
        assert_eq!((s.min_patterns_per_tag, s.max_patterns_per_tag), (14, 15));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthetic_catalog(&SynthConfig::default());
        let b = synthetic_catalog(&SynthConfig::default());
        assert_eq!(a.intents, b.intents);
        let c = synthetic_catalog(&SynthConfig {
            seed: 8,
            ..SynthConfig::default()
        });
        assert_ne!(a.intents, c.intents);
    }

    #[test]
    fn every_pattern_vectorizes() {
        let c = synthetic_catalog(&SynthConfig::default());
        let d = make_dataset(&c, &PreprocessConfig::default_rules(), BowMode::Binary).unwrap();
        assert_eq!(d.examples.len(), 850);
        assert_eq!(d.labels.len(), 60);
        assert!(d.skipped.is_empty());
    }

    #[test]
    fn respelling_is_undone_by_folding() {
        let rules = PreprocessConfig::default_rules();
        let c = synthetic_catalog(&SynthConfig {
            variant_rate: 1.0,
            ..SynthConfig::default()
        });
        let patterns = &c.intents[0].patterns;
        assert!(patterns.iter().any(|p| normalize(p, rules.folding()) != *p));
        for stem in patterns.iter().flat_map(|p| rules.preprocess(p)) {
            assert_eq!(normalize(&stem, rules.folding()), stem);
        }
    }
}
