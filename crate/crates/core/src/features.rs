//! Bag-of-words features over a deterministic stem vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intents::IntentCatalog;
use crate::text::PreprocessConfig;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("no pattern in the catalog produced any stem")]
    EmptyVocabulary,
    #[error("need at least 2 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("test fraction must lie in (0, 1), got {0}")]
    BadFraction(String),
}

/// Sorted, duplicate-free list of stems; position is the feature index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    stems: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new<S: Into<String>>(stems: impl IntoIterator<Item = S>) -> Self {
        let set: BTreeSet<String> = stems.into_iter().map(Into::into).collect();
        let stems: Vec<String> = set.into_iter().collect();
        let index = stems
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self { stems, index }
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }

    pub fn index_of(&self, stem: &str) -> Option<usize> {
        self.index.get(stem).copied()
    }

    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(stems: Vec<String>) -> Self {
        Self::new(stems)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.stems
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BowMode {
    /// 1 if the stem occurs at all.
    #[default]
    Binary,
    /// Number of occurrences.
    Count,
}

impl fmt::Display for BowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BowMode::Binary => "binary",
            BowMode::Count => "count",
        })
    }
}

impl FromStr for BowMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(BowMode::Binary),
            "count" => Ok(BowMode::Count),
            other => Err(format!(
                "unknown bag-of-words mode {other:?} (expected binary|count)"
            )),
        }
    }
}

/// Dense bag-of-words vector, one entry per vocabulary stem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.0.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Sorted tags; position is the class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelMap {
    tags: Vec<String>,
    class_of: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new<S: Into<String>>(tags: impl IntoIterator<Item = S>) -> Self {
        let set: BTreeSet<String> = tags.into_iter().map(Into::into).collect();
        let tags: Vec<String> = set.into_iter().collect();
        let class_of = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tags, class_of }
    }

    pub fn from_catalog(catalog: &IntentCatalog) -> Self {
        Self::new(catalog.intents.iter().map(|i| i.tag.clone()))
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag(&self, class: usize) -> Option<&str> {
        self.tags.get(class).map(String::as_str)
    }

    pub fn class_of(&self, tag: &str) -> Option<usize> {
        self.class_of.get(tag).copied()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

impl From<Vec<String>> for LabelMap {
    fn from(tags: Vec<String>) -> Self {
        Self::new(tags)
    }
}

impl From<LabelMap> for Vec<String> {
    fn from(l: LabelMap) -> Self {
        l.tags
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub vector: FeatureVector,
    pub class_index: usize,
    pub source_pattern: String,
}

/// A pattern that preprocessed to nothing and so could not be vectorized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedPattern {
    pub tag: String,
    pub pattern: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    pub labels: LabelMap,
    pub examples: Vec<LabeledExample>,
    pub skipped: Vec<SkippedPattern>,
}

pub fn build_vocabulary(
    catalog: &IntentCatalog,
    config: &PreprocessConfig,
) -> Result<Vocabulary, FeatureError> {
    let vocab = Vocabulary::new(
        catalog
            .intents
            .iter()
            .flat_map(|i| i.patterns.iter())
            .flat_map(|p| config.preprocess(p)),
    );
    if vocab.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    Ok(vocab)
}

pub fn vectorize(stems: &[String], vocab: &Vocabulary, mode: BowMode) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for idx in stems.iter().filter_map(|s| vocab.index_of(s)) {
        match mode {
            BowMode::Binary => values[idx] = 1.0,
            BowMode::Count => values[idx] += 1.0,
        }
    }
    FeatureVector(values)
}

/// One labeled example per pattern that yields at least one stem.
pub fn make_dataset(
    catalog: &IntentCatalog,
    config: &PreprocessConfig,
    mode: BowMode,
) -> Result<Dataset, FeatureError> {
    let vocabulary = build_vocabulary(catalog, config)?;
    let labels = LabelMap::from_catalog(catalog);
    let mut examples = Vec::new();
    let mut skipped = Vec::new();
    for intent in &catalog.intents {
        let class_index = labels
            .class_of(&intent.tag)
            .expect("label map built from catalog");
        for pattern in &intent.patterns {
            let stems = config.preprocess(pattern);
            if stems.is_empty() {
                log::warn!(
                    "skipping pattern {pattern:?} of intent {:?}: no stems",
                    intent.tag
                );
                skipped.push(SkippedPattern {
                    tag: intent.tag.clone(),
                    pattern: pattern.clone(),
                });
                continue;
            }
            examples.push(LabeledExample {
                vector: vectorize(&stems, &vocabulary, mode),
                class_index,
                source_pattern: pattern.clone(),
            });
        }
    }
    Ok(Dataset {
        vocabulary,
        labels,
        examples,
        skipped,
    })
}

/// Stratified, seeded train/test split.
///
/// Each class with `n >= 2` examples sends `min(ceil(fraction * n), n - 1)`
/// examples to the test side; singleton classes stay in training. Both sides
/// keep the input order.
pub fn split_dataset(
    examples: &[LabeledExample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>), FeatureError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FeatureError::BadFraction(test_fraction.to_string()));
    }
    if examples.len() < 2 {
        return Err(FeatureError::TooFewExamples(examples.len()));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        by_class.entry(ex.class_index).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; examples.len()];
    for members in by_class.values_mut() {
        let n = members.len();
        if n < 2 {
            continue;
        }
        // Guard against 0.2 * 15 = 3.0000000000000004 style round-up.
        let wanted = ((test_fraction * n as f64) - 1e-9).ceil() as usize;
        let take = wanted.min(n - 1);
        members.shuffle(&mut rng);
        for &i in &members[..take] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) =
        examples.iter().cloned().zip(is_test).partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(e, _)| e).collect(),
        test.into_iter().map(|(e, _)| e).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intents::Intent;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn small_catalog() -> IntentCatalog {
        IntentCatalog::new(
            vec![
                Intent::new("reg", &["ምዝገባ መቼ ነው"], &["r"]),
                Intent::new("fee", &["ክፍያ ስንት ነው"], &["f"]),
            ],
            "mem",
        )
        .unwrap()
    }

    #[test]
    fn vocabulary_sorted_by_code_point() {
        let v = build_vocabulary(&small_catalog(), &PreprocessConfig::default_rules()).unwrap();
        assert_eq!(v.stems(), s(&["መቼ", "ምዝገባ", "ስንት", "ክፍያ"]).as_slice());
        for (i, stem) in v.stems().iter().enumerate() {
            assert_eq!(v.index_of(stem), Some(i));
        }
    }

    #[test]
    fn empty_vocabulary() {
        let c = IntentCatalog::new(vec![Intent::new("x", &["ነው", "እና"], &["r"])], "mem").unwrap();
        assert_eq!(
            build_vocabulary(&c, &PreprocessConfig::default_rules()).unwrap_err(),
            FeatureError::EmptyVocabulary
        );
    }

    #[test]
    fn duplicate_stems_once() {
        let c = IntentCatalog::new(
            vec![
                Intent::new("a", &["ምዝገባ መቼ"], &["r"]),
                Intent::new("b", &["ምዝገባ ስንት", "ምዝገባ"], &["r"]),
            ],
            "mem",
        )
        .unwrap();
        let v = build_vocabulary(&c, &PreprocessConfig::default_rules()).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn vectorize_examples() {
        let v = Vocabulary::new(["ክፍያ", "ምዝገባ", "ስንት", "መቼ"]);
        assert_eq!(
            vectorize(&s(&["ምዝገባ", "መቼ"]), &v, BowMode::Binary).0,
            vec![1.0, 1.0, 0.0, 0.0]
        );
        assert!(vectorize(&[], &v, BowMode::Binary).is_zero());
        assert!(vectorize(&s(&["ሌላ", "ቃል"]), &v, BowMode::Binary).is_zero());
        assert_eq!(
            vectorize(&s(&["መቼ", "መቼ", "ክፍያ"]), &v, BowMode::Count).0,
            vec![2.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(
            vectorize(&s(&["መቼ", "መቼ", "ክፍያ"]), &v, BowMode::Binary).0,
            vec![1.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn sample_dataset_shape() {
        let d = make_dataset(
            &IntentCatalog::sample(),
            &PreprocessConfig::default_rules(),
            BowMode::Binary,
        )
        .unwrap();
        assert_eq!(d.examples.len(), 60);
        assert_eq!(d.labels.len(), 12);
        assert!(d.skipped.is_empty());
        assert!(d
            .examples
            .iter()
            .all(|e| e.vector.len() == d.vocabulary.len()));
        let tags = d.labels.tags();
        assert!(tags.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stopword_pattern_skipped() {
        let c = IntentCatalog::new(vec![Intent::new("x", &["ነው", "ምዝገባ"], &["r"])], "mem").unwrap();
        let d = make_dataset(&c, &PreprocessConfig::default_rules(), BowMode::Binary).unwrap();
        assert_eq!(d.examples.len(), 1);
        assert_eq!(
            d.skipped,
            vec![SkippedPattern {
                tag: "x".into(),
                pattern: "ነው".into()
            }]
        );
    }

    fn examples(classes: &[usize]) -> Vec<LabeledExample> {
        classes
            .iter()
            .enumerate()
            .map(|(i, &c)| LabeledExample {
                vector: FeatureVector(vec![i as f64]),
                class_index: c,
                source_pattern: format!("p{i}"),
            })
            .collect()
    }

    #[test]
    fn split_single_class() {
        let (train, test) = split_dataset(&examples(&[0; 10]), 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
    }

    #[test]
    fn split_errors() {
        assert_eq!(
            split_dataset(&examples(&[0]), 0.2, 1).unwrap_err(),
            FeatureError::TooFewExamples(1)
        );
        assert!(matches!(
            split_dataset(&examples(&[0, 0]), 1.0, 1),
            Err(FeatureError::BadFraction(_))
        ));
    }

    #[test]
    fn split_caps_at_n_minus_one() {
        let (train, test) = split_dataset(&examples(&[0, 0, 1, 2, 2, 2]), 0.9, 3).unwrap();
        // class 0: min(ceil(1.8),1)=1; class 1 singleton; class 2: min(ceil(2.7),2)=2
        assert_eq!(test.len(), 3);
        assert_eq!(train.len(), 3);
        for c in 0..3 {
            assert!(train.iter().any(|e| e.class_index == c));
        }
    }

    proptest! {
        #[test]
        fn split_partition_laws(
            classes in proptest::collection::vec(0usize..5, 2..60),
            fraction in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let ex = examples(&classes);
            let (train, test) = split_dataset(&ex, fraction, seed).unwrap();
            prop_assert_eq!(train.len() + test.len(), ex.len());
            let mut ids: Vec<String> = train.iter().chain(&test).map(|e| e.source_pattern.clone()).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), ex.len());
            for c in 0..5 {
                let n = classes.iter().filter(|&&x| x == c).count();
                let in_test = test.iter().filter(|e| e.class_index == c).count();
                if n >= 2 {
                    let expect = (((fraction * n as f64) - 1e-9).ceil() as usize).min(n - 1);
                    prop_assert_eq!(in_test, expect);
                } else {
                    prop_assert_eq!(in_test, 0);
                }
            }
            let (train2, test2) = split_dataset(&ex, fraction, seed).unwrap();
            prop_assert_eq!(train, train2);
            prop_assert_eq!(test, test2);
        }

        #[test]
        fn vectorize_l0_bound(stems in proptest::collection::vec("[ሀ-ሆ]{1,2}", 0..10)) {
            let vocab = Vocabulary::new(["ሀ", "ሁሂ", "ሄ", "ሆሆ", "ህ"]);
            let v = vectorize(&stems, &vocab, BowMode::Binary);
            prop_assert!(v.nonzero_count() <= stems.len());
            prop_assert!(v.nonzero_count() <= vocab.len());
            prop_assert!(v.0.iter().all(|&x| x == 0.0 || x == 1.0));
        }

        #[test]
        fn vocabulary_permutation_invariant(seed in any::<u64>()) {
            let cfg = PreprocessConfig::default_rules();
            let mut catalog = IntentCatalog::sample();
            let base = build_vocabulary(&catalog, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            catalog.intents.shuffle(&mut rng);
            for i in &mut catalog.intents {
                i.patterns.shuffle(&mut rng);
            }
            prop_assert_eq!(build_vocabulary(&catalog, &cfg).unwrap(), base);
        }
    }
}
