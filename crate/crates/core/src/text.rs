//! Ethiopic-script preprocessing: homophone folding, tokenization, stopword
//! removal and light affix stemming.
//!
//! All rule data (folding table, stoplist, stemmer affixes) is loaded from
//! plain-text files so it can be amended without touching code. The defaults
//! shipped in `data/rules/` are compiled in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FOLDING_FILE: &str = "folding.tsv";
pub const STOPLIST_FILE: &str = "stopwords.txt";
pub const STEMMER_FILE: &str = "stemmer.txt";

const DEFAULT_FOLDING: &str = include_str!("../data/rules/folding.tsv");
const DEFAULT_STOPLIST: &str = include_str!("../data/rules/stopwords.txt");
const DEFAULT_STEMMER: &str = include_str!("../data/rules/stemmer.txt");

/// Ethiopic wordspace and punctuation treated as token separators.
const ETHIOPIC_SEPARATORS: &[char] = &['፡', '።', '፣', '፤', '፥', '፧'];
const ASCII_SEPARATORS: &[char] = &['.', ',', ';', ':', '?', '!'];

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid rule data: {0}")]
    Invalid(String),
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Returns true for code points in the Ethiopic, Ethiopic Supplement and
/// Ethiopic Extended blocks.
pub fn is_ethiopic(c: char) -> bool {
    matches!(c as u32,
        0x1200..=0x139F | 0x2D80..=0x2DDF | 0xAB00..=0xAB2F | 0x1E7E0..=0x1E7FF)
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || ETHIOPIC_SEPARATORS.contains(&c) || ASCII_SEPARATORS.contains(&c)
}

/// Map from a variant Fidel character to its canonical homophone.
///
/// No canonical value is itself a key, so one pass of folding is already a
/// fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldingTable {
    entries: BTreeMap<char, char>,
}

impl FoldingTable {
    pub fn new(entries: impl IntoIterator<Item = (char, char)>) -> Result<Self, RuleError> {
        let mut map = BTreeMap::new();
        for (source, canonical) in entries {
            if !is_ethiopic(source) || !is_ethiopic(canonical) {
                return Err(RuleError::Invalid(format!(
                    "folding entry {source:?} -> {canonical:?} is outside the Ethiopic blocks"
                )));
            }
            if source == canonical {
                return Err(RuleError::Invalid(format!(
                    "folding entry {source:?} maps to itself"
                )));
            }
            if let Some(prev) = map.insert(source, canonical) {
                if prev != canonical {
                    return Err(RuleError::Invalid(format!(
                        "conflicting folding entries for {source:?}: {prev:?} and {canonical:?}"
                    )));
                }
            }
        }
        if let Some((s, c)) = map.iter().find(|(_, c)| map.contains_key(c)) {
            return Err(RuleError::Invalid(format!(
                "folding table is not closed: {s:?} -> {c:?} but {c:?} is itself folded"
            )));
        }
        Ok(Self { entries: map })
    }

    /// Parses `<source>TAB<canonical>` lines; `#` starts a comment line.
    pub fn parse(src: &str, file: &str) -> Result<Self, RuleError> {
        let mut entries = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let parse_err = |message: String| RuleError::Parse {
                file: file.to_string(),
                line: idx + 1,
                message,
            };
            let (left, right) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected <source><TAB><canonical>".into()))?;
            let source = single_char(left.trim())
                .ok_or_else(|| parse_err(format!("source {left:?} is not a single character")))?;
            let canonical = single_char(right.trim()).ok_or_else(|| {
                parse_err(format!("canonical {right:?} is not a single character"))
            })?;
            if !is_ethiopic(source) || !is_ethiopic(canonical) {
                return Err(parse_err("characters must be Ethiopic".into()));
            }
            entries.push((source, canonical));
        }
        Self::new(entries)
    }

    pub fn fold(&self, c: char) -> char {
        self.entries.get(&c).copied().unwrap_or(c)
    }

    pub fn entries(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.entries.iter().map(|(s, c)| (*s, *c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Equivalence classes induced by the table: each class holds the
    /// canonical character first, followed by every variant folding onto it.
    pub fn families(&self) -> Vec<Vec<char>> {
        let mut by_canonical: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for (s, c) in self.entries() {
            by_canonical.entry(c).or_default().push(s);
        }
        by_canonical
            .into_iter()
            .map(|(canonical, variants)| {
                let mut family = vec![canonical];
                family.extend(variants);
                family
            })
            .collect()
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopList {
    words: BTreeSet<String>,
}

impl StopList {
    pub fn new<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        Self {
            words: words
                .into_iter()
                .map(Into::into)
                .filter(|w: &String| !w.is_empty())
                .collect(),
        }
    }

    pub fn parse(src: &str) -> Self {
        Self::new(
            src.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn normalized(&self, folding: &FoldingTable) -> Self {
        Self::new(self.words.iter().map(|w| normalize(w, folding)))
    }
}

/// Affix lists for the light stemmer, kept longest-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemmerRules {
    prefixes: Vec<String>,
    suffixes: Vec<String>,
    min_stem_chars: usize,
}

impl StemmerRules {
    pub fn new(
        prefixes: Vec<String>,
        suffixes: Vec<String>,
        min_stem_chars: usize,
    ) -> Result<Self, RuleError> {
        if min_stem_chars < 2 {
            return Err(RuleError::Invalid(format!(
                "min_stem_chars must be at least 2, got {min_stem_chars}"
            )));
        }
        if prefixes.iter().chain(&suffixes).any(|a| a.is_empty()) {
            return Err(RuleError::Invalid("empty affix in stemmer rules".into()));
        }
        Ok(Self {
            prefixes: longest_first(prefixes),
            suffixes: longest_first(suffixes),
            min_stem_chars,
        })
    }

    /// Parses the `[prefixes]` / `[suffixes]` / `min_stem_chars=<n>` format.
    pub fn parse(src: &str, file: &str) -> Result<Self, RuleError> {
        enum Section {
            None,
            Prefixes,
            Suffixes,
        }
        let mut section = Section::None;
        let mut prefixes = Vec::new();
        let mut suffixes = Vec::new();
        let mut min_stem_chars = None;
        for (idx, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| RuleError::Parse {
                file: file.to_string(),
                line: idx + 1,
                message,
            };
            match line {
                "[prefixes]" => section = Section::Prefixes,
                "[suffixes]" => section = Section::Suffixes,
                _ if line.starts_with('[') => {
                    return Err(parse_err(format!("unknown section {line}")));
                }
                _ if line.starts_with("min_stem_chars") => {
                    let value = line
                        .split_once('=')
                        .map(|(_, v)| v.trim())
                        .ok_or_else(|| parse_err("expected min_stem_chars=<n>".into()))?;
                    let n = value.parse::<usize>().map_err(|_| {
                        parse_err(format!("invalid min_stem_chars value {value:?}"))
                    })?;
                    min_stem_chars = Some(n);
                }
                _ => match section {
                    Section::Prefixes => prefixes.push(line.to_string()),
                    Section::Suffixes => suffixes.push(line.to_string()),
                    Section::None => {
                        return Err(parse_err(format!("affix {line:?} outside of a section")));
                    }
                },
            }
        }
        let min_stem_chars = min_stem_chars.ok_or_else(|| RuleError::Parse {
            file: file.to_string(),
            line: 0,
            message: "missing min_stem_chars".into(),
        })?;
        Self::new(prefixes, suffixes, min_stem_chars)
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn min_stem_chars(&self) -> usize {
        self.min_stem_chars
    }

    fn normalized(&self, folding: &FoldingTable) -> Self {
        let norm = |v: &[String]| v.iter().map(|a| normalize(a, folding)).collect::<Vec<_>>();
        Self {
            prefixes: longest_first(norm(&self.prefixes)),
            suffixes: longest_first(norm(&self.suffixes)),
            min_stem_chars: self.min_stem_chars,
        }
    }
}

fn longest_first(mut affixes: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    affixes.retain(|a| seen.insert(a.clone()));
    affixes.sort_by_key(|a| std::cmp::Reverse(a.chars().count()));
    affixes
}

/// The complete rule set used by [`preprocess`], with a content fingerprint
/// that ties trained models to the rules they were trained with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    folding: FoldingTable,
    stoplist: StopList,
    stemmer: StemmerRules,
    fingerprint: String,
}

impl PreprocessConfig {
    /// Builds a config, storing the stoplist and affixes in folded form.
    pub fn new(folding: FoldingTable, stoplist: StopList, stemmer: StemmerRules) -> Self {
        let stoplist = stoplist.normalized(&folding);
        let stemmer = stemmer.normalized(&folding);
        let fingerprint = fingerprint(&folding, &stoplist, &stemmer);
        Self {
            folding,
            stoplist,
            stemmer,
            fingerprint,
        }
    }

    /// The rule files bundled with the crate.
    pub fn default_rules() -> Self {
        Self::from_sources(DEFAULT_FOLDING, DEFAULT_STOPLIST, DEFAULT_STEMMER)
            .expect("bundled rule files are valid")
    }

    pub fn from_sources(folding: &str, stoplist: &str, stemmer: &str) -> Result<Self, RuleError> {
        Ok(Self::new(
            FoldingTable::parse(folding, FOLDING_FILE)?,
            StopList::parse(stoplist),
            StemmerRules::parse(stemmer, STEMMER_FILE)?,
        ))
    }

    /// Loads `folding.tsv`, `stopwords.txt` and `stemmer.txt` from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, RuleError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| RuleError::Io { path, source })
        };
        let folding = read(FOLDING_FILE)?;
        let stoplist = read(STOPLIST_FILE)?;
        let stemmer = read(STEMMER_FILE)?;
        Ok(Self::new(
            FoldingTable::parse(&folding, &dir.join(FOLDING_FILE).display().to_string())?,
            StopList::parse(&stoplist),
            StemmerRules::parse(&stemmer, &dir.join(STEMMER_FILE).display().to_string())?,
        ))
    }

    pub fn folding(&self) -> &FoldingTable {
        &self.folding
    }

    pub fn stoplist(&self) -> &StopList {
        &self.stoplist
    }

    pub fn stemmer(&self) -> &StemmerRules {
        &self.stemmer
    }

    /// Hex SHA-256 over the canonical serialization of all three rule sets.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn preprocess(&self, text: &str) -> Vec<String> {
        preprocess(text, self)
    }

    /// Runs the pipeline and keeps every intermediate stage.
    pub fn stages(&self, text: &str) -> Stages {
        let normalized = normalize(text, &self.folding);
        let tokens = tokenize(&normalized);
        let filtered = remove_stopwords(tokens.clone(), &self.stoplist);
        let stems = filtered.iter().map(|w| stem(w, &self.stemmer)).collect();
        Stages {
            normalized,
            tokens,
            filtered,
            stems,
        }
    }
}

fn fingerprint(folding: &FoldingTable, stoplist: &StopList, stemmer: &StemmerRules) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"folding\n");
    for (s, c) in folding.entries() {
        hasher.update(format!("{s}\t{c}\n").as_bytes());
    }
    hasher.update(b"stoplist\n");
    for w in stoplist.words() {
        hasher.update(w.as_bytes());
        hasher.update(b"\n");
    }
    hasher.update(
        format!(
            "stemmer\nmin_stem_chars={}\n[prefixes]\n",
            stemmer.min_stem_chars
        )
        .as_bytes(),
    );
    for p in &stemmer.prefixes {
        hasher.update(p.as_bytes());
        hasher.update(b"\n");
    }
    hasher.update(b"[suffixes]\n");
    for s in &stemmer.suffixes {
        hasher.update(s.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Intermediate outputs of the preprocessing pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    pub normalized: String,
    pub tokens: Vec<String>,
    pub filtered: Vec<String>,
    pub stems: Vec<String>,
}

impl fmt::Display for Stages {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "normalized: {}", self.normalized)?;
        writeln!(f, "tokens: [{}]", self.tokens.join(", "))?;
        writeln!(f, "filtered: [{}]", self.filtered.join(", "))?;
        write!(f, "stems: [{}]", self.stems.join(", "))
    }
}

/// Replaces each character by its canonical homophone. Length in code points
/// is preserved.
pub fn normalize(text: &str, folding: &FoldingTable) -> String {
    text.chars().map(|c| folding.fold(c)).collect()
}

/// Splits on whitespace, the Ethiopic wordspace and sentence punctuation.
/// Separators are dropped and no empty tokens are produced.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(is_separator)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stoplist: &StopList) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stoplist.contains(t))
        .collect()
}

/// Strips at most one prefix and then at most one suffix. For each side the
/// longest affix whose removal leaves at least `min_stem_chars` code points
/// wins.
pub fn stem(word: &str, rules: &StemmerRules) -> String {
    let mut current = word;
    let len = |s: &str| s.chars().count();
    if let Some(rest) = rules
        .prefixes
        .iter()
        .filter_map(|p| current.strip_prefix(p.as_str()))
        .find(|rest| len(rest) >= rules.min_stem_chars)
    {
        current = rest;
    }
    if let Some(rest) = rules
        .suffixes
        .iter()
        .filter_map(|s| current.strip_suffix(s.as_str()))
        .find(|rest| len(rest) >= rules.min_stem_chars)
    {
        current = rest;
    }
    current.to_string()
}

/// normalize → tokenize → remove stopwords → stem.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let normalized = normalize(text, &config.folding);
    let tokens = remove_stopwords(tokenize(&normalized), &config.stoplist);
    tokens.iter().map(|w| stem(w, &config.stemmer)).collect()
}
