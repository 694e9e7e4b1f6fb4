//! Intent catalog: loading, validation and persistence of the JSON intent file.
//!
//! ```json
//! {"intents": [{"tag": "greeting", "patterns": ["ሰላም"], "responses": ["ሰላም!"],
//!               "context_set": "", "context_filter": ""}]}
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const SAMPLE_CATALOG: &str = include_str!("../data/sample_intents.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed intent file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("intent {intent:?}: field `{field}` {problem}")]
    Schema {
        intent: String,
        field: &'static str,
        problem: String,
    },
}

/// One FAQ topic.
///
/// `context_set` distinguishes "absent" (`None`, context untouched) from the
/// empty string (`Some("")`, context cleared). An empty `context_filter` is
/// the same as no filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub tag: String,
    pub patterns: Vec<String>,
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_set: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_filter: Option<String>,
}

impl Intent {
    pub fn new(tag: impl Into<String>, patterns: &[&str], responses: &[&str]) -> Self {
        Self {
            tag: tag.into(),
            patterns: patterns.iter().map(|s| s.to_string()).collect(),
            responses: responses.iter().map(|s| s.to_string()).collect(),
            context_set: None,
            context_filter: None,
        }
    }

    pub fn with_context_set(mut self, ctx: impl Into<String>) -> Self {
        self.context_set = Some(ctx.into());
        self
    }

    pub fn with_context_filter(mut self, ctx: impl Into<String>) -> Self {
        self.context_filter = Some(ctx.into());
        self
    }

    /// The filter, if any, with the empty string treated as absent.
    pub fn filter(&self) -> Option<&str> {
        self.context_filter.as_deref().filter(|f| !f.is_empty())
    }
}

/// A context filter that no intent's `context_set` can ever satisfy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogWarning {
    pub intent: String,
    pub context_filter: String,
}

impl std::fmt::Display for CatalogWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "intent {:?}: context_filter {:?} matches no context_set",
            self.intent, self.context_filter
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CatalogFile {
    intents: Vec<Intent>,
}

#[derive(Deserialize)]
struct RawCatalog {
    intents: Option<Vec<RawIntent>>,
}

#[derive(Deserialize)]
struct RawIntent {
    tag: Option<String>,
    patterns: Option<Vec<String>>,
    responses: Option<Vec<String>>,
    #[serde(default)]
    context_set: Option<String>,
    #[serde(default)]
    context_filter: Option<String>,
}

#[derive(Debug, Clone)]
pub struct IntentCatalog {
    pub intents: Vec<Intent>,
    pub source_path: String,
    warnings: Vec<CatalogWarning>,
}

impl IntentCatalog {
    /// Validates and builds a catalog.
    pub fn new(intents: Vec<Intent>, source_path: impl Into<String>) -> Result<Self, CatalogError> {
        let mut seen = HashSet::new();
        for (i, intent) in intents.iter().enumerate() {
            let name = if intent.tag.is_empty() {
                format!("#{i}")
            } else {
                intent.tag.clone()
            };
            let schema = |field, problem: &str| CatalogError::Schema {
                intent: name.clone(),
                field,
                problem: problem.to_string(),
            };
            if intent.tag.trim().is_empty() {
                return Err(schema("tag", "must be nonempty"));
            }
            if !seen.insert(intent.tag.as_str()) {
                return Err(schema("tag", "is duplicated"));
            }
            if intent.patterns.is_empty() {
                return Err(schema("patterns", "must contain at least one pattern"));
            }
            if intent.responses.is_empty() {
                return Err(schema("responses", "must contain at least one response"));
            }
        }
        let contexts: BTreeSet<&str> = intents
            .iter()
            .filter_map(|i| i.context_set.as_deref())
            .filter(|c| !c.is_empty())
            .collect();
        let warnings: Vec<CatalogWarning> = intents
            .iter()
            .filter_map(|i| {
                i.filter()
                    .filter(|f| !contexts.contains(f))
                    .map(|f| CatalogWarning {
                        intent: i.tag.clone(),
                        context_filter: f.to_string(),
                    })
            })
            .collect();
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Self {
            intents,
            source_path: source_path.into(),
            warnings,
        })
    }

    pub fn empty() -> Self {
        Self {
            intents: Vec::new(),
            source_path: String::new(),
            warnings: Vec::new(),
        }
    }

    /// The 12-intent university FAQ catalog shipped with the crate.
    pub fn sample() -> Self {
        Self::from_json(SAMPLE_CATALOG.as_bytes(), "<bundled sample>")
            .expect("bundled catalog is valid")
    }

    pub fn from_json(bytes: &[u8], source: &str) -> Result<Self, CatalogError> {
        let raw: RawCatalog =
            serde_json::from_slice(bytes).map_err(|source_err| CatalogError::Parse {
                path: source.to_string(),
                source: source_err,
            })?;
        let raw_intents = raw.intents.ok_or_else(|| CatalogError::Schema {
            intent: "<catalog>".into(),
            field: "intents",
            problem: "is missing".into(),
        })?;
        let mut intents = Vec::with_capacity(raw_intents.len());
        for (i, r) in raw_intents.into_iter().enumerate() {
            let name = r
                .tag
                .clone()
                .filter(|t| !t.is_empty())
                .unwrap_or_else(|| format!("#{i}"));
            let missing = |field| CatalogError::Schema {
                intent: name.clone(),
                field,
                problem: "is missing".into(),
            };
            intents.push(Intent {
                tag: r.tag.clone().ok_or_else(|| missing("tag"))?,
                patterns: r.patterns.ok_or_else(|| missing("patterns"))?,
                responses: r.responses.ok_or_else(|| missing("responses"))?,
                context_set: r.context_set,
                context_filter: r.context_filter.filter(|f| !f.is_empty()),
            });
        }
        Self::new(intents, source)
    }

    pub fn warnings(&self) -> &[CatalogWarning] {
        &self.warnings
    }

    pub fn get(&self, tag: &str) -> Option<&Intent> {
        self.intents.iter().find(|i| i.tag == tag)
    }

    pub fn len(&self) -> usize {
        self.intents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intents.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile {
            intents: self.intents.clone(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }
}

pub fn load_catalog(path: &Path) -> Result<IntentCatalog, CatalogError> {
    let bytes = fs::read(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    IntentCatalog::from_json(&bytes, &path.display().to_string())
}

pub fn save_catalog(catalog: &IntentCatalog, path: &Path) -> Result<(), CatalogError> {
    let mut json = catalog.to_json();
    json.push('\n');
    fs::write(path, json).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogStats {
    pub tags: usize,
    pub patterns: usize,
    pub responses: usize,
    pub min_patterns_per_tag: usize,
    pub mean_patterns_per_tag: f64,
    pub max_patterns_per_tag: usize,
}

pub fn catalog_stats(catalog: &IntentCatalog) -> CatalogStats {
    let per_tag: Vec<usize> = catalog.intents.iter().map(|i| i.patterns.len()).collect();
    let patterns: usize = per_tag.iter().sum();
    CatalogStats {
        tags: catalog.len(),
        patterns,
        responses: catalog.intents.iter().map(|i| i.responses.len()).sum(),
        min_patterns_per_tag: per_tag.iter().copied().min().unwrap_or(0),
        mean_patterns_per_tag: if per_tag.is_empty() {
            0.0
        } else {
            patterns as f64 / per_tag.len() as f64
        },
        max_patterns_per_tag: per_tag.iter().copied().max().unwrap_or(0),
    }
}
