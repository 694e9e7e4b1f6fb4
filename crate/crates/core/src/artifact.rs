//! Portable model artifact: one UTF-8 JSON document holding the trained
//! parameters, vocabulary, label map and the fingerprint of the
//! preprocessing rules the model was trained with.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{Classifier, ClassifierKind, Model};
use crate::features::{BowMode, LabelMap, Vocabulary};
use crate::text::PreprocessConfig;
use crate::training::TrainOptions;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot access artifact {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("artifact format version {found} is not supported (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("artifact was trained with preprocessing rules {artifact}, but the supplied rules are {rules}")]
    FingerprintMismatch { artifact: String, rules: String },
    #[error("inconsistent artifact: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMetadata {
    pub created_unix: u64,
    pub tool_version: String,
    pub catalog_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub preprocess_fingerprint: String,
    pub bow_mode: BowMode,
    pub vocabulary: Vocabulary,
    pub labels: LabelMap,
    pub classifier: Model,
    pub training: TrainOptions,
    pub metadata: ArtifactMetadata,
}

impl ModelArtifact {
    pub fn new(
        classifier: Model,
        vocabulary: Vocabulary,
        labels: LabelMap,
        rules: &PreprocessConfig,
        training: &TrainOptions,
        catalog_source: &str,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            preprocess_fingerprint: rules.fingerprint().to_string(),
            bow_mode: training.bow_mode,
            vocabulary,
            labels,
            classifier,
            training: training.clone(),
            metadata: ArtifactMetadata {
                created_unix: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                catalog_source: catalog_source.to_string(),
            },
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.classifier.kind()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("artifact serializes")
    }

    pub fn from_json(bytes: &[u8], source: &str) -> Result<Self, ArtifactError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_slice(bytes).map_err(|e| ArtifactError::Parse {
            path: source.to_string(),
            source: e,
        })?;
        if header.format_version != FORMAT_VERSION {
            return Err(ArtifactError::UnsupportedVersion {
                found: header.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let artifact: Self = serde_json::from_slice(bytes).map_err(|e| ArtifactError::Parse {
            path: source.to_string(),
            source: e,
        })?;
        artifact.check_shapes()?;
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        fs::write(path, self.to_json()).map_err(|source| ArtifactError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads an artifact and checks it against the rule set it will be used with.
    pub fn load(path: &Path, rules: &PreprocessConfig) -> Result<Self, ArtifactError> {
        let bytes = fs::read(path).map_err(|source| ArtifactError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let artifact = Self::from_json(&bytes, &path.display().to_string())?;
        artifact.check_rules(rules)?;
        Ok(artifact)
    }

    pub fn check_rules(&self, rules: &PreprocessConfig) -> Result<(), ArtifactError> {
        if self.preprocess_fingerprint != rules.fingerprint() {
            return Err(ArtifactError::FingerprintMismatch {
                artifact: self.preprocess_fingerprint.clone(),
                rules: rules.fingerprint().to_string(),
            });
        }
        Ok(())
    }

    fn check_shapes(&self) -> Result<(), ArtifactError> {
        let (features, classes) = (
            self.classifier.num_features(),
            self.classifier.num_classes(),
        );
        if features != self.vocabulary.len() {
            return Err(ArtifactError::Inconsistent(format!(
                "classifier expects {features} features but the vocabulary has {}",
                self.vocabulary.len()
            )));
        }
        if classes != self.labels.len() {
            return Err(ArtifactError::Inconsistent(format!(
                "classifier has {classes} classes but the label map has {}",
                self.labels.len()
            )));
        }
        let ok = match &self.classifier {
            Model::Mnb(m) => {
                m.log_priors.len() == classes
                    && m.log_likelihoods.len() == classes
                    && m.log_likelihoods.iter().all(|r| r.len() == features)
            }
            Model::Svm(m) => {
                m.biases.len() == classes && m.weights.iter().all(|w| w.len() == features)
            }
            Model::Dnn(m) => m.is_consistent(),
        };
        if !ok {
            return Err(ArtifactError::Inconsistent(
                "parameter shapes do not chain".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::dnn::TrainConfig;
    use crate::features::{make_dataset, vectorize};
    use crate::intents::IntentCatalog;
    use crate::text::{FoldingTable, StemmerRules, StopList};
    use crate::training::train_artifact;

    fn quick_options() -> TrainOptions {
        TrainOptions {
            dnn: TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            },
            ..TrainOptions::default()
        }
    }

    #[test]
    fn round_trip_predictions_bit_identical() {
        let rules = PreprocessConfig::default_rules();
        let catalog = IntentCatalog::sample();
        let data = make_dataset(&catalog, &rules, BowMode::Binary).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for kind in [
            ClassifierKind::Mnb,
            ClassifierKind::Svm,
            ClassifierKind::Dnn,
        ] {
            let (artifact, _) =
                train_artifact(&catalog, &rules, kind, &quick_options(), |_| {}).unwrap();
            let path = dir.path().join(format!("{kind}.json"));
            artifact.save(&path).unwrap();
            let back = ModelArtifact::load(&path, &rules).unwrap();
            assert_eq!(back.kind(), kind);
            assert_eq!(back, artifact);
            for ex in &data.examples {
                let a = artifact
                    .classifier
                    .predict_proba(ex.vector.as_slice())
                    .unwrap();
                let b = back.classifier.predict_proba(ex.vector.as_slice()).unwrap();
                assert_eq!(a, b);
            }
            let odd = vectorize(&["ሌላ".to_string()], &back.vocabulary, BowMode::Binary);
            assert_eq!(
                artifact.classifier.predict_proba(odd.as_slice()).unwrap(),
                back.classifier.predict_proba(odd.as_slice()).unwrap()
            );
        }
    }

    #[test]
    fn fingerprint_mismatch_is_hard_error() {
        let rules = PreprocessConfig::default_rules();
        let (artifact, _) = train_artifact(
            &IntentCatalog::sample(),
            &rules,
            ClassifierKind::Mnb,
            &quick_options(),
            |_| {},
        )
        .unwrap();
        let other = PreprocessConfig::new(
            FoldingTable::new([]).unwrap(),
            StopList::default(),
            StemmerRules::new(vec![], vec![], 2).unwrap(),
        );
        assert!(matches!(
            artifact.check_rules(&other),
            Err(ArtifactError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn version_and_shape_validation() {
        let rules = PreprocessConfig::default_rules();
        let (artifact, _) = train_artifact(
            &IntentCatalog::sample(),
            &rules,
            ClassifierKind::Mnb,
            &quick_options(),
            |_| {},
        )
        .unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&artifact.to_json()).unwrap();
        v["format_version"] = 99.into();
        assert!(matches!(
            ModelArtifact::from_json(v.to_string().as_bytes(), "x"),
            Err(ArtifactError::UnsupportedVersion { found: 99, .. })
        ));
        let mut v: serde_json::Value = serde_json::from_str(&artifact.to_json()).unwrap();
        v["vocabulary"].as_array_mut().unwrap().pop();
        assert!(matches!(
            ModelArtifact::from_json(v.to_string().as_bytes(), "x"),
            Err(ArtifactError::Inconsistent(_))
        ));
        assert!(matches!(
            ModelArtifact::from_json(b"{}", "x"),
            Err(ArtifactError::Parse { .. })
        ));
    }
}
