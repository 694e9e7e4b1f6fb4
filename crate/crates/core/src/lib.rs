//! Amharic FAQ chatbot engine.
//!
//! The pipeline is: [`text`] preprocessing → [`features`] bag-of-words →
//! one of the [`classifiers`] → [`dialogue`] response selection with
//! conversation context. [`artifact`] persists trained models, and
//! [`evaluation`] runs the classifier comparison and activation sweep.

pub mod artifact;
pub mod classifiers;
pub mod dialogue;
pub mod evaluation;
pub mod features;
pub mod intents;
pub mod synth;
pub mod text;
pub mod training;

use thiserror::Error;

/// Any error raised by the pipeline-level entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rules(#[from] text::RuleError),
    #[error(transparent)]
    Catalog(#[from] intents::CatalogError),
    #[error(transparent)]
    Features(#[from] features::FeatureError),
    #[error(transparent)]
    Classifier(#[from] classifiers::ClassifierError),
    #[error(transparent)]
    Artifact(#[from] artifact::ArtifactError),
    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
    #[error(transparent)]
    Dialogue(#[from] dialogue::DialogueError),
}
