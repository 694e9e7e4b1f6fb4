//! Fitting any of the three classifiers from a catalog.

use serde::{Deserialize, Serialize};

use crate::artifact::ModelArtifact;
use crate::classifiers::dnn::{train_dnn_with, EpochReport, TrainConfig};
use crate::classifiers::mnb::train_mnb;
use crate::classifiers::svm::{train_svm, SvmHyper};
use crate::classifiers::{ClassifierError, ClassifierKind, Model};
use crate::features::{make_dataset, BowMode, LabeledExample};
use crate::intents::IntentCatalog;
use crate::text::PreprocessConfig;
use crate::Error;

/// Hyperparameters for all three classifiers plus the feature mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub bow_mode: BowMode,
    pub dnn: TrainConfig,
    pub svm: SvmHyper,
    pub mnb_alpha: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            bow_mode: BowMode::Binary,
            dnn: TrainConfig::default(),
            svm: SvmHyper::default(),
            mnb_alpha: 1.0,
        }
    }
}

impl TrainOptions {
    /// Uses `seed` for every stochastic trainer.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dnn.seed = seed;
        self.svm.seed = seed;
        self
    }
}

/// Trains one classifier. Epoch reports are only produced for the DNN.
pub fn fit(
    kind: ClassifierKind,
    train: &[LabeledExample],
    num_classes: usize,
    options: &TrainOptions,
    validation: Option<&[LabeledExample]>,
    on_epoch: impl FnMut(&EpochReport),
) -> Result<(Model, Vec<EpochReport>), ClassifierError> {
    match kind {
        ClassifierKind::Mnb => Ok((
            Model::Mnb(train_mnb(train, num_classes, options.mnb_alpha)?),
            Vec::new(),
        )),
        ClassifierKind::Svm => Ok((
            Model::Svm(train_svm(train, num_classes, options.svm)?),
            Vec::new(),
        )),
        ClassifierKind::Dnn => {
            let (m, reports) =
                train_dnn_with(train, num_classes, &options.dnn, validation, on_epoch)?;
            Ok((Model::Dnn(m), reports))
        }
    }
}

/// Trains on every pattern of `catalog` and packages the result.
pub fn train_artifact(
    catalog: &IntentCatalog,
    rules: &PreprocessConfig,
    kind: ClassifierKind,
    options: &TrainOptions,
    on_epoch: impl FnMut(&EpochReport),
) -> Result<(ModelArtifact, Vec<EpochReport>), Error> {
    let data = make_dataset(catalog, rules, options.bow_mode)?;
    let (model, reports) = fit(
        kind,
        &data.examples,
        data.labels.len(),
        options,
        None,
        on_epoch,
    )?;
    let artifact = ModelArtifact::new(
        model,
        data.vocabulary,
        data.labels,
        rules,
        options,
        &catalog.source_path,
    );
    Ok((artifact, reports))
}
