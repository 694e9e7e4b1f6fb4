//! Classification metrics and the two experiment tables: a classifier
//! comparison and a hidden-activation sweep for the DNN.
//!
//! Macro averages run over the classes present in the evaluated set. Undefined
//! precision or recall is reported as 0 with a flag. Micro values are included
//! in the report so either averaging convention can be compared.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::classifiers::dnn::EpochReport;
use crate::classifiers::{
    cross_entropy, ActivationKind, Classifier, ClassifierError, ClassifierKind,
};
use crate::features::{make_dataset, split_dataset, LabeledExample};
use crate::intents::IntentCatalog;
use crate::text::PreprocessConfig;
use crate::training::{fit, TrainOptions};
use crate::Error;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("confusion matrix must be square with at least one class")]
    NotSquare,
    #[error("no test examples to evaluate")]
    EmptyTestSet,
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|r| r.len() != n) {
            return Err(EvalError::NotSquare);
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }
}

/// Top-1 confusion matrix of `model` over `examples`.
pub fn confusion(
    model: &impl Classifier,
    examples: &[LabeledExample],
) -> Result<ConfusionMatrix, Error> {
    if examples.is_empty() {
        return Err(EvalError::EmptyTestSet.into());
    }
    let classes = model.num_classes();
    let mut cm = ConfusionMatrix::zeros(classes);
    for ex in examples {
        if ex.class_index >= classes {
            return Err(ClassifierError::BadLabel {
                class: ex.class_index,
                classes,
            }
            .into());
        }
        let top = model.predict(ex.vector.as_slice())?[0].0;
        cm.record(ex.class_index, top);
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// False when nothing was predicted as this class.
    pub precision_defined: bool,
    /// False when the class is absent from the evaluated set.
    pub recall_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Mean cross-entropy; only known when probabilities were available.
    pub cross_entropy: Option<f64>,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let n = cm.classes();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|c| {
            let tp = cm.get(c, c);
            let predicted: u64 = (0..n).map(|t| cm.get(t, c)).sum();
            let support: u64 = cm.rows()[c].iter().sum();
            let (precision, precision_defined) = ratio(tp, predicted);
            let (recall, recall_defined) = ratio(tp, support);
            ClassMetrics {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support,
                precision_defined,
                recall_defined,
            }
        })
        .collect();

    let present: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        present.iter().map(|m| f(m)).sum::<f64>() / present.len() as f64
    };
    let accuracy = cm.trace() as f64 / total as f64;
    // Single-label top-1: every miss is one false positive and one false negative.
    let micro = accuracy;
    Ok(MetricsReport {
        accuracy,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        micro_precision: micro,
        micro_recall: micro,
        micro_f1: f1_score(micro, micro),
        per_class,
        cross_entropy: None,
    })
}

/// Confusion matrix plus metrics, including mean cross-entropy.
pub fn evaluate(
    model: &impl Classifier,
    examples: &[LabeledExample],
) -> Result<(ConfusionMatrix, MetricsReport), Error> {
    let cm = confusion(model, examples)?;
    let mut report = metrics_from_confusion(&cm)?;
    let mut ce = 0.0;
    for ex in examples {
        ce += cross_entropy(&model.predict_proba(ex.vector.as_slice())?, ex.class_index);
    }
    report.cross_entropy = Some(ce / examples.len() as f64);
    Ok((cm, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preprocess: PreprocessConfig,
    pub options: TrainOptions,
    pub test_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default_rules(),
            options: TrainOptions::default(),
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Compare,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Row label as printed: MNB/SVM/DNN or ReLU/Sigmoid/Tanh/Linear.
    pub name: String,
    pub classifier: ClassifierKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<ActivationKind>,
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epochs: Vec<EpochReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub created_unix: u64,
    pub tool_version: String,
    pub catalog_source: String,
    pub preprocess_fingerprint: String,
    pub seed: u64,
    pub test_fraction: f64,
    pub training: TrainOptions,
    pub labels: Vec<String>,
    pub train_size: usize,
    pub test_size: usize,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// Aligned plain-text table with percentages to two decimals.
    pub fn table(&self) -> String {
        let first = match self.experiment {
            ExperimentKind::Compare => "Classifier",
            ExperimentKind::Sweep => "Activation",
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{first:<12}{:>10}{:>11}{:>10}{:>11}",
            "Accuracy", "Precision", "Recall", "F-1 score"
        );
        for row in &self.rows {
            let m = &row.metrics;
            let _ = writeln!(
                out,
                "{:<12}{:>9.2}%{:>10.2}%{:>9.2}%{:>10.2}%",
                row.name,
                100.0 * m.accuracy,
                100.0 * m.macro_precision,
                100.0 * m.macro_recall,
                100.0 * m.macro_f1
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Job {
    name: String,
    kind: ClassifierKind,
    activation: Option<ActivationKind>,
    options: TrainOptions,
}

fn run_experiment(
    experiment: ExperimentKind,
    catalog: &IntentCatalog,
    config: &ExperimentConfig,
    seed: u64,
    jobs: Vec<Job>,
) -> Result<ExperimentReport, Error> {
    let options = config.options.clone().with_seed(seed);
    let data = make_dataset(catalog, &config.preprocess, options.bow_mode)?;
    let (train, test) = split_dataset(&data.examples, config.test_fraction, seed)?;
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet.into());
    }
    let classes = data.labels.len();

    // Independent deterministic jobs; results are collected in job order.
    let results: Vec<Result<ExperimentRow, Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|job| {
                let (train, test) = (&train, &test);
                s.spawn(move || {
                    let (model, epochs) =
                        fit(job.kind, train, classes, &job.options, Some(test), |_| {})?;
                    let (confusion, metrics) = evaluate(&model, test)?;
                    Ok(ExperimentRow {
                        name: job.name,
                        classifier: job.kind,
                        activation: job.activation,
                        metrics,
                        confusion,
                        epochs,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });

    Ok(ExperimentReport {
        experiment,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        catalog_source: catalog.source_path.clone(),
        preprocess_fingerprint: config.preprocess.fingerprint().to_string(),
        seed,
        test_fraction: config.test_fraction,
        training: options,
        labels: data.labels.tags().to_vec(),
        train_size: train.len(),
        test_size: test.len(),
        rows: results.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Trains DNN, SVM and MNB on one stratified split and scores each on the
/// same held-out set.
pub fn compare_classifiers(
    catalog: &IntentCatalog,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentReport, Error> {
    let options = config.options.clone().with_seed(seed);
    let jobs = [
        ClassifierKind::Dnn,
        ClassifierKind::Svm,
        ClassifierKind::Mnb,
    ]
    .into_iter()
    .map(|kind| Job {
        name: kind.title().to_string(),
        kind,
        activation: (kind == ClassifierKind::Dnn).then_some(options.dnn.activation),
        options: options.clone(),
    })
    .collect();
    run_experiment(ExperimentKind::Compare, catalog, config, seed, jobs)
}

/// Trains the DNN once per hidden activation, all else fixed.
pub fn activation_sweep(
    catalog: &IntentCatalog,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentReport, Error> {
    let options = config.options.clone().with_seed(seed);
    let jobs = ActivationKind::ALL
        .into_iter()
        .map(|act| {
            let mut o = options.clone();
            o.dnn.activation = act;
            Job {
                name: act.title().to_string(),
                kind: ClassifierKind::Dnn,
                activation: Some(act),
                options: o,
            }
        })
        .collect();
    run_experiment(ExperimentKind::Sweep, catalog, config, seed, jobs)
}
