//! Intent classifiers behind one probabilistic interface.
//!
//! - [`mnb`]: multinomial Naive Bayes with Laplace smoothing.
//! - [`svm`]: one-vs-rest linear SVM trained by stochastic subgradient descent.
//! - [`dnn`]: V → 128 → 64 → C feedforward network trained with backprop and [`adam`].

pub mod adam;
pub mod dnn;
pub mod mnb;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{AdamHyper, AdamState};
pub use dnn::{DnnModel, EpochReport, ForwardCache, Gradients, TrainConfig};
pub use mnb::MnbModel;
pub use svm::{SvmHyper, SvmModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifierError {
    #[error("feature vector has length {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class {0} has no training example")]
    MissingClass(usize),
    #[error("training data covers fewer than two classes")]
    SingleClass,
    #[error("invalid network dimensions: {0}")]
    BadDimensions(String),
    #[error("forward cache does not belong to the current parameters")]
    StaleCache,
    #[error("parameter and gradient shapes differ")]
    ShapeMismatch,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("class index {class} out of range for {classes} classes")]
    BadLabel { class: usize, classes: usize },
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
}

/// Max-shifted softmax. Returns an empty vector for empty input.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    #[default]
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Relu,
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::Linear,
    ];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Linear => x,
        }
    }

    /// d/dx of [`apply`](Self::apply) at the pre-activation `x`. The ReLU
    /// derivative at 0 is 0.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => {
                let s = self.apply(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Linear => 1.0,
        }
    }

    /// Display name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            ActivationKind::Relu => "ReLU",
            ActivationKind::Sigmoid => "Sigmoid",
            ActivationKind::Tanh => "Tanh",
            ActivationKind::Linear => "Linear",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Linear => "linear",
        })
    }
}

impl FromStr for ActivationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown activation {s:?} (expected relu|sigmoid|tanh|linear)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Mnb,
    Svm,
    Dnn,
}

impl ClassifierKind {
    pub fn title(self) -> &'static str {
        match self {
            ClassifierKind::Mnb => "MNB",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Dnn => "DNN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Mnb => "mnb",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Dnn => "dnn",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mnb" => Ok(ClassifierKind::Mnb),
            "svm" => Ok(ClassifierKind::Svm),
            "dnn" => Ok(ClassifierKind::Dnn),
            other => Err(format!(
                "unknown classifier {other:?} (expected mnb|svm|dnn)"
            )),
        }
    }
}

/// Common prediction surface of the three classifiers.
pub trait Classifier {
    fn num_features(&self) -> usize;
    fn num_classes(&self) -> usize;

    /// Probability distribution over classes.
    fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError>;

    /// All classes ranked by probability, ties broken by class index.
    fn predict(&self, features: &[f64]) -> Result<Vec<(usize, f64)>, ClassifierError> {
        Ok(rank(&self.predict_proba(features)?))
    }
}

pub fn rank(probs: &[f64]) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = probs.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<(), ClassifierError> {
    if expected != got {
        return Err(ClassifierError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Categorical cross-entropy of one prediction, clamped away from ln(0).
pub fn cross_entropy(probs: &[f64], target: usize) -> f64 {
    -probs[target].max(1e-15).ln()
}

/// Any of the three trained classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Model {
    Mnb(MnbModel),
    Svm(SvmModel),
    Dnn(DnnModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Mnb(_) => ClassifierKind::Mnb,
            Model::Svm(_) => ClassifierKind::Svm,
            Model::Dnn(_) => ClassifierKind::Dnn,
        }
    }
}

impl Classifier for Model {
    fn num_features(&self) -> usize {
        match self {
            Model::Mnb(m) => m.num_features(),
            Model::Svm(m) => m.num_features(),
            Model::Dnn(m) => m.num_features(),
        }
    }

    fn num_classes(&self) -> usize {
        match self {
            Model::Mnb(m) => m.num_classes(),
            Model::Svm(m) => m.num_classes(),
            Model::Dnn(m) => m.num_classes(),
        }
    }

    fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        match self {
            Model::Mnb(m) => m.predict_proba(features),
            Model::Svm(m) => m.predict_proba(features),
            Model::Dnn(m) => m.predict_proba(features),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0, 0.0]);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        for c in [-5.0, 0.0, 3.7, 700.0] {
            let p = softmax(&[c, c + 2f64.ln()]);
            assert!((p[0] - 1.0 / 3.0).abs() < 1e-12);
            assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
        }
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] < 1e-300);
    }

    #[test]
    fn activation_examples() {
        use ActivationKind::*;
        assert_eq!(Relu.apply(-2.0), 0.0);
        assert_eq!(Relu.apply(3.0), 3.0);
        assert_eq!(Relu.derivative(0.0), 0.0);
        assert_eq!(Sigmoid.apply(0.0), 0.5);
        assert_eq!(Tanh.apply(0.0), 0.0);
        assert_eq!(Linear.apply(-1.25), -1.25);
        for k in ActivationKind::ALL {
            for x in [-1.3, -0.2, 0.4, 2.2] {
                let h = 1e-6;
                let fd = (k.apply(x + h) - k.apply(x - h)) / (2.0 * h);
                assert!((fd - k.derivative(x)).abs() < 1e-8, "{k} at {x}");
            }
            assert_eq!(k.to_string().parse::<ActivationKind>().unwrap(), k);
        }
    }

    #[test]
    fn rank_examples() {
        let r: Vec<usize> = rank(&[1.0 / 3.0; 3]).into_iter().map(|x| x.0).collect();
        assert_eq!(r, vec![0, 1, 2]);
        let r: Vec<usize> = rank(&[0.1, 0.7, 0.2]).into_iter().map(|x| x.0).collect();
        assert_eq!(r, vec![1, 2, 0]);
    }

    #[test]
    fn kind_parsing() {
        for k in [
            ClassifierKind::Mnb,
            ClassifierKind::Svm,
            ClassifierKind::Dnn,
        ] {
            assert_eq!(k.to_string().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("knn".parse::<ClassifierKind>().is_err());
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(
            xs in proptest::collection::vec(-50.0f64..50.0, 1..8),
            c in -100.0f64..100.0,
        ) {
            let p = softmax(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| v > 0.0));
            let top = rank(&xs)[0].0;
            prop_assert_eq!(p[top], p.iter().copied().fold(0.0, f64::max));
        }
    }
}
