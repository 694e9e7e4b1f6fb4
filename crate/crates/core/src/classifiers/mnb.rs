//! Multinomial Naive Bayes over bag-of-words counts.

use serde::{Deserialize, Serialize};

use super::{check_dims, softmax, Classifier, ClassifierError};
use crate::features::LabeledExample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub num_classes: usize,
    pub num_features: usize,
    pub alpha: f64,
    pub log_priors: Vec<f64>,
    /// `log_likelihoods[c][f]` = ln P(feature f | class c).
    pub log_likelihoods: Vec<Vec<f64>>,
}

/// Estimates class priors from frequencies and per-class feature
/// likelihoods `(count(f,c) + α) / (Σ_f count(f,c) + α·V)`.
pub fn train_mnb(
    train: &[LabeledExample],
    num_classes: usize,
    alpha: f64,
) -> Result<MnbModel, ClassifierError> {
    let first = train.first().ok_or(ClassifierError::EmptyTrainingSet)?;
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(ClassifierError::BadConfig(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    let num_features = first.vector.len();
    let mut class_counts = vec![0usize; num_classes];
    let mut feature_counts = vec![vec![0.0; num_features]; num_classes];
    for ex in train {
        check_dims(num_features, ex.vector.len())?;
        if ex.class_index >= num_classes {
            return Err(ClassifierError::BadLabel {
                class: ex.class_index,
                classes: num_classes,
            });
        }
        class_counts[ex.class_index] += 1;
        for (acc, &v) in feature_counts[ex.class_index]
            .iter_mut()
            .zip(ex.vector.as_slice())
        {
            *acc += v;
        }
    }
    if let Some(missing) = class_counts.iter().position(|&n| n == 0) {
        return Err(ClassifierError::MissingClass(missing));
    }
    let total = train.len() as f64;
    let log_priors = class_counts
        .iter()
        .map(|&n| (n as f64 / total).ln())
        .collect();
    let log_likelihoods = feature_counts
        .iter()
        .map(|counts| {
            let denom = counts.iter().sum::<f64>() + alpha * num_features as f64;
            counts.iter().map(|&c| ((c + alpha) / denom).ln()).collect()
        })
        .collect();
    Ok(MnbModel {
        num_classes,
        num_features,
        alpha,
        log_priors,
        log_likelihoods,
    })
}

impl MnbModel {
    /// Unnormalized log posterior per class.
    pub fn joint_log_likelihood(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        check_dims(self.num_features, features.len())?;
        Ok(self
            .log_priors
            .iter()
            .zip(&self.log_likelihoods)
            .map(|(prior, ll)| {
                prior
                    + features
                        .iter()
                        .zip(ll)
                        .filter(|(&x, _)| x != 0.0)
                        .map(|(x, l)| x * l)
                        .sum::<f64>()
            })
            .collect())
    }
}

impl Classifier for MnbModel {
    fn num_features(&self) -> usize {
        self.num_features
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        Ok(softmax(&self.joint_log_likelihood(features)?))
    }
}
