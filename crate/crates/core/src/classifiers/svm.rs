//! One-vs-rest linear SVM trained with Pegasos-style stochastic subgradient
//! descent on `λ‖w‖² + mean hinge loss`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, softmax, Classifier, ClassifierError};
use crate::features::LabeledExample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmHyper {
    pub l2_lambda: f64,
    pub epochs: usize,
    /// Initial step; the step at update t is `eta0 / (1 + λ·t)`.
    pub eta0: f64,
    pub seed: u64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            epochs: 100,
            eta0: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub num_features: usize,
    /// One weight vector per class.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub hyper: SvmHyper,
}

/// Weight vector stored as `scale · direction` so the L2 shrink of every
/// step is O(1) instead of O(V).
struct ScaledVector {
    scale: f64,
    direction: Vec<f64>,
}

impl ScaledVector {
    fn zeros(n: usize) -> Self {
        Self {
            scale: 1.0,
            direction: vec![0.0; n],
        }
    }

    fn dot(&self, x: &[f64]) -> f64 {
        let d: f64 = self
            .direction
            .iter()
            .zip(x)
            .filter(|(_, &xi)| xi != 0.0)
            .map(|(w, xi)| w * xi)
            .sum();
        self.scale * d
    }

    fn shrink(&mut self, factor: f64) {
        if factor == 0.0 {
            self.direction.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale.abs() < 1e-9 {
            self.materialize();
        }
    }

    fn add_scaled(&mut self, coef: f64, x: &[f64]) {
        let c = coef / self.scale;
        for (w, &xi) in self.direction.iter_mut().zip(x) {
            if xi != 0.0 {
                *w += c * xi;
            }
        }
    }

    fn materialize(&mut self) {
        let s = self.scale;
        self.direction.iter_mut().for_each(|w| *w *= s);
        self.scale = 1.0;
    }

    fn into_vec(mut self) -> Vec<f64> {
        self.materialize();
        self.direction
    }
}

pub fn train_svm(
    train: &[LabeledExample],
    num_classes: usize,
    hyper: SvmHyper,
) -> Result<SvmModel, ClassifierError> {
    let first = train.first().ok_or(ClassifierError::EmptyTrainingSet)?;
    if !(hyper.l2_lambda > 0.0 && hyper.eta0 > 0.0) || hyper.epochs == 0 {
        return Err(ClassifierError::BadConfig(
            "svm needs positive l2_lambda and eta0 and at least one epoch".into(),
        ));
    }
    let num_features = first.vector.len();
    for ex in train {
        check_dims(num_features, ex.vector.len())?;
        if ex.class_index >= num_classes {
            return Err(ClassifierError::BadLabel {
                class: ex.class_index,
                classes: num_classes,
            });
        }
    }
    let mut present = vec![false; num_classes];
    train.iter().for_each(|e| present[e.class_index] = true);
    if num_classes < 2 || present.iter().filter(|&&p| p).count() < 2 {
        return Err(ClassifierError::SingleClass);
    }

    let lambda = hyper.l2_lambda;
    let mut weights: Vec<ScaledVector> = (0..num_classes)
        .map(|_| ScaledVector::zeros(num_features))
        .collect();
    let mut biases = vec![0.0; num_classes];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut t: u64 = 0;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = hyper.eta0 / (1.0 + lambda * t as f64);
            let x = train[i].vector.as_slice();
            for (class, (w, b)) in weights.iter_mut().zip(biases.iter_mut()).enumerate() {
                let y = if train[i].class_index == class {
                    1.0
                } else {
                    -1.0
                };
                let margin = y * (w.dot(x) + *b);
                // subgradient of λ‖w‖² is 2λw
                w.shrink(1.0 - 2.0 * eta * lambda);
                if margin < 1.0 {
                    w.add_scaled(eta * y, x);
                    *b += eta * y;
                }
            }
        }
    }
    Ok(SvmModel {
        num_features,
        weights: weights.into_iter().map(ScaledVector::into_vec).collect(),
        biases,
        hyper,
    })
}

impl SvmModel {
    /// Per-class decision values `w_c·x + b_c`.
    pub fn margins(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        check_dims(self.num_features, features.len())?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(features).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect())
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }
}

impl Classifier for SvmModel {
    fn num_features(&self) -> usize {
        self.num_features
    }

    fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        Ok(softmax(&self.margins(features)?))
    }
}
