//! Dense feedforward classifier: V → h1 → h2 → C with a configurable hidden
//! activation, inverted dropout after each hidden layer and a softmax output,
//! trained on categorical cross-entropy with mini-batch Adam.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::{AdamHyper, AdamState};
use super::{
    check_dims, cross_entropy, rank, softmax, ActivationKind, Classifier, ClassifierError,
};
use crate::features::LabeledExample;

pub const DEFAULT_HIDDEN: [usize; 2] = [128, 64];

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn next_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Affine layer; `weights[i * outputs + j]` connects input `i` to output `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.biases.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (zj, w) in z.iter_mut().zip(row) {
                *zj += xi * w;
            }
        }
        z
    }

    fn is_consistent(&self) -> bool {
        self.weights.len() == self.inputs * self.outputs && self.biases.len() == self.outputs
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DnnModel {
    /// `[V, h1, h2, C]`.
    pub layer_dims: [usize; 4],
    layers: Vec<DenseLayer>,
    pub hidden_activation: ActivationKind,
    pub dropout_rate: f64,
    pub seed: u64,
    /// Changes whenever the parameters may have changed; forward caches
    /// remember it so stale ones are rejected.
    #[serde(skip, default = "next_version")]
    version: u64,
}

impl PartialEq for DnnModel {
    fn eq(&self, other: &Self) -> bool {
        self.layer_dims == other.layer_dims
            && self.layers == other.layers
            && self.hidden_activation == other.hidden_activation
            && self.dropout_rate == other.dropout_rate
            && self.seed == other.seed
    }
}

/// Intermediate values of one forward pass, consumed by backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    input: Vec<f64>,
    /// Pre-activations of the two hidden layers.
    pre: [Vec<f64>; 2],
    /// Hidden outputs after activation and dropout.
    post: [Vec<f64>; 2],
    /// Per-unit dropout multipliers (0 or 1/(1−rate)); `None` in inference.
    masks: [Option<Vec<f64>>; 2],
    pub probs: Vec<f64>,
}

/// Gradients laid out exactly like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    fn zeros_like(model: &DnnModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= factor);
            l.biases.iter_mut().for_each(|b| *b *= factor);
        }
    }
}

impl DnnModel {
    /// He-normal weights (σ = √(2/fan_in)) for ReLU, Glorot-uniform
    /// otherwise; zero biases.
    pub fn new(
        num_features: usize,
        hidden: [usize; 2],
        num_classes: usize,
        hidden_activation: ActivationKind,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self, ClassifierError> {
        if num_features < 1 {
            return Err(ClassifierError::BadDimensions(
                "need at least one input feature".into(),
            ));
        }
        // One class is allowed: its softmax output is constantly 1.
        if num_classes < 1 {
            return Err(ClassifierError::BadDimensions(
                "need at least one class".into(),
            ));
        }
        if hidden.contains(&0) {
            return Err(ClassifierError::BadDimensions(
                "hidden layers must be nonempty".into(),
            ));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(ClassifierError::BadConfig(format!(
                "dropout rate {dropout_rate} not in [0, 1)"
            )));
        }
        let dims = [num_features, hidden[0], hidden[1], num_classes];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let mut layer = DenseLayer::zeros(fan_in, fan_out);
                match hidden_activation {
                    ActivationKind::Relu => {
                        let normal =
                            Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                        layer
                            .weights
                            .iter_mut()
                            .for_each(|x| *x = normal.sample(&mut rng));
                    }
                    _ => {
                        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        layer
                            .weights
                            .iter_mut()
                            .for_each(|x| *x = rng.random_range(-limit..limit));
                    }
                }
                layer
            })
            .collect();
        Ok(Self {
            layer_dims: dims,
            layers,
            hidden_activation,
            dropout_rate,
            seed,
            version: next_version(),
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access to the parameters. Invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.version = next_version();
        &mut self.layers
    }

    /// Checks that layer shapes chain `V → h1 → h2 → C`.
    pub fn is_consistent(&self) -> bool {
        self.layers.len() == 3
            && self.layers.iter().all(DenseLayer::is_consistent)
            && self
                .layers
                .iter()
                .enumerate()
                .all(|(k, l)| l.inputs == self.layer_dims[k] && l.outputs == self.layer_dims[k + 1])
    }

    fn run(
        &self,
        x: &[f64],
        mut dropout: Option<&mut dyn rand::RngCore>,
    ) -> Result<ForwardCache, ClassifierError> {
        check_dims(self.layer_dims[0], x.len())?;
        let act = self.hidden_activation;
        let keep_scale = 1.0 / (1.0 - self.dropout_rate);
        let mut pre: [Vec<f64>; 2] = Default::default();
        let mut post: [Vec<f64>; 2] = Default::default();
        let mut masks: [Option<Vec<f64>>; 2] = Default::default();
        for k in 0..2 {
            let input = if k == 0 { x } else { &post[0] };
            let z = self.layers[k].affine(input);
            let mut a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            if let Some(rng) = dropout.as_deref_mut() {
                let mask: Vec<f64> = (0..a.len())
                    .map(|_| {
                        if rng.random::<f64>() < self.dropout_rate {
                            0.0
                        } else {
                            keep_scale
                        }
                    })
                    .collect();
                a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                masks[k] = Some(mask);
            }
            pre[k] = z;
            post[k] = a;
        }
        let probs = softmax(&self.layers[2].affine(&post[1]));
        Ok(ForwardCache {
            version: self.version,
            input: x.to_vec(),
            pre,
            post,
            masks,
            probs,
        })
    }

    /// Inference-mode forward pass (no dropout).
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), ClassifierError> {
        let cache = self.run(x, None)?;
        Ok((cache.probs.clone(), cache))
    }

    /// Training-mode forward pass with inverted dropout drawn from `rng`.
    pub fn forward_train<R: Rng>(
        &self,
        x: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, ForwardCache), ClassifierError> {
        let cache = self.run(x, Some(rng))?;
        Ok((cache.probs.clone(), cache))
    }

    /// Gradients of `−ln p[target]` for the pass recorded in `cache`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        target: usize,
    ) -> Result<Gradients, ClassifierError> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(cache, target, &mut grads)?;
        Ok(grads)
    }

    /// Like [`backward`](Self::backward) but adds into `grads`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        target: usize,
        grads: &mut Gradients,
    ) -> Result<(), ClassifierError> {
        if cache.version != self.version {
            return Err(ClassifierError::StaleCache);
        }
        let classes = self.layer_dims[3];
        if target >= classes {
            return Err(ClassifierError::BadLabel {
                class: target,
                classes,
            });
        }
        // Softmax + cross-entropy: dL/dz = p − onehot.
        let mut delta: Vec<f64> = cache.probs.clone();
        delta[target] -= 1.0;

        for k in (0..3).rev() {
            let layer = &self.layers[k];
            let input: &[f64] = if k == 0 {
                &cache.input
            } else {
                &cache.post[k - 1]
            };
            let g = &mut grads.layers[k];
            for (gb, d) in g.biases.iter_mut().zip(&delta) {
                *gb += d;
            }
            for (i, &xi) in input.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (gw, d) in row.iter_mut().zip(&delta) {
                    *gw += xi * d;
                }
            }
            if k == 0 {
                break;
            }
            // Back through the affine map, the dropout mask and the activation.
            let h = k - 1;
            let mut prev = vec![0.0; layer.inputs];
            for (i, p) in prev.iter_mut().enumerate() {
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                *p = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
            }
            if let Some(mask) = &cache.masks[h] {
                prev.iter_mut().zip(mask).for_each(|(p, m)| *p *= m);
            }
            for (p, &z) in prev.iter_mut().zip(&cache.pre[h]) {
                *p *= self.hidden_activation.derivative(z);
            }
            delta = prev;
        }
        Ok(())
    }

    /// Applies one optimizer step and invalidates outstanding caches.
    pub fn apply_gradients(
        &mut self,
        adam: &mut AdamState,
        grads: &Gradients,
    ) -> Result<(), ClassifierError> {
        let mut params: Vec<&mut [f64]> = Vec::with_capacity(6);
        for l in self.layers.iter_mut() {
            params.push(&mut l.weights);
            params.push(&mut l.biases);
        }
        let g: Vec<&[f64]> = grads
            .layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect();
        adam.step(&mut params, &g)?;
        self.version = next_version();
        Ok(())
    }

    /// Parameter group sizes in the order used by [`apply_gradients`](Self::apply_gradients).
    pub fn parameter_groups(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.biases.len()])
            .collect()
    }
}

impl Classifier for DnnModel {
    fn num_features(&self) -> usize {
        self.layer_dims[0]
    }

    fn num_classes(&self) -> usize {
        self.layer_dims[3]
    }

    fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        Ok(self.run(features, None)?.probs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of hidden units dropped during training.
    pub dropout_rate: f64,
    pub seed: u64,
    pub activation: ActivationKind,
    pub hidden_units: [usize; 2],
    pub adam: AdamHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 8,
            dropout_rate: 0.2,
            seed: 42,
            activation: ActivationKind::Relu,
            hidden_units: DEFAULT_HIDDEN,
            adam: AdamHyper::default(),
        }
    }
}

/// Per-epoch metrics, measured in inference mode after the epoch's updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean cross-entropy over the training set.
    pub loss: f64,
    pub accuracy: f64,
    /// Mean over examples and classes of (p − onehot)².
    pub mse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_accuracy: Option<f64>,
}

impl std::fmt::Display for EpochReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "epoch {:>3}  loss {:.4}  accuracy {:.4}  mse {:.4}",
            self.epoch, self.loss, self.accuracy, self.mse
        )?;
        if let (Some(l), Some(a)) = (self.val_loss, self.val_accuracy) {
            write!(f, "  val_loss {l:.4}  val_accuracy {a:.4}")?;
        }
        Ok(())
    }
}

/// Loss, accuracy and MSE of `model` over `examples` in inference mode.
pub fn evaluate_dnn(
    model: &DnnModel,
    examples: &[LabeledExample],
) -> Result<(f64, f64, f64), ClassifierError> {
    if examples.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let classes = model.layer_dims[3] as f64;
    let (mut loss, mut correct, mut mse) = (0.0, 0usize, 0.0);
    for ex in examples {
        let p = model.predict_proba(ex.vector.as_slice())?;
        loss += cross_entropy(&p, ex.class_index);
        if rank(&p)[0].0 == ex.class_index {
            correct += 1;
        }
        mse += p
            .iter()
            .enumerate()
            .map(|(c, &pc)| {
                let y = if c == ex.class_index { 1.0 } else { 0.0 };
                (pc - y) * (pc - y)
            })
            .sum::<f64>()
            / classes;
    }
    let n = examples.len() as f64;
    Ok((loss / n, correct as f64 / n, mse / n))
}

pub fn init_dnn(
    num_features: usize,
    num_classes: usize,
    config: &TrainConfig,
) -> Result<DnnModel, ClassifierError> {
    DnnModel::new(
        num_features,
        config.hidden_units,
        num_classes,
        config.activation,
        config.dropout_rate,
        config.seed,
    )
}

pub fn train_dnn(
    train: &[LabeledExample],
    num_classes: usize,
    config: &TrainConfig,
    validation: Option<&[LabeledExample]>,
) -> Result<(DnnModel, Vec<EpochReport>), ClassifierError> {
    train_dnn_with(train, num_classes, config, validation, |_| {})
}

/// [`train_dnn`] with a callback invoked after every epoch.
pub fn train_dnn_with(
    train: &[LabeledExample],
    num_classes: usize,
    config: &TrainConfig,
    validation: Option<&[LabeledExample]>,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<(DnnModel, Vec<EpochReport>), ClassifierError> {
    let first = train.first().ok_or(ClassifierError::EmptyTrainingSet)?;
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(ClassifierError::BadConfig(
            "epochs and batch_size must be at least 1".into(),
        ));
    }
    for ex in train.iter().chain(validation.unwrap_or_default()) {
        check_dims(first.vector.len(), ex.vector.len())?;
        if ex.class_index >= num_classes {
            return Err(ClassifierError::BadLabel {
                class: ex.class_index,
                classes: num_classes,
            });
        }
    }
    let mut model = init_dnn(first.vector.len(), num_classes, config)?;
    let mut adam = AdamState::new(&model.parameter_groups(), config.adam);
    let mut grads = Gradients::zeros_like(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut reports = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads.reset();
            for &i in batch {
                let (_, cache) = model.forward_train(train[i].vector.as_slice(), &mut rng)?;
                model.backward_into(&cache, train[i].class_index, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            model.apply_gradients(&mut adam, &grads)?;
        }
        let (loss, accuracy, mse) = evaluate_dnn(&model, train)?;
        let (val_loss, val_accuracy) = match validation {
            Some(v) if !v.is_empty() => {
                let (l, a, _) = evaluate_dnn(&model, v)?;
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        let report = EpochReport {
            epoch,
            loss,
            accuracy,
            mse,
            val_loss,
            val_accuracy,
        };
        on_epoch(&report);
        reports.push(report);
    }
    Ok((model, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn ex(v: Vec<f64>, c: usize) -> LabeledExample {
        LabeledExample {
            vector: FeatureVector(v),
            class_index: c,
            source_pattern: String::new(),
        }
    }

    #[test]
    fn init_shapes_and_zero_biases() {
        let m = init_dnn(10, 3, &TrainConfig::default()).unwrap();
        let shapes: Vec<(usize, usize)> =
            m.layers().iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(shapes, vec![(10, 128), (128, 64), (64, 3)]);
        assert!(m
            .layers()
            .iter()
            .all(|l| l.biases.iter().all(|&b| b == 0.0)));
        assert!(m.is_consistent());
        assert_eq!(m, init_dnn(10, 3, &TrainConfig::default()).unwrap());
    }

    #[test]
    fn he_init_scale() {
        let m = DnnModel::new(400, [128, 64], 3, ActivationKind::Relu, 0.0, 3).unwrap();
        let w = &m.layers()[0].weights;
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        assert!((var - 2.0 / 400.0).abs() < 0.05 * 2.0 / 400.0, "{var}");
        let g = DnnModel::new(400, [128, 64], 3, ActivationKind::Tanh, 0.0, 3).unwrap();
        let limit = (6.0f64 / 528.0).sqrt();
        assert!(g.layers()[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn bad_dimensions() {
        let c = TrainConfig::default();
        assert!(matches!(
            init_dnn(0, 3, &c),
            Err(ClassifierError::BadDimensions(_))
        ));
        assert!(matches!(
            init_dnn(3, 0, &c),
            Err(ClassifierError::BadDimensions(_))
        ));
    }

    #[test]
    fn forward_is_distribution_and_deterministic() {
        let m = DnnModel::new(6, [8, 5], 4, ActivationKind::Relu, 0.2, 9).unwrap();
        let x = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let (p, _) = m.forward(&x).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(p, m.forward(&x).unwrap().0);
    }

    #[test]
    fn zero_dropout_training_equals_inference() {
        let m = DnnModel::new(6, [8, 5], 4, ActivationKind::Tanh, 0.0, 9).unwrap();
        let x = [0.0, 2.0, 0.0, 1.0, 0.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            m.forward(&x).unwrap().0,
            m.forward_train(&x, &mut rng).unwrap().0
        );
    }

    #[test]
    fn dropout_changes_training_pass() {
        let m = DnnModel::new(6, [32, 16], 4, ActivationKind::Relu, 0.5, 9).unwrap();
        let x = [1.0; 6];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, cache) = m.forward_train(&x, &mut rng).unwrap();
        let mask = cache.masks[0].as_ref().unwrap();
        assert!(mask.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(mask.contains(&0.0) && mask.contains(&2.0));
    }

    #[test]
    fn output_bias_gradient_is_p_minus_onehot() {
        let m = DnnModel::new(5, [4, 3], 3, ActivationKind::Sigmoid, 0.0, 2).unwrap();
        let (p, cache) = m.forward(&[1.0, 0.0, 1.0, 0.0, 0.5]).unwrap();
        let g = m.backward(&cache, 1).unwrap();
        for (c, (&gb, &pc)) in g.layers[2].biases.iter().zip(&p).enumerate() {
            let y = if c == 1 { 1.0 } else { 0.0 };
            assert!((gb - (pc - y)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradient_at_onehot_output() {
        // Force p ≈ onehot through a huge output bias.
        let mut m = DnnModel::new(3, [2, 2], 2, ActivationKind::Relu, 0.0, 2).unwrap();
        m.layers_mut()[2].biases = vec![800.0, 0.0];
        let (p, cache) = m.forward(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p[0], 1.0);
        let g = m.backward(&cache, 0).unwrap();
        assert!(g
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|&v| v == 0.0)));
    }

    #[test]
    fn stale_cache_rejected() {
        let mut m = DnnModel::new(3, [2, 2], 2, ActivationKind::Relu, 0.0, 2).unwrap();
        let (_, cache) = m.forward(&[1.0, 0.0, 0.0]).unwrap();
        m.layers_mut()[0].weights[0] += 1.0;
        assert_eq!(
            m.backward(&cache, 0).unwrap_err(),
            ClassifierError::StaleCache
        );
        let other = DnnModel::new(3, [2, 2], 2, ActivationKind::Relu, 0.0, 2).unwrap();
        assert_eq!(
            other.backward(&cache, 0).unwrap_err(),
            ClassifierError::StaleCache
        );
    }

    fn separable() -> Vec<LabeledExample> {
        // 3 classes × 4 examples over disjoint feature blocks.
        let mut out = Vec::new();
        for c in 0..3 {
            for k in 0..4 {
                let mut v = vec![0.0; 12];
                v[c * 4 + k] = 1.0;
                v[c * 4 + (k + 1) % 4] = 1.0;
                out.push(ex(v, c));
            }
        }
        out
    }

    #[test]
    fn separable_set_reaches_full_accuracy() {
        let cfg = TrainConfig::default();
        let (_, reports) = train_dnn(&separable(), 3, &cfg, None).unwrap();
        assert_eq!(reports.len(), 150);
        let first_perfect = reports
            .iter()
            .position(|r| r.accuracy == 1.0)
            .expect("reaches 100%");
        assert!(first_perfect < 149, "{first_perfect}");
        for r in &reports {
            assert!(
                r.loss >= 0.0 && (0.0..=1.0).contains(&r.accuracy) && (0.0..=2.0).contains(&r.mse)
            );
        }
        assert!(reports.last().unwrap().loss < reports[0].loss);
    }

    #[test]
    fn training_deterministic() {
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let (a, ra) = train_dnn(&separable(), 3, &cfg, Some(&separable()[..3])).unwrap();
        let (b, rb) = train_dnn(&separable(), 3, &cfg, Some(&separable()[..3])).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(ra[0].val_loss.is_some());
    }

    #[test]
    fn empty_training_set() {
        assert_eq!(
            train_dnn(&[], 3, &TrainConfig::default(), None).unwrap_err(),
            ClassifierError::EmptyTrainingSet
        );
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let m = DnnModel::new(7, [5, 4], 3, ActivationKind::Tanh, 0.2, 11).unwrap();
        let back: DnnModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let x = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(
            back.predict_proba(&x).unwrap(),
            m.predict_proba(&x).unwrap()
        );
    }
}
