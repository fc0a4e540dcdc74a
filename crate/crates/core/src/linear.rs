//! L2-regularized linear classifiers trained by full-batch gradient descent.
//!
//! Both objectives are smooth and convex. Each exposes a per-parameter
//! curvature bound `D` with `D >= Hessian` everywhere, so the step
//! `params -= grad / D` can never increase the loss (in exact arithmetic).
//! The optimizer additionally rejects any step whose computed loss went up,
//! halving the scale and retrying, so the recorded loss history is
//! non-increasing even under rounding.
//!
//! Biases are not regularized: as the penalty grows the weights go to zero
//! and the predictions go to the class priors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::scalar::{log_sum_exp, sigmoid, softmax, softplus, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 strength.
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stop once the loss decreases by less than this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-3,
            max_iterations: 500,
            tolerance: 1e-6,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Training(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Provenance stored alongside a trained model. Holds no wall-clock time so
/// that retraining on the same data reproduces the same file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub lambda: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub iterations: usize,
    pub examples: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

impl TrainingMetadata {
    pub fn new<T: Scalar>(config: &TrainConfig, trace: &Trace<T>, examples: usize) -> Self {
        TrainingMetadata {
            lambda: config.lambda,
            seed: config.seed,
            max_iterations: config.max_iterations,
            tolerance: config.tolerance,
            iterations: trace.iterations,
            examples,
            initial_loss: trace.losses.first().map_or(f64::NAN, |l| l.to_f64_lossy()),
            final_loss: trace.losses.last().map_or(f64::NAN, |l| l.to_f64_lossy()),
        }
    }
}

pub trait Objective<T: Scalar> {
    fn num_params(&self) -> usize;

    fn loss(&self, params: &[T]) -> T;

    fn loss_and_gradient(&self, params: &[T]) -> (T, Vec<T>);

    /// Diagonal upper bound on the Hessian.
    fn curvature_bound(&self) -> Vec<T>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    /// Loss before the first step followed by the loss after each accepted step.
    pub losses: Vec<T>,
    pub iterations: usize,
}

/// Minimizes `objective` from `start`.
pub fn minimize<T: Scalar, O: Objective<T>>(
    objective: &O,
    start: Vec<T>,
    config: &TrainConfig,
) -> Result<(Vec<T>, Trace<T>)> {
    let bound = objective.curvature_bound();
    let tol = T::lit(config.tolerance);
    let mut params = start;
    let (mut loss, mut grad) = objective.loss_and_gradient(&params);
    if !loss.is_finite() {
        return Err(Error::Training("initial loss is not finite".into()));
    }
    let mut losses = vec![loss];
    let mut iterations = 0;
    let half = T::lit(0.5);

    while iterations < config.max_iterations {
        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<T> = params
                .iter()
                .zip(&grad)
                .zip(&bound)
                .map(|((&p, &g), &d)| p - scale * g / d)
                .collect();
            let (trial_loss, trial_grad) = objective.loss_and_gradient(&trial);
            if !trial_loss.is_finite() {
                return Err(Error::Training(format!(
                    "loss became non-finite at iteration {}",
                    iterations + 1
                )));
            }
            if trial_loss <= loss {
                accepted = Some((trial, trial_loss, trial_grad));
                break;
            }
            scale *= half;
        }
        let Some((next, next_loss, next_grad)) = accepted else {
            break;
        };
        iterations += 1;
        let delta = loss - next_loss;
        params = next;
        loss = next_loss;
        grad = next_grad;
        losses.push(loss);
        if delta < tol {
            break;
        }
    }
    Ok((params, Trace { losses, iterations }))
}

fn mean_augmented_norm<T: Scalar>(features: &[SparseVector<T>]) -> T {
    let n = T::from_count(features.len().max(1));
    features
        .iter()
        .map(|x| x.norm_squared() + T::one())
        .sum::<T>()
        / n
}

fn check_dims<T: Scalar>(features: &[SparseVector<T>]) -> Result<usize> {
    let dim = features
        .first()
        .map(|x| x.dim())
        .ok_or_else(|| Error::Training("no training examples".into()))?;
    for x in features {
        if x.dim() != dim {
            return Err(Error::Dimension { expected: dim, actual: x.dim() });
        }
    }
    Ok(dim)
}

/// Mean binary log-loss plus `lambda * |w|^2`. Parameters are `[w..., b]`.
pub struct BinaryLogLoss<'a, T> {
    pub features: &'a [SparseVector<T>],
    pub labels: &'a [bool],
    pub lambda: T,
}

impl<T: Scalar> BinaryLogLoss<'_, T> {
    fn dim(&self) -> usize {
        self.features.first().map_or(0, |x| x.dim())
    }

    fn penalty(&self, w: &[T]) -> T {
        self.lambda * w.iter().map(|&v| v * v).sum::<T>()
    }
}

impl<T: Scalar> Objective<T> for BinaryLogLoss<'_, T> {
    fn num_params(&self) -> usize {
        self.dim() + 1
    }

    fn loss(&self, params: &[T]) -> T {
        let (w, b) = params.split_at(self.dim());
        let n = T::from_count(self.features.len());
        let data: T = self
            .features
            .iter()
            .zip(self.labels)
            .map(|(x, &y)| {
                let z = x.dot_dense(w) + b[0];
                if y { softplus(-z) } else { softplus(z) }
            })
            .sum();
        data / n + self.penalty(w)
    }

    fn loss_and_gradient(&self, params: &[T]) -> (T, Vec<T>) {
        let d = self.dim();
        let (w, b) = params.split_at(d);
        let n = T::from_count(self.features.len());
        let mut grad = vec![T::zero(); d + 1];
        let mut data = T::zero();
        for (x, &y) in self.features.iter().zip(self.labels) {
            let z = x.dot_dense(w) + b[0];
            data += if y { softplus(-z) } else { softplus(z) };
            let r = sigmoid(z) - if y { T::one() } else { T::zero() };
            for &(i, v) in x.entries() {
                grad[i] += r * v;
            }
            grad[d] += r;
        }
        let two_lambda = T::lit(2.0) * self.lambda;
        for (g, &wi) in grad[..d].iter_mut().zip(w) {
            *g = *g / n + two_lambda * wi;
        }
        grad[d] /= n;
        (data / n + self.penalty(w), grad)
    }

    fn curvature_bound(&self) -> Vec<T> {
        let data = T::lit(0.25) * mean_augmented_norm(self.features);
        let mut bound = vec![data + T::lit(2.0) * self.lambda; self.dim()];
        bound.push(data);
        bound
    }
}

/// Mean multinomial cross-entropy plus `lambda * |W|^2`.
/// Parameters are the `classes x dim` weights row by row, then the biases.
pub struct SoftmaxLoss<'a, T> {
    pub features: &'a [SparseVector<T>],
    pub labels: &'a [usize],
    pub classes: usize,
    pub lambda: T,
}

impl<T: Scalar> SoftmaxLoss<'_, T> {
    fn dim(&self) -> usize {
        self.features.first().map_or(0, |x| x.dim())
    }

    fn scores(&self, params: &[T], x: &SparseVector<T>) -> Vec<T> {
        let d = self.dim();
        let biases = &params[self.classes * d..];
        (0..self.classes)
            .map(|k| x.dot_dense(&params[k * d..(k + 1) * d]) + biases[k])
            .collect()
    }

    fn penalty(&self, params: &[T]) -> T {
        self.lambda
            * params[..self.classes * self.dim()]
                .iter()
                .map(|&v| v * v)
                .sum::<T>()
    }
}

impl<T: Scalar> Objective<T> for SoftmaxLoss<'_, T> {
    fn num_params(&self) -> usize {
        self.classes * (self.dim() + 1)
    }

    fn loss(&self, params: &[T]) -> T {
        let n = T::from_count(self.features.len());
        let data: T = self
            .features
            .iter()
            .zip(self.labels)
            .map(|(x, &y)| {
                let s = self.scores(params, x);
                log_sum_exp(&s) - s[y]
            })
            .sum();
        data / n + self.penalty(params)
    }

    fn loss_and_gradient(&self, params: &[T]) -> (T, Vec<T>) {
        let d = self.dim();
        let k_total = self.classes;
        let n = T::from_count(self.features.len());
        let mut grad = vec![T::zero(); params.len()];
        let mut data = T::zero();
        for (x, &y) in self.features.iter().zip(self.labels) {
            let s = self.scores(params, x);
            data += log_sum_exp(&s) - s[y];
            let p = softmax(&s);
            for k in 0..k_total {
                let r = p[k] - if k == y { T::one() } else { T::zero() };
                for &(i, v) in x.entries() {
                    grad[k * d + i] += r * v;
                }
                grad[k_total * d + k] += r;
            }
        }
        let two_lambda = T::lit(2.0) * self.lambda;
        for (g, &w) in grad[..k_total * d].iter_mut().zip(params) {
            *g = *g / n + two_lambda * w;
        }
        for g in &mut grad[k_total * d..] {
            *g /= n;
        }
        (data / n + self.penalty(params), grad)
    }

    fn curvature_bound(&self) -> Vec<T> {
        let data = T::lit(0.5) * mean_augmented_norm(self.features);
        let d = self.dim();
        let mut bound = vec![data + T::lit(2.0) * self.lambda; self.classes * d];
        bound.extend(std::iter::repeat_n(data, self.classes));
        bound
    }
}

/// Two-class logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BinaryLogistic<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> BinaryLogistic<T> {
    pub fn zeros(dim: usize) -> Self {
        BinaryLogistic { weights: vec![T::zero(); dim], bias: T::zero() }
    }

    pub fn fit(
        features: &[SparseVector<T>],
        labels: &[bool],
        config: &TrainConfig,
    ) -> Result<(Self, Trace<T>)> {
        config.validate()?;
        let dim = check_dims(features)?;
        if features.len() != labels.len() {
            return Err(Error::Training("features and labels differ in length".into()));
        }
        let positives = labels.iter().filter(|&&y| y).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::Training("both classes must be present".into()));
        }
        let objective = BinaryLogLoss { features, labels, lambda: T::lit(config.lambda) };
        let mut start = vec![T::zero(); dim + 1];
        start[dim] = (T::from_count(positives) / T::from_count(labels.len() - positives)).ln();
        let (params, trace) = minimize(&objective, start, config)?;
        let (w, b) = params.split_at(dim);
        Ok((BinaryLogistic { weights: w.to_vec(), bias: b[0] }, trace))
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &SparseVector<T>) -> Result<T> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), actual: x.dim() });
        }
        Ok(x.dot_dense(&self.weights) + self.bias)
    }

    pub fn probability(&self, x: &SparseVector<T>) -> Result<T> {
        self.decision(x).map(sigmoid)
    }
}

/// Multinomial logistic regression (maximum entropy) over `classes` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Multinomial<T> {
    /// One row per class.
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Multinomial<T> {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Multinomial {
            weights: vec![vec![T::zero(); dim]; classes],
            biases: vec![T::zero(); classes],
        }
    }

    pub fn fit(
        features: &[SparseVector<T>],
        labels: &[usize],
        classes: usize,
        config: &TrainConfig,
    ) -> Result<(Self, Trace<T>)> {
        config.validate()?;
        let dim = check_dims(features)?;
        if features.len() != labels.len() {
            return Err(Error::Training("features and labels differ in length".into()));
        }
        let mut counts = vec![0usize; classes];
        for &y in labels {
            if y >= classes {
                return Err(Error::Training(format!("label {y} out of range")));
            }
            counts[y] += 1;
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Training(format!("class {k} has no examples")));
        }
        let objective = SoftmaxLoss { features, labels, classes, lambda: T::lit(config.lambda) };
        let mut start = vec![T::zero(); classes * (dim + 1)];
        let n = T::from_count(labels.len());
        for (k, &c) in counts.iter().enumerate() {
            start[classes * dim + k] = (T::from_count(c) / n).ln();
        }
        let (params, trace) = minimize(&objective, start, config)?;
        let weights = (0..classes)
            .map(|k| params[k * dim..(k + 1) * dim].to_vec())
            .collect();
        Ok((Multinomial { weights, biases: params[classes * dim..].to_vec() }, trace))
    }

    pub fn classes(&self) -> usize {
        self.biases.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn scores(&self, x: &SparseVector<T>) -> Result<Vec<T>> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), actual: x.dim() });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| x.dot_dense(w) + b)
            .collect())
    }

    pub fn probabilities(&self, x: &SparseVector<T>) -> Result<Vec<T>> {
        self.scores(x).map(|s| softmax(&s))
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SparseVector<f64> {
        SparseVector::from_dense(v)
    }

    #[test]
    fn separable_pair_is_learned() {
        let xs = vec![sv(&[1.0, 0.0]), sv(&[0.0, 1.0])];
        let ys = vec![true, false];
        let (model, trace) = BinaryLogistic::fit(&xs, &ys, &TrainConfig::default()).unwrap();
        assert!(model.probability(&xs[0]).unwrap() > 0.5);
        assert!(model.probability(&xs[1]).unwrap() < 0.5);
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![sv(&[1.0]), sv(&[2.0])];
        assert!(BinaryLogistic::fit(&xs, &[true, true], &TrainConfig::default()).is_err());
        assert!(Multinomial::fit(&xs, &[0, 1], 3, &TrainConfig::default()).is_err());
    }

    #[test]
    fn heavy_penalty_gives_priors() {
        let xs = vec![sv(&[1.0, 0.0]), sv(&[0.0, 1.0]), sv(&[1.0, 1.0]), sv(&[0.5, 0.0])];
        let ys = vec![true, false, true, true];
        let cfg = TrainConfig { lambda: 1e9, ..TrainConfig::default() };
        let (model, _) = BinaryLogistic::fit(&xs, &ys, &cfg).unwrap();
        for x in &xs {
            assert!((model.probability(x).unwrap() - 0.75).abs() < 1e-6);
        }
        let (m, _) = Multinomial::fit(&xs, &[0, 1, 2, 2], 3, &cfg).unwrap();
        let p = m.probabilities(&xs[0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-6 && (p[2] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[1.0f64, 1.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0f64, 2.0, 2.0]), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let m = BinaryLogistic::<f64>::zeros(3);
        assert!(matches!(m.decision(&sv(&[1.0])), Err(Error::Dimension { expected: 3, actual: 1 })));
    }

    #[test]
    fn f32_instantiation_trains() {
        let xs = vec![
            SparseVector::from_dense(&[1.0f32, 0.0]),
            SparseVector::from_dense(&[0.0f32, 1.0]),
            SparseVector::from_dense(&[1.0f32, 1.0]),
        ];
        let (m, trace) = Multinomial::fit(&xs, &[0, 1, 2], 3, &TrainConfig { lambda: 0.0, ..Default::default() }).unwrap();
        for (i, x) in xs.iter().enumerate() {
            assert_eq!(argmax(&m.scores(x).unwrap()), i);
        }
        assert!(trace.losses.last().unwrap() < &trace.losses[0]);
    }
}
