//! Online linear classifiers trained by SGD: logistic regression (log-loss)
//! and a linear SVM (hinge loss).
//!
//! L2 shrinkage is applied lazily through a global scale factor so each SGD
//! step only touches the non-zero features of its sample, which keeps
//! training cost independent of the hashed dimension.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::rng::StreamRng;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Logreg,
    Svm,
}

impl LearnerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Logreg => "logreg",
            LearnerKind::Svm => "svm",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg" => Ok(LearnerKind::Logreg),
            "svm" => Ok(LearnerKind::Svm),
            other => Err(format!("unknown learner kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyper {
    pub lr: f64,
    pub l2: f64,
    pub epochs: u32,
    pub update_epochs: u32,
    pub update_lr: f64,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            lr: 0.1,
            l2: 1e-4,
            epochs: 5,
            update_epochs: 2,
            update_lr: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: u8,
    pub timestamp: i64,
    pub post_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
    pub margin: f64,
}

/// A trained linear model and its training/validation history.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: LearnerKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: Hyper,
    pub trained_window: u32,
    /// `(window, f-score on that window's held-out slice)`.
    pub val_history: Vec<(u32, f64)>,
}

impl LinearModel {
    pub fn zeros(kind: LearnerKind, dim: usize, hyper: Hyper) -> Self {
        Self {
            kind,
            weights: vec![0.0; dim],
            bias: 0.0,
            hyper,
            trained_window: 0,
            val_history: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &FeatureVector) -> f64 {
        x.as_sparse().dot_dense(&self.weights) + self.bias
    }

    /// Most recent validation f-score, if any window recorded one.
    pub fn validation_score(&self) -> Option<f64> {
        self.val_history.last().map(|&(_, f)| f)
    }

    pub fn record_validation(&mut self, window: u32, f1: f64) {
        debug_assert!(self.val_history.last().is_none_or(|&(w, _)| w <= window));
        self.val_history.push((window, f1));
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn predict(model: &LinearModel, x: &FeatureVector) -> Prediction {
    let margin = model.margin(x);
    let score = match model.kind {
        LearnerKind::Logreg => sigmoid(margin),
        LearnerKind::Svm => ((margin + 1.0) / 2.0).clamp(0.0, 1.0),
    };
    Prediction {
        label: u8::from(score >= 0.5),
        score,
        margin,
    }
}

/// Per-sample log-loss with L2 penalty `l2/2 * |w|^2` (bias unpenalized).
pub fn logistic_objective(weights: &[f64], bias: f64, x: &FeatureVector, label: u8, l2: f64) -> f64 {
    let m = x.as_sparse().dot_dense(weights) + bias;
    let y = label as f64;
    // log(1 + e^m) - y m, written to avoid overflow
    let softplus = if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    };
    softplus - y * m + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`logistic_objective`] as `(d/dw, d/db)`.
pub fn logistic_gradient(weights: &[f64], bias: f64, x: &FeatureVector, label: u8, l2: f64) -> (Vec<f64>, f64) {
    let g = data_gradient(LearnerKind::Logreg, x.as_sparse().dot_dense(weights) + bias, label);
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    for &(i, v) in x.as_sparse().entries() {
        grad[i as usize] += g * v;
    }
    (grad, g)
}

/// Derivative of the data loss with respect to the margin.
fn data_gradient(kind: LearnerKind, margin: f64, label: u8) -> f64 {
    match kind {
        LearnerKind::Logreg => sigmoid(margin) - label as f64,
        LearnerKind::Svm => {
            let y = if label == 1 { 1.0 } else { -1.0 };
            if y * margin < 1.0 {
                -y
            } else {
                0.0
            }
        }
    }
}

/// Weights stored as `scale * v` so the L2 decay is O(1) per step.
struct SgdState {
    v: Vec<f64>,
    scale: f64,
    bias: f64,
}

impl SgdState {
    fn from_model(model: &LinearModel) -> Self {
        Self {
            v: model.weights.clone(),
            scale: 1.0,
            bias: model.bias,
        }
    }

    fn step(&mut self, kind: LearnerKind, x: &FeatureVector, label: u8, lr: f64, l2: f64) {
        let sparse = x.as_sparse();
        let margin = self.scale * sparse.dot_dense(&self.v) + self.bias;
        let g = data_gradient(kind, margin, label);
        self.scale *= 1.0 - lr * l2;
        if g != 0.0 {
            let c = lr * g / self.scale;
            for &(i, w) in sparse.entries() {
                self.v[i as usize] -= c * w;
            }
            self.bias -= lr * g;
        }
        if self.scale < 1e-9 {
            self.materialize_in_place();
        }
    }

    fn materialize_in_place(&mut self) {
        let s = self.scale;
        self.v.iter_mut().for_each(|w| *w *= s);
        self.scale = 1.0;
    }

    fn finish(mut self) -> (Vec<f64>, f64) {
        if self.scale != 1.0 {
            self.materialize_in_place();
        }
        (self.v, self.bias)
    }
}

fn run_sgd(
    model: &LinearModel,
    samples: &[LabeledSample],
    epochs: u32,
    lr: f64,
    seed: u64,
) -> Result<(Vec<f64>, f64), LearnError> {
    if let Some(s) = samples.iter().find(|s| s.features.dim() != model.dim()) {
        return Err(LearnError::DimMismatch {
            expected: model.dim(),
            got: s.features.dim(),
        });
    }
    let mut state = SgdState::from_model(model);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = StreamRng::new(seed);
    for _ in 0..epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            let s = &samples[i];
            state.step(model.kind, &s.features, s.label, lr, model.hyper.l2);
        }
    }
    Ok(state.finish())
}

/// Trains a fresh model of `kind` on `samples` and tags it with `window`.
pub fn train(
    samples: &[LabeledSample],
    kind: LearnerKind,
    hyper: &Hyper,
    window: u32,
) -> Result<LinearModel, LearnError> {
    let positives = samples.iter().filter(|s| s.label == 1).count();
    if positives == 0 || positives == samples.len() {
        return Err(LearnError::SingleClass);
    }
    let mut model = LinearModel::zeros(kind, samples[0].features.dim(), *hyper);
    let seed = hyper.seed ^ ((window as u64) << 32) ^ kind as u64;
    let (weights, bias) = run_sgd(&model, samples, hyper.epochs, hyper.lr, seed)?;
    model.weights = weights;
    model.bias = bias;
    model.trained_window = window;
    Ok(model)
}

/// Returns an updated copy of `model`; the input is left untouched.
pub fn update(model: &LinearModel, samples: &[LabeledSample], window: u32) -> Result<LinearModel, LearnError> {
    let hyper = model.hyper;
    let seed = hyper.seed ^ ((window as u64) << 32) ^ 0x5eed_0000 ^ model.kind as u64;
    let (weights, bias) = run_sgd(model, samples, hyper.update_epochs, hyper.update_lr, seed)?;
    Ok(LinearModel {
        weights,
        bias,
        trained_window: window.max(model.trained_window),
        ..model.clone()
    })
}

/// Splits time-ordered samples into a training head and a held-out tail
/// holding `holdout` of the data (rounded down).
pub fn holdout_split(samples: &[LabeledSample], holdout: f64) -> (&[LabeledSample], &[LabeledSample]) {
    let n_hold = (samples.len() as f64 * holdout).floor() as usize;
    samples.split_at(samples.len() - n_hold)
}

/// Binary classification counts and derived scores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let ratio = |a: u64, b: u64| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        let precision = ratio(tp, fp);
        let recall = ratio(tp, fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
        }
    }

    /// Scores `(predicted, actual)` label pairs.
    pub fn from_pairs<I: IntoIterator<Item = (u8, u8)>>(pairs: I) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (pred, actual) in pairs {
            match (pred, actual) {
                (1, 1) => tp += 1,
                (1, _) => fp += 1,
                (_, 1) => fn_ += 1,
                _ => tn += 1,
            }
        }
        Self::from_counts(tp, fp, fn_, tn)
    }
}

pub fn evaluate(model: &LinearModel, samples: &[LabeledSample]) -> Metrics {
    Metrics::from_pairs(samples.iter().map(|s| (predict(model, &s.features).label, s.label)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{vectorize, SparseVector};
    use proptest::prelude::*;

    fn one_hot(dim: usize, i: u32) -> FeatureVector {
        FeatureVector::normalized(SparseVector::from_pairs(dim, vec![(i, 1.0)]))
    }

    fn sample(features: FeatureVector, label: u8, n: usize) -> LabeledSample {
        LabeledSample {
            features,
            label,
            timestamp: n as i64,
            post_id: format!("s{n}"),
        }
    }

    fn toy_corpus() -> Vec<LabeledSample> {
        let pos = [
            "mud slope collapse",
            "road buried mud",
            "slope collapse village",
            "rocks block road",
        ];
        let neg = [
            "vote count senator",
            "election win senator",
            "vote margin party",
            "party wins seats",
        ];
        let mut out = Vec::new();
        for (i, (p, n)) in pos.iter().zip(neg.iter()).enumerate() {
            out.push(sample(vectorize(p, 512), 1, 2 * i));
            out.push(sample(vectorize(n, 512), 0, 2 * i + 1));
        }
        out
    }

    #[test]
    fn separable_pair_logreg() {
        let data = vec![sample(one_hot(16, 1), 1, 0), sample(one_hot(16, 2), 0, 1)];
        let m = train(&data, LearnerKind::Logreg, &Hyper::default(), 0).unwrap();
        let hi = predict(&m, &one_hot(16, 1)).score;
        let lo = predict(&m, &one_hot(16, 2)).score;
        assert!(hi > 0.5 && 0.5 > lo, "{hi} {lo}");
    }

    #[test]
    fn duplicated_data_keeps_sign_pattern() {
        let data = toy_corpus();
        let doubled: Vec<LabeledSample> = data.iter().chain(data.iter()).cloned().collect();
        for kind in [LearnerKind::Logreg, LearnerKind::Svm] {
            let a = train(&data, kind, &Hyper::default(), 0).unwrap();
            let b = train(&doubled, kind, &Hyper::default(), 0).unwrap();
            for s in &data {
                assert_eq!(predict(&a, &s.features).label, predict(&b, &s.features).label);
                assert_eq!(predict(&a, &s.features).label, s.label);
            }
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = toy_corpus();
        let a = train(&data, LearnerKind::Svm, &Hyper::default(), 3).unwrap();
        let b = train(&data, LearnerKind::Svm, &Hyper::default(), 3).unwrap();
        assert_eq!(a, b);
        let other = Hyper {
            seed: 99,
            ..Hyper::default()
        };
        let c = train(&data, LearnerKind::Svm, &other, 3).unwrap();
        assert_eq!(c.trained_window, 3);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = vec![sample(one_hot(8, 1), 1, 0), sample(one_hot(8, 2), 1, 1)];
        assert_eq!(
            train(&data, LearnerKind::Logreg, &Hyper::default(), 0),
            Err(LearnError::SingleClass)
        );
        assert_eq!(
            train(&[], LearnerKind::Logreg, &Hyper::default(), 0),
            Err(LearnError::SingleClass)
        );
    }

    #[test]
    fn update_copies() {
        let data = toy_corpus();
        let m = train(&data, LearnerKind::Logreg, &Hyper::default(), 0).unwrap();
        let before = m.clone();
        let same = update(&m, &[], 4).unwrap();
        assert_eq!(same.weights, m.weights);
        assert_eq!(same.bias, m.bias);
        assert_eq!(same.trained_window, 4);

        let moved = update(&m, &data, 1).unwrap();
        assert_eq!(m, before);
        assert_ne!(moved.weights, m.weights);
        let f_before = evaluate(&m, &data).f1;
        let f_after = evaluate(&moved, &data).f1;
        assert!(f_after >= f_before - 0.05);
    }

    #[test]
    fn update_rejects_wrong_dim() {
        let m = LinearModel::zeros(LearnerKind::Svm, 8, Hyper::default());
        let bad = vec![sample(one_hot(16, 1), 1, 0)];
        assert!(matches!(update(&m, &bad, 1), Err(LearnError::DimMismatch { .. })));
    }

    #[test]
    fn prediction_rules() {
        let zero = LinearModel::zeros(LearnerKind::Logreg, 8, Hyper::default());
        let p = predict(&zero, &one_hot(8, 3));
        assert_eq!((p.score, p.label, p.margin), (0.5, 1, 0.0));
        let zero_svm = LinearModel::zeros(LearnerKind::Svm, 8, Hyper::default());
        assert_eq!(predict(&zero_svm, &one_hot(8, 3)).score, 0.5);

        let mut m = LinearModel::zeros(LearnerKind::Svm, 8, Hyper::default());
        m.weights[3] = 5.0;
        m.bias = -1.0;
        assert_eq!(predict(&m, &one_hot(8, 3)).score, 1.0);
        let mut neg = m.clone();
        neg.weights.iter_mut().for_each(|w| *w = -*w);
        neg.bias = -neg.bias;
        let x = one_hot(8, 3);
        assert_eq!(predict(&neg, &x).margin, -predict(&m, &x).margin);
        assert_eq!(predict(&neg, &x).score, 0.0);
    }

    #[test]
    fn metric_arithmetic() {
        assert_eq!(Metrics::from_pairs([(1, 1), (0, 0)]).f1, 1.0);
        assert_eq!(Metrics::from_pairs([(0, 1), (1, 0)]).f1, 0.0);
        let m = Metrics::from_counts(1, 1, 1, 0);
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        assert_eq!(Metrics::from_counts(0, 0, 0, 5).f1, 0.0);
    }

    #[test]
    fn holdout_takes_the_tail() {
        let data = toy_corpus();
        let (head, tail) = holdout_split(&data, 0.2);
        assert_eq!((head.len(), tail.len()), (7, 1));
        assert_eq!(tail[0].post_id, data[7].post_id);
    }

    #[test]
    fn sgd_step_follows_gradient() {
        // One SGD step on dense-sized data equals w - lr * grad.
        let x = vectorize("aa bb cc aa", 32);
        let mut m = LinearModel::zeros(
            LearnerKind::Logreg,
            32,
            Hyper {
                l2: 0.1,
                ..Hyper::default()
            },
        );
        m.weights
            .iter_mut()
            .enumerate()
            .for_each(|(i, w)| *w = (i as f64 - 16.0) / 40.0);
        m.bias = 0.3;
        let (grad, gb) = logistic_gradient(&m.weights, m.bias, &x, 1, 0.1);
        let mut st = SgdState::from_model(&m);
        st.step(LearnerKind::Logreg, &x, 1, 0.5, 0.1);
        let (w, b) = st.finish();
        for i in 0..32 {
            assert!((w[i] - (m.weights[i] - 0.5 * grad[i])).abs() < 1e-12);
        }
        assert!((b - (m.bias - 0.5 * gb)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sigmoid_is_bounded_and_symmetric(z in -800.0f64..800.0) {
            let s = sigmoid(z);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s + sigmoid(-z) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn f1_formula_holds(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let m = Metrics::from_counts(tp, fp, fn_, tn);
            if m.precision + m.recall > 0.0 {
                let f = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - f).abs() < 1e-12);
            } else {
                prop_assert_eq!(m.f1, 0.0);
            }
            prop_assert!((0.0..=1.0).contains(&m.f1));
        }
    }
}
