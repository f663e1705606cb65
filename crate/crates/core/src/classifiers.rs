//! Downstream classifiers trained on oversampled data.
//!
//! Every classifier predicts `MINORITY` only on a strict win: kNN needs a
//! strict majority of minority votes, logistic regression `p > 0.5`, DoC a
//! strictly larger minority output. Ties fall to the majority class.

use serde::{Deserialize, Serialize};

use crate::convgen::DocClassifier;
use crate::data::{MAJORITY, MINORITY};
use crate::error::{Error, Result};
use crate::neighborhood::squared_distance;
use crate::nn::sigmoid;
use crate::tensor::Tensor2D;

/// What to train; `doc` and `external` are produced by the benchmark
/// harness rather than by [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Logreg(#[serde(default)] LogRegConfig),
    Doc,
    /// Predictions computed elsewhere, one CSV per classifier.
    External { path: String },
}

fn default_k() -> usize {
    5
}

impl ClassifierSpec {
    pub fn knn() -> Self {
        Self::Knn { k: default_k() }
    }

    pub fn logreg() -> Self {
        Self::Logreg(LogRegConfig::default())
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Knn { k } if *k == default_k() => "knn".into(),
            Self::Knn { k } => format!("knn{k}"),
            Self::Logreg(_) => "lr".into(),
            Self::Doc => "doc".into(),
            Self::External { path } => {
                let stem = std::path::Path::new(path).file_stem().and_then(|s| s.to_str());
                format!("external:{}", stem.unwrap_or(path))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    /// Upper bound on steps. Raw features are poorly conditioned, so plain
    /// gradient descent needs tens of thousands of steps to settle.
    pub iterations: usize,
    /// Weight of `||w||² / 2`; the intercept is not penalised.
    pub l2: f64,
    /// Stop once one step improves the loss by less than this.
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 50_000,
            l2: 1e-4,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    features: Tensor2D,
    labels: Vec<u8>,
}

impl Knn {
    pub fn k(&self) -> usize {
        self.k
    }

    fn predict_row(&self, query: &[f64], scratch: &mut Vec<(f64, u8)>) -> u8 {
        scratch.clear();
        scratch.extend(
            self.features
                .iter_rows()
                .zip(&self.labels)
                .map(|(row, &l)| (squared_distance(row, query), l)),
        );
        let k = self.k.min(scratch.len());
        // Order by distance, majority before minority at equal distance,
        // so the chosen neighbour set does not depend on row order.
        let order = |a: &(f64, u8), b: &(f64, u8)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, order);
        }
        let minority_votes = scratch[..k].iter().filter(|(_, l)| *l == MINORITY).count();
        if 2 * minority_votes > k {
            MINORITY
        } else {
            MAJORITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularised loss before each step, then the final loss.
    pub loss_trace: Vec<f64>,
}

impl LogReg {
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.bias + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
    }
}

/// Mean cross-entropy plus `l2 / 2 * ||w||²`, and its gradient.
fn logreg_loss(features: &Tensor2D, y: &[f64], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (row, &t) in features.iter_rows().zip(y) {
        let z = b + row.iter().zip(w).map(|(x, wi)| x * wi).sum::<f64>();
        // log(1 + e^z) - t z, evaluated stably
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
        let residual = sigmoid(z) - t;
        grad_b += residual;
        for (g, x) in grad_w.iter_mut().zip(row) {
            *g += residual * x;
        }
    }
    let penalty: f64 = w.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0;
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2 * wi;
    }
    (loss / n + penalty, grad_w, grad_b / n)
}

pub fn fit_logreg(features: &Tensor2D, labels: &[u8], cfg: &LogRegConfig) -> Result<LogReg> {
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l == MINORITY)).collect();
    let mut w = vec![0.0; features.cols()];
    let mut b = 0.0;
    let mut trace = Vec::new();
    let (mut loss, mut gw, mut gb) = logreg_loss(features, &y, &w, b, cfg.l2);
    for _ in 0..cfg.iterations {
        trace.push(loss);
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= cfg.learning_rate * g;
        }
        b -= cfg.learning_rate * gb;
        let previous = loss;
        (loss, gw, gb) = logreg_loss(features, &y, &w, b, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Numeric {
                context: format!("logistic regression loss after {} steps", trace.len()),
            });
        }
        if previous - loss < cfg.tolerance {
            break;
        }
    }
    trace.push(loss);
    Ok(LogReg {
        weights: w,
        bias: b,
        loss_trace: trace,
    })
}

#[derive(Debug, Clone)]
pub enum Classifier {
    Knn(Knn),
    LogReg(LogReg),
    Doc(DocClassifier),
    /// Labels read from an external predictions file for one test fold.
    External(Vec<u8>),
}

fn check_training_set(features: &Tensor2D, labels: &[u8]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::shape("training labels", features.rows(), labels.len()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::validation("labels must be 0 or 1"));
    }
    if !labels.contains(&MINORITY) || !labels.contains(&MAJORITY) {
        return Err(Error::validation("classifier training needs both classes"));
    }
    Ok(())
}

/// Fits the classifiers that are trained directly on features.
pub fn fit(spec: &ClassifierSpec, features: &Tensor2D, labels: &[u8]) -> Result<Classifier> {
    check_training_set(features, labels)?;
    match spec {
        ClassifierSpec::Knn { k } => {
            if *k == 0 {
                return Err(Error::validation("knn needs k >= 1"));
            }
            Ok(Classifier::Knn(Knn {
                k: *k,
                features: features.clone(),
                labels: labels.to_vec(),
            }))
        }
        ClassifierSpec::Logreg(cfg) => Ok(Classifier::LogReg(fit_logreg(features, labels, cfg)?)),
        ClassifierSpec::Doc => Err(Error::Usage(
            "DoC is built from a trained ConvGeN model, not fitted on features".into(),
        )),
        ClassifierSpec::External { .. } => Err(Error::Usage(
            "external predictions are loaded, not fitted".into(),
        )),
    }
}

impl Classifier {
    pub fn predict(&self, features: &Tensor2D) -> Result<Vec<u8>> {
        let expect_width = |w: usize| {
            if features.cols() == w {
                Ok(())
            } else {
                Err(Error::shape("classifier input features", w, features.cols()))
            }
        };
        match self {
            Classifier::Knn(m) => {
                expect_width(m.features.cols())?;
                let mut scratch = Vec::with_capacity(m.labels.len());
                Ok(features.iter_rows().map(|q| m.predict_row(q, &mut scratch)).collect())
            }
            Classifier::LogReg(m) => {
                expect_width(m.weights.len())?;
                Ok(features
                    .iter_rows()
                    .map(|r| if m.probability(r) > 0.5 { MINORITY } else { MAJORITY })
                    .collect())
            }
            Classifier::Doc(m) => m.predict(features),
            Classifier::External(labels) => {
                if labels.len() != features.rows() {
                    return Err(Error::shape("external predictions", features.rows(), labels.len()));
                }
                Ok(labels.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn blobs(seed: u64, n: usize, gap: f64) -> (Tensor2D, Vec<u8>) {
        let mut rng = SplitMix64::new(seed);
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let minority = i % 4 == 0;
            let c = if minority { gap } else { -gap };
            values.extend([c + rng.normal(), c + rng.normal()]);
            labels.push(u8::from(minority));
        }
        (Tensor2D::new(n, 2, values).unwrap(), labels)
    }

    #[test]
    fn knn_one_point_per_class() {
        let x = Tensor2D::from_rows(&[[0.0, 0.0], [5.0, 5.0]]).unwrap();
        let m = fit(&ClassifierSpec::Knn { k: 1 }, &x, &[1, 0]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![1, 0]);
    }

    #[test]
    fn knn_even_tie_goes_to_majority() {
        let x = Tensor2D::from_rows(&[[0.0], [2.0]]).unwrap();
        let m = fit(&ClassifierSpec::Knn { k: 2 }, &x, &[1, 0]).unwrap();
        assert_eq!(m.predict(&Tensor2D::from_rows(&[[1.0]]).unwrap()).unwrap(), vec![0]);
    }

    #[test]
    fn knn_equidistant_boundary_prefers_majority() {
        // k = 1 and two training rows at the same distance.
        let x = Tensor2D::from_rows(&[[-1.0], [1.0]]).unwrap();
        for labels in [[1, 0], [0, 1]] {
            let m = fit(&ClassifierSpec::Knn { k: 1 }, &x, &labels).unwrap();
            assert_eq!(m.predict(&Tensor2D::from_rows(&[[0.0]]).unwrap()).unwrap(), vec![0]);
        }
    }

    #[test]
    fn knn_matches_exhaustive_oracle() {
        let (x, y) = blobs(1, 200, 0.7);
        let (q, _) = blobs(2, 100, 0.7);
        let m = fit(&ClassifierSpec::knn(), &x, &y).unwrap();
        let expected: Vec<u8> = q
            .iter_rows()
            .map(|query| {
                let mut all: Vec<(f64, u8)> = x
                    .iter_rows()
                    .zip(&y)
                    .map(|(r, &l)| (squared_distance(r, query), l))
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let votes = all[..5].iter().filter(|p| p.1 == 1).count();
                u8::from(votes >= 3)
            })
            .collect();
        assert_eq!(m.predict(&q).unwrap(), expected);
    }

    #[test]
    fn knn_permutation_invariant() {
        // integer grid makes exact distance ties common
        let mut rng = SplitMix64::new(3);
        let rows: Vec<[f64; 2]> = (0..80).map(|_| [rng.below(5) as f64, rng.below(5) as f64]).collect();
        let labels: Vec<u8> = (0..80).map(|i| u8::from(i % 3 == 0)).collect();
        let x = Tensor2D::from_rows(&rows).unwrap();
        let queries = Tensor2D::from_rows(&[[0.5, 0.5], [2.0, 2.0], [4.0, 1.0], [1.5, 3.0]]).unwrap();
        for k in [1, 2, 4, 5] {
            let base = fit(&ClassifierSpec::Knn { k }, &x, &labels).unwrap().predict(&queries).unwrap();
            let mut order: Vec<usize> = (0..80).collect();
            for seed in 0..5 {
                SplitMix64::new(seed).shuffle(&mut order);
                let px = x.select_rows(&order);
                let py: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
                let got = fit(&ClassifierSpec::Knn { k }, &px, &py).unwrap().predict(&queries).unwrap();
                assert_eq!(got, base, "k = {k}");
            }
        }
    }

    #[test]
    fn logreg_separable_blobs() {
        let (x, y) = blobs(4, 200, 4.0);
        let m = fit(&ClassifierSpec::logreg(), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn logreg_loss_trace_non_increasing() {
        let (x, y) = blobs(5, 300, 0.5);
        let m = fit_logreg(&x, &y, &LogRegConfig::default()).unwrap();
        assert!(m.loss_trace.len() > 2);
        assert!(m.loss_trace.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn logreg_zero_iterations_predicts_tie_class() {
        let (x, y) = blobs(6, 40, 1.0);
        let cfg = LogRegConfig {
            iterations: 0,
            ..LogRegConfig::default()
        };
        let m = fit(&ClassifierSpec::Logreg(cfg), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![MAJORITY; 40]);
    }

    #[test]
    fn logreg_gradient_matches_finite_differences() {
        let (x, y) = blobs(7, 30, 1.0);
        let t: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
        let w = [0.3, -0.2];
        let (_, gw, gb) = logreg_loss(&x, &t, &w, 0.1, 0.05);
        let eps = 1e-6;
        for i in 0..2 {
            let mut up = w;
            up[i] += eps;
            let mut down = w;
            down[i] -= eps;
            let numeric = (logreg_loss(&x, &t, &up, 0.1, 0.05).0 - logreg_loss(&x, &t, &down, 0.1, 0.05).0) / (2.0 * eps);
            assert!((numeric - gw[i]).abs() < 1e-7);
        }
        let numeric = (logreg_loss(&x, &t, &w, 0.1 + eps, 0.05).0 - logreg_loss(&x, &t, &w, 0.1 - eps, 0.05).0) / (2.0 * eps);
        assert!((numeric - gb).abs() < 1e-7);
    }

    #[test]
    fn fit_rejects_single_class_and_predict_checks_width() {
        let (x, _) = blobs(8, 10, 1.0);
        assert!(fit(&ClassifierSpec::knn(), &x, &[0; 10]).is_err());
        let m = fit(&ClassifierSpec::knn(), &x, &[1, 0, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert!(m.predict(&Tensor2D::zeros(2, 3)).is_err());
        assert!(fit(&ClassifierSpec::Doc, &x, &[1, 0, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn predictions_deterministic() {
        let (x, y) = blobs(9, 120, 0.8);
        for spec in [ClassifierSpec::knn(), ClassifierSpec::logreg()] {
            let a = fit(&spec, &x, &y).unwrap().predict(&x).unwrap();
            let b = fit(&spec, &x, &y).unwrap().predict(&x).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spec_serde() {
        let s: ClassifierSpec = serde_json::from_str(r#"{"kind": "knn"}"#).unwrap();
        assert_eq!(s, ClassifierSpec::knn());
        let s: ClassifierSpec = serde_json::from_str(r#"{"kind": "logreg", "iterations": 10}"#).unwrap();
        assert_eq!(
            s,
            ClassifierSpec::Logreg(LogRegConfig {
                iterations: 10,
                ..LogRegConfig::default()
            })
        );
        assert_eq!(s.label(), "lr");
    }
}
