//! Two-component PCA of real data, with synthetic rows projected onto the
//! same axes for side-by-side plotting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

const MAX_ITERATIONS: usize = 100_000;
const TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Column means of the real data.
    pub mean: Vec<f64>,
    /// Unit principal directions, largest variance first.
    pub components: [Vec<f64>; 2],
    /// Variances along the components (covariance eigenvalues).
    pub eigenvalues: [f64; 2],
    /// Eigenvalues over the total variance.
    pub explained_variance: [f64; 2],
    pub real: Tensor2D,
    pub synthetic: Tensor2D,
}

/// Sample covariance (`n - 1` denominator) and column means.
pub fn covariance(x: &Tensor2D) -> Result<(Tensor2D, Vec<f64>)> {
    if x.rows() < 2 {
        return Err(Error::validation("covariance needs at least 2 rows"));
    }
    let mean = x.column_means();
    let mut centred = x.clone();
    for r in 0..centred.rows() {
        for (v, m) in centred.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = centred.matmul_tn(&centred)?;
    let scale = 1.0 / (x.rows() - 1) as f64;
    cov.values_mut().iter_mut().for_each(|v| *v *= scale);
    Ok((cov, mean))
}

fn mat_vec(a: &Tensor2D, v: &[f64]) -> Vec<f64> {
    a.iter_rows().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Leading eigenpair of a symmetric positive semi-definite matrix by power
/// iteration. The vector's largest-magnitude entry is made positive.
fn leading_eigenpair(a: &Tensor2D) -> (f64, Vec<f64>) {
    let n = a.rows();
    // A fixed, generic start vector: unlikely to be orthogonal to the
    // leading eigenvector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).sqrt() / 10.0).collect();
    let len = norm(&v);
    v.iter_mut().for_each(|x| *x /= len);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = mat_vec(a, &v);
        let len = norm(&w);
        if len == 0.0 {
            return (0.0, v);
        }
        let next: Vec<f64> = w.iter().map(|x| x / len).collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        lambda = v.iter().zip(mat_vec(a, &v)).map(|(x, y)| x * y).sum();
        if delta < TOLERANCE {
            break;
        }
    }
    let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}

/// Top-`k` eigenpairs of a symmetric PSD matrix by power iteration with
/// deflation.
pub fn top_eigenpairs(a: &Tensor2D, k: usize) -> Vec<(f64, Vec<f64>)> {
    let mut rest = a.clone();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(a.rows()) {
        let (lambda, v) = leading_eigenpair(&rest);
        for i in 0..rest.rows() {
            for j in 0..rest.cols() {
                rest.set(i, j, rest.get(i, j) - lambda * v[i] * v[j]);
            }
        }
        out.push((lambda, v));
    }
    out
}

fn project(x: &Tensor2D, mean: &[f64], axes: &[Vec<f64>; 2]) -> Tensor2D {
    let mut out = Tensor2D::zeros(x.rows(), 2);
    for (r, row) in x.iter_rows().enumerate() {
        for (c, axis) in axes.iter().enumerate() {
            out.set(r, c, row.iter().zip(mean).zip(axis).map(|((v, m), a)| (v - m) * a).sum());
        }
    }
    out
}

/// Centres on the real data, finds the two leading principal directions of
/// its covariance and projects both sets onto them.
pub fn pca_project(real: &Tensor2D, synthetic: &Tensor2D) -> Result<PcaProjection> {
    if real.cols() < 2 {
        return Err(Error::validation("PCA needs at least 2 features"));
    }
    if synthetic.rows() > 0 && synthetic.cols() != real.cols() {
        return Err(Error::shape("synthetic features", real.cols(), synthetic.cols()));
    }
    let (cov, mean) = covariance(real)?;
    let total: f64 = (0..cov.rows()).map(|i| cov.get(i, i)).sum();
    if total <= 0.0 {
        return Err(Error::validation("real data has zero variance"));
    }
    let mut pairs = top_eigenpairs(&cov, 2).into_iter();
    let (l1, v1) = pairs.next().expect("two features");
    let (l2, v2) = pairs.next().expect("two features");
    let components = [v1, v2];
    let synthetic = if synthetic.rows() == 0 {
        Tensor2D::zeros(0, 2)
    } else {
        project(synthetic, &mean, &components)
    };
    Ok(PcaProjection {
        real: project(real, &mean, &components),
        synthetic,
        explained_variance: [l1 / total, l2.max(0.0) / total],
        eigenvalues: [l1, l2],
        mean,
        components,
    })
}

impl PcaProjection {
    /// `set,x,y` rows, real first.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["set", "x", "y"])?;
        for (set, points) in [("real", &self.real), ("synthetic", &self.synthetic)] {
            for row in points.iter_rows() {
                w.write_record([set.to_string(), row[0].to_string(), row[1].to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}
