//! Gaussian summaries of feature vectors and the Fréchet distance between them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    /// Row-major `d × d`.
    pub covariance: Vec<f64>,
    pub sample_count: usize,
    /// Set when fewer than two samples were available and the covariance is ridge-only.
    pub degenerate: bool,
}

impl GaussianSummary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.covariance)
    }
}

/// Sample mean and unbiased covariance plus `ridge · I`.
pub fn gaussian_summary(vectors: &[Vec<f64>], ridge: f64) -> Result<GaussianSummary> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InsufficientData("no vectors to summarize".into()))?;
    let d = first.len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::Validation("feature vectors differ in dimension".into()));
    }
    let n = vectors.len();
    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; d * d];
    if n >= 2 {
        for v in vectors {
            for i in 0..d {
                let di = v[i] - mean[i];
                if di == 0.0 {
                    continue;
                }
                for j in 0..d {
                    cov[i * d + j] += di * (v[j] - mean[j]);
                }
            }
        }
        cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);
    }
    for i in 0..d {
        cov[i * d + i] += ridge;
    }
    Ok(GaussianSummary {
        mean,
        covariance: cov,
        sample_count: n,
        degenerate: n < 2,
    })
}

/// `‖μ_a − μ_b‖² + Tr(Σ_a + Σ_b − 2 (Σ_a Σ_b)^{1/2})`.
///
/// The trace of the square root is taken as `Σ √λ_i` of the symmetric matrix
/// `Σ_a^{1/2} Σ_b Σ_a^{1/2}`; negative eigenvalues from round-off clamp to 0.
pub fn frechet_distance(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    let d = a.dim();
    if b.dim() != d || a.covariance.len() != d * d || b.covariance.len() != d * d {
        return Err(Error::Validation(format!(
            "Gaussian summaries have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let finite = |g: &GaussianSummary| g.mean.iter().chain(&g.covariance).all(|v| v.is_finite());
    if !finite(a) || !finite(b) {
        return Err(Error::Numerical("non-finite Gaussian summary".into()));
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y).powi(2)).sum();
    let (sa, sb) = (a.cov_matrix(), b.cov_matrix());
    let cross = trace_sqrt_product(&sa, &sb);
    let value = mean_term + sa.trace() + sb.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `Tr((A B)^{1/2})` for symmetric PSD `A`, `B`.
pub(crate) fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let ra = psd_sqrt(a);
    let inner = symmetrize(&(&ra * b * &ra));
    SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum()
}

/// Gaussian whose covariance is `(1/n) Σ_j (v_j − c)(v_j − c)ᵀ · scale + ridge · I`,
/// kept in factored form. Used when the dimension far exceeds the sample count.
#[derive(Clone, Debug)]
pub(crate) struct LowRankGaussian {
    pub mean: DVector<f64>,
    /// `d × n` factor with `Σ = F Fᵀ + ridge · I`.
    pub factor: DMatrix<f64>,
    pub ridge: f64,
}

impl LowRankGaussian {
    pub fn trace(&self) -> f64 {
        self.factor.iter().map(|v| v * v).sum::<f64>() + self.ridge * self.mean.len() as f64
    }

    #[cfg(test)]
    pub fn to_summary(&self, sample_count: usize) -> GaussianSummary {
        let d = self.mean.len();
        let mut cov = &self.factor * self.factor.transpose();
        for i in 0..d {
            cov[(i, i)] += self.ridge;
        }
        GaussianSummary {
            mean: self.mean.iter().copied().collect(),
            covariance: cov.transpose().iter().copied().collect(),
            sample_count,
            degenerate: sample_count < 2,
        }
    }
}

/// Exact Fréchet distance for factored covariances.
///
/// With `Q` an orthonormal basis of the span of both factors, both covariances
/// act as `ridge · I` on the complement of `Q`, so
/// `Tr((Σ_a Σ_b)^{1/2}) = Tr((B_a B_b)^{1/2}) + (d − q)·√(r_a r_b)` with
/// `B = r I + Qᵀ F Fᵀ Q`.
pub(crate) fn frechet_distance_low_rank(a: &LowRankGaussian, b: &LowRankGaussian) -> Result<f64> {
    let d = a.mean.len();
    if b.mean.len() != d {
        return Err(Error::Validation("Gaussian summaries differ in dimension".into()));
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let stacked = DMatrix::from_columns(
        &a.factor
            .column_iter()
            .chain(b.factor.column_iter())
            .map(|c| c.into_owned())
            .collect::<Vec<_>>(),
    );
    let basis = orthonormal_basis(&stacked);
    let q = basis.ncols();
    let reduced = |g: &LowRankGaussian| {
        let proj = basis.transpose() * &g.factor;
        let mut m = &proj * proj.transpose();
        for i in 0..q {
            m[(i, i)] += g.ridge;
        }
        m
    };
    let cross = if q > 0 {
        trace_sqrt_product(&reduced(a), &reduced(b))
    } else {
        0.0
    } + (d - q) as f64 * (a.ridge * b.ridge).max(0.0).sqrt();
    let value = mean_term + a.trace() + b.trace() - 2.0 * cross;
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite Fréchet distance".into()));
    }
    Ok(value.max(0.0))
}

/// Modified Gram–Schmidt with re-orthogonalization; drops numerically dependent columns.
fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in m.column_iter() {
        let mut v = col.into_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v.axpy(-proj, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-12 * scale.max(f64::MIN_POSITIVE) * (m.nrows() as f64).sqrt() {
            basis.push(v / norm);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}
