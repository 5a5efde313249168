use super::wasserstein::wasserstein;
use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// `exp(-W_1(A, B) / σ²)`.
pub fn w1_gaussian_kernel(a: &PersistenceDiagram, b: &PersistenceDiagram, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let (w1, _) = wasserstein(a, b, 1.0)?;
    Ok(kernel_from_distance(w1, sigma))
}

pub(crate) fn kernel_from_distance(w1: f64, sigma: f64) -> f64 {
    (-w1 / (sigma * sigma)).exp()
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("kernel bandwidth must be > 0, got {sigma}")))
    }
}
