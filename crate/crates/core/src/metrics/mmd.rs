use serde::{Deserialize, Serialize};

use crate::diagrams::{check_sigma, kernel_from_distance, wasserstein};
use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// Kernel bandwidth: explicit, or the median pairwise `W_1` over the pooled sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmdResult {
    pub value: f64,
    pub sigma: f64,
}

/// Biased MMD estimate with the `W_1`-Gaussian kernel.
pub fn mmd(ref_dgms: &[PersistenceDiagram], syn_dgms: &[PersistenceDiagram], sigma: Sigma) -> Result<MmdResult> {
    if ref_dgms.is_empty() || syn_dgms.is_empty() {
        return Err(Error::InsufficientData("MMD needs two non-empty diagram sets".into()));
    }
    if let Sigma::Fixed(s) = sigma {
        check_sigma(s)?;
    }
    let pooled: Vec<&PersistenceDiagram> = ref_dgms.iter().chain(syn_dgms).collect();
    let n = pooled.len();
    let mut dist = vec![0.0; n * n];
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|&(i, j)| wasserstein(pooled[i], pooled[j], 1.0).map(|(w, _)| w))
            .collect::<Result<Vec<f64>>>()?
    };
    for (&(i, j), &w) in pairs.iter().zip(&values) {
        dist[i * n + j] = w;
        dist[j * n + i] = w;
    }
    let sigma = match sigma {
        Sigma::Fixed(s) => s,
        Sigma::Auto => {
            let m = median(values);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let nr = ref_dgms.len();
    let block_mean = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
        let count = (rows.len() * cols.len()) as f64;
        let mut sum = 0.0;
        for i in rows {
            for j in cols.clone() {
                sum += kernel_from_distance(dist[i * n + j], sigma);
            }
        }
        sum / count
    };
    let sq = block_mean(0..nr, 0..nr) + block_mean(nr..n, nr..n) - 2.0 * block_mean(0..nr, nr..n);
    let value = sq.max(0.0).sqrt();
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite MMD".into()));
    }
    Ok(MmdResult { value, sigma })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dgm(pairs: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::from_pairs(1, pairs).unwrap()
    }

    #[test]
    fn identical_sets() {
        let set = vec![dgm(&[(0.0, 2.0)]), dgm(&[(1.0, 4.0), (2.0, 3.0)])];
        assert_eq!(mmd(&set, &set, Sigma::Auto).unwrap().value, 0.0);
    }

    #[test]
    fn singleton_closed_form() {
        let a = dgm(&[(0.0, 2.0)]);
        let b = dgm(&[]);
        let r = mmd(&[a], &[b], Sigma::Fixed(1.5)).unwrap();
        let w1 = std::f64::consts::SQRT_2;
        let expected = (2.0 - 2.0 * (-w1 / 2.25).exp()).sqrt();
        assert!((r.value - expected).abs() < 1e-12);
    }

    #[test]
    fn sigma_handling() {
        let a = vec![dgm(&[])];
        assert!(matches!(mmd(&a, &a, Sigma::Fixed(0.0)), Err(Error::Parameter(_))));
        assert_eq!(mmd(&a, &a, Sigma::Auto).unwrap().sigma, 1.0);
        assert!(mmd(&a, &[], Sigma::Auto).is_err());
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
