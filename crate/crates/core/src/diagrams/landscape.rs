use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// Persistence landscape `λ_1..λ_K` sampled on a shared grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeVector {
    pub levels: usize,
    pub grid: Vec<f64>,
    /// Row-major `levels × grid.len()`.
    pub values: Vec<f64>,
}

impl LandscapeVector {
    pub fn level(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn as_vector(&self) -> &[f64] {
        &self.values
    }

    /// `level,t,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,t,value\n");
        for k in 0..self.levels {
            for (t, v) in self.grid.iter().zip(self.level(k)) {
                out.push_str(&format!("{},{t:?},{v:?}\n", k + 1));
            }
        }
        out
    }
}

/// `m` evenly spaced abscissas spanning `[lo, hi]`; a degenerate span becomes `[lo, lo + 1]`.
pub fn uniform_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let hi = if hi > lo { hi } else { lo + 1.0 };
    if m == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (m - 1) as f64;
    (0..m)
        .map(|i| if i + 1 == m { hi } else { lo + step * i as f64 })
        .collect()
}

/// `λ_k(t)` = k-th largest tent value `max(0, min(t - b, d - t))`.
pub fn landscape(diagram: &PersistenceDiagram, levels: usize, grid: &[f64]) -> Result<LandscapeVector> {
    if levels == 0 {
        return Err(Error::Parameter("landscape needs at least one level".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("landscape grid must be strictly increasing".into()));
    }
    let m = grid.len();
    let mut values = vec![0.0; levels * m];
    let mut tents: Vec<f64> = Vec::with_capacity(diagram.len());
    for (j, &t) in grid.iter().enumerate() {
        tents.clear();
        tents.extend(
            diagram
                .bars()
                .iter()
                .map(|b| (t - b.birth).min(b.death - t))
                .filter(|&v| v > 0.0),
        );
        tents.sort_unstable_by(|a, b| b.total_cmp(a));
        for (k, &v) in tents.iter().take(levels).enumerate() {
            values[k * m + j] = v;
        }
    }
    Ok(LandscapeVector {
        levels,
        grid: grid.to_vec(),
        values,
    })
}
