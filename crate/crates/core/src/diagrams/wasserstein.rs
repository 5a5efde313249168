use serde::{Deserialize, Serialize};

use super::hungarian::solve_assignment;
use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// One pair of an augmented matching; `None` on a side means the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPair {
    pub a: Option<usize>,
    pub b: Option<usize>,
}

/// Optimal correspondence between two diagrams.
///
/// `cost` is the sum of `p`-th powers of the matched L2 distances, so the
/// Wasserstein distance is `cost^(1/p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub p: f64,
    pub pairs: Vec<MatchPair>,
    pub cost: f64,
}

/// Closest point on the diagonal.
pub fn diagonal_projection(q: [f64; 2]) -> [f64; 2] {
    let m = 0.5 * (q[0] + q[1]);
    [m, m]
}

/// L2 distance to the diagonal.
pub fn diagonal_distance(q: [f64; 2]) -> f64 {
    (q[1] - q[0]).abs() / std::f64::consts::SQRT_2
}

fn l2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Matching {
    /// Where point `i` of `A` goes: a point of `B` or its diagonal projection.
    pub fn partner_of_a(&self, i: usize, b: &[[f64; 2]], a_point: [f64; 2]) -> [f64; 2] {
        match self.pairs.iter().find(|p| p.a == Some(i)).and_then(|p| p.b) {
            Some(j) => b[j],
            None => diagonal_projection(a_point),
        }
    }

    /// Sum of `p`-th power costs of the pairs, evaluated from scratch.
    pub fn recompute_cost(&self, a: &PersistenceDiagram, b: &PersistenceDiagram) -> f64 {
        let (pa, pb) = (a.points(), b.points());
        self.pairs
            .iter()
            .map(|pair| match (pair.a, pair.b) {
                (Some(i), Some(j)) => l2(pa[i], pb[j]).powf(self.p),
                (Some(i), None) => diagonal_distance(pa[i]).powf(self.p),
                (None, Some(j)) => diagonal_distance(pb[j]).powf(self.p),
                (None, None) => 0.0,
            })
            .sum()
    }
}

fn check_dims(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<()> {
    match (a.single_dim()?, b.single_dim()?) {
        (Some(x), Some(y)) if x != y => Err(Error::Validation(format!(
            "diagrams have different dimensions ({x} vs {y})"
        ))),
        _ => Ok(()),
    }
}

/// `p`-Wasserstein distance with L2 ground metric, plus the certifying matching.
pub fn wasserstein(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    p: f64,
) -> Result<(f64, Matching)> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("Wasserstein order must be >= 1, got {p}")));
    }
    check_dims(a, b)?;
    let matching = optimal_matching(&a.points(), &b.points(), p);
    Ok((matching.cost.powf(1.0 / p), matching))
}

/// Hungarian solution on the augmented `(n + m)²` matrix: rows are `A` then one
/// diagonal slot per `B` point, columns are `B` then one diagonal slot per `A` point.
pub(crate) fn optimal_matching(pa: &[[f64; 2]], pb: &[[f64; 2]], p: f64) -> Matching {
    let (n, m) = (pa.len(), pb.len());
    let size = n + m;
    let pow = |x: f64| if p == 2.0 { x * x } else if p == 1.0 { x } else { x.powf(p) };
    let diag_a: Vec<f64> = pa.iter().map(|&q| pow(diagonal_distance(q))).collect();
    let diag_b: Vec<f64> = pb.iter().map(|&q| pow(diagonal_distance(q))).collect();
    let mut cost = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            cost[i * size + j] = match (i < n, j < m) {
                (true, true) => pow(l2(pa[i], pb[j])),
                (true, false) => diag_a[i],
                (false, true) => diag_b[j],
                (false, false) => 0.0,
            };
        }
    }
    let assignment = solve_assignment(&cost, size);
    let mut pairs = Vec::with_capacity(size);
    let mut total = 0.0;
    let mut b_matched = vec![false; m];
    for (i, &j) in assignment.iter().enumerate().take(n) {
        if j < m {
            b_matched[j] = true;
            pairs.push(MatchPair { a: Some(i), b: Some(j) });
        } else {
            pairs.push(MatchPair { a: Some(i), b: None });
        }
        total += cost[i * size + j];
    }
    for (j, matched) in b_matched.iter().enumerate() {
        if !matched {
            pairs.push(MatchPair { a: None, b: Some(j) });
            total += diag_b[j];
        }
    }
    Matching { p, pairs, cost: total }
}
