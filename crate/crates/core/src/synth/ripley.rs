use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::layout::{CellLayout, Point};

pub const DEFAULT_RADII: [f64; 6] = [15.0, 30.0, 45.0, 60.0, 75.0, 90.0];
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCorrection {
    #[default]
    None,
    /// Only points of the first class at least `r` from the canvas border act as centers.
    Border,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("radii must be finite, >= 0 and strictly increasing".into()));
    }
    Ok(())
}

/// `K̂(r) = A / (N_a · N_b′) · #{(i, j) : d_ij ≤ r}` with `N_b′ = N_a − 1` when `a == b`.
pub fn ripley_k(layout: &CellLayout, class_a: usize, class_b: usize, radii: &[f64]) -> Result<Vec<f64>> {
    ripley_k_with(layout, class_a, class_b, radii, EdgeCorrection::None)
}

pub fn ripley_k_with(
    layout: &CellLayout,
    class_a: usize,
    class_b: usize,
    radii: &[f64],
    correction: EdgeCorrection,
) -> Result<Vec<f64>> {
    check_radii(radii)?;
    let n = layout.n_classes();
    if class_a >= n || class_b >= n {
        return Err(Error::Parameter(format!("class pair ({class_a}, {class_b}) out of range")));
    }
    let (pa, pb) = (layout.class_points(class_a), layout.class_points(class_b));
    let same = class_a == class_b;
    let nb_prime = if same { pa.len().saturating_sub(1) } else { pb.len() };
    if pa.is_empty() || nb_prime == 0 {
        return Err(Error::InsufficientData(format!(
            "K({class_a}, {class_b}) undefined: too few points"
        )));
    }
    let (w, h) = (layout.width() as f64, layout.height() as f64);
    let border = |p: &Point| p.x.min(w - p.x).min(p.y).min(h - p.y);
    let area = layout.area();
    // Sorted neighbor distances per center so every radius is a binary search.
    let per_center: Vec<(f64, Vec<f64>)> = pa
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = pb
                .iter()
                .enumerate()
                .filter(|&(j, _)| !(same && i == j))
                .map(|(_, q)| p.distance(q))
                .collect();
            d.sort_by(f64::total_cmp);
            (border(p), d)
        })
        .collect();
    radii
        .iter()
        .map(|&r| {
            let mut centers = 0usize;
            let mut pairs = 0usize;
            for (b, d) in &per_center {
                if correction == EdgeCorrection::Border && *b < r {
                    continue;
                }
                centers += 1;
                pairs += d.partition_point(|&x| x <= r);
            }
            if centers == 0 {
                return Err(Error::InsufficientData(format!("no interior points at r = {r}")));
            }
            Ok(area / (centers as f64 * nb_prime as f64) * pairs as f64)
        })
        .collect()
}

/// Two-sided paired t-test; returns `1` when every difference is exactly zero.
pub fn paired_t_test(diffs: &[f64]) -> Result<f64> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::InsufficientData("paired t-test needs at least 2 pairs".into()));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub class_a: usize,
    pub class_b: usize,
    /// `[sample][radius]`; `None` where the estimate is undefined.
    pub khat_real: Vec<Vec<Option<f64>>>,
    pub khat_syn: Vec<Vec<Option<f64>>>,
    /// Per radius; `None` when fewer than two samples had defined estimates.
    pub p_values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub radii: Vec<f64>,
    pub correction: EdgeCorrection,
    pub estimator: String,
    pub alpha: f64,
    pub pairs: Vec<PairStats>,
    pub intra_pass: usize,
    pub intra_total: usize,
    pub cross_pass: usize,
    pub cross_total: usize,
}

/// Paired t-tests on `K̂_real − K̂_syn` for every ordered class pair and radius.
pub fn k_discrepancy_test(
    real: &[CellLayout],
    syn: &[CellLayout],
    radii: &[f64],
    correction: EdgeCorrection,
) -> Result<KReport> {
    check_radii(radii)?;
    if real.len() != syn.len() {
        return Err(Error::Pairing(format!("{} real vs {} synthetic layouts", real.len(), syn.len())));
    }
    if real.len() < 2 {
        return Err(Error::InsufficientData("at least 2 layout pairs are required".into()));
    }
    let classes = real[0].classes();
    if real.iter().chain(syn).any(|l| l.classes() != classes) {
        return Err(Error::Pairing("layouts disagree on class spec".into()));
    }
    let n = classes.n();
    let estimate = |l: &CellLayout, a, b| -> Result<Vec<Option<f64>>> {
        match ripley_k_with(l, a, b, radii, correction) {
            Ok(v) => Ok(v.into_iter().map(Some).collect()),
            Err(Error::InsufficientData(_)) => {
                // Border correction may leave only some radii undefined.
                Ok(radii
                    .iter()
                    .map(|&r| ripley_k_with(l, a, b, &[r], correction).ok().map(|v| v[0]))
                    .collect())
            }
            Err(e) => Err(e),
        }
    };
    let order: Vec<(usize, usize)> = (0..n)
        .map(|a| (a, a))
        .chain((0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))))
        .collect();
    let mut report = KReport {
        radii: radii.to_vec(),
        correction,
        estimator: match correction {
            EdgeCorrection::None => "A/(Na*Nb') * pairs(d<=r), no edge correction".into(),
            EdgeCorrection::Border => "A/(n_interior*Nb') * pairs(d<=r), border-corrected".into(),
        },
        alpha: SIGNIFICANCE,
        pairs: Vec::with_capacity(order.len()),
        intra_pass: 0,
        intra_total: 0,
        cross_pass: 0,
        cross_total: 0,
    };
    for (a, b) in order {
        let kr = real.iter().map(|l| estimate(l, a, b)).collect::<Result<Vec<_>>>()?;
        let ks = syn.iter().map(|l| estimate(l, a, b)).collect::<Result<Vec<_>>>()?;
        let mut p_values = Vec::with_capacity(radii.len());
        for ri in 0..radii.len() {
            let diffs: Vec<f64> = kr
                .iter()
                .zip(&ks)
                .filter_map(|(x, y)| Some(x[ri]? - y[ri]?))
                .collect();
            let p = if diffs.len() >= 2 { Some(paired_t_test(&diffs)?) } else { None };
            let pass = p.is_some_and(|p| p > SIGNIFICANCE);
            if a == b {
                report.intra_total += 1;
                report.intra_pass += pass as usize;
            } else {
                report.cross_total += 1;
                report.cross_pass += pass as usize;
            }
            p_values.push(p);
        }
        report.pairs.push(PairStats { class_a: a, class_b: b, khat_real: kr, khat_syn: ks, p_values });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::ClassSpec;

    fn two_points() -> CellLayout {
        CellLayout::from_points(
            256,
            256,
            ClassSpec::numbered(1).unwrap(),
            vec![vec![Point::new(100.0, 100.0), Point::new(120.0, 100.0)]],
        )
        .unwrap()
    }

    #[test]
    fn two_point_values() {
        let k = ripley_k(&two_points(), 0, 0, &[15.0, 30.0]).unwrap();
        assert_eq!(k, vec![0.0, 65536.0]);
    }

    #[test]
    fn undefined_cases() {
        let l = CellLayout::from_points(10, 10, ClassSpec::numbered(2).unwrap(), vec![vec![Point::new(1.0, 1.0)], vec![]]).unwrap();
        assert!(matches!(ripley_k(&l, 0, 0, &[1.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(ripley_k(&l, 0, 1, &[1.0]), Err(Error::InsufficientData(_))));
        assert!(ripley_k(&two_points(), 0, 0, &[30.0, 15.0]).is_err());
    }

    #[test]
    fn t_test_conventions() {
        assert_eq!(paired_t_test(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(paired_t_test(&[2.0, 2.0]).unwrap(), 0.0);
        assert!(paired_t_test(&[1.0]).is_err());
        // Two degrees of freedom: two-sided p = 1 - t / sqrt(2 + t²).
        let p = paired_t_test(&[0.0, 1.0, 2.0]).unwrap();
        let t = 1.0 / (1.0f64 / 3.0).sqrt();
        let expected = 1.0 - t / (2.0 + t * t).sqrt();
        assert!((p - expected).abs() < 1e-9, "{p} vs {expected}");
    }
}
