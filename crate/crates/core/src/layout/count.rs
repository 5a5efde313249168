//! Connected-component cell counting and the CCE / TCE count-error metrics.

use serde::{Deserialize, Serialize};

use super::{rasterize, CellLayout};
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::unionfind::UnionFind;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

/// Number of connected foreground components (two-pass raster labeling).
pub fn count_components(grid: &BinaryGrid, connectivity: Connectivity) -> usize {
    let (w, h) = (grid.width(), grid.height());
    let mut uf = UnionFind::new(w * h);
    let px = grid.as_slice();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !px[i] {
                continue;
            }
            // Already-visited neighbours: west, north, and for 8-connectivity the two northern diagonals.
            if c > 0 && px[i - 1] {
                uf.union(i, i - 1);
            }
            if r > 0 {
                let up = i - w;
                if px[up] {
                    uf.union(i, up);
                }
                if connectivity == Connectivity::Eight {
                    if c > 0 && px[up - 1] {
                        uf.union(i, up - 1);
                    }
                    if c + 1 < w && px[up + 1] {
                        uf.union(i, up + 1);
                    }
                }
            }
        }
    }
    (0..w * h).filter(|&i| px[i] && uf.find(i) == i).count()
}

/// Where per-class cell counts come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSource {
    /// Number of points per class.
    Points,
    /// Connected components of each rasterized channel.
    Components(Connectivity),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub real: Vec<usize>,
    pub syn: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub source: CountSource,
    pub per_class_cce: Vec<f64>,
    pub tce: f64,
    pub per_sample_counts: Vec<SampleCounts>,
}

pub fn count_metrics(real: &[CellLayout], syn: &[CellLayout]) -> Result<CountReport> {
    count_metrics_with(real, syn, CountSource::Points)
}

pub fn count_metrics_with(
    real: &[CellLayout],
    syn: &[CellLayout],
    source: CountSource,
) -> Result<CountReport> {
    if real.len() != syn.len() {
        return Err(Error::Pairing(format!(
            "{} real layouts vs {} synthetic layouts",
            real.len(),
            syn.len()
        )));
    }
    if real.is_empty() {
        return Err(Error::Pairing("no layout pairs".into()));
    }
    let classes = real[0].classes();
    if real.iter().chain(syn).any(|l| l.classes() != classes) {
        return Err(Error::Pairing("layouts disagree on class spec".into()));
    }
    let counts_of = |l: &CellLayout| match source {
        CountSource::Points => l.counts(),
        CountSource::Components(conn) => rasterize(l)
            .channels()
            .iter()
            .map(|ch| count_components(ch, conn))
            .collect(),
    };
    let per_sample_counts: Vec<SampleCounts> = real
        .iter()
        .zip(syn)
        .map(|(r, s)| SampleCounts {
            real: counts_of(r),
            syn: counts_of(s),
        })
        .collect();
    Ok(summarize_counts(classes.n(), per_sample_counts, source))
}

fn summarize_counts(n: usize, samples: Vec<SampleCounts>, source: CountSource) -> CountReport {
    let big_n = samples.len() as f64;
    let mut cce = vec![0.0; n];
    let mut tce = 0.0;
    for s in &samples {
        for (acc, (&r, &g)) in cce.iter_mut().zip(s.real.iter().zip(&s.syn)) {
            *acc += r.abs_diff(g) as f64;
        }
        let (rt, st): (usize, usize) = (s.real.iter().sum(), s.syn.iter().sum());
        tce += rt.abs_diff(st) as f64;
    }
    cce.iter_mut().for_each(|v| *v /= big_n);
    CountReport {
        source,
        per_class_cce: cce,
        tce: tce / big_n,
        per_sample_counts: samples,
    }
}
