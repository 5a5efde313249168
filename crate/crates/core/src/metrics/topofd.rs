use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{frechet_distance_low_rank, LowRankGaussian};
use crate::diagrams::{barycenter, landscape, uniform_grid, LandscapeVector};
use crate::error::{Error, Result};
use crate::layout::CellLayout;
use crate::persistence::{rips_diagram, FiltrationSpec, PersistenceDiagram};

/// Where the per-set covariance is centered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceCenter {
    /// Landscape of the set barycenter, which is also the mean vector. Divides by `N`.
    #[default]
    Barycenter,
    /// Empirical mean of the landscape vectors, unbiased (`N − 1`).
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopoFdParams {
    /// Landscape levels `K`.
    pub levels: usize,
    /// Landscape samples `m` per level.
    pub samples: usize,
    /// Relative ridge; the added multiple of `I` is `ridge · Tr(Σ)/d`.
    pub ridge: f64,
    /// Homology dimensions whose landscapes are concatenated.
    pub dims: Vec<u8>,
    pub center: CovarianceCenter,
    /// Rips truncation; `None` is the full filtration.
    pub max_scale: Option<f64>,
}

impl Default for TopoFdParams {
    fn default() -> Self {
        TopoFdParams {
            levels: 5,
            samples: 100,
            ridge: 1e-6,
            dims: vec![1],
            center: CovarianceCenter::Barycenter,
            max_scale: None,
        }
    }
}

impl TopoFdParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.samples < 2 {
            return Err(Error::Parameter("landscape needs K >= 1 and m >= 2".into()));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::Parameter(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d > 1) {
            return Err(Error::Parameter("dims must be a non-empty subset of {0, 1}".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFd {
    pub class: usize,
    /// `None` when the class was skipped.
    pub fd: Option<f64>,
    pub skipped: Option<String>,
    /// Layouts whose diagram for this class was empty.
    pub empty_ref: usize,
    pub empty_syn: usize,
    pub ridge_ref: f64,
    pub ridge_syn: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopoFdResult {
    pub topofd: f64,
    pub per_class: Vec<ClassFd>,
}

/// Rips diagrams of every layout's class point clouds, indexed `[class][layout]`.
pub fn class_diagrams(
    layouts: &[CellLayout],
    max_scale: Option<f64>,
) -> Result<Vec<Vec<PersistenceDiagram>>> {
    let n = layouts.first().map_or(0, |l| l.n_classes());
    let spec = FiltrationSpec::rips(1, max_scale);
    (0..n)
        .map(|class| {
            layouts
                .par_iter()
                .map(|l| rips_diagram(l.class_points(class), &spec))
                .collect()
        })
        .collect()
}

fn check_sets(reference: &[CellLayout], syn: &[CellLayout]) -> Result<()> {
    let (Some(first), false) = (reference.first(), syn.is_empty()) else {
        return Err(Error::InsufficientData("both layout sets must be non-empty".into()));
    };
    if reference.iter().chain(syn).any(|l| l.classes() != first.classes()) {
        return Err(Error::Validation("layout sets do not share one class list".into()));
    }
    Ok(())
}

/// Mean over classes of the Fréchet distance between landscape Gaussians.
pub fn topofd(reference: &[CellLayout], syn: &[CellLayout], params: &TopoFdParams) -> Result<TopoFdResult> {
    params.validate()?;
    check_sets(reference, syn)?;
    let rd = class_diagrams(reference, params.max_scale)?;
    let sd = class_diagrams(syn, params.max_scale)?;
    topofd_with_diagrams(reference, syn, &rd, &sd, params)
}

pub(crate) fn topofd_with_diagrams(
    reference: &[CellLayout],
    syn: &[CellLayout],
    rd: &[Vec<PersistenceDiagram>],
    sd: &[Vec<PersistenceDiagram>],
    params: &TopoFdParams,
) -> Result<TopoFdResult> {
    let usable = |sets: &[CellLayout], class: usize| sets.iter().any(|l| !l.class_points(class).is_empty());
    let mut per_class = Vec::with_capacity(rd.len());
    for class in 0..rd.len() {
        if !usable(reference, class) || !usable(syn, class) {
            per_class.push(ClassFd {
                class,
                fd: None,
                skipped: Some("class has no cells in every layout of a set".into()),
                empty_ref: rd[class].iter().filter(|d| d.is_empty()).count(),
                empty_syn: sd[class].iter().filter(|d| d.is_empty()).count(),
                ridge_ref: 0.0,
                ridge_syn: 0.0,
            });
            continue;
        }
        let mut c = class_fd(&rd[class], &sd[class], params)?;
        c.class = class;
        per_class.push(c);
    }
    combine(per_class)
}

fn combine(per_class: Vec<ClassFd>) -> Result<TopoFdResult> {
    let values: Vec<f64> = per_class.iter().filter_map(|c| c.fd).collect();
    if values.is_empty() {
        return Err(Error::InsufficientData("no class is usable in both sets".into()));
    }
    let topofd = values.iter().sum::<f64>() / values.len() as f64;
    Ok(TopoFdResult { topofd, per_class })
}

/// Fréchet distance for one class given the per-layout diagrams of each set.
pub fn class_fd(
    ref_dgms: &[PersistenceDiagram],
    syn_dgms: &[PersistenceDiagram],
    params: &TopoFdParams,
) -> Result<ClassFd> {
    params.validate()?;
    if ref_dgms.is_empty() || syn_dgms.is_empty() {
        return Err(Error::InsufficientData("both diagram sets must be non-empty".into()));
    }
    let mut ref_vecs = vec![Vec::new(); ref_dgms.len()];
    let mut syn_vecs = vec![Vec::new(); syn_dgms.len()];
    let mut ref_mean = Vec::new();
    let mut syn_mean = Vec::new();
    for &dim in &params.dims {
        let r: Vec<PersistenceDiagram> = ref_dgms.iter().map(|d| d.restrict(dim)).collect();
        let s: Vec<PersistenceDiagram> = syn_dgms.iter().map(|d| d.restrict(dim)).collect();
        let rb = barycenter(&r)?.diagram;
        let sb = barycenter(&s)?.diagram;
        let grid = shared_grid(r.iter().chain(&s).chain([&rb, &sb]), params.samples);
        let vec_of = |d: &PersistenceDiagram| -> Result<LandscapeVector> { landscape(d, params.levels, &grid) };
        for (acc, d) in ref_vecs.iter_mut().zip(&r) {
            acc.extend_from_slice(vec_of(d)?.as_vector());
        }
        for (acc, d) in syn_vecs.iter_mut().zip(&s) {
            acc.extend_from_slice(vec_of(d)?.as_vector());
        }
        ref_mean.extend_from_slice(vec_of(&rb)?.as_vector());
        syn_mean.extend_from_slice(vec_of(&sb)?.as_vector());
    }
    let ga = landscape_gaussian(&ref_vecs, ref_mean, params);
    let gb = landscape_gaussian(&syn_vecs, syn_mean, params);
    let fd = frechet_distance_low_rank(&ga, &gb)?;
    Ok(ClassFd {
        class: 0,
        fd: Some(fd),
        skipped: None,
        empty_ref: ref_dgms.iter().filter(|d| d.is_empty()).count(),
        empty_syn: syn_dgms.iter().filter(|d| d.is_empty()).count(),
        ridge_ref: ga.ridge,
        ridge_syn: gb.ridge,
    })
}

/// Uniform grid from the pooled minimum birth to the pooled maximum death.
fn shared_grid<'a>(dgms: impl Iterator<Item = &'a PersistenceDiagram>, m: usize) -> Vec<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for d in dgms {
        for b in d.bars() {
            lo = lo.min(b.birth);
            hi = hi.max(b.death);
        }
    }
    if lo > hi {
        (lo, hi) = (0.0, 0.0);
    }
    uniform_grid(lo, hi, m)
}

fn landscape_gaussian(vectors: &[Vec<f64>], barycenter_mean: Vec<f64>, params: &TopoFdParams) -> LowRankGaussian {
    let d = barycenter_mean.len();
    let n = vectors.len();
    let (mean, denom) = match params.center {
        CovarianceCenter::Barycenter => (DVector::from_vec(barycenter_mean), n as f64),
        CovarianceCenter::Empirical => {
            let mut m = DVector::zeros(d);
            for v in vectors {
                m += DVector::from_column_slice(v);
            }
            (m / n as f64, (n.max(2) - 1) as f64)
        }
    };
    let scale = 1.0 / denom.sqrt();
    let factor = DMatrix::from_fn(d, n, |i, j| (vectors[j][i] - mean[i]) * scale);
    let tr: f64 = factor.iter().map(|v| v * v).sum();
    let ridge = if tr > 0.0 { params.ridge * tr / d as f64 } else { params.ridge };
    let factor = if params.center == CovarianceCenter::Empirical && n < 2 {
        DMatrix::zeros(d, 0)
    } else {
        factor
    };
    LowRankGaussian { mean, factor, ridge }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{ClassSpec, Point};

    fn ring(cx: f64, cy: f64, r: f64, m: usize) -> Vec<Point> {
        (0..m)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / m as f64;
                Point::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect()
    }

    fn layout(points: Vec<Vec<Point>>) -> CellLayout {
        CellLayout::from_points(128, 128, ClassSpec::numbered(points.len()).unwrap(), points).unwrap()
    }

    #[test]
    fn identical_sets_give_zero() {
        let set = vec![
            layout(vec![ring(64.0, 64.0, 30.0, 10)]),
            layout(vec![ring(60.0, 64.0, 25.0, 9)]),
        ];
        let r = topofd(&set, &set, &TopoFdParams::default()).unwrap();
        assert!(r.topofd <= 1e-8, "{}", r.topofd);
    }

    #[test]
    fn skipped_class_is_flagged() {
        let set = vec![layout(vec![ring(64.0, 64.0, 30.0, 10), vec![]])];
        let r = topofd(&set, &set, &TopoFdParams::default()).unwrap();
        assert!(r.per_class[1].skipped.is_some());
        assert_eq!(r.per_class[1].fd, None);
        let empty = vec![layout(vec![vec![], vec![]])];
        assert!(matches!(topofd(&empty, &empty, &TopoFdParams::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rejects_bad_input() {
        let set = vec![layout(vec![ring(64.0, 64.0, 30.0, 10)])];
        assert!(topofd(&set, &[], &TopoFdParams::default()).is_err());
        let two = vec![layout(vec![vec![], vec![]])];
        assert!(matches!(topofd(&set, &two, &TopoFdParams::default()), Err(Error::Validation(_))));
        let bad = TopoFdParams { levels: 0, ..Default::default() };
        assert!(matches!(topofd(&set, &set, &bad), Err(Error::Parameter(_))));
    }
}
