//! Count, intra-class and inter-class topological losses with point gradients.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagrams::{diagonal_projection, optimal_matching, Matching};
use crate::edt::{PointDistanceField, PointGradient, SiteModel};
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, ScalarField};
use crate::layout::{rasterize, CellLayout, Point, RasterLayout, CELL_AREA};
use crate::persistence::{cubical_diagram_dims, Bar, Critical};

/// Bars shorter than this count as numerical noise.
pub const DEGENERATE_PERSISTENCE: f64 = 1e-9;

/// Binarization threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// Median of all values (per channel when binarizing channels separately).
    #[default]
    Median,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_count: f64,
    pub lambda_intra: f64,
    pub lambda_inter: f64,
    pub tau_rule: TauRule,
    /// Pixel area of one cell.
    pub delta: f64,
    /// Homology dimensions entering the spatial terms.
    pub dims: Vec<u8>,
    /// Order of the Wasserstein cost used to find the matching.
    pub p: f64,
    pub site_model: SiteModel,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_count: 5e-4,
            lambda_intra: 5e-4,
            lambda_inter: 5e-4,
            tau_rule: TauRule::Median,
            delta: CELL_AREA,
            dims: vec![1],
            p: 2.0,
            site_model: SiteModel::Footprint,
        }
    }
}

impl LossWeights {
    pub fn with_lambdas(lambda_count: f64, lambda_intra: f64, lambda_inter: f64) -> Self {
        LossWeights {
            lambda_count,
            lambda_intra,
            lambda_inter,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lambdas = [self.lambda_count, self.lambda_intra, self.lambda_inter];
        if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Parameter("loss weights must be finite and >= 0".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Parameter(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d > 1) {
            return Err(Error::Parameter("dims must be a non-empty subset of {0, 1}".into()));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::Parameter(format!("matching order must be >= 1, got {}", self.p)));
        }
        if let TauRule::Fixed(t) = self.tau_rule {
            if !t.is_finite() {
                return Err(Error::Parameter("fixed tau must be finite".into()));
            }
        }
        Ok(())
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// `1` where `value ≥ τ`.
pub fn binarize(field: &ScalarField, rule: TauRule) -> BinaryGrid {
    if field.is_empty() {
        return field.map(|_| false);
    }
    let tau = match rule {
        TauRule::Median => median(field.as_slice()),
        TauRule::Fixed(t) => t,
    };
    field.map(|&v| v >= tau)
}

/// Binarizes every channel; the median rule pools all channels unless `per_channel`.
pub fn binarize_channels(fields: &[ScalarField], rule: TauRule, per_channel: bool) -> Result<RasterLayout> {
    if fields.iter().flat_map(|f| f.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::Validation("field contains non-finite values".into()));
    }
    let rule = match (rule, per_channel) {
        (TauRule::Median, false) => {
            let pooled: Vec<f64> = fields.iter().flat_map(|f| f.as_slice().iter().copied()).collect();
            if pooled.is_empty() {
                TauRule::Median
            } else {
                TauRule::Fixed(median(&pooled))
            }
        }
        (r, _) => r,
    };
    RasterLayout::from_channels(fields.iter().map(|f| binarize(f, rule)).collect())
}

/// Mean over classes of `|fg_cand/δ − fg_target/δ|`.
pub fn count_loss(candidate: &RasterLayout, target: &RasterLayout, weights: &LossWeights) -> Result<f64> {
    weights.validate()?;
    if candidate.n_channels() != target.n_channels() {
        return Err(Error::Validation(format!(
            "channel counts differ ({} vs {})",
            candidate.n_channels(),
            target.n_channels()
        )));
    }
    if candidate.width() != target.width() || candidate.height() != target.height() {
        return Err(Error::Validation("rasters have different canvas sizes".into()));
    }
    let n = candidate.n_channels();
    if n == 0 {
        return Ok(0.0);
    }
    let (a, b) = (candidate.foreground_counts(), target.foreground_counts());
    let sum: f64 = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| (x as f64 / weights.delta - y as f64 / weights.delta).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Matching used by one spatial term in one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermMatching {
    /// `"intra"` or `"inter"`.
    pub term: String,
    pub class: Option<usize>,
    pub dim: u8,
    pub candidate: Vec<[f64; 2]>,
    pub target: Vec<[f64; 2]>,
    pub matching: Matching,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub count: f64,
    pub intra: f64,
    pub intra_per_class: Vec<f64>,
    pub inter: f64,
    pub total: f64,
    pub weights: LossWeights,
    pub matchings: Vec<TermMatching>,
    /// Near-equal matching alternatives or coincident diagram points were seen.
    pub tie_detected: bool,
    /// Hash of every discrete choice (critical pixels, their sites, matched partners).
    /// Equal signatures at nearby configurations mean the loss is smooth between them.
    #[serde(skip)]
    pub signature: u64,
}

impl LossBreakdown {
    /// `L_intra + L_inter`, the part driven by the point gradient when both lambdas are 1.
    pub fn spatial(&self) -> f64 {
        self.intra + self.inter
    }
}

/// Gradient of `λ_intra·L_intra + λ_inter·L_inter` with respect to every candidate point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossGradient {
    /// `[class][point] = (∂/∂x, ∂/∂y)`.
    pub per_class: Vec<Vec<[f64; 2]>>,
    pub tie_detected: bool,
}

impl LossGradient {
    pub fn max_abs(&self) -> f64 {
        self.per_class.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

struct SpcTerm {
    value: f64,
    matchings: Vec<(u8, Vec<[f64; 2]>, Vec<[f64; 2]>, Matching)>,
    /// Gradient per candidate point of this term's point set.
    grad: Vec<[f64; 2]>,
    tie: bool,
    signature: Vec<u64>,
}

fn point_field(points: &[Point], width: usize, height: usize, model: SiteModel) -> Result<Option<PointDistanceField>> {
    if points.is_empty() {
        Ok(None)
    } else {
        PointDistanceField::new(points, width, height, model).map(Some)
    }
}

fn bars_for(field: &Option<PointDistanceField>, dims: &[u8]) -> Result<Vec<Bar>> {
    match field {
        None => Ok(Vec::new()),
        Some(f) => {
            let mut bars = cubical_diagram_dims(&f.values, dims)?.bars().to_vec();
            if bars.iter().all(|b| b.persistence() < DEGENERATE_PERSISTENCE) {
                bars.clear();
            }
            Ok(bars)
        }
    }
}

fn pixel_of(cell: Option<Critical>) -> Option<usize> {
    match cell {
        Some(Critical::Pixel(p)) => Some(p as usize),
        _ => None,
    }
}

/// `L_spc` between the candidate and target point sets on one canvas.
fn spc_term(
    candidate: &[Point],
    targ_bars: &[Bar],
    width: usize,
    height: usize,
    weights: &LossWeights,
    with_gradient: bool,
) -> Result<SpcTerm> {
    let cf = point_field(candidate, width, height, weights.site_model)?;
    let cand_bars = bars_for(&cf, &weights.dims)?;
    let mut term = SpcTerm {
        value: 0.0,
        matchings: Vec::new(),
        grad: vec![[0.0; 2]; if with_gradient { candidate.len() } else { 0 }],
        tie: false,
        signature: Vec::new(),
    };
    for &dim in &weights.dims {
        let cb: Vec<&Bar> = cand_bars.iter().filter(|b| b.dim == dim).collect();
        let pc: Vec<[f64; 2]> = cb.iter().map(|b| b.coords()).collect();
        let pt: Vec<[f64; 2]> = targ_bars.iter().filter(|b| b.dim == dim).map(|b| b.coords()).collect();
        let matching = optimal_matching(&pc, &pt, weights.p);
        term.tie |= matching_has_tie(&pc, &pt, &matching);
        for (i, bar) in cb.iter().enumerate() {
            let q = pc[i];
            let partner_idx = matching.pairs.iter().find(|m| m.a == Some(i)).and_then(|m| m.b);
            let partner = partner_idx.map_or_else(|| diagonal_projection(q), |j| pt[j]);
            let (db, dd) = (q[0] - partner[0], q[1] - partner[1]);
            term.value += db * db + dd * dd;
            let (gb, gd) = (2.0 * db, 2.0 * dd);
            let birth_px = pixel_of(bar.birth_cell);
            let death_px = pixel_of(bar.death_cell);
            if let Some(f) = &cf {
                let site = |p: Option<usize>| p.map_or(u64::MAX, |p| f.sites.as_slice()[p] as u64);
                term.signature.extend([
                    dim as u64,
                    birth_px.map_or(u64::MAX, |p| p as u64),
                    death_px.map_or(u64::MAX, |p| p as u64),
                    site(birth_px),
                    site(death_px),
                    partner_idx.map_or(u64::MAX, |j| j as u64),
                ]);
                if with_gradient {
                    for (px, scale) in [(birth_px, gb), (death_px, gd)] {
                        let Some(px) = px else { continue };
                        if let PointGradient::Point { index, grad } = f.gradient_at(px) {
                            term.grad[index][0] += scale * grad[0];
                            term.grad[index][1] += scale * grad[1];
                        }
                    }
                }
            }
        }
        term.matchings.push((dim, pc, pt, matching));
    }
    Ok(term)
}

/// Whether a different assignment could be optimal under an arbitrarily small perturbation.
fn matching_has_tie(pc: &[[f64; 2]], pt: &[[f64; 2]], m: &Matching) -> bool {
    const EPS: f64 = 1e-9;
    let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() < EPS && (a[1] - b[1]).abs() < EPS;
    let dup = |pts: &[[f64; 2]]| (0..pts.len()).any(|i| (i + 1..pts.len()).any(|j| close(pts[i], pts[j])));
    if dup(pc) || dup(pt) {
        return true;
    }
    // A matched pair whose cost equals sending both ends to the diagonal.
    let d2 = |q: [f64; 2]| 0.5 * (q[1] - q[0]).powi(2);
    m.pairs.iter().any(|pair| match (pair.a, pair.b) {
        (Some(i), Some(j)) => {
            let direct = (pc[i][0] - pt[j][0]).powi(2) + (pc[i][1] - pt[j][1]).powi(2);
            (direct - d2(pc[i]) - d2(pt[j])).abs() < EPS
        }
        _ => false,
    })
}

fn check_pair(candidate: &CellLayout, target: &CellLayout) -> Result<()> {
    if !candidate.same_frame(target) {
        return Err(Error::Validation(
            "candidate and target differ in canvas size or class list".into(),
        ));
    }
    Ok(())
}

struct Evaluation {
    breakdown: LossBreakdown,
    gradient: Option<LossGradient>,
}

fn diagram_bars(points: &[Point], width: usize, height: usize, weights: &LossWeights) -> Result<Vec<Bar>> {
    bars_for(&point_field(points, width, height, weights.site_model)?, &weights.dims)
}

/// A target layout with its diagrams computed once, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct LossTarget {
    target: CellLayout,
    raster: RasterLayout,
    weights: LossWeights,
    intra_bars: Vec<Vec<Bar>>,
    inter_bars: Vec<Bar>,
}

impl LossTarget {
    pub fn new(target: &CellLayout, weights: &LossWeights) -> Result<Self> {
        weights.validate()?;
        let (w, h) = (target.width(), target.height());
        let intra_bars = (0..target.n_classes())
            .into_par_iter()
            .map(|c| diagram_bars(target.class_points(c), w, h, weights))
            .collect::<Result<_>>()?;
        let inter_bars = diagram_bars(&target.points().concat(), w, h, weights)?;
        Ok(LossTarget {
            target: target.clone(),
            raster: rasterize(target),
            weights: weights.clone(),
            intra_bars,
            inter_bars,
        })
    }

    pub fn layout(&self) -> &CellLayout {
        &self.target
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    pub fn total_loss(&self, candidate: &CellLayout) -> Result<LossBreakdown> {
        Ok(self.evaluate(candidate, false)?.breakdown)
    }

    pub fn loss_and_gradient(&self, candidate: &CellLayout) -> Result<(LossBreakdown, LossGradient)> {
        let e = self.evaluate(candidate, true)?;
        Ok((e.breakdown, e.gradient.expect("gradient requested")))
    }

    fn evaluate(&self, candidate: &CellLayout, with_gradient: bool) -> Result<Evaluation> {
        let weights = &self.weights;
        check_pair(candidate, &self.target)?;
        let (w, h) = (candidate.width(), candidate.height());
        let n = candidate.n_classes();
        let count = count_loss(&rasterize(candidate), &self.raster, weights)?;

        let intra_terms: Vec<SpcTerm> = (0..n)
            .into_par_iter()
            .map(|c| spc_term(candidate.class_points(c), &self.intra_bars[c], w, h, weights, with_gradient))
            .collect::<Result<_>>()?;
        let inter_term = spc_term(&candidate.points().concat(), &self.inter_bars, w, h, weights, with_gradient)?;

        let intra_per_class: Vec<f64> = intra_terms.iter().map(|t| t.value).collect();
        let intra = if n == 0 { 0.0 } else { intra_per_class.iter().sum::<f64>() / n as f64 };
        let inter = inter_term.value;
        let total = weights.lambda_count * count + weights.lambda_intra * intra + weights.lambda_inter * inter;

        let mut matchings = Vec::new();
        let mut hasher = DefaultHasher::new();
        for (c, t) in intra_terms.iter().enumerate() {
            t.signature.hash(&mut hasher);
            for (dim, pc, pt, m) in &t.matchings {
                matchings.push(TermMatching {
                    term: "intra".into(),
                    class: Some(c),
                    dim: *dim,
                    candidate: pc.clone(),
                    target: pt.clone(),
                    matching: m.clone(),
                });
            }
        }
        inter_term.signature.hash(&mut hasher);
        for (dim, pc, pt, m) in &inter_term.matchings {
            matchings.push(TermMatching {
                term: "inter".into(),
                class: None,
                dim: *dim,
                candidate: pc.clone(),
                target: pt.clone(),
                matching: m.clone(),
            });
        }
        let tie_detected = inter_term.tie || intra_terms.iter().any(|t| t.tie);

        let gradient = with_gradient.then(|| {
            let intra_scale = if n == 0 { 0.0 } else { weights.lambda_intra / n as f64 };
            let mut offset = 0;
            let per_class = (0..n)
                .map(|c| {
                    let len = candidate.class_points(c).len();
                    let g = (0..len)
                        .map(|i| {
                            let a = intra_terms[c].grad[i];
                            let b = inter_term.grad[offset + i];
                            [
                                intra_scale * a[0] + weights.lambda_inter * b[0],
                                intra_scale * a[1] + weights.lambda_inter * b[1],
                            ]
                        })
                        .collect();
                    offset += len;
                    g
                })
                .collect();
            LossGradient { per_class, tie_detected }
        });

        let breakdown = LossBreakdown {
            count,
            intra,
            intra_per_class,
            inter,
            total,
            weights: weights.clone(),
            matchings,
            tie_detected,
            signature: hasher.finish(),
        };
        if !breakdown.total.is_finite() {
            return Err(Error::Numerical("loss is non-finite".into()));
        }
        Ok(Evaluation { breakdown, gradient })
    }
}

/// Intra-class spatial consistency: class mean of `L_spc`.
pub fn intra_loss(candidate: &CellLayout, target: &CellLayout, weights: &LossWeights) -> Result<(f64, Vec<f64>)> {
    let b = total_loss(candidate, target, weights)?;
    Ok((b.intra, b.intra_per_class))
}

/// `L_spc` between the aggregated candidate and target layouts.
pub fn inter_loss(candidate: &CellLayout, target: &CellLayout, weights: &LossWeights) -> Result<f64> {
    Ok(total_loss(candidate, target, weights)?.inter)
}

pub fn total_loss(candidate: &CellLayout, target: &CellLayout, weights: &LossWeights) -> Result<LossBreakdown> {
    check_pair(candidate, target)?;
    LossTarget::new(target, weights)?.total_loss(candidate)
}

pub fn loss_gradient(candidate: &CellLayout, target: &CellLayout, weights: &LossWeights) -> Result<LossGradient> {
    Ok(loss_and_gradient(candidate, target, weights)?.1)
}

/// Breakdown and gradient from one evaluation.
pub fn loss_and_gradient(
    candidate: &CellLayout,
    target: &CellLayout,
    weights: &LossWeights,
) -> Result<(LossBreakdown, LossGradient)> {
    check_pair(candidate, target)?;
    LossTarget::new(target, weights)?.loss_and_gradient(candidate)
}
