use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::CellLayout;
use crate::losses::{LossTarget, LossWeights};

/// Consecutive steps above the divergence ratio that stop a run.
const DIVERGENCE_PATIENCE: usize = 10;
const DIVERGENCE_RATIO: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub steps: usize,
    /// Multiplier of the gradient, px per unit gradient.
    pub step_size: f64,
    pub weights: LossWeights,
    /// Record every `trace_every`-th step (the first and last are always recorded).
    pub trace_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            steps: 200,
            step_size: 0.05,
            weights: LossWeights::with_lambdas(1.0, 1.0, 1.0),
            trace_every: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub count: f64,
    pub intra: f64,
    pub inter: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub layout: CellLayout,
    pub trace: Vec<TraceRow>,
    pub steps_run: usize,
    pub diverged: bool,
}

/// Weighted spatial objective minimized by the descent.
fn objective(w: &LossWeights, intra: f64, inter: f64) -> f64 {
    w.lambda_intra * intra + w.lambda_inter * inter
}

/// Gradient descent on point positions; counts never change.
pub fn optimize_layout(init: &CellLayout, target: &CellLayout, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    if cfg.steps == 0 || !(cfg.step_size > 0.0) || !cfg.step_size.is_finite() {
        return Err(Error::Parameter("optimizer needs steps >= 1 and step size > 0".into()));
    }
    if !init.same_frame(target) {
        return Err(Error::Validation("init and target differ in canvas size or class list".into()));
    }
    let prepared = LossTarget::new(target, &cfg.weights)?;
    let every = cfg.trace_every.max(1);
    let mut layout = init.clone();
    let mut trace = Vec::new();
    let mut initial = None;
    let mut above = 0;
    let mut diverged = false;
    let mut steps_run = 0;
    let row = |step: usize, b: &crate::losses::LossBreakdown| TraceRow {
        step,
        count: b.count,
        intra: b.intra,
        inter: b.inter,
        total: b.total,
    };
    for step in 0..cfg.steps {
        let (b, g) = prepared.loss_and_gradient(&layout)?;
        let obj = objective(&cfg.weights, b.intra, b.inter);
        let start = *initial.get_or_insert(obj);
        if step % every == 0 {
            trace.push(row(step, &b));
        }
        if obj > DIVERGENCE_RATIO * start && start > 0.0 {
            above += 1;
            if above >= DIVERGENCE_PATIENCE {
                diverged = true;
                break;
            }
        } else {
            above = 0;
        }
        for (pts, grads) in layout.points_mut().iter_mut().zip(&g.per_class) {
            for (p, d) in pts.iter_mut().zip(grads) {
                p.x -= cfg.step_size * d[0];
                p.y -= cfg.step_size * d[1];
            }
        }
        layout.clamp_to_canvas();
        steps_run = step + 1;
    }
    if !diverged {
        let b = prepared.total_loss(&layout)?;
        trace.push(row(steps_run, &b));
    }
    if trace.iter().any(|r| !r.total.is_finite()) {
        return Err(Error::Numerical("non-finite loss in optimizer trace".into()));
    }
    Ok(OptimizeResult { layout, trace, steps_run, diverged })
}
