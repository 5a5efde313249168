//! Set-level comparisons of reference and synthetic layout collections.

mod gaussian;
mod mmd;
mod topofd;

use serde::{Deserialize, Serialize};

pub use gaussian::{frechet_distance, gaussian_summary, GaussianSummary};
pub use mmd::{mmd, MmdResult, Sigma};
pub use topofd::{class_diagrams, class_fd, topofd, ClassFd, CovarianceCenter, TopoFdParams, TopoFdResult};

use crate::error::{Error, Result};
use crate::layout::{count_metrics, CellLayout};

/// Which metrics an evaluation computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSelection {
    pub topofd: bool,
    pub mmd: bool,
    /// CCE and TCE; requires paired sets.
    pub counts: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        MetricSelection { topofd: true, mmd: true, counts: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub topofd: TopoFdParams,
    pub sigma: Sigma,
}

/// Metric values of one evaluation run; unselected metrics are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topofd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class_fd: Option<Vec<Option<f64>>>,
    /// Mean of the per-class MMD values over usable classes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mmd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class_mmd: Option<Vec<Option<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mmd_sigma: Option<Vec<Option<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cce: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tce: Option<f64>,
    pub flags: Vec<String>,
    pub params: EvalParams,
}

/// Computes the selected metrics; class diagrams are shared between TopoFD and MMD.
pub fn evaluate(
    reference: &[CellLayout],
    syn: &[CellLayout],
    selection: MetricSelection,
    params: &EvalParams,
) -> Result<MetricReport> {
    params.topofd.validate()?;
    if reference.is_empty() || syn.is_empty() {
        return Err(Error::InsufficientData("both layout sets must be non-empty".into()));
    }
    let mut report = MetricReport {
        topofd: None,
        per_class_fd: None,
        mmd: None,
        per_class_mmd: None,
        mmd_sigma: None,
        cce: None,
        tce: None,
        flags: Vec::new(),
        params: params.clone(),
    };
    if selection.counts {
        let c = count_metrics(reference, syn)?;
        report.cce = Some(c.per_class_cce);
        report.tce = Some(c.tce);
    }
    if selection.topofd || selection.mmd {
        if reference.iter().chain(syn).any(|l| l.classes() != reference[0].classes()) {
            return Err(Error::Validation("layout sets do not share one class list".into()));
        }
        let rd = class_diagrams(reference, params.topofd.max_scale)?;
        let sd = class_diagrams(syn, params.topofd.max_scale)?;
        if selection.topofd {
            let t = topofd::topofd_with_diagrams(reference, syn, &rd, &sd, &params.topofd)?;
            for c in &t.per_class {
                if let Some(reason) = &c.skipped {
                    report.flags.push(format!("topofd class {}: {reason}", c.class));
                }
                if c.fd.is_some() && c.empty_ref + c.empty_syn > 0 {
                    report.flags.push(format!(
                        "class {}: {} reference and {} synthetic layouts have empty diagrams",
                        c.class, c.empty_ref, c.empty_syn
                    ));
                }
            }
            report.per_class_fd = Some(t.per_class.iter().map(|c| c.fd).collect());
            report.topofd = Some(t.topofd);
        }
        if selection.mmd {
            let mut values = Vec::with_capacity(rd.len());
            let mut sigmas = Vec::with_capacity(rd.len());
            for class in 0..rd.len() {
                let has = |set: &[CellLayout]| set.iter().any(|l| !l.class_points(class).is_empty());
                if !has(reference) || !has(syn) {
                    report.flags.push(format!("mmd class {class}: no cells in every layout of a set"));
                    values.push(None);
                    sigmas.push(None);
                    continue;
                }
                let r: Vec<_> = rd[class].iter().map(|d| d.restrict(1)).collect();
                let s: Vec<_> = sd[class].iter().map(|d| d.restrict(1)).collect();
                let m = mmd(&r, &s, params.sigma)?;
                values.push(Some(m.value));
                sigmas.push(Some(m.sigma));
            }
            let usable: Vec<f64> = values.iter().flatten().copied().collect();
            if usable.is_empty() {
                return Err(Error::InsufficientData("no class is usable for MMD".into()));
            }
            report.mmd = Some(usable.iter().sum::<f64>() / usable.len() as f64);
            report.per_class_mmd = Some(values);
            report.mmd_sigma = Some(sigmas);
        }
    }
    report.check_finite()?;
    Ok(report)
}

impl MetricReport {
    fn check_finite(&self) -> Result<()> {
        let scalars = [self.topofd, self.mmd, self.tce];
        let lists = [&self.per_class_fd, &self.per_class_mmd];
        let bad = scalars.iter().flatten().any(|v| !v.is_finite() || *v < 0.0)
            || lists.iter().filter_map(|l| l.as_ref()).flatten().flatten().any(|v| !v.is_finite() || *v < 0.0)
            || self.cce.iter().flatten().any(|v| !v.is_finite());
        if bad {
            return Err(Error::Numerical("metric value is non-finite or negative".into()));
        }
        Ok(())
    }
}
