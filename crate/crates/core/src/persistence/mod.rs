//! Persistence diagrams in dimensions 0 and 1.
//!
//! Two filtrations are supported: Vietoris–Rips on planar point clouds
//! ([`rips_diagram`]) and sublevel sets of grid fields ([`cubical_sublevel_diagram`]).
//! Classes that never die are kept apart from the finite bars (see
//! [`PersistenceDiagram::essential`]); zero-length bars are not reported.

mod cubical;
mod reduction;
mod rips;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cubical::{cubical_diagram_dims, cubical_sublevel_diagram};
pub use rips::rips_diagram;

use crate::error::{Error, Result};

/// Cell at which a bar is born or dies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Critical {
    Vertex(u32),
    Edge(u32, u32),
    Triangle(u32, u32, u32),
    /// Linear pixel index of the grid vertex whose value sets the filtration value.
    Pixel(u32),
}

impl fmt::Display for Critical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Critical::Vertex(a) => write!(f, "v{a}"),
            Critical::Edge(a, b) => write!(f, "e{a}-{b}"),
            Critical::Triangle(a, b, c) => write!(f, "t{a}-{b}-{c}"),
            Critical::Pixel(p) => write!(f, "p{p}"),
        }
    }
}

impl FromStr for Critical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad cell identifier `{s}`"));
        let (tag, rest) = s.split_at_checked(1).ok_or_else(bad)?;
        let ids: Vec<u32> = rest
            .split('-')
            .map(|t| t.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (tag, ids.as_slice()) {
            ("v", [a]) => Ok(Critical::Vertex(*a)),
            ("e", [a, b]) => Ok(Critical::Edge(*a, *b)),
            ("t", [a, b, c]) => Ok(Critical::Triangle(*a, *b, *c)),
            ("p", [p]) => Ok(Critical::Pixel(*p)),
            _ => Err(bad()),
        }
    }
}

/// One finite point `(birth, death)` of a diagram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub dim: u8,
    pub birth: f64,
    pub death: f64,
    pub birth_cell: Option<Critical>,
    pub death_cell: Option<Critical>,
}

impl Bar {
    pub fn new(dim: u8, birth: f64, death: f64) -> Self {
        Bar {
            dim,
            birth,
            death,
            birth_cell: None,
            death_cell: None,
        }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.birth, self.death]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    bars: Vec<Bar>,
    /// `(dim, birth)` of classes alive at the end of the filtration.
    essential: Vec<(u8, f64)>,
}

impl PersistenceDiagram {
    pub fn new(bars: Vec<Bar>) -> Result<Self> {
        Self::with_essential(bars, Vec::new())
    }

    pub fn with_essential(mut bars: Vec<Bar>, mut essential: Vec<(u8, f64)>) -> Result<Self> {
        for b in &bars {
            if !(b.birth.is_finite() && b.death.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite bar ({}, {})",
                    b.birth, b.death
                )));
            }
            if b.death < b.birth {
                return Err(Error::Validation(format!(
                    "bar dies before birth ({}, {})",
                    b.birth, b.death
                )));
            }
            if b.dim > 1 {
                return Err(Error::Validation(format!("unsupported dimension {}", b.dim)));
            }
        }
        bars.sort_by(canonical_order);
        essential.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(PersistenceDiagram { bars, essential })
    }

    /// Diagram of one dimension from plain `(birth, death)` pairs.
    pub fn from_pairs(dim: u8, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(b, d)| Bar::new(dim, b, d)).collect())
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn essential(&self) -> &[(u8, f64)] {
        &self.essential
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Bars (and essential classes) of a single dimension.
    pub fn restrict(&self, dim: u8) -> PersistenceDiagram {
        PersistenceDiagram {
            bars: self.bars.iter().filter(|b| b.dim == dim).copied().collect(),
            essential: self.essential.iter().filter(|e| e.0 == dim).copied().collect(),
        }
    }

    /// The single dimension shared by all bars; `None` for an empty diagram.
    pub fn single_dim(&self) -> Result<Option<u8>> {
        let Some(first) = self.bars.first() else {
            return Ok(None);
        };
        if self.bars.iter().any(|b| b.dim != first.dim) {
            return Err(Error::Validation(
                "diagram mixes homological dimensions".into(),
            ));
        }
        Ok(Some(first.dim))
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.bars.iter().map(Bar::coords).collect()
    }

    pub fn total_persistence(&self) -> f64 {
        self.bars.iter().map(Bar::persistence).sum()
    }

    /// Drops bars whose persistence is below `min_persistence`.
    pub fn pruned(&self, min_persistence: f64) -> PersistenceDiagram {
        PersistenceDiagram {
            bars: self
                .bars
                .iter()
                .filter(|b| b.persistence() >= min_persistence)
                .copied()
                .collect(),
            essential: self.essential.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W, provenance: bool) -> std::io::Result<()> {
        if provenance {
            writeln!(out, "dim,birth,death,b_cell,d_cell")?;
        } else {
            writeln!(out, "dim,birth,death")?;
        }
        let cell = |c: Option<Critical>| c.map(|c| c.to_string()).unwrap_or_default();
        for b in &self.bars {
            if provenance {
                writeln!(
                    out,
                    "{},{:?},{:?},{},{}",
                    b.dim,
                    b.birth,
                    b.death,
                    cell(b.birth_cell),
                    cell(b.death_cell)
                )?;
            } else {
                writeln!(out, "{},{:?},{:?}", b.dim, b.birth, b.death)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::Format(e.to_string()))?
            .ok_or_else(|| Error::Format("empty diagram file".into()))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let with_cells = match cols.as_slice() {
            ["dim", "birth", "death"] => false,
            ["dim", "birth", "death", "b_cell", "d_cell"] => true,
            _ => return Err(Error::Format(format!("unexpected diagram header `{header}`"))),
        };
        let mut bars = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 2;
            let f: Vec<&str> = line.trim().split(',').collect();
            let parse_err = |m: String| Error::Parse {
                line: lineno,
                message: m,
            };
            if f.len() != cols.len() {
                return Err(parse_err(format!("expected {} fields", cols.len())));
            }
            let dim: u8 = f[0].parse().map_err(|_| parse_err(format!("dim `{}`", f[0])))?;
            let birth: f64 = f[1].parse().map_err(|_| parse_err(format!("birth `{}`", f[1])))?;
            let death: f64 = f[2].parse().map_err(|_| parse_err(format!("death `{}`", f[2])))?;
            let mut bar = Bar::new(dim, birth, death);
            if with_cells {
                let cell = |s: &str| (!s.is_empty()).then(|| s.parse()).transpose();
                bar.birth_cell = cell(f[3])?;
                bar.death_cell = cell(f[4])?;
            }
            bars.push(bar);
        }
        Self::new(bars)
    }
}

fn canonical_order(a: &Bar, b: &Bar) -> std::cmp::Ordering {
    a.dim
        .cmp(&b.dim)
        .then(a.birth.total_cmp(&b.birth))
        .then(a.death.total_cmp(&b.death))
        .then(a.birth_cell.cmp(&b.birth_cell))
        .then(a.death_cell.cmp(&b.death_cell))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiltrationMode {
    Rips,
    Cubical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiltrationSpec {
    pub mode: FiltrationMode,
    pub max_dimension: u8,
    /// Rips truncation; `None` keeps every simplex.
    pub max_scale: Option<f64>,
}

impl FiltrationSpec {
    pub fn rips(max_dimension: u8, max_scale: Option<f64>) -> Self {
        FiltrationSpec {
            mode: FiltrationMode::Rips,
            max_dimension,
            max_scale,
        }
    }

    /// Rips truncated at the diagonal of a `width × height` canvas.
    pub fn rips_for_canvas(max_dimension: u8, width: usize, height: usize) -> Self {
        Self::rips(max_dimension, Some((width as f64).hypot(height as f64)))
    }

    pub fn cubical(max_dimension: u8) -> Self {
        FiltrationSpec {
            mode: FiltrationMode::Cubical,
            max_dimension,
            max_scale: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_dimension > 1 {
            return Err(Error::Parameter(format!(
                "max_dimension {} unsupported (0 or 1)",
                self.max_dimension
            )));
        }
        if let Some(s) = self.max_scale {
            if !(s > 0.0) {
                return Err(Error::Parameter(format!("max_scale must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Betti numbers `β_d(t)` sampled at thresholds, one row per dimension 0 and 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiCurve {
    pub thresholds_len: usize,
    pub beta: [Vec<usize>; 2],
}

/// Counts finite bars with `birth <= t < death`.
pub fn betti_curve(diagram: &PersistenceDiagram, thresholds: &[f64]) -> BettiCurve {
    betti_curve_impl(diagram, thresholds, false)
}

/// As [`betti_curve`], also counting essential classes born at or before `t`.
pub fn betti_curve_with_essential(diagram: &PersistenceDiagram, thresholds: &[f64]) -> BettiCurve {
    betti_curve_impl(diagram, thresholds, true)
}

fn betti_curve_impl(diagram: &PersistenceDiagram, thresholds: &[f64], essential: bool) -> BettiCurve {
    let mut beta = [vec![0; thresholds.len()], vec![0; thresholds.len()]];
    for (k, &t) in thresholds.iter().enumerate() {
        for b in &diagram.bars {
            if b.birth <= t && t < b.death {
                beta[b.dim as usize][k] += 1;
            }
        }
        if essential {
            for &(d, birth) in &diagram.essential {
                if birth <= t {
                    beta[d as usize][k] += 1;
                }
            }
        }
    }
    BettiCurve {
        thresholds_len: thresholds.len(),
        beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betti_interval_membership() {
        let d = PersistenceDiagram::from_pairs(1, &[(1.0, 3.0)]).unwrap();
        let bc = betti_curve(&d, &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(bc.beta[1], vec![0, 1, 1, 0]);
        assert_eq!(bc.beta[0], vec![0, 0, 0, 0]);
        let empty = PersistenceDiagram::default();
        assert_eq!(betti_curve(&empty, &[0.0, 5.0]).beta, [vec![0, 0], vec![0, 0]]);
    }

    #[test]
    fn rejects_inverted_bar() {
        assert!(PersistenceDiagram::from_pairs(0, &[(2.0, 1.0)]).is_err());
        assert!(PersistenceDiagram::from_pairs(0, &[(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn csv_round_trip_with_cells() {
        let mut bar = Bar::new(1, 0.5, 2.25);
        bar.birth_cell = Some(Critical::Edge(3, 7));
        bar.death_cell = Some(Critical::Triangle(1, 2, 5));
        let mut bar2 = Bar::new(0, 0.0, 1.0 / 3.0);
        bar2.birth_cell = Some(Critical::Pixel(12));
        let d = PersistenceDiagram::new(vec![bar, bar2]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, true).unwrap();
        let back = PersistenceDiagram::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn header_only_csv_is_empty() {
        let d = PersistenceDiagram::read_csv("dim,birth,death\n".as_bytes()).unwrap();
        assert!(d.is_empty());
        assert!(PersistenceDiagram::read_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn mixed_dims_detected() {
        let d = PersistenceDiagram::new(vec![Bar::new(0, 0.0, 1.0), Bar::new(1, 1.0, 2.0)]).unwrap();
        assert!(d.single_dim().is_err());
        assert_eq!(d.restrict(1).single_dim().unwrap(), Some(1));
    }
}
