//! Sublevel-set persistence of a scalar field on a pixel grid.
//!
//! Pixels are vertices; horizontal/vertical neighbour pairs are edges and 2×2
//! blocks are squares, each taking the maximum of its vertex values. Cells are
//! ordered by `(value, dim, lexicographic vertex list)`.
//!
//! H0 comes from union-find over vertices and edges (elder rule). H1 uses
//! Alexander duality: in the reversed filtration, squares plus one outer cell
//! form the vertices of a dual graph whose edges are the primal edges, and each
//! dual merge is a primal H1 pair `(edge, square)`.

use super::{Bar, Critical, FiltrationSpec, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::unionfind::UnionFind;

/// Order-preserving map of an `f64` onto `u64`.
fn sortable_bits(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

struct Cells<'a> {
    w: usize,
    h: usize,
    f: &'a [f64],
}

impl Cells<'_> {
    fn n_hedges(&self) -> usize {
        self.h * (self.w - 1)
    }

    /// Endpoints of edge `e`; horizontal edges come first, then vertical ones.
    fn edge_vertices(&self, e: usize) -> (usize, usize) {
        let nh = self.n_hedges();
        if e < nh {
            let (r, c) = (e / (self.w - 1), e % (self.w - 1));
            let v = r * self.w + c;
            (v, v + 1)
        } else {
            let v = e - nh;
            (v, v + self.w)
        }
    }

    fn n_edges(&self) -> usize {
        self.n_hedges() + (self.h - 1) * self.w
    }

    fn n_squares(&self) -> usize {
        (self.h - 1) * (self.w - 1)
    }

    fn square_vertices(&self, s: usize) -> [usize; 4] {
        let (r, c) = (s / (self.w - 1), s % (self.w - 1));
        let v = r * self.w + c;
        [v, v + 1, v + self.w, v + self.w + 1]
    }

    /// Vertex with the larger `(value, index)` key.
    fn argmax(&self, verts: &[usize]) -> usize {
        *verts
            .iter()
            .max_by(|&&a, &&b| self.f[a].total_cmp(&self.f[b]).then(a.cmp(&b)))
            .unwrap()
    }

    /// Tie-break key within one value: lexicographic on the sorted vertex list.
    /// For edges `(v, v+1)` sorts before `(v, v+w)`, so `2v + vertical` is monotone.
    fn edge_lex(&self, e: usize) -> u64 {
        let (a, b) = self.edge_vertices(e);
        2 * a as u64 + u64::from(b != a + 1)
    }

    /// Adjacent squares of an edge; `outer` stands for the unbounded region.
    fn edge_cofaces(&self, e: usize, outer: usize) -> (usize, usize) {
        let (w, h) = (self.w, self.h);
        let nh = self.n_hedges();
        if e < nh {
            let (r, c) = (e / (w - 1), e % (w - 1));
            let above = if r > 0 { (r - 1) * (w - 1) + c } else { outer };
            let below = if r + 1 < h { r * (w - 1) + c } else { outer };
            (above, below)
        } else {
            let v = e - nh;
            let (r, c) = (v / w, v % w);
            let left = if c > 0 { r * (w - 1) + c - 1 } else { outer };
            let right = if c + 1 < w { r * (w - 1) + c } else { outer };
            (left, right)
        }
    }
}

/// Diagram of the sublevel filtration, dimensions `0..=spec.max_dimension`.
pub fn cubical_sublevel_diagram(
    field: &ScalarField,
    spec: &FiltrationSpec,
) -> Result<PersistenceDiagram> {
    spec.validate()?;
    let dims: Vec<u8> = (0..=spec.max_dimension).collect();
    cubical_diagram_dims(field, &dims)
}

/// Diagram restricted to the requested dimensions (any subset of `{0, 1}`).
pub fn cubical_diagram_dims(field: &ScalarField, dims: &[u8]) -> Result<PersistenceDiagram> {
    if let Some(&d) = dims.iter().find(|&&d| d > 1) {
        return Err(Error::Parameter(format!("unsupported dimension {d}")));
    }
    if field.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("field contains non-finite values".into()));
    }
    if field.is_empty() {
        return Ok(PersistenceDiagram::default());
    }
    let cells = Cells {
        w: field.width(),
        h: field.height(),
        f: field.as_slice(),
    };
    let mut bars = Vec::new();
    let mut essential = Vec::new();
    let edge_value = |e: usize| {
        let (a, b) = cells.edge_vertices(e);
        cells.f[a].max(cells.f[b])
    };
    let edge_keys: Vec<(u64, u64, u32)> = (0..cells.n_edges())
        .map(|e| (sortable_bits(edge_value(e)), cells.edge_lex(e), e as u32))
        .collect();

    if dims.contains(&0) {
        h0_pairs(&cells, &edge_keys, &mut bars, &mut essential);
    }
    if dims.contains(&1) {
        h1_pairs(&cells, &edge_keys, &mut bars);
    }
    PersistenceDiagram::with_essential(bars, essential)
}

fn h0_pairs(
    cells: &Cells,
    edge_keys: &[(u64, u64, u32)],
    bars: &mut Vec<Bar>,
    essential: &mut Vec<(u8, f64)>,
) {
    let n = cells.w * cells.h;
    let vkey = |v: usize| (sortable_bits(cells.f[v]), v);
    let mut edges = edge_keys.to_vec();
    edges.sort_unstable();
    let mut uf = UnionFind::new(n);
    // birth[root] = oldest vertex of the component
    let birth: Vec<usize> = (0..n).collect();
    for &(_, _, e) in &edges {
        let (a, b) = cells.edge_vertices(e as usize);
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        let (elder, younger) = if vkey(birth[ra]) < vkey(birth[rb]) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        let born = birth[younger];
        let crit = cells.argmax(&[a, b]);
        let (bv, dv) = (cells.f[born], cells.f[crit]);
        if dv > bv {
            bars.push(Bar {
                dim: 0,
                birth: bv,
                death: dv,
                birth_cell: Some(Critical::Pixel(born as u32)),
                death_cell: Some(Critical::Pixel(crit as u32)),
            });
        }
        uf.link(younger, elder);
    }
    let root = uf.find(0);
    essential.push((0, cells.f[birth[root]]));
}

fn h1_pairs(cells: &Cells, edge_keys: &[(u64, u64, u32)], bars: &mut Vec<Bar>) {
    if cells.w < 2 || cells.h < 2 {
        return;
    }
    let ns = cells.n_squares();
    let outer = ns;
    let square_value = |s: usize| {
        cells
            .square_vertices(s)
            .iter()
            .map(|&v| cells.f[v])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    // Primal order keys: (value, dim, lex). Reverse iteration gives the dual order.
    let mut order: Vec<(u64, u8, u64, u32)> = edge_keys
        .iter()
        .map(|&(v, lex, e)| (v, 1u8, lex, e))
        .chain((0..ns).map(|s| (sortable_bits(square_value(s)), 2u8, s as u64, s as u32)))
        .collect();
    order.sort_unstable();
    let mut rank = vec![0usize; ns + 1];
    for (pos, k) in order.iter().enumerate() {
        if k.1 == 2 {
            rank[k.3 as usize] = pos;
        }
    }
    rank[outer] = usize::MAX;

    let mut uf = UnionFind::new(ns + 1);
    // birth[root] = latest square of the dual component in primal order
    let birth: Vec<usize> = (0..=ns).collect();
    for k in order.iter().rev() {
        if k.1 != 1 {
            continue;
        }
        let e = k.3 as usize;
        let (sa, sb) = cells.edge_cofaces(e, outer);
        let (ra, rb) = (uf.find(sa), uf.find(sb));
        if ra == rb {
            continue;
        }
        let (elder, younger) = if rank[birth[ra]] > rank[birth[rb]] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        let square = birth[younger];
        let (ea, eb) = cells.edge_vertices(e);
        let bcrit = cells.argmax(&[ea, eb]);
        let dcrit = cells.argmax(&cells.square_vertices(square));
        let (bv, dv) = (cells.f[bcrit], cells.f[dcrit]);
        if dv > bv {
            bars.push(Bar {
                dim: 1,
                birth: bv,
                death: dv,
                birth_cell: Some(Critical::Pixel(bcrit as u32)),
                death_cell: Some(Critical::Pixel(dcrit as u32)),
            });
        }
        uf.link(younger, elder);
    }
}
