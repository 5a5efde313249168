//! Vietoris–Rips persistence of planar point clouds.

use super::reduction::{reduce, FilteredComplex};
use super::{Bar, Critical, FiltrationSpec, PersistenceDiagram};
use crate::error::Result;
use crate::layout::Point;

#[derive(Clone, Copy)]
struct Simplex {
    value: f64,
    dim: u8,
    verts: [u32; 3],
}

impl Simplex {
    fn vertices(&self) -> &[u32] {
        &self.verts[..=self.dim as usize]
    }

    fn critical(&self) -> Critical {
        let v = self.verts;
        match self.dim {
            0 => Critical::Vertex(v[0]),
            1 => Critical::Edge(v[0], v[1]),
            _ => Critical::Triangle(v[0], v[1], v[2]),
        }
    }
}

/// H0 (and H1 when `spec.max_dimension == 1`) of the Rips filtration with edge
/// value = Euclidean distance. Simplices sharing a value are ordered by dimension,
/// then lexicographically by vertex indices.
pub fn rips_diagram(points: &[Point], spec: &FiltrationSpec) -> Result<PersistenceDiagram> {
    spec.validate()?;
    let n = points.len();
    if n == 0 {
        return Ok(PersistenceDiagram::default());
    }
    let limit = spec.max_scale.unwrap_or(f64::INFINITY);
    let dist = |a: usize, b: usize| points[a].distance(&points[b]);

    let mut simplices: Vec<Simplex> = (0..n as u32)
        .map(|v| Simplex {
            value: 0.0,
            dim: 0,
            verts: [v, 0, 0],
        })
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            let d = dist(a, b);
            if d <= limit {
                simplices.push(Simplex {
                    value: d,
                    dim: 1,
                    verts: [a as u32, b as u32, 0],
                });
            }
        }
    }
    if spec.max_dimension >= 1 {
        for a in 0..n {
            for b in a + 1..n {
                let ab = dist(a, b);
                if ab > limit {
                    continue;
                }
                for c in b + 1..n {
                    let diam = ab.max(dist(a, c)).max(dist(b, c));
                    if diam <= limit {
                        simplices.push(Simplex {
                            value: diam,
                            dim: 2,
                            verts: [a as u32, b as u32, c as u32],
                        });
                    }
                }
            }
        }
    }
    simplices.sort_by(|x, y| {
        x.value
            .total_cmp(&y.value)
            .then(x.dim.cmp(&y.dim))
            .then_with(|| x.vertices().cmp(y.vertices()))
    });

    // Position of every edge in the filtration, for building triangle boundaries.
    let mut edge_pos = vec![u32::MAX; n * n];
    for (pos, s) in simplices.iter().enumerate() {
        if s.dim == 1 {
            edge_pos[s.verts[0] as usize * n + s.verts[1] as usize] = pos as u32;
        }
    }
    let mut vertex_pos = vec![0u32; n];
    for (pos, s) in simplices.iter().enumerate() {
        if s.dim == 0 {
            vertex_pos[s.verts[0] as usize] = pos as u32;
        }
    }
    let boundary = simplices
        .iter()
        .map(|s| {
            let v = s.verts;
            let mut col = match s.dim {
                0 => vec![],
                1 => vec![vertex_pos[v[0] as usize], vertex_pos[v[1] as usize]],
                _ => {
                    let e = |a: u32, b: u32| edge_pos[a as usize * n + b as usize];
                    vec![e(v[0], v[1]), e(v[0], v[2]), e(v[1], v[2])]
                }
            };
            col.sort_unstable();
            col
        })
        .collect();
    let complex = FilteredComplex {
        dims: simplices.iter().map(|s| s.dim).collect(),
        boundary,
    };
    let pairing = reduce(&complex);

    let mut bars = Vec::new();
    for &(b, d) in &pairing.pairs {
        let (sb, sd) = (&simplices[b], &simplices[d]);
        if sb.dim > spec.max_dimension || sd.value <= sb.value {
            continue;
        }
        bars.push(Bar {
            dim: sb.dim,
            birth: sb.value,
            death: sd.value,
            birth_cell: Some(sb.critical()),
            death_cell: Some(sd.critical()),
        });
    }
    let essential = pairing
        .essential
        .iter()
        .map(|&j| &simplices[j])
        .filter(|s| s.dim <= spec.max_dimension)
        .map(|s| (s.dim, s.value))
        .collect();
    PersistenceDiagram::with_essential(bars, essential)
}
