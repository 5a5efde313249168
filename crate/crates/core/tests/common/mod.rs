//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use topocell::layout::Point;

/// Finite pairs `(dim, birth, death)` with positive persistence, plus essential `(dim, birth)`.
#[derive(Debug, Clone)]
pub struct NaiveDiagram {
    pub finite: Vec<(u8, f64, f64)>,
    pub essential: Vec<(u8, f64)>,
}

/// Textbook column reduction without clearing or twists on a list of
/// `(value, dim, boundary)` cells, sorted by `(value, dim, input order)`.
pub fn naive_persistence(cells: &[(f64, u8, Vec<usize>)]) -> NaiveDiagram {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        cells[a]
            .0
            .partial_cmp(&cells[b].0)
            .unwrap()
            .then(cells[a].1.cmp(&cells[b].1))
            .then(a.cmp(&b))
    });
    let mut pos = vec![0; cells.len()];
    for (k, &c) in order.iter().enumerate() {
        pos[c] = k;
    }
    let mut columns: Vec<Vec<usize>> = order
        .iter()
        .map(|&c| {
            let mut col: Vec<usize> = cells[c].2.iter().map(|&f| pos[f]).collect();
            col.sort_unstable();
            col
        })
        .collect();
    let mut low_owner: BTreeMap<usize, usize> = BTreeMap::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match low_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    columns[j] = symmetric_difference(&columns[j], &other);
                }
                None => {
                    low_owner.insert(low, j);
                    break;
                }
            }
        }
    }
    let mut paired = vec![false; columns.len()];
    let mut finite = Vec::new();
    for (&low, &j) in &low_owner {
        paired[low] = true;
        paired[j] = true;
        let (b, d) = (cells[order[low]].0, cells[order[j]].0);
        if d > b {
            finite.push((cells[order[low]].1, b, d));
        }
    }
    let essential = (0..columns.len())
        .filter(|&k| !paired[k] && columns[k].is_empty())
        .map(|k| (cells[order[k]].1, cells[order[k]].0))
        .collect();
    NaiveDiagram { finite, essential }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// Full Vietoris–Rips complex up to triangles.
pub fn rips_cells(points: &[Point]) -> Vec<(f64, u8, Vec<usize>)> {
    let n = points.len();
    let mut cells: Vec<(f64, u8, Vec<usize>)> = (0..n).map(|_| (0.0, 0, vec![])).collect();
    let mut edge_id = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            edge_id.insert((i, j), cells.len());
            cells.push((points[i].distance(&points[j]), 1, vec![i, j]));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let e = [edge_id[&(i, j)], edge_id[&(i, k)], edge_id[&(j, k)]];
                let v = e.iter().map(|&x| cells[x].0).fold(0.0, f64::max);
                cells.push((v, 2, e.to_vec()));
            }
        }
    }
    cells
}

/// Cubical complex of a `w × h` vertex grid: pixels, 4-neighbor edges and unit squares.
pub fn cubical_cells(values: &[f64], w: usize, h: usize) -> Vec<(f64, u8, Vec<usize>)> {
    let mut cells: Vec<(f64, u8, Vec<usize>)> = values.iter().map(|&v| (v, 0, vec![])).collect();
    let mut hedge = BTreeMap::new();
    let mut vedge = BTreeMap::new();
    for r in 0..h {
        for c in 0..w {
            let a = r * w + c;
            if c + 1 < w {
                hedge.insert((r, c), cells.len());
                cells.push((values[a].max(values[a + 1]), 1, vec![a, a + 1]));
            }
            if r + 1 < h {
                vedge.insert((r, c), cells.len());
                cells.push((values[a].max(values[a + w]), 1, vec![a, a + w]));
            }
        }
    }
    for r in 0..h.saturating_sub(1) {
        for c in 0..w.saturating_sub(1) {
            let b = vec![hedge[&(r, c)], hedge[&(r + 1, c)], vedge[&(r, c)], vedge[&(r, c + 1)]];
            let v = b.iter().map(|&x| cells[x].0).fold(f64::NEG_INFINITY, f64::max);
            cells.push((v, 2, b));
        }
    }
    cells
}

/// Sorted `(dim, birth, death)` triples for comparison.
pub fn sorted_pairs(mut v: Vec<(u8, f64, f64)>) -> Vec<(u8, f64, f64)> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Kruskal MST edge lengths with a simple union-find.
pub fn mst_lengths(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((points[i].distance(&points[j]), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut out = Vec::new();
    for (d, i, j) in edges {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        if a != b {
            parent[a] = b;
            out.push(d);
        }
    }
    out
}

pub fn random_points(rng: &mut impl Rng, n: usize, side: f64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect()
}

/// Minimum over every partial injection `A → B` of the `p`-th power cost, with
/// unmatched points paying their diagonal distance.
pub fn brute_wasserstein_cost(a: &[[f64; 2]], b: &[[f64; 2]], p: f64) -> f64 {
    let diag = |q: [f64; 2]| ((q[1] - q[0]).abs() / std::f64::consts::SQRT_2).powf(p);
    let dist = |x: [f64; 2], y: [f64; 2]| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt().powf(p);
    fn rec(
        i: usize,
        a: &[[f64; 2]],
        b: &[[f64; 2]],
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
        diag: &dyn Fn([f64; 2]) -> f64,
        dist: &dyn Fn([f64; 2], [f64; 2]) -> f64,
    ) {
        if i == a.len() {
            let rest: f64 = b.iter().zip(used.iter()).filter(|(_, u)| !**u).map(|(q, _)| diag(*q)).sum();
            *best = best.min(acc + rest);
            return;
        }
        rec(i + 1, a, b, used, acc + diag(a[i]), best, diag, dist);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(i + 1, a, b, used, acc + dist(a[i], b[j]), best, diag, dist);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, a, b, &mut vec![false; b.len()], 0.0, &mut best, &diag, &dist);
    best
}

/// EDT by exhaustive search over all foreground pixels.
pub fn brute_edt(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
    let fg: Vec<(f64, f64)> = (0..w * h)
        .filter(|&i| mask[i])
        .map(|i| ((i / w) as f64, (i % w) as f64))
        .collect();
    (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            fg.iter()
                .map(|&(a, b)| ((r - a).powi(2) + (c - b).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Connected components by breadth-first flood fill.
pub fn flood_components(mask: &[bool], w: usize, h: usize, eight: bool) -> usize {
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for s in 0..w * h {
        if !mask[s] || seen[s] {
            continue;
        }
        count += 1;
        let mut queue = std::collections::VecDeque::from([s]);
        seen[s] = true;
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / w) as i64, (i % w) as i64);
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        continue;
                    }
                    let j = nr as usize * w + nc as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    count
}

/// Global minimum of `Σ_i W_2²(X_i, Y)` over all diagrams `Y`.
///
/// Every candidate `Y` induces a grouping of input points (at most one per
/// diagram per group, the rest sent to the diagonal). For a fixed grouping the
/// optimal group point has closed form in rotated coordinates `u = (b+d)/√2`,
/// `v = (d−b)/√2`: `u` is the group mean and `v = Σ v_x / N`.
pub fn brute_barycenter_objective(diagrams: &[Vec<[f64; 2]>]) -> f64 {
    let n_dgm = diagrams.len() as f64;
    let pts: Vec<(usize, f64, f64)> = diagrams
        .iter()
        .enumerate()
        .flat_map(|(i, d)| {
            d.iter().map(move |q| {
                let s = std::f64::consts::SQRT_2;
                (i, (q[0] + q[1]) / s, (q[1] - q[0]) / s)
            })
        })
        .collect();
    fn group_cost(g: &[(usize, f64, f64)], n_dgm: f64) -> f64 {
        let k = g.len() as f64;
        let ubar = g.iter().map(|p| p.1).sum::<f64>() / k;
        let vstar = g.iter().map(|p| p.2).sum::<f64>() / n_dgm;
        g.iter().map(|p| (p.1 - ubar).powi(2) + (p.2 - vstar).powi(2)).sum::<f64>() + (n_dgm - k) * vstar * vstar
    }
    fn rec(
        i: usize,
        pts: &[(usize, f64, f64)],
        groups: &mut Vec<Vec<(usize, f64, f64)>>,
        diag: f64,
        best: &mut f64,
        n_dgm: f64,
    ) {
        if i == pts.len() {
            let total = diag + groups.iter().map(|g| group_cost(g, n_dgm)).sum::<f64>();
            *best = best.min(total);
            return;
        }
        let p = pts[i];
        rec(i + 1, pts, groups, diag + p.2 * p.2, best, n_dgm);
        for gi in 0..groups.len() {
            if groups[gi].iter().all(|q| q.0 != p.0) {
                groups[gi].push(p);
                rec(i + 1, pts, groups, diag, best, n_dgm);
                groups[gi].pop();
            }
        }
        groups.push(vec![p]);
        rec(i + 1, pts, groups, diag, best, n_dgm);
        groups.pop();
    }
    let mut best = f64::INFINITY;
    rec(0, &pts, &mut Vec::new(), 0.0, &mut best, n_dgm);
    best
}

/// Double-double number for the extended-precision eigen oracle.
#[derive(Clone, Copy, Debug)]
pub struct Dd(pub f64, pub f64);

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd(x, 0.0)
    }
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }
    fn quick(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd(s, b - (s - a))
    }
    pub fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.0, o.0);
        let t = Dd::two_sum(self.1, o.1);
        let s = Dd::quick(s.0, s.1 + t.0);
        Dd::quick(s.0, s.1 + t.1)
    }
    pub fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }
    pub fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        Dd::quick(p, e + (self.0 * o.1 + self.1 * o.0))
    }
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.0 / o.0;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.0 / o.0;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.0 / o.0;
        Dd::quick(q1, q2).add(Dd::from(q3))
    }
    pub fn sqrt(self) -> Dd {
        if self.0 <= 0.0 {
            return Dd::from(0.0);
        }
        let x = Dd::from(self.0.sqrt());
        // One Newton step doubles the precision.
        x.add(self.div(x)).mul(Dd::from(0.5))
    }
    pub fn abs(self) -> Dd {
        if self.0 < 0.0 {
            self.neg()
        } else {
            self
        }
    }
}

type DdMat = Vec<Vec<Dd>>;

fn dd_matmul(a: &DdMat, b: &DdMat) -> DdMat {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Dd::from(0.0), |acc, k| acc.add(a[i][k].mul(b[k][j]))))
                .collect()
        })
        .collect()
}

fn dd_transpose(a: &DdMat) -> DdMat {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect()
}

/// Cyclic Jacobi eigendecomposition in double-double: returns `(eigenvalues, V)` with `A = V Λ Vᵀ`.
pub fn dd_jacobi(a: &DdMat) -> (Vec<Dd>, DdMat) {
    let n = a.len();
    let mut m = a.clone();
    let mut v: DdMat = (0..n)
        .map(|i| (0..n).map(|j| Dd::from(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for _sweep in 0..60 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j].0.abs()).sum();
        let scale: f64 = (0..n).map(|i| m[i][i].0.abs()).sum::<f64>().max(1e-300);
        if off <= 1e-32 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let tiny = 1e-40 * (m[p][p].0.abs() + m[q][q].0.abs());
                if m[p][q].0.abs() <= tiny {
                    m[p][q] = Dd::from(0.0);
                    m[q][p] = Dd::from(0.0);
                    continue;
                }
                let two = Dd::from(2.0);
                let theta = m[q][q].sub(m[p][p]).div(two.mul(m[p][q]));
                let sign = if theta.0 >= 0.0 { 1.0 } else { -1.0 };
                let t = if theta.0.abs() > 1e30 {
                    Dd::from(1.0).div(two.mul(theta))
                } else {
                    Dd::from(sign).div(theta.abs().add(theta.mul(theta).add(Dd::from(1.0)).sqrt()))
                };
                let c = Dd::from(1.0).div(t.mul(t).add(Dd::from(1.0)).sqrt());
                let s = t.mul(c);
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c.mul(mkp).sub(s.mul(mkq));
                    m[k][q] = s.mul(mkp).add(c.mul(mkq));
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c.mul(mpk).sub(s.mul(mqk));
                    m[q][k] = s.mul(mpk).add(c.mul(mqk));
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c.mul(vkp).sub(s.mul(vkq));
                    v[k][q] = s.mul(vkp).add(c.mul(vkq));
                }
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

/// Fréchet distance between Gaussians evaluated in double-double arithmetic.
pub fn dd_frechet(mu_a: &[f64], cov_a: &[f64], mu_b: &[f64], cov_b: &[f64]) -> f64 {
    let n = mu_a.len();
    let mat = |c: &[f64]| -> DdMat { (0..n).map(|i| (0..n).map(|j| Dd::from(c[i * n + j])).collect()).collect() };
    let (a, b) = (mat(cov_a), mat(cov_b));
    let (la, va) = dd_jacobi(&a);
    let diag: DdMat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { la[i].sqrt() } else { Dd::from(0.0) }).collect())
        .collect();
    let ra = dd_matmul(&dd_matmul(&va, &diag), &dd_transpose(&va));
    let s = dd_matmul(&dd_matmul(&ra, &b), &ra);
    let (ls, _) = dd_jacobi(&s);
    let mut total = Dd::from(0.0);
    for i in 0..n {
        let d = Dd::from(mu_a[i]).sub(Dd::from(mu_b[i]));
        total = total.add(d.mul(d)).add(a[i][i]).add(b[i][i]);
    }
    for l in ls {
        total = total.sub(Dd::from(2.0).mul(l.sqrt()));
    }
    total.0 + total.1
}

/// Random symmetric positive-semidefinite matrix `G Gᵀ` with the given rank.
pub fn random_psd(rng: &mut impl Rng, d: usize, rank: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..d * rank).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..rank).map(|k| g[i * rank + k] * g[j * rank + k]).sum();
        }
    }
    out
}
