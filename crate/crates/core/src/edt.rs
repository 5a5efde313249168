//! Exact Euclidean distance transform with nearest-site tracking.
//!
//! The transform is the separable lower-envelope construction: a column pass
//! finds the nearest foreground row in each column, then a row pass takes the
//! lower envelope of the parabolas `g(c')² + (q - c')²`. Breakpoints between
//! parabolas are kept as exact rationals so that sites tying at a pixel are all
//! visible, and the lexicographically smallest `(row, col)` site wins.
//!
//! [`PointDistanceField`] lifts the grid transform to cell points: every
//! footprint pixel translates rigidly with its owning cell, which makes field
//! values (and everything computed from them) differentiable in the sub-pixel
//! cell coordinates.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Grid, ScalarField};
use crate::layout::{footprint, Point};

/// Per-pixel linear index (`row * width + col`) of the nearest foreground pixel.
pub type NearestSiteMap = Grid<u32>;

const NO_ROW: u32 = u32::MAX;

/// Exact rational `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug)]
struct Ratio {
    num: i64,
    den: i64,
}

impl Ratio {
    const NEG_INF: Ratio = Ratio { num: -1, den: 0 };

    fn int(v: i64) -> Ratio {
        Ratio { num: v, den: 1 }
    }

    fn cmp(&self, other: &Ratio) -> Ordering {
        match (self.den, other.den) {
            (0, 0) => self.num.cmp(&other.num),
            (0, _) => self.num.cmp(&0),
            (_, 0) => 0.cmp(&other.num),
            _ => (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128)),
        }
    }
}

/// Exact distances and nearest sites. Errors on an all-background grid.
pub fn exact_edt(grid: &BinaryGrid) -> Result<(ScalarField, NearestSiteMap)> {
    let (w, h) = (grid.width(), grid.height());
    if grid.count_ones() == 0 {
        return Err(Error::EmptyForeground);
    }

    // Column pass: nearest foreground row per (r, c); ties go to the upper row.
    let mut site_row = vec![NO_ROW; w * h];
    let mut col_sq = vec![0i64; w * h];
    let px = grid.as_slice();
    let mut above = vec![NO_ROW; h];
    for c in 0..w {
        let mut last = NO_ROW;
        for r in 0..h {
            if px[r * w + c] {
                last = r as u32;
            }
            above[r] = last;
        }
        let mut below = NO_ROW;
        for r in (0..h).rev() {
            if px[r * w + c] {
                below = r as u32;
            }
            let pick = match (above[r], below) {
                (NO_ROW, NO_ROW) => NO_ROW,
                (a, NO_ROW) => a,
                (NO_ROW, b) => b,
                (a, b) => {
                    if r as u32 - a <= b - r as u32 {
                        a
                    } else {
                        b
                    }
                }
            };
            let i = r * w + c;
            site_row[i] = pick;
            if pick != NO_ROW {
                let d = r as i64 - pick as i64;
                col_sq[i] = d * d;
            }
        }
    }

    let mut dist = vec![0.0f64; w * h];
    let mut sites = vec![0u32; w * h];
    let mut envelope: Vec<usize> = Vec::with_capacity(w);
    let mut breaks: Vec<Ratio> = Vec::with_capacity(w + 1);
    for r in 0..h {
        let row = r * w;
        let f = |c: usize| col_sq[row + c];
        envelope.clear();
        breaks.clear();
        for c in 0..w {
            if site_row[row + c] == NO_ROW {
                continue;
            }
            loop {
                let Some(&top) = envelope.last() else {
                    envelope.push(c);
                    breaks.push(Ratio::NEG_INF);
                    break;
                };
                let s = intersection(top, f(top), c, f(c));
                // Strict: a parabola touching the envelope at a single point is kept.
                if s.cmp(breaks.last().unwrap()) == Ordering::Less {
                    envelope.pop();
                    breaks.pop();
                } else {
                    envelope.push(c);
                    breaks.push(s);
                    break;
                }
            }
        }
        let value = |k: usize, q: usize| {
            let c = envelope[k];
            let d = q as i64 - c as i64;
            f(c) + d * d
        };
        let site_key = |k: usize| (site_row[row + envelope[k]], envelope[k]);
        let mut k = 0;
        for q in 0..w {
            let qr = Ratio::int(q as i64);
            while k + 1 < envelope.len() && breaks[k + 1].cmp(&qr) == Ordering::Less {
                k += 1;
            }
            let best = value(k, q);
            let mut chosen = k;
            let mut j = k;
            while j > 0 && value(j - 1, q) == best {
                j -= 1;
                if site_key(j) < site_key(chosen) {
                    chosen = j;
                }
            }
            let mut j = k;
            while j + 1 < envelope.len() && value(j + 1, q) == best {
                j += 1;
                if site_key(j) < site_key(chosen) {
                    chosen = j;
                }
            }
            let (sr, sc) = site_key(chosen);
            dist[row + q] = (best as f64).sqrt();
            sites[row + q] = sr * w as u32 + sc as u32;
        }
    }
    Ok((Grid::from_vec(w, h, dist), Grid::from_vec(w, h, sites)))
}

fn intersection(a: usize, fa: i64, b: usize, fb: i64) -> Ratio {
    let (a, b) = (a as i64, b as i64);
    Ratio {
        num: (fb + b * b) - (fa + a * a),
        den: 2 * (b - a),
    }
}

/// Which pixels of a cell act as distance sources.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteModel {
    /// Every pixel of the 3×3 footprint.
    #[default]
    Footprint,
    /// Only the rounded center pixel.
    Center,
}

/// Distance field of a point set whose sources move with the sub-pixel point positions.
///
/// At integer coordinates `values` equals [`exact_edt`] of the rasterized points.
/// Elsewhere each background pixel keeps its grid nearest site, displaced by the
/// owning point's offset from its rounded position. Foreground pixels stay at 0.
#[derive(Clone, Debug)]
pub struct PointDistanceField {
    pub values: ScalarField,
    pub sites: NearestSiteMap,
    /// Point index owning each source pixel; `u32::MAX` elsewhere.
    owners: Vec<u32>,
    shifts: Vec<(f64, f64)>,
    foreground: BinaryGrid,
}

/// `∂D(pixel)/∂p` for the single point that owns the pixel's nearest site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointGradient {
    /// Gradient `(∂/∂x, ∂/∂y)` attributed to point `index`.
    Point { index: usize, grad: [f64; 2] },
    /// Pixel is a source (distance 0); no gradient is attributed.
    NonDifferentiable,
}

impl PointDistanceField {
    pub fn new(points: &[Point], width: usize, height: usize, model: SiteModel) -> Result<Self> {
        let mut owners = vec![u32::MAX; width * height];
        let mut foreground = BinaryGrid::filled(width, height, false);
        for (i, p) in points.iter().enumerate() {
            let mut claim = |r: usize, c: usize| {
                let idx = r * width + c;
                // On overlap the point centered closest to the pixel owns it, then the
                // smaller (x, y); never the input order, so relabeling cannot move sites.
                let key = |q: &Point| ((q.x - c as f64).hypot(q.y - r as f64), q.x, q.y);
                let take = owners[idx] == u32::MAX || {
                    let (a, b) = (key(p), key(&points[owners[idx] as usize]));
                    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)).is_lt()
                };
                if take {
                    owners[idx] = i as u32;
                }
                foreground.set(r, c, true);
            };
            match model {
                SiteModel::Footprint => footprint(p, width, height).for_each(|(r, c)| claim(r, c)),
                SiteModel::Center => {
                    let (r, c) = p.center_pixel();
                    let r = r.clamp(0, height as i64 - 1) as usize;
                    let c = c.clamp(0, width as i64 - 1) as usize;
                    claim(r, c);
                }
            }
        }
        let (grid_dist, sites) = exact_edt(&foreground)?;
        let shifts: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.x - p.x.round(), p.y - p.y.round()))
            .collect();
        let mut values = grid_dist;
        for (i, v) in values.as_mut_slice().iter_mut().enumerate() {
            if foreground.as_slice()[i] {
                *v = 0.0;
                continue;
            }
            let (dx, dy) = displacement(i, sites.as_slice()[i], width, &owners, &shifts);
            *v = dx.hypot(dy);
        }
        Ok(PointDistanceField {
            values,
            sites,
            owners,
            shifts,
            foreground,
        })
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn is_source(&self, pixel: usize) -> bool {
        self.foreground.as_slice()[pixel]
    }

    /// Index of the point whose footprint holds the nearest site of `pixel`.
    pub fn owner_of(&self, pixel: usize) -> usize {
        self.owners[self.sites.as_slice()[pixel] as usize] as usize
    }

    pub fn gradient_at(&self, pixel: usize) -> PointGradient {
        edt_point_gradient(self, pixel)
    }
}

/// Vector from the displaced site to the pixel, `(x, y)` order.
fn displacement(
    pixel: usize,
    site: u32,
    width: usize,
    owners: &[u32],
    shifts: &[(f64, f64)],
) -> (f64, f64) {
    let site = site as usize;
    let (sx, sy) = ((site % width) as f64, (site / width) as f64);
    let (px, py) = ((pixel % width) as f64, (pixel / width) as f64);
    let (ox, oy) = shifts[owners[site] as usize];
    (px - sx - ox, py - sy - oy)
}

/// Gradient of the field value at `pixel` with respect to the owning point.
/// Equals minus the unit vector pointing from the (displaced) nearest site to the pixel.
pub fn edt_point_gradient(field: &PointDistanceField, pixel: usize) -> PointGradient {
    if field.is_source(pixel) {
        return PointGradient::NonDifferentiable;
    }
    let w = field.width();
    let (dx, dy) = displacement(
        pixel,
        field.sites.as_slice()[pixel],
        w,
        &field.owners,
        &field.shifts,
    );
    let norm = dx.hypot(dy);
    if norm == 0.0 {
        return PointGradient::NonDifferentiable;
    }
    PointGradient::Point {
        index: field.owner_of(pixel),
        grad: [-dx / norm, -dy / norm],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_from(rows: &[&str]) -> BinaryGrid {
        let h = rows.len();
        let w = rows[0].len();
        BinaryGrid::from_fn(w, h, |r, c| rows[r].as_bytes()[c] == b'#')
    }

    #[test]
    fn single_site_distances() {
        let g = grid_from(&["...", ".#.", "..."]);
        let (d, s) = exact_edt(&g).unwrap();
        assert_eq!(*d.get(1, 1), 0.0);
        assert_eq!(*d.get(0, 1), 1.0);
        assert_eq!(*d.get(1, 2), 1.0);
        assert_eq!(*d.get(0, 0), 2f64.sqrt());
        assert_eq!(*d.get(2, 2), 2f64.sqrt());
        assert!(s.as_slice().iter().all(|&v| v == 4));
    }

    #[test]
    fn all_foreground_is_zero() {
        let g = BinaryGrid::filled(5, 4, true);
        let (d, s) = exact_edt(&g).unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0));
        assert!(s.as_slice().iter().enumerate().all(|(i, &v)| v as usize == i));
    }

    #[test]
    fn empty_grid_errors() {
        let g = BinaryGrid::filled(4, 4, false);
        assert!(matches!(exact_edt(&g), Err(Error::EmptyForeground)));
    }

    #[test]
    fn ties_pick_smallest_row_then_col() {
        // Pixel (2,2) is at distance 2 from (0,2), (2,0), (2,4), (4,2).
        let g = grid_from(&["..#..", ".....", "#...#", ".....", "..#.."]);
        let (d, s) = exact_edt(&g).unwrap();
        assert_eq!(*d.get(2, 2), 2.0);
        assert_eq!(*s.get(2, 2), 2);
        // (1,1) ties between (0,2) and (2,0) at sqrt(2); (0,2) is smaller.
        assert_eq!(*s.get(1, 1), 2);
        // (3,3) ties between (2,4) and (4,2); (2,4) has the smaller row.
        assert_eq!(*s.get(3, 3), 14);
    }

    #[test]
    fn gradient_on_collinear_pixel() {
        let f = PointDistanceField::new(&[Point::new(0.0, 0.0)], 8, 8, SiteModel::Footprint)
            .unwrap();
        // pixel x=5, y=0; nearest footprint pixel is x=1, y=0
        let pix = 5;
        assert_eq!(*f.values.get(0, 5), 4.0);
        match f.gradient_at(pix) {
            PointGradient::Point { index, grad } => {
                assert_eq!(index, 0);
                assert_eq!(grad, [-1.0, 0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(f.gradient_at(0), PointGradient::NonDifferentiable);
    }

    #[test]
    fn equidistant_pixel_goes_to_tie_winner() {
        let pts = [Point::new(2.0, 5.0), Point::new(8.0, 5.0)];
        let f = PointDistanceField::new(&pts, 11, 11, SiteModel::Center).unwrap();
        // Pixel (row 5, col 5) is 3 px from both centers; site (5,2) has the smaller linear index.
        let pix = 5 * 11 + 5;
        match f.gradient_at(pix) {
            PointGradient::Point { index, grad } => {
                assert_eq!(index, 0);
                assert_eq!(grad, [-1.0, 0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integer_points_reproduce_grid_transform() {
        let pts = [Point::new(3.0, 4.0), Point::new(10.0, 12.0), Point::new(11.0, 13.0)];
        let f = PointDistanceField::new(&pts, 16, 16, SiteModel::Footprint).unwrap();
        let raster = crate::layout::rasterize_points(&pts, 16, 16);
        let (d, _) = exact_edt(&raster).unwrap();
        assert_eq!(f.values, d);
    }
}
