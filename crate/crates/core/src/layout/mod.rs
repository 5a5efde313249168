//! Multi-class cell layouts: point sets on a fixed canvas and their 3×3-footprint rasters.

mod count;
mod io;

pub use count::{
    count_components, count_metrics, count_metrics_with, Connectivity, CountReport, CountSource,
    SampleCounts,
};
pub use io::{load_layout, load_mask_layout, save_layout, sidecar_path, LayoutMeta};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

/// Side length of the square footprint of one rasterized cell.
pub const CELL_SIDE: usize = 3;

/// Pixel area of one rasterized cell.
pub const CELL_AREA: f64 = (CELL_SIDE * CELL_SIDE) as f64;

/// Ordered class names; class ids are the indices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    names: Vec<String>,
}

impl ClassSpec {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Validation("a layout needs at least one class".into()));
        }
        Ok(ClassSpec { names })
    }

    /// Classes named `class0`, `class1`, ...
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("class{i}")).collect())
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, class_id: usize) -> Option<&str> {
        self.names.get(class_id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Cell center in continuous pixel units; `x` is the column axis, `y` the row axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Pixel `(row, col)` holding the footprint center; may sit one past the canvas edge.
    pub fn center_pixel(&self) -> (i64, i64) {
        (self.y.round() as i64, self.x.round() as i64)
    }
}

/// Per-class point sets on a `width × height` canvas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellLayout {
    width: usize,
    height: usize,
    classes: ClassSpec,
    points: Vec<Vec<Point>>,
}

impl CellLayout {
    pub fn empty(width: usize, height: usize, classes: ClassSpec) -> Self {
        let n = classes.n();
        CellLayout {
            width,
            height,
            classes,
            points: vec![Vec::new(); n],
        }
    }

    pub fn from_points(
        width: usize,
        height: usize,
        classes: ClassSpec,
        points: Vec<Vec<Point>>,
    ) -> Result<Self> {
        if points.len() != classes.n() {
            return Err(Error::Validation(format!(
                "{} point sets for {} classes",
                points.len(),
                classes.n()
            )));
        }
        let layout = CellLayout {
            width,
            height,
            classes,
            points,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation("canvas must be non-empty".into()));
        }
        for (class, pts) in self.points.iter().enumerate() {
            for p in pts {
                self.check_point(class, p)?;
            }
        }
        Ok(())
    }

    fn check_point(&self, class: usize, p: &Point) -> Result<()> {
        let inside = p.x.is_finite()
            && p.y.is_finite()
            && p.x >= 0.0
            && p.y >= 0.0
            && p.x < self.width as f64
            && p.y < self.height as f64;
        if inside {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "class {class} point ({}, {}) outside {}x{} canvas",
                p.x, p.y, self.width, self.height
            )))
        }
    }

    pub fn push(&mut self, class: usize, p: Point) -> Result<()> {
        if class >= self.classes.n() {
            return Err(Error::Validation(format!(
                "class id {class} out of range for {} classes",
                self.classes.n()
            )));
        }
        self.check_point(class, &p)?;
        self.points[class].push(p);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> f64 {
        (self.width * self.height) as f64
    }

    pub fn classes(&self) -> &ClassSpec {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.n()
    }

    pub fn class_points(&self, class: usize) -> &[Point] {
        &self.points[class]
    }

    pub fn points(&self) -> &[Vec<Point>] {
        &self.points
    }

    /// Mutable access for optimizers; callers restore the canvas invariant with [`clamp_to_canvas`](Self::clamp_to_canvas).
    pub(crate) fn points_mut(&mut self) -> &mut [Vec<Point>] {
        &mut self.points
    }

    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(Vec::len).collect()
    }

    pub fn total_count(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    /// All points with their class ids, class-major.
    pub fn iter_points(&self) -> impl Iterator<Item = (usize, &Point)> {
        self.points
            .iter()
            .enumerate()
            .flat_map(|(c, pts)| pts.iter().map(move |p| (c, p)))
    }

    pub fn same_frame(&self, other: &CellLayout) -> bool {
        self.width == other.width && self.height == other.height && self.classes == other.classes
    }

    /// Clamps every coordinate into `[0, width-1] × [0, height-1]`.
    pub fn clamp_to_canvas(&mut self) {
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        for p in self.points.iter_mut().flatten() {
            p.x = p.x.clamp(0.0, xmax);
            p.y = p.y.clamp(0.0, ymax);
        }
    }
}

/// In-canvas pixels `(row, col)` of the 3×3 footprint centered at the rounded point.
pub fn footprint(p: &Point, width: usize, height: usize) -> impl Iterator<Item = (usize, usize)> {
    let (cr, cc) = p.center_pixel();
    let half = (CELL_SIDE / 2) as i64;
    let (w, h) = (width as i64, height as i64);
    (cr - half..=cr + half)
        .filter(move |&r| r >= 0 && r < h)
        .flat_map(move |r| {
            (cc - half..=cc + half)
                .filter(move |&c| c >= 0 && c < w)
                .map(move |c| (r as usize, c as usize))
        })
}

/// One binary channel per class.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterLayout {
    width: usize,
    height: usize,
    channels: Vec<BinaryGrid>,
}

impl RasterLayout {
    pub fn from_channels(channels: Vec<BinaryGrid>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::Validation("raster needs at least one channel".into()))?;
        let (width, height) = (first.width(), first.height());
        if channels.iter().any(|c| c.width() != width || c.height() != height) {
            return Err(Error::Validation("raster channels differ in shape".into()));
        }
        Ok(RasterLayout {
            width,
            height,
            channels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, i: usize) -> &BinaryGrid {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[BinaryGrid] {
        &self.channels
    }

    pub fn foreground_counts(&self) -> Vec<usize> {
        self.channels.iter().map(BinaryGrid::count_ones).collect()
    }
}

/// Burns a 3×3 block of ones per cell, clipped at the canvas border.
pub fn rasterize(layout: &CellLayout) -> RasterLayout {
    let channels = layout
        .points()
        .iter()
        .map(|pts| rasterize_points(pts, layout.width(), layout.height()))
        .collect();
    RasterLayout {
        width: layout.width(),
        height: layout.height(),
        channels,
    }
}

pub(crate) fn rasterize_points(points: &[Point], width: usize, height: usize) -> BinaryGrid {
    let mut grid = BinaryGrid::filled(width, height, false);
    for p in points {
        for (r, c) in footprint(p, width, height) {
            grid.set(r, c, true);
        }
    }
    grid
}

/// Pixel-wise union of all channels.
pub fn aggregate(raster: &RasterLayout) -> BinaryGrid {
    let mut out = BinaryGrid::filled(raster.width, raster.height, false);
    for ch in &raster.channels {
        for (o, &v) in out.as_mut_slice().iter_mut().zip(ch.as_slice()) {
            *o |= v;
        }
    }
    out
}
