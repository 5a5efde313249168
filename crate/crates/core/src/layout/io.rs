//! CSV + JSON sidecar interchange for layouts, and per-class mask images.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CellLayout, ClassSpec, Point, RasterLayout};
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

/// Contents of the `<stem>.json` sidecar next to a layout CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutMeta {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<String>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<CellLayout> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta_path = sidecar_path(path);
    let meta_text = match fs::read_to_string(&meta_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Format(format!(
                "missing sidecar {} for {}",
                meta_path.display(),
                path.display()
            )))
        }
        Err(e) => return Err(Error::io(&meta_path, e)),
    };
    let meta: LayoutMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Format(format!("sidecar {}: {e}", meta_path.display())))?;
    parse_layout_csv(&text, meta)
}

fn parse_layout_csv(text: &str, meta: LayoutMeta) -> Result<CellLayout> {
    let classes = ClassSpec::new(meta.classes)?;
    let mut layout = CellLayout::empty(meta.width, meta.height, classes);
    layout.validate()?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("layout header: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != ["class", "x", "y"] {
        return Err(Error::Format(format!(
            "expected header `class,x,y`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let class: usize = field(0).parse().map_err(|_| Error::Parse {
            line,
            message: format!("class `{}` is not a non-negative integer", field(0)),
        })?;
        let coord = |i: usize, name: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("{name} `{}` is not a number", field(i)),
            })
        };
        let p = Point::new(coord(1, "x")?, coord(2, "y")?);
        layout.push(class, p)?;
    }
    Ok(layout)
}

/// Writes `path` (CSV) and its sidecar. Coordinates use shortest round-trip formatting.
pub fn save_layout(layout: &CellLayout, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("class,x,y\n");
    for (class, p) in layout.iter_points() {
        out.push_str(&format!("{class},{:?},{:?}\n", p.x, p.y));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let meta = LayoutMeta {
        width: layout.width(),
        height: layout.height(),
        classes: layout.classes().names().to_vec(),
    };
    let meta_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))
}

/// Reads one grayscale image per class; pixels `>= 128` are foreground.
pub fn load_mask_layout<P: AsRef<Path>>(paths: &[P]) -> Result<RasterLayout> {
    let channels = paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let img = image::open(p).map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(p, io),
                other => Error::Format(format!("{}: {other}", p.display())),
            })?;
            let gray = img.to_luma8();
            let (w, h) = gray.dimensions();
            Ok(BinaryGrid::from_fn(w as usize, h as usize, |r, c| {
                gray.get_pixel(c as u32, r as u32).0[0] >= 128
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    RasterLayout::from_channels(channels)
}
