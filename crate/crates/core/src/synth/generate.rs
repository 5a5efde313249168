use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{CellLayout, ClassSpec, Point};
use crate::rng::stream_rng;

/// Attempts per point before rejection sampling gives up.
const MAX_TRIES: usize = 10_000;

/// Per-class size of a Poisson pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassCount {
    /// Exactly this many points (binomial process).
    Exact(usize),
    /// Points per square pixel; the count is Poisson distributed.
    Intensity(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub class: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub points: usize,
    /// Standard deviation of the isotropic Gaussian jitter, px.
    pub jitter: f64,
    /// Angle of the first point, radians.
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Poisson {
        counts: Vec<ClassCount>,
        /// Minimum distance between any two points of the layout.
        #[serde(default)]
        min_separation: f64,
    },
    MaternCluster {
        /// Parents per square pixel, per class.
        parent_intensity: f64,
        cluster_radius: f64,
        mean_offspring: f64,
    },
    RingScene {
        rings: Vec<RingSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointProcessSpec {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub process: ProcessKind,
    pub seed: u64,
}

impl PointProcessSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.width == 0 || self.height == 0 || self.classes == 0 {
            return bad("canvas and class count must be non-zero".into());
        }
        match &self.process {
            ProcessKind::Poisson { counts, min_separation } => {
                if counts.len() != self.classes {
                    return bad(format!("{} counts for {} classes", counts.len(), self.classes));
                }
                if counts.iter().any(|c| matches!(c, ClassCount::Intensity(l) if !(*l >= 0.0) || !l.is_finite())) {
                    return bad("intensities must be finite and >= 0".into());
                }
                if !(*min_separation >= 0.0) || !min_separation.is_finite() {
                    return bad("min_separation must be >= 0".into());
                }
            }
            ProcessKind::MaternCluster {
                parent_intensity,
                cluster_radius,
                mean_offspring,
            } => {
                if !(*parent_intensity >= 0.0) || !(*mean_offspring >= 0.0) || !(*cluster_radius > 0.0) {
                    return bad("Matern parameters need intensity >= 0, offspring >= 0, radius > 0".into());
                }
            }
            ProcessKind::RingScene { rings } => {
                for r in rings {
                    if r.class >= self.classes {
                        return bad(format!("ring class {} out of range", r.class));
                    }
                    if !(r.radius > 0.0) || r.points < 3 || !(r.jitter >= 0.0) {
                        return bad("rings need radius > 0, at least 3 points and jitter >= 0".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Seeded layout from a point-process description.
pub fn generate(spec: &PointProcessSpec) -> Result<CellLayout> {
    spec.validate()?;
    match &spec.process {
        ProcessKind::Poisson { counts, min_separation } => poisson(spec, counts, *min_separation),
        ProcessKind::MaternCluster { .. } => Ok(generate_matern(spec)?.0),
        ProcessKind::RingScene { rings } => ring_scene(spec, rings),
    }
}

fn empty_layout(spec: &PointProcessSpec) -> Result<CellLayout> {
    Ok(CellLayout::empty(spec.width, spec.height, ClassSpec::numbered(spec.classes)?))
}

fn uniform_point(rng: &mut impl Rng, w: usize, h: usize) -> Point {
    Point::new(rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64))
}

fn poisson(spec: &PointProcessSpec, counts: &[ClassCount], min_sep: f64) -> Result<CellLayout> {
    let mut layout = empty_layout(spec)?;
    let area = (spec.width * spec.height) as f64;
    let mut placed: Vec<Point> = Vec::new();
    for (class, count) in counts.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, class as u64);
        let n = match *count {
            ClassCount::Exact(n) => n,
            ClassCount::Intensity(l) if l * area > 0.0 => {
                Poisson::new(l * area).map_err(|e| Error::Parameter(e.to_string()))?.sample(&mut rng) as usize
            }
            ClassCount::Intensity(_) => 0,
        };
        for _ in 0..n {
            let mut tries = 0;
            let p = loop {
                let p = uniform_point(&mut rng, spec.width, spec.height);
                if min_sep == 0.0 || placed.iter().all(|q| q.distance(&p) >= min_sep) {
                    break p;
                }
                tries += 1;
                if tries >= MAX_TRIES {
                    return Err(Error::Generation(format!(
                        "could not place point {} of class {class} at separation {min_sep}",
                        layout.class_points(class).len() + 1
                    )));
                }
            };
            if min_sep > 0.0 {
                placed.push(p);
            }
            layout.push(class, p)?;
        }
    }
    Ok(layout)
}

/// Matérn cluster layout plus the parent positions of each class.
///
/// Offspring are uniform in the disk around their parent; those falling
/// outside the canvas are discarded.
pub fn generate_matern(spec: &PointProcessSpec) -> Result<(CellLayout, Vec<Vec<Point>>)> {
    spec.validate()?;
    let ProcessKind::MaternCluster {
        parent_intensity,
        cluster_radius,
        mean_offspring,
    } = spec.process
    else {
        return Err(Error::Parameter("not a Matern cluster spec".into()));
    };
    let mut layout = empty_layout(spec)?;
    let mut parents = Vec::with_capacity(spec.classes);
    let area = (spec.width * spec.height) as f64;
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, mean: f64| -> Result<usize> {
        if mean <= 0.0 {
            return Ok(0);
        }
        Ok(Poisson::new(mean).map_err(|e| Error::Parameter(e.to_string()))?.sample(rng) as usize)
    };
    for class in 0..spec.classes {
        let mut rng = stream_rng(spec.seed, class as u64);
        let n_parents = draw(&mut rng, parent_intensity * area)?;
        let mut ps = Vec::with_capacity(n_parents);
        for _ in 0..n_parents {
            let parent = uniform_point(&mut rng, spec.width, spec.height);
            ps.push(parent);
            for _ in 0..draw(&mut rng, mean_offspring)? {
                let rad = cluster_radius * rng.random::<f64>().sqrt();
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                let p = Point::new(parent.x + rad * t.cos(), parent.y + rad * t.sin());
                if p.x >= 0.0 && p.y >= 0.0 && p.x < spec.width as f64 && p.y < spec.height as f64 {
                    layout.push(class, p)?;
                }
            }
        }
        parents.push(ps);
    }
    Ok((layout, parents))
}

fn ring_scene(spec: &PointProcessSpec, rings: &[RingSpec]) -> Result<CellLayout> {
    let mut layout = empty_layout(spec)?;
    let (xmax, ymax) = ((spec.width - 1) as f64, (spec.height - 1) as f64);
    for (k, ring) in rings.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, k as u64);
        let noise = Normal::new(0.0, ring.jitter.max(f64::MIN_POSITIVE)).map_err(|e| Error::Parameter(e.to_string()))?;
        for i in 0..ring.points {
            let t = ring.phase + std::f64::consts::TAU * i as f64 / ring.points as f64;
            let (mut x, mut y) = (ring.center[0] + ring.radius * t.cos(), ring.center[1] + ring.radius * t.sin());
            if ring.jitter > 0.0 {
                x += noise.sample(&mut rng);
                y += noise.sample(&mut rng);
            }
            layout.push(ring.class, Point::new(x.clamp(0.0, xmax), y.clamp(0.0, ymax)))?;
        }
    }
    Ok(layout)
}
