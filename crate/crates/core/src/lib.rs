//! Topological machinery for multi-class cell layouts.
//!
//! * [`layout`]: point layouts, 3×3 rasterization, component counting, CCE/TCE.
//! * [`edt`]: exact Euclidean distance transform with nearest-site tracking.
//! * [`persistence`]: H0/H1 persistence of Rips filtrations and cubical sublevel sets.
//! * [`diagrams`]: Wasserstein matchings, landscapes, barycenters, W1-Gaussian kernel.
//! * [`metrics`]: Fréchet distance, TopoFD and MMD between layout collections.
//! * [`losses`]: count / intra-class / inter-class losses with point gradients.
//! * [`synth`]: point-process generators, a loss-driven layout optimizer, Ripley's K.

pub mod diagrams;
pub mod edt;
pub mod error;
pub mod grid;
pub mod layout;
pub mod losses;
pub mod metrics;
pub mod persistence;
pub mod rng;
pub mod synth;

mod unionfind;

pub use error::{Error, Result};
pub use grid::{BinaryGrid, Grid, ScalarField};
pub use layout::{CellLayout, ClassSpec, Point, RasterLayout};
pub use persistence::{Bar, PersistenceDiagram};
