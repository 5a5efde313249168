//! Reference, faithful and split-ring layout sets for comparing topological metrics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generate::{generate, PointProcessSpec, ProcessKind, RingSpec};
use crate::error::{Error, Result};
use crate::layout::CellLayout;
use crate::rng::{child_seed, stream_rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub width: usize,
    pub height: usize,
    /// Ring centers, one per class.
    pub centers: Vec<[f64; 2]>,
    pub ring_radius: f64,
    pub ring_points: usize,
    /// Layouts per set.
    pub layouts_per_set: usize,
    /// Jitter of reference rings, px.
    pub reference_jitter: f64,
    /// Jitter of the faithful set, px.
    pub faithful_jitter: f64,
    /// Per-class point counts of each pair of split rings, `(first, second)`.
    pub split_counts: Vec<(usize, usize)>,
    pub split_radius: f64,
    /// Distance between the centers of the two split rings.
    pub split_offset: f64,
    /// Random shift of every ring center, px.
    pub center_wobble: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            width: 256,
            height: 256,
            centers: vec![[64.0, 68.0], [188.0, 68.0], [128.0, 188.0]],
            ring_radius: 40.0,
            ring_points: 12,
            layouts_per_set: 10,
            reference_jitter: 1.0,
            faithful_jitter: 2.0,
            split_counts: vec![(8, 8), (7, 7), (8, 8)],
            split_radius: 16.0,
            split_offset: 44.0,
            center_wobble: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub reference: Vec<CellLayout>,
    /// Single rings like the reference, jittered; same counts.
    pub faithful: Vec<CellLayout>,
    /// Every ring replaced by two smaller disjoint rings.
    pub split: Vec<CellLayout>,
}

fn ring(class: usize, center: [f64; 2], radius: f64, points: usize, jitter: f64, phase: f64) -> RingSpec {
    RingSpec { class, center, radius, points, jitter, phase }
}

/// Builds the three sets; every layout draws from its own derived seed.
pub fn ring_scenario(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    if params.split_counts.len() != params.centers.len() {
        return Err(Error::Parameter("split_counts needs one entry per class".into()));
    }
    let classes = params.centers.len();
    let make = |set: u64, idx: usize, build: &dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<RingSpec>| {
        let s = child_seed(child_seed(seed, set), idx as u64);
        let mut rng = stream_rng(s, u64::MAX);
        let rings = build(&mut rng);
        generate(&PointProcessSpec {
            width: params.width,
            height: params.height,
            classes,
            process: ProcessKind::RingScene { rings },
            seed: s,
        })
    };
    let wobble = |rng: &mut rand_chacha::ChaCha8Rng, c: [f64; 2]| {
        let w = params.center_wobble;
        if w > 0.0 {
            [c[0] + rng.random_range(-w..w), c[1] + rng.random_range(-w..w)]
        } else {
            c
        }
    };
    let single = |jitter: f64| {
        move |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<RingSpec> {
            params
                .centers
                .iter()
                .enumerate()
                .map(|(class, &c)| {
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    ring(class, wobble(rng, c), params.ring_radius, params.ring_points, jitter, phase)
                })
                .collect()
        }
    };
    let split = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<RingSpec> {
        let mut rings = Vec::new();
        for (class, (&c, &(n1, n2))) in params.centers.iter().zip(&params.split_counts).enumerate() {
            let c = wobble(rng, c);
            let axis = rng.random_range(0.0..std::f64::consts::PI);
            let half = 0.5 * params.split_offset;
            let (dx, dy) = (half * axis.cos(), half * axis.sin());
            for (sign, n) in [(-1.0, n1), (1.0, n2)] {
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let center = [c[0] + sign * dx, c[1] + sign * dy];
                rings.push(ring(class, center, params.split_radius, n, params.faithful_jitter, phase));
            }
        }
        rings
    };
    let set = |id: u64, build: &dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<RingSpec>| {
        (0..params.layouts_per_set).map(|i| make(id, i, build)).collect::<Result<Vec<_>>>()
    };
    Ok(Scenario {
        reference: set(0, &single(params.reference_jitter))?,
        faithful: set(1, &single(params.faithful_jitter))?,
        split: set(2, &split)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::count_metrics;

    #[test]
    fn counts_by_construction() {
        let s = ring_scenario(&ScenarioParams::default(), 1).unwrap();
        assert_eq!(count_metrics(&s.reference, &s.faithful).unwrap().tce, 0.0);
        assert_eq!(count_metrics(&s.reference, &s.split).unwrap().tce, 10.0);
        assert_eq!(s, ring_scenario(&ScenarioParams::default(), 1).unwrap());
    }
}
