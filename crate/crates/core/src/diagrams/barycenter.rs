use serde::{Deserialize, Serialize};

use super::wasserstein::{diagonal_projection, optimal_matching, Matching};
use crate::error::{Error, Result};
use crate::persistence::{Bar, PersistenceDiagram};

pub const DEFAULT_MAX_ITERATIONS: usize = 50;
pub const DEFAULT_REL_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarycenterResult {
    pub diagram: PersistenceDiagram,
    /// `Σ_i W_2²(X_i, diagram)`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each matching step; non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Fréchet mean under `W_2²` by alternating optimal matching and averaging.
///
/// The descent is run from several starts (see [`starts`]) and the lowest
/// objective is kept; each run is only locally optimal.
pub fn barycenter(diagrams: &[PersistenceDiagram]) -> Result<BarycenterResult> {
    barycenter_with(diagrams, DEFAULT_MAX_ITERATIONS, DEFAULT_REL_TOL)
}

pub fn barycenter_with(
    diagrams: &[PersistenceDiagram],
    max_iterations: usize,
    rel_tol: f64,
) -> Result<BarycenterResult> {
    if diagrams.is_empty() {
        return Err(Error::InsufficientData("barycenter of an empty set".into()));
    }
    let mut dim = None;
    for d in diagrams {
        match (dim, d.single_dim()?) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Validation("barycenter inputs mix dimensions".into()))
            }
            (None, Some(b)) => dim = Some(b),
            _ => {}
        }
    }
    let dim = dim.unwrap_or(1);
    let inputs: Vec<Vec<[f64; 2]>> = diagrams.iter().map(|d| d.points()).collect();

    let mut best: Option<Descent> = None;
    for start in starts(&inputs) {
        let mut run = descend(start, &inputs, max_iterations, rel_tol);
        let refined = descend(regroup(&run.current, &inputs), &inputs, max_iterations, rel_tol);
        if refined.objective < run.objective {
            run.iterations += refined.iterations;
            run.converged = refined.converged;
            run.trace.extend(refined.trace.into_iter().filter(|&o| o < run.objective));
            run.objective = *run.trace.last().unwrap();
            run.current = refined.current;
        }
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let Descent { current, objective, iterations, converged, trace } = best.expect("at least one start");
    let evaluate = |y: &[[f64; 2]]| -> f64 { inputs.iter().map(|x| optimal_matching(y, x, 2.0).cost).sum() };

    // Points sitting on the diagonal never lower the objective.
    let bars = current
        .iter()
        .filter(|q| q[1] > q[0])
        .map(|q| Bar::new(dim, q[0], q[1]))
        .collect();
    let diagram = PersistenceDiagram::new(bars)?;
    let objective = if diagram.len() == current.len() {
        objective
    } else {
        evaluate(&diagram.points()).min(objective)
    };
    Ok(BarycenterResult {
        diagram,
        objective,
        iterations,
        converged,
        objective_trace: trace,
    })
}

struct Descent {
    current: Vec<[f64; 2]>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Starting diagrams: the median input first, then every other distinct input in
/// content order, then the union of all inputs (points it does not need drift to
/// the diagonal).
fn starts(inputs: &[Vec<[f64; 2]>]) -> Vec<Vec<[f64; 2]>> {
    let order = content_order(inputs);
    let median = order[(order.len() - 1) / 2];
    let mut out: Vec<Vec<[f64; 2]>> = vec![inputs[median].clone()];
    for &i in &order {
        if !out.contains(&inputs[i]) {
            out.push(inputs[i].clone());
        }
    }
    let mut union: Vec<[f64; 2]> = order.iter().flat_map(|&i| inputs[i].iter().copied()).collect();
    union.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if !out.contains(&union) {
        out.push(union);
    }
    out
}

/// Alternating matching and averaging from one start until the objective settles.
fn descend(start: Vec<[f64; 2]>, inputs: &[Vec<[f64; 2]>], max_iterations: usize, rel_tol: f64) -> Descent {
    let evaluate = |y: &[[f64; 2]]| -> (f64, Vec<Matching>) {
        let ms: Vec<Matching> = inputs.iter().map(|x| optimal_matching(y, x, 2.0)).collect();
        (ms.iter().map(|m| m.cost).sum(), ms)
    };
    let mut current = start;
    let (mut objective, mut matchings) = evaluate(&current);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut next = average_step(&current, inputs, &matchings);
        // Points that collapsed onto the diagonal carry no cost and are dropped.
        next.retain(|q| q[1] > q[0]);
        if next == current {
            converged = true;
            break;
        }
        let (next_obj, next_ms) = evaluate(&next);
        // Monotone by construction; guard against round-off reversals.
        if next_obj > objective {
            converged = true;
            break;
        }
        let change = objective - next_obj;
        current = next;
        objective = next_obj;
        matchings = next_ms;
        trace.push(objective);
        if change <= rel_tol * objective.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Descent { current, objective, iterations, converged, trace }
}

/// Rotated coordinates `(u, v)`: position along the diagonal and distance to it.
fn rotate(q: [f64; 2]) -> (f64, f64) {
    let s = std::f64::consts::SQRT_2;
    ((q[0] + q[1]) / s, (q[1] - q[0]) / s)
}

fn unrotate(u: f64, v: f64) -> [f64; 2] {
    let s = std::f64::consts::SQRT_2;
    [(u - v) / s, (u + v) / s]
}

/// Closed-form cost of one barycenter point serving `members`: its `u` is their
/// mean, its `v` their `v` sum over the number of diagrams, and diagrams without
/// a member pay the point's own diagonal distance.
fn group_cost(members: &[(usize, f64, f64)], n_dgm: f64) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let k = members.len() as f64;
    let u = members.iter().map(|m| m.1).sum::<f64>() / k;
    let v = members.iter().map(|m| m.2).sum::<f64>() / n_dgm;
    members.iter().map(|m| (m.1 - u).powi(2) + (m.2 - v).powi(2)).sum::<f64>() + (n_dgm - k) * v * v
}

fn group_point(members: &[(usize, f64, f64)], n_dgm: f64) -> [f64; 2] {
    let k = members.len() as f64;
    unrotate(
        members.iter().map(|m| m.1).sum::<f64>() / k,
        members.iter().map(|m| m.2).sum::<f64>() / n_dgm,
    )
}

/// Local search over which input points share a barycenter point, starting from
/// the grouping induced by `y`. Moves relocate one point (to another group, a new
/// group or the diagonal) or swap two points of the same diagram. Returns the
/// closed-form optimum of the final grouping, which also removes the residual
/// left by the averaging iteration's stopping rule.
fn regroup(y: &[[f64; 2]], inputs: &[Vec<[f64; 2]>]) -> Vec<[f64; 2]> {
    const MAX_MOVES: usize = 10_000;
    let n_dgm = inputs.len() as f64;
    // `(diagram, u, v)` per input point, its group (`None` = diagonal) and the
    // member list of every group; the last group is kept empty for new points.
    let mut pts: Vec<(usize, f64, f64)> = Vec::new();
    let mut group: Vec<Option<usize>> = Vec::new();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); y.len() + 1];
    for (i, x) in inputs.iter().enumerate() {
        let m = optimal_matching(y, x, 2.0);
        for (idx, q) in x.iter().enumerate() {
            let (u, v) = rotate(*q);
            let g = m.pairs.iter().find(|p| p.b == Some(idx)).and_then(|p| p.a);
            if let Some(g) = g {
                members[g].push(pts.len());
            }
            pts.push((i, u, v));
            group.push(g);
        }
    }
    let cost = |list: &[usize], remove: Option<usize>, add: Option<usize>| -> f64 {
        let m: Vec<(usize, f64, f64)> = list
            .iter()
            .copied()
            .filter(|&p| Some(p) != remove)
            .chain(add)
            .map(|p| pts[p])
            .collect();
        group_cost(&m, n_dgm)
    };
    let diag = |p: usize| pts[p].2 * pts[p].2;
    // Cost change of group `g` (or the diagonal) when `remove` leaves and `add` joins.
    let change = |members: &[Vec<usize>], base: &[f64], g: Option<usize>, remove: Option<usize>, add: Option<usize>| {
        match g {
            Some(g) => cost(&members[g], remove, add) - base[g],
            None => add.map_or(0.0, diag) - remove.map_or(0.0, diag),
        }
    };
    let mut base: Vec<f64> = members.iter().map(|m| cost(m, None, None)).collect();
    let scale: f64 = pts.iter().map(|p| p.2 * p.2).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_MOVES {
        // (delta, moves) where each move is `(point, new group)`.
        let mut best: Option<(f64, [(usize, Option<usize>); 2], usize)> = None;
        let mut consider = |d: f64, moves: [(usize, Option<usize>); 2], n: usize| {
            if d < -1e-12 * scale && best.as_ref().is_none_or(|b| d < b.0) {
                best = Some((d, moves, n));
            }
        };
        for p in 0..pts.len() {
            let from = group[p];
            let leave = change(&members, &base, from, Some(p), None);
            for to in (0..members.len()).map(Some).chain([None]) {
                if to == from {
                    continue;
                }
                if let Some(g) = to {
                    if members[g].iter().any(|&q| pts[q].0 == pts[p].0) {
                        continue;
                    }
                }
                consider(leave + change(&members, &base, to, None, Some(p)), [(p, to), (p, to)], 1);
            }
            for q in p + 1..pts.len() {
                let to = group[q];
                if pts[q].0 != pts[p].0 || to == from {
                    continue;
                }
                let d = change(&members, &base, from, Some(p), Some(q)) + change(&members, &base, to, Some(q), Some(p));
                consider(d, [(p, to), (q, from)], 2);
            }
        }
        let Some((_, moves, n)) = best else { break };
        let mut touched = Vec::new();
        for &(p, g) in &moves[..n] {
            if let Some(old) = group[p] {
                members[old].retain(|&x| x != p);
                touched.push(old);
            }
            if let Some(g) = g {
                members[g].push(p);
                touched.push(g);
            }
            group[p] = g;
        }
        for g in touched {
            base[g] = cost(&members[g], None, None);
        }
        if !members.last().unwrap().is_empty() {
            members.push(Vec::new());
            base.push(0.0);
        }
    }
    let mut out: Vec<[f64; 2]> = members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| group_point(&m.iter().map(|&p| pts[p]).collect::<Vec<_>>(), n_dgm))
        .filter(|q| q[1] > q[0])
        .collect();
    out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    out
}

/// Each barycenter point moves to the mean of its partners (diagonal partners
/// contribute the point's own projection).
fn average_step(y: &[[f64; 2]], inputs: &[Vec<[f64; 2]>], matchings: &[Matching]) -> Vec<[f64; 2]> {
    let k = inputs.len() as f64;
    let mut sums: Vec<[f64; 2]> = vec![[0.0, 0.0]; y.len()];
    for (x, m) in inputs.iter().zip(matchings) {
        for pair in &m.pairs {
            let Some(j) = pair.a else { continue };
            let target = match pair.b {
                Some(i) => x[i],
                None => diagonal_projection(y[j]),
            };
            sums[j][0] += target[0];
            sums[j][1] += target[1];
        }
    }
    sums.iter().map(|s| [s[0] / k, s[1] / k]).collect()
}

/// Input indices sorted by total persistence, ties resolved by diagram content,
/// so the order does not depend on how the inputs were listed.
fn content_order(inputs: &[Vec<[f64; 2]>]) -> Vec<usize> {
    let mut keyed: Vec<(f64, Vec<[f64; 2]>, usize)> = inputs
        .iter()
        .enumerate()
        .map(|(i, pts)| {
            let mut sorted = pts.clone();
            sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            (pts.iter().map(|q| q[1] - q[0]).sum(), sorted, i)
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let la = a.1.iter().flat_map(|q| q.iter());
            let lb = b.1.iter().flat_map(|q| q.iter());
            la.zip(lb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(a.1.len().cmp(&b.1.len()))
        })
    });
    keyed.into_iter().map(|k| k.2).collect()
}
