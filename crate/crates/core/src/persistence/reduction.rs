//! Z/2 boundary-matrix reduction with the clearing optimization.

use std::collections::HashMap;

/// Filtered cell complex in filtration order; `boundary[j]` lists face positions (ascending).
pub(crate) struct FilteredComplex {
    pub dims: Vec<u8>,
    pub boundary: Vec<Vec<u32>>,
}

pub(crate) struct Pairing {
    /// `(birth position, death position)`.
    pub pairs: Vec<(usize, usize)>,
    pub essential: Vec<usize>,
}

/// Symmetric difference of two ascending index lists.
fn add_columns(target: &mut Vec<u32>, other: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[i..]);
    scratch.extend_from_slice(&other[j..]);
    std::mem::swap(target, scratch);
}

/// Reduces columns from the top dimension down; a column whose index already
/// appeared as a pivot in the dimension above is cleared without reduction.
pub(crate) fn reduce(complex: &FilteredComplex) -> Pairing {
    let n = complex.dims.len();
    let top = complex.dims.iter().copied().max().unwrap_or(0);
    let mut paired = vec![false; n];
    let mut pairs = Vec::new();
    let mut scratch = Vec::new();

    for dim in (1..=top).rev() {
        let mut pivot_owner: HashMap<u32, usize> = HashMap::new();
        let mut reduced: HashMap<usize, Vec<u32>> = HashMap::new();
        for j in 0..n {
            if complex.dims[j] != dim || paired[j] {
                continue;
            }
            let mut col = complex.boundary[j].clone();
            while let Some(&low) = col.last() {
                match pivot_owner.get(&low) {
                    Some(&owner) => add_columns(&mut col, &reduced[&owner], &mut scratch),
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                pivot_owner.insert(low, j);
                paired[low as usize] = true;
                paired[j] = true;
                pairs.push((low as usize, j));
                reduced.insert(j, col);
            }
        }
    }
    let essential = (0..n).filter(|&j| !paired[j]).collect();
    Pairing { pairs, essential }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filled_triangle() {
        // v0 v1 v2 e01 e02 e12 t012
        let complex = FilteredComplex {
            dims: vec![0, 0, 0, 1, 1, 1, 2],
            boundary: vec![vec![], vec![], vec![], vec![0, 1], vec![0, 2], vec![1, 2], vec![3, 4, 5]],
        };
        let mut p = reduce(&complex);
        p.pairs.sort();
        assert_eq!(p.pairs, vec![(1, 3), (2, 4), (5, 6)]);
        assert_eq!(p.essential, vec![0]);
    }
}
