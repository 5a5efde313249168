/// Disjoint sets with path halving and union by size.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns the new root, or `None` if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        Some(big)
    }

    /// Links `child_root` under `parent_root`; both must be roots.
    pub fn link(&mut self, child_root: usize, parent_root: usize) {
        debug_assert_eq!(self.parent[child_root], child_root);
        debug_assert_eq!(self.parent[parent_root], parent_root);
        self.parent[child_root] = parent_root;
        self.size[parent_root] += self.size[child_root];
    }
}
