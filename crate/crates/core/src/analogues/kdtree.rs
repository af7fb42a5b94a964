//! Static kd-tree for exact Euclidean k-nearest-neighbour queries in low
//! dimension.
//!
//! Points are copied into leaf order. Internal nodes split on the widest
//! bounding-box axis at the median. Queries keep per-axis offsets to the
//! current cell so the lower bound on the squared distance grows
//! incrementally (Arya-Mount style). Candidates are ordered by
//! `(squared distance, id)`, which makes results unique even with ties.

const BUCKET: usize = 16;

/// Relative slack on the pruning bound. The incremental bound and the leaf
/// distance are rounded differently; without slack a tied candidate could be
/// pruned.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u32, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

/// Squared Euclidean distance, summed over coordinates in order.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sorted candidate list of at most `k` `(d2, id)` pairs.
#[derive(Debug)]
pub struct Candidates {
    k: usize,
    items: Vec<(f64, u32)>,
}

impl Candidates {
    pub fn new(k: usize) -> Self {
        Candidates {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn clear(&mut self, k: usize) {
        self.k = k;
        self.items.clear();
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    #[inline]
    fn offer(&mut self, d2: f64, id: u32) {
        if self.items.len() == self.k {
            let (wd, wid) = self.items[self.k - 1];
            if (d2, id) >= (wd, wid) {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| (d, i) < (d2, id));
        self.items.insert(pos, (d2, id));
        self.items.truncate(self.k);
    }

    pub fn as_slice(&self) -> &[(f64, u32)] {
        &self.items
    }
}

impl KdTree {
    /// Builds over `count = coords.len() / dim` points; point `i` gets id `i`.
    pub fn build(coords: &[f64], dim: usize) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0);
        let count = coords.len() / dim;
        assert!(count < u32::MAX as usize, "too many points for u32 ids");
        let mut order: Vec<u32> = (0..count as u32).collect();
        let mut nodes = Vec::new();
        if count > 0 {
            Self::build_node(coords, dim, &mut order, 0, &mut nodes);
        }
        let mut points = Vec::with_capacity(coords.len());
        for &id in &order {
            let i = id as usize;
            points.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        KdTree {
            dim,
            points,
            ids: order,
            nodes,
        }
    }

    fn build_node(
        coords: &[f64],
        dim: usize,
        order: &mut [u32],
        offset: usize,
        nodes: &mut Vec<Node>,
    ) -> u32 {
        let me = nodes.len() as u32;
        let len = order.len();
        if len <= BUCKET {
            nodes.push(Node::Leaf {
                start: offset as u32,
                end: (offset + len) as u32,
            });
            return me;
        }
        let coord = |id: u32, axis: usize| coords[id as usize * dim + axis];
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &id in order.iter() {
            for a in 0..dim {
                let v = coord(id, a);
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap();
        if hi[axis] - lo[axis] <= 0.0 {
            // All points coincide.
            nodes.push(Node::Leaf {
                start: offset as u32,
                end: (offset + len) as u32,
            });
            return me;
        }
        let mid = len / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            coord(a, axis).total_cmp(&coord(b, axis)).then(a.cmp(&b))
        });
        let value = coord(order[mid], axis);
        nodes.push(Node::Split {
            axis: axis as u32,
            value,
            left: 0,
            right: 0,
        });
        let (left_ids, right_ids) = order.split_at_mut(mid);
        let left = Self::build_node(coords, dim, left_ids, offset, nodes);
        let right = Self::build_node(coords, dim, right_ids, offset + mid, nodes);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut nodes[me as usize]
        {
            *l = left;
            *r = right;
        }
        me
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fills `out` with the `k` nearest points as `(squared distance, id)`,
    /// ascending. `offsets` is scratch of length `dim`.
    pub fn knn_into(&self, query: &[f64], k: usize, out: &mut Candidates, offsets: &mut Vec<f64>) {
        assert_eq!(query.len(), self.dim);
        out.clear(k);
        if k == 0 || self.nodes.is_empty() {
            return;
        }
        offsets.clear();
        offsets.resize(self.dim, 0.0);
        self.search(0, query, 0.0, offsets, out);
    }

    pub fn knn(&self, query: &[f64], k: usize) -> Vec<(f64, u32)> {
        let mut c = Candidates::new(k);
        let mut offsets = Vec::new();
        self.knn_into(query, k, &mut c, &mut offsets);
        c.items
    }

    fn search(&self, node: u32, q: &[f64], rd: f64, offsets: &mut [f64], out: &mut Candidates) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                let dim = self.dim;
                for slot in start as usize..end as usize {
                    let p = &self.points[slot * dim..(slot + 1) * dim];
                    let d2 = squared_distance(p, q);
                    if d2 <= out.worst() {
                        out.offer(d2, self.ids[slot]);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let axis = axis as usize;
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, rd, offsets, out);
                let old = offsets[axis];
                let far_rd = rd - old * old + diff * diff;
                if far_rd <= out.worst() * (1.0 + PRUNE_SLACK) {
                    offsets[axis] = diff;
                    self.search(far, q, far_rd, offsets, out);
                    offsets[axis] = old;
                }
            }
        }
    }
}

/// Linear scan with the same ordering; the reference for exactness tests.
pub fn brute_force_knn(coords: &[f64], dim: usize, query: &[f64], k: usize) -> Vec<(f64, u32)> {
    let mut all: Vec<(f64, u32)> = coords
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, p)| (squared_distance(p, query), i as u32))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton() {
        let t = KdTree::build(&[1.0, 2.0, 3.0], 3);
        assert_eq!(t.knn(&[9.0, 9.0, 9.0], 1), vec![(squared_distance(&[1., 2., 3.], &[9., 9., 9.]), 0)]);
    }

    #[test]
    fn empty_tree_returns_nothing() {
        let t = KdTree::build(&[], 2);
        assert!(t.knn(&[0.0, 0.0], 3).is_empty());
    }

    #[test]
    fn duplicates_resolved_by_id() {
        let coords = vec![0.5; 100];
        let t = KdTree::build(&coords, 1);
        let got: Vec<u32> = t.knn(&[0.5], 5).into_iter().map(|(_, i)| i).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            coords in prop::collection::vec(-3i32..3, 3..600),
            query in prop::collection::vec(-4i32..4, 3),
            k in 1usize..40,
        ) {
            // Integer lattice coordinates force many exact ties.
            let n = coords.len() / 3 * 3;
            let coords: Vec<f64> = coords[..n].iter().map(|&v| f64::from(v) * 0.5).collect();
            let query: Vec<f64> = query.iter().map(|&v| f64::from(v) * 0.5).collect();
            let tree = KdTree::build(&coords, 3);
            prop_assert_eq!(tree.knn(&query, k), brute_force_knn(&coords, 3, &query, k));
        }
    }
}
