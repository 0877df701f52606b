//! Exact nearest-neighbor search over 3D points.

use super::camera::{squared_distance, Vec3};

/// Result of a nearest-neighbor query: index into the indexed set and the
/// squared Euclidean distance. Ties resolve to the smallest index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub squared_distance: f64,
}

impl Neighbor {
    #[inline]
    fn improves_on(&self, best: &Option<Neighbor>) -> bool {
        match best {
            None => true,
            Some(b) => {
                self.squared_distance < b.squared_distance
                    || (self.squared_distance == b.squared_distance && self.index < b.index)
            }
        }
    }
}

/// Double loop over every candidate.
pub fn brute_force_nearest(points: &[Vec3], query: Vec3) -> Option<Neighbor> {
    let mut best = None;
    for (index, p) in points.iter().enumerate() {
        let cand = Neighbor {
            index,
            squared_distance: squared_distance(query, *p),
        };
        if cand.improves_on(&best) {
            best = Some(cand);
        }
    }
    best
}

/// Balanced implicit kd-tree: the subtree over `order[lo..hi]` stores its
/// splitting point at the middle slot, split axis cycling with depth.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<usize>,
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
        };
        tree.split(0, points.len(), 0);
        tree
    }

    fn split(&mut self, lo: usize, hi: usize, depth: usize) {
        if hi - lo <= 1 {
            return;
        }
        let axis = depth % 3;
        let mid = lo + (hi - lo) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        self.split(lo, mid, depth + 1);
        self.split(mid + 1, hi, depth + 1);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, query: Vec3) -> Option<Neighbor> {
        let mut best = None;
        self.search(0, self.points.len(), 0, query, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, depth: usize, q: Vec3, best: &mut Option<Neighbor>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let index = self.order[mid];
        let p = self.points[index];
        let cand = Neighbor {
            index,
            squared_distance: squared_distance(q, p),
        };
        if cand.improves_on(best) {
            *best = Some(cand);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (first, second) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(first.0, first.1, depth + 1, q, best);
        // `<=` keeps equidistant candidates reachable for the index tie-break
        if best.is_none_or(|b| diff * diff <= b.squared_distance) {
            self.search(second.0, second.1, depth + 1, q, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_sets() {
        assert!(brute_force_nearest(&[], [0.0; 3]).is_none());
        assert!(KdTree::build(&[]).nearest([0.0; 3]).is_none());
    }

    #[test]
    fn duplicate_points_resolve_to_lowest_index() {
        let pts = vec![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let t = KdTree::build(&pts);
        assert_eq!(t.nearest([0.0; 3]).unwrap().index, 1);
        assert_eq!(brute_force_nearest(&pts, [0.0; 3]).unwrap().index, 1);
    }

    proptest! {
        #[test]
        fn tree_equals_brute_force(
            pts in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 1..200),
            queries in prop::collection::vec(prop::array::uniform3(-6.0f64..6.0), 1..20),
        ) {
            let t = KdTree::build(&pts);
            for q in queries {
                prop_assert_eq!(t.nearest(q), brute_force_nearest(&pts, q));
            }
        }

        #[test]
        fn grid_points_with_ties(n in 2usize..6, q in prop::array::uniform3(0i32..6)) {
            let mut pts = Vec::new();
            for x in 0..n { for y in 0..n { for z in 0..n {
                pts.push([x as f64, y as f64, z as f64]);
            }}}
            let q = q.map(|v| f64::from(v) - 0.5);
            let t = KdTree::build(&pts);
            prop_assert_eq!(t.nearest(q), brute_force_nearest(&pts, q));
        }
    }
}
