//! Farthest point sampling and exact k-nearest-neighbour search.
//!
//! Both follow brute-force semantics exactly: distances are Euclidean and ties
//! go to the lowest index. KNN uses a kd-tree whose pruning never discards a
//! subtree that could hold an equally distant, lower-indexed point.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Greedy farthest point ordering with the squared min-distance achieved at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct FpsResult {
    pub indices: Vec<usize>,
    /// Squared distance of each selected point to the points chosen before it
    /// (`+∞` for the start point).
    pub min_sq_distances: Vec<f64>,
}

pub fn farthest_point_sample_nd<const D: usize>(points: &[[f64; D]], target: usize, start: usize) -> Result<FpsResult> {
    let n = points.len();
    if target == 0 || target > n {
        return Err(Error::InvalidArgument(format!("cannot select {target} of {n} points")));
    }
    if start >= n {
        return Err(Error::InvalidArgument(format!("start index {start} out of range {n}")));
    }
    let mut selected = vec![false; n];
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut indices = Vec::with_capacity(target);
    let mut achieved = Vec::with_capacity(target);
    let mut current = start;
    let mut current_d2 = f64::INFINITY;
    loop {
        selected[current] = true;
        indices.push(current);
        achieved.push(current_d2);
        if indices.len() == target {
            break;
        }
        let anchor = points[current];
        min_d2
            .par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(m, p)| *m = m.min(dist2(p, &anchor)));
        let mut best = None;
        for (i, &d) in min_d2.iter().enumerate() {
            if selected[i] {
                continue;
            }
            match best {
                Some((_, bd)) if d <= bd => {}
                _ => best = Some((i, d)),
            }
        }
        let (i, d) = best.expect("unselected points remain");
        current = i;
        current_d2 = d;
    }
    Ok(FpsResult {
        indices,
        min_sq_distances: achieved,
    })
}

/// FPS over 3D positions.
pub fn farthest_point_sample(points: &[[f64; 3]], target: usize, start: usize) -> Result<Vec<usize>> {
    Ok(farthest_point_sample_nd(points, target, start)?.indices)
}

/// FPS over positions concatenated with normals scaled by `normal_weight`.
pub fn farthest_point_sample_with_normals(
    points: &[[f64; 3]],
    normals: &[[f64; 3]],
    normal_weight: f64,
    target: usize,
    start: usize,
) -> Result<Vec<usize>> {
    if points.len() != normals.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points with {} normals",
            points.len(),
            normals.len()
        )));
    }
    let features: Vec<[f64; 6]> = points
        .iter()
        .zip(normals)
        .map(|(p, nrm)| {
            [
                p[0],
                p[1],
                p[2],
                nrm[0] * normal_weight,
                nrm[1] * normal_weight,
                nrm[2] * normal_weight,
            ]
        })
        .collect();
    Ok(farthest_point_sample_nd(&features, target, start)?.indices)
}

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree over a point set.
#[derive(Debug)]
pub struct KdTree<'a, const D: usize> {
    points: &'a [[f64; D]],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a, const D: usize> KdTree<'a, D> {
    pub fn new(points: &'a [[f64; D]]) -> Self {
        let mut tree = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut dim = 0;
        let mut widest = -1.0;
        for d in 0..D {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.points[i][d])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if hi - lo > widest {
                widest = hi - lo;
                dim = d;
            }
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| points[a][dim].total_cmp(&points[b][dim]));
        let value = points[self.order[mid]][dim];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` points nearest to `query`, skipping index `exclude`, ordered by
    /// distance then index.
    pub fn nearest(&self, query: &[f64; D], k: usize, exclude: Option<usize>) -> Vec<usize> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, exclude, &mut heap);
        let mut found = heap.into_vec();
        found.sort();
        found.into_iter().map(|c| c.index).collect()
    }

    fn search(
        &self,
        node: usize,
        query: &[f64; D],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    if Some(index) == exclude {
                        continue;
                    }
                    let c = Candidate {
                        d2: dist2(&self.points[index], query),
                        index,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("full heap") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, exclude, heap);
                // Equal distances must still be visited for the index tie-break.
                if heap.len() < k || diff * diff <= heap.peek().expect("full heap").d2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }
}

/// For every point, the indices of its `k` nearest other points (row-major `P × k`).
pub fn knn<const D: usize>(points: &[[f64; D]], k: usize) -> Result<Vec<usize>> {
    if k >= points.len() {
        return Err(Error::InvalidArgument(format!(
            "{k} neighbours requested from {} points (need k < P)",
            points.len()
        )));
    }
    let tree = KdTree::new(points);
    let rows: Vec<Vec<usize>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| tree.nearest(p, k, Some(i)))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
