//! Exact k-nearest-neighbour search over latent points with a k-d tree.
//!
//! Candidates are ordered by `(squared distance, index)`, so equidistant
//! neighbours resolve to the lower index and results match a brute-force scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Static k-d tree over a point set; indices refer to the input order.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec<f64>>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KdTree {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.widest_dim(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim].total_cmp(&points[b][dim]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][dim];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    fn widest_dim(&self, start: usize, end: usize) -> usize {
        let dims = self.points[self.order[start]].len();
        let mut best = (0, f64::NEG_INFINITY);
        for dim in 0..dims {
            let (lo, hi) = self.order[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| (lo.min(self.points[i][dim]), hi.max(self.points[i][dim])),
            );
            if hi - lo > best.1 {
                best = (dim, hi - lo);
            }
        }
        best.0
    }

    /// The `k` nearest points to `query` as `(index, distance)`, closest
    /// first, skipping `exclude`.
    pub fn nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, exclude, &mut heap);
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.dist2.sqrt()))
            .collect()
    }

    fn search(
        &self,
        node: usize,
        query: &[f64],
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
                    let cand = Candidate {
                        dist2: dist2(query, &self.points[index]),
                        index,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, exclude, heap);
                let full = heap.len() == k;
                if !full || diff * diff <= heap.peek().expect("heap is full").dist2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }
}

/// For every point, the indices of its `k` nearest other points.
pub fn knn(points: &[Vec<f64>], k: usize) -> Result<Vec<Vec<usize>>> {
    if points.len() < k + 1 {
        return Err(Error::usage(format!(
            "k-nearest-neighbour search with k={k} needs at least {} points, got {}",
            k + 1,
            points.len()
        )));
    }
    let tree = KdTree::new(points.to_vec());
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| {
            tree.nearest(&points[i], k, Some(i))
                .into_iter()
                .map(|(j, _)| j)
                .collect()
        })
        .collect())
}
