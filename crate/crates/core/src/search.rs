//! Shortest-path geodesics through a [`GraphView`].
//!
//! [`astar`] is guided by the ambient chord to the goal. Every edge weight is
//! at least the chord between its endpoints' decodings, so the heuristic is
//! consistent and A* returns minimum-weight paths. [`dijkstra_oracle`] is a
//! separate uninformed search used to cross-check it.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{AmbientPoint, Atlas, LatentCoord};
use crate::graph::{component_of, EdgeKind, GraphView, LatentGraph};

/// Piecewise-linear latent path along graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub node_ids: Vec<usize>,
    pub nodes: Vec<LatentCoord>,
    pub segment_lengths: Vec<f64>,
    pub segment_kinds: Vec<EdgeKind>,
    pub total_length: f64,
}

impl GeodesicPath {
    pub fn hops(&self) -> usize {
        self.segment_lengths.len()
    }

    pub fn cross_chart_segments(&self) -> usize {
        self.segment_kinds
            .iter()
            .filter(|k| **k == EdgeKind::CrossChart)
            .count()
    }
}

/// Ambient distance between the cached decodings of `u` and `goal`.
pub fn heuristic<G: GraphView>(graph: &G, u: usize, goal: usize) -> f64 {
    graph.node(u).decoded.distance(&graph.node(goal).decoded)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    priority: f64,
    cost: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(self.node.cmp(&other.node))
    }
}

#[derive(Clone, Copy)]
struct Via {
    from: usize,
    weight: f64,
    kind: EdgeKind,
}

fn check_ids<G: GraphView>(graph: &G, start: usize, goal: usize) -> Result<()> {
    let n = graph.node_count();
    if start >= n || goal >= n {
        return Err(Error::usage(format!(
            "node ids ({start}, {goal}) out of range for graph with {n} nodes"
        )));
    }
    Ok(())
}

fn no_path<G: GraphView>(graph: &G, start: usize, goal: usize) -> Error {
    Error::NoPath {
        start,
        goal,
        start_component: component_of(graph, start).len(),
        goal_component: component_of(graph, goal).len(),
    }
}

fn assemble<G: GraphView>(graph: &G, parent: &[Option<Via>], start: usize, goal: usize) -> GeodesicPath {
    let mut ids = vec![goal];
    let mut steps = Vec::new();
    let mut cur = goal;
    while cur != start {
        let via = parent[cur].expect("reached node has a parent");
        steps.push(via);
        cur = via.from;
        ids.push(cur);
    }
    ids.reverse();
    steps.reverse();
    let segment_lengths: Vec<f64> = steps.iter().map(|v| v.weight).collect();
    GeodesicPath {
        nodes: ids.iter().map(|&id| graph.node(id).coord.clone()).collect(),
        node_ids: ids,
        total_length: segment_lengths.iter().sum(),
        segment_kinds: steps.iter().map(|v| v.kind).collect(),
        segment_lengths,
    }
}

/// Minimum-weight path from `start` to `goal`; priority ties go to the lower node id.
pub fn astar<G: GraphView>(graph: &G, start: usize, goal: usize) -> Result<GeodesicPath> {
    check_ids(graph, start, goal)?;
    let n = graph.node_count();
    let mut best = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<Via>> = vec![None; n];
    let mut open = BinaryHeap::new();
    best[start] = 0.0;
    open.push(Reverse(Entry {
        priority: heuristic(graph, start, goal),
        cost: 0.0,
        node: start,
    }));
    while let Some(Reverse(Entry { cost, node, .. })) = open.pop() {
        if cost > best[node] {
            continue;
        }
        if node == goal {
            return Ok(assemble(graph, &parent, start, goal));
        }
        for adj in graph.neighbors(node) {
            let next = cost + adj.weight;
            if next < best[adj.node] {
                best[adj.node] = next;
                parent[adj.node] = Some(Via { from: node, weight: adj.weight, kind: adj.kind });
                open.push(Reverse(Entry {
                    priority: next + heuristic(graph, adj.node, goal),
                    cost: next,
                    node: adj.node,
                }));
            }
        }
    }
    Err(no_path(graph, start, goal))
}

/// Plain Dijkstra search; the reference A* is checked against.
pub fn dijkstra_oracle<G: GraphView>(graph: &G, start: usize, goal: usize) -> Result<GeodesicPath> {
    check_ids(graph, start, goal)?;
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut parent: Vec<Option<Via>> = vec![None; n];
    let mut queue = BinaryHeap::new();
    dist[start] = 0.0;
    queue.push(Reverse(Entry { priority: 0.0, cost: 0.0, node: start }));
    while let Some(Reverse(Entry { node, .. })) = queue.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == goal {
            return Ok(assemble(graph, &parent, start, goal));
        }
        for adj in graph.neighbors(node) {
            let alt = dist[node] + adj.weight;
            if !done[adj.node] && alt < dist[adj.node] {
                dist[adj.node] = alt;
                parent[adj.node] = Some(Via { from: node, weight: adj.weight, kind: adj.kind });
                queue.push(Reverse(Entry { priority: alt, cost: alt, node: adj.node }));
            }
        }
    }
    Err(no_path(graph, start, goal))
}

/// Graph geodesic between two ambient points.
///
/// Each endpoint is encoded in its most confident chart, joined to its `k`
/// nearest nodes there, and A* runs on that ephemeral overlay.
pub fn geodesic_between(
    graph: &LatentGraph,
    atlas: &dyn Atlas,
    x0: &AmbientPoint,
    x1: &AmbientPoint,
    k: usize,
) -> Result<GeodesicPath> {
    let mut session = graph.session(atlas)?;
    let mut endpoint = |x: &AmbientPoint| -> Result<usize> {
        let chart = atlas.argmax_chart(x)?;
        let z = atlas.encode(chart, x)?;
        session.add_query_node(LatentCoord::new(chart, z), k)
    };
    let start = endpoint(x0)?;
    let goal = endpoint(x1)?;
    astar(&session, start, goal)
}

/// A point placed along a path at a given Riemannian arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub coord: LatentCoord,
    pub ambient: AmbientPoint,
    /// Arc-length parameter this sample was placed at.
    pub arc_length: f64,
}

/// `count` samples spaced evenly in arc length along `path`.
///
/// Inside an intra-chart segment the latent point is interpolated linearly in
/// that chart. Samples falling inside a cross-chart segment snap to the
/// nearer endpoint, since no latent interpolant exists across charts.
pub fn resample_equidistant(path: &GeodesicPath, atlas: &dyn Atlas, count: usize) -> Result<Vec<PathSample>> {
    if count < 2 {
        return Err(Error::usage(format!("resampling needs count >= 2, got {count}")));
    }
    if path.nodes.is_empty() {
        return Err(Error::usage("cannot resample an empty path"));
    }
    let mut cumulative = Vec::with_capacity(path.nodes.len());
    cumulative.push(0.0);
    for len in &path.segment_lengths {
        cumulative.push(cumulative.last().unwrap() + len);
    }
    let total = *cumulative.last().unwrap();
    let last = path.nodes.len() - 1;

    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for j in 0..count {
        let s = if j + 1 == count {
            total
        } else {
            j as f64 * total / (count - 1) as f64
        };
        let coord = if j == 0 || last == 0 {
            path.nodes[0].clone()
        } else if j + 1 == count {
            path.nodes[last].clone()
        } else {
            while seg + 1 < last && cumulative[seg + 1] < s {
                seg += 1;
            }
            let (a, b) = (&path.nodes[seg], &path.nodes[seg + 1]);
            let len = path.segment_lengths[seg];
            let t = if len > 0.0 {
                ((s - cumulative[seg]) / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            match path.segment_kinds[seg] {
                EdgeKind::IntraChart => LatentCoord::new(
                    a.chart,
                    a.z.iter().zip(&b.z).map(|(p, q)| (1.0 - t) * p + t * q).collect(),
                ),
                EdgeKind::CrossChart if t < 0.5 => a.clone(),
                EdgeKind::CrossChart => b.clone(),
            }
        };
        let ambient = atlas.decode(&coord)?;
        out.push(PathSample { coord, ambient, arc_length: s });
    }
    Ok(out)
}

/// Sample indices `j` where the chart changes between sample `j` and `j+1`,
/// as `(j, from_chart, to_chart)`.
pub fn chart_transitions(samples: &[PathSample]) -> Vec<(usize, usize, usize)> {
    samples
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].coord.chart != w[1].coord.chart)
        .map(|(j, w)| (j, w[0].coord.chart, w[1].coord.chart))
        .collect()
}
