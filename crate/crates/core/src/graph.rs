//! Multi-chart latent graph.
//!
//! Every sampled data point `x` becomes one node per chart `y` with
//! `psi_y(x) > eps`, placed at `F_y(x)`. Inside each chart, nodes are joined
//! to their k nearest latent neighbours (union-symmetrized) and weighted by the
//! discretized decoded curve length. Nodes that encode the same data point in
//! two charts are joined by a cross-chart edge weighted by the ambient
//! distance between their decodings.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_ambient, check_latent, euclidean, AmbientPoint, Atlas, Fingerprint, LatentCoord};
use crate::knn::{knn, KdTree};
use crate::metric::{segment_length, DEFAULT_FD_STEP, DEFAULT_STEPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Number of data points sampled into the graph.
    pub samples: usize,
    /// Neighbours per node inside a chart.
    pub k: usize,
    /// Chords per intra-chart edge weight.
    pub steps: usize,
    /// Chart membership threshold on the partition of unity.
    pub eps: f64,
    pub seed: u64,
    pub fd_step: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            samples: 2000,
            k: 20,
            steps: DEFAULT_STEPS,
            eps: 0.05,
            seed: 0,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::usage("k must be at least 1"));
        }
        if self.samples < self.k + 1 {
            return Err(Error::usage(format!(
                "sample count {} must be at least k+1 = {}",
                self.samples,
                self.k + 1
            )));
        }
        if self.steps == 0 {
            return Err(Error::usage("steps must be at least 1"));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::usage(format!("eps must be a finite value >= 0, got {}", self.eps)));
        }
        if !(self.fd_step > 0.0) || !self.fd_step.is_finite() {
            return Err(Error::usage(format!("fd_step must be > 0, got {}", self.fd_step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub id: usize,
    pub coord: LatentCoord,
    /// `decode(coord)` cached at insertion.
    pub decoded: AmbientPoint,
    /// Row of the dataset this node encodes; `None` for query nodes.
    pub source_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    IntraChart,
    CrossChart,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::IntraChart => "intra_chart",
            EdgeKind::CrossChart => "cross_chart",
        }
    }
}

/// Undirected edge, stored once with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjacent {
    pub node: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

/// Read access shared by the immutable graph and query overlays.
pub trait GraphView {
    fn node_count(&self) -> usize;
    fn node(&self, id: usize) -> &GraphNode;
    fn neighbors(&self, id: usize) -> impl Iterator<Item = &Adjacent> + '_;
}

#[derive(Debug, Clone)]
pub struct LatentGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<Adjacent>>,
    config: BuildConfig,
    fingerprint: Fingerprint,
    /// Node ids of each chart, ascending.
    chart_nodes: Vec<Vec<usize>>,
    chart_trees: Vec<KdTree>,
    warnings: Vec<String>,
}

impl LatentGraph {
    /// Assembles a graph and checks its structural invariants.
    pub fn from_parts(
        nodes: Vec<GraphNode>,
        mut edges: Vec<GraphEdge>,
        config: BuildConfig,
        fingerprint: Fingerprint,
    ) -> Result<Self> {
        let dims = fingerprint.dims;
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::format(format!("nodes[{i}].id: expected {i}, found {}", node.id)));
            }
            check_latent(dims, node.coord.chart, &node.coord.z)
                .map_err(|e| Error::format(format!("nodes[{i}]: {e}")))?;
            check_ambient(dims, &node.decoded)
                .map_err(|e| Error::format(format!("nodes[{i}].decoded: {e}")))?;
        }
        edges.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= e.b || e.b >= nodes.len() {
                return Err(Error::format(format!(
                    "edges[{i}]: endpoints ({}, {}) must satisfy a < b < {}",
                    e.a,
                    e.b,
                    nodes.len()
                )));
            }
            if i > 0 && (edges[i - 1].a, edges[i - 1].b) == (e.a, e.b) {
                return Err(Error::format(format!("edges[{i}]: duplicate edge ({}, {})", e.a, e.b)));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::format(format!("edges[{i}].w: invalid weight {}", e.weight)));
            }
            let (na, nb) = (&nodes[e.a], &nodes[e.b]);
            let consistent = match e.kind {
                EdgeKind::IntraChart => na.coord.chart == nb.coord.chart,
                EdgeKind::CrossChart => {
                    na.coord.chart != nb.coord.chart
                        && na.source_index.is_some()
                        && na.source_index == nb.source_index
                }
            };
            if !consistent {
                return Err(Error::format(format!(
                    "edges[{i}].kind: {} edge between nodes {} and {} is inconsistent with their charts",
                    e.kind.as_str(),
                    e.a,
                    e.b
                )));
            }
            adjacency[e.a].push(Adjacent { node: e.b, weight: e.weight, kind: e.kind });
            adjacency[e.b].push(Adjacent { node: e.a, weight: e.weight, kind: e.kind });
        }
        for list in &mut adjacency {
            list.sort_by_key(|adj| adj.node);
        }
        let mut chart_nodes = vec![Vec::new(); dims.m];
        for node in &nodes {
            chart_nodes[node.coord.chart].push(node.id);
        }
        let chart_trees = chart_nodes
            .iter()
            .map(|ids| KdTree::new(ids.iter().map(|&id| nodes[id].coord.z.clone()).collect()))
            .collect();
        Ok(LatentGraph {
            nodes,
            edges,
            adjacency,
            config,
            fingerprint,
            chart_nodes,
            chart_trees,
            warnings: Vec::new(),
        })
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn chart_nodes(&self, chart: usize) -> &[usize] {
        &self.chart_nodes[chart]
    }

    /// Diagnostics recorded while building (starved charts).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn check_atlas(&self, atlas: &dyn Atlas) -> Result<()> {
        let other = atlas.fingerprint();
        if other != self.fingerprint {
            return Err(Error::Fingerprint {
                graph: self.fingerprint.to_string(),
                atlas: other.to_string(),
            });
        }
        Ok(())
    }

    /// Opens an overlay for inserting query nodes without touching the graph.
    pub fn session<'g>(&'g self, atlas: &'g dyn Atlas) -> Result<QuerySession<'g>> {
        self.check_atlas(atlas)?;
        Ok(QuerySession {
            graph: self,
            atlas,
            extra_nodes: Vec::new(),
            extra_adjacency: Vec::new(),
            base_extra: BTreeMap::new(),
        })
    }
}

impl GraphView for LatentGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node(&self, id: usize) -> &GraphNode {
        &self.nodes[id]
    }

    fn neighbors(&self, id: usize) -> impl Iterator<Item = &Adjacent> + '_ {
        self.adjacency[id].iter()
    }
}

/// Builds the multi-chart graph from `data`.
pub fn build_graph(atlas: &dyn Atlas, data: &[AmbientPoint], cfg: &BuildConfig) -> Result<LatentGraph> {
    cfg.validate()?;
    let dims = atlas.dims();
    if data.len() < cfg.samples {
        return Err(Error::usage(format!(
            "dataset has {} points, {} requested",
            data.len(),
            cfg.samples
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampled = index::sample(&mut rng, data.len(), cfg.samples).into_vec();
    for &i in &sampled {
        check_ambient(dims, &data[i]).map_err(|e| Error::usage(format!("data row {i}: {e}")))?;
    }

    let weights: Vec<Vec<f64>> = sampled
        .par_iter()
        .map(|&i| atlas.partition(&data[i]).map(|w| w.as_slice().to_vec()))
        .collect::<Result<_>>()?;

    let mut nodes: Vec<GraphNode> = Vec::new();
    // node_of[chart][sample position] -> node id
    let mut node_of = vec![vec![None; sampled.len()]; dims.m];
    let mut warnings = Vec::new();
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for chart in 0..dims.m {
        let members: Vec<usize> = (0..sampled.len())
            .filter(|&s| weights[s][chart] > cfg.eps)
            .collect();
        let encoded: Vec<(Vec<f64>, Vec<f64>)> = members
            .par_iter()
            .map(|&s| {
                let z = atlas.encode_raw(chart, data[sampled[s]].as_slice())?;
                let x = atlas.decode_raw(chart, &z);
                Ok((z, x))
            })
            .collect::<Result<_>>()?;
        let first = nodes.len();
        for (&s, (z, x)) in members.iter().zip(encoded) {
            node_of[chart][s] = Some(nodes.len());
            nodes.push(GraphNode {
                id: nodes.len(),
                coord: LatentCoord::new(chart, z),
                decoded: AmbientPoint(x),
                source_index: Some(sampled[s]),
            });
        }

        if members.is_empty() {
            warnings.push(format!("chart {} has no members above eps; skipped", chart + 1));
            continue;
        }
        let k = cfg.k.min(members.len() - 1);
        if k < cfg.k {
            warnings.push(format!(
                "chart {} has only {} members; using k={k}",
                chart + 1,
                members.len()
            ));
        }
        if k == 0 {
            continue;
        }
        let latent: Vec<Vec<f64>> = nodes[first..].iter().map(|n| n.coord.z.clone()).collect();
        for (i, neigh) in knn(&latent, k)?.into_iter().enumerate() {
            for j in neigh {
                let (a, b) = (first + i.min(j), first + i.max(j));
                pairs.insert((a, b));
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    let mut edges: Vec<GraphEdge> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (na, nb) = (&nodes[a], &nodes[b]);
            GraphEdge {
                a,
                b,
                weight: segment_length(atlas, na.coord.chart, &na.coord.z, &nb.coord.z, cfg.steps),
                kind: EdgeKind::IntraChart,
            }
        })
        .collect();

    for i in 0..dims.m {
        for j in 0..i {
            for s in 0..sampled.len() {
                if let (Some(a), Some(b)) = (node_of[j][s], node_of[i][s]) {
                    edges.push(GraphEdge {
                        a,
                        b,
                        weight: nodes[a].decoded.distance(&nodes[b].decoded),
                        kind: EdgeKind::CrossChart,
                    });
                }
            }
        }
    }

    let mut graph = LatentGraph::from_parts(nodes, edges, cfg.clone(), atlas.fingerprint())?;
    graph.warnings = warnings;
    Ok(graph)
}

/// Ephemeral overlay of query nodes on top of an immutable [`LatentGraph`].
pub struct QuerySession<'g> {
    graph: &'g LatentGraph,
    atlas: &'g dyn Atlas,
    extra_nodes: Vec<GraphNode>,
    extra_adjacency: Vec<Vec<Adjacent>>,
    base_extra: BTreeMap<usize, Vec<Adjacent>>,
}

impl<'g> QuerySession<'g> {
    pub fn graph(&self) -> &'g LatentGraph {
        self.graph
    }

    pub fn atlas(&self) -> &'g dyn Atlas {
        self.atlas
    }

    /// Inserts `p` and joins it to its `k` nearest nodes of chart `p.chart`
    /// (base graph and earlier query nodes alike). Returns the new node id.
    pub fn add_query_node(&mut self, p: LatentCoord, k: usize) -> Result<usize> {
        let dims = self.atlas.dims();
        check_latent(dims, p.chart, &p.z)?;
        if k == 0 {
            return Err(Error::usage("query nodes need k >= 1"));
        }
        let base = self.graph.nodes.len();
        let mut candidates: Vec<(f64, usize)> = self.graph.chart_trees[p.chart]
            .nearest(&p.z, k, None)
            .into_iter()
            .map(|(local, dist)| (dist, self.graph.chart_nodes[p.chart][local]))
            .collect();
        candidates.extend(
            self.extra_nodes
                .iter()
                .filter(|n| n.coord.chart == p.chart)
                .map(|n| (euclidean(&n.coord.z, &p.z), n.id)),
        );
        if candidates.is_empty() {
            return Err(Error::NoConnection { chart: p.chart + 1 });
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate(k);

        let id = base + self.extra_nodes.len();
        let steps = self.graph.config.steps;
        let mut own = Vec::with_capacity(candidates.len());
        for &(_, other) in &candidates {
            let z_other = &self.node(other).coord.z;
            let weight = segment_length(self.atlas, p.chart, z_other, &p.z, steps);
            own.push(Adjacent { node: other, weight, kind: EdgeKind::IntraChart });
            let back = Adjacent { node: id, weight, kind: EdgeKind::IntraChart };
            if other < base {
                self.base_extra.entry(other).or_default().push(back);
            } else {
                self.extra_adjacency[other - base].push(back);
            }
        }
        own.sort_by_key(|adj| adj.node);
        let decoded = AmbientPoint(self.atlas.decode_raw(p.chart, &p.z));
        self.extra_nodes.push(GraphNode { id, coord: p, decoded, source_index: None });
        self.extra_adjacency.push(own);
        Ok(id)
    }

    /// Materializes the overlay into a standalone graph.
    pub fn into_graph(self) -> Result<LatentGraph> {
        let base = self.graph.nodes.len();
        let mut nodes = self.graph.nodes.clone();
        nodes.extend(self.extra_nodes);
        let mut edges = self.graph.edges.clone();
        for (offset, list) in self.extra_adjacency.iter().enumerate() {
            let id = base + offset;
            for adj in list.iter().filter(|adj| adj.node < id) {
                edges.push(GraphEdge { a: adj.node, b: id, weight: adj.weight, kind: adj.kind });
            }
        }
        LatentGraph::from_parts(nodes, edges, self.graph.config.clone(), self.graph.fingerprint.clone())
    }
}

impl GraphView for QuerySession<'_> {
    fn node_count(&self) -> usize {
        self.graph.nodes.len() + self.extra_nodes.len()
    }

    fn node(&self, id: usize) -> &GraphNode {
        let base = self.graph.nodes.len();
        if id < base {
            &self.graph.nodes[id]
        } else {
            &self.extra_nodes[id - base]
        }
    }

    fn neighbors(&self, id: usize) -> impl Iterator<Item = &Adjacent> + '_ {
        let base = self.graph.nodes.len();
        let (own, extra): (&[Adjacent], &[Adjacent]) = if id < base {
            (
                &self.graph.adjacency[id],
                self.base_extra.get(&id).map_or(&[][..], Vec::as_slice),
            )
        } else {
            (&self.extra_adjacency[id - base], &[])
        };
        own.iter().chain(extra)
    }
}

/// Node ids reachable from `start`, in BFS order.
pub fn component_of<G: GraphView>(graph: &G, start: usize) -> Vec<usize> {
    let mut seen = vec![false; graph.node_count()];
    let mut order = vec![start];
    seen[start] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for adj in graph.neighbors(u) {
            if !seen[adj.node] {
                seen[adj.node] = true;
                order.push(adj.node);
            }
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub intra_chart_edges: usize,
    pub cross_chart_edges: usize,
    /// Largest hop distance inside the largest connected component.
    pub diameter: usize,
    pub components: usize,
    pub largest_component: usize,
    pub chart_nodes: Vec<usize>,
}

fn eccentricity<G: GraphView>(graph: &G, start: usize) -> usize {
    let mut dist = vec![usize::MAX; graph.node_count()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = 0;
    while let Some(u) = queue.pop_front() {
        far = far.max(dist[u]);
        for adj in graph.neighbors(u) {
            if dist[adj.node] == usize::MAX {
                dist[adj.node] = dist[u] + 1;
                queue.push_back(adj.node);
            }
        }
    }
    far
}

pub fn graph_stats(graph: &LatentGraph) -> GraphStats {
    let n = graph.node_count();
    let mut label = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let comp = component_of(graph, start);
        for &v in &comp {
            label[v] = components.len();
        }
        components.push(comp);
    }
    // Largest component; ties go to the one holding the lowest node id.
    let largest = components
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
        .map(|(i, _)| i);
    let diameter = largest.map_or(0, |c| {
        components[c]
            .par_iter()
            .map(|&v| eccentricity(graph, v))
            .max()
            .unwrap_or(0)
    });
    let cross = graph.edges.iter().filter(|e| e.kind == EdgeKind::CrossChart).count();
    GraphStats {
        nodes: n,
        edges: graph.edges.len(),
        intra_chart_edges: graph.edges.len() - cross,
        cross_chart_edges: cross,
        diameter,
        components: components.len(),
        largest_component: largest.map_or(0, |c| components[c].len()),
        chart_nodes: graph.chart_nodes.iter().map(Vec::len).collect(),
    }
}
