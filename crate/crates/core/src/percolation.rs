//! Seeded, monotonically coupled bond percolation on a region.

use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::graph::{Graph, UNREACHED};
use crate::region::FiniteRegion;
use crate::rng;

/// Read access to edge states. Implemented by materialized samples, lazily
/// evaluated coupled samples and views with one edge forced closed.
pub trait EdgeStates: Sync {
    fn is_open(&self, e: u32) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleOrigin {
    /// Edge `e` open iff `U(seed, e) < p`.
    Coupled { p: f64, seed: u64 },
    /// Hand-built configuration.
    Explicit,
}

/// A percolation configuration with its open edges materialized as a bitset.
#[derive(Clone, Debug)]
pub struct PercSample<'r> {
    region: &'r FiniteRegion,
    origin: SampleOrigin,
    open: FixedBitSet,
}

impl<'r> PercSample<'r> {
    pub fn region(&self) -> &'r FiniteRegion {
        self.region
    }

    pub fn graph(&self) -> &'r Graph {
        self.region.graph()
    }

    pub fn origin(&self) -> SampleOrigin {
        self.origin
    }

    pub fn p(&self) -> Option<f64> {
        match self.origin {
            SampleOrigin::Coupled { p, .. } => Some(p),
            SampleOrigin::Explicit => None,
        }
    }

    pub fn open_count(&self) -> usize {
        self.open.count_ones(..)
    }

    pub fn open_edges(&self) -> impl Iterator<Item = u32> + '_ {
        self.open.ones().map(|e| e as u32)
    }

    /// The same configuration with edge `e` forced closed.
    pub fn with_closed(&self, e: u32) -> Deleted<'_, Self> {
        Deleted { inner: self, edge: e }
    }

    /// Region export followed by a line listing the open edge indices.
    pub fn to_text(&self) -> String {
        let mut out = self.region.to_text();
        out.push_str("open");
        for e in self.open_edges() {
            let _ = write!(out, " {e}");
        }
        out.push('\n');
        out
    }
}

impl EdgeStates for PercSample<'_> {
    #[inline]
    fn is_open(&self, e: u32) -> bool {
        self.open.contains(e as usize)
    }
}

/// Coupled configuration evaluated edge by edge on demand.
#[derive(Clone, Copy, Debug)]
pub struct LazySample {
    pub p: f64,
    pub seed: u64,
}

impl EdgeStates for LazySample {
    #[inline]
    fn is_open(&self, e: u32) -> bool {
        rng::edge_uniform(self.seed, e) < self.p
    }
}

/// Precomputed edge uniforms for one seed; thresholding gives every `p` at once.
#[derive(Clone, Debug)]
pub struct Uniforms(pub Vec<f64>);

impl Uniforms {
    pub fn new(num_edges: usize, seed: u64) -> Self {
        Self((0..num_edges as u32).map(|e| rng::edge_uniform(seed, e)).collect())
    }

    pub fn at(&self, p: f64) -> Threshold<'_> {
        Threshold { u: &self.0, p }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Threshold<'a> {
    u: &'a [f64],
    p: f64,
}

impl EdgeStates for Threshold<'_> {
    #[inline]
    fn is_open(&self, e: u32) -> bool {
        self.u[e as usize] < self.p
    }
}

/// `inner` with one edge forced closed.
#[derive(Clone, Copy, Debug)]
pub struct Deleted<'a, S> {
    inner: &'a S,
    edge: u32,
}

impl<'a, S> Deleted<'a, S> {
    pub fn new(inner: &'a S, edge: u32) -> Self {
        Self { inner, edge }
    }
}

impl<S: EdgeStates> EdgeStates for Deleted<'_, S> {
    #[inline]
    fn is_open(&self, e: u32) -> bool {
        e != self.edge && self.inner.is_open(e)
    }
}

/// Bit `e` set iff `U(seed, e) < p`.
pub fn sample_config(region: &FiniteRegion, p: f64, seed: u64) -> PercSample<'_> {
    let m = region.num_edges();
    let mut open = FixedBitSet::with_capacity(m);
    for e in 0..m as u32 {
        if rng::edge_uniform(seed, e) < p {
            open.insert(e as usize);
        }
    }
    PercSample { region, origin: SampleOrigin::Coupled { p, seed }, open }
}

/// A configuration with exactly the listed edges open.
pub fn sample_from_open_edges(region: &FiniteRegion, open_edges: impl IntoIterator<Item = u32>) -> Result<PercSample<'_>> {
    let m = region.num_edges();
    let mut open = FixedBitSet::with_capacity(m);
    for e in open_edges {
        if e as usize >= m {
            return Err(Error::Parameter(format!("edge {e} out of range ({m} edges)")));
        }
        open.insert(e as usize);
    }
    Ok(PercSample { region, origin: SampleOrigin::Explicit, open })
}

/// Open-cluster decomposition. Labels are numbered in order of each
/// cluster's smallest vertex id.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    pub labels: Vec<u32>,
    pub sizes: Vec<u32>,
    /// Largest cluster, ties to the smaller label. `None` when every cluster
    /// is a single vertex (no giant-cluster proxy exists).
    pub giant: Option<u32>,
}

impl ClusterLabeling {
    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn in_giant(&self, v: u32) -> bool {
        self.giant == Some(self.labels[v as usize])
    }

    pub fn same_cluster(&self, u: u32, v: u32) -> bool {
        self.labels[u as usize] == self.labels[v as usize]
    }

    pub fn giant_size(&self) -> usize {
        self.giant.map_or(0, |g| self.sizes[g as usize] as usize)
    }
}

pub fn clusters(sample: &PercSample<'_>) -> ClusterLabeling {
    clusters_of(sample.graph(), sample)
}

pub fn clusters_of<S: EdgeStates>(graph: &Graph, states: &S) -> ClusterLabeling {
    let n = graph.num_vertices();
    let mut uf = UnionFind::<u32>::new(n);
    for (e, &[a, b]) in graph.edges().iter().enumerate() {
        if states.is_open(e as u32) {
            uf.union(a, b);
        }
    }
    labeling_from_roots(n, |v| uf.find_mut(v))
}

pub(crate) fn labeling_from_roots(n: usize, mut root: impl FnMut(u32) -> u32) -> ClusterLabeling {
    let mut label_of_root = vec![UNREACHED; n];
    let mut labels = vec![0u32; n];
    let mut sizes: Vec<u32> = Vec::new();
    for v in 0..n as u32 {
        let r = root(v) as usize;
        if label_of_root[r] == UNREACHED {
            label_of_root[r] = sizes.len() as u32;
            sizes.push(0);
        }
        let l = label_of_root[r];
        labels[v as usize] = l;
        sizes[l as usize] += 1;
    }
    let mut giant = None;
    let mut best = 1u32;
    for (l, &s) in sizes.iter().enumerate() {
        if s > best {
            best = s;
            giant = Some(l as u32);
        }
    }
    ClusterLabeling { labels, sizes, giant }
}

/// Reusable BFS marks for repeated chemical-distance queries on one graph.
#[derive(Clone, Debug)]
pub struct BfsScratch {
    mark: Vec<u32>,
    dist: Vec<u32>,
    stamp: u32,
    front: Vec<u32>,
    back: Vec<u32>,
    next: Vec<u32>,
}

impl BfsScratch {
    pub fn new(n: usize) -> Self {
        Self { mark: vec![0; n], dist: vec![0; n], stamp: 0, front: Vec::new(), back: Vec::new(), next: Vec::new() }
    }

    fn fresh_stamps(&mut self) -> (u32, u32) {
        if self.stamp >= u32::MAX - 2 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 0;
        }
        self.stamp += 2;
        (self.stamp - 1, self.stamp)
    }
}

/// Bidirectional BFS over open edges; `None` when `u` and `v` are in different
/// open clusters of the region.
pub fn chemical_distance_in<S: EdgeStates>(graph: &Graph, states: &S, u: u32, v: u32, scratch: &mut BfsScratch) -> Option<u32> {
    if u == v {
        return Some(0);
    }
    let (sa, sb) = scratch.fresh_stamps();
    let BfsScratch { mark, dist, front, back, next, .. } = scratch;
    front.clear();
    back.clear();
    mark[u as usize] = sa;
    dist[u as usize] = 0;
    front.push(u);
    mark[v as usize] = sb;
    dist[v as usize] = 0;
    back.push(v);
    loop {
        if front.is_empty() || back.is_empty() {
            return None;
        }
        let (layer, own, other) = if front.len() <= back.len() { (&mut *front, sa, sb) } else { (&mut *back, sb, sa) };
        next.clear();
        let mut best = UNREACHED;
        for &w in layer.iter() {
            let dw = dist[w as usize];
            for a in graph.neighbors(w) {
                let x = a.to as usize;
                if mark[x] == own || !states.is_open(a.edge) {
                    continue;
                }
                if mark[x] == other {
                    best = best.min(dw + 1 + dist[x]);
                    continue;
                }
                mark[x] = own;
                dist[x] = dw + 1;
                next.push(a.to);
            }
        }
        if best != UNREACHED {
            return Some(best);
        }
        std::mem::swap(layer, next);
    }
}

pub fn chemical_distance(sample: &PercSample<'_>, u: u32, v: u32) -> Option<u32> {
    let mut scratch = BfsScratch::new(sample.region().num_vertices());
    chemical_distance_in(sample.graph(), sample, u, v, &mut scratch)
}

/// Length of the shortest open bypass between the endpoints of `e` once `e` is closed.
pub fn chemical_distance_deleted(sample: &PercSample<'_>, e: u32) -> Option<u32> {
    let [u, v] = sample.graph().endpoints(e);
    let mut scratch = BfsScratch::new(sample.region().num_vertices());
    chemical_distance_in(sample.graph(), &sample.with_closed(e), u, v, &mut scratch)
}

/// Single-source BFS over open edges with full distance field.
pub fn open_bfs<S: EdgeStates>(graph: &Graph, states: &S, source: u32, max_depth: u32) -> Vec<u32> {
    let mut dist = vec![UNREACHED; graph.num_vertices()];
    dist[source as usize] = 0;
    let mut layer = vec![source];
    let mut next = Vec::new();
    let mut d = 0;
    while !layer.is_empty() && d < max_depth {
        for &w in &layer {
            for a in graph.neighbors(w) {
                if dist[a.to as usize] == UNREACHED && states.is_open(a.edge) {
                    dist[a.to as usize] = d + 1;
                    next.push(a.to);
                }
            }
        }
        d += 1;
        std::mem::swap(&mut layer, &mut next);
        next.clear();
    }
    dist
}

/// Vertices of a shortest open path from `u` to `v`, if any.
pub fn open_geodesic<S: EdgeStates>(graph: &Graph, states: &S, u: u32, v: u32) -> Option<Vec<u32>> {
    let dist = open_bfs(graph, states, u, UNREACHED);
    if dist[v as usize] == UNREACHED {
        return None;
    }
    let mut path = vec![v];
    let mut cur = v;
    while cur != u {
        let d = dist[cur as usize];
        cur = graph.neighbors(cur).iter().find(|a| dist[a.to as usize] == d - 1 && states.is_open(a.edge))?.to;
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// The giant-cluster vertex nearest to `u` in the graph metric; ties are
/// broken uniformly by a draw keyed on `(tie_seed, u)`.
pub fn ring_point(graph: &Graph, labeling: &ClusterLabeling, u: u32, tie_seed: u64) -> Result<u32> {
    nearest_giant(graph, labeling, u, tie_seed).map(|(v, _)| v)
}

/// [`ring_point`] together with its graph distance from `u`.
pub fn nearest_giant(graph: &Graph, labeling: &ClusterLabeling, u: u32, tie_seed: u64) -> Result<(u32, u32)> {
    if labeling.giant.is_none() {
        return Err(Error::Precondition("the configuration has no giant cluster".into()));
    }
    if labeling.in_giant(u) {
        return Ok((u, 0));
    }
    let mut seen = FixedBitSet::with_capacity(graph.num_vertices());
    seen.insert(u as usize);
    let mut layer = vec![u];
    let mut next = Vec::new();
    let mut depth = 0;
    while !layer.is_empty() {
        depth += 1;
        next.clear();
        for &w in &layer {
            for a in graph.neighbors(w) {
                if !seen.put(a.to as usize) {
                    next.push(a.to);
                }
            }
        }
        let mut hits: Vec<u32> = next.iter().copied().filter(|&w| labeling.in_giant(w)).collect();
        if !hits.is_empty() {
            hits.sort_unstable();
            let k = (rng::uniform(tie_seed, rng::stream::TIE, u as u64) * hits.len() as f64) as usize;
            return Ok((hits[k.min(hits.len() - 1)], depth));
        }
        std::mem::swap(&mut layer, &mut next);
    }
    Err(Error::InvariantViolation(format!("giant cluster unreachable from vertex {u}")))
}

/// `D_p(u, v)`: chemical distance between the ring points of `u` and `v`.
pub fn ring_distance<S: EdgeStates>(graph: &Graph, states: &S, labeling: &ClusterLabeling, u: u32, v: u32, tie_seed: u64, scratch: &mut BfsScratch) -> Result<u32> {
    let a = ring_point(graph, labeling, u, tie_seed)?;
    let b = ring_point(graph, labeling, v, tie_seed)?;
    chemical_distance_in(graph, states, a, b, scratch)
        .ok_or_else(|| Error::InvariantViolation(format!("ring points {a} and {b} are both in the giant cluster but not connected")))
}

/// Checks that `path` is a walk along open edges.
pub fn is_open_path<S: EdgeStates>(graph: &Graph, states: &S, path: &[u32]) -> bool {
    path.windows(2).all(|w| graph.edge_between(w[0], w[1]).is_some_and(|e| states.is_open(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::build_lattice;

    #[test]
    fn extremes() {
        let r = build_lattice(2, 5).unwrap();
        assert_eq!(sample_config(&r, 1.0, 3).open_count(), r.num_edges());
        assert_eq!(sample_config(&r, 0.0, 3).open_count(), 0);
        let all = clusters(&sample_config(&r, 1.0, 1));
        assert_eq!(all.num_clusters(), 1);
        assert_eq!(all.giant, Some(0));
        let none = clusters(&sample_config(&r, 0.0, 1));
        assert_eq!(none.num_clusters(), r.num_vertices());
        assert_eq!(none.giant, None);
    }

    #[test]
    fn coupling_is_monotone() {
        let r = build_lattice(2, 8).unwrap();
        for seed in 0..20 {
            let lo = sample_config(&r, 0.4, seed);
            let hi = sample_config(&r, 0.6, seed);
            assert!(lo.open_edges().all(|e| hi.is_open(e)));
            let lazy = LazySample { p: 0.4, seed };
            assert!((0..r.num_edges() as u32).all(|e| lazy.is_open(e) == lo.is_open(e)));
        }
    }

    #[test]
    fn chemical_distance_extremes() {
        let r = build_lattice(2, 6).unwrap();
        let full = sample_config(&r, 1.0, 0);
        let empty = sample_config(&r, 0.0, 0);
        let a = r.vertex_at(&[2, -3]).unwrap();
        let b = r.vertex_at(&[-1, 1]).unwrap();
        assert_eq!(chemical_distance(&full, a, b), Some(r.graph_distance(a, b).unwrap()));
        assert_eq!(chemical_distance(&empty, a, b), None);
        assert_eq!(chemical_distance(&empty, a, a), Some(0));
    }

    #[test]
    fn unit_square_bypass() {
        let r = build_lattice(2, 6).unwrap();
        let full = sample_config(&r, 1.0, 0);
        let empty = sample_config(&r, 0.0, 0);
        for e in 0..r.num_edges() as u32 {
            let [a, b] = r.graph().endpoints(e);
            if r.depth(a) < 5 && r.depth(b) < 5 {
                assert_eq!(chemical_distance_deleted(&full, e), Some(3));
            }
            assert_eq!(chemical_distance_deleted(&empty, e), None);
        }
    }

    #[test]
    fn ring_point_basics() {
        let r = build_lattice(2, 6).unwrap();
        let full = sample_config(&r, 1.0, 0);
        let lab = clusters(&full);
        for v in [0, 5, 17] {
            assert_eq!(ring_point(r.graph(), &lab, v, 99).unwrap(), v);
        }
        let empty = clusters(&sample_config(&r, 0.0, 0));
        assert!(matches!(ring_point(r.graph(), &empty, 0, 1), Err(Error::Precondition(_))));
    }
}
