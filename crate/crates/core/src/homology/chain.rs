use std::collections::HashMap;

use crate::coarse::CoarseGraph;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// A 1-chain over F₂: a finite set of edge indices of one host graph, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain1 {
    edges: Vec<u32>,
}

impl Chain1 {
    pub fn new() -> Self {
        Self::default()
    }

    /// Edges listed an even number of times cancel.
    pub fn from_edges(edges: impl IntoIterator<Item = u32>) -> Self {
        let mut v: Vec<u32> = edges.into_iter().collect();
        v.sort_unstable();
        let mut out: Vec<u32> = Vec::with_capacity(v.len());
        for e in v {
            if out.last() == Some(&e) {
                out.pop();
            } else {
                out.push(e);
            }
        }
        Self { edges: out }
    }

    /// The chain of a vertex walk (edges traversed twice cancel).
    pub fn from_path(graph: &Graph, path: &[u32]) -> Result<Self> {
        let mut edges = Vec::with_capacity(path.len().saturating_sub(1));
        for w in path.windows(2) {
            let e = graph
                .edge_between(w[0], w[1])
                .ok_or_else(|| Error::Parameter(format!("{} and {} are not adjacent", w[0], w[1])))?;
            edges.push(e);
        }
        Ok(Self::from_edges(edges))
    }

    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: u32) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Largest edge index, the elimination pivot.
    pub fn pivot(&self) -> Option<u32> {
        self.edges.last().copied()
    }

    /// `A ⊕ B`.
    pub fn xor(&self, other: &Chain1) -> Chain1 {
        Chain1 { edges: xor_sorted(&self.edges, &other.edges) }
    }

    pub fn xor_assign(&mut self, other: &Chain1) {
        self.edges = xor_sorted(&self.edges, &other.edges);
    }

    /// `∂`: vertices of odd incidence, sorted.
    pub fn boundary(&self, graph: &Graph) -> Vec<u32> {
        let mut ends: Vec<u32> = self.edges.iter().flat_map(|&e| graph.endpoints(e)).collect();
        ends.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < ends.len() {
            let mut j = i;
            while j < ends.len() && ends[j] == ends[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                out.push(ends[i]);
            }
            i = j;
        }
        out
    }

    pub fn is_cycle(&self, graph: &Graph) -> bool {
        self.boundary(graph).is_empty()
    }

    /// Vertices touched by some edge, sorted.
    pub fn vertex_support(&self, graph: &Graph) -> Vec<u32> {
        let mut vs: Vec<u32> = self.edges.iter().flat_map(|&e| graph.endpoints(e)).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Diameter of the vertex support in the host metric.
    pub fn diameter(&self, graph: &Graph) -> u32 {
        let support = self.vertex_support(graph);
        let mut best = 0;
        for &s in &support {
            let dist = graph.bfs(s, u32::MAX);
            for &t in &support {
                best = best.max(dist[t as usize]);
            }
        }
        best
    }
}

pub(crate) fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// `ρ̂` on chains: an edge inside one tile maps to 0, an edge between tiles to
/// the coarse edge joining them.
pub fn project_chain(coarse: &CoarseGraph<'_>, chain: &Chain1) -> Chain1 {
    let g = coarse.region().graph();
    Chain1::from_edges(chain.edges().iter().filter_map(|&e| {
        let [a, b] = g.endpoints(e);
        let (s, t) = (coarse.tile_of(a), coarse.tile_of(b));
        if s == t {
            None
        } else {
            coarse.graph().edge_between(s, t)
        }
    }))
}

/// Chronological loop erasure of a vertex walk.
pub fn loop_erase(walk: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(walk.len());
    let mut pos: HashMap<u32, usize> = HashMap::new();
    for &v in walk {
        if let Some(&i) = pos.get(&v) {
            for w in out.drain(i + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// A simple `x → y` path inside a chain whose boundary is `{x, y}`: an Eulerian
/// trail of the component of `x`, loop-erased.
pub fn extract_path(graph: &Graph, chain: &Chain1, x: u32, y: u32) -> Result<Vec<u32>> {
    if x == y {
        return Ok(vec![x]);
    }
    let mut adj: HashMap<u32, Vec<(u32, usize)>> = HashMap::new();
    for (i, &e) in chain.edges().iter().enumerate() {
        let [a, b] = graph.endpoints(e);
        adj.entry(a).or_default().push((b, i));
        adj.entry(b).or_default().push((a, i));
    }
    if !adj.contains_key(&x) {
        return Err(Error::InvariantViolation(format!("vertex {x} is not on the chain")));
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }
    // Hierholzer from x; the boundary guarantees the trail ends at y.
    let mut used = vec![false; chain.len()];
    let mut cursor: HashMap<u32, usize> = HashMap::new();
    let mut stack = vec![x];
    let mut trail = Vec::new();
    while let Some(&v) = stack.last() {
        let list = &adj[&v];
        let c = cursor.entry(v).or_insert(0);
        while *c < list.len() && used[list[*c].1] {
            *c += 1;
        }
        if *c == list.len() {
            trail.push(v);
            stack.pop();
        } else {
            let (w, i) = list[*c];
            used[i] = true;
            stack.push(w);
        }
    }
    trail.reverse();
    if trail.last() != Some(&y) {
        return Err(Error::InvariantViolation(format!("component of {x} does not end at {y}")));
    }
    Ok(loop_erase(&trail))
}
