//! Compact undirected simple graphs with BFS utilities.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

pub const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adj {
    pub to: u32,
    pub edge: u32,
}

/// CSR adjacency plus an indexed edge list. Neighbor lists are sorted by
/// neighbor id, so "first neighbor" always means "smallest id".
#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<u32>,
    adj: Vec<Adj>,
    edges: Vec<[u32; 2]>,
}

impl Graph {
    /// Builds a simple graph; rejects loops, repeated edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: Vec<[u32; 2]>) -> Result<Self> {
        let mut degree = vec![0u32; n + 1];
        for &[a, b] in &edges {
            if a == b {
                return Err(Error::Parameter(format!("loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::Parameter(format!("edge {a}-{b} out of range for {n} vertices")));
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![Adj { to: 0, edge: 0 }; 2 * edges.len()];
        for (e, &[a, b]) in edges.iter().enumerate() {
            adj[fill[a as usize] as usize] = Adj { to: b, edge: e as u32 };
            fill[a as usize] += 1;
            adj[fill[b as usize] as usize] = Adj { to: a, edge: e as u32 };
            fill[b as usize] += 1;
        }
        for v in 0..n {
            let list = &mut adj[offsets[v] as usize..offsets[v + 1] as usize];
            list.sort_unstable_by_key(|a| a.to);
            if list.windows(2).any(|w| w[0].to == w[1].to) {
                return Err(Error::Parameter(format!("multi-edge at vertex {v}")));
            }
        }
        Ok(Self { offsets, adj, edges })
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[Adj] {
        &self.adj[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    #[inline]
    pub fn endpoints(&self, e: u32) -> [u32; 2] {
        self.edges[e as usize]
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices() as u32).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn edge_between(&self, u: u32, v: u32) -> Option<u32> {
        let list = self.neighbors(u);
        list.binary_search_by_key(&v, |a| a.to).ok().map(|i| list[i].edge)
    }

    /// Hop distances from `sources`, stopping at `max_depth`.
    pub fn bfs_multi(&self, sources: &[u32], max_depth: u32) -> Vec<u32> {
        self.bfs_restricted(sources, max_depth, |_| true)
    }

    pub fn bfs(&self, source: u32, max_depth: u32) -> Vec<u32> {
        self.bfs_multi(&[source], max_depth)
    }

    /// BFS that only enters vertices accepted by `allowed` (sources are always entered).
    pub fn bfs_restricted(&self, sources: &[u32], max_depth: u32, allowed: impl Fn(u32) -> bool) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.num_vertices()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s as usize] == UNREACHED {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            if d >= max_depth {
                continue;
            }
            for a in self.neighbors(v) {
                if dist[a.to as usize] == UNREACHED && allowed(a.to) {
                    dist[a.to as usize] = d + 1;
                    queue.push_back(a.to);
                }
            }
        }
        dist
    }

    /// Vertices of a shortest `from -> to` path through allowed vertices. Each
    /// vertex steps to its smallest-id neighbor one layer closer to `from`.
    pub fn shortest_path_restricted(&self, from: u32, to: u32, allowed: impl Fn(u32) -> bool) -> Option<Vec<u32>> {
        let dist = self.bfs_restricted(&[from], UNREACHED, allowed);
        path_from_distances(self, &dist, to)
    }

    pub fn shortest_path(&self, from: u32, to: u32) -> Option<Vec<u32>> {
        self.shortest_path_restricted(from, to, |_| true)
    }
}

/// Walks down a BFS distance field from `to`, preferring the smallest-id predecessor.
pub fn path_from_distances(graph: &Graph, dist: &[u32], to: u32) -> Option<Vec<u32>> {
    if dist[to as usize] == UNREACHED {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while dist[cur as usize] > 0 {
        let d = dist[cur as usize];
        cur = graph.neighbors(cur).iter().find(|a| dist[a.to as usize] == d - 1)?.to;
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// A finite graph together with how far each vertex sits from the cut-off
/// boundary of the infinite graph it approximates.
pub trait Host {
    fn graph(&self) -> &Graph;

    /// Lower bound on the hop distance from `v` to anything missing from the
    /// finite realization. `u32::MAX` for genuinely finite graphs.
    fn boundary_depth(&self, v: u32) -> u32;
}

impl Host for Graph {
    fn graph(&self) -> &Graph {
        self
    }

    fn boundary_depth(&self, _v: u32) -> u32 {
        u32::MAX
    }
}

/// Bitset over the vertices of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet(FixedBitSet);

impl VertexSet {
    pub fn new(n: usize) -> Self {
        Self(FixedBitSet::with_capacity(n))
    }

    pub fn full(n: usize) -> Self {
        let mut s = FixedBitSet::with_capacity(n);
        s.insert_range(..);
        Self(s)
    }

    pub fn from_iter(n: usize, it: impl IntoIterator<Item = u32>) -> Self {
        let mut s = Self::new(n);
        for v in it {
            s.insert(v);
        }
        s
    }

    #[inline]
    pub fn insert(&mut self, v: u32) {
        self.0.insert(v as usize);
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        self.0.contains(v as usize)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn capacity(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.ones().map(|v| v as u32)
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        self.0.union_with(&other.0);
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// All vertices within `r` hops of the set.
    pub fn neighborhood(&self, graph: &Graph, r: u32) -> VertexSet {
        let sources: Vec<u32> = self.iter().collect();
        let dist = graph.bfs_multi(&sources, r);
        VertexSet::from_iter(dist.len(), (0..dist.len() as u32).filter(|&v| dist[v as usize] != UNREACHED))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Graph {
        Graph::from_edges(4, vec![[0, 1], [1, 2], [2, 3], [3, 0]]).unwrap()
    }

    #[test]
    fn rejects_non_simple() {
        assert!(Graph::from_edges(2, vec![[0, 0]]).is_err());
        assert!(Graph::from_edges(2, vec![[0, 1], [1, 0]]).is_err());
        assert!(Graph::from_edges(2, vec![[0, 2]]).is_err());
    }

    #[test]
    fn adjacency_sorted_and_symmetric() {
        let g = square();
        assert_eq!(g.neighbors(0).iter().map(|a| a.to).collect::<Vec<_>>(), vec![1, 3]);
        for e in 0..g.num_edges() as u32 {
            let [a, b] = g.endpoints(e);
            assert_eq!(g.edge_between(a, b), Some(e));
            assert_eq!(g.edge_between(b, a), Some(e));
        }
    }

    #[test]
    fn bfs_and_paths() {
        let g = square();
        assert_eq!(g.bfs(0, u32::MAX), vec![0, 1, 2, 1]);
        assert_eq!(g.bfs(0, 1), vec![0, 1, UNREACHED, 1]);
        assert_eq!(g.shortest_path(0, 2), Some(vec![0, 1, 2]));
        assert_eq!(g.shortest_path_restricted(0, 2, |v| v != 1), Some(vec![0, 3, 2]));
        assert_eq!(g.shortest_path_restricted(0, 2, |v| v == 0 || v == 2), None);
    }

    #[test]
    fn vertex_set_neighborhood() {
        let g = square();
        let s = VertexSet::from_iter(4, [0]);
        let n = s.neighborhood(&g, 1);
        assert_eq!(n.iter().collect::<Vec<_>>(), vec![0, 1, 3]);
        assert!(s.is_subset(&n));
        assert_eq!(VertexSet::full(4).len(), 4);
    }
}
