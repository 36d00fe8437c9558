use std::collections::{HashMap, HashSet, VecDeque};

use super::chain::{xor_sorted, Chain1};
use crate::error::{Error, Result};
use crate::graph::{Graph, Host, VertexSet, UNREACHED};

#[derive(Clone, Debug)]
struct Row {
    edges: Vec<u32>,
    history: Vec<u32>,
}

/// Independent cycles of diameter at most `Δ`, kept in echelon form (pivot =
/// largest edge) with the combination of generators behind each row.
#[derive(Clone, Debug)]
pub struct CycleBasis {
    delta: u32,
    generators: Vec<Chain1>,
    rows: Vec<Row>,
    pivots: HashMap<u32, usize>,
}

impl CycleBasis {
    pub fn new(delta: u32) -> Self {
        Self { delta, generators: Vec::new(), rows: Vec::new(), pivots: HashMap::new() }
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn generators(&self) -> &[Chain1] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Reduce `edges` against the rows; returns the residue and the generator
    /// combination that was subtracted.
    fn reduce(&self, mut edges: Vec<u32>) -> (Vec<u32>, Vec<u32>) {
        let mut history = Vec::new();
        while let Some(&p) = edges.last() {
            let Some(&r) = self.pivots.get(&p) else { break };
            let row = &self.rows[r];
            edges = xor_sorted(&edges, &row.edges);
            history = xor_sorted(&history, &row.history);
        }
        (edges, history)
    }

    /// Adds `cycle` as a generator if it is independent of those already held.
    pub fn insert(&mut self, cycle: Chain1) -> bool {
        let (residue, mut history) = self.reduce(cycle.edges().to_vec());
        let Some(&p) = residue.last() else { return false };
        let g = self.generators.len() as u32;
        history = xor_sorted(&history, &[g]);
        self.generators.push(cycle);
        self.pivots.insert(p, self.rows.len());
        self.rows.push(Row { edges: residue, history });
        true
    }

    /// Generator indices whose XOR is `q`, or `None` if `q` is outside the span.
    pub fn decompose(&self, q: &Chain1, graph: &Graph) -> Result<Option<Vec<u32>>> {
        if !q.is_cycle(graph) {
            return Err(Error::Precondition("chain has nonempty boundary".into()));
        }
        let (residue, history) = self.reduce(q.edges().to_vec());
        Ok(residue.is_empty().then_some(history))
    }

    pub fn combine(&self, selection: &[u32]) -> Chain1 {
        let mut acc = Chain1::new();
        for &g in selection {
            acc.xor_assign(&self.generators[g as usize]);
        }
        acc
    }
}

/// Breadth-first tree on `B(v, r)` with first-discovery parents, plus its
/// non-tree edges. Neighbors are scanned in id order so the tree is canonical.
struct BallTree {
    parent: HashMap<u32, (u32, u32)>,
    depth: HashMap<u32, u32>,
    non_tree: Vec<u32>,
}

fn ball_tree(graph: &Graph, v: u32, r: u32, allowed: impl Fn(u32) -> bool) -> BallTree {
    let mut parent = HashMap::new();
    let mut depth = HashMap::from([(v, 0u32)]);
    let mut queue = VecDeque::from([v]);
    let mut order = vec![v];
    while let Some(w) = queue.pop_front() {
        let d = depth[&w];
        if d >= r {
            continue;
        }
        for a in graph.neighbors(w) {
            if !depth.contains_key(&a.to) && allowed(a.to) {
                depth.insert(a.to, d + 1);
                parent.insert(a.to, (w, a.edge));
                queue.push_back(a.to);
                order.push(a.to);
            }
        }
    }
    let mut non_tree = Vec::new();
    for &w in &order {
        for a in graph.neighbors(w) {
            if a.to > w && depth.contains_key(&a.to) && parent.get(&a.to).map(|p| p.1) != Some(a.edge) && parent.get(&w).map(|p| p.1) != Some(a.edge) {
                non_tree.push(a.edge);
            }
        }
    }
    BallTree { parent, depth, non_tree }
}

fn fundamental_cycle(graph: &Graph, tree: &BallTree, e: u32) -> Chain1 {
    let [mut a, mut b] = graph.endpoints(e);
    let mut edges = vec![e];
    while a != b {
        if tree.depth[&a] >= tree.depth[&b] {
            let (pa, ea) = tree.parent[&a];
            edges.push(ea);
            a = pa;
        } else {
            let (pb, eb) = tree.parent[&b];
            edges.push(eb);
            b = pb;
        }
    }
    Chain1::from_edges(edges)
}

/// Fundamental cycles of the breadth-first trees of `B(v, Δ)` for every `v` in
/// `centers`, reduced to an independent family. Each such cycle has length at
/// most `2Δ + 1`, so its vertex support has diameter at most `Δ`.
pub fn small_cycle_generators<H: Host + ?Sized>(host: &H, delta: u32, centers: &VertexSet) -> CycleBasis {
    let graph = host.graph();
    let mut seen: HashSet<Chain1> = HashSet::new();
    let mut candidates: Vec<Chain1> = Vec::new();
    for v in centers.iter() {
        let tree = ball_tree(graph, v, delta, |_| true);
        for &e in &tree.non_tree {
            let c = fundamental_cycle(graph, &tree, e);
            if seen.insert(c.clone()) {
                candidates.push(c);
            }
        }
    }
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut basis = CycleBasis::new(delta);
    for c in candidates {
        basis.insert(c);
    }
    basis
}

/// Outcome of a `Δ`-simple-connectedness check on a window.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub delta: u32,
    pub certified: bool,
    /// Shortest fundamental cycle of the window that the small cycles do not span.
    pub witness: Option<Chain1>,
    pub cycles_tested: usize,
    pub rank: usize,
}

/// Checks that every cycle of the subgraph induced by `window` is a sum of
/// cycles of diameter at most `Δ` centred within `Δ` of the window.
pub fn check_delta_simply_connected<H: Host + ?Sized>(host: &H, delta: u32, window: &VertexSet) -> Result<Certificate> {
    if delta == 0 {
        return Err(Error::Parameter("Δ must be at least 1".into()));
    }
    let graph = host.graph();
    if let Some(w) = window.iter().find(|&w| host.boundary_depth(w) <= 2 * delta) {
        return Err(Error::Geometry(format!("window vertex {w} is within 2Δ = {} of the host boundary", 2 * delta)));
    }
    let centers = window.neighborhood(graph, delta);
    let basis = small_cycle_generators(host, delta, &centers);

    let mut cycles = Vec::new();
    let mut covered = VertexSet::new(graph.num_vertices());
    for root in window.iter() {
        if covered.contains(root) {
            continue;
        }
        let tree = ball_tree(graph, root, UNREACHED, |v| window.contains(v));
        for &v in tree.depth.keys() {
            covered.insert(v);
        }
        cycles.extend(tree.non_tree.iter().map(|&e| fundamental_cycle(graph, &tree, e)));
    }
    cycles.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    for c in &cycles {
        if basis.decompose(c, graph)?.is_none() {
            return Ok(Certificate { delta, certified: false, witness: Some(c.clone()), cycles_tested: cycles.len(), rank: basis.rank() });
        }
    }
    Ok(Certificate { delta, certified: true, witness: None, cycles_tested: cycles.len(), rank: basis.rank() })
}

/// Smallest `Δ ≤ max_delta` certified on `window`, with the certificate of
/// every value tried.
pub fn scan_delta<H: Host + ?Sized>(host: &H, window: &VertexSet, max_delta: u32) -> Result<(Option<u32>, Vec<Certificate>)> {
    let mut tried = Vec::new();
    for delta in 1..=max_delta {
        let cert = check_delta_simply_connected(host, delta, window)?;
        let ok = cert.certified;
        tried.push(cert);
        if ok {
            return Ok((Some(delta), tried));
        }
    }
    Ok((None, tried))
}
