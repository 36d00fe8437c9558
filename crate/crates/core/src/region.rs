//! Finite ball-shaped realizations of the infinite transitive graphs.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Graph, Host, VertexSet, UNREACHED};

/// Environment variable capping region memory, in megabytes.
pub const BUDGET_ENV: &str = "PERC_CHEM_BUDGET_MB";
pub const DEFAULT_BUDGET_MB: u64 = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Standard Cayley graph of Z^d.
    HypercubicLattice { dim: usize },
    /// Discrete Heisenberg group with generators X, Y and their inverses.
    HeisenbergCayley,
}

impl Family {
    pub fn coord_dim(self) -> usize {
        match self {
            Family::HypercubicLattice { dim } => dim,
            Family::HeisenbergCayley => 3,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Family::HypercubicLattice { dim } => 2 * dim,
            Family::HeisenbergCayley => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::HypercubicLattice { .. } => "zd",
            Family::HeisenbergCayley => "heisenberg",
        }
    }

    /// Right multiplication `g * s` for generator index `s` (positive generators first).
    fn step(self, g: &[i64], s: usize, out: &mut Vec<i64>) {
        out.clear();
        out.extend_from_slice(g);
        match self {
            Family::HypercubicLattice { .. } => {
                let axis = s / 2;
                out[axis] += if s % 2 == 0 { 1 } else { -1 };
            }
            Family::HeisenbergCayley => heisenberg_step(out, s),
        }
    }

    /// Generator indices in BFS order.
    fn generators(self) -> std::ops::Range<usize> {
        0..self.degree()
    }

    /// Generators whose edges are recorded from the source side.
    fn is_positive(self, s: usize) -> bool {
        match self {
            Family::HypercubicLattice { .. } => s % 2 == 0,
            Family::HeisenbergCayley => s < 2,
        }
    }
}

/// Generator order X, Y, X^-1, Y^-1 acting on the right with the law
/// (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab').
fn heisenberg_step(g: &mut [i64], s: usize) {
    match s {
        0 => g[0] += 1,
        1 => {
            g[2] += g[0];
            g[1] += 1;
        }
        2 => g[0] -= 1,
        3 => {
            g[2] -= g[0];
            g[1] -= 1;
        }
        _ => unreachable!("generator index"),
    }
}

/// Heisenberg group product of two (a,b,c) triples.
pub fn heisenberg_mul(g: [i64; 3], h: [i64; 3]) -> [i64; 3] {
    [g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1]]
}

/// Ball B(o, L) in one of the shipped families, with vertex ids assigned in
/// BFS order from the base point (so the base is vertex 0).
#[derive(Clone, Debug)]
pub struct FiniteRegion {
    family: Family,
    radius: u32,
    graph: Graph,
    coords: Vec<i64>,
    depth: Vec<u32>,
    index: HashMap<Vec<i64>, u32>,
}

/// A ball around a vertex together with its sphere.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: u32,
    pub radius: u32,
    pub members: VertexSet,
    pub sphere: VertexSet,
}

fn budget_mb() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET_MB)
}

fn bytes_per_vertex(family: Family) -> u64 {
    96 + 24 * family.coord_dim() as u64 + 12 * family.degree() as u64
}

fn check_budget(family: Family, vertices: u64, budget_mb: u64) -> Result<()> {
    let bytes = vertices.saturating_mul(bytes_per_vertex(family));
    let required_mb = bytes.div_ceil(1 << 20);
    if required_mb > budget_mb {
        return Err(Error::Resource { required_vertices: vertices, required_mb, budget_mb });
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// |{x in Z^d : |x|_1 <= L}| = sum_k 2^k C(d,k) C(L,k).
pub fn lattice_ball_size(dim: usize, radius: u32) -> u64 {
    (0..=dim.min(radius as usize) as u64)
        .map(|k| (1u64 << k).saturating_mul(binomial(dim as u64, k)).saturating_mul(binomial(radius as u64, k)))
        .fold(0u64, |a, b| a.saturating_add(b))
}

/// The L1 ball of radius `radius` in Z^`dim`.
pub fn build_lattice(dim: usize, radius: u32) -> Result<FiniteRegion> {
    build_lattice_with_budget(dim, radius, budget_mb())
}

pub fn build_lattice_with_budget(dim: usize, radius: u32, budget_mb: u64) -> Result<FiniteRegion> {
    if dim == 0 {
        return Err(Error::Parameter("lattice dimension must be at least 1".into()));
    }
    let family = Family::HypercubicLattice { dim };
    check_budget(family, lattice_ball_size(dim, radius), budget_mb)?;
    FiniteRegion::build(family, radius, u64::MAX)
}

/// The word-metric ball of radius `radius` in the discrete Heisenberg group.
pub fn build_heisenberg(radius: u32) -> Result<FiniteRegion> {
    build_heisenberg_with_budget(radius, budget_mb())
}

pub fn build_heisenberg_with_budget(radius: u32, budget_mb: u64) -> Result<FiniteRegion> {
    let family = Family::HeisenbergCayley;
    let cap = (budget_mb << 20) / bytes_per_vertex(family);
    FiniteRegion::build(family, radius, cap).map_err(|e| match e {
        Error::Resource { required_vertices, .. } => {
            let r = check_budget(family, required_vertices, budget_mb);
            r.err().unwrap_or(e)
        }
        other => other,
    })
}

impl FiniteRegion {
    fn build(family: Family, radius: u32, vertex_cap: u64) -> Result<Self> {
        let k = family.coord_dim();
        let mut index: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut coords: Vec<i64> = Vec::new();
        let mut depth: Vec<u32> = Vec::new();
        let origin = vec![0i64; k];
        index.insert(origin.clone(), 0);
        coords.extend_from_slice(&origin);
        depth.push(0);
        let mut queue = VecDeque::from([0u32]);
        let mut next = Vec::with_capacity(k);
        while let Some(v) = queue.pop_front() {
            let d = depth[v as usize];
            if d == radius {
                continue;
            }
            for s in family.generators() {
                let g = coords[v as usize * k..(v as usize + 1) * k].to_vec();
                family.step(&g, s, &mut next);
                if index.contains_key(next.as_slice()) {
                    continue;
                }
                let id = depth.len() as u32;
                if depth.len() as u64 >= vertex_cap {
                    // Report at least the next shell so the message names a real lower bound.
                    return Err(Error::Resource { required_vertices: depth.len() as u64 + 1, required_mb: 0, budget_mb: 0 });
                }
                index.insert(next.clone(), id);
                coords.extend_from_slice(&next);
                depth.push(d + 1);
                queue.push_back(id);
            }
        }
        let n = depth.len();
        let mut edges = Vec::with_capacity(n * family.degree() / 2);
        for v in 0..n {
            let g = coords[v * k..(v + 1) * k].to_vec();
            for s in family.generators().filter(|&s| family.is_positive(s)) {
                family.step(&g, s, &mut next);
                if let Some(&w) = index.get(next.as_slice()) {
                    edges.push([v as u32, w]);
                }
            }
        }
        let graph = Graph::from_edges(n, edges)?;
        Ok(Self { family, radius, graph, coords, depth, index })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// The radius L of the ball.
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn base(&self) -> u32 {
        0
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn coords(&self, v: u32) -> &[i64] {
        let k = self.family.coord_dim();
        &self.coords[v as usize * k..(v as usize + 1) * k]
    }

    pub fn vertex_at(&self, coords: &[i64]) -> Option<u32> {
        self.index.get(coords).copied()
    }

    /// The vertex `g^n` reached from the base by `n` right-multiplications by
    /// generator `g` (generator 0 is `e₁` for the lattice and `X` for Heisenberg).
    pub fn walk_generator(&self, g: usize, n: u32) -> Option<u32> {
        if g >= self.family.degree() {
            return None;
        }
        let mut cur = self.coords(self.base()).to_vec();
        let mut next = Vec::with_capacity(cur.len());
        for _ in 0..n {
            self.family.step(&cur, g, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        self.vertex_at(&cur)
    }

    /// Graph distance from the base point (exact: the region is a ball around it).
    #[inline]
    pub fn depth(&self, v: u32) -> u32 {
        self.depth[v as usize]
    }

    /// Whether B(v, r) lies inside the region, so region balls equal true balls.
    #[inline]
    pub fn ball_is_interior(&self, v: u32, r: u32) -> bool {
        self.depth(v) as u64 + r as u64 <= self.radius as u64
    }

    pub fn ball(&self, v: u32, r: u32) -> Ball {
        let dist = self.graph.bfs(v, r);
        let n = self.num_vertices();
        let members = VertexSet::from_iter(n, (0..n as u32).filter(|&w| dist[w as usize] != UNREACHED));
        let sphere = VertexSet::from_iter(n, (0..n as u32).filter(|&w| dist[w as usize] == r));
        Ball { center: v, radius: r, members, sphere }
    }

    /// BFS distance inside the region.
    pub fn graph_distance(&self, u: u32, v: u32) -> Result<u32> {
        if u == v {
            return Ok(0);
        }
        let d = self.graph.bfs(u, UNREACHED)[v as usize];
        if d == UNREACHED {
            return Err(Error::InvariantViolation(format!("vertices {u} and {v} are disconnected inside the region")));
        }
        Ok(d)
    }

    /// Certifies that the region distance between `u` and `v` is the distance
    /// in the infinite graph: every geodesic from `u` to `v` stays inside the
    /// ball when d(u, base) + d(u, v) <= L.
    pub fn interior_margin(&self, u: u32, v: u32) -> bool {
        match self.graph_distance(u, v) {
            Ok(d) => self.depth(u) as u64 + d as u64 <= self.radius as u64,
            Err(_) => false,
        }
    }

    /// |B(base, r)| for r = 0..=L.
    pub fn growth_profile(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.radius as usize + 1];
        for &d in &self.depth {
            counts[d as usize] += 1;
        }
        for r in 1..counts.len() {
            counts[r] += counts[r - 1];
        }
        counts
    }

    /// Plain-text export: a header, one `id coord...` line per vertex, then one
    /// `u v` line per edge, in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dim = match self.family {
            Family::HypercubicLattice { dim } => format!(" dim={dim}"),
            Family::HeisenbergCayley => String::new(),
        };
        let _ = writeln!(
            out,
            "# perc-chem region family={}{} L={} vertices={} edges={}",
            self.family.name(),
            dim,
            self.radius,
            self.num_vertices(),
            self.num_edges()
        );
        for v in 0..self.num_vertices() as u32 {
            let _ = write!(out, "{v}");
            for c in self.coords(v) {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        for &[a, b] in self.graph.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

impl Host for FiniteRegion {
    fn graph(&self) -> &Graph {
        &self.graph
    }

    fn boundary_depth(&self, v: u32) -> u32 {
        self.radius - self.depth(v)
    }
}

/// A region read back from the text export.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionText {
    pub family: Family,
    pub radius: u32,
    pub coords: Vec<Vec<i64>>,
    pub edges: Vec<[u32; 2]>,
    /// Trailing `open ...` line of a sample export, if any.
    pub open_edges: Option<Vec<u32>>,
}

pub fn parse_region_text(text: &str) -> Result<RegionText> {
    let bad = |line: usize, msg: &str| Error::Parameter(format!("region text line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
    let header = header.strip_prefix("# perc-chem region").ok_or_else(|| bad(1, "missing header"))?;
    let mut fields = HashMap::new();
    for kv in header.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(1, "malformed header field"))?;
        fields.insert(k, v);
    }
    let num = |k: &str| -> Result<u64> {
        fields.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(1, &format!("missing or invalid `{k}`")))
    };
    let family = match fields.get("family").copied() {
        Some("zd") => Family::HypercubicLattice { dim: num("dim")? as usize },
        Some("heisenberg") => Family::HeisenbergCayley,
        _ => return Err(bad(1, "unknown family")),
    };
    let radius = num("L")? as u32;
    let n = num("vertices")? as usize;
    let m = num("edges")? as usize;
    let k = family.coord_dim();
    let mut coords = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, line) = lines.next().ok_or_else(|| bad(i + 2, "missing vertex line"))?;
        let toks: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(ln + 1, "not an integer")))
            .collect::<Result<_>>()?;
        if toks.len() != k + 1 || toks[0] != i as i64 {
            return Err(bad(ln + 1, "vertex line must be `id coord...` in id order"));
        }
        coords.push(toks[1..].to_vec());
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, line) = lines.next().ok_or_else(|| bad(n + 2, "missing edge line"))?;
        let toks: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(ln + 1, "not an index")))
            .collect::<Result<_>>()?;
        if toks.len() != 2 {
            return Err(bad(ln + 1, "edge line must be `u v`"));
        }
        edges.push([toks[0], toks[1]]);
    }
    let mut open_edges = None;
    for (ln, line) in lines {
        if let Some(rest) = line.strip_prefix("open") {
            let ids = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln + 1, "not an edge index")))
                .collect::<Result<Vec<u32>>>()?;
            open_edges = Some(ids);
        } else if !line.trim().is_empty() {
            return Err(bad(ln + 1, "unexpected trailing line"));
        }
    }
    Ok(RegionText { family, radius, coords, edges, open_edges })
}
