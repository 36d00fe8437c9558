//! Coarse-graining at scale `R`: a maximal `⌊R/30⌋`-separated net, its
//! Voronoi tiles, the tile adjacency graph, the renormalization events on
//! `R`-balls and the closed-cluster machinery built on top of them.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::graph::{Graph, Host, VertexSet, UNREACHED};
use crate::percolation::{Deleted, EdgeStates};
use crate::region::FiniteRegion;
use crate::rng;

/// The radii derived from a scale, all floor-divided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Radii {
    pub scale: u32,
    /// `⌊R/60⌋ - 1`, guaranteed inside every interior tile.
    pub tile_inner: u32,
    /// `⌊R/30⌋`, the net separation and outer tile radius.
    pub tile_outer: u32,
    /// `⌊R/15⌋ + 1`, the bound on the distance between adjacent centers.
    pub adjacent: u32,
    /// `⌊R/10⌋`, inner ball of the crossing clause.
    pub crossing: u32,
    /// `⌊R/5⌋` and `⌊R/2⌋`, the two balls of the uniqueness clause.
    pub unique_inner: u32,
    pub unique_outer: u32,
}

impl Radii {
    pub fn new(scale: u32) -> Result<Self> {
        if scale < 60 {
            return Err(Error::Parameter(format!("scale R = {scale} is below 60")));
        }
        Ok(Self {
            scale,
            tile_inner: scale / 60 - 1,
            tile_outer: scale / 30,
            adjacent: scale / 15 + 1,
            crossing: scale / 10,
            unique_inner: scale / 5,
            unique_outer: scale / 2,
        })
    }
}

/// Greedy scan in id order, accepting a vertex iff it is at distance at least
/// `r` from every accepted center.
pub fn build_net(region: &FiniteRegion, r: u32) -> Result<Vec<u32>> {
    if r == 0 {
        return Err(Error::Parameter("net separation must be at least 1".into()));
    }
    let graph = region.graph();
    let n = graph.num_vertices();
    let mut blocked = VertexSet::new(n);
    let mut net = Vec::new();
    let mut dist = vec![UNREACHED; n];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    for v in 0..n as u32 {
        if blocked.contains(v) {
            continue;
        }
        net.push(v);
        dist[v as usize] = 0;
        touched.push(v);
        queue.push_back(v);
        while let Some(w) = queue.pop_front() {
            blocked.insert(w);
            let d = dist[w as usize];
            if d + 1 >= r {
                continue;
            }
            for a in graph.neighbors(w) {
                if dist[a.to as usize] == UNREACHED {
                    dist[a.to as usize] = d + 1;
                    touched.push(a.to);
                    queue.push_back(a.to);
                }
            }
        }
        for w in touched.drain(..) {
            dist[w as usize] = UNREACHED;
        }
    }
    Ok(net)
}

/// Nearest-center map with ties going to the earlier center in `net`. Returns
/// net indices. A vertex inherits the smallest tile index among its
/// predecessors in the multi-source BFS, which makes every tile star-shaped.
pub fn voronoi_assign(region: &FiniteRegion, net: &[u32]) -> Result<Vec<u32>> {
    if net.is_empty() {
        return Err(Error::Parameter("empty net".into()));
    }
    let graph = region.graph();
    let n = graph.num_vertices();
    let dist = graph.bfs_multi(net, UNREACHED);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| dist[v as usize]);
    let mut tile = vec![UNREACHED; n];
    for (i, &c) in net.iter().enumerate() {
        tile[c as usize] = i as u32;
    }
    for &v in &order {
        if dist[v as usize] == 0 {
            continue;
        }
        let d = dist[v as usize];
        tile[v as usize] = graph
            .neighbors(v)
            .iter()
            .filter(|a| dist[a.to as usize] + 1 == d)
            .map(|a| tile[a.to as usize])
            .min()
            .ok_or_else(|| Error::InvariantViolation(format!("vertex {v} has no BFS predecessor")))?;
    }
    Ok(tile)
}

/// The coarse graph `Ĝ` at one scale, with sites indexed by position in the net.
#[derive(Clone, Debug)]
pub struct CoarseGraph<'r> {
    region: &'r FiniteRegion,
    radii: Radii,
    net: Vec<u32>,
    tile_of: Vec<u32>,
    graph: Graph,
    boundary_depth: Vec<u32>,
}

pub fn coarse_graph(region: &FiniteRegion, scale: u32) -> Result<CoarseGraph<'_>> {
    let radii = Radii::new(scale)?;
    let net = build_net(region, radii.tile_outer)?;
    let tile_of = voronoi_assign(region, &net)?;
    let mut pairs: Vec<[u32; 2]> = region
        .graph()
        .edges()
        .iter()
        .filter_map(|&[a, b]| {
            let (s, t) = (tile_of[a as usize], tile_of[b as usize]);
            (s != t).then(|| [s.min(t), s.max(t)])
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let graph = Graph::from_edges(net.len(), pairs)?;

    // Sites whose tile touches the region's outer sphere are cut off; depth
    // counts coarse hops to the nearest such site.
    let mut rim: Vec<u32> = Vec::new();
    for v in 0..region.num_vertices() as u32 {
        if region.depth(v) == region.radius() {
            rim.push(tile_of[v as usize]);
        }
    }
    rim.sort_unstable();
    rim.dedup();
    let boundary_depth = graph.bfs_multi(&rim, UNREACHED);
    Ok(CoarseGraph { region, radii, net, tile_of, graph, boundary_depth })
}

impl<'r> CoarseGraph<'r> {
    pub fn region(&self) -> &'r FiniteRegion {
        self.region
    }

    pub fn scale(&self) -> u32 {
        self.radii.scale
    }

    pub fn radii(&self) -> Radii {
        self.radii
    }

    pub fn net(&self) -> &[u32] {
        &self.net
    }

    pub fn num_sites(&self) -> usize {
        self.net.len()
    }

    /// The vertex at the center of site `s`.
    #[inline]
    pub fn center(&self, s: u32) -> u32 {
        self.net[s as usize]
    }

    /// `ρ̂(x)`: the site whose tile contains `x`.
    #[inline]
    pub fn tile_of(&self, x: u32) -> u32 {
        self.tile_of[x as usize]
    }

    pub fn tile_map(&self) -> &[u32] {
        &self.tile_of
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// `D̂` witness: the largest site degree.
    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    /// Members of every tile, in vertex-id order.
    pub fn tiles(&self) -> Vec<Vec<u32>> {
        let mut tiles = vec![Vec::new(); self.net.len()];
        for (x, &s) in self.tile_of.iter().enumerate() {
            tiles[s as usize].push(x as u32);
        }
        tiles
    }

    /// Whether the `R`-ball around the center of `s` lies inside the region.
    pub fn is_interior_site(&self, s: u32) -> bool {
        self.region.ball_is_interior(self.center(s), self.radii.scale)
    }

    pub fn coarse_distance(&self, a: u32, b: u32) -> Option<u32> {
        let d = self.graph.bfs(a, UNREACHED)[b as usize];
        (d != UNREACHED).then_some(d)
    }

    /// Site sequence `ρ̂(π)` of a vertex path, one entry per vertex.
    pub fn project_path(&self, path: &[u32]) -> Vec<u32> {
        path.iter().map(|&x| self.tile_of(x)).collect()
    }

    /// Interior sites whose tiles break `B(v, ⌊R/60⌋-1) ⊆ v̂ ⊆ B(v, ⌊R/30⌋)`.
    pub fn sandwich_violations(&self) -> Vec<u32> {
        let r = self.radii;
        let tiles = self.tiles();
        let graph = self.region.graph();
        (0..self.num_sites() as u32)
            .filter(|&s| self.region.ball_is_interior(self.center(s), r.tile_outer))
            .filter(|&s| {
                let v = self.center(s);
                let dist = local_bfs(graph, v, r.tile_outer);
                let outer_ok = tiles[s as usize].iter().all(|x| dist.get(x).is_some());
                let inner_ok = dist.iter().filter(|(_, &d)| d <= r.tile_inner).all(|(&x, _)| self.tile_of(x) == s);
                !(outer_ok && inner_ok)
            })
            .collect()
    }

    /// Vertices `x` with a neighbor one step closer to the center of `ρ(x)`
    /// that belongs to a different tile. Exhaustive over the region.
    pub fn star_violations(&self) -> Vec<u32> {
        let graph = self.region.graph();
        let mut bad = Vec::new();
        for (s, members) in self.tiles().iter().enumerate() {
            let v = self.center(s as u32);
            let dist = local_bfs(graph, v, self.radii.tile_outer);
            for &x in members {
                let Some(&dx) = dist.get(&x) else {
                    bad.push(x);
                    continue;
                };
                let broken = graph.neighbors(x).iter().any(|a| dist.get(&a.to).is_some_and(|&d| d + 1 == dx) && self.tile_of(a.to) != s as u32);
                if broken {
                    bad.push(x);
                }
            }
        }
        bad.sort_unstable();
        bad
    }

    /// Adjacent interior sites whose centers are farther apart than `⌊R/15⌋ + 1`.
    pub fn adjacent_distance_violations(&self) -> Vec<[u32; 2]> {
        let limit = self.radii.adjacent;
        let graph = self.region.graph();
        let mut bad = Vec::new();
        for s in 0..self.num_sites() as u32 {
            if !self.region.ball_is_interior(self.center(s), limit) {
                continue;
            }
            let dist = local_bfs(graph, self.center(s), limit);
            for a in self.graph.neighbors(s) {
                if a.to > s && !dist.contains_key(&self.center(a.to)) {
                    bad.push([s, a.to]);
                }
            }
        }
        bad
    }

    /// `|B(o, ⌊R/10⌋)| / |B(o, ⌊R/60⌋ - 1)|`, the degree bound for `D̂ + 1`.
    pub fn degree_bound(&self) -> Result<f64> {
        let r = self.radii;
        let profile = self.region.growth_profile();
        if (self.region.radius() as usize) < r.crossing as usize {
            return Err(Error::Geometry(format!("region radius {} is below R/10 = {}", self.region.radius(), r.crossing)));
        }
        Ok(profile[r.crossing as usize] as f64 / profile[r.tile_inner as usize] as f64)
    }

    /// Largest `d_Ĝ(v̂, ŵ) · R / d_G(v, w)` over `pairs` pseudorandom pairs of
    /// distinct sites whose `R`-balls are interior.
    pub fn contraction_bound(&self, pairs: usize, seed: u64, exec: Exec) -> Result<ContractionReport> {
        let r = self.radii.scale;
        if (self.region.radius() as u64) < 2 * r as u64 {
            return Err(Error::Geometry(format!("contraction bound needs L >= 2R = {}", 2 * r)));
        }
        let interior: Vec<u32> = (0..self.num_sites() as u32).filter(|&s| self.is_interior_site(s)).collect();
        if interior.len() < 2 {
            return Err(Error::Geometry("fewer than two interior sites".into()));
        }
        let pick = |i: u64, k: u64| -> u32 {
            let u = rng::uniform(seed, rng::stream::AUX, 2 * i + k);
            interior[((u * interior.len() as f64) as usize).min(interior.len() - 1)]
        };
        let ratios = map_indexed(exec, 0..pairs as u64, |i| {
            let a = pick(i, 0);
            let mut b = pick(i, 1);
            if a == b {
                b = interior[(interior.iter().position(|&s| s == a).unwrap_or(0) + 1) % interior.len()];
            }
            let dg = self.region.graph().bfs(self.center(a), UNREACHED)[self.center(b) as usize];
            let dc = self.graph.bfs(a, UNREACHED)[b as usize];
            (dc as f64 * r as f64 / dg as f64, [a, b])
        });
        let (max_ratio, worst) = ratios.iter().fold((0.0f64, [0, 0]), |acc, &(q, p)| if q > acc.0 { (q, p) } else { acc });
        Ok(ContractionReport { max_ratio, worst_pair: worst, pairs, max_degree: self.max_degree() })
    }

    /// Pseudorandom vertex pairs on which `ρ̂` increases distance. Always empty
    /// for a correct tiling.
    pub fn distance_increase_violations(&self, pairs: usize, seed: u64) -> Vec<[u32; 2]> {
        let n = self.region.num_vertices();
        let pick = |i: u64| ((rng::uniform(seed, rng::stream::AUX, i) * n as f64) as usize).min(n - 1) as u32;
        let mut bad = Vec::new();
        for i in 0..pairs as u64 {
            let (x, y) = (pick(2 * i), pick(2 * i + 1));
            let dg = self.region.graph().bfs(x, UNREACHED)[y as usize];
            let dc = self.graph.bfs(self.tile_of(x), UNREACHED)[self.tile_of(y) as usize];
            if dc > dg {
                bad.push([x, y]);
            }
        }
        bad
    }

    /// One more than the largest coarse distance from site `s` to a site whose
    /// center lies within graph distance `reach` of the center of `s`. Sites
    /// at least this far apart in `Ĝ` have centers more than `reach` apart.
    pub fn separation_radius(&self, s: u32, reach: u32) -> u32 {
        let near = local_bfs(self.region.graph(), self.center(s), reach);
        let dc = self.graph.bfs(s, UNREACHED);
        1 + near
            .keys()
            .filter(|&&x| self.center(self.tile_of(x)) == x)
            .map(|&x| dc[self.tile_of(x) as usize])
            .max()
            .unwrap_or(0)
    }
}

impl Host for CoarseGraph<'_> {
    fn graph(&self) -> &Graph {
        &self.graph
    }

    fn boundary_depth(&self, s: u32) -> u32 {
        self.boundary_depth[s as usize]
    }
}

/// `K′ = 3⌈C⌉` from a measured contraction constant `C`.
pub fn default_k_prime(contraction: f64) -> u32 {
    3 * contraction.ceil().max(1.0) as u32
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub max_ratio: f64,
    pub worst_pair: [u32; 2],
    pub pairs: usize,
    pub max_degree: usize,
}

impl ContractionReport {
    /// The bound `d_Ĝ ≤ 40 D̂ d_G / R` in ratio form.
    pub fn within_bound(&self) -> bool {
        self.max_ratio <= 40.0 * self.max_degree as f64
    }
}

fn local_bfs(graph: &Graph, source: u32, depth: u32) -> HashMap<u32, u32> {
    let mut dist = HashMap::from([(source, 0u32)]);
    let mut queue = VecDeque::from([source]);
    while let Some(w) = queue.pop_front() {
        let d = dist[&w];
        if d >= depth {
            continue;
        }
        for a in graph.neighbors(w) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(a.to) {
                slot.insert(d + 1);
                queue.push_back(a.to);
            }
        }
    }
    dist
}

/// Outcome of the two clauses of the renormalization event on `B(v, R)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallEvent {
    /// `B(v, R/10)` is joined to `∂B(v, R)` by an open path inside `B(v, R)`.
    pub crossing: bool,
    /// Number of open components of `B(v, R)` meeting both `B(v, R/5)` and `∂B(v, R/2)`.
    pub spanning_components: u32,
    /// `κ(v)`, the unique such component when there is exactly one.
    pub kappa: Option<Vec<u32>>,
}

impl BallEvent {
    pub fn unique(&self) -> bool {
        self.spanning_components <= 1
    }

    /// `A_v`.
    pub fn holds(&self) -> bool {
        self.crossing && self.unique()
    }
}

#[derive(Default)]
struct BallScratch {
    stamp: u32,
    mark: Vec<u32>,
    dist: Vec<u32>,
    local: Vec<u32>,
    order: Vec<u32>,
}

thread_local! {
    static BALL_SCRATCH: RefCell<BallScratch> = RefCell::new(BallScratch::default());
}

/// Evaluates both clauses of the event on `B(v, R)` and extracts `κ(v)`.
pub fn evaluate_ball<S: EdgeStates>(region: &FiniteRegion, states: &S, v: u32, scale: u32) -> Result<BallEvent> {
    let radii = Radii::new(scale)?;
    if !region.ball_is_interior(v, scale) {
        return Err(Error::Geometry(format!("B({v}, {scale}) is not inside the region of radius {}", region.radius())));
    }
    let graph = region.graph();
    BALL_SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let sc = &mut *guard;
        let n = graph.num_vertices();
        if sc.mark.len() < n {
            sc.mark = vec![0; n];
            sc.dist = vec![0; n];
            sc.local = vec![0; n];
            sc.stamp = 0;
        }
        if sc.stamp == u32::MAX {
            sc.mark.iter_mut().for_each(|m| *m = 0);
            sc.stamp = 0;
        }
        sc.stamp += 1;
        let stamp = sc.stamp;
        sc.order.clear();
        sc.order.push(v);
        sc.mark[v as usize] = stamp;
        sc.dist[v as usize] = 0;
        sc.local[v as usize] = 0;
        let mut head = 0;
        while head < sc.order.len() {
            let w = sc.order[head];
            head += 1;
            let d = sc.dist[w as usize];
            if d == scale {
                continue;
            }
            for a in graph.neighbors(w) {
                let x = a.to as usize;
                if sc.mark[x] != stamp {
                    sc.mark[x] = stamp;
                    sc.dist[x] = d + 1;
                    sc.local[x] = sc.order.len() as u32;
                    sc.order.push(a.to);
                }
            }
        }
        let m = sc.order.len();
        let mut uf = UnionFind::<u32>::new(m);
        for (i, &w) in sc.order.iter().enumerate() {
            for a in graph.neighbors(w) {
                let x = a.to as usize;
                if sc.mark[x] == stamp && (sc.local[x] as usize) > i && states.is_open(a.edge) {
                    uf.union(i as u32, sc.local[x]);
                }
            }
        }
        // Per-root flags: bit 0 inner R/10, bit 1 sphere R, bit 2 inner R/5, bit 3 sphere R/2.
        let mut flags = vec![0u8; m];
        for (i, &w) in sc.order.iter().enumerate() {
            let d = sc.dist[w as usize];
            let mut f = 0u8;
            if d <= radii.crossing {
                f |= 1;
            }
            if d == scale {
                f |= 2;
            }
            if d <= radii.unique_inner {
                f |= 4;
            }
            if d == radii.unique_outer {
                f |= 8;
            }
            if f != 0 {
                flags[uf.find_mut(i as u32) as usize] |= f;
            }
        }
        let crossing = flags.iter().any(|&f| f & 3 == 3);
        let spanning: Vec<u32> = (0..m as u32).filter(|&r| flags[r as usize] & 12 == 12).collect();
        let kappa = if spanning.len() == 1 {
            let root = spanning[0];
            let mut members: Vec<u32> = (0..m as u32).filter(|&i| uf.find_mut(i) == root).map(|i| sc.order[i as usize]).collect();
            members.sort_unstable();
            Some(members)
        } else {
            None
        };
        Ok(BallEvent { crossing, spanning_components: spanning.len() as u32, kappa })
    })
}

/// `A_v`, or with `deleted = Some(e)` the event `A′_{v,e}`: the uniqueness
/// clause alone, evaluated with `e` forced closed.
pub fn uniqueness_event<S: EdgeStates>(region: &FiniteRegion, states: &S, v: u32, scale: u32, deleted: Option<u32>) -> Result<bool> {
    match deleted {
        None => Ok(evaluate_ball(region, states, v, scale)?.holds()),
        Some(e) => Ok(evaluate_ball(region, &Deleted::new(states, e), v, scale)?.unique()),
    }
}

/// `κ(v)` when `A_v` holds.
pub fn kappa<S: EdgeStates>(region: &FiniteRegion, states: &S, v: u32, scale: u32) -> Result<Option<Vec<u32>>> {
    let ev = evaluate_ball(region, states, v, scale)?;
    Ok(if ev.holds() { ev.kappa } else { None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteState {
    Open,
    Closed,
    /// The site's `R`-ball leaves the region; excluded from every event.
    Undefined,
}

/// Site percolation on `Ĝ` induced by a bond configuration: a site is open iff
/// `A_v` holds. States are computed on first use and cached.
pub struct MacroSiteConfig<'a, S> {
    coarse: &'a CoarseGraph<'a>,
    states: &'a S,
    cells: Vec<OnceLock<SiteState>>,
}

impl<'a, S: EdgeStates> MacroSiteConfig<'a, S> {
    pub fn new(coarse: &'a CoarseGraph<'a>, states: &'a S) -> Self {
        let cells = (0..coarse.num_sites()).map(|_| OnceLock::new()).collect();
        Self { coarse, states, cells }
    }

    pub fn coarse(&self) -> &'a CoarseGraph<'a> {
        self.coarse
    }

    pub fn states(&self) -> &'a S {
        self.states
    }

    fn compute(&self, s: u32) -> SiteState {
        if !self.coarse.is_interior_site(s) {
            return SiteState::Undefined;
        }
        match evaluate_ball(self.coarse.region(), self.states, self.coarse.center(s), self.coarse.scale()) {
            Ok(ev) if ev.holds() => SiteState::Open,
            Ok(_) => SiteState::Closed,
            Err(_) => SiteState::Undefined,
        }
    }

    pub fn state(&self, s: u32) -> SiteState {
        *self.cells[s as usize].get_or_init(|| self.compute(s))
    }

    pub fn is_open(&self, s: u32) -> bool {
        self.state(s) == SiteState::Open
    }

    pub fn is_closed(&self, s: u32) -> bool {
        self.state(s) == SiteState::Closed
    }

    /// Evaluate every site up front, in parallel when enabled.
    pub fn evaluate_all(&self, exec: Exec) -> Vec<SiteState> {
        let todo: Vec<u32> = (0..self.cells.len() as u32).filter(|&s| self.cells[s as usize].get().is_none()).collect();
        let fresh = map_indexed(exec, 0..todo.len() as u64, |i| self.compute(todo[i as usize]));
        for (&s, st) in todo.iter().zip(fresh) {
            let _ = self.cells[s as usize].set(st);
        }
        (0..self.cells.len() as u32).map(|s| self.state(s)).collect()
    }

    /// `κ` of an open site.
    pub fn kappa(&self, s: u32) -> Result<Option<Vec<u32>>> {
        kappa(self.coarse.region(), self.states, self.coarse.center(s), self.coarse.scale())
    }
}

/// The closed sites near the coarse geodesic from `ρ̂(x)` to `ρ̂(y)`.
#[derive(Clone, Debug)]
pub struct ForbiddenSet {
    /// `F`: the closed `Δ`-clusters meeting the anchor set.
    pub forbidden: VertexSet,
    /// `I_{x,y}`: the two `K′`-balls and the coarse geodesic.
    pub anchor: VertexSet,
    pub geodesic: Vec<u32>,
    pub delta: u32,
    pub k_prime: u32,
}

impl ForbiddenSet {
    /// `I_{x,y} ∪ N(F, Δ)`, the sites whose `R`-balls a repaired path may use.
    pub fn target_sites(&self, coarse: &Graph) -> VertexSet {
        let mut t = self.forbidden.neighborhood(coarse, self.delta);
        t.union_with(&self.anchor);
        t
    }
}

pub fn forbidden_set<S: EdgeStates>(msc: &MacroSiteConfig<'_, S>, x: u32, y: u32, delta: u32, k_prime: u32) -> Result<ForbiddenSet> {
    if delta == 0 || k_prime == 0 {
        return Err(Error::Parameter("Δ and K′ must be at least 1".into()));
    }
    let coarse = msc.coarse();
    let region = coarse.region();
    for v in [x, y] {
        if !region.ball_is_interior(v, coarse.scale()) {
            return Err(Error::Geometry(format!("B({v}, R) is not inside the region")));
        }
    }
    let cg = coarse.graph();
    let (rx, ry) = (coarse.tile_of(x), coarse.tile_of(y));
    let geodesic = cg
        .shortest_path(rx, ry)
        .ok_or_else(|| Error::InvariantViolation("coarse graph is disconnected".into()))?;
    let mut anchor = VertexSet::from_iter(cg.num_vertices(), geodesic.iter().copied());
    for r in [rx, ry] {
        let d = cg.bfs(r, k_prime);
        for s in 0..cg.num_vertices() as u32 {
            if d[s as usize] != UNREACHED {
                anchor.insert(s);
            }
        }
    }
    let forbidden = closed_delta_clusters(cg, |s| msc.is_closed(s), anchor.iter(), delta);
    Ok(ForbiddenSet { forbidden, anchor, geodesic, delta, k_prime })
}

/// Union of the closed `Δ`-clusters containing the closed members of `seeds`.
pub fn closed_delta_clusters(graph: &Graph, closed: impl Fn(u32) -> bool, seeds: impl IntoIterator<Item = u32>, delta: u32) -> VertexSet {
    let mut found = VertexSet::new(graph.num_vertices());
    let mut stack: Vec<u32> = Vec::new();
    for s in seeds {
        if !found.contains(s) && closed(s) {
            found.insert(s);
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        for (t, _) in local_bfs(graph, s, delta) {
            if !found.contains(t) && closed(t) {
                found.insert(t);
                stack.push(t);
            }
        }
    }
    found
}

/// `ρ₀ = 1 − (2 D^Δ)⁻¹`.
pub fn precluster_threshold(max_degree: usize, delta: u32) -> f64 {
    1.0 - 0.5 / (max_degree as f64).powi(delta as i32)
}

/// Size of the closed `Δ`-cluster of `v` under i.i.d. site percolation with
/// open probability `rho` on `graph`; site `s` is closed iff its uniform
/// under `seed` is at least `rho`.
pub fn precluster_sample(graph: &Graph, v: u32, delta: u32, rho: f64, seed: u64) -> Result<u32> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Parameter(format!("site density {rho} outside [0, 1]")));
    }
    if delta == 0 {
        return Err(Error::Parameter("Δ must be at least 1".into()));
    }
    let closed = |s: u32| rng::uniform(seed, rng::stream::SITE, s as u64) >= rho;
    if !closed(v) {
        return Ok(0);
    }
    let mut found = HashSet::from([v]);
    let mut stack = vec![v];
    while let Some(s) = stack.pop() {
        for (t, _) in local_bfs(graph, s, delta) {
            if !found.contains(&t) && closed(t) {
                found.insert(t);
                stack.push(t);
            }
        }
    }
    Ok(found.len() as u32)
}

/// Warns once per call site family when `rho` is at or below `ρ₀`.
pub fn check_precluster_density(max_degree: usize, delta: u32, rho: f64) -> bool {
    let rho0 = precluster_threshold(max_degree, delta);
    if rho <= rho0 {
        log::warn!("site density {rho} is at or below ρ₀ = {rho0:.6}; the precluster tail bound does not apply");
        return false;
    }
    true
}
