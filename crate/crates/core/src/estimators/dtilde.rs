use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::stats::{mean_se, wilson_se, EstimateTable};
use crate::error::{Error, Result};
use crate::exec::{map_indexed_with, Exec};
use crate::graph::{Graph, UNREACHED};
use crate::percolation::{clusters, nearest_giant, ring_distance, sample_config, BfsScratch, EdgeStates};
use crate::region::FiniteRegion;

/// Absolute tolerance for comparing penalized costs.
pub const COST_TOLERANCE: f64 = 1e-9;

/// `M = (ln d)^C`.
pub fn penalty_weight(d: u32, c_exp: f64) -> Result<f64> {
    if !(c_exp >= 5.0) || !c_exp.is_finite() {
        return Err(Error::Parameter(format!("exponent C = {c_exp} must be a finite number >= 5")));
    }
    if d < 3 {
        return Err(Error::Precondition(format!("d_G(o, x) = {d} is below 3")));
    }
    Ok((d as f64).ln().powf(c_exp))
}

/// Minimizer of `|π| + M (d_G(o, õ) + d_G(x̃, x))` over open paths `π` from `õ` to `x̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct DtildeResult {
    pub value: f64,
    pub o_tilde: u32,
    pub x_tilde: u32,
    /// Vertices of `π`, from `õ` to `x̃`.
    pub path: Vec<u32>,
    /// `π̄`: a geodesic `o → õ`, then `π`, then a geodesic `x̃ → x`.
    pub augmented: Vec<u32>,
    pub weight: f64,
    pub d_o: u32,
    pub d_x: u32,
}

impl DtildeResult {
    pub fn path_length(&self) -> u32 {
        self.path.len() as u32 - 1
    }

    pub fn augmented_length(&self) -> u32 {
        self.augmented.len() as u32 - 1
    }
}

/// Graph-distance fields reused across samples for a fixed `(o, x)`.
#[derive(Clone, Debug)]
pub struct DtildeContext {
    pub o: u32,
    pub x: u32,
    pub d: u32,
    pub weight: f64,
    dist_o: Vec<u32>,
    dist_x: Vec<u32>,
}

impl DtildeContext {
    pub fn new(graph: &Graph, o: u32, x: u32, c_exp: f64) -> Result<Self> {
        let dist_o = graph.bfs(o, UNREACHED);
        let dist_x = graph.bfs(x, UNREACHED);
        let d = dist_o[x as usize];
        if d == UNREACHED {
            return Err(Error::InvariantViolation("o and x are disconnected in the host graph".into()));
        }
        let weight = penalty_weight(d, c_exp)?;
        Ok(Self { o, x, d, weight, dist_o, dist_x })
    }
}

#[derive(PartialEq)]
struct Item(f64, u32);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // Min-heap on (cost, vertex).
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Exact `D̃_p(o, x)`: Dijkstra from every vertex at initial cost `M d_G(o, v)`
/// over unit-cost open edges, finished with the exit cost `M d_G(x, v)`.
pub fn dtilde_in<S: EdgeStates>(graph: &Graph, states: &S, ctx: &DtildeContext) -> DtildeResult {
    let n = graph.num_vertices();
    let m = ctx.weight;
    let mut cost: Vec<f64> = ctx.dist_o.iter().map(|&d| if d == UNREACHED { f64::INFINITY } else { m * d as f64 }).collect();
    let mut pred = vec![UNREACHED; n];
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<Item> = (0..n as u32).filter(|&v| cost[v as usize].is_finite()).map(|v| Item(cost[v as usize], v)).collect();
    let mut best = f64::INFINITY;
    let mut best_v = ctx.o;
    while let Some(Item(c, v)) = heap.pop() {
        if done[v as usize] || c > cost[v as usize] {
            continue;
        }
        if c >= best + COST_TOLERANCE {
            break;
        }
        done[v as usize] = true;
        let total = c + m * ctx.dist_x[v as usize] as f64;
        if total < best - COST_TOLERANCE {
            best = total;
            best_v = v;
        }
        for a in graph.neighbors(v) {
            let w = a.to as usize;
            if !done[w] && c + 1.0 < cost[w] && states.is_open(a.edge) {
                cost[w] = c + 1.0;
                pred[w] = v;
                heap.push(Item(c + 1.0, a.to));
            }
        }
    }
    let mut path = vec![best_v];
    while pred[*path.last().unwrap_or(&best_v) as usize] != UNREACHED {
        let last = *path.last().unwrap_or(&best_v);
        path.push(pred[last as usize]);
    }
    path.reverse();
    let o_tilde = path[0];
    let x_tilde = best_v;
    let d_o = ctx.dist_o[o_tilde as usize];
    let d_x = ctx.dist_x[x_tilde as usize];
    let value = (path.len() - 1) as f64 + m * (d_o + d_x) as f64;

    let mut augmented = graph.shortest_path(ctx.o, o_tilde).unwrap_or_else(|| vec![ctx.o]);
    augmented.extend_from_slice(&path[1..]);
    let tail = graph.shortest_path(x_tilde, ctx.x).unwrap_or_else(|| vec![ctx.x]);
    augmented.extend_from_slice(&tail[1..]);
    DtildeResult { value, o_tilde, x_tilde, path, augmented, weight: m, d_o, d_x }
}

pub fn dtilde<S: EdgeStates>(graph: &Graph, states: &S, o: u32, x: u32, c_exp: f64) -> Result<DtildeResult> {
    let ctx = DtildeContext::new(graph, o, x, c_exp)?;
    Ok(dtilde_in(graph, states, &ctx))
}

/// `|π̄|` of the `D̃_p` minimizer.
pub fn pi_bar_length<S: EdgeStates>(graph: &Graph, states: &S, o: u32, x: u32, c_exp: f64) -> Result<u32> {
    Ok(dtilde(graph, states, o, x, c_exp)?.augmented_length())
}

fn endpoint(region: &FiniteRegion, d: u32) -> Result<u32> {
    region
        .walk_generator(0, d)
        .ok_or_else(|| Error::Geometry(format!("the point at distance {d} is outside the region (L = {})", region.radius())))
}

/// Result of [`goodapprox_check`].
#[derive(Clone, Debug)]
pub struct GoodApproxReport {
    /// `Ê|D_p − D̃_p| / d`, parameters `(p, d)`.
    pub ratio: EstimateTable,
    /// `P(d_G(o, °o) ≥ n)`, parameters `(p, n)`.
    pub ring_tail: EstimateTable,
    pub skipped: u64,
}

/// Compares the ring-point distance `D_p(o, x)` with `D̃_p(o, x)` for `x = g₁^d o`.
pub fn goodapprox_check(region: &FiniteRegion, p: f64, d_grid: &[u32], ring_n_max: u32, c_exp: f64, samples: u64, seed: u64, exec: Exec) -> Result<GoodApproxReport> {
    let d_max = d_grid.iter().copied().max().ok_or_else(|| Error::Parameter("empty distance grid".into()))?;
    if region.radius() < 2 * d_max {
        return Err(Error::Geometry(format!("goodapprox needs L >= {}, region has L = {}", 2 * d_max, region.radius())));
    }
    let graph = region.graph();
    let o = region.base();
    let ctxs: Vec<DtildeContext> = d_grid.iter().map(|&d| DtildeContext::new(graph, o, endpoint(region, d)?, c_exp)).collect::<Result<_>>()?;
    let n = region.num_vertices();
    let per_seed = map_indexed_with(exec, 0..samples, || BfsScratch::new(n), |scratch, i| -> Result<Option<(Vec<f64>, u32)>> {
        let s = seed + i;
        let sample = sample_config(region, p, s);
        let lab = clusters(&sample);
        if lab.giant.is_none() {
            return Ok(None);
        }
        let (_, ring_depth) = nearest_giant(graph, &lab, o, s)?;
        let mut ratios = Vec::with_capacity(ctxs.len());
        for ctx in &ctxs {
            let dp = ring_distance(graph, &sample, &lab, o, ctx.x, s, scratch)? as f64;
            let dt = dtilde_in(graph, &sample, ctx).value;
            ratios.push((dp - dt).abs() / ctx.d as f64);
        }
        Ok(Some((ratios, ring_depth)))
    });
    let per_seed: Vec<Option<(Vec<f64>, u32)>> = per_seed.into_iter().collect::<Result<_>>()?;
    let kept: Vec<&(Vec<f64>, u32)> = per_seed.iter().flatten().collect();
    let skipped = samples - kept.len() as u64;
    let seeds = seed..seed + samples;
    let mut ratio = EstimateTable::new(&["p", "d"]);
    for (j, &d) in d_grid.iter().enumerate() {
        let xs: Vec<f64> = kept.iter().map(|(r, _)| r[j]).collect();
        let (m, se) = mean_se(&xs);
        ratio.push(vec![p, d as f64], m, se, xs.len() as u64, seeds.clone());
    }
    ratio.set_meta("skipped_no_giant", skipped);
    ratio.set_meta("C", c_exp);
    let mut ring_tail = EstimateTable::new(&["p", "n"]);
    let total = kept.len() as u64;
    for k in 1..=ring_n_max {
        let hits = kept.iter().filter(|(_, r)| *r >= k).count() as u64;
        ring_tail.push(vec![p, k as f64], if total > 0 { hits as f64 / total as f64 } else { f64::NAN }, wilson_se(hits, total), total, seeds.clone());
    }
    for t in [&mut ratio, &mut ring_tail] {
        t.set_meta("family", region.family().name());
        t.set_meta("L", region.radius());
    }
    Ok(GoodApproxReport { ratio, ring_tail, skipped })
}

/// `P(|π̄| ≥ K′ t)` for `o` the base point and `x = g₁^d o`; parameters `(p, t)`.
pub fn pi_bar_tail(region: &FiniteRegion, p: f64, d: u32, c_exp: f64, k_prime: f64, t_grid: &[u32], samples: u64, seed: u64, exec: Exec) -> Result<EstimateTable> {
    if region.radius() < 2 * d {
        return Err(Error::Geometry(format!("π̄ tail needs L >= {}, region has L = {}", 2 * d, region.radius())));
    }
    let graph = region.graph();
    let ctx = DtildeContext::new(graph, region.base(), endpoint(region, d)?, c_exp)?;
    let lens = map_indexed_with(exec, 0..samples, || (), |_, i| {
        let sample = crate::percolation::LazySample { p, seed: seed + i };
        let r = dtilde_in(graph, &sample, &ctx);
        (r.augmented_length(), r.value)
    });
    if let Some((l, v)) = lens.iter().find(|(l, v)| *l as f64 > v + COST_TOLERANCE) {
        return Err(Error::InvariantViolation(format!("|π̄| = {l} exceeds D̃ = {v}")));
    }
    let mut table = EstimateTable::new(&["p", "t"]);
    for &t in t_grid {
        let hits = lens.iter().filter(|(l, _)| *l as f64 >= k_prime * t as f64).count() as u64;
        table.push(vec![p, t as f64], hits as f64 / samples as f64, wilson_se(hits, samples), samples, seed..seed + samples);
    }
    table.set_meta("K_prime", k_prime);
    table.set_meta("d", d);
    Ok(table)
}
