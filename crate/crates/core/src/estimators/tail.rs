use super::stats::{log_frequency_slope, wilson_se, EstimateTable, SlopeFit};
use crate::coarse::{check_precluster_density, precluster_sample, precluster_threshold};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, map_indexed_with, Exec};
use crate::graph::Graph;
use crate::percolation::{chemical_distance_in, BfsScratch, Deleted, EdgeStates, LazySample};
use crate::region::FiniteRegion;

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!("p = {p} is outside (0, 1]")));
    }
    Ok(())
}

/// Fits the log-frequency slope over the rows selected by `keep`, using the
/// parameter in column `t_col` as abscissa.
pub fn slope_where(table: &EstimateTable, t_col: usize, keep: impl Fn(&[f64]) -> bool) -> Option<SlopeFit> {
    let rows: Vec<_> = table.rows.iter().filter(|r| keep(&r.params)).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.params[t_col]).collect();
    let f: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    log_frequency_slope(&t, &f, &s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailConfig {
    pub p: Vec<f64>,
    pub k: Vec<f64>,
    /// `d_G(x, y)`, with `x` the base point and `y = g₁^dist x`.
    pub dist: u32,
    pub t_grid: Vec<u32>,
    pub samples: u64,
    pub seed: u64,
}

impl TailConfig {
    /// Smallest region radius for which every open path shorter than `K·t`
    /// from `x` stays inside the region.
    pub fn min_radius(&self) -> u32 {
        let kt = self.k.iter().copied().fold(0.0f64, f64::max) * self.t_grid.iter().copied().max().unwrap_or(0) as f64;
        (kt.ceil() as u32).max(self.dist)
    }
}

#[derive(Clone, Debug)]
pub struct TailReport {
    /// `P(d_{G_p}(x,y) ≥ K t, x ↔ y)`, parameters `(p, K, t)`.
    pub joint: EstimateTable,
    /// The same given `x ↔ y`.
    pub conditional: EstimateTable,
    /// Number of samples with `x ↔ y`, per `p`.
    pub connected: Vec<u64>,
}

impl TailReport {
    pub fn slope(&self, p: f64, k: f64) -> Option<SlopeFit> {
        slope_where(&self.joint, 2, |q| q[0] == p && q[1] == k)
    }
}

/// Chemical distance between the base point and `g₁^dist` for every seed in
/// `seed..seed+samples` and every `p`, coupled through the seed.
pub fn tail_distances(region: &FiniteRegion, p: &[f64], dist: u32, samples: u64, seed: u64, exec: Exec) -> Result<Vec<Vec<Option<u32>>>> {
    for &q in p {
        check_probability(q)?;
    }
    let x = region.base();
    let y = region
        .walk_generator(0, dist)
        .ok_or_else(|| Error::Geometry(format!("the point at distance {dist} is outside the region (L = {})", region.radius())))?;
    let graph = region.graph();
    let n = region.num_vertices();
    let per_seed = map_indexed_with(exec, 0..samples, || BfsScratch::new(n), |scratch, i| {
        p.iter().map(|&q| chemical_distance_in(graph, &LazySample { p: q, seed: seed + i }, x, y, scratch)).collect::<Vec<_>>()
    });
    if let Some(d) = per_seed.iter().flatten().flatten().find(|&&d| d < dist) {
        return Err(Error::InvariantViolation(format!("chemical distance {d} below graph distance {dist}")));
    }
    Ok(per_seed)
}

pub fn tail_estimate(region: &FiniteRegion, cfg: &TailConfig, exec: Exec) -> Result<TailReport> {
    if cfg.t_grid.is_empty() || cfg.k.is_empty() || cfg.samples == 0 {
        return Err(Error::Parameter("empty t grid, K list or sample count".into()));
    }
    if cfg.k.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Parameter("K must be positive".into()));
    }
    let need = cfg.min_radius();
    if region.radius() < need {
        return Err(Error::Geometry(format!("tail estimate needs L >= {need}, region has L = {}", region.radius())));
    }
    let per_seed = tail_distances(region, &cfg.p, cfg.dist, cfg.samples, cfg.seed, exec)?;
    let seeds = cfg.seed..cfg.seed + cfg.samples;
    let mut joint = EstimateTable::new(&["p", "K", "t"]);
    let mut conditional = EstimateTable::new(&["p", "K", "t"]);
    let mut connected = Vec::new();
    for (j, &p) in cfg.p.iter().enumerate() {
        let ds: Vec<u32> = per_seed.iter().filter_map(|row| row[j]).collect();
        let conn = ds.len() as u64;
        connected.push(conn);
        for &k in &cfg.k {
            for &t in &cfg.t_grid {
                let hits = ds.iter().filter(|&&d| d as f64 >= k * t as f64).count() as u64;
                joint.push(vec![p, k, t as f64], hits as f64 / cfg.samples as f64, wilson_se(hits, cfg.samples), cfg.samples, seeds.clone());
                let c = if conn > 0 { hits as f64 / conn as f64 } else { f64::NAN };
                conditional.push(vec![p, k, t as f64], c, wilson_se(hits, conn), conn, seeds.clone());
            }
        }
    }
    for t in [&mut joint, &mut conditional] {
        t.set_meta("family", region.family().name());
        t.set_meta("L", region.radius());
        t.set_meta("dist", cfg.dist);
    }
    for (j, &p) in cfg.p.iter().enumerate() {
        joint.set_meta(&format!("disconnected_p{p}"), cfg.samples - connected[j]);
    }
    Ok(TailReport { joint, conditional, connected })
}

/// `Σ_{e = {u,v} ∈ π} 1{u ↔ v in G_p ∖ e} d_{G_p ∖ e}(u, v)` for an open path `π`.
pub fn bypass_sum<S: EdgeStates>(graph: &Graph, states: &S, path: &[u32]) -> Result<u64> {
    let mut scratch = BfsScratch::new(graph.num_vertices());
    let mut total = 0u64;
    for w in path.windows(2) {
        let e = graph
            .edge_between(w[0], w[1])
            .filter(|&e| states.is_open(e))
            .ok_or_else(|| Error::Precondition(format!("{} -> {} is not an open edge", w[0], w[1])))?;
        total += chemical_distance_in(graph, &Deleted::new(states, e), w[0], w[1], &mut scratch).unwrap_or(0) as u64;
    }
    Ok(total)
}

/// Tail of `1{u ↔ v in G_p ∖ e} d_{G_p ∖ e}(u, v)` for the edge `e = {u, v}`
/// at the base point along generator 0. Parameters `(p, t)`.
pub fn bypass_tail(region: &FiniteRegion, p: &[f64], t_grid: &[u32], samples: u64, seed: u64, exec: Exec) -> Result<EstimateTable> {
    for &q in p {
        check_probability(q)?;
    }
    let t_max = t_grid.iter().copied().max().ok_or_else(|| Error::Parameter("empty t grid".into()))?;
    if region.radius() < t_max + 1 {
        return Err(Error::Geometry(format!("bypass tail needs L >= {}, region has L = {}", t_max + 1, region.radius())));
    }
    let graph = region.graph();
    let u = region.base();
    let v = region.walk_generator(0, 1).ok_or_else(|| Error::Geometry("region has no edges".into()))?;
    let e = graph.edge_between(u, v).ok_or_else(|| Error::InvariantViolation("generator step is not an edge".into()))?;
    let n = region.num_vertices();
    let values = map_indexed_with(exec, 0..samples, || BfsScratch::new(n), |scratch, i| {
        p.iter()
            .map(|&q| {
                let s = LazySample { p: q, seed: seed + i };
                chemical_distance_in(graph, &Deleted::new(&s, e), u, v, scratch).unwrap_or(0)
            })
            .collect::<Vec<u32>>()
    });
    let mut table = EstimateTable::new(&["p", "t"]);
    for (j, &q) in p.iter().enumerate() {
        for &t in t_grid {
            let hits = values.iter().filter(|row| row[j] >= t).count() as u64;
            table.push(vec![q, t as f64], hits as f64 / samples as f64, wilson_se(hits, samples), samples, seed..seed + samples);
        }
    }
    table.set_meta("family", region.family().name());
    table.set_meta("L", region.radius());
    Ok(table)
}

/// `P(|precluster| ≥ k)` for `k = 1..=k_max`, one independent site
/// configuration per seed. The metadata records `ρ₀` and the bound base
/// `2 D^Δ (1 − ρ)`.
pub fn precluster_tail(graph: &Graph, v: u32, delta: u32, rho: f64, k_max: u32, samples: u64, seed: u64, exec: Exec) -> Result<EstimateTable> {
    let above = check_precluster_density(graph.max_degree(), delta, rho);
    let sizes = map_indexed(exec, 0..samples, |i| precluster_sample(graph, v, delta, rho, seed + i));
    let sizes: Vec<u32> = sizes.into_iter().collect::<Result<_>>()?;
    let mut table = EstimateTable::new(&["k"]);
    for k in 1..=k_max {
        let hits = sizes.iter().filter(|&&s| s >= k).count() as u64;
        table.push(vec![k as f64], hits as f64 / samples as f64, wilson_se(hits, samples), samples, seed..seed + samples);
    }
    let d = graph.max_degree();
    table.set_meta("max_degree", d);
    table.set_meta("delta", delta);
    table.set_meta("rho", rho);
    table.set_meta("rho0", precluster_threshold(d, delta));
    table.set_meta("above_rho0", above);
    table.set_meta("bound_base", 2.0 * (d as f64).powi(delta as i32) * (1.0 - rho));
    Ok(table)
}
