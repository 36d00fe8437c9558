use petgraph::unionfind::UnionFind;

use super::stats::{mean_se, EstimateTable};
use crate::error::{Error, Result};
use crate::exec::{map_indexed_with, Exec};
use crate::graph::Graph;
use crate::percolation::{labeling_from_roots, ring_distance, BfsScratch, ClusterLabeling, Uniforms};
use crate::region::FiniteRegion;

/// Cluster labelings of one seed at every level of an increasing `p` grid,
/// built by a single incremental union-find pass.
pub fn coupled_labelings(graph: &Graph, uniforms: &Uniforms, p_grid: &[f64]) -> Vec<ClusterLabeling> {
    debug_assert!(p_grid.windows(2).all(|w| w[0] <= w[1]));
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); p_grid.len()];
    for (e, &u) in uniforms.0.iter().enumerate() {
        let k = p_grid.partition_point(|&p| p <= u);
        if k < p_grid.len() {
            buckets[k].push(e as u32);
        }
    }
    let n = graph.num_vertices();
    let mut uf = UnionFind::<u32>::new(n);
    let mut out = Vec::with_capacity(p_grid.len());
    for bucket in &buckets {
        for &e in bucket {
            let [a, b] = graph.endpoints(e);
            uf.union(a, b);
        }
        out.push(labeling_from_roots(n, |v| uf.find_mut(v)));
    }
    out
}

fn check_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.is_empty() {
        return Err(Error::Parameter("empty p grid".into()));
    }
    if p_grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::Parameter("p grid must lie in (0, 1]".into()));
    }
    if p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("p grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `D_p(o, gⁿ o)` for each seed, each `p` and each `n`, all coupled through the
/// seed. `None` marks a sample without a giant cluster.
pub fn ring_distances(region: &FiniteRegion, p_grid: &[f64], generator: usize, n_grid: &[u32], samples: u64, seed: u64, exec: Exec) -> Result<Vec<Vec<Option<Vec<u32>>>>> {
    check_grid(p_grid)?;
    let n_max = n_grid.iter().copied().max().ok_or_else(|| Error::Parameter("empty distance grid".into()))?;
    if generator >= region.family().degree() {
        return Err(Error::Parameter(format!("generator {generator} out of range")));
    }
    if region.radius() < 2 * n_max {
        return Err(Error::Geometry(format!("needs L >= {}, region has L = {}", 2 * n_max, region.radius())));
    }
    let graph = region.graph();
    let o = region.base();
    let targets: Vec<u32> = n_grid
        .iter()
        .map(|&n| region.walk_generator(generator, n).ok_or_else(|| Error::Geometry(format!("g^{n} o is outside the region"))))
        .collect::<Result<_>>()?;
    let nv = region.num_vertices();
    let m = region.num_edges();
    let rows = map_indexed_with(exec, 0..samples, || BfsScratch::new(nv), |scratch, i| -> Result<Vec<Option<Vec<u32>>>> {
        let s = seed + i;
        let u = Uniforms::new(m, s);
        let labs = coupled_labelings(graph, &u, p_grid);
        p_grid
            .iter()
            .zip(&labs)
            .map(|(&p, lab)| {
                if lab.giant.is_none() {
                    return Ok(None);
                }
                let states = u.at(p);
                targets.iter().map(|&x| ring_distance(graph, &states, lab, o, x, s, scratch)).collect::<Result<Vec<u32>>>().map(Some)
            })
            .collect()
    });
    rows.into_iter().collect()
}

/// `Ê D_p(o, gⁿ o) / n`, parameters `(p, n)`. The row at the largest `n` is the
/// estimate of `μ_p(g)`.
pub fn time_constant(region: &FiniteRegion, p_grid: &[f64], generator: usize, n_grid: &[u32], samples: u64, seed: u64, exec: Exec) -> Result<EstimateTable> {
    let per_seed = ring_distances(region, p_grid, generator, n_grid, samples, seed, exec)?;
    let mut table = EstimateTable::new(&["p", "n"]);
    for (j, &p) in p_grid.iter().enumerate() {
        let kept: Vec<&Vec<u32>> = per_seed.iter().filter_map(|row| row[j].as_ref()).collect();
        for (k, &n) in n_grid.iter().enumerate() {
            let xs: Vec<f64> = kept.iter().map(|d| d[k] as f64 / n as f64).collect();
            let (mean, se) = mean_se(&xs);
            table.push(vec![p, n as f64], mean, se, xs.len() as u64, seed..seed + samples);
        }
        table.set_meta(&format!("skipped_no_giant_p{p}"), samples - kept.len() as u64);
    }
    table.set_meta("family", region.family().name());
    table.set_meta("L", region.radius());
    table.set_meta("generator", generator);
    table.set_meta("mu_hat_at_n", n_grid.iter().copied().max().unwrap_or(0));
    Ok(table)
}

#[derive(Clone, Debug)]
pub struct LipschitzReport {
    /// `Ê D_p(o, x) / d`, parameter `p`.
    pub table: EstimateTable,
    /// Coupled differences `Ê (D_p − D_q) / d` for consecutive `p < q`, parameters `(p, q)`.
    pub differences: EstimateTable,
    /// `|Ê_p − Ê_q| / |p − q|` for consecutive grid points, parameters `(p, q)`.
    pub ratios: EstimateTable,
    pub max_ratio: f64,
    pub max_ratio_se: f64,
}

impl LipschitzReport {
    /// Consecutive coupled differences that fall below `-k` standard errors.
    pub fn monotonicity_violations(&self, k: f64) -> Vec<(f64, f64)> {
        self.differences.rows.iter().filter(|r| r.estimate < -k * r.stderr).map(|r| (r.params[0], r.params[1])).collect()
    }
}

/// Coupled sweep of `Ê D_p(o, g₁^d o) / d` over an increasing `p` grid.
/// Only samples with a giant cluster at every grid level enter the averages.
pub fn lipschitz_sweep(region: &FiniteRegion, p_grid: &[f64], d: u32, samples: u64, seed: u64, exec: Exec) -> Result<LipschitzReport> {
    let per_seed = ring_distances(region, p_grid, 0, &[d], samples, seed, exec)?;
    let kept: Vec<Vec<f64>> = per_seed
        .iter()
        .filter_map(|row| row.iter().map(|r| r.as_ref().map(|v| v[0] as f64 / d as f64)).collect::<Option<Vec<f64>>>())
        .collect();
    let skipped = samples - kept.len() as u64;
    let seeds = seed..seed + samples;
    let n = kept.len() as u64;
    let mut table = EstimateTable::new(&["p"]);
    for (j, &p) in p_grid.iter().enumerate() {
        let xs: Vec<f64> = kept.iter().map(|r| r[j]).collect();
        let (m, se) = mean_se(&xs);
        table.push(vec![p], m, se, n, seeds.clone());
    }
    let mut differences = EstimateTable::new(&["p", "q"]);
    let mut ratios = EstimateTable::new(&["p", "q"]);
    let mut max_ratio = f64::NEG_INFINITY;
    let mut max_ratio_se = f64::NAN;
    for j in 0..p_grid.len().saturating_sub(1) {
        let (p, q) = (p_grid[j], p_grid[j + 1]);
        let diffs: Vec<f64> = kept.iter().map(|r| r[j] - r[j + 1]).collect();
        let (dm, dse) = mean_se(&diffs);
        differences.push(vec![p, q], dm, dse, n, seeds.clone());
        let ratio = dm.abs() / (q - p);
        let rse = dse / (q - p);
        ratios.push(vec![p, q], ratio, rse, n, seeds.clone());
        if ratio > max_ratio {
            max_ratio = ratio;
            max_ratio_se = rse;
        }
    }
    for t in [&mut table, &mut differences, &mut ratios] {
        t.set_meta("family", region.family().name());
        t.set_meta("L", region.radius());
        t.set_meta("d", d);
        t.set_meta("skipped_no_giant", skipped);
    }
    Ok(LipschitzReport { table, differences, ratios, max_ratio, max_ratio_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::clusters_of;
    use crate::region::build_lattice;

    #[test]
    fn incremental_labelings_match_direct() {
        let r = build_lattice(2, 6).unwrap();
        let u = Uniforms::new(r.num_edges(), 11);
        let grid = [0.3, 0.5, 0.7, 1.0];
        let labs = coupled_labelings(r.graph(), &u, &grid);
        for (lab, &p) in labs.iter().zip(&grid) {
            let direct = clusters_of(r.graph(), &u.at(p));
            assert_eq!(lab.labels, direct.labels);
            assert_eq!(lab.giant, direct.giant);
        }
    }

    #[test]
    fn full_density_is_exact() {
        let r = build_lattice(2, 12).unwrap();
        let t = time_constant(&r, &[1.0], 0, &[3, 6], 4, 0, Exec::Sequential).unwrap();
        assert!(t.rows.iter().all(|row| row.estimate == 1.0 && row.stderr == 0.0));
    }
}
