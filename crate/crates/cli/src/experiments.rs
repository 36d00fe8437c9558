use perc_chem::coarse::coarse_graph;
use perc_chem::estimators::*;
use perc_chem::exec::map_indexed;
use perc_chem::homology::{reroute_path, Chain1};
use perc_chem::rng::edge_uniform;
use perc_chem::{build_heisenberg, build_lattice, sample_config, Exec, FiniteRegion, Graph, VertexSet};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::output::{plain_csv, Outputs};
use crate::CliError;

/// Runs one experiment on the current thread pool. Unset fields take their
/// defaults, and the resolved values are what the manifest records.
pub fn render(experiment: Experiment) -> Result<Outputs, CliError> {
    match experiment {
        Experiment::Tail(a) => tail(a),
        Experiment::Timeconst(a) => timeconst(a),
        Experiment::Lipschitz(a) => lipschitz(a),
        Experiment::CoarseCheck(a) => coarse_check(a),
        Experiment::SurgeryDemo(a) => surgery_demo(a),
        Experiment::Russo(a) => russo(a),
        Experiment::Goodapprox(a) => goodapprox(a),
        Experiment::Animal(a) => animal(a),
        Experiment::ExportGraph(a) => export_graph(a),
    }
}

const EXEC: Exec = Exec::Parallel;

fn resolved<T: Serialize>(kind: &'static str, args: &T) -> Result<Outputs, CliError> {
    let config = serde_json::to_value(args).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Outputs::new(kind, config))
}

fn build_region(family: FamilyName, dim: usize, radius: u32) -> Result<FiniteRegion, CliError> {
    Ok(match family {
        FamilyName::Zd => build_lattice(dim, radius)?,
        FamilyName::Heisenberg => build_heisenberg(radius)?,
    })
}

fn fit_json(fit: Option<SlopeFit>) -> Value {
    match fit {
        Some(f) => json!({ "slope": f.slope, "stderr": f.stderr, "z": f.z(), "points": f.points }),
        None => Value::Null,
    }
}

/// `t` from `⌈dist/K⌉` to three times that, at most nine steps, capped by the radius.
fn default_t_grid(dist: u32, k_max: f64, radius: Option<u32>) -> Vec<u32> {
    let lo = ((dist as f64 / k_max).ceil() as u32).max(1);
    let mut hi = 3 * lo;
    if let Some(r) = radius {
        hi = hi.min((r as f64 / k_max).floor() as u32).max(lo);
    }
    let step = ((hi - lo) / 8).max(1) as usize;
    (lo..=hi).step_by(step).collect()
}

fn tail(mut a: TailArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let p = a.p.get_or_insert_with(|| Grid(vec![0.65])).0.clone();
    let k = a.k.get_or_insert_with(|| Grid(vec![4.0])).0.clone();
    let dist = *a.dist.get_or_insert(40);
    let k_max = k.iter().copied().fold(0.0, f64::max);
    if k_max <= 0.0 {
        return Err(CliError::Config("`K` must be positive".into()));
    }
    let t_default = default_t_grid(dist, k_max, a.radius);
    let t_grid = a.t.get_or_insert_with(|| Grid(t_default.iter().map(|&t| t as f64).collect())).integers("t")?;
    let cfg = TailConfig { p, k, dist, t_grid, samples: *a.n.get_or_insert(10_000), seed: *a.seed.get_or_insert(0) };
    let radius = *a.radius.get_or_insert(cfg.min_radius());
    let mut out = resolved("tail", &a)?;
    let region = build_region(family, dim, radius)?;
    let report = tail_estimate(&region, &cfg, EXEC)?;
    out.add_table("joint", &report.joint)?;
    out.add_table("conditional", &report.conditional)?;
    out.note("connected", json!(report.connected));
    let mut slopes = serde_json::Map::new();
    for &p in &cfg.p {
        for &k in &cfg.k {
            slopes.insert(format!("p={p},K={k}"), fit_json(report.slope(p, k)));
        }
    }
    out.note("joint_slopes", Value::Object(slopes));
    Ok(out)
}

fn timeconst(mut a: TimeconstArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let p = a.p.get_or_insert_with(|| Grid(vec![0.6, 0.7, 0.8, 0.9, 1.0])).0.clone();
    let generator = *a.generator.get_or_insert(0);
    let n_grid = a.dist.get_or_insert_with(|| Grid(vec![10.0, 20.0, 40.0])).integers("dist")?;
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let samples = *a.n.get_or_insert(1000);
    let seed = *a.seed.get_or_insert(0);
    let radius = *a.radius.get_or_insert(2 * n_max);
    let mut out = resolved("timeconst", &a)?;
    let region = build_region(family, dim, radius)?;
    let table = time_constant(&region, &p, generator, &n_grid, samples, seed, EXEC)?;
    out.add_table("timeconst", &table)?;
    let mu: serde_json::Map<String, Value> =
        table.rows.iter().filter(|r| r.params[1] == n_max as f64).map(|r| (r.params[0].to_string(), json!(r.estimate))).collect();
    out.note("mu_hat", Value::Object(mu));
    Ok(out)
}

fn lipschitz(mut a: LipschitzArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let p = a.p.get_or_insert_with(|| "0.6:1:0.05".parse().unwrap_or(Grid(vec![1.0]))).0.clone();
    let d = *a.dist.get_or_insert(60);
    let samples = *a.n.get_or_insert(1000);
    let seed = *a.seed.get_or_insert(0);
    let radius = *a.radius.get_or_insert(2 * d);
    let mut out = resolved("lipschitz", &a)?;
    let region = build_region(family, dim, radius)?;
    let r = lipschitz_sweep(&region, &p, d, samples, seed, EXEC)?;
    out.add_table("sweep", &r.table)?;
    out.add_table("differences", &r.differences)?;
    out.add_table("ratios", &r.ratios)?;
    out.note("max_ratio", json!(r.max_ratio));
    out.note("max_ratio_se", json!(r.max_ratio_se));
    out.note("monotonicity_violations_2se", json!(r.monotonicity_violations(2.0)));
    if let Some(last) = r.table.rows.last() {
        if last.params[0] == 1.0 && last.n > 0 && last.estimate != 1.0 {
            out.fail(format!("E D_1 / d = {} instead of 1", last.estimate));
        }
    }
    Ok(out)
}

fn coarse_check(mut a: CoarseCheckArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let radius = *a.radius.get_or_insert(150);
    let scales = a.scales.get_or_insert_with(|| Grid(vec![60.0, 90.0, 120.0])).integers("scales")?;
    let pairs = *a.pairs.get_or_insert(100) as usize;
    let seed = *a.seed.get_or_insert(0);
    let mut out = resolved("coarse-check", &a)?;
    let region = build_region(family, dim, radius)?;
    let mut rows = Vec::new();
    for &scale in &scales {
        let cg = coarse_graph(&region, scale)?;
        let sandwich = cg.sandwich_violations().len();
        let star = cg.star_violations().len();
        let adjacent = cg.adjacent_distance_violations().len();
        let bound = cg.degree_bound()?;
        // The contraction estimate needs L >= 2R; smaller regions leave the column empty.
        let contraction = match cg.contraction_bound(pairs, seed, EXEC) {
            Ok(c) => c.max_ratio.to_string(),
            Err(perc_chem::Error::Geometry(msg)) => {
                log::warn!("R = {scale}: {msg}");
                String::new()
            }
            Err(e) => return Err(e.into()),
        };
        if sandwich + star + adjacent > 0 {
            out.fail(format!("R = {scale}: {sandwich} sandwich, {star} star, {adjacent} adjacency violations"));
        }
        if cg.max_degree() as f64 > bound {
            out.fail(format!("R = {scale}: coarse degree {} exceeds {bound}", cg.max_degree()));
        }
        rows.push(vec![
            scale.to_string(),
            cg.num_sites().to_string(),
            cg.max_degree().to_string(),
            bound.to_string(),
            sandwich.to_string(),
            star.to_string(),
            adjacent.to_string(),
            contraction,
        ]);
    }
    let header = ["scale", "net_size", "max_degree", "degree_bound", "sandwich_violations", "star_violations", "adjacent_violations", "contraction_ratio"];
    out.add("coarse.csv", plain_csv(&header, &rows)?);
    Ok(out)
}

fn edge_line(tag: &str, edges: &[u32]) -> String {
    let mut s = tag.to_string();
    for e in edges {
        s.push(' ');
        s.push_str(&e.to_string());
    }
    s.push('\n');
    s
}

fn surgery_demo(mut a: SurgeryArgs) -> Result<Outputs, CliError> {
    let dist = *a.dist.get_or_insert(12);
    let hole = *a.hole.get_or_insert(2);
    let delta = *a.delta.get_or_insert(2);
    if dist < 2 * hole + 2 {
        return Err(CliError::Config(format!("`dist` must be at least 2·hole + 2 = {}", 2 * hole + 2)));
    }
    let radius = *a.radius.get_or_insert(dist + hole + 1 + 2 * delta);
    let mut out = resolved("surgery-demo", &a)?;
    let z = build_lattice(2, radius)?;
    let g = z.graph();
    let at = |x: i64, y: i64| z.vertex_at(&[x, y]).ok_or_else(|| perc_chem::Error::Geometry(format!("({x}, {y}) is outside L = {radius}")));
    let (d, h) = (dist as i64, hole as i64 + 1);
    let beta: Vec<u32> = (0..=d).map(|i| at(i, 0)).collect::<Result<_, _>>()?;
    let mut gamma: Vec<u32> = (0..=h).map(|j| at(0, j)).collect::<Result<_, _>>()?;
    gamma.extend((1..=d).map(|i| at(i, h)).collect::<Result<Vec<_>, _>>()?);
    gamma.extend((0..h).rev().map(|j| at(d, j)).collect::<Result<Vec<_>, _>>()?);
    let mid = at(d / 2, 0)?;
    let (x, y) = (beta[0], beta[beta.len() - 1]);
    let blob = z.ball(mid, hole).members;
    let forbidden = VertexSet::from_iter(z.num_vertices(), blob.iter().filter(|&v| v != x && v != y));
    let r = reroute_path(&z, &beta, &gamma, &forbidden, delta)?;

    let mut trace = String::new();
    trace.push_str(&edge_line("beta", Chain1::from_path(g, &beta)?.edges()));
    trace.push_str(&edge_line("gamma", Chain1::from_path(g, &gamma)?.edges()));
    trace.push_str(&edge_line("forbidden", &forbidden.iter().collect::<Vec<_>>()));
    trace.push_str(&edge_line("cycle", r.cycle.edges()));
    for (c, &m) in r.decomposition.iter().zip(&r.meets_forbidden) {
        trace.push_str(&edge_line(if m { "selected" } else { "unselected" }, c.edges()));
    }
    trace.push_str(&edge_line("gamma2", r.gamma2.edges()));
    trace.push_str(&edge_line("gamma1", Chain1::from_path(g, &r.path)?.edges()));
    out.add("trace.txt", trace);

    let mut verts = String::from("# id x y\n");
    for v in 0..z.num_vertices() as u32 {
        let c = z.coords(v);
        verts.push_str(&format!("{v} {} {}\n", c[0], c[1]));
    }
    out.add("vertices.dat", verts);
    let mut edges = String::from("# id u v\n");
    for (e, [u, v]) in g.edges().iter().enumerate() {
        edges.push_str(&format!("{e} {u} {v}\n"));
    }
    out.add("edges.dat", edges);
    out.note("path_length", json!(r.path.len() - 1));
    out.note("small_cycles", json!(r.decomposition.len()));
    out.note("selected", json!(r.meets_forbidden.iter().filter(|&&m| m).count()));
    Ok(out)
}

/// 3×3 grid.
pub fn grid3() -> Graph {
    let mut edges = Vec::new();
    for i in 0..3u32 {
        for j in 0..3u32 {
            let v = 3 * i + j;
            if j < 2 {
                edges.push([v, v + 1]);
            }
            if i < 2 {
                edges.push([v, v + 3]);
            }
        }
    }
    Graph::from_edges(9, edges).unwrap_or_else(|_| unreachable!())
}

pub fn russo_host(host: RussoHost) -> Result<Graph, CliError> {
    Ok(match host {
        RussoHost::Grid3 => grid3(),
        RussoHost::Star => build_heisenberg(1)?.graph().clone(),
        RussoHost::Ball2 => build_lattice(2, 2)?.graph().clone(),
    })
}

/// The last vertex and the first vertex farthest from it.
pub fn far_pair(g: &Graph) -> (u32, u32) {
    let u = g.num_vertices() as u32 - 1;
    let d = g.bfs(u, u32::MAX);
    let far = (0..=u).filter(|&v| d[v as usize] != u32::MAX).max_by_key(|&v| (d[v as usize], std::cmp::Reverse(v))).unwrap_or(u);
    (u, far)
}

pub fn russo_report(g: &Graph, observable: Observable, p: &[f64]) -> Result<RussoReport, CliError> {
    let (u, v) = far_pair(g);
    let cap = g.num_vertices() as u32;
    Ok(match observable {
        Observable::CappedDistance => russo_check(g, capped_distance(g, u, v, cap), p)?,
        Observable::Disconnected => russo_check(g, disconnected(g, u, v), p)?,
        Observable::Clusters => russo_check(g, cluster_count(g), p)?,
    })
}

fn russo(mut a: RussoArgs) -> Result<Outputs, CliError> {
    let host = *a.host.get_or_insert(RussoHost::Grid3);
    let observable = *a.observable.get_or_insert(Observable::CappedDistance);
    let p = a.p.get_or_insert_with(|| Grid(vec![0.1, 0.3, 0.5, 0.7, 0.9])).0.clone();
    let mut out = resolved("russo", &a)?;
    let g = russo_host(host)?;
    let r = russo_report(&g, observable, &p)?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|pt| vec![pt.p.to_string(), pt.expectation.to_string(), pt.derivative.to_string(), pt.influence_sum.to_string(), pt.discrepancy().to_string()])
        .collect();
    out.add("russo.csv", plain_csv(&["p", "expectation", "derivative", "influence_sum", "discrepancy"], &rows)?);
    out.note("num_edges", json!(r.num_edges));
    out.note("max_discrepancy", json!(r.max_discrepancy()));
    if !r.holds() {
        out.fail(format!("derivative identity off by {}", r.max_discrepancy()));
    }
    Ok(out)
}

fn goodapprox(mut a: GoodapproxArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let p = *a.p.get_or_insert(0.7);
    let d_grid = a.dist.get_or_insert_with(|| Grid(vec![20.0, 40.0, 80.0])).integers("dist")?;
    let ring_max = *a.ring_max.get_or_insert(20);
    let c_exp = *a.c_exp.get_or_insert(5.0);
    let samples = *a.n.get_or_insert(500);
    let seed = *a.seed.get_or_insert(0);
    let d_max = d_grid.iter().copied().max().unwrap_or(0);
    let radius = *a.radius.get_or_insert(2 * d_max);
    let mut out = resolved("goodapprox", &a)?;
    let region = build_region(family, dim, radius)?;
    let r = goodapprox_check(&region, p, &d_grid, ring_max, c_exp, samples, seed, EXEC)?;
    out.add_table("ratio", &r.ratio)?;
    out.add_table("ring_tail", &r.ring_tail)?;
    out.note("skipped_no_giant", json!(r.skipped));
    Ok(out)
}

fn animal(mut a: AnimalArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let length = *a.length.get_or_insert(8);
    let q = *a.q.get_or_insert(0.2);
    let sep = *a.sep.get_or_insert(1);
    let samples = *a.n.get_or_insert(200);
    let seed = *a.seed.get_or_insert(0);
    let radius = *a.radius.get_or_insert(length.max(2 * sep + 2));
    let mut out = resolved("animal", &a)?;
    let region = build_region(family, dim, radius)?;
    let m = region.num_edges() as u32;
    let values = map_indexed(EXEC, 0..samples, |i| {
        let ind: Vec<bool> = (0..m).map(|e| edge_uniform(seed + i, e) < q).collect();
        greedy_animal(&region, &ind, length).map(f64::from)
    });
    let values: Vec<f64> = values.into_iter().collect::<perc_chem::Result<_>>()?;
    let (mean, se) = mean_se(&values);
    let mut table = EstimateTable::new(&["length"]);
    table.push(vec![length as f64], mean, se, samples, seed..seed + samples);
    table.set_meta("q", q);
    out.add_table("animal", &table)?;
    let c = coloring_bound(&region, sep)?;
    let row = vec![sep.to_string(), c.num_colors.to_string(), c.bound.to_string(), c.within_bound().to_string(), c.is_degenerate().to_string()];
    out.add("coloring.csv", plain_csv(&["N", "num_colors", "bound", "within_bound", "degenerate"], &[row])?);
    if !c.within_bound() {
        out.fail(format!("{} colors exceed the bound {}", c.num_colors, c.bound));
    }
    Ok(out)
}

fn export_graph(mut a: ExportArgs) -> Result<Outputs, CliError> {
    let family = *a.family.get_or_insert(FamilyName::Zd);
    let dim = *a.dim.get_or_insert(2);
    let radius = *a.radius.get_or_insert(3);
    let out_p = a.p;
    if out_p.is_some() {
        a.seed.get_or_insert(0);
    }
    let mut out = resolved("export-graph", &a)?;
    let region = build_region(family, dim, radius)?;
    match out_p {
        Some(p) => out.add("region.txt", sample_config(&region, p, a.seed.unwrap_or(0)).to_text()),
        None => out.add("region.txt", region.to_text()),
    }
    Ok(out)
}
