//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use perc_chem::coarse::coarse_graph;
use perc_chem::estimators::*;
use perc_chem::exec::{available_workers, with_workers};
use perc_chem::graph::UNREACHED;
use perc_chem::homology::{check_delta_simply_connected, reroute_path, scan_delta};
use perc_chem::percolation::{sample_config, LazySample};
use perc_chem::rng::{stream, uniform};
use perc_chem::{build_heisenberg, build_lattice, EdgeStates, Exec, FiniteRegion, Graph, VertexSet};
use perc_chem_cli::config::{CoarseCheckArgs, Observable, RussoHost};
use perc_chem_cli::experiments::{russo_host, russo_report};
use perc_chem_cli::{render, table_csv, Experiment, Grid};

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized output compared byte for byte across reruns.
    artifact: String,
}

type Run = Result<Outcome, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn c1_coarse() -> Run {
    let out = render(Experiment::CoarseCheck(CoarseCheckArgs {
        radius: Some(150),
        scales: Some(Grid(vec![60.0, 90.0, 120.0])),
        pairs: Some(100),
        ..Default::default()
    }))
    .map_err(err)?;
    let csv = String::from_utf8_lossy(&out.files["coarse.csv"]).into_owned();
    let mut pass = out.violation.is_none();
    let mut detail = String::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (deg, bound): (f64, f64) = (f[2].parse().map_err(err)?, f[3].parse().map_err(err)?);
        pass &= f[4] == "0" && f[5] == "0" && deg <= bound;
        let _ = write!(detail, "R={}: sites {}, degree {} <= {:.1}, sandwich {}, star {}; ", f[0], f[1], f[2], bound, f[4], f[5]);
    }
    Ok(Outcome { pass, detail, artifact: csv })
}

fn c2_delta() -> Run {
    let z = build_lattice(2, 20).map_err(err)?;
    let window = z.ball(z.base(), 10).members;
    let one = check_delta_simply_connected(&z, 1, &window).map_err(err)?;
    let two = check_delta_simply_connected(&z, 2, &window).map_err(err)?;
    let witness_ok = one.witness.as_ref().is_some_and(|w| w.is_cycle(z.graph()));
    let h = build_heisenberg(16).map_err(err)?;
    let mut found = Vec::new();
    let mut artifact = format!("Z2 d=1 {} {:?} | d=2 {} rank {}\n", one.certified, one.witness.as_ref().map(|w| w.edges().to_vec()), two.certified, two.rank);
    for r in [4, 5] {
        let w = h.ball(h.base(), r).members;
        let (delta, certs) = scan_delta(&h, &w, 4).map_err(err)?;
        for c in &certs {
            let _ = writeln!(artifact, "H r={r} delta={} certified={} rank={} tested={}", c.delta, c.certified, c.rank, c.cycles_tested);
        }
        found.push(delta);
    }
    let stable = found[0].is_some() && found[0] == found[1];
    let pass = !one.certified && witness_ok && two.certified && stable;
    let detail = format!(
        "Z2 refuted at 1 (witness of {} edges), certified at 2: {}; Heisenberg windows r=4,5 certify at {:?}",
        one.witness.as_ref().map_or(0, |w| w.len()),
        two.certified,
        found
    );
    Ok(Outcome { pass, detail, artifact })
}

fn c3_obstacles() -> Run {
    let z = build_lattice(2, 16).map_err(err)?;
    let g = z.graph();
    let inner: Vec<u32> = (0..z.num_vertices() as u32).filter(|&v| z.depth(v) <= 8).collect();
    let delta = 2;
    let (mut done, mut failures, mut seed) = (0, 0, 0u64);
    let mut artifact = String::new();
    let mut first_failure = None;
    while done < 1000 {
        seed += 1;
        let r = |i: u64| uniform(seed, stream::AUX, i);
        let pick = |i: u64| inner[((r(i) * inner.len() as f64) as usize).min(inner.len() - 1)];
        let (x, y) = (pick(0), pick(1));
        if x == y {
            continue;
        }
        let blobs = 1 + (r(2) * 6.0) as u64;
        let mut forbidden = VertexSet::new(z.num_vertices());
        for b in 0..blobs {
            let rad = (r(10 + b) * 3.0) as u32;
            for v in z.ball(pick(20 + b), rad).members.iter() {
                if v != x && v != y {
                    forbidden.insert(v);
                }
            }
        }
        let Some(gamma) = g.shortest_path_restricted(x, y, |v| !forbidden.contains(v)) else { continue };
        let via = pick(3);
        let (Some(a), Some(b)) = (g.shortest_path(x, via), g.shortest_path(via, y)) else { continue };
        let mut beta = a;
        beta.extend_from_slice(&b[1..]);
        done += 1;
        let ok = match reroute_path(&z, &beta, &gamma, &forbidden, delta) {
            Ok(rr) => {
                let out = rr.path;
                let near = g.bfs_multi(&forbidden.iter().collect::<Vec<_>>(), delta);
                let _ = write!(artifact, "{} ", out.len());
                out.first() == Some(&x)
                    && out.last() == Some(&y)
                    && out.windows(2).all(|w| g.edge_between(w[0], w[1]).is_some())
                    && out.iter().collect::<BTreeSet<_>>().len() == out.len()
                    && out.iter().all(|&v| !forbidden.contains(v) && (beta.contains(&v) || near[v as usize] != UNREACHED))
            }
            Err(e) => {
                let _ = write!(artifact, "E ");
                first_failure.get_or_insert(format!("seed {seed}: {e}"));
                false
            }
        };
        if !ok {
            failures += 1;
            first_failure.get_or_insert(format!("seed {seed}: output outside (N(F,Δ) ∪ β) \\ F"));
        }
    }
    let detail = format!("{done} instances, {failures} failures{}", first_failure.map(|f| format!(" (first: {f})")).unwrap_or_default());
    Ok(Outcome { pass: failures == 0, detail, artifact })
}

fn c4_russo() -> Run {
    let p = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut worst = 0.0f64;
    let mut pass = true;
    let mut artifact = String::new();
    let mut max_edges = 0;
    for host in [RussoHost::Grid3, RussoHost::Star, RussoHost::Ball2] {
        let g = russo_host(host).map_err(err)?;
        max_edges = max_edges.max(g.num_edges());
        for obs in [Observable::CappedDistance, Observable::Disconnected, Observable::Clusters] {
            let r = russo_report(&g, obs, &p).map_err(err)?;
            pass &= r.holds() && r.points.len() == 5;
            worst = worst.max(r.max_discrepancy());
            for pt in &r.points {
                let _ = writeln!(artifact, "{host:?},{obs:?},{},{},{},{}", pt.p, pt.expectation, pt.derivative, pt.influence_sum);
            }
        }
    }
    pass &= max_edges <= 16;
    Ok(Outcome { pass, detail: format!("9 host/observable pairs x 5 points, max |lhs - rhs| = {worst:.2e}, max |E| = {max_edges}"), artifact })
}

fn bfs_all(graph: &Graph, open: &dyn Fn(u32) -> bool, s: u32) -> Vec<Option<u32>> {
    let mut dist = vec![None; graph.num_vertices()];
    dist[s as usize] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(w) = queue.pop_front() {
        let d = dist[w as usize].unwrap_or(0);
        for a in graph.neighbors(w) {
            if open(a.edge) && dist[a.to as usize].is_none() {
                dist[a.to as usize] = Some(d + 1);
                queue.push_back(a.to);
            }
        }
    }
    dist
}

/// Brute force over all `(o′, x′)` of `d_{G_p}(o′, x′) + M (d_G(o, o′) + d_G(x′, x))`.
fn pair_oracle(chem: &[Vec<Option<u32>>], dg: &[Vec<Option<u32>>], o: u32, x: u32, m: f64) -> f64 {
    let n = chem.len();
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in 0..n {
            if let (Some(d), Some(da), Some(db)) = (chem[a][b], dg[o as usize][a], dg[x as usize][b]) {
                best = best.min(d as f64 + m * (da + db) as f64);
            }
        }
    }
    best
}

fn small_regions() -> Vec<FiniteRegion> {
    let mut out = Vec::new();
    for dim in 1..=40 {
        for l in 1.. {
            if lattice_size(dim, l) > 40 {
                break;
            }
            out.extend(build_lattice(dim, l).ok());
        }
    }
    for l in 1.. {
        match build_heisenberg(l) {
            Ok(h) if h.num_vertices() <= 40 => out.push(h),
            _ => break,
        }
    }
    out
}

fn lattice_size(dim: usize, l: u32) -> u64 {
    perc_chem::region::lattice_ball_size(dim, l)
}

fn c5_dtilde() -> Run {
    let mut worst = 0.0f64;
    let (mut checked, mut regions, mut closed_ok) = (0u64, 0, true);
    let mut artifact = String::new();
    for region in small_regions() {
        let g = region.graph();
        let n = g.num_vertices() as u32;
        let dg: Vec<Vec<Option<u32>>> = (0..n).map(|v| bfs_all(g, &|_| true, v)).collect();
        let pairs: Vec<(u32, u32)> = (0..n).flat_map(|o| (0..n).map(move |x| (o, x))).filter(|&(o, x)| dg[o as usize][x as usize].unwrap_or(0) >= 3).collect();
        if pairs.is_empty() {
            continue;
        }
        regions += 1;
        for (o, x) in pairs.iter().copied().step_by((pairs.len() / 8).max(1)) {
            let d = dg[o as usize][x as usize].unwrap_or(0);
            let m = penalty_weight(d, 5.0).map_err(err)?;
            let full = dtilde(g, &sample_config(&region, 1.0, 0), o, x, 5.0).map_err(err)?;
            let empty = dtilde(g, &sample_config(&region, 0.0, 0), o, x, 5.0).map_err(err)?;
            closed_ok &= full.value == d as f64 && full.o_tilde == o && full.x_tilde == x;
            closed_ok &= empty.value == d as f64 * m && empty.path_length() == 0;
        }
        for c in 0..50u64 {
            let seed = 1000 * regions as u64 + c;
            let states = LazySample { p: uniform(seed, stream::AUX, 0), seed };
            let chem: Vec<Vec<Option<u32>>> = (0..n).map(|v| bfs_all(g, &|e| states.is_open(e), v)).collect();
            for k in 0..4u64 {
                let i = ((uniform(seed, stream::AUX, 1 + k) * pairs.len() as f64) as usize).min(pairs.len() - 1);
                let (o, x) = pairs[i];
                let r = dtilde(g, &states, o, x, 5.0).map_err(err)?;
                let gap = (r.value - pair_oracle(&chem, &dg, o, x, r.weight)).abs();
                worst = worst.max(gap);
                checked += 1;
                let _ = write!(artifact, "{} ", r.value);
            }
        }
    }
    let pass = worst <= COST_TOLERANCE && closed_ok && regions > 0;
    let detail = format!("{regions} regions, {checked} (config, pair) checks, max |D~ - oracle| = {worst:.1e}, closed forms hold: {closed_ok}");
    Ok(Outcome { pass, detail, artifact })
}

fn c6_tail() -> Run {
    let z = build_lattice(2, 480).map_err(err)?;
    let cfg = TailConfig { p: vec![0.65, 0.8], k: vec![2.0, 3.0, 4.0], dist: 40, t_grid: (40..=120).step_by(10).collect(), samples: 100_000, seed: 0 };
    let r = tail_estimate(&z, &cfg, Exec::Parallel).map_err(err)?;
    let fit = r.slope(0.65, 4.0);
    let slope_ok = fit.is_some_and(|f| f.slope < 0.0 && f.z() >= 3.0);
    let at = |p: f64| -> Vec<f64> { r.joint.rows.iter().filter(|w| w.params[0] == p && w.params[1] == 4.0).map(|w| w.estimate).collect() };
    let ordered = at(0.8).iter().zip(at(0.65)).all(|(hi, lo)| *hi <= lo);
    let nonzero = at(0.65).iter().filter(|&&f| f > 0.0).count();
    let mut detail = format!(
        "K=4: {nonzero}/9 nonzero frequencies at p=0.65 ({} of {} samples have x <-> y), slope {}, p=0.8 pointwise below: {ordered}",
        r.connected[0],
        cfg.samples,
        fit.map_or("not estimable".into(), |f| format!("{:.4} (|slope|/SE {:.1})", f.slope, f.z()))
    );
    for k in [2.0, 3.0] {
        let f = r.slope(0.65, k);
        let _ = write!(detail, "; info K={k}: {}", f.map_or("no fit".into(), |f| format!("slope {:.4}, z {:.1}, {} pts", f.slope, f.z(), f.points)));
    }
    let artifact = table_csv(&r.joint).map_err(err)? + &table_csv(&r.conditional).map_err(err)?;
    Ok(Outcome { pass: slope_ok && ordered, detail, artifact })
}

fn c7_bypass() -> Run {
    let t_grid: Vec<u32> = (3..=31).step_by(2).collect();
    let z = build_lattice(2, 32).map_err(err)?;
    let table = bypass_tail(&z, &[0.65, 0.8], &t_grid, 100_000, 0, Exec::Parallel).map_err(err)?;
    let mut pass = true;
    let mut detail = String::new();
    for p in [0.65, 0.8] {
        let fit = slope_where(&table, 1, |q| q[0] == p);
        pass &= fit.is_some_and(|f| f.slope < 0.0 && f.z() >= 3.0);
        let _ = write!(
            detail,
            "p={p}: {}; ",
            fit.map_or("no fit".into(), |f| format!("slope {:.3} (|slope|/SE {:.1}, {} pts)", f.slope, f.z(), f.points))
        );
    }
    Ok(Outcome { pass, detail, artifact: table_csv(&table).map_err(err)? })
}

fn c8_lipschitz() -> Run {
    let z = build_lattice(2, 120).map_err(err)?;
    let grid: Grid = "0.6:1:0.05".parse().map_err(err)?;
    let a = lipschitz_sweep(&z, &grid.0, 60, 10_000, 0, Exec::Parallel).map_err(err)?;
    let b = lipschitz_sweep(&z, &grid.0, 60, 10_000, 10_000, Exec::Parallel).map_err(err)?;
    let monotone = a.monotonicity_violations(2.0).is_empty() && b.monotonicity_violations(2.0).is_empty();
    let at_one = |r: &LipschitzReport| r.table.rows.last().map(|w| w.estimate);
    let exact = at_one(&a) == Some(1.0) && at_one(&b) == Some(1.0);
    let joint_se = a.max_ratio_se.hypot(b.max_ratio_se);
    let agree = (a.max_ratio - b.max_ratio).abs() <= 2.0 * joint_se;
    let detail = format!(
        "E D_p/d = {:?}; monotone: {monotone}; p=1 exact: {exact}; max ratio {:.3} ± {:.3} vs {:.3} ± {:.3} (2 joint SE {:.3})",
        a.table.estimates().iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        a.max_ratio,
        a.max_ratio_se,
        b.max_ratio,
        b.max_ratio_se,
        2.0 * joint_se
    );
    let mut artifact = String::new();
    for r in [&a, &b] {
        for t in [&r.table, &r.differences, &r.ratios] {
            artifact += &table_csv(t).map_err(err)?;
        }
    }
    Ok(Outcome { pass: monotone && exact && agree, detail, artifact })
}

fn c9_precluster() -> Run {
    let plane = build_lattice(2, 20).map_err(err)?;
    let (delta, _) = scan_delta(&plane, &plane.ball(plane.base(), 10).members, 3).map_err(err)?;
    let delta = delta.ok_or("no Δ certified on the plane")?;
    let z = build_lattice(2, 150).map_err(err)?;
    let cg = coarse_graph(&z, 60).map_err(err)?;
    let v = cg.tile_of(z.base());
    let rho = 0.99;
    let table = precluster_tail(cg.graph(), v, delta, rho, 6, 100_000, 0, Exec::Parallel).map_err(err)?;
    let base = 2.0 * (cg.max_degree() as f64).powi(delta as i32) * (1.0 - rho);
    let mut pass = true;
    let mut detail = format!("Δ={delta}, D̂={}, sites {}, 2D̂^Δ(1-ρ)={base:.3}; ", cg.max_degree(), cg.num_sites());
    for row in &table.rows {
        let k = row.params[0] as i32;
        let bound = 2.0 * base.powi(k);
        pass &= row.estimate <= bound + 3.0 * row.stderr;
        let _ = write!(detail, "k={k}: {:.2e} <= {bound:.3}; ", row.estimate);
    }
    Ok(Outcome { pass, detail, artifact: table_csv(&table).map_err(err)? })
}

type Criterion = (u32, &'static str, fn() -> Run);

const CRITERIA: [Criterion; 9] = [
    (1, "coarse-graining exactness on Z2, R in {60, 90, 120}", c1_coarse),
    (2, "delta-simple connectedness", c2_delta),
    (3, "obstacle reroute property suite", c3_obstacles),
    (4, "Russo derivative identity", c4_russo),
    (5, "penalized distance vs pair oracle", c5_dtilde),
    (6, "chemical distance tail trend, p=0.65, K=4", c6_tail),
    (7, "bypass tail trend", c7_bypass),
    (8, "continuity sweep", c8_lipschitz),
    (9, "precluster tail", c9_precluster),
];

fn run(f: fn() -> Run, workers: Option<usize>) -> Outcome {
    with_workers(workers, f).unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}"), artifact: format!("error: {e}") })
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; only a filter word matters.
    let filter: Option<u32> = std::env::args().skip(1).find(|a| !a.starts_with('-')).and_then(|a| a.parse().ok());
    let other = Some(available_workers() + 1);
    let mut all = true;
    let mut first = Vec::new();
    for (id, name, f) in CRITERIA {
        if filter.is_some_and(|k| k != id && k != 10) {
            continue;
        }
        let t = Instant::now();
        let o = run(f, None);
        all &= o.pass;
        println!("{} criterion {id}: {name}: {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
        first.push((id, f, o.artifact));
    }
    if filter.is_none() || filter == Some(10) {
        let t = Instant::now();
        let mut mismatches = Vec::new();
        for (id, f, artifact) in &first {
            if run(*f, None).artifact != *artifact {
                mismatches.push(format!("{id} (same config)"));
            }
            if run(*f, other).artifact != *artifact {
                mismatches.push(format!("{id} (workers {})", other.unwrap_or(1)));
            }
        }
        let pass = mismatches.is_empty();
        all &= pass;
        println!(
            "{} criterion 10: determinism: {} runs repeated with the same config and with {} workers, mismatches: {:?} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            first.len(),
            other.unwrap_or(1),
            mismatches,
            t.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
