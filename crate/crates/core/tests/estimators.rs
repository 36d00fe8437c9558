use std::collections::VecDeque;

use perc_chem::estimators::*;
use perc_chem::percolation::*;
use perc_chem::region::*;
use perc_chem::{Error, Exec, Graph};
use proptest::prelude::*;

fn bfs_all(graph: &Graph, open: &dyn Fn(u32) -> bool, s: u32) -> Vec<Option<u32>> {
    let mut dist = vec![None; graph.num_vertices()];
    dist[s as usize] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(w) = queue.pop_front() {
        let d = dist[w as usize].unwrap();
        for a in graph.neighbors(w) {
            if open(a.edge) && dist[a.to as usize].is_none() {
                dist[a.to as usize] = Some(d + 1);
                queue.push_back(a.to);
            }
        }
    }
    dist
}

/// `min over (o′, x′)` of `d_{G_p}(o′, x′) + M (d_G(o, o′) + d_G(x′, x))`.
fn pair_oracle(graph: &Graph, open: &dyn Fn(u32) -> bool, o: u32, x: u32, m: f64) -> f64 {
    let dg_o = bfs_all(graph, &|_| true, o);
    let dg_x = bfs_all(graph, &|_| true, x);
    let mut best = f64::INFINITY;
    for a in 0..graph.num_vertices() as u32 {
        let chem = bfs_all(graph, open, a);
        for b in 0..graph.num_vertices() as u32 {
            if let Some(d) = chem[b as usize] {
                let v = d as f64 + m * (dg_o[a as usize].unwrap() + dg_x[b as usize].unwrap()) as f64;
                best = best.min(v);
            }
        }
    }
    best
}

fn box_grid(k: u32) -> Graph {
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let v = i * k + j;
            if j + 1 < k {
                edges.push([v, v + 1]);
            }
            if i + 1 < k {
                edges.push([v, v + k]);
            }
        }
    }
    Graph::from_edges((k * k) as usize, edges).unwrap()
}

#[test]
fn dtilde_matches_pair_oracle_on_a_box() {
    let g = box_grid(4);
    for seed in 0..20u64 {
        let p = 0.2 + 0.04 * seed as f64;
        let open = |e: u32| perc_chem::rng::edge_uniform(seed, e) < p;
        let states = LazySample { p, seed };
        let r = dtilde(&g, &states, 0, 15, 5.0).unwrap();
        let m = penalty_weight(6, 5.0).unwrap();
        assert!((r.value - pair_oracle(&g, &open, 0, 15, m)).abs() <= COST_TOLERANCE);
        assert!(is_open_path(&g, &states, &r.path));
        assert!(r.augmented_length() as f64 <= r.value + COST_TOLERANCE);
        assert_eq!(r.augmented_length(), r.d_o + r.path_length() + r.d_x);
        assert!(r.value <= 6.0 * m + COST_TOLERANCE);
    }
}

#[test]
fn dtilde_closed_forms() {
    let z = build_lattice(2, 10).unwrap();
    let (o, x) = (z.base(), z.vertex_at(&[3, 2]).unwrap());
    let full = sample_config(&z, 1.0, 0);
    let r = dtilde(z.graph(), &full, o, x, 5.0).unwrap();
    assert_eq!((r.value, r.o_tilde, r.x_tilde), (5.0, o, x));
    let empty = sample_config(&z, 0.0, 0);
    let r = dtilde(z.graph(), &empty, o, x, 7.0).unwrap();
    assert_eq!(r.value, 5.0 * 5f64.ln().powi(7));
    assert_eq!(r.path_length(), 0);
    assert!(matches!(dtilde(z.graph(), &full, o, x, 4.9), Err(Error::Parameter(_))));
    let near = z.walk_generator(0, 2).unwrap();
    assert!(matches!(dtilde(z.graph(), &full, o, near, 5.0), Err(Error::Precondition(_))));
}

#[test]
fn full_density_estimators_are_exact() {
    let z = build_lattice(2, 24).unwrap();
    let t = time_constant(&z, &[1.0], 0, &[4, 12], 5, 3, Exec::Parallel).unwrap();
    assert!(t.estimates().iter().all(|&v| v == 1.0));
    let l = lipschitz_sweep(&z, &[0.9, 1.0], 10, 20, 0, Exec::Parallel).unwrap();
    assert_eq!(l.table.rows[1].estimate, 1.0);
    assert!(l.monotonicity_violations(2.0).is_empty());
    let g = goodapprox_check(&z, 1.0, &[5, 10], 5, 5.0, 4, 0, Exec::Parallel).unwrap();
    assert!(g.ratio.estimates().iter().all(|&v| v == 0.0));
    assert_eq!(g.skipped, 0);
    let cfg = TailConfig { p: vec![1.0], k: vec![2.0], dist: 5, t_grid: vec![5, 6, 7], samples: 10, seed: 0 };
    let tail = tail_estimate(&z, &cfg, Exec::Parallel).unwrap();
    assert!(tail.joint.estimates().iter().all(|&v| v == 0.0));
    let pb = pi_bar_tail(&z, 1.0, 8, 5.0, 1.0, &[8, 9], 5, 0, Exec::Parallel).unwrap();
    assert_eq!(pb.estimates(), vec![1.0, 0.0]);
}

#[test]
fn margins_are_enforced() {
    let z = build_lattice(2, 30).unwrap();
    let cfg = TailConfig { p: vec![0.7], k: vec![4.0], dist: 10, t_grid: vec![10, 20], samples: 10, seed: 0 };
    assert_eq!(cfg.min_radius(), 80);
    assert!(matches!(tail_estimate(&z, &cfg, Exec::Sequential), Err(Error::Geometry(_))));
    assert!(matches!(time_constant(&z, &[0.7], 0, &[20], 5, 0, Exec::Sequential), Err(Error::Geometry(_))));
    assert!(matches!(bypass_tail(&z, &[0.7], &[40], 5, 0, Exec::Sequential), Err(Error::Geometry(_))));
}

#[test]
fn tables_do_not_depend_on_scheduling() {
    let z = build_lattice(2, 40).unwrap();
    let cfg = TailConfig { p: vec![0.6, 0.8], k: vec![1.5], dist: 8, t_grid: vec![8, 10, 12], samples: 200, seed: 11 };
    let a = tail_estimate(&z, &cfg, Exec::Sequential).unwrap();
    let b = tail_estimate(&z, &cfg, Exec::Parallel).unwrap();
    assert_eq!(a.joint, b.joint);
    let a = lipschitz_sweep(&z, &[0.7, 0.85, 1.0], 10, 50, 4, Exec::Sequential).unwrap();
    let b = lipschitz_sweep(&z, &[0.7, 0.85, 1.0], 10, 50, 4, Exec::Parallel).unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.ratios, b.ratios);
}

#[test]
fn coupled_tail_is_monotone() {
    let z = build_lattice(2, 40).unwrap();
    let ds = tail_distances(&z, &[0.6, 0.8], 10, 300, 0, Exec::Parallel).unwrap();
    for row in ds {
        if let Some(lo) = row[0] {
            assert!(row[1].unwrap() <= lo);
        }
    }
}

#[test]
fn russo_on_tiny_hosts() {
    let g = box_grid(3);
    let corner = capped_distance(&g, 0, 8, 8);
    let r = russo_check(&g, corner, &[0.3, 0.5, 0.9]).unwrap();
    assert!(r.holds(), "{}", r.max_discrepancy());
    let h = build_heisenberg(1).unwrap();
    let r = russo_check(h.graph(), cluster_count(h.graph()), &[0.1, 0.5]).unwrap();
    assert!(r.holds());
    // Exact check against 𝔼 #clusters = 5 − 4p on the star.
    for pt in &r.points {
        assert!((pt.expectation - (5.0 - 4.0 * pt.p)).abs() < 1e-12);
        assert!((pt.derivative + 4.0).abs() < 1e-12);
    }
}

/// Exhaustive maximum over all self-avoiding paths, no pruning.
fn animal_oracle(g: &Graph, ind: &[bool], v: u32, left: u32, seen: &mut Vec<u32>) -> u32 {
    let mut best = 0;
    if left == 0 {
        return 0;
    }
    for a in g.neighbors(v) {
        if seen.contains(&a.to) {
            continue;
        }
        seen.push(a.to);
        best = best.max(ind[a.edge as usize] as u32 + animal_oracle(g, ind, a.to, left - 1, seen));
        seen.pop();
    }
    best
}

#[test]
fn coloring_classes_are_separated() {
    let z = build_lattice(2, 6).unwrap();
    let c = coloring_bound(&z, 1).unwrap();
    let m = z.num_edges() as u32;
    for e in 0..m {
        for f in e + 1..m {
            if c.colors[e as usize] == c.colors[f as usize] {
                assert!(edge_distance(z.graph(), e, f) > 2);
            }
        }
    }
    assert!(c.within_bound());
    let big = build_lattice(2, 30).unwrap();
    let c = coloring_bound(&big, 1).unwrap();
    assert!(c.within_bound());
    assert_eq!(c.bound, lattice_ball_size(2, 4) * 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn animal_matches_exhaustive_search(seed in any::<u64>(), density in 0.05f64..0.5, len in 1u32..8) {
        let z = build_lattice(2, 8).unwrap();
        let ind: Vec<bool> = (0..z.num_edges() as u32).map(|e| perc_chem::rng::edge_uniform(seed, e) < density).collect();
        let got = greedy_animal(&z, &ind, len).unwrap();
        prop_assert_eq!(got, animal_oracle(z.graph(), &ind, z.base(), len, &mut vec![z.base()]));
    }

    #[test]
    fn dtilde_matches_pair_oracle_on_small_regions(seed in any::<u64>(), p in 0.0f64..1.0, which in 0usize..3, a in 0u32..64, b in 0u32..64) {
        let region = match which {
            0 => build_lattice(2, 3).unwrap(),
            1 => build_lattice(3, 2).unwrap(),
            _ => build_heisenberg(2).unwrap(),
        };
        let g = region.graph();
        let n = g.num_vertices() as u32;
        let (o, x) = (a % n, b % n);
        let d = region.graph_distance(o, x).unwrap();
        prop_assume!(d >= 3);
        let states = LazySample { p, seed };
        let r = dtilde(g, &states, o, x, 5.0).unwrap();
        let oracle = pair_oracle(g, &|e| states.is_open(e), o, x, r.weight);
        prop_assert!((r.value - oracle).abs() <= COST_TOLERANCE);
    }
}
