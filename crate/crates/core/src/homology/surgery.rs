use std::collections::VecDeque;

use super::basis::{small_cycle_generators, CycleBasis};
use super::chain::{extract_path, loop_erase, Chain1};
use crate::coarse::{forbidden_set, ForbiddenSet, MacroSiteConfig, SiteState};
use crate::error::{Error, Result};
use crate::graph::{Graph, Host, VertexSet, UNREACHED};
use crate::percolation::EdgeStates;

/// Every intermediate object of one obstacle reroute.
#[derive(Clone, Debug)]
pub struct Reroute {
    /// `β ⊕ γ`.
    pub cycle: Chain1,
    /// The small cycles summing to `β ⊕ γ`, and whether each meets `F`.
    pub decomposition: Vec<Chain1>,
    pub meets_forbidden: Vec<bool>,
    /// `γ″ = β ⊕ ⨁{c : c ∩ F ≠ ∅}`.
    pub gamma2: Chain1,
    /// The simple `x → y` path extracted from `γ″`.
    pub path: Vec<u32>,
}

fn check_walk(graph: &Graph, path: &[u32], what: &str) -> Result<()> {
    if path.is_empty() {
        return Err(Error::Precondition(format!("{what} is empty")));
    }
    if path.windows(2).any(|w| graph.edge_between(w[0], w[1]).is_none()) {
        return Err(Error::Precondition(format!("{what} is not a path in the host")));
    }
    Ok(())
}

/// Decomposes a cycle over small cycles centred in ever larger neighborhoods
/// of its support until it is spanned or the host runs out.
pub fn decompose_in_host<H: Host + ?Sized>(host: &H, q: &Chain1, delta: u32) -> Result<(CycleBasis, Vec<u32>)> {
    let graph = host.graph();
    let support = VertexSet::from_iter(graph.num_vertices(), q.vertex_support(graph));
    let mut radius = delta;
    let mut last = 0;
    loop {
        let centers = support.neighborhood(graph, radius);
        let basis = small_cycle_generators(host, delta, &centers);
        if let Some(sel) = basis.decompose(q, graph)? {
            return Ok((basis, sel));
        }
        if centers.len() == last {
            return Err(Error::Certification(format!("cycle of length {} is not a sum of cycles of diameter <= {delta}", q.len())));
        }
        last = centers.len();
        radius = radius.saturating_mul(2);
    }
}

/// Given paths `β` and `γ` from `x` to `y` with `γ` avoiding `F`, returns a
/// simple `x → y` path inside `(N(F, Δ) ∪ β) \ F`.
pub fn reroute_path<H: Host + ?Sized>(host: &H, beta: &[u32], gamma: &[u32], forbidden: &VertexSet, delta: u32) -> Result<Reroute> {
    let graph = host.graph();
    check_walk(graph, beta, "β")?;
    check_walk(graph, gamma, "γ")?;
    let (x, y) = (beta[0], *beta.last().unwrap_or(&beta[0]));
    if gamma[0] != x || gamma.last() != Some(&y) {
        return Err(Error::Precondition("β and γ have different endpoints".into()));
    }
    if gamma.iter().any(|&v| forbidden.contains(v)) {
        return Err(Error::Precondition("γ meets the forbidden set".into()));
    }
    let cb = Chain1::from_path(graph, beta)?;
    let cycle = cb.xor(&Chain1::from_path(graph, gamma)?);
    let (basis, selection) = decompose_in_host(host, &cycle, delta)?;
    let decomposition: Vec<Chain1> = selection.iter().map(|&g| basis.generators()[g as usize].clone()).collect();
    let meets_forbidden: Vec<bool> = decomposition.iter().map(|c| c.vertex_support(graph).iter().any(|&v| forbidden.contains(v))).collect();
    let mut gamma2 = cb;
    for (c, &m) in decomposition.iter().zip(&meets_forbidden) {
        if m {
            gamma2.xor_assign(c);
        }
    }
    let path = extract_path(graph, &gamma2, x, y)?;

    let mut allowed = forbidden.neighborhood(graph, delta);
    for &v in beta {
        allowed.insert(v);
    }
    if let Some(&v) = path.iter().find(|&&v| forbidden.contains(v) || !allowed.contains(v)) {
        return Err(Error::InvariantViolation(format!("rerouted path leaves (N(F, Δ) ∪ β) \\ F at vertex {v}")));
    }
    Ok(Reroute { cycle, decomposition, meets_forbidden, gamma2, path })
}

/// Open-edge BFS restricted to `allowed`, returning a shortest path.
fn open_path_within<S: EdgeStates>(graph: &Graph, states: &S, from: u32, to: u32, allowed: &VertexSet) -> Option<Vec<u32>> {
    let mut dist = vec![UNREACHED; graph.num_vertices()];
    let mut parent = vec![UNREACHED; graph.num_vertices()];
    dist[from as usize] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for a in graph.neighbors(v) {
            if dist[a.to as usize] == UNREACHED && allowed.contains(a.to) && states.is_open(a.edge) {
                dist[a.to as usize] = dist[v as usize] + 1;
                parent[a.to as usize] = v;
                queue.push_back(a.to);
            }
        }
    }
    if dist[to as usize] == UNREACHED {
        return None;
    }
    let mut path = vec![to];
    while *path.last()? != from {
        path.push(parent[*path.last()? as usize]);
    }
    path.reverse();
    Some(path)
}

/// An open path from `ξ ∈ κ(first)` to `ζ ∈ κ(last)` inside the union of the
/// `R`-balls around the sites of an open coarse path.
pub fn macro_to_micro_path<S: EdgeStates>(msc: &MacroSiteConfig<'_, S>, sites: &[u32], xi: u32, zeta: u32) -> Result<Vec<u32>> {
    let coarse = msc.coarse();
    let cg = coarse.graph();
    let (Some(&first), Some(&last)) = (sites.first(), sites.last()) else {
        return Err(Error::Precondition("empty coarse path".into()));
    };
    if sites.windows(2).any(|w| w[0] != w[1] && cg.edge_between(w[0], w[1]).is_none()) {
        return Err(Error::Precondition("coarse path has non-adjacent consecutive sites".into()));
    }
    if let Some(&s) = sites.iter().find(|&&s| msc.state(s) != SiteState::Open) {
        return Err(Error::Precondition(format!("site {s} on the coarse path is not open")));
    }
    for (v, s, name) in [(xi, first, "ξ"), (zeta, last, "ζ")] {
        let k = msc.kappa(s)?.unwrap_or_default();
        if k.binary_search(&v).is_err() {
            return Err(Error::Precondition(format!("{name} = {v} is not in the giant component near site {s}")));
        }
    }
    let graph = coarse.region().graph();
    let centers: Vec<u32> = sites.iter().map(|&s| coarse.center(s)).collect();
    let dist = graph.bfs_multi(&centers, coarse.scale());
    let allowed = VertexSet::from_iter(graph.num_vertices(), (0..graph.num_vertices() as u32).filter(|&v| dist[v as usize] != UNREACHED));
    open_path_within(graph, msc.states(), xi, zeta, &allowed)
        .ok_or_else(|| Error::InvariantViolation(format!("no open path from {xi} to {zeta} inside the balls of an open coarse path")))
}

/// Result of [`geodesic_repair`].
#[derive(Clone, Debug)]
pub struct Repair {
    pub path: Vec<u32>,
    pub iterations: usize,
    pub forbidden: ForbiddenSet,
    /// `I_{x,y} ∪ N(F, Δ)`.
    pub target_sites: VertexSet,
}

/// Maximal runs `[start, end]` of path indices whose vertices are outside `inside`.
fn outside_runs(path: &[u32], inside: &VertexSet) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in path.iter().enumerate() {
        match (inside.contains(v), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, path.len() - 1));
    }
    runs
}

/// Rewrites an open path from `x` to `y` into one inside the `R`-balls of
/// `I_{x,y} ∪ N(F, Δ)`, one excursion at a time.
pub fn geodesic_repair<S: EdgeStates>(msc: &MacroSiteConfig<'_, S>, path: &[u32], delta: u32, k_prime: u32) -> Result<Repair> {
    let coarse = msc.coarse();
    let region = coarse.region();
    let graph = region.graph();
    let cg = coarse.graph();
    let (Some(&x), Some(&y)) = (path.first(), path.last()) else {
        return Err(Error::Precondition("empty path".into()));
    };
    if !crate::percolation::is_open_path(graph, msc.states(), path) {
        return Err(Error::Precondition("input path is not open".into()));
    }
    let fs = forbidden_set(msc, x, y, delta, k_prime)?;
    let target = fs.target_sites(cg);
    let target_centers: Vec<u32> = target.iter().map(|s| coarse.center(s)).collect();
    let reach = graph.bfs_multi(&target_centers, coarse.scale());
    let inside = VertexSet::from_iter(graph.num_vertices(), (0..graph.num_vertices() as u32).filter(|&v| reach[v as usize] != UNREACHED));

    let (rx, ry) = (coarse.tile_of(x), coarse.tile_of(y));
    let near_x = cg.bfs(rx, k_prime.saturating_sub(1));
    let near_y = cg.bfs(ry, k_prime.saturating_sub(1));
    let stop_x = |s: u32| fs.forbidden.contains(s) || near_x[s as usize] != UNREACHED;
    let stop_y = |s: u32| fs.forbidden.contains(s) || near_y[s as usize] != UNREACHED;
    let mut allowed_macro = target.clone();
    for s in fs.forbidden.iter() {
        allowed_macro.insert(s);
    }

    let mut pi = path.to_vec();
    let initial = outside_runs(&pi, &inside).len();
    let mut iterations = 0;
    loop {
        let runs = outside_runs(&pi, &inside);
        let Some(&(start, end)) = runs.first() else {
            return Ok(Repair { path: pi, iterations, forbidden: fs, target_sites: target });
        };
        if iterations > initial {
            return Err(Error::InvariantViolation(format!("repair did not terminate after {iterations} splices")));
        }
        iterations += 1;
        let sites = coarse.project_path(&pi);
        let iu = (0..start).rev().find(|&i| stop_x(sites[i])).ok_or_else(|| Error::InvariantViolation("no anchor before excursion".into()))?;
        let iv = (end + 1..pi.len()).find(|&i| stop_y(sites[i])).ok_or_else(|| Error::InvariantViolation("no anchor after excursion".into()))?;
        let (u_hat, v_hat) = (sites[iu + 1], sites[iv - 1]);

        let mut gamma_hat: Vec<u32> = sites[iu + 1..iv].to_vec();
        gamma_hat.dedup();
        let gamma_hat = loop_erase(&gamma_hat);
        let beta_hat = cg
            .shortest_path_restricted(u_hat, v_hat, |s| allowed_macro.contains(s))
            .ok_or_else(|| Error::InvariantViolation("anchors are not joined inside I ∪ N(F, Δ)".into()))?;
        let rerouted = reroute_path(coarse, &beta_hat, &gamma_hat, &fs.forbidden, delta)?.path;
        for &s in &rerouted {
            match msc.state(s) {
                SiteState::Open => {}
                SiteState::Undefined => return Err(Error::Geometry(format!("site {s} needed by the repair has its R-ball outside the region"))),
                SiteState::Closed => return Err(Error::InvariantViolation(format!("rerouted coarse path uses closed site {s}"))),
            }
        }

        let iu_first = sites.iter().position(|&s| s == u_hat).unwrap_or(iu + 1);
        let iv_last = sites.iter().rposition(|&s| s == v_hat).unwrap_or(iv - 1);
        let glue = macro_to_micro_path(msc, &rerouted, pi[iu_first], pi[iv_last])?;
        let mut next: Vec<u32> = pi[..iu_first].to_vec();
        next.extend_from_slice(&glue);
        next.extend_from_slice(&pi[iv_last + 1..]);
        let next = loop_erase(&next);
        if outside_runs(&next, &inside).len() >= runs.len() {
            return Err(Error::InvariantViolation("splice did not reduce the number of excursions".into()));
        }
        pi = next;
    }
}
