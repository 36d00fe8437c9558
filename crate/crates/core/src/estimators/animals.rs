use crate::error::{Error, Result};
use crate::graph::{Graph, UNREACHED};
use crate::region::FiniteRegion;

/// Longest path accepted by [`greedy_animal`].
pub const MAX_ANIMAL_LENGTH: u32 = 12;

/// Edge distance: the least graph distance between an endpoint of `e` and an endpoint of `f`.
pub fn edge_distance(graph: &Graph, e: u32, f: u32) -> u32 {
    let d = graph.bfs_multi(&graph.endpoints(e), UNREACHED);
    graph.endpoints(f).iter().map(|&v| d[v as usize]).min().unwrap_or(UNREACHED)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coloring {
    pub n: u32,
    /// Color of each edge.
    pub colors: Vec<u32>,
    pub num_colors: u32,
    /// `|B(o, 2N + 2)| · D`.
    pub bound: u64,
}

impl Coloring {
    pub fn within_bound(&self) -> bool {
        self.num_colors as u64 <= self.bound
    }

    /// True when every pair of edges is in conflict.
    pub fn is_degenerate(&self) -> bool {
        self.num_colors as usize == self.colors.len()
    }
}

/// Greedy coloring of the edges of `region` in index order, where two edges
/// conflict when their edge distance is at most `2N`. Each color class is a
/// `2N`-separated edge set.
pub fn coloring_bound(region: &FiniteRegion, n: u32) -> Result<Coloring> {
    if n == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    let graph = region.graph();
    let m = graph.num_edges();
    let mut colors = vec![UNREACHED; m];
    let mut taken: Vec<u32> = Vec::new();
    let mut num_colors = 0;
    for e in 0..m as u32 {
        let dist = graph.bfs_multi(&graph.endpoints(e), 2 * n);
        taken.clear();
        for (v, &d) in dist.iter().enumerate() {
            if d == UNREACHED {
                continue;
            }
            for a in graph.neighbors(v as u32) {
                let c = colors[a.edge as usize];
                if c != UNREACHED {
                    taken.push(c);
                }
            }
        }
        taken.sort_unstable();
        taken.dedup();
        let c = taken.iter().enumerate().find(|&(i, &c)| i as u32 != c).map_or(taken.len() as u32, |(i, _)| i as u32);
        colors[e as usize] = c;
        num_colors = num_colors.max(c + 1);
    }
    let profile = region.growth_profile();
    let r = (2 * n + 2) as usize;
    let ball = profile.get(r).or(profile.last()).copied().unwrap_or(0);
    let bound = ball * region.family().degree() as u64;
    Ok(Coloring { n, colors, num_colors, bound })
}

/// `Γ_L`: the largest `Σ_{e ∈ π} I_e` over self-avoiding paths `π` from the
/// base point with at most `L` edges, by depth-first branch and bound.
pub fn greedy_animal(region: &FiniteRegion, indicators: &[bool], length: u32) -> Result<u32> {
    if length > MAX_ANIMAL_LENGTH {
        return Err(Error::Refused(format!("L = {length} exceeds the exact-search bound {MAX_ANIMAL_LENGTH}")));
    }
    let graph = region.graph();
    if indicators.len() != graph.num_edges() {
        return Err(Error::Parameter(format!("{} indicators for {} edges", indicators.len(), graph.num_edges())));
    }
    if region.radius() < length {
        return Err(Error::Geometry(format!("paths of length {length} leave a region with L = {}", region.radius())));
    }
    let mut on_path = vec![false; graph.num_vertices()];
    let mut best = 0;
    let o = region.base();
    on_path[o as usize] = true;
    search(graph, indicators, o, length, 0, &mut on_path, &mut best);
    Ok(best)
}

fn search(graph: &Graph, ind: &[bool], v: u32, left: u32, score: u32, on_path: &mut [bool], best: &mut u32) {
    *best = (*best).max(score);
    if left == 0 || score + left <= *best {
        return;
    }
    for a in graph.neighbors(v) {
        if on_path[a.to as usize] {
            continue;
        }
        on_path[a.to as usize] = true;
        search(graph, ind, a.to, left - 1, score + ind[a.edge as usize] as u32, on_path, best);
        on_path[a.to as usize] = false;
        if score + left <= *best {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::build_lattice;

    #[test]
    fn constant_indicators() {
        let r = build_lattice(2, 6).unwrap();
        let m = r.num_edges();
        assert_eq!(greedy_animal(&r, &vec![false; m], 6).unwrap(), 0);
        assert_eq!(greedy_animal(&r, &vec![true; m], 6).unwrap(), 6);
        assert!(matches!(greedy_animal(&r, &vec![true; m], 13), Err(Error::Refused(_))));
    }

    #[test]
    fn coloring_small_lattice() {
        let r = build_lattice(2, 8).unwrap();
        let c = coloring_bound(&r, 1).unwrap();
        assert!(c.within_bound());
        let whole = coloring_bound(&r, 20).unwrap();
        assert!(whole.is_degenerate());
        assert_eq!(whole.num_colors as usize, r.num_edges());
    }
}
