use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::percolation::{chemical_distance_in, clusters_of, BfsScratch, EdgeStates};

/// Largest edge count accepted by exhaustive enumeration.
pub const MAX_EDGES: usize = 20;

/// Identity tolerance.
pub const RUSSO_TOLERANCE: f64 = 1e-12;

/// A configuration on at most [`MAX_EDGES`] edges: bit `e` set iff edge `e` is open.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mask(pub u32);

impl EdgeStates for Mask {
    #[inline]
    fn is_open(&self, e: u32) -> bool {
        self.0 >> e & 1 == 1
    }
}

/// `min(d_{G_ω}(u, v), cap)`, with `cap` when disconnected.
pub fn capped_distance(graph: &Graph, u: u32, v: u32, cap: u32) -> impl Fn(Mask) -> f64 + '_ {
    move |m| {
        let mut scratch = BfsScratch::new(graph.num_vertices());
        chemical_distance_in(graph, &m, u, v, &mut scratch).map_or(cap, |d| d.min(cap)) as f64
    }
}

/// `1{u ↮ v}`.
pub fn disconnected(graph: &Graph, u: u32, v: u32) -> impl Fn(Mask) -> f64 + '_ {
    move |m| {
        let mut scratch = BfsScratch::new(graph.num_vertices());
        if chemical_distance_in(graph, &m, u, v, &mut scratch).is_some() {
            0.0
        } else {
            1.0
        }
    }
}

/// Number of open clusters, isolated vertices included.
pub fn cluster_count(graph: &Graph) -> impl Fn(Mask) -> f64 + '_ {
    move |m| clusters_of(graph, &m).num_clusters() as f64
}

/// `1{e closed}`.
pub fn edge_closed(e: u32) -> impl Fn(Mask) -> f64 {
    move |m| if m.is_open(e) { 0.0 } else { 1.0 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RussoPoint {
    pub p: f64,
    pub expectation: f64,
    /// `d/dp 𝔼_p f` from the exact polynomial.
    pub derivative: f64,
    /// `−Σ_e 𝔼_p[Δ_e f]`.
    pub influence_sum: f64,
    /// `𝔼_p[Δ_e f]` per edge.
    pub influences: Vec<f64>,
}

impl RussoPoint {
    pub fn discrepancy(&self) -> f64 {
        (self.derivative - self.influence_sum).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RussoReport {
    pub num_edges: usize,
    /// `S_k = Σ_{|ω| = k} f(ω)`, so that `𝔼_p f = Σ_k S_k p^k (1 − p)^{m − k}`.
    pub level_sums: Vec<f64>,
    pub points: Vec<RussoPoint>,
}

impl RussoReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.points.iter().map(RussoPoint::discrepancy).fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.max_discrepancy() <= RUSSO_TOLERANCE
    }
}

/// Evaluates `f` on all `2^|E|` configurations of `graph`.
pub fn tabulate(graph: &Graph, f: impl Fn(Mask) -> f64) -> Result<Vec<f64>> {
    let m = graph.num_edges();
    if m > MAX_EDGES {
        return Err(Error::Refused(format!("{m} edges exceed the enumeration bound of {MAX_EDGES}")));
    }
    Ok((0..1u32 << m).map(|w| f(Mask(w))).collect())
}

/// A pair `ω ⊂ ω ∪ {e}` with `f(ω ∪ {e}) > f(ω)`, if any.
pub fn increasing_witness(values: &[f64], m: usize) -> Option<(u32, u32)> {
    for w in 0..values.len() as u32 {
        for e in 0..m as u32 {
            let bit = 1u32 << e;
            if w & bit == 0 && values[(w | bit) as usize] > values[w as usize] {
                return Some((w, e));
            }
        }
    }
    None
}

fn bernstein(k: usize, m: usize, p: f64) -> f64 {
    p.powi(k as i32) * (1.0 - p).powi((m - k) as i32)
}

fn bernstein_derivative(k: usize, m: usize, p: f64) -> f64 {
    let mut d = 0.0;
    if k > 0 {
        d += k as f64 * p.powi(k as i32 - 1) * (1.0 - p).powi((m - k) as i32);
    }
    if k < m {
        d -= (m - k) as f64 * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32 - 1);
    }
    d
}

/// Checks `d/dp 𝔼_p f = −Σ_e 𝔼_p[Δ_e f]`, `Δ_e f(ω) = f(ω ∖ e) − f(ω ∪ e)`, by
/// exhaustive enumeration on both sides.
pub fn russo_check(graph: &Graph, f: impl Fn(Mask) -> f64, p_grid: &[f64]) -> Result<RussoReport> {
    let m = graph.num_edges();
    let values = tabulate(graph, f)?;
    if let Some((w, e)) = increasing_witness(&values, m) {
        return Err(Error::Precondition(format!("observable is not decreasing: opening edge {e} in configuration {w:#b} increases it")));
    }
    if p_grid.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Parameter("p grid must lie in [0, 1]".into()));
    }
    // Per-level sums are exact for integer-valued observables, so each side
    // reduces to a degree-m polynomial with exact coefficients.
    let mut level_sums = vec![0.0; m + 1];
    for (w, &v) in values.iter().enumerate() {
        level_sums[(w as u32).count_ones() as usize] += v;
    }
    let level_diffs: Vec<Vec<f64>> = (0..m)
        .map(|e| {
            let bit = 1u32 << e;
            let mut d = vec![0.0; m + 1];
            for w in 0..values.len() as u32 {
                d[w.count_ones() as usize] += values[(w & !bit) as usize] - values[(w | bit) as usize];
            }
            d
        })
        .collect();
    let points = p_grid
        .iter()
        .map(|&p| {
            let weight: Vec<f64> = (0..=m).map(|k| bernstein(k, m, p)).collect();
            let expectation = level_sums.iter().zip(&weight).map(|(s, b)| s * b).sum();
            let derivative = level_sums.iter().enumerate().map(|(k, s)| s * bernstein_derivative(k, m, p)).sum();
            let influences: Vec<f64> = level_diffs.iter().map(|d| d.iter().zip(&weight).map(|(d, b)| d * b).sum()).collect();
            let influence_sum = -influences.iter().sum::<f64>();
            RussoPoint { p, expectation, derivative, influence_sum, influences }
        })
        .collect();
    Ok(RussoReport { num_edges: m, level_sums, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let g = Graph::from_edges(2, vec![[0, 1]]).unwrap();
        let r = russo_check(&g, edge_closed(0), &[0.1, 0.5, 0.9]).unwrap();
        for pt in &r.points {
            assert!((pt.derivative + 1.0).abs() < 1e-15);
            assert!((pt.influence_sum + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_has_no_influence() {
        let g = Graph::from_edges(3, vec![[0, 1], [1, 2]]).unwrap();
        let r = russo_check(&g, |_| 2.5, &[0.3, 0.7]).unwrap();
        for pt in &r.points {
            assert!(pt.derivative.abs() < 1e-15);
            assert!(pt.influences.iter().all(|&i| i == 0.0));
            assert!((pt.expectation - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn increasing_observable_is_rejected() {
        let g = Graph::from_edges(2, vec![[0, 1]]).unwrap();
        assert!(matches!(russo_check(&g, |m| m.0 as f64, &[0.5]), Err(Error::Precondition(_))));
    }

    #[test]
    fn too_many_edges_are_refused() {
        let edges: Vec<[u32; 2]> = (0..21).map(|i| [i, i + 1]).collect();
        let g = Graph::from_edges(22, edges).unwrap();
        assert!(matches!(russo_check(&g, |_| 0.0, &[0.5]), Err(Error::Refused(_))));
    }
}
