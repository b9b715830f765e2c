//! Offline peeling: the full-access reference algorithm that builds a
//! fractional matching `M` and a vertex cover `C` in geometrically growing
//! weight rounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{FractionalMatching, Graph, VertexCover, VertexId};

/// `max(0, floor(log_c d) - 1)`, computed without floating-point drift at
/// exact powers of `c`.
pub fn default_levels(c: f64, d: usize) -> u32 {
    if d == 0 {
        return 0;
    }
    let d = d as f64;
    let mut k = 0u32;
    let mut power = 1.0f64;
    while power * c <= d * (1.0 + 1e-12) {
        power *= c;
        k += 1;
    }
    k.saturating_sub(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeelingConfig {
    /// Growth factor of the per-round weight increment.
    pub c: f64,
    /// Peeling threshold on vertex load.
    pub delta: f64,
    /// The algorithm runs `levels + 1` rounds.
    pub levels: u32,
    /// Degree bound used to scale the increments.
    pub d: usize,
}

impl PeelingConfig {
    /// Configuration for `g` with `d = g.d()` and the default level count.
    pub fn for_graph(g: &Graph, c: f64, delta: f64) -> Self {
        let d = g.d().max(1);
        PeelingConfig { c, delta, levels: default_levels(c, d), d }
    }

    pub fn with_levels(mut self, levels: u32) -> Self {
        self.levels = levels;
        self
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must exceed 1, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 1/2], got {}", self.delta)));
        }
        if self.d < g.max_degree() || self.d == 0 {
            return Err(Error::Config(format!(
                "d = {} is below the maximum degree {}",
                self.d,
                g.max_degree()
            )));
        }
        Ok(())
    }

    /// Cumulative weight of an edge whose endpoints survive every round.
    /// When this is at least `delta`, every non-isolated vertex is peeled
    /// and the returned cover is a vertex cover.
    pub fn surviving_edge_weight(&self) -> f64 {
        (0..=self.levels).map(|i| self.c.powi(i as i32)).sum::<f64>() / self.d as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeelingResult {
    #[serde(skip)]
    pub matching: FractionalMatching,
    #[serde(skip)]
    pub cover: VertexCover,
    /// Round in `1..=levels + 1` in which each vertex was peeled, or
    /// `levels + 2` if it never was.
    pub round_peeled: Vec<u32>,
    /// Number of vertices peeled in each round.
    pub per_round_peels: Vec<usize>,
    pub sum_m: f64,
    pub cover_size: usize,
    pub max_load: f64,
}

/// Runs `levels + 1` rounds. Round `i` adds `c^(i-1)/d` to every edge with
/// both endpoints active, then removes every active vertex whose load has
/// reached `delta` (scanning in ascending id) and puts it in the cover.
pub fn alg_global(g: &Graph, cfg: &PeelingConfig) -> Result<PeelingResult> {
    cfg.validate(g)?;
    let rounds = cfg.levels + 1;
    let never = rounds + 1;
    let mut weights = vec![0.0f64; g.m()];
    let mut load = vec![0.0f64; g.n()];
    let mut round_peeled = vec![never; g.n()];
    let mut per_round_peels = Vec::with_capacity(rounds as usize);
    let mut live_edges: Vec<usize> = (0..g.m()).collect();
    let mut candidates: Vec<VertexId> = (0..g.n()).filter(|&v| g.degree(v) > 0).collect();

    for round in 1..=rounds {
        let inc = cfg.c.powi(round as i32 - 1) / cfg.d as f64;
        for &e in &live_edges {
            let (u, v) = g.endpoints(e);
            weights[e] += inc;
            load[u] += inc;
            load[v] += inc;
        }
        let mut peeled = 0;
        candidates.retain(|&v| {
            if load[v] >= cfg.delta {
                round_peeled[v] = round;
                peeled += 1;
                false
            } else {
                true
            }
        });
        per_round_peels.push(peeled);
        live_edges.retain(|&e| {
            let (u, v) = g.endpoints(e);
            round_peeled[u] == never && round_peeled[v] == never
        });
    }

    let cover = VertexCover {
        members: round_peeled.iter().map(|&r| r < never).collect(),
    };
    let matching = FractionalMatching { weights };
    Ok(PeelingResult {
        sum_m: matching.total(),
        cover_size: cover.len(),
        max_load: load.iter().copied().fold(0.0, f64::max),
        matching,
        cover,
        round_peeled,
        per_round_peels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn default_levels_values() {
        assert_eq!(default_levels(2.0, 1), 0);
        assert_eq!(default_levels(2.0, 2), 0);
        assert_eq!(default_levels(2.0, 4), 1);
        assert_eq!(default_levels(2.0, 7), 1);
        assert_eq!(default_levels(2.0, 8), 2);
        assert_eq!(default_levels(3.0, 81), 3);
        assert_eq!(default_levels(2.0, 1 << 20), 19);
    }

    #[test]
    fn triangle_single_round() {
        let g = families::complete(3);
        let cfg = PeelingConfig::for_graph(&g, 2.0, 0.5);
        assert_eq!(cfg.levels, 0);
        let r = alg_global(&g, &cfg).unwrap();
        assert_eq!(r.matching.weights, vec![0.5; 3]);
        assert_eq!(r.cover_size, 3);
        assert_eq!(r.sum_m, 1.5);
        assert_eq!(r.round_peeled, vec![1, 1, 1]);
    }

    #[test]
    fn empty_graph() {
        let g = Graph::empty(4);
        let r = alg_global(&g, &PeelingConfig::for_graph(&g, 2.0, 0.5)).unwrap();
        assert_eq!(r.sum_m, 0.0);
        assert!(r.cover.is_empty());
    }

    #[test]
    fn star_centre_peeled_when_load_reaches_delta() {
        for leaves in [1usize, 3, 8, 20] {
            let g = families::star(leaves);
            let cfg = PeelingConfig::for_graph(&g, 2.0, 0.5);
            let r = alg_global(&g, &cfg).unwrap();
            // Centre load after round i is leaves * sum_{l<i} c^l / d.
            let mut acc = 0.0;
            let mut expected = cfg.levels + 2;
            for i in 1..=cfg.levels + 1 {
                acc += cfg.c.powi(i as i32 - 1) / cfg.d as f64;
                if leaves as f64 * acc >= cfg.delta {
                    expected = i;
                    break;
                }
            }
            assert_eq!(r.round_peeled[0], expected);
            let last = cfg.c.powi(cfg.levels as i32) / cfg.d as f64;
            let loads = r.matching.loads(&g);
            for leaf in 1..=leaves {
                assert!(loads[leaf] <= cfg.delta + last + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_delta() {
        let g = families::complete(3);
        let cfg = PeelingConfig { delta: 2.0, ..PeelingConfig::for_graph(&g, 2.0, 0.5) };
        assert!(alg_global(&g, &cfg).is_err());
    }

    #[test]
    fn surviving_weight_below_delta_leaves_edges_uncovered() {
        // d = 7 with c = 2 gives two rounds and surviving weight 3/7 < 1/2,
        // so a disjoint edge is never peeled.
        let g = families::star(7).disjoint_union(&families::path(2));
        let cfg = PeelingConfig::for_graph(&g, 2.0, 0.5);
        assert!(cfg.surviving_edge_weight() < cfg.delta);
        let r = alg_global(&g, &cfg).unwrap();
        assert!(!r.cover.covers(&g));
    }
}
