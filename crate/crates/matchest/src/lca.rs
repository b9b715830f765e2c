//! Local computation oracles for an approximate maximum matching.
//!
//! All randomness comes from a keyed PRF, so every answer is a deterministic
//! function of `(graph, config, master seed, query)` and answers to
//! different queries are mutually consistent. The level-`i` test of vertex
//! `u` started from an edge query reads the PRF stream keyed by
//! `("vertex", u, i)`; recursive tests inside it continue on the caller's
//! stream. The candidate coin of edge `e` reads the stream keyed by
//! `("edge", e)`.

use std::cell::Cell;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::peeling::default_levels;
use crate::prf::prf_rng;

const REL_TOL: f64 = 1e-9;

/// Default multiplier `K` in the soft per-query budget `K d ln n` for
/// [`oracle_edge`]. Calibrated on the bounded-degree acceptance corpus.
pub const DEFAULT_QUERY_BUDGET_FACTOR: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    pub c: f64,
    pub delta: f64,
    /// Degree bound; must be at least the true maximum degree.
    pub d: usize,
    /// Rounding constant: an edge becomes a candidate with probability
    /// `weight / (10 lambda)`.
    pub lambda: f64,
    pub master_seed: u64,
    /// `K` in the per-query budget `K d ln n`.
    pub query_budget_factor: f64,
}

impl OracleConfig {
    /// `c = 2`, `delta = 1/2`, `d` the maximum degree, `lambda = 100 c^2`.
    pub fn for_graph(g: &Graph, master_seed: u64) -> Self {
        let c = 2.0;
        OracleConfig {
            c,
            delta: 0.5,
            d: g.d().max(1),
            lambda: 100.0 * c * c,
            master_seed,
            query_budget_factor: DEFAULT_QUERY_BUDGET_FACTOR,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// `J = max(0, floor(log_c d) - 1)`.
    pub fn levels(&self) -> u32 {
        default_levels(self.c, self.d)
    }

    /// Whether `lambda >= 100 c^2`, the regime covered by the analysis.
    pub fn lambda_in_analysed_range(&self) -> bool {
        self.lambda >= 100.0 * self.c * self.c
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !(self.c >= 2.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must be at least 2, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 1/2], got {}", self.delta)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
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

    /// Soft per-query probe budget `K d ln n` for [`oracle_edge`].
    pub fn query_budget(&self, n: usize) -> f64 {
        self.query_budget_factor * self.d as f64 * (n.max(2) as f64).ln()
    }
}

/// Graph access through `degree` (free) and `kth_neighbor` (one probe each).
pub struct ProbeGraph<'g> {
    g: &'g Graph,
    probes: Cell<u64>,
}

impl<'g> ProbeGraph<'g> {
    pub fn new(g: &'g Graph) -> Self {
        ProbeGraph { g, probes: Cell::new(0) }
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.g.degree(v)
    }

    pub fn kth_neighbor(&self, v: VertexId, k: usize) -> (VertexId, EdgeId) {
        self.probes.set(self.probes.get() + 1);
        self.g.kth_incident(v, k).expect("k below degree")
    }

    pub fn probes(&self) -> u64 {
        self.probes.get()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LcaTestOutcome {
    pub passed: bool,
    pub probes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LcaEdgeOutcome {
    pub weight: f64,
    pub level: u32,
    pub probes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleAnswer {
    pub answer: bool,
    pub probes: u64,
    /// Whether `probes <= K d ln n`.
    pub within_budget: bool,
}

/// Level test for `v` driven by `rng`. Draws `D ~ Binomial(floor(c^j m/d),
/// deg(v)/m)` and examines `D` uniformly random incident edges, with the
/// same accumulator and early stop as the streaming test.
pub fn lca_vtest(level: u32, v: VertexId, g: &Graph, cfg: &OracleConfig, rng: &mut ChaCha20Rng) -> Result<LcaTestOutcome> {
    cfg.validate(g)?;
    let pg = ProbeGraph::new(g);
    let passed = vtest_rec(level, v, &pg, cfg, rng);
    let probes = pg.probes();
    check_vtest_bound(level, v, probes, cfg)?;
    Ok(LcaTestOutcome { passed, probes })
}

/// The level test started by an edge query: randomness is the PRF stream of
/// `(v, level)`, so the answer is fixed for a given master seed.
pub fn lca_vtest_seeded(level: u32, v: VertexId, g: &Graph, cfg: &OracleConfig) -> Result<LcaTestOutcome> {
    let mut rng = vertex_rng(cfg, v, level);
    lca_vtest(level, v, g, cfg, &mut rng)
}

fn vertex_rng(cfg: &OracleConfig, v: VertexId, level: u32) -> ChaCha20Rng {
    prf_rng(cfg.master_seed, "vertex", &[v as u64, level as u64])
}

fn check_vtest_bound(level: u32, v: VertexId, probes: u64, cfg: &OracleConfig) -> Result<()> {
    if level >= 1 {
        let bound = 2.0 * cfg.c.powi(level as i32 - 1);
        if probes as f64 > bound * (1.0 + REL_TOL) {
            return Err(Error::Invariant(format!(
                "level-{level} local test on vertex {v} made {probes} probes, bound {bound}"
            )));
        }
    }
    Ok(())
}

fn vtest_rec(level: u32, v: VertexId, pg: &ProbeGraph<'_>, cfg: &OracleConfig, rng: &mut ChaCha20Rng) -> bool {
    if level == 0 {
        return true;
    }
    let deg = pg.degree(v);
    if deg == 0 {
        return true;
    }
    let j = level - 1;
    let m = pg.g.m();
    let trials = (cfg.c.powi(j as i32) * m as f64 / cfg.d as f64 * (1.0 + REL_TOL)).floor() as u64;
    let p = deg as f64 / m as f64;
    let draws = Binomial::new(trials, p).expect("p is a valid probability").sample(rng);
    let mut acc = 0.0;
    for _ in 0..draws {
        let k = rng.random_range(0..deg);
        let (w, _) = pg.kth_neighbor(v, k);
        for i in 0..=j {
            if i > 0 && !vtest_rec(i, w, pg, cfg, rng) {
                break;
            }
            acc += cfg.c.powi(i as i32 - j as i32);
            if acc >= cfg.delta {
                return false;
            }
        }
    }
    true
}

/// Edge weight `1/d + sum c^i/d` over the levels `i = 1..=J+1` that both
/// endpoints pass, each endpoint's tests seeded from its own PRF stream.
pub fn lca_etest(e: EdgeId, g: &Graph, cfg: &OracleConfig) -> Result<LcaEdgeOutcome> {
    cfg.validate(g)?;
    let pg = ProbeGraph::new(g);
    let out = etest_inner(e, &pg, cfg)?;
    Ok(out)
}

fn etest_inner(e: EdgeId, pg: &ProbeGraph<'_>, cfg: &OracleConfig) -> Result<LcaEdgeOutcome> {
    let (u, v) = pg.g.endpoints(e);
    let start = pg.probes();
    let d = cfg.d as f64;
    let mut weight = 1.0 / d;
    let mut level = 0;
    for i in 1..=cfg.levels() + 1 {
        let pass = |x: VertexId| -> Result<bool> {
            let before = pg.probes();
            let ok = vtest_rec(i, x, pg, cfg, &mut vertex_rng(cfg, x, i));
            check_vtest_bound(i, x, pg.probes() - before, cfg)?;
            Ok(ok)
        };
        if !(pass(u)? && pass(v)?) {
            break;
        }
        weight += cfg.c.powi(i as i32) / d;
        level = i;
    }
    let probes = pg.probes() - start;
    let bound = 4.0 * weight * d;
    if probes as f64 > bound * (1.0 + REL_TOL) {
        return Err(Error::Invariant(format!(
            "local edge test on {e} made {probes} probes, bound 4 M_e d = {bound}"
        )));
    }
    Ok(LcaEdgeOutcome { weight, level, probes })
}

/// Whether `e` is a matching candidate: a coin with bias
/// `min(1, weight / (10 lambda))` read from the PRF stream of `e`.
pub fn matching_candidate(e: EdgeId, g: &Graph, cfg: &OracleConfig) -> Result<LcaTestOutcome> {
    cfg.validate(g)?;
    let pg = ProbeGraph::new(g);
    let passed = candidate_inner(e, &pg, cfg)?;
    Ok(LcaTestOutcome { passed, probes: pg.probes() })
}

fn candidate_inner(e: EdgeId, pg: &ProbeGraph<'_>, cfg: &OracleConfig) -> Result<bool> {
    let weight = etest_inner(e, pg, cfg)?.weight;
    let p = (weight / (10.0 * cfg.lambda)).min(1.0);
    let coin: f64 = prf_rng(cfg.master_seed, "edge", &[e as u64]).random();
    Ok(coin < p)
}

/// `e` is in the matching iff it is a candidate and no edge sharing an
/// endpoint with it is.
pub fn oracle_edge(e: EdgeId, g: &Graph, cfg: &OracleConfig) -> Result<OracleAnswer> {
    cfg.validate(g)?;
    let pg = ProbeGraph::new(g);
    let answer = edge_inner(e, &pg, cfg)?;
    finish(answer, &pg, g, cfg)
}

fn edge_inner(e: EdgeId, pg: &ProbeGraph<'_>, cfg: &OracleConfig) -> Result<bool> {
    if !candidate_inner(e, pg, cfg)? {
        return Ok(false);
    }
    let (u, v) = pg.g.endpoints(e);
    for x in [u, v] {
        for k in 0..pg.degree(x) {
            let (_, f) = pg.kth_neighbor(x, k);
            if f != e && candidate_inner(f, pg, cfg)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `v` is matched iff one of its incident edges is in the matching
/// according to [`oracle_edge`].
pub fn oracle_vertex(v: VertexId, g: &Graph, cfg: &OracleConfig) -> Result<OracleAnswer> {
    cfg.validate(g)?;
    let pg = ProbeGraph::new(g);
    let mut answer = false;
    for k in 0..pg.degree(v) {
        let (_, e) = pg.kth_neighbor(v, k);
        if edge_inner(e, &pg, cfg)? {
            answer = true;
            break;
        }
    }
    finish(answer, &pg, g, cfg)
}

fn finish(answer: bool, pg: &ProbeGraph<'_>, g: &Graph, cfg: &OracleConfig) -> Result<OracleAnswer> {
    let probes = pg.probes();
    let budget = cfg.query_budget(g.n());
    if probes as f64 > 10.0 * budget {
        return Err(Error::Invariant(format!(
            "oracle query made {probes} probes, ten times the budget {budget}"
        )));
    }
    Ok(OracleAnswer { answer, probes, within_budget: probes as f64 <= budget })
}

/// Summary of querying every edge under one master seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AllEdgesReport {
    pub matching: Vec<EdgeId>,
    pub is_matching: bool,
    pub max_probes: u64,
    pub over_budget: usize,
    pub queries: usize,
}

/// Queries [`oracle_edge`] on every edge.
pub fn oracle_all_edges(g: &Graph, cfg: &OracleConfig) -> Result<AllEdgesReport> {
    let mut matching = Vec::new();
    let mut max_probes = 0;
    let mut over_budget = 0;
    for e in 0..g.m() {
        let a = oracle_edge(e, g, cfg)?;
        max_probes = max_probes.max(a.probes);
        if !a.within_budget {
            over_budget += 1;
        }
        if a.answer {
            matching.push(e);
        }
    }
    Ok(AllEdgesReport {
        is_matching: crate::graph::is_matching(g, &matching),
        matching,
        max_probes,
        over_budget,
        queries: g.m(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn isolated_vertex_passes_without_probes() {
        let g = families::path(2).disjoint_union(&Graph::empty(1));
        let cfg = OracleConfig::for_graph(&g, 3);
        for level in 1..=3 {
            let out = lca_vtest_seeded(level, 2, &g, &cfg).unwrap();
            assert!(out.passed);
            assert_eq!(out.probes, 0);
        }
    }

    #[test]
    fn level_one_fails_on_first_neighbour() {
        let g = families::star(8);
        let cfg = OracleConfig::for_graph(&g, 0);
        for seed in 0..50 {
            let mut rng = prf_rng(seed, "t", &[]);
            let out = lca_vtest(1, 0, &g, &cfg, &mut rng).unwrap();
            assert_eq!(out.passed, out.probes == 0);
            assert!(out.probes <= 1);
        }
    }

    #[test]
    fn seeded_tests_are_deterministic() {
        let g = families::complete(6);
        let cfg = OracleConfig::for_graph(&g, 11);
        for v in 0..6 {
            for level in 1..=cfg.levels() + 1 {
                assert_eq!(
                    lca_vtest_seeded(level, v, &g, &cfg).unwrap(),
                    lca_vtest_seeded(level, v, &g, &cfg).unwrap()
                );
            }
        }
    }

    #[test]
    fn huge_lambda_never_selects() {
        let g = families::complete(5);
        let cfg = OracleConfig::for_graph(&g, 1).with_lambda(1e300);
        for e in 0..g.m() {
            assert!(!matching_candidate(e, &g, &cfg).unwrap().passed);
            let a = oracle_edge(e, &g, &cfg).unwrap();
            assert!(!a.answer);
        }
    }

    #[test]
    fn isolated_candidate_edge_is_matched() {
        let g = families::disjoint_edges(3);
        let cfg = OracleConfig::for_graph(&g, 0).with_lambda(1e-3);
        for e in 0..3 {
            assert!(matching_candidate(e, &g, &cfg).unwrap().passed);
            assert!(oracle_edge(e, &g, &cfg).unwrap().answer);
        }
        assert!(oracle_vertex(0, &g, &cfg).unwrap().answer);
    }

    #[test]
    fn isolated_vertex_is_unmatched() {
        let g = Graph::empty(2);
        let cfg = OracleConfig::for_graph(&g, 0);
        assert!(!oracle_vertex(0, &g, &cfg).unwrap().answer);
    }

    #[test]
    fn weight_stays_in_range() {
        let g = families::complete(9);
        let cfg = OracleConfig::for_graph(&g, 5);
        let max = (0..=cfg.levels() + 1).map(|i| 2f64.powi(i as i32)).sum::<f64>() / cfg.d as f64;
        for e in 0..g.m() {
            let w = lca_etest(e, &g, &cfg).unwrap().weight;
            assert!(w >= 1.0 / cfg.d as f64 && w <= max + 1e-12);
        }
    }
}
