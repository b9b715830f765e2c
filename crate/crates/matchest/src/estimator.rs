//! Matching-size estimation from edge samples: the early-stopping level
//! tests, the edge weight test, the doubling estimator for IID streams, and
//! the truncated single-pass variant for random-permutation streams.
//!
//! Sample bounds are checked on every top-level call: a level-`j` vertex test
//! uses at most `2 c^(j-1) m/d` samples and an edge test at most `4 M_e m`.
//! A violation is reported as [`Error::Invariant`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::peeling::default_levels;
use crate::stats::{wilson_interval, Interval};
use crate::stream::{EdgeStream, StreamMode};

const REL_TOL: f64 = 1e-9;

/// Default `beta` for [`permutation_peeling`], calibrated on the acceptance
/// separation pair.
pub const DEFAULT_BETA: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub c: f64,
    pub delta: f64,
    /// `J`: edge tests run levels `1..=J+1`.
    pub levels: u32,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub sample_budget: u64,
    /// Highest level examined by the truncated edge test.
    pub truncation: Option<u32>,
}

impl EstimatorConfig {
    /// Defaults for `g`: `d = n`, budget `m`, no truncation.
    pub fn for_graph(g: &Graph, c: f64, delta: f64) -> Self {
        let d = g.n().max(1);
        EstimatorConfig {
            c,
            delta,
            levels: default_levels(c, d),
            d,
            m: g.m(),
            n: g.n(),
            sample_budget: g.m() as u64,
            truncation: None,
        }
    }

    /// Uses `d` as the degree bound and recomputes `J`.
    pub fn with_degree_bound(mut self, d: usize) -> Self {
        self.d = d.max(1);
        self.levels = default_levels(self.c, self.d);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.sample_budget = budget;
        self
    }

    /// Sets the truncation level to `max(0, J - ceil(2 log_c(ln n)))`.
    pub fn with_default_truncation(mut self) -> Self {
        self.truncation = Some(default_truncation(self.c, self.levels, self.n));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 2.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must be at least 2, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 1/2], got {}", self.delta)));
        }
        if self.d == 0 || self.m == 0 {
            return Err(Error::Config("d and m must be positive".into()));
        }
        Ok(())
    }

    /// Number of stream edges scanned by a level-`j+1` vertex test:
    /// `floor(c^j m / d)`.
    pub fn scan_len(&self, j: u32) -> u64 {
        let x = self.c.powi(j as i32) * self.m as f64 / self.d as f64;
        (x * (1.0 + REL_TOL)).floor() as u64
    }

    /// Sample bound `2 c^(level-1) m / d` of a vertex test at `level >= 1`.
    pub fn vtest_bound(&self, level: u32) -> f64 {
        2.0 * self.c.powi(level as i32 - 1) * self.m as f64 / self.d as f64
    }

    /// Largest weight an edge test can return: `sum_{i=0}^{J+1} c^i / d`,
    /// which is at most `c / (c - 1)`.
    pub fn max_edge_weight(&self) -> f64 {
        (0..=self.levels + 1).map(|i| self.c.powi(i as i32)).sum::<f64>() / self.d as f64
    }
}

/// `max(0, J - ceil(2 log_c(ln n)))`, capped at `J`.
pub fn default_truncation(c: f64, levels: u32, n: usize) -> u32 {
    let ln_n = (n.max(2) as f64).ln();
    let cut = (2.0 * ln_n.ln() / c.ln()).ceil();
    if cut <= 0.0 {
        levels
    } else {
        levels.saturating_sub(cut as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestOutcome {
    pub passed: bool,
    pub samples_used: u64,
    /// The accumulator `S` at exit.
    pub s_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeWeightOutcome {
    pub weight: f64,
    /// Highest level at which both endpoints passed (0 if none).
    pub level: u32,
    pub samples_used: u64,
}

/// Level test `VTest_level(v)`. Level 0 passes without sampling. Level
/// `j+1` scans `floor(c^j m/d)` stream edges; for each edge incident to `v`
/// with other endpoint `w`, it adds `c^(i-j)` to `S` for each consecutive
/// level `i = 0, 1, ..., j` that `w` passes, and fails as soon as `S >= delta`.
pub fn vtest(level: u32, v: VertexId, s: &mut EdgeStream<'_>, cfg: &EstimatorConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    if level > cfg.levels + 1 {
        return Err(Error::Precondition(format!(
            "level {level} exceeds J + 1 = {}",
            cfg.levels + 1
        )));
    }
    let start = s.consumed();
    let (passed, s_final) = vtest_rec(level, v, s, cfg)?;
    let samples_used = s.consumed() - start;
    if level >= 1 && samples_used as f64 > cfg.vtest_bound(level) * (1.0 + REL_TOL) {
        return Err(Error::Invariant(format!(
            "level-{level} test on vertex {v} used {samples_used} samples, bound {}",
            cfg.vtest_bound(level)
        )));
    }
    Ok(TestOutcome { passed, samples_used, s_final })
}

fn vtest_rec(level: u32, v: VertexId, s: &mut EdgeStream<'_>, cfg: &EstimatorConfig) -> Result<(bool, f64)> {
    if level == 0 {
        return Ok((true, 0.0));
    }
    let g = s.graph();
    let j = level - 1;
    let mut acc = 0.0;
    for _ in 0..cfg.scan_len(j) {
        let e = s.next_edge()?;
        let (a, b) = g.endpoints(e);
        if a != v && b != v {
            continue;
        }
        let w = if a == v { b } else { a };
        for i in 0..=j {
            if i > 0 && !vtest_rec(i, w, s, cfg)?.0 {
                break;
            }
            acc += cfg.c.powi(i as i32 - j as i32);
            if acc >= cfg.delta {
                return Ok((false, acc));
            }
        }
    }
    Ok((true, acc))
}

/// Edge test: starts from `1/d` and adds `c^i/d` for each level
/// `i = 1..=J+1` passed by both endpoints, stopping at the first failure.
pub fn etest(e: EdgeId, s: &mut EdgeStream<'_>, cfg: &EstimatorConfig) -> Result<EdgeWeightOutcome> {
    etest_upto(e, s, cfg, cfg.levels + 1)
}

/// Edge test whose level loop stops at `cfg.truncation`. With truncation
/// `J + 1` it coincides with [`etest`]; with truncation 0 it returns `1/d`.
pub fn etest_truncated(e: EdgeId, s: &mut EdgeStream<'_>, cfg: &EstimatorConfig) -> Result<EdgeWeightOutcome> {
    let top = cfg
        .truncation
        .ok_or_else(|| Error::Config("truncation level is not set".into()))?;
    etest_upto(e, s, cfg, top.min(cfg.levels + 1))
}

fn etest_upto(e: EdgeId, s: &mut EdgeStream<'_>, cfg: &EstimatorConfig, top: u32) -> Result<EdgeWeightOutcome> {
    cfg.validate()?;
    let (u, v) = s.graph().endpoints(e);
    let start = s.consumed();
    let d = cfg.d as f64;
    let mut weight = 1.0 / d;
    let mut level = 0;
    for i in 1..=top {
        let both = vtest(i, u, s, cfg)?.passed && vtest(i, v, s, cfg)?.passed;
        if !both {
            break;
        }
        weight += cfg.c.powi(i as i32) / d;
        level = i;
    }
    let samples_used = s.consumed() - start;
    let bound = 4.0 * weight * cfg.m as f64;
    if samples_used as f64 > bound * (1.0 + REL_TOL) {
        return Err(Error::Invariant(format!(
            "edge test on {e} used {samples_used} samples, bound 4 M_e m = {bound}"
        )));
    }
    if weight > cfg.max_edge_weight() * (1.0 + REL_TOL) {
        return Err(Error::Invariant(format!("edge weight {weight} above the level-sum maximum")));
    }
    Ok(EdgeWeightOutcome { weight, level, samples_used })
}

/// Draws `t` edges and returns `m * (sum of their edge-test weights) / t`.
pub fn sample_estimate(s: &mut EdgeStream<'_>, t: u64, cfg: &EstimatorConfig) -> Result<f64> {
    batch(s, t, cfg, etest)
}

type EdgeTest = fn(EdgeId, &mut EdgeStream<'_>, &EstimatorConfig) -> Result<EdgeWeightOutcome>;

fn batch(s: &mut EdgeStream<'_>, t: u64, cfg: &EstimatorConfig, test: EdgeTest) -> Result<f64> {
    if t == 0 {
        return Err(Error::Precondition("batch size t must be at least 1".into()));
    }
    let mut sum = 0.0;
    for _ in 0..t {
        let e = s.next_edge()?;
        sum += test(e, s, cfg)?.weight;
    }
    Ok(cfg.m as f64 * sum / t as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Completed,
    NoCompletedBatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateOutcome {
    /// Estimate from the last completed batch, or 0.
    pub estimate: f64,
    pub status: EstimateStatus,
    /// Size `t` of the last completed batch.
    pub last_batch: u64,
    pub samples_used: u64,
}

/// Runs batches of size 1, 2, 4, ... until the sample budget runs out and
/// returns the last completed batch's estimate. The stream is capped so the
/// budget is never exceeded; an interrupted batch is discarded.
pub fn alg_iid(s: &mut EdgeStream<'_>, cfg: &EstimatorConfig) -> Result<EstimateOutcome> {
    doubling(s, cfg, cfg.sample_budget, etest)
}

fn doubling(s: &mut EdgeStream<'_>, cfg: &EstimatorConfig, budget: u64, test: EdgeTest) -> Result<EstimateOutcome> {
    cfg.validate()?;
    let start = s.consumed();
    let outer = s.limit();
    let cap = start.saturating_add(budget);
    s.set_limit(Some(outer.map_or(cap, |o| o.min(cap))));
    let mut out = EstimateOutcome {
        estimate: 0.0,
        status: EstimateStatus::NoCompletedBatch,
        last_batch: 0,
        samples_used: 0,
    };
    let mut t = 1u64;
    let result = loop {
        let before = s.consumed();
        match batch(s, t, cfg, test) {
            Ok(x) => {
                debug_assert!(s.consumed() >= before);
                out.estimate = x;
                out.status = EstimateStatus::Completed;
                out.last_batch = t;
                t *= 2;
            }
            Err(Error::BudgetExhausted(_)) | Err(Error::StreamExhausted(_)) => break Ok(()),
            Err(e) => break Err(e),
        }
    };
    s.set_limit(outer);
    result?;
    out.samples_used = s.consumed() - start;
    Ok(out)
}

/// Single-pass estimator for random-permutation streams: the doubling loop
/// with truncated edge tests and budget `floor(beta m / ln^2 n)`.
pub fn permutation_peeling(s: &mut EdgeStream<'_>, cfg: &EstimatorConfig, beta: f64) -> Result<EstimateOutcome> {
    if s.mode() != StreamMode::Permutation {
        return Err(Error::Precondition("permutation_peeling needs a permutation stream".into()));
    }
    let g = s.graph();
    if g.m() < 3 * g.n() {
        return Err(Error::Precondition(format!(
            "needs m >= 3n (m = {}, n = {}); augment the graph with hub vertices first",
            g.m(),
            g.n()
        )));
    }
    let cfg = if cfg.truncation.is_some() { *cfg } else { cfg.with_default_truncation() };
    let budget = permutation_budget(g.m(), g.n(), beta);
    doubling(s, &cfg, budget, etest_truncated)
}

/// `floor(beta m / ln^2 n)`.
pub fn permutation_budget(m: usize, n: usize, beta: f64) -> u64 {
    let ln_n = (n.max(3) as f64).ln();
    (beta * m as f64 / (ln_n * ln_n)).floor() as u64
}

/// A sum of independent random variables, each taking `value` in `[0, 1]`
/// with probability `p` and 0 otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundedSum {
    pub components: Vec<(f64, f64)>,
}

impl BoundedSum {
    /// `count` independent Bernoulli(`p`) variables.
    pub fn bernoullis(count: usize, p: f64) -> Self {
        BoundedSum { components: vec![(1.0, p); count] }
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.components
            .iter()
            .map(|&(v, p)| if rng.random::<f64>() < p { v } else { 0.0 })
            .sum()
    }

    /// Exact `P[X >= threshold]` when every component has value 1
    /// (a Poisson-binomial tail), computed by dynamic programming.
    pub fn exact_tail(&self, threshold: f64) -> Option<f64> {
        if self.components.iter().any(|&(v, _)| v != 1.0) {
            return None;
        }
        let mut dist = vec![1.0f64];
        for &(_, p) in &self.components {
            let mut next = vec![0.0; dist.len() + 1];
            for (k, &q) in dist.iter().enumerate() {
                next[k] += q * (1.0 - p);
                next[k + 1] += q * p;
            }
            dist = next;
        }
        Some(
            dist.iter()
                .enumerate()
                .filter(|&(k, _)| k as f64 >= threshold)
                .map(|(_, q)| q)
                .sum(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OversamplingReport {
    pub p_hat: f64,
    pub p_hat_ci: Interval,
    pub p_bar_hat: f64,
    pub p_bar_hat_ci: Interval,
    pub p_exact: Option<f64>,
    pub trials: u64,
}

/// Monte Carlo estimates of `p = P[X >= delta]` and of the same probability
/// for the mean of `c` independent copies of `X`.
pub fn oversampling_check(dist: &BoundedSum, delta: f64, c: usize, trials: u64, seed: u64) -> Result<OversamplingReport> {
    if dist.components.iter().any(|&(v, p)| !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&p)) {
        return Err(Error::Precondition("components must take values and probabilities in [0, 1]".into()));
    }
    if dist.mean() > delta / 3.0 * (1.0 + REL_TOL) {
        return Err(Error::Precondition(format!(
            "E[X] = {} exceeds delta/3 = {}",
            dist.mean(),
            delta / 3.0
        )));
    }
    if c == 0 || trials == 0 {
        return Err(Error::Precondition("c and trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hits, mut bar_hits) = (0u64, 0u64);
    for _ in 0..trials {
        if dist.sample(&mut rng) >= delta {
            hits += 1;
        }
        let mean = (0..c).map(|_| dist.sample(&mut rng)).sum::<f64>() / c as f64;
        if mean >= delta {
            bar_hits += 1;
        }
    }
    Ok(OversamplingReport {
        p_hat: hits as f64 / trials as f64,
        p_hat_ci: wilson_interval(hits, trials),
        p_bar_hat: bar_hits as f64 / trials as f64,
        p_bar_hat_ci: wilson_interval(bar_hits, trials),
        p_exact: dist.exact_tail(delta),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    fn cfg(g: &Graph) -> EstimatorConfig {
        EstimatorConfig::for_graph(g, 2.0, 0.5)
    }

    #[test]
    fn isolated_vertex_passes() {
        let g = families::path(2).disjoint_union(&Graph::empty(1));
        let c = cfg(&g).with_degree_bound(1);
        let mut s = EdgeStream::iid(&g, 1);
        let out = vtest(1, 2, &mut s, &c).unwrap();
        assert!(out.passed);
        assert_eq!(out.s_final, 0.0);
    }

    #[test]
    fn star_centre_fails_on_first_edge() {
        let g = families::star(5);
        let c = cfg(&g).with_degree_bound(5);
        let mut s = EdgeStream::iid(&g, 4);
        let out = vtest(1, 0, &mut s, &c).unwrap();
        assert!(!out.passed);
        assert_eq!(out.samples_used, 1);
        assert_eq!(out.s_final, 1.0);
    }

    #[test]
    fn single_edge_level_one_fails() {
        let g = families::path(2);
        let c = cfg(&g).with_degree_bound(1);
        assert_eq!(c.scan_len(0), 1);
        for seed in 0..20 {
            let mut s = EdgeStream::iid(&g, seed);
            assert!(!vtest(1, 1, &mut s, &c).unwrap().passed);
        }
    }

    #[test]
    fn failing_endpoint_gives_base_weight() {
        let g = families::star(5);
        let c = cfg(&g).with_degree_bound(5);
        let mut s = EdgeStream::iid(&g, 2);
        let out = etest(0, &mut s, &c).unwrap();
        assert_eq!(out.weight, 1.0 / 5.0);
        assert_eq!(out.level, 0);
    }

    #[test]
    fn sample_estimate_rejects_zero_batch() {
        let g = families::complete(3);
        let mut s = EdgeStream::iid(&g, 0);
        assert!(sample_estimate(&mut s, 0, &cfg(&g)).is_err());
    }

    #[test]
    fn tiny_budget_reports_no_batch() {
        let g = families::complete(4);
        let c = cfg(&g).with_budget(0);
        let mut s = EdgeStream::iid(&g, 0);
        let out = alg_iid(&mut s, &c).unwrap();
        assert_eq!(out.status, EstimateStatus::NoCompletedBatch);
        assert_eq!(out.estimate, 0.0);
        assert_eq!(out.samples_used, 0);
    }

    #[test]
    fn budget_is_never_exceeded() {
        let g = families::copies(&families::complete(4), 20);
        for budget in [1u64, 7, 50, 120, 1000] {
            let c = cfg(&g).with_budget(budget);
            let mut s = EdgeStream::iid(&g, budget);
            let out = alg_iid(&mut s, &c).unwrap();
            assert!(out.samples_used <= budget);
            assert_eq!(s.limit(), None);
        }
    }

    #[test]
    fn truncation_zero_gives_base_weight() {
        let g = families::complete(6);
        let mut c = cfg(&g);
        c.truncation = Some(0);
        let mut s = EdgeStream::iid(&g, 5);
        assert_eq!(etest_truncated(0, &mut s, &c).unwrap().weight, 1.0 / 6.0);
    }

    #[test]
    fn default_truncation_values() {
        // ln 603 = 6.40, 2 log2(6.40) = 5.36, so six levels are cut.
        assert_eq!(default_truncation(2.0, 8, 603), 2);
        assert_eq!(default_truncation(2.0, 3, 603), 0);
        assert_eq!(default_truncation(2.0, 4, 2), 4);
    }

    #[test]
    fn permutation_peeling_requires_dense_input() {
        let g = families::copies(&families::complete(3), 10);
        let mut s = EdgeStream::permutation(&g, 0);
        assert!(matches!(
            permutation_peeling(&mut s, &cfg(&g), 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn oversampling_degenerate_and_precondition() {
        let zero = BoundedSum::bernoullis(5, 0.0);
        let r = oversampling_check(&zero, 0.5, 4, 1000, 1).unwrap();
        assert_eq!((r.p_hat, r.p_bar_hat), (0.0, 0.0));
        let heavy = BoundedSum::bernoullis(1, 0.5);
        assert!(oversampling_check(&heavy, 0.5, 4, 1000, 1).is_err());
        let boundary = BoundedSum::bernoullis(1, 1.0 / 6.0);
        assert!(oversampling_check(&boundary, 0.5, 4, 1000, 1).is_ok());
    }

    #[test]
    fn exact_tail_of_bernoulli_sum() {
        let x = BoundedSum::bernoullis(30, 0.005);
        let p = x.exact_tail(0.5).unwrap();
        assert!((p - (1.0 - 0.995f64.powi(30))).abs() < 1e-12);
    }
}
