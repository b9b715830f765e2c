//! Bernoulli divergence helpers and the stream coupling experiment, which
//! compares level tests run on IID streams with level tests run on the tail
//! of a random permutation whose first `t` edges are fixed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{vtest, EstimatorConfig};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::prf::{prf_u64, trial_seed};
use crate::stats::{quantile, Interval};
use crate::stream::EdgeStream;

/// `KL(Ber(p) || Ber(q))` in nats, with `0 log 0 = 0`. Returns `+inf` when
/// `p` puts mass where `q` has none.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    (term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0)
}

/// Clamps a Bernoulli parameter into `[theta, 1 - theta]`.
///
/// Panics if `theta` is not in `(0, 1/2)`.
pub fn pad_bernoulli(p: f64, theta: f64) -> f64 {
    assert!(theta > 0.0 && theta < 0.5, "theta must lie in (0, 1/2), got {theta}");
    p.clamp(theta, 1.0 - theta)
}

/// Upper bound on `KL(Ber(p + eps) || Ber(p))`.
pub fn kl_bound(p: f64, eps: f64) -> f64 {
    16.0 * eps * eps / (p * (1.0 - p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlSweep {
    pub points: usize,
    pub violations: usize,
    /// Largest `kl / bound` over points with a nonzero bound.
    pub max_ratio: f64,
}

/// Checks `kl(p + eps, p) <= kl_bound(p, eps)` on a `p_steps x eps_steps`
/// grid with `p` in `(0, 1)` and `eps` spanning `[-p, 1 - p]`.
pub fn kl_sweep(p_steps: usize, eps_steps: usize) -> KlSweep {
    let mut out = KlSweep { points: 0, violations: 0, max_ratio: 0.0 };
    for i in 1..=p_steps {
        let p = i as f64 / (p_steps + 1) as f64;
        for k in 0..eps_steps {
            let eps = -p + k as f64 / (eps_steps - 1).max(1) as f64;
            let q = (p + eps).clamp(0.0, 1.0);
            let eps = q - p;
            let kl = bernoulli_kl(q, p);
            let bound = kl_bound(p, eps);
            out.points += 1;
            if kl > bound * (1.0 + 1e-12) + 1e-15 {
                out.violations += 1;
            }
            if bound > 0.0 {
                out.max_ratio = out.max_ratio.max(kl / bound);
            }
        }
    }
    out
}

/// How the first `t` edges of the permutation stream are chosen.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefixMode {
    /// Use these edges, padded with random distinct edges up to `t`.
    Fixed(Vec<EdgeId>),
    /// Draw one random prefix from the experiment seed.
    Random,
}

/// Which IID stream the permutation tail is compared with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// IID samples from the whole graph.
    #[default]
    Full,
    /// IID samples from the edges not in the prefix.
    Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSpec {
    /// Level of the vertex test (`j + 1`).
    pub level: u32,
    pub vertex: VertexId,
    pub t: usize,
    pub trials: u64,
    pub prefix: PrefixMode,
    pub reference: Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub level: u32,
    pub vertex: VertexId,
    pub t: usize,
    pub trials: u64,
    pub p_iid: f64,
    pub p_perm: f64,
    pub tvd: f64,
    /// Bootstrap 95% interval for the TVD.
    pub ci: Interval,
    /// 97.5% quantile of the TVD between two samples of this size drawn
    /// from the pooled pass rate.
    pub noise_floor: f64,
}

const BOOTSTRAP: usize = 1000;
const MIN_TRIALS: u64 = 10_000;

/// Largest admissible prefix length: `m/2 - 2 c^j m/d`.
pub fn max_prefix(cfg: &EstimatorConfig, level: u32) -> f64 {
    cfg.m as f64 / 2.0 - cfg.vtest_bound(level)
}

/// Runs the level test on IID streams and on permutation streams after a
/// prefix of length `t`, and reports the TVD of the pass/fail outcomes.
pub fn stream_coupling_experiment(
    g: &Graph,
    spec: &CouplingSpec,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<CouplingReport> {
    check_common(g, spec.level, spec.vertex, spec.trials, cfg)?;
    if spec.t as f64 > max_prefix(cfg, spec.level) {
        return Err(Error::Precondition(format!(
            "t = {} exceeds m/2 - 2c^j m/d = {:.2}",
            spec.t,
            max_prefix(cfg, spec.level)
        )));
    }
    let prefix = build_prefix(g, &spec.prefix, spec.t, seed)?;
    let residual = residual_graph(g, &prefix)?;
    let iid_graph = match spec.reference {
        Reference::Full => g,
        Reference::Residual => &residual,
    };
    let results: Vec<Result<(bool, bool)>> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let mut s = EdgeStream::iid(iid_graph, trial_seed(seed, 2 * i));
            let a = vtest(spec.level, spec.vertex, &mut s, cfg)?.passed;
            let mut s = EdgeStream::permutation_with_prefix(g, &prefix, trial_seed(seed, 2 * i + 1))?;
            for _ in 0..prefix.len() {
                s.next_edge()?;
            }
            let b = vtest(spec.level, spec.vertex, &mut s, cfg)?.passed;
            Ok((a, b))
        })
        .collect();
    let mut pass_iid = 0u64;
    let mut pass_perm = 0u64;
    for r in results {
        let (a, b) = r?;
        pass_iid += a as u64;
        pass_perm += b as u64;
    }
    Ok(report(spec.level, spec.vertex, spec.t, spec.trials, pass_iid, pass_perm, seed))
}

/// Control run: two independent batches of IID level tests on `g`.
pub fn iid_control(
    g: &Graph,
    level: u32,
    v: VertexId,
    trials: u64,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<CouplingReport> {
    check_common(g, level, v, trials, cfg)?;
    let results: Vec<Result<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = EdgeStream::iid(g, trial_seed(seed, 2 * i));
            let a = vtest(level, v, &mut s, cfg)?.passed;
            let mut s = EdgeStream::iid(g, trial_seed(seed, 2 * i + 1));
            let b = vtest(level, v, &mut s, cfg)?.passed;
            Ok((a, b))
        })
        .collect();
    let (mut x, mut y) = (0u64, 0u64);
    for r in results {
        let (a, b) = r?;
        x += a as u64;
        y += b as u64;
    }
    Ok(report(level, v, 0, trials, x, y, seed))
}

fn check_common(g: &Graph, level: u32, v: VertexId, trials: u64, cfg: &EstimatorConfig) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Precondition(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    if v >= g.n() {
        return Err(Error::VertexOutOfRange { id: v, n: g.n() });
    }
    if level == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    if cfg.m != g.m() {
        return Err(Error::Config(format!("config has m = {}, graph has m = {}", cfg.m, g.m())));
    }
    cfg.validate()
}

fn build_prefix(g: &Graph, mode: &PrefixMode, t: usize, seed: u64) -> Result<Vec<EdgeId>> {
    let mut prefix = match mode {
        PrefixMode::Fixed(p) => p.clone(),
        PrefixMode::Random => Vec::new(),
    };
    if prefix.len() > t {
        return Err(Error::Precondition(format!("prefix has {} edges but t = {t}", prefix.len())));
    }
    let mut used = vec![false; g.m()];
    for &e in &prefix {
        if e >= g.m() || std::mem::replace(&mut used[e], true) {
            return Err(Error::Precondition(format!("prefix edge {e} is out of range or repeated")));
        }
    }
    let mut rest: Vec<EdgeId> = (0..g.m()).filter(|&e| !used[e]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(prf_u64(seed, "prefix", &[]));
    while prefix.len() < t {
        let i = rng.random_range(0..rest.len());
        prefix.push(rest.swap_remove(i));
    }
    Ok(prefix)
}

/// `g` without the edges in `removed`, on the same vertex set.
pub fn residual_graph(g: &Graph, removed: &[EdgeId]) -> Result<Graph> {
    let mut gone = vec![false; g.m()];
    for &e in removed {
        if e >= g.m() {
            return Err(Error::Precondition(format!("edge {e} out of range")));
        }
        gone[e] = true;
    }
    let edges: Vec<_> = g.edges().enumerate().filter(|(e, _)| !gone[*e]).map(|(_, uv)| uv).collect();
    Graph::new(g.n(), &edges)
}

fn report(level: u32, vertex: VertexId, t: usize, trials: u64, a: u64, b: u64, seed: u64) -> CouplingReport {
    let n = trials as f64;
    let (pa, pb) = (a as f64 / n, b as f64 / n);
    let mut rng = ChaCha8Rng::seed_from_u64(prf_u64(seed, "bootstrap", &[]));
    let draw = |p: f64, rng: &mut ChaCha8Rng| Binomial::new(trials, p).expect("valid binomial").sample(rng) as f64 / n;
    let boot: Vec<f64> = (0..BOOTSTRAP).map(|_| (draw(pa, &mut rng) - draw(pb, &mut rng)).abs()).collect();
    let pooled = (pa + pb) / 2.0;
    let null: Vec<f64> = (0..BOOTSTRAP).map(|_| (draw(pooled, &mut rng) - draw(pooled, &mut rng)).abs()).collect();
    CouplingReport {
        level,
        vertex,
        t,
        trials,
        p_iid: pa,
        p_perm: pb,
        tvd: (pa - pb).abs(),
        ci: Interval { lo: quantile(&boot, 0.025), hi: quantile(&boot, 0.975) },
        noise_floor: quantile(&null, 0.975),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactCoupling {
    pub level: u32,
    pub vertex: VertexId,
    pub t: usize,
    pub p_iid: f64,
    pub p_perm: f64,
    pub tvd: f64,
    /// Stream prefixes enumerated across both modes.
    pub leaves: u64,
}

pub const EXACT_MAX_EDGES: usize = 8;
pub const EXACT_MAX_LEVEL: u32 = 2;
const EXACT_MAX_LEAVES: u64 = 50_000_000;

/// Exact pass probabilities by enumerating every stream realization the
/// test can read. Limited to `m <= 8` and levels up to 2.
pub fn exact_coupling(
    g: &Graph,
    level: u32,
    v: VertexId,
    prefix: &[EdgeId],
    reference: Reference,
    cfg: &EstimatorConfig,
) -> Result<ExactCoupling> {
    if g.m() > EXACT_MAX_EDGES || level > EXACT_MAX_LEVEL {
        return Err(Error::TooLarge(format!(
            "exact mode needs m <= {EXACT_MAX_EDGES} and level <= {EXACT_MAX_LEVEL}"
        )));
    }
    if v >= g.n() {
        return Err(Error::VertexOutOfRange { id: v, n: g.n() });
    }
    if level == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let residual = residual_graph(g, prefix)?;
    let mut leaves = 0;
    let iid_graph = match reference {
        Reference::Full => g,
        Reference::Residual => &residual,
    };
    let p_iid = enumerate(iid_graph, level, v, cfg, false, &mut Vec::new(), &mut leaves)?;
    let p_perm = enumerate(&residual, level, v, cfg, true, &mut Vec::new(), &mut leaves)?;
    Ok(ExactCoupling { level, vertex: v, t: prefix.len(), p_iid, p_perm, tvd: (p_iid - p_perm).abs(), leaves })
}

/// Pass probability of the test given that the stream starts with
/// `script`. Extends the script one edge at a time whenever the test asks
/// for more than it holds.
fn enumerate(
    g: &Graph,
    level: u32,
    v: VertexId,
    cfg: &EstimatorConfig,
    distinct: bool,
    script: &mut Vec<EdgeId>,
    leaves: &mut u64,
) -> Result<f64> {
    let mut s = EdgeStream::scripted(g, script.clone())?;
    match vtest(level, v, &mut s, cfg) {
        Ok(out) => {
            *leaves += 1;
            if *leaves > EXACT_MAX_LEAVES {
                return Err(Error::TooLarge("exact enumeration exceeded its leaf cap".into()));
            }
            Ok(if out.passed { 1.0 } else { 0.0 })
        }
        Err(Error::StreamExhausted(_)) => {
            let choices: Vec<EdgeId> = (0..g.m()).filter(|e| !distinct || !script.contains(e)).collect();
            if choices.is_empty() {
                return Err(Error::Precondition("test reads past the end of the permutation".into()));
            }
            let mut total = 0.0;
            for &e in &choices {
                script.push(e);
                total += enumerate(g, level, v, cfg, distinct, script, leaves)?;
                script.pop();
            }
            Ok(total / choices.len() as f64)
        }
        Err(e) => Err(e),
    }
}
