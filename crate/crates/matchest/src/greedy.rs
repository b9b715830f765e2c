//! Randomized greedy matching as a local oracle: an edge is in the greedy
//! matching iff no adjacent edge of lower rank is. This module simulates
//! that recursive query on explicit graphs and on the infinite trees `H^d`
//! and `H^(d,eps)`, measuring the size and depth of the exploration tree.

use std::collections::HashMap;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};
use crate::prf::trial_seed;
use crate::stats::{ls_slope, summarize, Summary};

/// Size and depth of one exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExplorationStats {
    /// Number of recursive evaluations, including the queried edge. With
    /// memoisation this is the number of distinct edges explored.
    pub tree_size: u64,
    /// Largest level reached (tree sources) or recursion depth (graphs).
    pub depth: u32,
    /// The search asked for edges below the truncation depth.
    pub truncated: bool,
}

/// Ranked edges that the greedy query can walk.
pub trait RankedEdges {
    type Id: Copy + Eq + Hash;

    fn rank(&mut self, e: Self::Id) -> f64;

    /// Level of `e` in a rooted tree, if the source has levels.
    fn level(&self, e: Self::Id) -> Option<u32>;

    /// Neighbours of `e` ranked below it, in increasing rank order. With
    /// `prune`, only children are returned (trees only).
    fn lower_neighbors(&mut self, e: Self::Id, prune: bool) -> Result<Vec<Self::Id>>;

    /// Whether the source hit its truncation depth.
    fn truncated(&self) -> bool {
        false
    }
}

/// Whether `e` is in the greedy matching for the source's ranking: it is
/// iff every lower-ranked neighbour is not. Neighbours are examined in rank
/// order and the search stops at the first one that is matched.
pub fn yyi_matching<S: RankedEdges>(src: &mut S, e: S::Id, memo: bool, prune: bool) -> Result<(bool, ExplorationStats)> {
    let mut search = Search { memo, prune, results: HashMap::new(), calls: 0, depth: 0 };
    let answer = search.visit(src, e, 0)?;
    Ok((
        answer,
        ExplorationStats { tree_size: search.calls, depth: search.depth, truncated: src.truncated() },
    ))
}

struct Search<Id> {
    memo: bool,
    prune: bool,
    results: HashMap<Id, bool>,
    calls: u64,
    depth: u32,
}

impl<Id: Copy + Eq + Hash> Search<Id> {
    fn visit<S: RankedEdges<Id = Id>>(&mut self, src: &mut S, e: Id, depth: u32) -> Result<bool> {
        if self.memo {
            if let Some(&known) = self.results.get(&e) {
                return Ok(known);
            }
        }
        self.calls += 1;
        self.depth = self.depth.max(src.level(e).unwrap_or(depth));
        let mut matched = true;
        for f in src.lower_neighbors(e, self.prune)? {
            if self.visit(src, f, depth + 1)? {
                matched = false;
                break;
            }
        }
        if self.memo {
            self.results.insert(e, matched);
        }
        Ok(matched)
    }
}

/// An explicit graph with one rank per edge.
pub struct RankedGraph<'g> {
    pub graph: &'g Graph,
    pub ranks: Vec<f64>,
}

impl<'g> RankedGraph<'g> {
    pub fn new(graph: &'g Graph, ranks: Vec<f64>) -> Result<Self> {
        if ranks.len() != graph.m() {
            return Err(Error::Precondition(format!("{} ranks for {} edges", ranks.len(), graph.m())));
        }
        Ok(RankedGraph { graph, ranks })
    }

    /// Edge ids sorted by rank, ties by id.
    pub fn order(&self) -> Vec<EdgeId> {
        let mut order: Vec<EdgeId> = (0..self.graph.m()).collect();
        order.sort_by(|&a, &b| self.ranks[a].total_cmp(&self.ranks[b]).then(a.cmp(&b)));
        order
    }
}

impl RankedEdges for RankedGraph<'_> {
    type Id = EdgeId;

    fn rank(&mut self, e: EdgeId) -> f64 {
        self.ranks[e]
    }

    fn level(&self, _: EdgeId) -> Option<u32> {
        None
    }

    fn lower_neighbors(&mut self, e: EdgeId, prune: bool) -> Result<Vec<EdgeId>> {
        if prune {
            return Err(Error::Precondition("pruning needs a rooted tree".into()));
        }
        let (u, v) = self.graph.endpoints(e);
        let key = |f: EdgeId| (self.ranks[f], f);
        let mut out: Vec<EdgeId> = self
            .graph
            .incident(u)
            .chain(self.graph.incident(v))
            .map(|(_, f)| f)
            .filter(|&f| f != e && key(f).0.total_cmp(&key(e).0).then(f.cmp(&e)).is_lt())
            .collect();
        out.sort_by(|&a, &b| key(a).0.total_cmp(&key(b).0).then(a.cmp(&b)));
        out.dedup();
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    /// `H^d`: a root edge whose far endpoint has `d` further edges, and
    /// every other vertex of degree `d + 1`.
    Hd,
    /// `H^(d,eps)`: a root edge whose far endpoint joins `eps d` copies of
    /// `H^d` by their root edges.
    Hde,
}

const NO_CHILDREN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    level: u32,
    rank: f64,
    first_child: u32,
    child_count: u32,
}

/// A lazily expanded `H^d` or `H^(d,eps)`, cut off below level `lmax`.
/// Edges are identified by their position in an arena that is filled the
/// first time a parent's children are needed, which fixes each edge's rank
/// exactly once. Rank ties (probability zero) are broken by arena order.
pub struct LazyTree {
    pub kind: TreeKind,
    pub d: u32,
    pub eps: f64,
    pub lmax: u32,
    root_children: u32,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    truncated: bool,
}

/// `eps d` rounded to the nearest integer, at least one.
pub fn root_branching(d: u32, eps: f64) -> u32 {
    ((eps * d as f64).round() as u32).max(1)
}

/// Default cut-off depth.
pub const DEFAULT_LMAX: u32 = 64;

/// The cut-off `ceil(7 log2(3d)) + 1` used for the truncated hard instance.
pub fn analysis_truncation(d: u32) -> u32 {
    (7.0 * (3.0 * d as f64).log2()).ceil() as u32 + 1
}

impl LazyTree {
    pub fn new(kind: TreeKind, d: u32, eps: f64, lmax: u32, seed: u64) -> Result<Self> {
        if d < 1 {
            return Err(Error::Precondition("d must be at least 1".into()));
        }
        if kind == TreeKind::Hde && !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Precondition(format!("eps must lie in (0, 1], got {eps}")));
        }
        let root_children = match kind {
            TreeKind::Hd => d,
            TreeKind::Hde => root_branching(d, eps),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let root = Node { parent: NO_CHILDREN, level: 0, rank: rng.random(), first_child: NO_CHILDREN, child_count: 0 };
        Ok(LazyTree { kind, d, eps, lmax, root_children, nodes: vec![root], rng, truncated: false })
    }

    /// Fixes the root's rank, for conditioning on `r(e0) = lambda`.
    pub fn set_root_rank(&mut self, lambda: f64) {
        self.nodes[0].rank = lambda;
    }

    pub fn root(&self) -> u32 {
        0
    }

    /// Number of edges whose rank has been drawn.
    pub fn materialised(&self) -> usize {
        self.nodes.len()
    }

    fn children(&mut self, e: u32) -> std::ops::Range<u32> {
        let node = self.nodes[e as usize];
        if node.first_child != NO_CHILDREN {
            return node.first_child..node.first_child + node.child_count;
        }
        if node.level >= self.lmax {
            self.truncated = true;
            return 0..0;
        }
        let count = if e == 0 { self.root_children } else { self.d };
        let first = self.nodes.len() as u32;
        for _ in 0..count {
            let rank = self.rng.random();
            self.nodes.push(Node { parent: e, level: node.level + 1, rank, first_child: NO_CHILDREN, child_count: 0 });
        }
        let slot = &mut self.nodes[e as usize];
        slot.first_child = first;
        slot.child_count = count;
        first..first + count
    }
}

impl RankedEdges for LazyTree {
    type Id = u32;

    fn rank(&mut self, e: u32) -> f64 {
        self.nodes[e as usize].rank
    }

    fn level(&self, e: u32) -> Option<u32> {
        Some(self.nodes[e as usize].level)
    }

    fn lower_neighbors(&mut self, e: u32, prune: bool) -> Result<Vec<u32>> {
        let r = self.nodes[e as usize].rank;
        let below = |nodes: &[Node], f: u32| nodes[f as usize].rank.total_cmp(&r).then(f.cmp(&e)).is_lt();
        let mut out: Vec<u32> = Vec::new();
        for f in self.children(e) {
            if below(&self.nodes, f) {
                out.push(f);
            }
        }
        if !prune {
            let parent = self.nodes[e as usize].parent;
            if parent != NO_CHILDREN {
                if below(&self.nodes, parent) {
                    out.push(parent);
                }
                for f in self.children(parent) {
                    if f != e && below(&self.nodes, f) {
                        out.push(f);
                    }
                }
            }
        }
        out.sort_by(|&a, &b| self.nodes[a as usize].rank.total_cmp(&self.nodes[b as usize].rank).then(a.cmp(&b)));
        Ok(out)
    }

    fn truncated(&self) -> bool {
        self.truncated
    }
}

/// `x(lambda) = 1 + (d - 1) lambda`.
pub fn closed_form_x(lambda: f64, d: f64) -> f64 {
    1.0 + (d - 1.0) * lambda
}

/// Expected exploration size from the root of `H^d` given its rank:
/// `x^(d/(d-1))`.
pub fn closed_form_t(lambda: f64, d: f64) -> f64 {
    closed_form_x(lambda, d).powf(d / (d - 1.0))
}

/// Probability that the root of `H^d` is matched given its rank:
/// `x^(d/(1-d))`.
pub fn closed_form_p(lambda: f64, d: f64) -> f64 {
    closed_form_x(lambda, d).powf(d / (1.0 - d))
}

/// Lower bound `eps x^(2 - eps) / 2` on the expected exploration size from
/// the root of `H^(d,eps)` given its rank.
pub fn closed_form_troot_hde(lambda: f64, d: f64, eps: f64) -> f64 {
    eps * closed_form_x(lambda, d).powf(2.0 - eps) / 2.0
}

/// `(1/8) eps (d/2)^(2 - eps)`, the lower bound on the mean root
/// exploration size of the truncated `H^(d,eps)`.
pub fn root_mean_lower_bound(d: f64, eps: f64) -> f64 {
    eps / 8.0 * (d / 2.0).powf(2.0 - eps)
}

/// `2^(1 - l) d^2`, the bound on `P[D >= l]` in `H^d`.
pub fn depth_tail_bound(d: f64, l: u32) -> f64 {
    2f64.powi(1 - l as i32) * d * d
}

/// `10 d^5`, the bound on `E[T^2]` in `H^d`.
pub fn second_moment_bound_hd(d: f64) -> f64 {
    10.0 * d.powi(5)
}

/// `11 eps d^6`, the bound on `E[T^2]` in `H^(d,eps)`.
pub fn second_moment_bound_hde(d: f64, eps: f64) -> f64 {
    11.0 * eps * d.powi(6)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSpec {
    pub kind: TreeKind,
    pub d: u32,
    pub eps: f64,
    pub lmax: u32,
    pub prune: bool,
}

impl RootSpec {
    pub fn hd(d: u32) -> Self {
        RootSpec { kind: TreeKind::Hd, d, eps: 1.0, lmax: DEFAULT_LMAX, prune: true }
    }

    pub fn hde(d: u32, eps: f64) -> Self {
        RootSpec { kind: TreeKind::Hde, d, eps, lmax: DEFAULT_LMAX, prune: true }
    }
}

/// One root query per trial on a fresh tree; trial `i` uses the seed
/// `trial_seed(seed, i)`. Results are in trial order.
pub fn simulate_root(spec: &RootSpec, trials: u64, seed: u64) -> Result<Vec<ExplorationStats>> {
    if trials < 100 {
        return Err(Error::Precondition(format!("at least 100 trials are needed, got {trials}")));
    }
    run_root_trials(spec, trials, seed)
}

fn run_root_trials(spec: &RootSpec, trials: u64, seed: u64) -> Result<Vec<ExplorationStats>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut tree = LazyTree::new(spec.kind, spec.d, spec.eps, spec.lmax, trial_seed(seed, i))?;
            let root = tree.root();
            Ok(yyi_matching(&mut tree, root, true, spec.prune)?.1)
        })
        .collect()
}

pub fn tree_size_summary(sample: &[ExplorationStats]) -> Summary {
    summarize(&sample.iter().map(|s| s.tree_size as f64).collect::<Vec<_>>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub level: u32,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub sigma: f64,
    pub bound: f64,
}

/// Empirical `P[D >= l]` from the root of `H^d`.
pub fn depth_tail(d: u32, l: u32, trials: u64, seed: u64) -> Result<TailEstimate> {
    if trials < 10_000 {
        return Err(Error::Precondition(format!("at least 10^4 trials are needed, got {trials}")));
    }
    let sample = run_root_trials(&RootSpec::hd(d), trials, seed)?;
    let hits = sample.iter().filter(|s| s.depth >= l).count() as u64;
    let p_hat = hits as f64 / trials as f64;
    Ok(TailEstimate {
        level: l,
        trials,
        hits,
        p_hat,
        sigma: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        bound: depth_tail_bound(d as f64, l).min(1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub trials: u64,
    pub mean_square: f64,
    pub std_err: f64,
    pub bound: f64,
}

/// Empirical `E[T^2]` from the root of `H^d` (`eps = None`) or
/// `H^(d,eps)`.
pub fn second_moment(d: u32, eps: Option<f64>, trials: u64, seed: u64) -> Result<MomentEstimate> {
    if trials < 10_000 {
        return Err(Error::Precondition(format!("at least 10^4 trials are needed, got {trials}")));
    }
    if d < 5 {
        return Err(Error::Precondition(format!("the second-moment bounds need d >= 5, got {d}")));
    }
    let (spec, bound) = match eps {
        None => (RootSpec::hd(d), second_moment_bound_hd(d as f64)),
        Some(e) => (RootSpec::hde(d, e), second_moment_bound_hde(d as f64, e)),
    };
    let sample = run_root_trials(&spec, trials, seed)?;
    let squares: Vec<f64> = sample.iter().map(|s| (s.tree_size as f64).powi(2)).collect();
    let s = summarize(&squares);
    Ok(MomentEstimate { trials, mean_square: s.mean, std_err: s.std_err, bound })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub ds: Vec<u32>,
    pub means: Vec<f64>,
    /// Least-squares slope of `ln(mean T)` against `ln d`.
    pub exponent: f64,
}

/// Mean root exploration size of `H^(d,eps)` for each `d`, and the fitted
/// growth exponent.
pub fn scaling_exponent(ds: &[u32], eps: f64, trials: u64, seed: u64) -> Result<ScalingReport> {
    let mut means = Vec::with_capacity(ds.len());
    for (i, &d) in ds.iter().enumerate() {
        let sample = simulate_root(&RootSpec::hde(d, eps), trials, trial_seed(seed, i as u64))?;
        means.push(tree_size_summary(&sample).mean);
    }
    let xs: Vec<f64> = ds.iter().map(|&d| (d as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    Ok(ScalingReport { ds: ds.to_vec(), exponent: ls_slope(&xs, &ys), means })
}
