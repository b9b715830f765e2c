//! The YES/NO input distributions built from a hard pair, and a
//! best-effort classifier that tries to tell them apart from an IID edge
//! stream.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};
use crate::hard::construct::build_pair;
use crate::hard::subgraph::{automorphisms, pattern_catalog, Pattern, MAX_PATTERN_EDGES};
use crate::prf::trial_seed;
use crate::stats::{wilson_interval, Interval};

/// Random graphs on `n` labelled vertices: `r` gadget copies on the
/// blocks `[i q, (i + 1) q)`, each under a fresh random permutation, a
/// clique on the next `w` vertices, and isolated vertices after that.
#[derive(Clone, Debug)]
pub struct GadgetDistribution {
    pub gadget: Graph,
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub w: usize,
}

impl GadgetDistribution {
    pub fn new(gadget: Graph, n: usize, q: usize, r: usize, w: usize) -> Result<Self> {
        if gadget.n() > q || r == 0 || r * q + w > n {
            return Err(Error::Precondition(format!(
                "layout infeasible: {r} gadgets of {q} vertices plus a {w}-clique on {n} vertices"
            )));
        }
        Ok(GadgetDistribution { gadget, n, q, r, w })
    }

    /// Edge count, identical for every sample.
    pub fn m(&self) -> usize {
        self.r * self.gadget.m() + self.w * self.w.saturating_sub(1) / 2
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Graph {
        let mut edges = Vec::with_capacity(self.m());
        let mut perm: Vec<usize> = (0..self.q).collect();
        for i in 0..self.r {
            perm.shuffle(rng);
            let base = i * self.q;
            edges.extend(self.gadget.edges().map(|(u, v)| (base + perm[u], base + perm[v])));
        }
        let start = self.r * self.q;
        for a in 0..self.w {
            for b in a + 1..self.w {
                edges.push((start + a, start + b));
            }
        }
        Graph::new(self.n, &edges).expect("gadget layout is simple")
    }
}

/// YES uses copies of `G^(k)`, NO copies of `H^(k)`, both from
/// `build_pair(c, k)`, with `r = floor(n / (2q))` copies where `q` is the
/// gadget size.
pub fn build_distributions(n: usize, c: usize, k: u32, w: usize) -> Result<(GadgetDistribution, GadgetDistribution)> {
    let pair = build_pair(c, k)?;
    let q = pair.g.n().max(pair.h.n());
    let r = n / (2 * q);
    Ok((
        GadgetDistribution::new(pair.g, n, q, r, w)?,
        GadgetDistribution::new(pair.h, n, q, r, w)?,
    ))
}

/// Expected number of observed components of each shape, under a Poisson
/// approximation in which each edge is seen independently with probability
/// `p = 1 - (1 - 1/m)^L`.
#[derive(Clone, Debug)]
pub struct ComponentModel {
    pub p: f64,
    pub expected: HashMap<Pattern, f64>,
}

impl ComponentModel {
    pub fn new(dist: &GadgetDistribution, stream_len: u64, max_edges: usize) -> Result<Self> {
        let m = dist.m() as f64;
        let p = if m == 0.0 { 0.0 } else { 1.0 - (1.0 - 1.0 / m).powf(stream_len as f64) };
        let mut expected: HashMap<Pattern, f64> = HashMap::new();
        for (edges, boundary) in connected_edge_subsets(&dist.gadget, max_edges) {
            let pattern = Pattern::from_edges(&edges.iter().map(|&e| dist.gadget.endpoints(e)).collect::<Vec<_>>())?;
            let weight = dist.r as f64 * p.powi(edges.len() as i32) * (1.0 - p).powi(boundary as i32);
            *expected.entry(pattern).or_default() += weight;
        }
        if dist.w >= 2 {
            let w = dist.w as f64;
            for pattern in pattern_catalog(max_edges).into_iter().filter(Pattern::is_connected) {
                let v = pattern.n();
                if v > dist.w {
                    continue;
                }
                let e = pattern.edge_count() as f64;
                let vf = v as f64;
                let ln_copies = (0..v).map(|i| (w - i as f64).ln()).sum::<f64>() - (automorphisms(&pattern) as f64).ln();
                let absent = vf * (vf - 1.0) / 2.0 - e + vf * (w - vf);
                let ln_prob = e * p.ln() + absent * (1.0 - p).ln();
                let term = (ln_copies + ln_prob).exp();
                if term > 0.0 {
                    *expected.entry(pattern).or_default() += term;
                }
            }
        }
        Ok(ComponentModel { p, expected })
    }
}

/// Every connected edge subset of `g` with at most `max_edges` edges,
/// paired with the number of edges outside it that touch it.
fn connected_edge_subsets(g: &Graph, max_edges: usize) -> Vec<(Vec<EdgeId>, usize)> {
    let adjacent = |e: EdgeId| -> Vec<EdgeId> {
        let (u, v) = g.endpoints(e);
        g.incident(u).chain(g.incident(v)).map(|(_, f)| f).filter(|&f| f != e).collect()
    };
    let mut seen: HashSet<Vec<EdgeId>> = HashSet::new();
    let mut layer: Vec<Vec<EdgeId>> = (0..g.m()).map(|e| vec![e]).collect();
    let mut out = Vec::new();
    for size in 1..=max_edges {
        let mut next = Vec::new();
        for set in layer {
            if !seen.insert(set.clone()) {
                continue;
            }
            let members: BTreeSet<EdgeId> = set.iter().copied().collect();
            let frontier: BTreeSet<EdgeId> = set.iter().flat_map(|&e| adjacent(e)).filter(|f| !members.contains(f)).collect();
            if size < max_edges {
                for &f in &frontier {
                    let mut grown = set.clone();
                    grown.push(f);
                    grown.sort_unstable();
                    next.push(grown);
                }
            }
            out.push((set, frontier.len()));
        }
        layer = next;
    }
    out
}

/// Decides YES or NO from the set of distinct edges seen in the stream by
/// comparing the Poisson likelihoods of the observed component shapes.
/// Components with more than `max_edges` edges are ignored.
#[derive(Clone, Debug)]
pub struct ComponentClassifier {
    pub yes: ComponentModel,
    pub no: ComponentModel,
    pub max_edges: usize,
}

impl ComponentClassifier {
    pub fn new(yes: &GadgetDistribution, no: &GadgetDistribution, stream_len: u64) -> Result<Self> {
        let max_edges = MAX_PATTERN_EDGES.min(yes.gadget.m().max(no.gadget.m()));
        Ok(ComponentClassifier {
            yes: ComponentModel::new(yes, stream_len, max_edges)?,
            no: ComponentModel::new(no, stream_len, max_edges)?,
            max_edges,
        })
    }

    /// Log-likelihood ratio of YES over NO; infinite when a shape is
    /// impossible under one side.
    pub fn log_likelihood_ratio(&self, g: &Graph, seen: &[EdgeId]) -> f64 {
        let mut counts: HashMap<Pattern, u64> = HashMap::new();
        for comp in components(g, seen) {
            if comp.len() <= self.max_edges {
                let edges: Vec<_> = comp.iter().map(|&e| g.endpoints(e)).collect();
                if let Ok(p) = Pattern::from_edges(&edges) {
                    *counts.entry(p).or_default() += 1;
                }
            }
        }
        let mut llr = 0.0;
        let shapes: BTreeSet<&Pattern> = self.yes.expected.keys().chain(self.no.expected.keys()).collect();
        for shape in shapes {
            let my = self.yes.expected.get(shape).copied().unwrap_or(0.0);
            let mn = self.no.expected.get(shape).copied().unwrap_or(0.0);
            llr -= my - mn;
            let n = counts.get(shape).copied().unwrap_or(0);
            if n > 0 && (my > 0.0 || mn > 0.0) {
                llr += n as f64 * (my.ln() - mn.ln());
            }
        }
        llr
    }
}

/// Edge sets of the connected components spanned by `seen`.
fn components(g: &Graph, seen: &[EdgeId]) -> Vec<Vec<EdgeId>> {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    fn find(parent: &mut HashMap<usize, usize>, x: usize) -> usize {
        let p = *parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = find(parent, p);
        parent.insert(x, root);
        root
    }
    for &e in seen {
        let (u, v) = g.endpoints(e);
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent.insert(a.max(b), a.min(b));
        }
    }
    let mut groups: HashMap<usize, Vec<EdgeId>> = HashMap::new();
    for &e in seen {
        let root = find(&mut parent, g.endpoints(e).0);
        groups.entry(root).or_default().push(e);
    }
    let mut out: Vec<Vec<EdgeId>> = groups.into_values().collect();
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinguishReport {
    pub stream_len: u64,
    pub trials: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub ci: Interval,
    /// Standard deviation of the accuracy of a fair coin over `trials`.
    pub coin_sigma: f64,
}

/// Fair-coin choice of YES or NO per trial, a sample graph, `stream_len`
/// IID edges, and the classifier's guess. Trials use independent seeds
/// derived from `seed` and run in parallel.
pub fn distinguishability_experiment(
    yes: &GadgetDistribution,
    no: &GadgetDistribution,
    stream_len: u64,
    trials: u64,
    seed: u64,
) -> Result<DistinguishReport> {
    if trials < 200 {
        return Err(Error::Precondition(format!("at least 200 trials are needed, got {trials}")));
    }
    if yes.m() != no.m() || yes.n != no.n {
        return Err(Error::Precondition("YES and NO graphs must have equal sizes".into()));
    }
    let classifier = ComponentClassifier::new(yes, no, stream_len)?;
    let correct: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i));
            let truth = rng.random_bool(0.5);
            let g = if truth { yes.sample(&mut rng) } else { no.sample(&mut rng) };
            let mut seen: Vec<EdgeId> = (0..stream_len).map(|_| rng.random_range(0..g.m())).collect();
            seen.sort_unstable();
            seen.dedup();
            let llr = classifier.log_likelihood_ratio(&g, &seen);
            let guess = if llr > 0.0 {
                true
            } else if llr < 0.0 {
                false
            } else {
                rng.random_bool(0.5)
            };
            u64::from(guess == truth)
        })
        .sum();
    Ok(DistinguishReport {
        stream_len,
        trials,
        correct,
        accuracy: correct as f64 / trials as f64,
        ci: wilson_interval(correct, trials),
        coin_sigma: 0.5 / (trials as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::exact_mm;

    #[test]
    fn single_gadget_layout() {
        let (yes, no) = build_distributions(18, 2, 1, 0).unwrap();
        assert_eq!((yes.r, yes.q), (1, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = yes.sample(&mut rng);
        assert_eq!((g.n(), g.m()), (18, 6));
        assert_eq!(exact_mm(&g).unwrap(), 4);
        assert_eq!(exact_mm(&no.sample(&mut rng)).unwrap(), 3);
    }

    #[test]
    fn infeasible_layout() {
        assert!(build_distributions(10, 2, 1, 0).is_err());
        assert!(build_distributions(40, 2, 1, 30).is_err());
    }

    #[test]
    fn connected_subsets_of_triangle() {
        let subsets = connected_edge_subsets(&crate::graph::families::complete(3), 3);
        assert_eq!(subsets.len(), 7);
        assert!(subsets.iter().filter(|(s, _)| s.len() == 1).all(|(_, b)| *b == 2));
        assert!(subsets.iter().filter(|(s, _)| s.len() == 3).all(|(_, b)| *b == 0));
    }

    #[test]
    fn empty_stream_is_uninformative() {
        let (yes, no) = build_distributions(90, 2, 1, 4).unwrap();
        let cls = ComponentClassifier::new(&yes, &no, 0).unwrap();
        let g = yes.sample(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(cls.log_likelihood_ratio(&g, &[]), 0.0);
    }
}
