//! Library results checked against small independent implementations.

use std::collections::HashMap;

use matchest::estimator::{etest, EstimatorConfig};
use matchest::graph::{families, greedy_maximal_matching, is_matching};
use matchest::greedy::{yyi_matching, LazyTree, RankedEdges, RankedGraph, TreeKind};
use matchest::hard::kdegree::LevelInterner;
use matchest::hard::{build_pair, k_level_degrees, subgraph_count, verify_indistinguishable};
use matchest::matching::{exact_mm, maximum_matching};
use matchest::stream::EdgeStream;
use matchest::{Error, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    families::gnp(n, p, rng)
}

/// Maximum matching by trying every edge as matched or unmatched.
fn mm_by_search(edges: &[(usize, usize)], used: &mut Vec<bool>) -> usize {
    let Some((&(u, v), rest)) = edges.split_first() else {
        return 0;
    };
    let skip = mm_by_search(rest, used);
    if used[u] || used[v] {
        return skip;
    }
    used[u] = true;
    used[v] = true;
    let take = 1 + mm_by_search(rest, used);
    used[u] = false;
    used[v] = false;
    skip.max(take)
}

#[test]
fn blossom_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..300 {
        let n = 2 + i % 11;
        let g = random_graph(n, rng.random_range(0.1..0.9), &mut rng);
        let edges: Vec<_> = g.edges().collect();
        let expect = mm_by_search(&edges, &mut vec![false; n]);
        assert_eq!(exact_mm(&g).unwrap(), expect, "graph {}", g.to_edge_list());
        let m = maximum_matching(&g).unwrap();
        assert!(is_matching(&g, &m));
        assert_eq!(m.len(), expect);
    }
}

/// Exact distribution of `f` over IID streams: every script the call can
/// read, each with probability `m^-len`.
fn enumerate<T>(g: &Graph, f: &dyn Fn(&mut EdgeStream<'_>) -> matchest::Result<T>) -> Vec<(f64, T)> {
    let mut out = Vec::new();
    let mut stack = vec![Vec::new()];
    while let Some(script) = stack.pop() {
        let mut s = EdgeStream::scripted(g, script.clone()).unwrap();
        match f(&mut s) {
            Ok(x) => out.push(((g.m() as f64).powi(-(script.len() as i32)), x)),
            Err(Error::StreamExhausted(_)) => {
                for e in 0..g.m() {
                    let mut next = script.clone();
                    next.push(e);
                    stack.push(next);
                }
            }
            Err(e) => panic!("{e}"),
        }
    }
    out
}

#[test]
fn triangle_edge_weight_by_enumeration() {
    let g = families::complete(3);
    let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5).with_degree_bound(4);
    let dist = enumerate(&g, &|s| etest(0, s, &cfg).map(|o| o.weight));
    let total: f64 = dist.iter().map(|x| x.0).sum();
    let expect: f64 = dist.iter().map(|(p, w)| p * w).sum();
    assert!((total - 1.0).abs() < 1e-12);
    // Frozen from the enumeration above.
    assert!((expect - 31.0 / 36.0).abs() < 1e-12, "{expect}");

    let trials = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for seed in 0..trials {
        let w = etest(0, &mut EdgeStream::iid(&g, seed), &cfg).unwrap().weight;
        sum += w;
        sq += w * w;
    }
    let mean = sum / trials as f64;
    let sd = ((sq / trials as f64 - mean * mean) / trials as f64).sqrt();
    assert!((mean - expect).abs() <= 4.0 * sd, "Monte Carlo {mean} vs exact {expect}");
}

/// Copies of `pattern` in `g`: edge subsets of the right size whose
/// induced edge graph is isomorphic to the pattern, found by trying every
/// vertex assignment.
fn count_by_subsets(g: &Graph, pattern: &[(usize, usize)], pn: usize) -> u64 {
    let edges: Vec<_> = g.edges().collect();
    let k = pattern.len();
    let mut count = 0;
    let mut idx: Vec<usize> = (0..k).collect();
    if edges.len() < k {
        return 0;
    }
    loop {
        let chosen: Vec<_> = idx.iter().map(|&i| edges[i]).collect();
        if isomorphic(&chosen, pattern, pn) {
            count += 1;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return count;
            }
            i -= 1;
            if idx[i] < edges.len() - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn isomorphic(a: &[(usize, usize)], pattern: &[(usize, usize)], pn: usize) -> bool {
    let mut verts: Vec<usize> = a.iter().flat_map(|&(u, v)| [u, v]).collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != pn {
        return false;
    }
    let norm = |e: (usize, usize)| (e.0.min(e.1), e.0.max(e.1));
    let mut target: Vec<_> = pattern.iter().map(|&e| norm(e)).collect();
    target.sort_unstable();
    let mut perm: Vec<usize> = (0..pn).collect();
    loop {
        let pos: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, perm[i])).collect();
        let mut mapped: Vec<_> = a.iter().map(|&(u, v)| norm((pos[&u], pos[&v]))).collect();
        mapped.sort_unstable();
        if mapped == target {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[test]
fn subgraph_counts_match_subset_enumeration() {
    let patterns: Vec<(Vec<(usize, usize)>, usize)> = vec![
        (vec![(0, 1)], 2),
        (vec![(0, 1), (1, 2)], 3),
        (vec![(0, 1), (2, 3)], 4),
        (vec![(0, 1), (1, 2), (0, 2)], 3),
        (vec![(0, 1), (1, 2), (2, 3)], 4),
        (vec![(0, 1), (0, 2), (0, 3)], 4),
        (vec![(0, 1), (1, 2), (3, 4)], 5),
        (vec![(0, 1), (1, 2), (2, 3), (3, 0)], 4),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let g = random_graph(8, 0.4, &mut rng);
        for (p, pn) in &patterns {
            let pg = Graph::new(*pn, p).unwrap();
            let expect = count_by_subsets(&g, p, *pn) as u128;
            assert_eq!(subgraph_count(&g, &pg).unwrap(), expect, "pattern {p:?}");
        }
    }
}

#[test]
fn unlifted_pairs_agree_on_patterns_with_two_edges() {
    // Counts of patterns with at most two edges depend only on the degree
    // sequence, which the pair shares, so the unlifted graphs cannot differ
    // there. Larger patterns are where they do differ.
    for (c, k) in [(2, 1), (4, 2)] {
        let pair = build_pair(c, k).unwrap();
        let two = verify_indistinguishable(&pair.g, &pair.h, 2).unwrap();
        assert!(two.all_equal, "c = {c}, k = {k}");
        let three = verify_indistinguishable(&pair.g, &pair.h, 3).unwrap();
        assert!(!three.all_equal, "c = {c}, k = {k}");
    }
}

#[test]
fn fingerprints_agree_with_interned_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut graphs: Vec<Graph> = (0..6).map(|_| random_graph(40, 0.08, &mut rng)).collect();
    let pair = build_pair(4, 2).unwrap();
    graphs.push(pair.g.disjoint_union(&pair.h));
    for g in &graphs {
        for k in 1..=3 {
            let fp = k_level_degrees(g, k).unwrap();
            let classes = LevelInterner::new().levels(g, k);
            let top = &classes[k as usize];
            for u in 0..g.n() {
                for v in 0..g.n() {
                    assert_eq!(fp[u] == fp[v], top[u] == top[v], "k = {k}, vertices {u} and {v}");
                }
            }
        }
    }
}

#[test]
fn structure_counts_follow_recurrence() {
    for (c, k) in [(4, 2), (5, 2), (6, 3)] {
        let pair = build_pair(c, k).unwrap();
        let (mut n_h, mut n_l, mut d_h, mut d_l) = (c + 1, c * (c + 1), c, 1);
        for t in &pair.trace {
            assert_eq!((t.n_h, t.n_l, t.d_h, t.d_l), (n_h, n_l, d_h, d_l), "c = {c}, level {}", t.level);
            (n_h, n_l, d_h, d_l) = (c * (d_h - d_l), c * (n_h + n_l), n_l, d_h);
        }
    }
}

#[test]
fn greedy_query_agrees_with_sequential_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let g = random_graph(25, 0.2, &mut rng);
        let ranks: Vec<f64> = (0..g.m()).map(|_| rng.random()).collect();
        let mut src = RankedGraph::new(&g, ranks).unwrap();
        let greedy = greedy_maximal_matching(&g, &src.order()).unwrap();
        for e in 0..g.m() {
            let (a, _) = yyi_matching(&mut src, e, false, false).unwrap();
            let (b, _) = yyi_matching(&mut src, e, true, false).unwrap();
            assert_eq!(a, greedy.contains(&e));
            assert_eq!(a, b);
        }
    }
}

/// Expands every edge of `tree` down to its cut-off in arena order and
/// returns the explicit graph with the same edge ids and ranks.
fn materialise(tree: &mut LazyTree) -> (Graph, Vec<f64>) {
    let mut top = vec![0usize];
    let mut e = 0;
    while e < tree.materialised() {
        let before = tree.materialised();
        tree.lower_neighbors(e as u32, true).unwrap();
        for _ in before..tree.materialised() {
            top.push(e + 1);
        }
        e += 1;
    }
    let edges: Vec<_> = (0..top.len()).map(|i| (top[i], i + 1)).collect();
    let ranks = (0..top.len()).map(|i| tree.rank(i as u32)).collect();
    (Graph::new(top.len() + 1, &edges).unwrap(), ranks)
}

#[test]
fn pruned_and_memoised_tree_queries_are_sound() {
    for seed in 0..60 {
        let (kind, eps) = if seed % 2 == 0 { (TreeKind::Hd, 1.0) } else { (TreeKind::Hde, 0.5) };
        let make = || {
            let mut t = LazyTree::new(kind, 3, eps, 4, seed).unwrap();
            let explicit = materialise(&mut t);
            (t, explicit)
        };
        let (mut pruned, (g, ranks)) = make();
        let (mut full, _) = make();
        let (mut memo, _) = make();
        let mut src = RankedGraph::new(&g, ranks).unwrap();
        let truth = greedy_maximal_matching(&g, &src.order()).unwrap().contains(&0);
        assert_eq!(yyi_matching(&mut src, 0, false, false).unwrap().0, truth);
        assert_eq!(yyi_matching(&mut pruned, 0, false, true).unwrap().0, truth, "seed {seed}");
        assert_eq!(yyi_matching(&mut full, 0, false, false).unwrap().0, truth, "seed {seed}");
        assert_eq!(yyi_matching(&mut memo, 0, true, true).unwrap().0, truth, "seed {seed}");
    }
}
