//! Exact subgraph counts `#(K : G)`, the number of edge subsets of `G`
//! isomorphic to a small pattern `K`, and the pattern catalogue used to
//! compare two graphs on every pattern with at most `k` edges.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Largest pattern accepted by [`subgraph_count`].
pub const MAX_PATTERN_EDGES: usize = 5;

/// Largest component canonicalised by permutation search.
const MAX_COMPONENT_VERTICES: usize = 9;

/// A small graph without isolated vertices, stored in canonical form so
/// that two patterns are equal exactly when they are isomorphic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    n: usize,
    edges: Vec<(u8, u8)>,
}

impl Pattern {
    /// Canonical pattern spanned by an edge list; isolated vertices are
    /// dropped and vertex names are arbitrary. Each connected component may
    /// have at most 9 vertices.
    pub fn from_edges(edges: &[(usize, usize)]) -> Result<Pattern> {
        let mut names: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        names.sort_unstable();
        names.dedup();
        let idx = |x: usize| names.binary_search(&x).expect("endpoint listed");
        let mut local: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let (x, y) = (idx(a), idx(b));
            local.insert((x.min(y), x.max(y)));
        }
        let n = names.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &local {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut comp = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut stack = vec![s];
            comp[s] = id;
            let mut members = Vec::new();
            while let Some(x) = stack.pop() {
                members.push(x);
                for &y in &adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        stack.push(y);
                    }
                }
            }
            comps.push(members);
        }
        let mut codes = comps
            .iter()
            .map(|members| canonical_component(members, &adj))
            .collect::<Result<Vec<_>>>()?;
        codes.sort();
        let mut out = Vec::new();
        let mut offset = 0u8;
        for (nv, bits) in codes {
            let mut bit = 0;
            for i in 0..nv {
                for j in i + 1..nv {
                    if bits >> bit & 1 == 1 {
                        out.push((offset + i, offset + j));
                    }
                    bit += 1;
                }
            }
            offset += nv;
        }
        Ok(Pattern { n: offset as usize, edges: out })
    }

    pub fn from_graph(g: &Graph) -> Result<Pattern> {
        Pattern::from_edges(&g.edges().collect::<Vec<_>>())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    pub fn to_graph(&self) -> Graph {
        Graph::new(self.n, &self.edges().collect::<Vec<_>>()).expect("patterns are simple")
    }

    /// Vertex sets of the connected components.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let g = self.to_graph();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut members = Vec::new();
            while let Some(x) = stack.pop() {
                members.push(x);
                for y in g.neighbors(x) {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Edge list such as `0-1 1-2`.
    pub fn describe(&self) -> String {
        self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ")
    }
}

/// Canonical `(vertex count, adjacency bits)` of a connected component:
/// the lexicographically largest upper-triangle bit string over vertex
/// orders that sort by degree, descending.
fn canonical_component(members: &[usize], adj: &[Vec<usize>]) -> Result<(u8, u64)> {
    let nv = members.len();
    if nv > MAX_COMPONENT_VERTICES {
        return Err(Error::Precondition(format!(
            "pattern component with {nv} vertices is too large to canonicalise"
        )));
    }
    let mut order: Vec<usize> = members.to_vec();
    order.sort_by_key(|&v| std::cmp::Reverse(adj[v].len()));
    // Blocks of equal degree are permuted independently.
    let mut blocks: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 1..=nv {
        if i == nv || adj[order[i]].len() != adj[order[start]].len() {
            blocks.push(start..i);
            start = i;
        }
    }
    let mut best = 0u64;
    let mut found = false;
    permute_blocks(&mut order, &blocks, 0, &mut |ord| {
        let mut bits = 0u64;
        let mut bit = 0;
        for i in 0..nv {
            for j in i + 1..nv {
                if adj[ord[i]].contains(&ord[j]) {
                    bits |= 1 << bit;
                }
                bit += 1;
            }
        }
        if !found || bits > best {
            best = bits;
            found = true;
        }
    });
    Ok((nv as u8, best))
}

fn permute_blocks(order: &mut Vec<usize>, blocks: &[std::ops::Range<usize>], b: usize, f: &mut impl FnMut(&[usize])) {
    if b == blocks.len() {
        f(order);
        return;
    }
    let r = blocks[b].clone();
    permute_range(order, r.start, r.end, &mut |o: &mut Vec<usize>| permute_blocks(o, blocks, b + 1, f));
}

fn permute_range(order: &mut Vec<usize>, k: usize, end: usize, f: &mut impl FnMut(&mut Vec<usize>)) {
    if k + 1 >= end {
        f(order);
        return;
    }
    for i in k..end {
        order.swap(k, i);
        permute_range(order, k + 1, end, f);
        order.swap(k, i);
    }
}

/// All patterns with exactly `j` edges, built by adding one edge at a time
/// to the `(j-1)`-edge patterns and deduplicating canonical forms.
pub fn patterns_with_edges(j: usize) -> Vec<Pattern> {
    let mut layer: BTreeSet<Pattern> = BTreeSet::new();
    if j == 0 {
        return Vec::new();
    }
    layer.insert(Pattern::from_edges(&[(0, 1)]).expect("single edge"));
    for _ in 1..j {
        let mut next = BTreeSet::new();
        for p in &layer {
            let n = p.n;
            let edges: Vec<(usize, usize)> = p.edges().collect();
            let mut extend = |a: usize, b: usize| {
                if a != b && !edges.contains(&(a.min(b), a.max(b))) {
                    let mut e = edges.clone();
                    e.push((a, b));
                    next.insert(Pattern::from_edges(&e).expect("small pattern"));
                }
            };
            for a in 0..n + 1 {
                for b in a + 1..n + 2 {
                    extend(a, b);
                }
            }
        }
        layer = next;
    }
    layer.into_iter().collect()
}

/// All patterns with between 1 and `k` edges, ordered by edge count.
pub fn pattern_catalog(k: usize) -> Vec<Pattern> {
    (1..=k).flat_map(patterns_with_edges).collect()
}

/// Counts injective maps `V(K) -> V(G)` sending edges to edges.
pub struct InjectionCounter<'g> {
    g: &'g Graph,
    memo: HashMap<Pattern, u128>,
}

impl<'g> InjectionCounter<'g> {
    pub fn new(g: &'g Graph) -> Self {
        InjectionCounter { g, memo: HashMap::new() }
    }

    pub fn count(&mut self, k: &Pattern) -> u128 {
        if let Some(&x) = self.memo.get(k) {
            return x;
        }
        let comps = k.components();
        let value = if comps.len() <= 1 {
            connected_injections(self.g, k)
        } else {
            // inj(A + B) = inj(A) inj(B) minus the maps that are injective
            // on A and on B but identify some vertices of A with vertices
            // of B; those are counted by the quotient patterns.
            let a_set = &comps[0];
            let a_edges: Vec<_> = k.edges().filter(|(x, _)| a_set.contains(x)).collect();
            let b_edges: Vec<_> = k.edges().filter(|(x, _)| !a_set.contains(x)).collect();
            let a = Pattern::from_edges(&a_edges).expect("sub-pattern");
            let b = Pattern::from_edges(&b_edges).expect("sub-pattern");
            let b_vertices: Vec<usize> = (0..k.n).filter(|v| !a_set.contains(v)).collect();
            let product = self.count(&a) * self.count(&b);
            let mut overlap = 0u128;
            let mut merge: Vec<Option<usize>> = vec![None; a_set.len()];
            let mut used = vec![false; b_vertices.len()];
            let mut quotients = Vec::new();
            partial_matchings(0, &mut merge, &mut used, &mut |m| {
                if m.iter().any(Option::is_some) {
                    let edges: Vec<(usize, usize)> = k
                        .edges()
                        .map(|(x, y)| {
                            let rename = |v: usize| match a_set.iter().position(|&w| w == v) {
                                Some(i) => m[i].map_or(v, |j| b_vertices[j]),
                                None => v,
                            };
                            (rename(x), rename(y))
                        })
                        .collect();
                    quotients.push(Pattern::from_edges(&edges).expect("quotient pattern"));
                }
            });
            for q in quotients {
                overlap += self.count(&q);
            }
            product - overlap
        };
        self.memo.insert(k.clone(), value);
        value
    }
}

fn partial_matchings(i: usize, merge: &mut Vec<Option<usize>>, used: &mut Vec<bool>, f: &mut impl FnMut(&[Option<usize>])) {
    if i == merge.len() {
        f(merge);
        return;
    }
    merge[i] = None;
    partial_matchings(i + 1, merge, used, f);
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            merge[i] = Some(j);
            partial_matchings(i + 1, merge, used, f);
            used[j] = false;
        }
    }
    merge[i] = None;
}

/// Injective homomorphisms of a connected pattern, by backtracking along a
/// breadth-first order of the pattern.
fn connected_injections(g: &Graph, k: &Pattern) -> u128 {
    let pg = k.to_graph();
    let n = k.n;
    if n == 0 {
        return 1;
    }
    let mut order = vec![0usize];
    let mut placed = vec![false; n];
    placed[0] = true;
    let mut i = 0;
    while i < order.len() {
        for w in pg.neighbors(order[i]) {
            if !placed[w] {
                placed[w] = true;
                order.push(w);
            }
        }
        i += 1;
    }
    let pos: Vec<usize> = {
        let mut p = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            p[v] = i;
        }
        p
    };
    // For each position, the earlier positions it must be adjacent to.
    let back: Vec<Vec<usize>> = order
        .iter()
        .map(|&v| {
            let mut b: Vec<usize> = pg.neighbors(v).map(|w| pos[w]).filter(|&p| p < pos[v]).collect();
            b.sort_unstable();
            b
        })
        .collect();
    (0..g.n())
        .into_par_iter()
        .map(|root| {
            let mut image = vec![root; n];
            extend_map(g, &back, 1, &mut image)
        })
        .sum()
}

fn extend_map(g: &Graph, back: &[Vec<usize>], i: usize, image: &mut Vec<VertexId>) -> u128 {
    if i == back.len() {
        return 1;
    }
    let anchor = image[back[i][0]];
    let mut total = 0;
    for x in g.neighbors(anchor) {
        if image[..i].contains(&x) {
            continue;
        }
        if back[i][1..].iter().all(|&p| g.find_edge(image[p], x).is_some()) {
            image[i] = x;
            total += extend_map(g, back, i + 1, image);
        }
    }
    total
}

/// Number of automorphisms of a pattern.
pub fn automorphisms(k: &Pattern) -> u128 {
    InjectionCounter::new(&k.to_graph()).count(k)
}

/// `#(K : G)`: edge subsets of `g` isomorphic to `pattern` (at most five
/// edges).
pub fn subgraph_count(g: &Graph, pattern: &Graph) -> Result<u128> {
    if pattern.m() > MAX_PATTERN_EDGES {
        return Err(Error::Precondition(format!(
            "patterns are limited to {MAX_PATTERN_EDGES} edges, got {}",
            pattern.m()
        )));
    }
    let p = Pattern::from_graph(pattern)?;
    Ok(count_pattern(&mut InjectionCounter::new(g), &p))
}

fn count_pattern(counter: &mut InjectionCounter<'_>, p: &Pattern) -> u128 {
    if p.edge_count() == 0 {
        return 1;
    }
    counter.count(p) / automorphisms(p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternRow {
    pub pattern: String,
    pub edges: usize,
    pub connected: bool,
    pub count_g: u128,
    pub count_h: u128,
    pub equal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndistinguishabilityReport {
    pub k: usize,
    pub rows: Vec<PatternRow>,
    pub all_equal: bool,
    /// Index into `rows` of the first pattern whose counts differ.
    pub first_difference: Option<usize>,
}

/// Compares `#(K : G)` and `#(K : H)` for every pattern with at most `k`
/// edges.
pub fn verify_indistinguishable(g: &Graph, h: &Graph, k: usize) -> Result<IndistinguishabilityReport> {
    if k > MAX_PATTERN_EDGES {
        return Err(Error::Precondition(format!("k is limited to {MAX_PATTERN_EDGES}")));
    }
    let catalog = pattern_catalog(k);
    let mut cg = InjectionCounter::new(g);
    let mut ch = InjectionCounter::new(h);
    let rows: Vec<PatternRow> = catalog
        .iter()
        .map(|p| {
            let count_g = count_pattern(&mut cg, p);
            let count_h = count_pattern(&mut ch, p);
            PatternRow {
                pattern: p.describe(),
                edges: p.edge_count(),
                connected: p.is_connected(),
                count_g,
                count_h,
                equal: count_g == count_h,
            }
        })
        .collect();
    let first_difference = rows.iter().position(|r| !r.equal);
    Ok(IndistinguishabilityReport { k, all_equal: first_difference.is_none(), first_difference, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn catalog_sizes() {
        // Graphs with j edges and no isolated vertices.
        let sizes: Vec<usize> = (1..=5).map(|j| patterns_with_edges(j).len()).collect();
        assert_eq!(sizes, vec![1, 2, 5, 11, 26]);
    }

    #[test]
    fn canonical_form_ignores_labels() {
        let a = Pattern::from_edges(&[(0, 1), (1, 2), (5, 6)]).unwrap();
        let b = Pattern::from_edges(&[(10, 11), (3, 7), (7, 9)]).unwrap();
        assert_eq!(a, b);
        let c = Pattern::from_edges(&[(0, 1), (2, 3), (4, 5)]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn small_counts() {
        let k3 = families::complete(3);
        assert_eq!(subgraph_count(&k3, &families::path(2)).unwrap(), 3);
        assert_eq!(subgraph_count(&k3, &families::path(3)).unwrap(), 3);
        assert_eq!(subgraph_count(&families::cycle(4), &k3).unwrap(), 0);
        assert_eq!(subgraph_count(&families::cycle(4), &families::disjoint_edges(2)).unwrap(), 2);
        assert_eq!(subgraph_count(&families::complete(4), &families::cycle(4)).unwrap(), 3);
        assert!(subgraph_count(&k3, &families::path(7)).is_err());
    }

    #[test]
    fn automorphism_counts() {
        let p = |g: &Graph| automorphisms(&Pattern::from_graph(g).unwrap());
        assert_eq!(p(&families::complete(3)), 6);
        assert_eq!(p(&families::star(3)), 6);
        assert_eq!(p(&families::disjoint_edges(2)), 8);
        assert_eq!(p(&families::path(4)), 2);
    }

    #[test]
    fn identical_graphs_agree() {
        let g = families::cycle(6).disjoint_union(&families::star(3));
        let r = verify_indistinguishable(&g, &g, 3).unwrap();
        assert!(r.all_equal);
        assert_eq!(r.rows.len(), 8);
    }
}
