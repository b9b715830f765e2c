//! Exact maximum matching: Edmonds' blossom algorithm for general graphs and
//! an independent bitmask dynamic program for graphs with at most 20 vertices.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};

/// Largest edge count accepted by [`exact_mm`].
pub const EXACT_EDGE_LIMIT: usize = 100_000;

/// Largest vertex count accepted by [`brute_force_mm`].
pub const BRUTE_FORCE_VERTEX_LIMIT: usize = 20;

const NONE: usize = usize::MAX;

/// The cardinality of a maximum matching.
pub fn exact_mm(g: &Graph) -> Result<usize> {
    Ok(maximum_matching(g)?.len())
}

/// A maximum matching, as a list of edge ids.
pub fn maximum_matching(g: &Graph) -> Result<Vec<EdgeId>> {
    if g.m() > EXACT_EDGE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{} edges exceeds the exact solver limit of {EXACT_EDGE_LIMIT}",
            g.m()
        )));
    }
    let mate = Blossom::new(g).solve();
    let mut out: Vec<EdgeId> = (0..g.n())
        .filter(|&v| mate[v] != NONE && v < mate[v])
        .map(|v| g.find_edge(v, mate[v]).expect("mates are adjacent"))
        .collect();
    out.sort_unstable();
    Ok(out)
}

struct Blossom<'a> {
    g: &'a Graph,
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    queue: VecDeque<usize>,
}

impl<'a> Blossom<'a> {
    fn new(g: &'a Graph) -> Self {
        let n = g.n();
        Blossom {
            g,
            mate: vec![NONE; n],
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            queue: VecDeque::new(),
        }
    }

    fn solve(mut self) -> Vec<usize> {
        // A greedy start leaves far fewer augmenting searches.
        for (u, v) in self.g.edges() {
            if self.mate[u] == NONE && self.mate[v] == NONE {
                self.mate[u] = v;
                self.mate[v] = u;
            }
        }
        for root in 0..self.g.n() {
            if self.mate[root] != NONE || self.g.degree(root) == 0 {
                continue;
            }
            let end = self.find_augmenting_path(root);
            let mut v = end;
            while v != NONE {
                let pv = self.parent[v];
                let next = self.mate[pv];
                self.mate[v] = pv;
                self.mate[pv] = v;
                v = next;
            }
        }
        self.mate
    }

    fn lowest_common_base(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.g.n()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn find_augmenting_path(&mut self, root: usize) -> usize {
        let n = self.g.n();
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for k in 0..self.g.degree(v) {
                let (to, _) = self.g.kth_incident(v, k).expect("k < degree");
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lowest_common_base(v, to);
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return to;
                    }
                    let next = self.mate[to];
                    self.used[next] = true;
                    self.queue.push_back(next);
                }
            }
        }
        NONE
    }
}

/// Maximum matching size by dynamic programming over vertex subsets.
/// Independent of the blossom code; used to cross-check it.
pub fn brute_force_mm(g: &Graph) -> Result<usize> {
    let n = g.n();
    if n > BRUTE_FORCE_VERTEX_LIMIT {
        return Err(Error::TooLarge(format!(
            "{n} vertices exceeds the brute-force limit of {BRUTE_FORCE_VERTEX_LIMIT}"
        )));
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).fold(0u32, |acc, w| acc | (1 << w)))
        .collect();
    // best[mask] = maximum matching inside the vertex subset `mask`, filled
    // in increasing mask order: the lowest vertex is either unmatched or
    // matched to some neighbour inside the mask.
    let full = 1usize << n;
    let mut best = vec![0u8; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << low);
        let mut value = best[rest];
        let mut candidates = nbr[low] as usize & rest;
        while candidates != 0 {
            let w = candidates.trailing_zeros() as usize;
            candidates &= candidates - 1;
            value = value.max(1 + best[rest & !(1 << w)]);
        }
        best[mask] = value;
    }
    Ok(best[full - 1] as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{families, is_matching};

    #[test]
    fn small_examples() {
        assert_eq!(exact_mm(&families::complete(3)).unwrap(), 1);
        assert_eq!(exact_mm(&families::disjoint_edges(5)).unwrap(), 5);
        assert_eq!(exact_mm(&Graph::empty(4)).unwrap(), 0);
        assert_eq!(exact_mm(&families::cycle(7)).unwrap(), 3);
        assert_eq!(exact_mm(&families::complete(8)).unwrap(), 4);
        assert_eq!(exact_mm(&families::star(6)).unwrap(), 1);
    }

    #[test]
    fn base_pair_c2_clique_side() {
        // Triangle plus three isolated edges.
        let g = families::complete(3).disjoint_union(&families::disjoint_edges(3));
        assert_eq!(brute_force_mm(&g).unwrap(), 4);
        assert_eq!(exact_mm(&g).unwrap(), 4);
    }

    #[test]
    fn petersen_has_perfect_matching() {
        let outer: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let spokes: Vec<_> = (0..5).map(|i| (i, i + 5)).collect();
        let inner: Vec<_> = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5)).collect();
        let edges: Vec<_> = outer.into_iter().chain(spokes).chain(inner).collect();
        let g = Graph::new(10, &edges).unwrap();
        assert_eq!(exact_mm(&g).unwrap(), 5);
    }

    #[test]
    fn returned_matching_is_valid() {
        let g = families::complete(9);
        let m = maximum_matching(&g).unwrap();
        assert!(is_matching(&g, &m));
        assert_eq!(m.len(), 4);
    }

    #[test]
    fn brute_force_rejects_large() {
        assert!(brute_force_mm(&Graph::empty(21)).is_err());
    }
}
