//! Finite groups, Cayley graphs, girth, and a randomized search for
//! generator sets whose Cayley graph has large girth.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// How products are computed.
#[derive(Clone, Debug, PartialEq)]
enum Repr {
    /// Explicit `R x R` table, row-major: `table[a * R + b] = a * b`.
    Table(Vec<u32>),
    /// `Z_a x Z_b`; element `x * b + y`.
    Cyclic2(u32, u32),
    /// Dihedral group of order `2k`; element `s * k + r` is `rot^r refl^s`.
    Dihedral(u32),
    /// Permutations of `0..degree`, indexed by position in `perms`.
    Perm { perms: Vec<Vec<u8>>, index: HashMap<Vec<u8>, u32> },
}

/// A finite group on elements `0..order` with a generator list.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec {
    pub name: String,
    pub order: usize,
    pub identity: u32,
    pub inverse: Vec<u32>,
    pub generators: Vec<u32>,
    repr: Repr,
}

impl GroupSpec {
    /// A group from an explicit multiplication table; validated fully.
    pub fn from_table(name: &str, order: usize, table: Vec<u32>, generators: Vec<u32>) -> Result<Self> {
        if table.len() != order * order || table.iter().any(|&x| x as usize >= order) {
            return Err(Error::Precondition("multiplication table has the wrong shape".into()));
        }
        let identity = (0..order as u32)
            .find(|&e| (0..order).all(|a| table[e as usize * order + a] == a as u32 && table[a * order + e as usize] == a as u32))
            .ok_or_else(|| Error::Precondition("group table has no identity".into()))?;
        let mut inverse = vec![u32::MAX; order];
        for a in 0..order {
            inverse[a] = (0..order as u32)
                .find(|&b| table[a * order + b as usize] == identity)
                .ok_or_else(|| Error::Precondition(format!("element {a} has no inverse")))?;
        }
        let g = GroupSpec {
            name: name.to_string(),
            order,
            identity,
            inverse,
            generators,
            repr: Repr::Table(table),
        };
        g.validate()?;
        Ok(g)
    }

    /// `Z_n` with the given generators.
    pub fn cyclic(n: u32, generators: Vec<u32>) -> Self {
        Self::cyclic_product(n, 1, generators)
    }

    /// `Z_a x Z_b`; element `(x, y)` has index `x * b + y`.
    pub fn cyclic_product(a: u32, b: u32, generators: Vec<u32>) -> Self {
        let order = (a * b) as usize;
        let inverse = (0..a * b)
            .map(|i| {
                let (x, y) = (i / b, i % b);
                ((a - x) % a) * b + (b - y) % b
            })
            .collect();
        let name = if b == 1 { format!("Z{a}") } else { format!("Z{a}xZ{b}") };
        GroupSpec { name, order, identity: 0, inverse, generators, repr: Repr::Cyclic2(a, b) }
    }

    /// Dihedral group of order `2k`.
    pub fn dihedral(k: u32, generators: Vec<u32>) -> Self {
        let mut g = GroupSpec {
            name: format!("D{k}"),
            order: 2 * k as usize,
            identity: 0,
            inverse: Vec::new(),
            generators,
            repr: Repr::Dihedral(k),
        };
        g.inverse = (0..2 * k).map(|x| if x < k { (k - x) % k } else { x }).collect();
        g
    }

    /// The symmetric group on `degree <= 7` points.
    pub fn symmetric(degree: u8, generators: Vec<u32>) -> Result<Self> {
        if degree == 0 || degree > 7 {
            return Err(Error::Precondition("symmetric groups are supported up to degree 7".into()));
        }
        let mut perms = Vec::new();
        let mut current: Vec<u8> = (0..degree).collect();
        permutations(&mut current, 0, &mut perms);
        perms.sort();
        let index: HashMap<Vec<u8>, u32> = perms.iter().enumerate().map(|(i, p)| (p.clone(), i as u32)).collect();
        let inverse = perms
            .iter()
            .map(|p| {
                let mut inv = vec![0u8; p.len()];
                for (i, &x) in p.iter().enumerate() {
                    inv[x as usize] = i as u8;
                }
                index[&inv]
            })
            .collect();
        let identity = index[&(0..degree).collect::<Vec<u8>>()];
        Ok(GroupSpec {
            name: format!("S{degree}"),
            order: perms.len(),
            identity,
            inverse,
            generators,
            repr: Repr::Perm { perms, index },
        })
    }

    /// Index of a permutation in a symmetric group.
    pub fn perm_element(&self, perm: &[u8]) -> Option<u32> {
        match &self.repr {
            Repr::Perm { index, .. } => index.get(perm).copied(),
            _ => None,
        }
    }

    pub fn with_generators(&self, generators: Vec<u32>) -> Self {
        GroupSpec { generators, ..self.clone() }
    }

    /// The product `a * b`. Permutations compose as `(a * b)(i) = b(a(i))`.
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        match &self.repr {
            Repr::Table(t) => t[a as usize * self.order + b as usize],
            Repr::Cyclic2(p, q) => {
                let (ax, ay) = (a / q, a % q);
                let (bx, by) = (b / q, b % q);
                ((ax + bx) % p) * q + (ay + by) % q
            }
            Repr::Dihedral(k) => {
                let (ar, as_) = (a % k, a / k);
                let (br, bs) = (b % k, b / k);
                // rot^ar refl^as rot^br refl^bs = rot^(ar +- br) refl^(as + bs)
                let r = if as_ == 0 { (ar + br) % k } else { (ar + k - br) % k };
                ((as_ + bs) % 2) * k + r
            }
            Repr::Perm { perms, index } => {
                let (pa, pb) = (&perms[a as usize], &perms[b as usize]);
                let prod: Vec<u8> = pa.iter().map(|&x| pb[x as usize]).collect();
                index[&prod]
            }
        }
    }

    /// Checks the group axioms and that the generators generate. Tables of
    /// order at most 256 are checked exhaustively for associativity; larger
    /// groups on 100 000 random triples.
    pub fn validate(&self) -> Result<()> {
        let n = self.order as u32;
        if self.inverse.len() != self.order || self.identity >= n {
            return Err(Error::Precondition("inverse table has the wrong shape".into()));
        }
        for a in 0..n {
            if self.mul(a, self.identity) != a || self.mul(self.identity, a) != a {
                return Err(Error::Precondition(format!("identity fails on element {a}")));
            }
            if self.mul(a, self.inverse[a as usize]) != self.identity {
                return Err(Error::Precondition(format!("inverse fails on element {a}")));
            }
        }
        let assoc = |a: u32, b: u32, c: u32| self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c));
        if self.order <= 256 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !assoc(a, b, c) {
                            return Err(Error::Precondition(format!("associativity fails on ({a}, {b}, {c})")));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..100_000 {
                let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                if !assoc(a, b, c) {
                    return Err(Error::Precondition(format!("associativity fails on ({a}, {b}, {c})")));
                }
            }
        }
        if self.generators.iter().any(|&s| s >= n) {
            return Err(Error::Precondition("generator out of range".into()));
        }
        if !self.generates() {
            return Err(Error::Precondition(format!("generators do not generate {}", self.name)));
        }
        Ok(())
    }

    /// Whether the generators generate the whole group.
    pub fn generates(&self) -> bool {
        let mut seen = vec![false; self.order];
        seen[self.identity as usize] = true;
        let mut queue = VecDeque::from([self.identity]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &s in &self.generators {
                for y in [self.mul(x, s), self.mul(x, self.inverse[s as usize])] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        count += 1;
                        queue.push_back(y);
                    }
                }
            }
        }
        count == self.order
    }
}

fn permutations(current: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
    if k == current.len() {
        out.push(current.clone());
        return;
    }
    for i in k..current.len() {
        current.swap(k, i);
        permutations(current, k + 1, out);
        current.swap(k, i);
    }
}

/// The Cayley graph: `x ~ y` iff `x s = y` or `x s^-1 = y` for a generator
/// `s`. Generators of order 2, and pairs `s, s^-1` both listed, give each
/// edge once.
pub fn cayley_graph(grp: &GroupSpec) -> Result<Graph> {
    grp.validate()?;
    cayley_graph_unchecked(grp)
}

fn cayley_graph_unchecked(grp: &GroupSpec) -> Result<Graph> {
    if grp.generators.contains(&grp.identity) {
        return Err(Error::Precondition("the identity cannot be a generator".into()));
    }
    let mut edges = std::collections::BTreeSet::new();
    for x in 0..grp.order as u32 {
        for &s in &grp.generators {
            let y = grp.mul(x, s);
            edges.insert((x.min(y) as usize, x.max(y) as usize));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Graph::new(grp.order, &edges)
}

/// Girth by breadth-first search from every vertex; `None` for forests.
pub fn girth(g: &Graph) -> Option<usize> {
    (0..g.n()).filter_map(|r| shortest_cycle_through_bfs(g, r, usize::MAX)).min()
}

/// Girth of a vertex-transitive graph (such as a Cayley graph), from a
/// single breadth-first search.
pub fn vertex_transitive_girth(g: &Graph) -> Option<usize> {
    if g.n() == 0 {
        return None;
    }
    shortest_cycle_through_bfs(g, 0, usize::MAX)
}

/// The shortest cycle detected by a breadth-first search from `root`
/// (exact for cycles through `root`; an upper bound on the girth otherwise).
fn shortest_cycle_through_bfs(g: &Graph, root: usize, cap: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut parent_edge = vec![usize::MAX; g.n()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut best = usize::MAX;
    while let Some(u) = queue.pop_front() {
        if 2 * dist[u] + 1 >= best.min(cap) {
            break;
        }
        for (w, e) in g.incident(u) {
            if e == parent_edge[u] {
                continue;
            }
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                parent_edge[w] = e;
                queue.push_back(w);
            } else {
                best = best.min(dist[u] + dist[w] + 1);
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// Girth of the Cayley graph of `grp`.
pub fn cayley_girth(grp: &GroupSpec) -> Result<Option<usize>> {
    Ok(vertex_transitive_girth(&cayley_graph(grp)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CatalogEntry {
    Cyclic(u32),
    CyclicProduct(u32, u32),
    Dihedral(u32),
    Symmetric(u8),
}

/// Groups tried by [`find_high_girth_generators`], smallest first.
pub fn default_catalog() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for n in [5u32, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        out.push(CatalogEntry::Cyclic(n));
    }
    for (a, b) in [(2u32, 2u32), (3, 3), (4, 4), (5, 5), (7, 7)] {
        out.push(CatalogEntry::CyclicProduct(a, b));
    }
    for k in [3u32, 4, 5, 6, 7, 8, 10, 12] {
        out.push(CatalogEntry::Dihedral(k));
    }
    for d in 3u8..=7 {
        out.push(CatalogEntry::Symmetric(d));
    }
    out.sort_by_key(|e| entry_order(*e));
    out
}

fn entry_order(e: CatalogEntry) -> usize {
    match e {
        CatalogEntry::Cyclic(n) => n as usize,
        CatalogEntry::CyclicProduct(a, b) => (a * b) as usize,
        CatalogEntry::Dihedral(k) => 2 * k as usize,
        CatalogEntry::Symmetric(d) => (1..=d as usize).product(),
    }
}

fn instantiate(e: CatalogEntry) -> GroupSpec {
    match e {
        CatalogEntry::Cyclic(n) => GroupSpec::cyclic(n, vec![]),
        CatalogEntry::CyclicProduct(a, b) => GroupSpec::cyclic_product(a, b, vec![]),
        CatalogEntry::Dihedral(k) => GroupSpec::dihedral(k, vec![]),
        CatalogEntry::Symmetric(d) => GroupSpec::symmetric(d, vec![]).expect("degree within range"),
    }
}

/// Randomized search over `catalog` for at least `l` generators whose
/// Cayley graph has girth at least `g`. Each group gets `attempts` random
/// generator sets. Half the attempts use involutions only, which rule out
/// short relations of the form `s s = 1` being counted as cycles and, for
/// odd permutations, every odd-length relation. Returns `None` when no
/// candidate passes.
pub fn find_high_girth_generators(
    l: usize,
    g: usize,
    attempts: usize,
    catalog: &[CatalogEntry],
    seed: u64,
) -> Option<GroupSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &entry in catalog {
        let group = instantiate(entry);
        let n = group.order as u32;
        let elements: Vec<u32> = (0..n).filter(|&x| x != group.identity).collect();
        let involutions: Vec<u32> = elements.iter().copied().filter(|&x| group.inverse[x as usize] == x).collect();
        let odd_involutions: Vec<u32> = match &group.repr {
            Repr::Perm { perms, .. } => involutions.iter().copied().filter(|&x| is_odd(&perms[x as usize])).collect(),
            _ => Vec::new(),
        };
        for attempt in 0..attempts {
            let pool = match attempt % 3 {
                0 if odd_involutions.len() >= l => &odd_involutions,
                1 if involutions.len() >= l => &involutions,
                _ => &elements,
            };
            let Some(gens) = pick_generators(pool, l, &group, &mut rng) else {
                continue;
            };
            let candidate = group.with_generators(gens);
            if !candidate.generates() {
                continue;
            }
            if let Ok(graph) = cayley_graph_unchecked(&candidate) {
                if graph.n() > 0 && shortest_cycle_through_bfs(&graph, 0, g).is_none_or(|c| c >= g) {
                    return Some(candidate);
                }
            }
        }
    }
    None
}

fn pick_generators(pool: &[u32], l: usize, group: &GroupSpec, rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(rng);
    let mut gens: Vec<u32> = Vec::with_capacity(l);
    for x in shuffled {
        if gens.len() == l {
            break;
        }
        // Keep s and s^-1 from both appearing: they label the same edges.
        if gens.iter().all(|&s| s != x && group.inverse[s as usize] != x) {
            gens.push(x);
        }
    }
    (gens.len() == l).then_some(gens)
}

fn is_odd(p: &[u8]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut transpositions = 0;
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut len = 0;
        let mut j = i;
        while !seen[j] {
            seen[j] = true;
            j = p[j] as usize;
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}
