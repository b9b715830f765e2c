//! k-level degrees: `d_1(v)` is the degree and `d_k(v)` is the multiset of
//! `d_(k-1)(w)` over neighbours `w`. Values are hash-consed so that nested
//! multisets are shared instead of expanded.

use std::collections::HashMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Interned class identifier. Class `0` is the level-0 atom.
pub type ClassId = u32;

/// Exact hash-consing table for k-level degree values. A class at level
/// `j` is the sorted list of its children's class ids at level `j - 1`,
/// so equal ids mean equal multisets. Share one table across graphs to
/// compare their vertices.
#[derive(Clone, Debug, Default)]
pub struct LevelInterner {
    ids: HashMap<(u32, Vec<ClassId>), ClassId>,
    classes: Vec<(u32, Vec<ClassId>)>,
}

impl LevelInterner {
    pub fn new() -> Self {
        let mut t = LevelInterner::default();
        t.intern(0, Vec::new());
        t
    }

    fn intern(&mut self, level: u32, mut children: Vec<ClassId>) -> ClassId {
        children.sort_unstable();
        let key = (level, children);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.classes.len() as ClassId;
        self.classes.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    /// Classes of every vertex at levels `0..=k`; `out[j][v]` is `d_j(v)`.
    pub fn levels(&mut self, g: &Graph, k: u32) -> Vec<Vec<ClassId>> {
        let mut out = vec![vec![0; g.n()]];
        for level in 1..=k {
            let prev = &out[level as usize - 1];
            let next = (0..g.n())
                .map(|v| {
                    let children = g.neighbors(v).map(|w| prev[w]).collect();
                    self.intern(level, children)
                })
                .collect::<Vec<_>>();
            out.push(next);
        }
        out
    }

    pub fn level_of(&self, id: ClassId) -> u32 {
        self.classes[id as usize].0
    }

    /// Readable form: level-1 classes print as the degree, higher levels as
    /// nested braces. Output is cut off after `max_len` characters.
    pub fn describe(&self, id: ClassId, max_len: usize) -> String {
        let mut s = String::new();
        self.write_class(id, &mut s, max_len);
        if s.len() > max_len {
            s.truncate(max_len);
            s.push_str("...");
        }
        s
    }

    fn write_class(&self, id: ClassId, s: &mut String, max_len: usize) {
        if s.len() > max_len {
            return;
        }
        let (level, children) = &self.classes[id as usize];
        match level {
            0 => s.push('*'),
            1 => s.push_str(&children.len().to_string()),
            _ => {
                s.push('{');
                for (i, &c) in children.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    self.write_class(c, s, max_len);
                    if s.len() > max_len {
                        return;
                    }
                }
                s.push('}');
            }
        }
    }
}

/// A k-level degree value carried as a 128-bit structural fingerprint.
/// Level-1 fingerprints encode the degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct KLevelDegree {
    pub level: u32,
    pub fingerprint: u128,
}

/// Fingerprints of every vertex at level `k` (computed bottom-up for all
/// vertices, `k` rounds of sorting neighbour fingerprints).
pub fn k_level_degrees(g: &Graph, k: u32) -> Result<Vec<KLevelDegree>> {
    if k == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let mut prev: Vec<u128> = vec![0; g.n()];
    for level in 1..=k {
        prev = (0..g.n())
            .map(|v| {
                let mut children: Vec<u128> = g.neighbors(v).map(|w| prev[w]).collect();
                children.sort_unstable();
                let mut h = Sha256::new();
                h.update(level.to_le_bytes());
                h.update((children.len() as u64).to_le_bytes());
                for c in children {
                    h.update(c.to_le_bytes());
                }
                let digest = h.finalize();
                u128::from_le_bytes(digest[..16].try_into().expect("digest has 32 bytes"))
            })
            .collect();
    }
    Ok(prev.into_iter().map(|fingerprint| KLevelDegree { level: k, fingerprint }).collect())
}

/// The k-level degree of a single vertex.
pub fn k_level_degree(g: &Graph, v: VertexId, k: u32) -> Result<KLevelDegree> {
    if v >= g.n() {
        return Err(Error::VertexOutOfRange { id: v, n: g.n() });
    }
    Ok(k_level_degrees(g, k)?[v])
}

/// Why two graphs admit no level-preserving bijection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BijectionFailure {
    /// Smallest level at which the class multisets differ.
    pub level: u32,
    /// Readable form of the first class whose multiplicities differ.
    pub class: String,
    pub count_g: usize,
    pub count_h: usize,
}

impl std::fmt::Display for BijectionFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "level {} class {} occurs {} times in G and {} times in H",
            self.level, self.class, self.count_g, self.count_h
        )
    }
}

/// A bijection `phi: V(H) -> V(G)` with `d_k^H(v) = d_k^G(phi(v))`, or the
/// first mismatching class. Vertices within a class are paired in id order.
pub fn find_degree_bijection(
    g: &Graph,
    h: &Graph,
    k: u32,
) -> Result<std::result::Result<Vec<VertexId>, BijectionFailure>> {
    if g.n() != h.n() {
        return Err(Error::Precondition(format!("vertex counts differ: {} vs {}", g.n(), h.n())));
    }
    if k == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let mut table = LevelInterner::new();
    let lg = table.levels(g, k);
    let lh = table.levels(h, k);
    for level in 1..=k as usize {
        let mut count: HashMap<ClassId, (usize, usize)> = HashMap::new();
        for &c in &lg[level] {
            count.entry(c).or_default().0 += 1;
        }
        for &c in &lh[level] {
            count.entry(c).or_default().1 += 1;
        }
        let mut bad: Vec<_> = count.into_iter().filter(|(_, (a, b))| a != b).collect();
        bad.sort_unstable_by_key(|&(c, _)| c);
        if let Some(&(class, (count_g, count_h))) = bad.first() {
            return Ok(Err(BijectionFailure {
                level: level as u32,
                class: table.describe(class, 200),
                count_g,
                count_h,
            }));
        }
    }
    let mut buckets: HashMap<ClassId, Vec<VertexId>> = HashMap::new();
    for (v, &c) in lg[k as usize].iter().enumerate().rev() {
        buckets.entry(c).or_default().push(v);
    }
    let phi = lh[k as usize]
        .iter()
        .map(|c| buckets.get_mut(c).and_then(Vec::pop).expect("class multiplicities match"))
        .collect();
    Ok(Ok(phi))
}

/// Whether `phi` maps every vertex of `h` to a vertex of `g` with equal
/// k-level degree, and is a bijection.
pub fn check_bijection(g: &Graph, h: &Graph, phi: &[VertexId], k: u32) -> Result<bool> {
    if phi.len() != h.n() || g.n() != h.n() {
        return Ok(false);
    }
    let mut seen = vec![false; g.n()];
    for &x in phi {
        if x >= g.n() || std::mem::replace(&mut seen[x], true) {
            return Ok(false);
        }
    }
    let dg = k_level_degrees(g, k)?;
    let dh = k_level_degrees(h, k)?;
    Ok(phi.iter().enumerate().all(|(v, &x)| dh[v] == dg[x]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn path_unfolding() {
        let g = families::path(3);
        let mut t = LevelInterner::new();
        let l = t.levels(&g, 2);
        assert_eq!(t.describe(l[1][1], 50), "2");
        assert_eq!(t.describe(l[2][1], 50), "{1,1}");
        assert_eq!(t.describe(l[2][0], 50), "{2}");
        assert_eq!(t.level_of(l[2][0]), 2);
    }

    #[test]
    fn triangle_vertices_agree() {
        let g = families::complete(3);
        for k in 1..5 {
            let d = k_level_degrees(&g, k).unwrap();
            assert!(d.iter().all(|x| *x == d[0]));
        }
    }

    #[test]
    fn cycles_are_indistinguishable() {
        let c3 = families::cycle(3);
        let c4 = families::cycle(4);
        for k in 1..6 {
            assert_eq!(k_level_degree(&c3, 0, k).unwrap(), k_level_degree(&c4, 0, k).unwrap());
        }
    }

    #[test]
    fn level_one_is_degree() {
        let g = families::star(3);
        let d = k_level_degrees(&g, 1).unwrap();
        assert_ne!(d[0], d[1]);
        assert_eq!(d[1], d[2]);
        let other = families::path(2);
        assert_eq!(k_level_degree(&other, 0, 1).unwrap(), d[1]);
    }

    #[test]
    fn bijection_fails_on_degree_histogram() {
        let fail = find_degree_bijection(&families::complete(3), &families::path(3), 2).unwrap().unwrap_err();
        assert_eq!(fail.level, 1);
    }

    #[test]
    fn bijection_on_base_pair() {
        let (g, h) = crate::hard::build_base_pair(2).unwrap();
        let phi = find_degree_bijection(&g, &h, 1).unwrap().unwrap();
        assert!(check_bijection(&g, &h, &phi, 1).unwrap());
        // Star centres go to clique vertices.
        for centre in [0, 3, 6] {
            assert!(phi[centre] < 3);
        }
        // Level 2 tells them apart: a centre sees two leaves, a clique
        // vertex sees two degree-2 vertices.
        assert!(find_degree_bijection(&g, &h, 2).unwrap().is_err());
    }
}
