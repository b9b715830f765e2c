//! The recursive degree-padded pair `G^(k)`, `H^(k)`: equal local
//! structure up to depth `k`, very different maximum matchings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{families, is_matching, EdgeId, Graph, VertexCover, VertexId};

/// Degree statistics of one level of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StructureCounts {
    pub level: u32,
    /// Number of vertices of the high degree `d_h`.
    pub n_h: usize,
    /// Number of vertices of the low degree `d_l`.
    pub n_l: usize,
    pub d_h: usize,
    pub d_l: usize,
}

impl StructureCounts {
    /// Reads the counts off a graph with exactly two distinct degrees.
    pub fn of(level: u32, g: &Graph) -> Result<Self> {
        match g.degree_histogram()[..] {
            [(d_l, n_l), (d_h, n_h)] => Ok(StructureCounts { level, n_h, n_l, d_h, d_l }),
            ref other => Err(Error::Invariant(format!(
                "level {level} should have exactly two degrees, found {other:?}"
            ))),
        }
    }

    /// The size bounds `N_h, d_h <= c^j + 2j c^(j-1)` and
    /// `N_l <= c^(j+1) + 2j c^j`.
    pub fn within_bounds(&self, c: usize) -> bool {
        let j = self.level;
        let cj = c.pow(j);
        let cj1 = c.pow(j - 1);
        let high = cj + 2 * j as usize * cj1;
        self.n_h <= high && self.d_h <= high && self.n_l <= c * cj + 2 * j as usize * cj && self.d_h > self.d_l
    }
}

/// `G^(1)`: a `(c+1)`-clique plus `(c+1)c/2` disjoint edges, and `H^(1)`:
/// `c+1` disjoint `c`-stars.
pub fn build_base_pair(c: usize) -> Result<(Graph, Graph)> {
    if c < 2 {
        return Err(Error::Precondition(format!("base pair needs c >= 2, got {c}")));
    }
    let g = families::complete(c + 1).disjoint_union(&families::disjoint_edges((c + 1) * c / 2));
    let h = families::copies(&families::star(c), c + 1);
    Ok((g, h))
}

/// Adds `d_h - d_l` special vertices, each joined to every vertex of degree
/// `d_l`. The input must have exactly two distinct degrees. Returns the
/// padded graph; the special vertices are the last `d_h - d_l` ids.
pub fn degree_pad(g: &Graph) -> Result<Graph> {
    Ok(pad_with_specials(g)?.0)
}

fn pad_with_specials(g: &Graph) -> Result<(Graph, Vec<VertexId>)> {
    let hist = g.degree_histogram();
    let [(d_l, _), (d_h, _)] = hist[..] else {
        return Err(Error::Precondition(format!(
            "degree padding needs exactly two distinct degrees, found {}",
            hist.len()
        )));
    };
    let n = g.n();
    let low: Vec<VertexId> = (0..n).filter(|&v| g.degree(v) == d_l).collect();
    let specials: Vec<VertexId> = (n..n + d_h - d_l).collect();
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    for &s in &specials {
        edges.extend(low.iter().map(|&v| (v, s)));
    }
    Ok((Graph::new(n + specials.len(), &edges)?, specials))
}

/// Output of [`build_pair`].
#[derive(Clone, Debug)]
pub struct HardPair {
    pub c: usize,
    pub k: u32,
    pub g: Graph,
    pub h: Graph,
    /// Structure counts of levels `1..=k`, read from `G^(j)` (and checked
    /// equal on `H^(j)`).
    pub trace: Vec<StructureCounts>,
    /// The duplicated disjoint edges of `G^(1)`: a matching of `G^(k)`.
    pub witness_matching: Vec<EdgeId>,
    /// Star centres and all special vertices: a vertex cover of `H^(k)`.
    pub witness_cover: VertexCover,
}

/// Builds `G^(k)` and `H^(k)`: `G^(j)` is `c` disjoint copies of the degree
/// padding of `G^(j-1)`, and likewise for `H`. Requires `c >= 2k`.
pub fn build_pair(c: usize, k: u32) -> Result<HardPair> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if c < 2 * k as usize {
        return Err(Error::Precondition(format!("construction needs c >= 2k, got c = {c}, k = {k}")));
    }
    let (g1, h1) = build_base_pair(c)?;
    // Matched pairs in G: the disjoint edges after the clique.
    let clique = c + 1;
    let mut g_pairs: Vec<(VertexId, VertexId)> = (0..(c + 1) * c / 2).map(|i| (clique + 2 * i, clique + 2 * i + 1)).collect();
    // Cover of H: star centres.
    let mut h_cover: Vec<VertexId> = (0..=c).map(|i| i * (c + 1)).collect();

    let mut g = g1;
    let mut h = h1;
    let mut trace = vec![level_counts(1, &g, &h)?];
    for level in 2..=k {
        let (gp, _) = pad_with_specials(&g)?;
        let (hp, h_specials) = pad_with_specials(&h)?;
        h_cover.extend(h_specials);
        let (gn, hn) = (gp.n(), hp.n());
        g_pairs = (0..c).flat_map(|i| g_pairs.iter().map(move |&(a, b)| (a + i * gn, b + i * gn))).collect();
        h_cover = (0..c).flat_map(|i| h_cover.iter().map(move |&v| v + i * hn)).collect();
        g = families::copies(&gp, c);
        h = families::copies(&hp, c);
        trace.push(level_counts(level, &g, &h)?);
    }
    let witness_matching = g_pairs
        .iter()
        .map(|&(a, b)| g.find_edge(a, b).ok_or_else(|| Error::Invariant("witness pair is not an edge".into())))
        .collect::<Result<Vec<_>>>()?;
    let witness_cover = VertexCover::from_vertices(h.n(), h_cover);
    Ok(HardPair { c, k, g, h, trace, witness_matching, witness_cover })
}

fn level_counts(level: u32, g: &Graph, h: &Graph) -> Result<StructureCounts> {
    let sg = StructureCounts::of(level, g)?;
    let sh = StructureCounts::of(level, h)?;
    if sg != sh {
        return Err(Error::Invariant(format!("level {level}: G counts {sg:?} differ from H counts {sh:?}")));
    }
    Ok(sg)
}

impl HardPair {
    /// Checks the witnesses: a matching of size `(c+1)c^k/2` in `G` and a
    /// vertex cover of size at most `2k c^k` in `H`.
    pub fn check_witnesses(&self) -> Result<()> {
        let ck = self.c.pow(self.k);
        let want = (self.c + 1) * ck / 2;
        if !is_matching(&self.g, &self.witness_matching) || self.witness_matching.len() != want {
            return Err(Error::Invariant(format!(
                "witness matching has size {} (want {want}) or is not a matching",
                self.witness_matching.len()
            )));
        }
        let bound = 2 * self.k as usize * ck;
        if !self.witness_cover.covers(&self.h) || self.witness_cover.len() > bound {
            return Err(Error::Invariant(format!(
                "witness cover has size {} (bound {bound}) or misses an edge",
                self.witness_cover.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::exact_mm;

    #[test]
    fn base_pair_sizes() {
        let (g, h) = build_base_pair(2).unwrap();
        assert_eq!((g.n(), g.m()), (9, 6));
        assert_eq!((h.n(), h.m()), (9, 6));
        assert_eq!(exact_mm(&g).unwrap(), 4);
        assert_eq!(exact_mm(&h).unwrap(), 3);
        for c in 2..8 {
            let (g, h) = build_base_pair(c).unwrap();
            assert_eq!(g.m(), (c + 1) * c);
            assert_eq!(h.m(), g.m());
            assert_eq!(g.n(), h.n());
        }
        assert!(build_base_pair(1).is_err());
    }

    #[test]
    fn padding_base_pair() {
        let (g, _) = build_base_pair(2).unwrap();
        let p = degree_pad(&g).unwrap();
        assert_eq!(p.n(), 10);
        assert_eq!(p.degree(9), 6);
        assert_eq!(p.degree_histogram(), vec![(2, 9), (6, 1)]);
        let (g3, _) = build_base_pair(3).unwrap();
        assert_eq!(degree_pad(&g3).unwrap().degree_histogram(), vec![(3, 16), (12, 2)]);
    }

    #[test]
    fn padding_rejects_regular_graphs() {
        assert!(degree_pad(&families::cycle(5)).is_err());
        assert!(degree_pad(&families::path(4).disjoint_union(&families::star(3))).is_err());
    }

    #[test]
    fn rejects_small_c() {
        assert!(build_pair(3, 2).is_err());
        assert!(build_pair(5, 3).is_err());
        assert!(build_pair(4, 2).is_ok());
    }

    #[test]
    fn witnesses_c4_k2() {
        let p = build_pair(4, 2).unwrap();
        p.check_witnesses().unwrap();
        assert_eq!(p.witness_matching.len(), 40);
        assert!(p.witness_cover.len() <= 64);
    }
}
