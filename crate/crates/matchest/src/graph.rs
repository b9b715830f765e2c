//! Static undirected simple graphs, the edge-list file format, and the
//! matching / cover value types shared by every algorithm in the crate.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type VertexId = usize;
/// Edges are identified by their position in the input edge list.
pub type EdgeId = usize;

/// An immutable simple undirected graph with a compressed adjacency index.
///
/// Each vertex's incident edges are listed in increasing edge id, so the
/// `k`-th neighbour of a vertex is well defined and stable.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    incidence: Vec<(u32, u32)>,
    max_degree: usize,
    degree_bound: usize,
}

impl Graph {
    /// Builds a graph on vertices `0..n`. Edge `i` of the input gets id `i`.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if n > u32::MAX as usize {
            return Err(Error::TooLarge(format!("{n} vertices")));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { id: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(u, v));
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for v in 0..n {
            offsets.push(offsets[v] + degree[v]);
        }
        let mut fill = offsets.clone();
        let mut incidence = vec![(0u32, 0u32); 2 * edges.len()];
        for (id, &(u, v)) in edges.iter().enumerate() {
            incidence[fill[u]] = (v as u32, id as u32);
            fill[u] += 1;
            incidence[fill[v]] = (u as u32, id as u32);
            fill[v] += 1;
        }
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        Ok(Graph {
            n,
            edges: edges.iter().map(|&(u, v)| (u as u32, v as u32)).collect(),
            offsets,
            incidence,
            max_degree,
            degree_bound: max_degree,
        })
    }

    /// The graph with no edges on `n` vertices.
    pub fn empty(n: usize) -> Graph {
        Graph::new(n, &[]).expect("edgeless graph is always valid")
    }

    /// Parses the edge-list format: a header `n m`, then `m` lines `u v`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse_field = |f: Option<&str>| -> Result<usize> {
                let f = f.ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: "expected two integers".into(),
                })?;
                f.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("not a nonnegative integer: {f:?}"),
                })
            };
            let a = parse_field(fields.next())?;
            let b = parse_field(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "trailing fields".into(),
                });
            }
            match header {
                None => header = Some((a, b)),
                Some(_) => edges.push((a, b)),
            }
        }
        let (n, m) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing header line \"n m\"".into(),
        })?;
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {m} edges but {} were listed", edges.len()),
            });
        }
        Graph::new(n, &edges)
    }

    /// Serialises the graph in the edge-list format accepted by [`Graph::parse`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(12 * (self.m() + 1));
        let _ = writeln!(out, "{} {}", self.n, self.m());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// The degree bound `d` used by the algorithms. Defaults to the true
    /// maximum degree.
    pub fn d(&self) -> usize {
        self.degree_bound
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Returns a copy declaring `d` as the degree bound. `d` must be at least
    /// the true maximum degree.
    pub fn with_degree_bound(&self, d: usize) -> Result<Graph> {
        if d < self.max_degree {
            return Err(Error::Config(format!(
                "declared degree bound {d} is below the maximum degree {}",
                self.max_degree
            )));
        }
        let mut g = self.clone();
        g.degree_bound = d;
        Ok(g)
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let (u, v) = self.edges[e];
        (u as usize, v as usize)
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().map(|&(u, v)| (u as usize, v as usize))
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// `(neighbour, edge id)` pairs incident to `v`, in increasing edge id.
    pub fn incident(&self, v: VertexId) -> impl ExactSizeIterator<Item = (VertexId, EdgeId)> + '_ {
        self.incidence[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|&(w, e)| (w as usize, e as usize))
    }

    pub fn neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        self.incident(v).map(|(w, _)| w)
    }

    /// The `k`-th incident `(neighbour, edge id)` of `v`, if `k < degree(v)`.
    pub fn kth_incident(&self, v: VertexId, k: usize) -> Option<(VertexId, EdgeId)> {
        if k < self.degree(v) {
            let (w, e) = self.incidence[self.offsets[v] + k];
            Some((w as usize, e as usize))
        } else {
            None
        }
    }

    /// The id of edge `{u, v}`, if present.
    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        if u >= self.n || v >= self.n {
            return None;
        }
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.incident(a).find(|&(w, _)| w == b).map(|(_, e)| e)
    }

    /// The other endpoint of edge `e` seen from `v`.
    pub fn other(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }

    /// Disjoint union: vertices of `other` are shifted by `self.n()` and its
    /// edge ids by `self.m()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        edges.extend(other.edges().map(|(u, v)| (u + shift, v + shift)));
        Graph::new(self.n + other.n, &edges).expect("disjoint union of simple graphs is simple")
    }

    /// Relabels vertex `v` as `perm[v]`, keeping edge ids.
    pub fn relabel(&self, perm: &[VertexId]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Precondition("relabelling must cover every vertex".into()));
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::new(self.n, &edges)
    }

    /// Sorted degree sequence histogram as `(degree, count)` pairs.
    pub fn degree_histogram(&self) -> Vec<(usize, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for v in 0..self.n {
            *counts.entry(self.degree(v)).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }
}

/// Reads a graph file in the edge-list format.
pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    Graph::parse(&text)
}

/// Writes a graph file in the edge-list format.
pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, g.to_edge_list())?;
    Ok(())
}

/// When `m < n`, adds a vertex `v0 = n` joined to every original vertex so
/// that the sampling algorithms see at least as many edges as vertices.
/// The maximum matching grows by at most one.
pub fn virtual_augment(g: &Graph) -> Graph {
    if g.m() >= g.n() {
        return g.clone();
    }
    add_hubs(g, 1)
}

/// Adds the fewest hub vertices (each joined to every original vertex)
/// needed to reach `m >= ratio * n`. Each hub raises the maximum matching by
/// at most one. Returns the graph and the number of hubs added.
pub fn augment_to_ratio(g: &Graph, ratio: usize) -> Result<(Graph, usize)> {
    let (n, m) = (g.n(), g.m());
    if m >= ratio * n {
        return Ok((g.clone(), 0));
    }
    if n <= ratio {
        return Err(Error::Precondition(format!(
            "cannot reach m >= {ratio}n with hubs on {n} vertices"
        )));
    }
    // Each hub adds n edges and one vertex.
    let deficit = ratio * n - m;
    let hubs = deficit.div_ceil(n - ratio);
    Ok((add_hubs(g, hubs), hubs))
}

fn add_hubs(g: &Graph, hubs: usize) -> Graph {
    let n = g.n();
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    for h in 0..hubs {
        edges.extend((0..n).map(|v| (v, n + h)));
    }
    Graph::new(n + hubs, &edges).expect("hub augmentation keeps the graph simple")
}

/// An edge-weight map, stored densely by edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalMatching {
    pub weights: Vec<f64>,
}

impl FractionalMatching {
    pub fn zeros(m: usize) -> Self {
        FractionalMatching { weights: vec![0.0; m] }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Vertex loads `M(v)` for every vertex.
    pub fn loads(&self, g: &Graph) -> Vec<f64> {
        let mut load = vec![0.0; g.n()];
        for (e, (u, v)) in g.edges().enumerate() {
            load[u] += self.weights[e];
            load[v] += self.weights[e];
        }
        load
    }

    pub fn max_load(&self, g: &Graph) -> f64 {
        self.loads(g).into_iter().fold(0.0, f64::max)
    }

    /// Nonnegative weights with every vertex load at most one (up to `tol`).
    pub fn is_valid(&self, g: &Graph, tol: f64) -> bool {
        self.weights.len() == g.m()
            && self.weights.iter().all(|&w| w >= 0.0)
            && self.loads(g).iter().all(|&l| l <= 1.0 + tol)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FractionalMatching {
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

/// A vertex set, stored as a membership bitmap.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexCover {
    pub members: Vec<bool>,
}

impl VertexCover {
    pub fn from_vertices(n: usize, vertices: impl IntoIterator<Item = VertexId>) -> Self {
        let mut members = vec![false; n];
        for v in vertices {
            members[v] = true;
        }
        VertexCover { members }
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members[v]
    }

    /// Every edge has at least one endpoint in the set.
    pub fn covers(&self, g: &Graph) -> bool {
        self.members.len() == g.n() && g.edges().all(|(u, v)| self.members[u] || self.members[v])
    }
}

/// True when no two of the given edges share an endpoint and no edge repeats.
pub fn is_matching(g: &Graph, edges: &[EdgeId]) -> bool {
    let mut used = vec![false; g.n()];
    for &e in edges {
        if e >= g.m() {
            return false;
        }
        let (u, v) = g.endpoints(e);
        if used[u] || used[v] {
            return false;
        }
        used[u] = true;
        used[v] = true;
    }
    true
}

/// The greedy maximal matching that scans edges in `order`, keeping every
/// edge whose endpoints are both still free.
pub fn greedy_maximal_matching(g: &Graph, order: &[EdgeId]) -> Result<Vec<EdgeId>> {
    let mut seen = vec![false; g.m()];
    if order.len() != g.m() {
        return Err(Error::Precondition("order must list every edge once".into()));
    }
    for &e in order {
        if e >= g.m() || std::mem::replace(&mut seen[e], true) {
            return Err(Error::Precondition("order must list every edge once".into()));
        }
    }
    let mut used = vec![false; g.n()];
    let mut matching = Vec::new();
    for &e in order {
        let (u, v) = g.endpoints(e);
        if !used[u] && !used[v] {
            used[u] = true;
            used[v] = true;
            matching.push(e);
        }
    }
    Ok(matching)
}

/// Small named graphs used by tests and examples.
pub mod families {
    use super::Graph;

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3, "a simple cycle needs three vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    /// Circulant graph: `i` is joined to `i + s mod n` for each offset `s`.
    /// Offsets must be distinct, nonzero and below `n / 2`, which makes the
    /// graph `2 |offsets|`-regular.
    pub fn circulant(n: usize, offsets: &[usize]) -> Graph {
        assert!(offsets.iter().all(|&s| s > 0 && 2 * s < n), "offsets must lie in 1..n/2");
        let mut edges = Vec::new();
        for &s in offsets {
            for i in 0..n {
                edges.push((i, (i + s) % n));
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::new(leaves + 1, &edges).unwrap()
    }

    /// `k` vertex-disjoint copies of `g`.
    pub fn copies(g: &Graph, k: usize) -> Graph {
        let mut out = Graph::empty(0);
        for _ in 0..k {
            out = out.disjoint_union(g);
        }
        out
    }

    /// `k` disjoint edges.
    pub fn disjoint_edges(k: usize) -> Graph {
        copies(&path(2), k)
    }

    /// Complete bipartite graph with sides `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..a {
            for v in 0..b {
                edges.push((u, a + v));
            }
        }
        Graph::new(a + b, &edges).unwrap()
    }

    /// Erdős–Rényi style graph with each pair present independently with
    /// probability `p`.
    pub fn gnp(n: usize, p: f64, rng: &mut impl rand::Rng) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    /// Random graph with every vertex of degree at most `d`: each vertex
    /// proposes `d` random partners and a proposal is kept while both sides
    /// have spare degree.
    pub fn random_bounded_degree(n: usize, d: usize, rng: &mut impl rand::Rng) -> Graph {
        let mut degree = vec![0usize; n];
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::new();
        for u in 0..n {
            for _ in 0..d {
                let v = rng.random_range(0..n);
                let key = (u.min(v), u.max(v));
                if u != v && degree[u] < d && degree[v] < d && seen.insert(key) {
                    degree[u] += 1;
                    degree[v] += 1;
                    edges.push(key);
                }
            }
        }
        Graph::new(n, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_triangle() {
        let g = Graph::parse("3 3\n0 1\n1 2\n0 2").unwrap();
        assert_eq!((g.n(), g.m(), g.d()), (3, 3, 2));
    }

    #[test]
    fn parses_single_edge_with_comments() {
        let g = Graph::parse("# one edge\n2 1\n\n# body\n0 1\n").unwrap();
        assert_eq!((g.n(), g.m(), g.d()), (2, 1, 1));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Graph::parse("2 1\n0 0"), Err(Error::SelfLoop(0)));
        assert_eq!(Graph::parse("3 2\n0 1\n1 0"), Err(Error::DuplicateEdge(1, 0)));
        assert_eq!(Graph::parse("2 1\n0 2"), Err(Error::VertexOutOfRange { id: 2, n: 2 }));
        assert!(matches!(Graph::parse("2 1\n0 x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Graph::parse("2 2\n0 1"), Err(Error::Parse { .. })));
        assert!(matches!(Graph::parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn round_trips_edge_list() {
        let g = families::complete(5);
        assert_eq!(Graph::parse(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn adjacency_is_consistent() {
        let g = families::complete(6);
        let total: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        assert_eq!(total, 2 * g.m());
        for v in 0..g.n() {
            let ids: Vec<_> = g.incident(v).map(|(_, e)| e).collect();
            assert!(ids.windows(2).all(|w| w[0] < w[1]));
            for (w, e) in g.incident(v) {
                assert_eq!(g.other(e, v), w);
                assert_eq!(g.find_edge(v, w), Some(e));
            }
        }
    }

    #[test]
    fn virtual_augment_cases() {
        let dense = Graph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(virtual_augment(&dense), dense);
        let sparse = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let aug = virtual_augment(&sparse);
        assert_eq!((aug.n(), aug.m()), (5, 6));
        let empty = Graph::empty(3);
        let aug = virtual_augment(&empty);
        assert_eq!((aug.n(), aug.m()), (4, 3));
    }

    #[test]
    fn augment_to_ratio_reaches_target_minimally() {
        let g = families::copies(&families::complete(3), 200);
        let (aug, hubs) = augment_to_ratio(&g, 3).unwrap();
        assert!(aug.m() >= 3 * aug.n());
        assert_eq!(hubs, 3);
        let fewer = add_hubs(&g, hubs - 1);
        assert!(fewer.m() < 3 * fewer.n());
    }

    #[test]
    fn greedy_examples() {
        let p3 = families::path(3);
        assert_eq!(greedy_maximal_matching(&p3, &[0, 1]).unwrap(), vec![0]);
        let p4 = families::path(4);
        assert_eq!(greedy_maximal_matching(&p4, &[1, 0, 2]).unwrap(), vec![1]);
        let k3 = families::complete(3);
        assert_eq!(greedy_maximal_matching(&k3, &[2, 0, 1]).unwrap().len(), 1);
        assert!(greedy_maximal_matching(&k3, &[0, 0, 1]).is_err());
    }

    #[test]
    fn degree_bound_override() {
        let g = families::path(4);
        assert_eq!(g.with_degree_bound(4).unwrap().d(), 4);
        assert!(g.with_degree_bound(1).is_err());
    }
}
