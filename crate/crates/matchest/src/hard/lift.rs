//! Lifting a graph along group-labelled edges to raise its girth while
//! keeping every k-level degree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::hard::group::{girth, GroupSpec};

/// The lift `L` of `base`: vertex `(v, g)` has id `v * R + g` and each base
/// edge `(a, b)` with `a < b` and label `s` becomes the `R` edges
/// `((a, g), (b, g s))`.
#[derive(Clone, Debug)]
pub struct LiftedGraph {
    pub base: Graph,
    pub group: GroupSpec,
    /// Index into `group.generators` for each base edge.
    pub edge_labels: Vec<usize>,
    pub lifted: Graph,
}

impl LiftedGraph {
    pub fn vertex(&self, v: VertexId, g: u32) -> VertexId {
        v * self.group.order + g as usize
    }

    /// The base vertex and group element of a lifted vertex.
    pub fn project(&self, x: VertexId) -> (VertexId, u32) {
        (x / self.group.order, (x % self.group.order) as u32)
    }
}

pub fn lift(base: &Graph, group: &GroupSpec, labels: &[usize]) -> Result<LiftedGraph> {
    if labels.len() != base.m() {
        return Err(Error::Precondition(format!("{} labels for {} edges", labels.len(), base.m())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= group.generators.len()) {
        return Err(Error::Precondition(format!(
            "label {bad} out of range for {} generators",
            group.generators.len()
        )));
    }
    let r = group.order;
    let mut edges = Vec::with_capacity(base.m() * r);
    for (e, (u, v)) in base.edges().enumerate() {
        let (a, b) = (u.min(v), u.max(v));
        let s = group.generators[labels[e]];
        for g in 0..r as u32 {
            edges.push((a * r + g as usize, b * r + group.mul(g, s) as usize));
        }
    }
    let lifted = Graph::new(base.n() * r, &edges)?;
    Ok(LiftedGraph { base: base.clone(), group: group.clone(), edge_labels: labels.to_vec(), lifted })
}

/// Lifts with random labels, retrying until the lift has girth at least
/// `min_girth` or `attempts` run out. Injective labels are used when there
/// are enough generators.
pub fn lift_with_girth(
    base: &Graph,
    group: &GroupSpec,
    min_girth: usize,
    attempts: usize,
    seed: u64,
) -> Result<Option<LiftedGraph>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = group.generators.len();
    if l == 0 {
        return Err(Error::Precondition("group has no generators".into()));
    }
    for _ in 0..attempts {
        let labels: Vec<usize> = if l >= base.m() {
            let mut pool: Vec<usize> = (0..l).collect();
            rand::seq::SliceRandom::shuffle(&mut pool[..], &mut rng);
            pool.truncate(base.m());
            pool
        } else {
            (0..base.m()).map(|_| rng.random_range(0..l)).collect()
        };
        let lifted = lift(base, group, &labels)?;
        if girth_at_least(&lifted.lifted, min_girth) {
            return Ok(Some(lifted));
        }
    }
    Ok(None)
}

/// Whether every cycle has length at least `g`; stops each search at
/// depth `g / 2`.
pub fn girth_at_least(graph: &Graph, g: usize) -> bool {
    if g <= 3 {
        return true;
    }
    let n = graph.n();
    let mut dist = vec![usize::MAX; n];
    let mut parent: Vec<EdgeId> = vec![usize::MAX; n];
    let mut touched = Vec::new();
    for root in 0..n {
        for &x in &touched {
            dist[x] = usize::MAX;
            parent[x] = usize::MAX;
        }
        touched.clear();
        dist[root] = 0;
        touched.push(root);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            if 2 * dist[u] + 1 >= g {
                break;
            }
            for (w, e) in graph.incident(u) {
                if e == parent[u] {
                    continue;
                }
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = e;
                    touched.push(w);
                    queue.push_back(w);
                } else if dist[u] + dist[w] + 1 < g {
                    return false;
                }
            }
        }
    }
    true
}

/// Exact girth of a lift, for reports.
pub fn lift_girth(l: &LiftedGraph) -> Option<usize> {
    girth(&l.lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::matching::exact_mm;

    #[test]
    fn single_edge_lifts_to_perfect_matching() {
        let grp = GroupSpec::cyclic(3, vec![1]);
        let l = lift(&families::path(2), &grp, &[0]).unwrap();
        assert_eq!((l.lifted.n(), l.lifted.m()), (6, 3));
        assert_eq!(exact_mm(&l.lifted).unwrap(), 3);
        for x in 0..3 {
            assert_eq!(l.lifted.degree(x), 1);
        }
        assert_eq!(l.project(l.vertex(1, 2)), (1, 2));
    }

    #[test]
    fn edge_set_matches_definition() {
        let grp = GroupSpec::dihedral(3, vec![1, 3]);
        let base = families::complete(3);
        let labels = vec![0, 1, 1];
        let l = lift(&base, &grp, &labels).unwrap();
        assert_eq!(l.lifted.m(), base.m() * grp.order);
        for (e, (u, v)) in base.edges().enumerate() {
            let (a, b) = (u.min(v), u.max(v));
            for g in 0..grp.order as u32 {
                let h = grp.mul(g, grp.generators[labels[e]]);
                assert!(l.lifted.find_edge(l.vertex(a, g), l.vertex(b, h)).is_some());
            }
        }
    }

    #[test]
    fn rejects_bad_labels() {
        let grp = GroupSpec::cyclic(3, vec![1]);
        assert!(lift(&families::path(2), &grp, &[1]).is_err());
        assert!(lift(&families::path(3), &grp, &[0]).is_err());
    }

    #[test]
    fn girth_threshold_agrees_with_exact_girth() {
        for g in [families::cycle(5), families::complete(4), families::path(6), families::complete_bipartite(2, 3)] {
            let exact = girth(&g).unwrap_or(usize::MAX);
            for t in 3..8 {
                assert_eq!(girth_at_least(&g, t), exact >= t, "t = {t}");
            }
        }
    }
}
