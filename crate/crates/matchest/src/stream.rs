//! Edge streams: IID samples with replacement, a uniformly random
//! permutation, or a fixed script. Every emission increments the
//! `consumed` counter, which is the sample-budget ledger.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    /// Each emission is uniform over the edge set, independent of the past.
    Iid,
    /// Each edge is emitted exactly once, in uniformly random order.
    Permutation,
    /// A caller-supplied sequence of edge ids, emitted in order.
    Scripted,
}

#[derive(Clone, Debug)]
pub struct EdgeStream<'g> {
    graph: &'g Graph,
    mode: StreamMode,
    rng: ChaCha8Rng,
    consumed: u64,
    limit: Option<u64>,
    /// Permutation mode: positions `< consumed` hold the emitted prefix and
    /// the rest is the pool still to be shuffled in lazily. Scripted mode:
    /// the script.
    order: Vec<EdgeId>,
    /// Permutation mode: positions `< fixed` are predetermined.
    fixed: usize,
}

impl<'g> EdgeStream<'g> {
    pub fn new(graph: &'g Graph, mode: StreamMode, seed: u64) -> Self {
        let order = match mode {
            StreamMode::Permutation => (0..graph.m()).collect(),
            _ => Vec::new(),
        };
        EdgeStream {
            graph,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            consumed: 0,
            limit: None,
            order,
            fixed: 0,
        }
    }

    pub fn iid(graph: &'g Graph, seed: u64) -> Self {
        Self::new(graph, StreamMode::Iid, seed)
    }

    pub fn permutation(graph: &'g Graph, seed: u64) -> Self {
        Self::new(graph, StreamMode::Permutation, seed)
    }

    /// A permutation stream whose first `prefix.len()` emissions are
    /// `prefix`, followed by a uniformly random order of the remaining edges.
    pub fn permutation_with_prefix(graph: &'g Graph, prefix: &[EdgeId], seed: u64) -> Result<Self> {
        let mut s = Self::permutation(graph, seed);
        let mut pos = vec![0usize; graph.m()];
        for (i, &e) in s.order.iter().enumerate() {
            pos[e] = i;
        }
        for (t, &e) in prefix.iter().enumerate() {
            if e >= graph.m() || pos[e] < t {
                return Err(Error::Precondition("prefix must list distinct edges".into()));
            }
            let j = pos[e];
            let displaced = s.order[t];
            s.order.swap(t, j);
            pos[displaced] = j;
            pos[e] = t;
        }
        s.fixed = prefix.len();
        Ok(s)
    }

    /// A stream that emits `script` in order and then reports exhaustion.
    pub fn scripted(graph: &'g Graph, script: Vec<EdgeId>) -> Result<Self> {
        if script.iter().any(|&e| e >= graph.m()) {
            return Err(Error::Precondition("script refers to a missing edge".into()));
        }
        let mut s = Self::new(graph, StreamMode::Scripted, 0);
        s.order = script;
        Ok(s)
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn mode(&self) -> StreamMode {
        self.mode
    }

    /// Number of edges emitted so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    /// Emissions left before exhaustion or the budget limit, if finite.
    pub fn remaining(&self) -> Option<u64> {
        let cap = match self.mode {
            StreamMode::Iid => None,
            _ => Some(self.order.len() as u64),
        };
        let left = |c: u64| c.saturating_sub(self.consumed);
        match (cap, self.limit) {
            (Some(c), Some(l)) => Some(left(c.min(l))),
            (Some(c), None) => Some(left(c)),
            (None, Some(l)) => Some(left(l)),
            (None, None) => None,
        }
    }

    /// Caps the total number of emissions (counted from the stream's start).
    /// Emitting past the cap fails with [`Error::BudgetExhausted`].
    pub fn set_limit(&mut self, limit: Option<u64>) {
        self.limit = limit;
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    pub fn next_edge(&mut self) -> Result<EdgeId> {
        if let Some(limit) = self.limit {
            if self.consumed >= limit {
                return Err(Error::BudgetExhausted(limit));
            }
        }
        let t = self.consumed as usize;
        let e = match self.mode {
            StreamMode::Iid => {
                if self.graph.m() == 0 {
                    return Err(Error::Precondition("cannot sample from an empty edge set".into()));
                }
                self.rng.random_range(0..self.graph.m())
            }
            StreamMode::Permutation => {
                if t >= self.order.len() {
                    return Err(Error::StreamExhausted(self.consumed));
                }
                if t >= self.fixed {
                    let j = self.rng.random_range(t..self.order.len());
                    self.order.swap(t, j);
                }
                self.order[t]
            }
            StreamMode::Scripted => {
                if t >= self.order.len() {
                    return Err(Error::StreamExhausted(self.consumed));
                }
                self.order[t]
            }
        };
        self.consumed += 1;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn single_edge_iid() {
        let g = families::path(2);
        let mut s = EdgeStream::iid(&g, 3);
        for _ in 0..10 {
            assert_eq!(s.next_edge().unwrap(), 0);
        }
        assert_eq!(s.consumed(), 10);
    }

    #[test]
    fn permutation_emits_each_edge_once() {
        let g = families::complete(3);
        let mut s = EdgeStream::permutation(&g, 9);
        let mut seen: Vec<_> = (0..3).map(|_| s.next_edge().unwrap()).collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2]);
        assert_eq!(s.next_edge(), Err(Error::StreamExhausted(3)));
        assert_eq!(s.consumed(), 3);
    }

    #[test]
    fn prefix_is_respected() {
        let g = families::complete(5);
        let mut s = EdgeStream::permutation_with_prefix(&g, &[7, 2, 9], 1).unwrap();
        let all: Vec<_> = (0..g.m()).map(|_| s.next_edge().unwrap()).collect();
        assert_eq!(&all[..3], &[7, 2, 9]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, (0..g.m()).collect::<Vec<_>>());
        assert!(EdgeStream::permutation_with_prefix(&g, &[1, 1], 1).is_err());
    }

    #[test]
    fn limit_stops_emission() {
        let g = families::complete(4);
        let mut s = EdgeStream::iid(&g, 0);
        s.set_limit(Some(2));
        assert!(s.next_edge().is_ok());
        assert!(s.next_edge().is_ok());
        assert_eq!(s.next_edge(), Err(Error::BudgetExhausted(2)));
        assert_eq!(s.consumed(), 2);
        assert_eq!(s.remaining(), Some(0));
    }

    #[test]
    fn scripted_replays() {
        let g = families::complete(3);
        let mut s = EdgeStream::scripted(&g, vec![2, 2, 0]).unwrap();
        assert_eq!(s.next_edge().unwrap(), 2);
        assert_eq!(s.next_edge().unwrap(), 2);
        assert_eq!(s.next_edge().unwrap(), 0);
        assert!(s.next_edge().is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let g = families::complete(6);
        let a: Vec<_> = {
            let mut s = EdgeStream::iid(&g, 42);
            (0..50).map(|_| s.next_edge().unwrap()).collect()
        };
        let b: Vec<_> = {
            let mut s = EdgeStream::iid(&g, 42);
            (0..50).map(|_| s.next_edge().unwrap()).collect()
        };
        assert_eq!(a, b);
    }
}
