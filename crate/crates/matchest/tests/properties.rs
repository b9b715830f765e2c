//! Randomised invariants over generated graphs and parameters.

use matchest::divergence::{bernoulli_kl, kl_bound, pad_bernoulli};
use matchest::estimator::{alg_iid, etest, vtest, EstimatorConfig};
use matchest::graph::{virtual_augment, Graph};
use matchest::lca::{oracle_all_edges, oracle_vertex, OracleConfig};
use matchest::matching::exact_mm;
use matchest::peeling::{alg_global, PeelingConfig};
use matchest::stream::EdgeStream;
use matchest::Error;
use proptest::prelude::*;

/// Simple graphs on up to `max_n` vertices from a random edge mask.
fn graphs(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        proptest::collection::vec(proptest::bool::weighted(0.3), pairs.len()).prop_map(move |mask| {
            let edges: Vec<_> = pairs.iter().zip(&mask).filter(|(_, &keep)| keep).map(|(&e, _)| e).collect();
            Graph::new(n, &edges).unwrap()
        })
    })
}

fn nonempty_graphs(max_n: usize) -> impl Strategy<Value = Graph> {
    graphs(max_n).prop_filter("needs an edge", |g| g.m() > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn padding_is_idempotent_and_monotone(p in 0.0..=1.0f64, q in 0.0..=1.0f64, theta in 1e-9..0.4999f64) {
        let (a, b) = (pad_bernoulli(p, theta), pad_bernoulli(q, theta));
        prop_assert_eq!(pad_bernoulli(a, theta), a);
        prop_assert!(a >= theta && a <= 1.0 - theta);
        if p <= q {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_the_diagonal(p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
        prop_assert!(bernoulli_kl(p, q) >= 0.0);
        prop_assert_eq!(bernoulli_kl(p, p), 0.0);
    }

    #[test]
    fn kl_respects_quadratic_bound(p in 0.001..0.999f64, t in 0.0..=1.0f64) {
        let eps = t - p;
        prop_assert!(bernoulli_kl(t, p) <= kl_bound(p, eps) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn edge_list_round_trips(g in graphs(12)) {
        let back = Graph::parse(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        prop_assert_eq!(back.n(), g.n());
    }

    #[test]
    fn level_tests_stay_within_bounds(g in nonempty_graphs(14), seed in any::<u64>(), perm in any::<bool>()) {
        let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5);
        let mut s = if perm { EdgeStream::permutation(&g, seed) } else { EdgeStream::iid(&g, seed) };
        for v in 0..g.n() {
            for level in 1..=cfg.levels + 1 {
                match vtest(level, v, &mut s, &cfg) {
                    Ok(o) => prop_assert!(o.samples_used as f64 <= cfg.vtest_bound(level) + 1e-9),
                    Err(Error::StreamExhausted(_)) => return Ok(()),
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
        for e in 0..g.m() {
            match etest(e, &mut s, &cfg) {
                Ok(o) => {
                    prop_assert!(o.weight >= 1.0 / cfg.d as f64 - 1e-12);
                    prop_assert!(o.weight <= cfg.max_edge_weight() + 1e-12);
                    prop_assert!(o.samples_used as f64 <= 4.0 * o.weight * cfg.m as f64 + 1e-9);
                }
                Err(Error::StreamExhausted(_)) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn estimator_never_exceeds_budget(g in nonempty_graphs(14), seed in any::<u64>(), factor in 1u64..6) {
        let g = virtual_augment(&g);
        let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5).with_budget(factor * g.m() as u64);
        let out = alg_iid(&mut EdgeStream::iid(&g, seed), &cfg).unwrap();
        prop_assert!(out.samples_used <= cfg.sample_budget);
        prop_assert!(out.estimate >= 0.0);
    }

    #[test]
    fn peeling_yields_cover_and_bounded_loads(g in graphs(16), delta in 0.05..=0.5f64) {
        let cfg = PeelingConfig::for_graph(&g, 2.0, delta);
        let r = alg_global(&g, &cfg).unwrap();
        if cfg.surviving_edge_weight() >= delta {
            prop_assert!(r.cover.covers(&g));
        }
        let cap = (3.0 * delta).max(1.0);
        prop_assert!(r.matching.scaled(1.0 / cap).is_valid(&g, 1e-9));
        // Each covered vertex carries load at least delta, and each edge
        // touches at most two of them.
        prop_assert!(delta * r.cover_size as f64 / 2.0 <= r.sum_m + 1e-9);
        prop_assert!(r.sum_m <= cap * 1.5 * exact_mm(&g).unwrap() as f64 + 1e-9);
    }

    #[test]
    fn oracle_answers_form_one_consistent_matching(g in nonempty_graphs(14), seed in any::<u64>()) {
        let cfg = OracleConfig::for_graph(&g, seed).with_lambda(0.2);
        let all = oracle_all_edges(&g, &cfg).unwrap();
        prop_assert!(all.is_matching);
        let mut matched = vec![false; g.n()];
        for &e in &all.matching {
            let (u, v) = g.endpoints(e);
            matched[u] = true;
            matched[v] = true;
        }
        for v in 0..g.n() {
            prop_assert_eq!(oracle_vertex(v, &g, &cfg).unwrap().answer, matched[v]);
        }
    }

    #[test]
    fn permutation_stream_emits_every_edge_once(g in nonempty_graphs(12), seed in any::<u64>()) {
        let mut s = EdgeStream::permutation(&g, seed);
        let mut seen: Vec<usize> = (0..g.m()).map(|_| s.next_edge().unwrap()).collect();
        prop_assert!(matches!(s.next_edge(), Err(Error::StreamExhausted(_))));
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..g.m()).collect::<Vec<_>>());
    }

    #[test]
    fn augmentation_adds_at_most_one_to_matching(g in graphs(12)) {
        let a = virtual_augment(&g);
        prop_assert!(a.m() >= a.n() || g.m() == 0);
        let (x, y) = (exact_mm(&g).unwrap(), exact_mm(&a).unwrap());
        prop_assert!(x <= y && y <= x + 1);
    }
}
