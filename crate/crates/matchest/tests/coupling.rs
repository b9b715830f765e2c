//! Level tests on permutation streams against IID streams.

use matchest::divergence::{
    exact_coupling, max_prefix, stream_coupling_experiment, CouplingSpec, PrefixMode, Reference,
};
use matchest::estimator::EstimatorConfig;
use matchest::graph::families;
use matchest::stats::mean;

fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn sampled_pass_rates_match_enumeration() {
    let g = families::cycle(8);
    let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5);
    let prefix = vec![2, 5];
    assert!(prefix.len() as f64 <= max_prefix(&cfg, 1));
    for reference in [Reference::Full, Reference::Residual] {
        let exact = exact_coupling(&g, 1, 0, &prefix, reference, &cfg).unwrap();
        let trials = 40_000;
        let spec = CouplingSpec {
            level: 1,
            vertex: 0,
            t: prefix.len(),
            trials,
            prefix: PrefixMode::Fixed(prefix.clone()),
            reference,
        };
        let r = stream_coupling_experiment(&g, &spec, &cfg, 17).unwrap();
        assert!((r.p_iid - exact.p_iid).abs() <= 4.0 * sigma(exact.p_iid, trials) + 1e-9, "{reference:?}: {r:?} vs {exact:?}");
        assert!((r.p_perm - exact.p_perm).abs() <= 4.0 * sigma(exact.p_perm, trials) + 1e-9, "{reference:?}: {r:?} vs {exact:?}");
    }
}

#[test]
fn distance_shrinks_as_the_graph_grows() {
    let tvd = |n: usize| {
        let g = families::circulant(n, &[1, 2, 3, 4]);
        let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5);
        let runs: Vec<f64> = (1..=3)
            .map(|seed| {
                let spec = CouplingSpec {
                    level: 2,
                    vertex: 0,
                    t: g.m() / 4,
                    trials: 20_000,
                    prefix: PrefixMode::Random,
                    reference: Reference::Full,
                };
                stream_coupling_experiment(&g, &spec, &cfg, seed).unwrap().tvd
            })
            .collect();
        mean(&runs)
    };
    let (small, large) = (tvd(40), tvd(640));
    assert!(small > 2.0 * large, "n = 40: {small}, n = 640: {large}");
    assert!(large <= 0.02, "n = 640: {large}");
}

#[test]
fn prefix_beyond_half_the_stream_is_rejected() {
    let g = families::circulant(100, &[1, 2]);
    let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5);
    let t = max_prefix(&cfg, 2).floor() as usize + 1;
    let spec = CouplingSpec { level: 2, vertex: 0, t, trials: 10_000, prefix: PrefixMode::Random, reference: Reference::Full };
    assert!(stream_coupling_experiment(&g, &spec, &cfg, 1).is_err());
}
