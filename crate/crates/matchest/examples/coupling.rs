//! How far a level test on a random-permutation stream drifts from the same
//! test on IID samples, as the consumed prefix grows.

use matchest::divergence::{max_prefix, stream_coupling_experiment, CouplingSpec, PrefixMode, Reference};
use matchest::estimator::EstimatorConfig;
use matchest::graph::families;

fn main() -> matchest::Result<()> {
    let g = families::circulant(400, &[1, 2, 3, 4]);
    let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5);
    let level = 2;
    println!("m = {}, admissible prefix up to {:.0}", g.m(), max_prefix(&cfg, level));
    for t in [0, g.m() / 8, g.m() / 4] {
        let spec = CouplingSpec { level, vertex: 0, t, trials: 10_000, prefix: PrefixMode::Random, reference: Reference::Full };
        let r = stream_coupling_experiment(&g, &spec, &cfg, 11)?;
        println!(
            "t = {t:>4}: pass rate IID {:.4}, permutation {:.4}, TVD {:.4} (noise floor {:.4})",
            r.p_iid, r.p_perm, r.tvd, r.noise_floor
        );
    }
    Ok(())
}
