//! Estimating the maximum matching size from IID edge samples with a budget
//! of a few multiples of `m`, compared with the exact value.

use matchest::estimator::{alg_iid, EstimatorConfig};
use matchest::graph::{families, virtual_augment};
use matchest::matching::exact_mm;
use matchest::stats::median;
use matchest::stream::EdgeStream;

fn main() -> matchest::Result<()> {
    let graphs = [
        ("k7 x 40", families::copies(&families::complete(7), 40)),
        ("k4,131 x 2", families::copies(&families::complete_bipartite(4, 131), 2)),
        ("cycle-300", virtual_augment(&families::cycle(300))),
    ];
    for (name, g) in &graphs {
        let mm = exact_mm(g)?;
        for factor in [1, 4] {
            let cfg = EstimatorConfig::for_graph(g, 2.0, 0.5).with_budget(factor * g.m() as u64);
            let mut estimates = Vec::new();
            for seed in 0..11 {
                estimates.push(alg_iid(&mut EdgeStream::iid(g, seed), &cfg)?.estimate);
            }
            println!("{name:<11} MM {mm:>4}  budget {factor}m  median estimate {:>8.2}", median(&estimates));
        }
    }
    Ok(())
}
