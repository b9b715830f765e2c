//! The single-pass estimator on random-permutation streams. Sparse inputs
//! are first padded with hub vertices until `m >= 3n`.

use matchest::estimator::{permutation_budget, permutation_peeling, EstimatorConfig, DEFAULT_BETA};
use matchest::graph::{augment_to_ratio, families};
use matchest::matching::exact_mm;
use matchest::stream::EdgeStream;

fn main() -> matchest::Result<()> {
    let (g, hubs) = augment_to_ratio(&families::copies(&families::complete(3), 200), 3)?;
    let cfg = EstimatorConfig::for_graph(&g, 2.0, 0.5);
    println!(
        "200 triangles plus {hubs} hubs: n = {}, m = {}, MM = {}, budget = {}",
        g.n(),
        g.m(),
        exact_mm(&g)?,
        permutation_budget(g.m(), g.n(), DEFAULT_BETA)
    );
    for seed in 0..5 {
        let mut s = EdgeStream::permutation(&g, seed);
        let out = permutation_peeling(&mut s, &cfg, DEFAULT_BETA)?;
        println!(
            "seed {seed}: estimate {:>7.2} from batch {:>3}, {} samples read",
            out.estimate, out.last_batch, out.samples_used
        );
    }
    Ok(())
}
