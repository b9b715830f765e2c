//! The padded instance pairs: same degree sequence and the same k-level
//! degrees, but maximum matchings far apart.

use matchest::hard::{build_pair, find_degree_bijection, verify_indistinguishable};
use matchest::matching::exact_mm;

fn main() -> matchest::Result<()> {
    for (c, k) in [(4, 1), (4, 2), (6, 2)] {
        let pair = build_pair(c, k)?;
        pair.check_witnesses()?;
        let bijection = find_degree_bijection(&pair.g, &pair.h, k)?.is_ok();
        println!(
            "c = {c}, k = {k}: n = {}, m = {}, MM(G) = {}, MM(H) = {}, level-{k} bijection found: {bijection}",
            pair.g.n(),
            pair.g.m(),
            exact_mm(&pair.g)?,
            exact_mm(&pair.h)?
        );
        for t in &pair.trace {
            println!("  level {}: {} high vertices of degree {}, {} low of degree {}", t.level, t.n_h, t.d_h, t.n_l, t.d_l);
        }
    }
    let pair = build_pair(4, 1)?;
    let report = verify_indistinguishable(&pair.g, &pair.h, 2)?;
    println!("subgraph counts up to 2 edges equal: {}", report.all_equal);
    Ok(())
}
