//! Lifting the base pair through a Cayley graph of high girth. Locally the
//! lifts look like trees, so small subgraph counts agree, while the
//! matching sizes scale with the group order.

use matchest::hard::group::default_catalog;
use matchest::hard::{build_base_pair, find_high_girth_generators, girth, lift_with_girth, verify_indistinguishable};
use matchest::matching::exact_mm;

fn main() -> matchest::Result<()> {
    let (g, h) = build_base_pair(2)?;
    let Some(group) = find_high_girth_generators(g.m(), 6, 2000, &default_catalog(), 1) else {
        println!("no group in the catalog reaches girth 6");
        return Ok(());
    };
    println!("group {} of order {} with {} generators", group.name, group.order, group.generators.len());
    let lg = lift_with_girth(&g, &group, 6, 50, 2)?.expect("lift of G");
    let lh = lift_with_girth(&h, &group, 6, 50, 3)?.expect("lift of H");
    for (name, base, lift) in [("G", &g, &lg), ("H", &h, &lh)] {
        println!(
            "{name}: base MM {}, lift n = {}, MM {}, girth {:?}",
            exact_mm(base)?,
            lift.lifted.n(),
            exact_mm(&lift.lifted)?,
            girth(&lift.lifted)
        );
    }
    let report = verify_indistinguishable(&lg.lifted, &lh.lifted, 2)?;
    for row in &report.rows {
        println!("  {:<24} {:>10} {:>10}", row.pattern, row.count_g, row.count_h);
    }
    Ok(())
}
