//! Offline peeling on a few graph families: the fractional matching mass
//! sits between the maximum matching and a constant multiple of it, and the
//! peeled vertices form a vertex cover.

use matchest::graph::families;
use matchest::matching::exact_mm;
use matchest::peeling::{alg_global, PeelingConfig};

fn main() -> matchest::Result<()> {
    let graphs = [
        ("path-50", families::path(50)),
        ("cycle-51", families::cycle(51)),
        ("clique-12", families::complete(12)),
        ("star-40", families::star(40)),
        ("k3,30", families::complete_bipartite(3, 30)),
    ];
    println!("{:<10} {:>4} {:>6} {:>8} {:>6} {:>8}", "graph", "MM", "cover", "sum M", "load", "covers");
    for (name, g) in &graphs {
        let cfg = PeelingConfig::for_graph(g, 2.0, 0.5);
        let r = alg_global(g, &cfg)?;
        println!(
            "{name:<10} {:>4} {:>6} {:>8.3} {:>6.3} {:>8}",
            exact_mm(g)?,
            r.cover_size,
            r.sum_m,
            r.max_load,
            r.cover.covers(g)
        );
    }
    Ok(())
}
