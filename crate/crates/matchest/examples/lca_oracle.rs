//! Local queries against one consistent matching. Every query rebuilds its
//! randomness from the master seed, so separate edge and vertex queries
//! agree without shared state.

use matchest::graph::families;
use matchest::lca::{oracle_all_edges, oracle_edge, oracle_vertex, OracleConfig};
use matchest::matching::exact_mm;

fn main() -> matchest::Result<()> {
    let g = families::circulant(300, &[1, 2, 5]);
    let cfg = OracleConfig::for_graph(&g, 7).with_lambda(0.2);
    let all = oracle_all_edges(&g, &cfg)?;
    println!(
        "n = {}, d = {}: {} matched edges (MM = {}), valid matching: {}, max probes {} of budget {:.0}",
        g.n(),
        g.d(),
        all.matching.len(),
        exact_mm(&g)?,
        all.is_matching,
        all.max_probes,
        cfg.query_budget(g.n())
    );
    let e = all.matching.first().copied().unwrap_or(0);
    let (u, v) = g.endpoints(e);
    let a = oracle_edge(e, &g, &cfg)?;
    println!("edge {e} = ({u}, {v}): in matching {} after {} probes", a.answer, a.probes);
    for w in [u, v, (u + 150) % g.n()] {
        let a = oracle_vertex(w, &g, &cfg)?;
        println!("vertex {w}: matched {} after {} probes", a.answer, a.probes);
    }
    Ok(())
}
