//! Randomized greedy on infinite trees: the exploration size from the root
//! edge, compared with the closed form, and its growth with `d` when the
//! root has `eps d` children.

use matchest::greedy::{closed_form_t, scaling_exponent, simulate_root, tree_size_summary, RootSpec};
use matchest::stats::simpson;

fn main() -> matchest::Result<()> {
    for d in [4u32, 8, 16] {
        let s = tree_size_summary(&simulate_root(&RootSpec::hd(d), 4000, d as u64)?);
        let mean = simpson(|l| closed_form_t(l, d as f64), 0.0, 1.0, 1000);
        println!("H^{d}: mean tree size {:.2} +- {:.2}, integral of t(lambda) {mean:.2}", s.mean, s.std_err);
    }
    let sc = scaling_exponent(&[16, 32, 64], 0.125, 500, 9)?;
    for (d, m) in sc.ds.iter().zip(&sc.means) {
        println!("H^({d}, 1/8): mean tree size {m:.1}");
    }
    println!("fitted growth exponent {:.2}", sc.exponent);
    Ok(())
}
