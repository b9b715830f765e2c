//! Accuracy of the likelihood-ratio classifier between the YES and NO
//! gadget distributions as the IID stream grows.

use matchest::hard::{build_distributions, distinguishability_experiment};

fn main() -> matchest::Result<()> {
    let (yes, no) = build_distributions(900, 2, 1, 10)?;
    let m = yes.m() as u64;
    println!("n = 900, m = {m}, {} gadgets of {} edges", yes.r, yes.gadget.m());
    for len in [m / 12, m / 4, m, 3 * m] {
        let r = distinguishability_experiment(&yes, &no, len, 400, len)?;
        println!("L = {len:>5}: accuracy {:.3} [{:.3}, {:.3}]", r.accuracy, r.ci.lo, r.ci.hi);
    }
    Ok(())
}
