//! The acceptance suite at reduced scale. Pass `full` for the pinned scale.

use matchest::acceptance::{run_acceptance, AcceptanceOptions};

fn main() -> matchest::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let report = run_acceptance(&AcceptanceOptions { seed: 1, quick: !full, ..Default::default() })?;
    for line in report.lines() {
        println!("{line}");
    }
    println!("artifact digest {}", report.digest()?);
    Ok(())
}
