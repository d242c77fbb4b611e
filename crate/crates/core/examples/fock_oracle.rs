//! Photon-count distribution at one output port from Wigner rotation
//! matrices, checked against the closed-form even probability.

use tmsv_phase::fock_oracle::even_probability_via_fock;
use tmsv_phase::{photon_count_distribution, wigner_d, RotationIndex, TmsvSource};

fn main() -> tmsv_phase::Result<()> {
    let d = wigner_d(RotationIndex::new(2, 1, 0)?, 0.7);
    println!("d^2_(1,0)(0.7) = {d:.12}");

    let source = TmsvSource::new(3.0)?;
    let dist = photon_count_distribution(&source, 0.4, 1e-8)?;
    println!(
        "P(n) at theta = 0.4 (truncated mass {:.1e}):",
        dist.truncation_mass()
    );
    for (n, p) in dist.iter().take(10) {
        println!("  n = {n:>2}: {p:.6}");
    }
    for theta in [0.0, 0.3, 0.9, 1.5] {
        let fock = even_probability_via_fock(&source, theta, 1e-8)?;
        println!(
            "theta {theta}: P_even fock {fock:.10}  closed {:.10}",
            source.even_probability(theta)
        );
    }
    Ok(())
}
