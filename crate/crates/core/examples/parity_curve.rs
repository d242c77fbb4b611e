//! Parity signal and even-outcome probability across the phase range.
//!
//! `cargo run --example parity_curve -- [nbar]`

use std::f64::consts::FRAC_PI_2;

use tmsv_phase::TmsvSource;

fn main() -> tmsv_phase::Result<()> {
    let nbar = std::env::args()
        .nth(1)
        .map_or(3.0, |s| s.parse().expect("nbar"));
    let source = TmsvSource::new(nbar)?;
    println!(
        "{:>8} {:>10} {:>10} {:>10}",
        "theta", "parity", "p_even", "c_crb"
    );
    for k in 0..=20 {
        let theta = FRAC_PI_2 * k as f64 / 20.0;
        let crb = source
            .crb_c(theta)
            .map_or("-".to_string(), |c| format!("{c:.4}"));
        println!(
            "{theta:8.4} {:10.6} {:10.6} {crb:>10}",
            source.parity_expectation(theta),
            source.even_probability(theta)
        );
    }
    println!(
        "shot noise c = {:.4}, Heisenberg c = {:.4}",
        source.shot_noise_c(),
        source.heisenberg_c()
    );
    Ok(())
}
