//! Bias and spread over a coarse phase grid at several record lengths.

use tmsv_phase::{scan_bias, Phase, ScanSettings, TmsvSource};

fn main() -> tmsv_phase::Result<()> {
    let thetas: Vec<Phase> = [0.02, 0.1, 0.4, 0.9, 1.3, 1.55]
        .into_iter()
        .map(Phase::from)
        .collect();
    let settings = ScanSettings {
        ensemble_size: 2000,
        ..ScanSettings::default()
    };
    let rows = scan_bias(
        &thetas,
        TmsvSource::new(3.0)?,
        &[100, 1000, 10_000],
        &settings,
    )?;
    println!(
        "{:>6} {:>6} {:>9} {:>9} {:>9}",
        "theta", "M", "mean", "std", "bias"
    );
    for r in rows {
        println!(
            "{:6.2} {:6} {:9.5} {:9.5} {:9.5}",
            r.theta.radians(),
            r.record_length,
            r.mean_phi,
            r.std_phi,
            r.bias
        );
    }
    Ok(())
}
