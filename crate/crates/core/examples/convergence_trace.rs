//! Running parity of one simulated record converging on the expectation.

use tmsv_phase::{parity_trace, RecordConfig, TmsvSource};

fn main() -> tmsv_phase::Result<()> {
    let source = TmsvSource::new(3.0)?;
    let config = RecordConfig::new(0.1, source, 10_000, 42)?;
    let trace = parity_trace(&config);
    let target = source.parity_expectation(0.1);
    for (k, value) in trace
        .iter()
        .filter(|(k, _)| k.is_power_of_two() || *k == 10_000)
    {
        println!("k = {k:>6}  running parity = {value:.5}  (target {target:.5})");
    }
    Ok(())
}
