//! c/sqrt(M) fits and unbiased/biased verdicts at a few phases.

use tmsv_phase::analysis::DEFAULT_SCALING_LENGTHS;
use tmsv_phase::{scaling_study, ClassifyThresholds, ScanSettings, TmsvSource};

fn main() -> tmsv_phase::Result<()> {
    let source = TmsvSource::new(3.0)?;
    let settings = ScanSettings {
        ensemble_size: 4000,
        ..ScanSettings::default()
    };
    for theta in [0.02, 0.04, 0.1, 0.5, 0.9, 1.3] {
        let s = scaling_study(
            theta,
            source,
            &DEFAULT_SCALING_LENGTHS,
            &settings,
            &ClassifyThresholds::default(),
        )?;
        println!(
            "theta {theta:4.2}: c = {:.4}  c_crb = {:.4}  r2 = {:7.4}  {}",
            s.fit.c(),
            s.verdict.c_crb.unwrap_or(f64::NAN),
            s.fit.r_squared(),
            s.verdict.verdict
        );
    }
    Ok(())
}
