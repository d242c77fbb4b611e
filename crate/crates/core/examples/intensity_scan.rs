//! Fitted c against the Cramér-Rao, shot-noise and Heisenberg baselines
//! for several mean photon numbers.

use tmsv_phase::analysis::DEFAULT_SCALING_LENGTHS;
use tmsv_phase::{scan_intensity, ClassifyThresholds, ScanSettings};

fn main() -> tmsv_phase::Result<()> {
    let settings = ScanSettings {
        ensemble_size: 2000,
        ..ScanSettings::default()
    };
    let nbars = [1.0, 2.0, 3.0, 5.0, 7.0, 10.0];
    for theta in [0.1, 0.7] {
        println!("theta = {theta}");
        let rows = scan_intensity(
            theta,
            &nbars,
            &DEFAULT_SCALING_LENGTHS,
            &settings,
            &ClassifyThresholds::default(),
        )?;
        for r in rows {
            println!(
                "  nbar {:4.1}: c {:.4}  crb {:.4}  sn {:.4}  hl {:.4}",
                r.nbar,
                r.c_tmsv,
                r.c_crb.unwrap_or(f64::NAN),
                r.c_sn,
                r.c_hl
            );
        }
    }
    Ok(())
}
