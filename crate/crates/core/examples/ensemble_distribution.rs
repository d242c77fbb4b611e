//! Distribution of MAP estimates over an ensemble of records.

use tmsv_phase::{run_ensemble, EnsembleConfig, TmsvSource};

fn main() -> tmsv_phase::Result<()> {
    let source = TmsvSource::new(3.0)?;
    let config = EnsembleConfig::new(0.1, source, 1000, 10_000, 42)?;
    let ensemble = run_ensemble(&config)?;
    println!(
        "mean {:.5}  std {:.5}  bias {:.5}  CRB {:.5}",
        ensemble.mean(),
        ensemble.std_dev(),
        ensemble.bias(),
        source.crb_sensitivity(0.1, 1000)?
    );

    let (lo, width, bins) = (0.07, 0.004, 15);
    let mut counts = vec![0usize; bins];
    for &x in ensemble.estimates() {
        let b = ((x - lo) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    for (i, n) in counts.iter().enumerate() {
        println!(
            "{:.3} {:>5} {}",
            lo + width * i as f64,
            n,
            "#".repeat(n / 40)
        );
    }
    Ok(())
}
