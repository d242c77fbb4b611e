//! Posterior over the phase for records with decreasing even counts.

use tmsv_phase::{LikelihoodTable, MeasurementRecord, PhaseGrid, TmsvSource};

fn main() -> tmsv_phase::Result<()> {
    let table = LikelihoodTable::new(TmsvSource::new(3.0)?, PhaseGrid::default());
    for even in [200, 175, 150] {
        let post = table.posterior(&MeasurementRecord::new(even, 200)?);
        let map = post.map_estimate();
        let (lo, hi) = post.credible_interval(0.68)?;
        println!(
            "m = {even}/200: MAP {:.4}, mean {:.4}, 68% interval [{:.4}, {:.4}], peak density {:.2}",
            map.value().radians(),
            post.mean(),
            lo.radians(),
            hi.radians(),
            post.density_at(map.grid_index())
        );
    }
    Ok(())
}
