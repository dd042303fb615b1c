//! Minimal end-to-end completion run: build a smooth synthetic tensor, hide
//! half of its entries behind a seeded mask, recover it with the default
//! completion configuration, and print the recovery quality.
//!
//! ```sh
//! cargo run --release -p ffmtr-core --example complete_demo
//! ```

use ffmtr_core::ffm::ModePairWeights;
use ffmtr_core::io::gen_mask;
use ffmtr_core::metrics::rse;
use ffmtr_core::solvers::{ffmtc_solve, TcConfig};
use ffmtr_core::tensor::DenseTensor;

fn main() -> Result<(), ffmtr_core::Error> {
    // A separable (rank-1) smooth tensor, normalized to unit peak — the
    // scale the default solver parameters are tuned for.
    let mut truth = DenseTensor::from_fn(&[20, 20, 20], |idx| {
        (1.0 + (idx[0] as f64 / 3.0).sin())
            * (1.0 + (idx[1] as f64 / 4.0).cos())
            * (1.0 + idx[2] as f64 / 19.0)
    })?;
    let peak = truth.max_abs();
    for v in truth.data_mut() {
        *v /= peak;
    }

    let mask = gen_mask(truth.dims(), 0.5, 7)?; // keep 50% of entries, seed 7
    let observed = truth.project_mask(&mask)?; // unobserved entries are zero
    let cfg = TcConfig::new(ModePairWeights::uniform(3)?); // all defaults
    let (completed, report) = ffmtc_solve(&observed, &mask, &cfg)?;
    println!(
        "rse {:.3e} after {} iterations ({})",
        rse(&truth, &completed)?,
        report.iterations,
        report.terminated_by,
    );
    Ok(())
}
