//! Reproduces the default Kalman noise parameters: a half-decade grid over
//! (q1, q2) at fixed r, scored by one-ahead RMSE on the validation partition
//! of the default synthetic experiment.
//!
//!     cargo run --release -p hmcast --example tune_kalman

use hmcast::kalman::grid_search;
use hmcast::pipeline::prepare;
use hmcast::synthetic::{default_maser_spec, generate};
use hmcast::{KalmanParams, PrepareConfig};

fn main() -> hmcast::Result<()> {
    let series = generate(&default_maser_spec())?;
    let state = prepare(&series, &PrepareConfig::default())?;
    let grid: Vec<f64> = (-24..=0).map(|e| 10f64.powf(e as f64 / 2.0)).collect();
    let r = KalmanParams::default().r;
    let (best, score) = grid_search(
        &state.normalized,
        state.split.val.clone(),
        5,
        &grid,
        &grid,
        r,
    )?;
    println!(
        "q1 = {:e}\nq2 = {:e}\nr = {:e}\nvalidation rmse = {score:.6}",
        best.q1, best.q2, best.r
    );
    Ok(())
}
