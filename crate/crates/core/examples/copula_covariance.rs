//! The lag correlation matrix behind the scenario copula, and the two ways
//! of repairing it when it is not positive definite.
//!
//! ```text
//! cargo run --example copula_covariance -- 24
//! ```

use dynreserve::covariance::{build_covariance_with, lag_correlation_matrix, min_eigenvalue};
use dynreserve::{CopulaParams, CovarianceRepair};

pub struct Summary {
    pub raw_min_eigenvalue: f64,
    pub repaired_min_eigenvalue: f64,
    pub lag1_after_repair: f64,
}

pub fn run_example(horizon: usize) -> dynreserve::Result<Summary> {
    let params = CopulaParams::default();
    let raw = lag_correlation_matrix(horizon, &params);
    let raw_min = min_eigenvalue(&raw);
    println!("T = {horizon}, theta = {}, omega = {}", params.theta, params.omega);
    println!("lag matrix first row: {:.2?}", raw.row(0).iter().take(5).collect::<Vec<_>>());
    println!("smallest eigenvalue before repair: {raw_min:.4}");

    let mut shrunk = None;
    for repair in [CovarianceRepair::ShrinkToAr1, CovarianceRepair::EigenClip] {
        let m = build_covariance_with(horizon, &params, repair)?;
        let smallest_entry = m.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{repair:?}: min eigenvalue {:.2e}, lag-1 {:.4}, smallest entry {:.4}",
            min_eigenvalue(&m),
            if horizon > 1 { m[(0, 1)] } else { 1.0 },
            smallest_entry
        );
        if repair == CovarianceRepair::ShrinkToAr1 {
            shrunk = Some(m);
        }
    }
    let m = shrunk.expect("shrink repair ran");
    Ok(Summary {
        raw_min_eigenvalue: raw_min,
        repaired_min_eigenvalue: min_eigenvalue(&m),
        lag1_after_repair: if horizon > 1 { m[(0, 1)] } else { 1.0 },
    })
}

fn main() -> dynreserve::Result<()> {
    let horizon = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(24);
    run_example(horizon).map(|_| ())
}
