//! The batching-only estimator: derive the univariate cumulant series of the
//! standardized batch estimator, build the density-correction polynomials,
//! and integrate them over the t-statistic acceptance region. Valid down to
//! K = 2, where the conditioning-based scheme is known to fail for batching.
//!
//! Run with: cargo run --release --example batching_alternative

use batchcov::*;
use nalgebra::DMatrix;

fn main() -> Result<()> {
    // f(x, y) = x + y^2 with independent standard normal coordinates
    let model = ModelSpec::polynomial(
        2,
        vec![
            PolyTerm::new(vec![1, 0], 1.0),
            PolyTerm::new(vec![0, 2], 1.0),
        ],
        vec![0.0, 0.0],
    )?;
    let sigma = DMatrix::identity(2, 2);
    let dist = DistributionSpec::std_normal(2);

    let series = gaussian_series(&model, &sigma)?;
    println!(
        "cumulant series: k12 = {}, k22 = {}, k31 = {}, k41 = {}",
        series.k12, series.k22, series.k31, series.k41
    );
    let polys = Alg2Polynomials::new(series);
    println!(
        "p1(1.0) = {:.4} (lambda x), p2(1.0) = {:.4} (-(3/2) lambda^2 (1 - x^2))\n",
        polys.p1(1.0),
        polys.p2(1.0)
    );

    println!(
        "{:>4} {:>14} {:>14} {:>7}",
        "K", "conditioning", "batching-only", "agree"
    );
    for k in [2u32, 3, 5, 10, 20] {
        let a2 = estimate_coefficient_alg2(
            Alg2Input::GaussianModel(&model, &sigma),
            k,
            CriticalValue::Alpha(0.2),
            50_000,
            404,
        )?;
        let a1 = estimate_coefficient(
            &model,
            &dist,
            k,
            CriticalValue::Alpha(0.2),
            Method::Batching,
            50_000,
            405,
        )?;
        println!(
            "{:>4} {:>14.4} {:>14.4} {:>7}",
            k,
            a1.c_hat,
            a2.c_hat,
            a1.agrees_with(&a2)
        );
    }
    println!("\nThe K = 2 disagreement is the expected failure mode of the");
    println!("conditioning scheme for batching; the batching-only estimator");
    println!("remains unbiased there.");
    Ok(())
}
