//! A miniature of the theoretical-vs-actual coverage figure: for each K the
//! coefficient-based prediction (nominal + c/n) is printed next to the
//! measured coverage.
//!
//! Run with: cargo run --release --example k_sweep_figure

use batchcov::stats::Sided;
use batchcov::*;

fn main() -> Result<()> {
    let model = ModelSpec::polynomial(
        1,
        vec![PolyTerm::new(vec![1], 1.0), PolyTerm::new(vec![2], 1.0)],
        vec![0.0],
    )?;
    let dist = DistributionSpec::std_normal(1);
    let n = 30;
    let alpha = 0.2;

    println!(
        "f(x) = x + x^2, X ~ N(0,1), n = {n}, nominal {:.0}%\n",
        100.0 * (1.0 - alpha)
    );
    println!(
        "{:>4} {:>11} {:>12} {:>12} {:>8}",
        "K", "method", "theoretical", "empirical", "|diff|"
    );
    for k in [5u32, 10, 20, 30] {
        let reports = empirical_coverage_multi(
            &dist,
            &model,
            BatchLayout::new(k, n)?,
            &Method::ALL,
            alpha,
            Sided::TwoSidedSymmetric,
            50_000,
            800 + k as u64,
        )?;
        for r in &reports {
            let est = estimate_coefficient(
                &model,
                &dist,
                k,
                CriticalValue::Alpha(alpha),
                r.method,
                20_000,
                900 + k as u64,
            )?;
            let theo = theoretical_coverage(1.0 - alpha, est.c_hat, n);
            println!(
                "{:>4} {:>11} {:>12.4} {:>12.4} {:>8.4}",
                k,
                r.method.tag(),
                theo,
                r.coverage,
                (theo - r.coverage).abs()
            );
        }
        println!();
    }
    Ok(())
}
