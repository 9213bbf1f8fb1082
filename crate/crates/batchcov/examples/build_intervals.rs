//! Constructs the four batching-family confidence intervals on one dataset
//! and shows the coverage identity between intervals and pivots.
//!
//! Run with: cargo run --release --example build_intervals

use batchcov::stats::Sided;
use batchcov::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> Result<()> {
    // target psi = f(E X) for f(x) = x + x^2, X ~ N(0, 1), so psi0 = 0
    let model = ModelSpec::polynomial(
        1,
        vec![PolyTerm::new(vec![1], 1.0), PolyTerm::new(vec![2], 1.0)],
        vec![0.0],
    )?;
    let layout = BatchLayout::new(8, 25)?;
    let mut rng = par::substream(2024, 0);
    let data: Vec<f64> = (0..layout.total())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();

    println!(
        "K = {}, n = {}, alpha = 0.10, psi0 = {}",
        layout.k, layout.n, model.psi0
    );
    println!(
        "{:<11} {:>9} {:>9} {:>9} {:>9}  covers",
        "method", "center", "width", "lower", "upper"
    );
    let t_crit = stats::critical_value(layout.k, 0.10, Sided::TwoSidedSymmetric)?;
    for method in Method::ALL {
        let iv = confidence_interval(
            &data,
            1,
            layout,
            &model,
            method,
            0.10,
            Sided::TwoSidedSymmetric,
        )?;
        let w = statistic(&data, 1, layout, &model, method, model.psi0)?;
        // the coverage event is exactly |W| <= t_{K-1, alpha/2}
        assert_eq!(iv.covers(model.psi0), w.value.abs() <= t_crit);
        println!(
            "{:<11} {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {}",
            method.tag(),
            iv.center,
            iv.half_width,
            iv.lower,
            iv.upper,
            iv.covers(model.psi0)
        );
    }

    // one-sided variant
    let iv = confidence_interval(
        &data,
        1,
        layout,
        &model,
        Method::Sj,
        0.05,
        Sided::LowerOneSided,
    )?;
    println!("\nSJ lower one-sided 95%: (-inf, {:.4}]", iv.upper);
    Ok(())
}
