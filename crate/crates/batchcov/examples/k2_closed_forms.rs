//! The K = 2 analytic ground truth for f(x) = x + lambda x^2 with standard
//! normal data: closed-form coefficients, the method ordering, agreement of
//! the simulation scheme, and an independent brute-force slope check.
//!
//! Run with: cargo run --release --example k2_closed_forms

use batchcov::*;

fn main() -> Result<()> {
    let k2 = K2Model { lambda: 1.0 };
    let q = 1.0; // the 75th percentile of t_1, i.e. alpha = 0.5

    println!("closed forms at lambda = 1, q = 1 (coefficient of 1/n):");
    for (method, value) in k2_ordering_check(1.0, q)? {
        println!("  {:<11} {value:+.6}", method.tag());
    }
    println!("ordering SJ < SB < S < B <= 0 verified.\n");

    for method in [Method::Sectioning, Method::Sb, Method::Sj] {
        let est = estimate_coefficient(
            &k2.model_spec(),
            &k2.distribution(),
            2,
            CriticalValue::Q(q),
            method,
            50_000,
            11,
        )?;
        println!(
            "simulated {:<11} {:+.5} +/- {:.5}   closed form {:+.5}",
            method.tag(),
            est.c_hat,
            est.halfwidth95,
            k2_coefficient(k2, method, q)
        );
    }

    // brute-force slope for the sectioned jackknife (largest coefficient)
    let slope = coverage_slope(
        &k2.distribution(),
        &k2.model_spec(),
        2,
        Method::Sj,
        0.5,
        &[50, 200],
        300_000,
        13,
        None,
    )?;
    println!(
        "\nbrute-force SJ slope over n in {{50, 200}}: {:+.4} +/- {:.4} (truth {:+.4})",
        slope.slope,
        slope.se,
        k2_coefficient(k2, Method::Sj, q)
    );
    Ok(())
}
