//! The Edgeworth correction polynomials behind the estimators: multivariate
//! p1/p2 with cumulant tensors, the univariate Hermite reduction, and the
//! cumulant-series polynomials used by the batching-only scheme.
//!
//! Run with: cargo run --release --example edgeworth_playground

use batchcov::edgeworth::hermite;
use batchcov::tensor::{Sym3, Sym4};
use batchcov::*;
use nalgebra::DMatrix;

fn main() -> Result<()> {
    // the dependent pair (X, (X^2-1)/sqrt(2)) has nontrivial joint cumulants
    let dist = DistributionSpec::normal_and_square();
    let ctx = EdgeworthContext::new(&dist.sigma, &dist.chi3, &dist.chi4)?;
    println!("joint cumulants of (X, (X^2-1)/sqrt(2)):");
    println!(
        "  kappa(X,X,Y) = {:.4}, kappa(Y,Y,Y) = {:.4}",
        dist.chi3.get(0, 0, 1),
        dist.chi3.get(1, 1, 1)
    );
    println!(
        "  kappa(X,X,Y,Y) = {:.4}, kappa(Y,Y,Y,Y) = {:.4}\n",
        dist.chi4.get(0, 0, 1, 1),
        dist.chi4.get(1, 1, 1, 1)
    );

    for x in [[0.5, 0.5], [1.0, -1.0], [2.0, 0.0]] {
        let (p1, p2) = ctx.p1_p2(&x);
        println!("x = {x:?}: p1 = {p1:+.5}, p2 = {p2:+.5}");
    }

    // univariate reduction: p1 = (k3/6) He3, p2 = (k4/24) He4 + (k3^2/72) He6
    let sigma = DMatrix::from_element(1, 1, 1.0);
    let mut chi3 = Sym3::zeros(1);
    chi3.set(0, 0, 0, 2.0); // exponential skewness
    let mut chi4 = Sym4::zeros(1);
    chi4.set(0, 0, 0, 0, 6.0);
    let ctx1 = EdgeworthContext::new(&sigma, &chi3, &chi4)?;
    let x = 1.5;
    println!(
        "\nd = 1 with (k3, k4) = (2, 6) at x = {x}: p1 = {:.5} = (k3/6) He3 = {:.5}",
        ctx1.p1_poly(&[x]),
        2.0 / 6.0 * hermite(3, x)?
    );
    println!(
        "p2 = {:.5} = (k4/24) He4 + (k3^2/72) He6 = {:.5}",
        ctx1.p2_poly(&[x]),
        6.0 / 24.0 * hermite(4, x)? + 4.0 / 72.0 * hermite(6, x)?
    );

    // the univariate series machinery of the batching-only estimator
    let series = UnivariateCumulantSeries {
        k12: 1.0,
        k22: 2.0,
        k31: 0.0,
        k41: 0.0,
    };
    let p = Alg2Polynomials::new(series);
    println!("\nseries (k12=1, k22=2): p1(x) = x, p2(x) = -(3/2)(1-x^2):");
    for x in [0.0, 1.0, 2.0] {
        println!("  x = {x}: p1 = {:+.3}, p2 = {:+.3}", p.p1(x), p.p2(x));
    }
    Ok(())
}
