//! Analytic ground truth: closed-form K = 2 coverage-error coefficients for
//! the quadratic model psi(P) = E X + lambda (E X)^2 with standard normal
//! data, and an independent brute-force slope extractor that fits
//! coverage(n) = nominal + c/n over an n-grid.

use crate::error::{Error, Result};
use crate::model::{DistributionSpec, ModelSpec, PolyTerm};
use crate::par::child_seed;
use crate::stats::{empirical_coverage, BatchLayout, Method, Sided};
use crate::student_t::t_symmetric_coverage;

/// The K = 2 oracle model: f(x) = x + lambda x^2 with X ~ N(0, 1).
#[derive(Debug, Clone, Copy)]
pub struct K2Model {
    pub lambda: f64,
}

impl K2Model {
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec::polynomial(
            1,
            vec![
                PolyTerm::new(vec![1], 1.0),
                PolyTerm::new(vec![2], self.lambda),
            ],
            vec![0.0],
        )
        .expect("static model is well-formed")
    }

    pub fn distribution(&self) -> DistributionSpec {
        DistributionSpec::std_normal(1)
    }
}

/// Closed-form coefficient of the n^-1 coverage error at K = 2 for the given
/// method and critical value q.
pub fn k2_coefficient(model: K2Model, method: Method, q: f64) -> f64 {
    let l2 = model.lambda * model.lambda;
    let pi = std::f64::consts::PI;
    let r = 1.0 / (q * q + 1.0);
    match method {
        Method::Batching => l2 * (-q * (q * q - 1.0).powi(2) * r.powi(3) * 4.0 / pi),
        Method::Sectioning => l2 * (-q.powi(5) * r.powi(3) * 4.0 / pi + q * r.powi(2) / pi),
        Method::Sb => l2 * (-q.powi(5) * r.powi(3) * 4.0 / pi),
        Method::Sj => l2 * (-q * r * 4.0 / pi),
    }
}

/// Methods ordered by their K = 2 coefficient (most negative first). For
/// q >= 1 and lambda != 0 the order is SJ < SB < S < B <= 0, with batching
/// zero exactly at q = 1; the ordering assertion is skipped at lambda = 0
/// where all four coefficients vanish.
pub fn k2_ordering_check(lambda: f64, q: f64) -> Result<Vec<(Method, f64)>> {
    if q < 1.0 {
        return Err(Error::invalid("q", "ordering claim needs q >= 1"));
    }
    let model = K2Model { lambda };
    let mut out: Vec<(Method, f64)> = Method::ALL
        .iter()
        .map(|&m| (m, k2_coefficient(model, m, q)))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    if lambda != 0.0 {
        let order: Vec<Method> = out.iter().map(|x| x.0).collect();
        if order != [Method::Sj, Method::Sb, Method::Sectioning, Method::Batching] {
            return Err(Error::invalid(
                "ordering",
                format!("expected SJ < SB < S < B, got {order:?}"),
            ));
        }
        if out[3].1 > 1e-15 {
            return Err(Error::invalid(
                "ordering",
                "batching coefficient must be <= 0",
            ));
        }
    }
    Ok(out)
}

/// Weighted least-squares slope of (coverage - nominal) against 1/n.
#[derive(Debug, Clone)]
pub struct SlopeEstimate {
    pub slope: f64,
    /// propagated Monte Carlo standard error of the slope
    pub se: f64,
    pub points: Vec<SlopePoint>,
}

#[derive(Debug, Clone)]
pub struct SlopePoint {
    pub n: u32,
    pub coverage: f64,
    pub mc_halfwidth: f64,
}

/// Brute-force slope extractor: runs the coverage harness on each grid point
/// and fits a weighted line (with intercept, so a two-point grid reduces to a
/// difference quotient) of coverage error against 1/n.
///
/// When `expected_c` is supplied, the replication budget is checked against
/// the precondition that the Monte Carlo half-width at the largest n stays
/// below |expected_c| / (5 max n).
#[allow(clippy::too_many_arguments)]
pub fn coverage_slope(
    dist: &DistributionSpec,
    model: &ModelSpec,
    k: u32,
    method: Method,
    alpha: f64,
    n_grid: &[u32],
    reps: u64,
    seed: u64,
    expected_c: Option<f64>,
) -> Result<SlopeEstimate> {
    if n_grid.len() < 2 {
        return Err(Error::invalid("n_grid", "need at least two grid points"));
    }
    let max_n = *n_grid.iter().max().expect("nonempty") as f64;
    if let Some(c) = expected_c {
        // half-width 1.96 sqrt(p(1-p)/reps) must stay below |c|/(5 max n)
        let target = c.abs() / (5.0 * max_n);
        let p = 1.0 - alpha;
        let required = (1.96 * 1.96 * p * (1.0 - p) / (target * target)).ceil() as u64;
        if reps < required {
            return Err(Error::InsufficientReps { required });
        }
    }
    let nominal = 1.0 - alpha;
    let mut xs = Vec::with_capacity(n_grid.len());
    let mut ys = Vec::with_capacity(n_grid.len());
    let mut wts = Vec::with_capacity(n_grid.len());
    let mut points = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let layout = BatchLayout::new(k, n)?;
        let rep = empirical_coverage(
            dist,
            model,
            layout,
            method,
            alpha,
            Sided::TwoSidedSymmetric,
            reps,
            child_seed(seed, i as u64),
        )?;
        let var = (rep.coverage * (1.0 - rep.coverage) / reps as f64).max(1e-300);
        xs.push(1.0 / n as f64);
        ys.push(rep.coverage - nominal);
        wts.push(1.0 / var);
        points.push(SlopePoint {
            n,
            coverage: rep.coverage,
            mc_halfwidth: rep.mc_halfwidth,
        });
    }

    let sw: f64 = wts.iter().sum();
    let xbar = xs.iter().zip(&wts).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar = ys.iter().zip(&wts).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..xs.len() {
        sxx += wts[i] * (xs[i] - xbar) * (xs[i] - xbar);
        sxy += wts[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    let slope = sxy / sxx;
    let se = (1.0 / sxx).sqrt();
    Ok(SlopeEstimate { slope, se, points })
}

/// Theoretical symmetric t coverage at the given critical value; exposed here
/// because slope checks compare against nominal = P(-q <= t_{K-1} <= q).
pub fn nominal_coverage(k: u32, q: f64) -> f64 {
    t_symmetric_coverage(k - 1, q)
}
