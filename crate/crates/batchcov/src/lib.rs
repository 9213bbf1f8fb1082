//! Batching-family confidence intervals for smooth-function estimands and
//! unbiased Monte Carlo estimation of their n^-1 coverage-error coefficients.
//!
//! The library covers:
//! * the four interval constructions (batching, sectioning, SB, sectioned
//!   jackknife) and their studentized pivots ([`stats`]);
//! * multivariate Edgeworth correction polynomials and the univariate series
//!   machinery ([`edgeworth`]);
//! * coefficient estimation by the conditioning-based simulation scheme (all
//!   methods) and the batching-only scheme ([`coeff`]);
//! * closed-form K = 2 coefficients and a brute-force coverage-slope oracle
//!   ([`oracle`]);
//! * dependent-data variants: gap batching and regenerative cycles with the
//!   ratio estimand ([`dependent`]);
//! * a config-driven experiment runner behind the `batchcov` binary
//!   ([`config`], [`runner`]).
//!
//! Estimates are deterministic for a fixed seed regardless of worker count:
//! each replication owns an RNG substream and reductions run in fixed order
//! ([`par`]).
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::type_complexity)]

pub mod coeff;
pub mod config;
pub mod dependent;
pub mod edgeworth;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod runner;
pub mod stats;
pub mod student_t;
pub mod tensor;

pub use coeff::{
    estimate_coefficient, estimate_coefficient_alg2, gaussian_series, theoretical_coverage,
    Alg2Input, Algorithm, CoefficientEstimate, ConditionedProblem, CriticalValue,
    SchemeDecomposition,
};
pub use dependent::{
    dependent_coverage, gap_batches, ratio_model, regenerative_pairs, Approach, Chain, ChainSpec,
    RegenerativePair,
};
pub use edgeworth::{Alg2Polynomials, EdgeworthContext, UnivariateCumulantSeries};
pub use error::{Error, Result};
pub use model::{
    cumulants_from_samples, derivative_tensors, DistributionSpec, Marginal, ModelSpec, PolyTerm,
};
pub use oracle::{coverage_slope, k2_coefficient, k2_ordering_check, K2Model, SlopeEstimate};
pub use stats::{
    batch_estimates, confidence_interval, empirical_coverage, empirical_coverage_multi, statistic,
    BatchLayout, CoverageReport, IntervalResult, Method, Sided, StatisticValue,
};
pub use student_t::{t_cdf, t_quantile, t_symmetric_coverage};
