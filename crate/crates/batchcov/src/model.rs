//! Estimand and sampling-distribution specifications.
//!
//! A model is a smooth function `f` of a mean vector together with its
//! derivative tensors at the true mean: `u = grad f`, `v = hess f / 2`,
//! `w = third derivative / 6`. Polynomial targets get exact tensors by
//! analytic differentiation; opaque targets carry user-supplied tensors.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{dot, Sym2, Sym3, Sym4};

const SYMMETRY_TOL: f64 = 1e-9;

/// One monomial of a polynomial target: `coef * prod_i x_i^exps[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub exps: Vec<u32>,
    pub coef: f64,
}

impl PolyTerm {
    pub fn new(exps: Vec<u32>, coef: f64) -> Self {
        PolyTerm { exps, coef }
    }
}

/// Target function: either an explicit polynomial or an opaque callback with
/// caller-supplied derivative tensors.
#[derive(Clone)]
pub enum Target {
    Polynomial(Vec<PolyTerm>),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Polynomial(terms) => f.debug_tuple("Polynomial").field(terms).finish(),
            Target::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Smooth-function model: target f, expansion point, derivative tensors.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub d: usize,
    pub target: Target,
    pub mean_point: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Sym2,
    pub w: Sym3,
    pub psi0: f64,
}

pub fn poly_eval(terms: &[PolyTerm], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for t in terms {
        let mut m = t.coef;
        for (xi, &e) in x.iter().zip(&t.exps) {
            for _ in 0..e {
                m *= xi;
            }
        }
        acc += m;
    }
    acc
}

/// Exact first/second/third derivative tensors of a polynomial at `mean_point`,
/// already scaled to (grad f, hess f / 2, third / 6).
pub fn derivative_tensors(
    terms: &[PolyTerm],
    mean_point: &[f64],
) -> Result<(Vec<f64>, Sym2, Sym3)> {
    let d = mean_point.len();
    for t in terms {
        if t.exps.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "exponent vector has length {}, mean point has length {}",
                t.exps.len(),
                d
            )));
        }
    }
    let mut u = vec![0.0; d];
    let mut v = Sym2::zeros(d);
    let mut w = Sym3::zeros(d);

    // derivative of a single monomial along an index sequence
    fn monomial_deriv(exps: &[u32], coef: f64, wrt: &[usize], x: &[f64]) -> f64 {
        let mut e: Vec<i64> = exps.iter().map(|&v| v as i64).collect();
        let mut c = coef;
        for &i in wrt {
            if e[i] == 0 {
                return 0.0;
            }
            c *= e[i] as f64;
            e[i] -= 1;
        }
        let mut val = c;
        for (xi, &ei) in x.iter().zip(&e) {
            for _ in 0..ei {
                val *= xi;
            }
        }
        val
    }

    for t in terms {
        for i in 0..d {
            u[i] += monomial_deriv(&t.exps, t.coef, &[i], mean_point);
            for j in 0..d {
                let h = monomial_deriv(&t.exps, t.coef, &[i, j], mean_point);
                if h != 0.0 {
                    v.set(i, j, v.get(i, j) + h / 2.0);
                }
                for k in 0..d {
                    let g = monomial_deriv(&t.exps, t.coef, &[i, j, k], mean_point);
                    if g != 0.0 {
                        w.set(i, j, k, w.get(i, j, k) + g / 6.0);
                    }
                }
            }
        }
    }
    Ok((u, v, w))
}

impl ModelSpec {
    pub fn polynomial(d: usize, terms: Vec<PolyTerm>, mean_point: Vec<f64>) -> Result<Self> {
        if mean_point.len() != d {
            return Err(Error::DimensionMismatch(
                "mean_point length must equal d".into(),
            ));
        }
        let (u, v, w) = derivative_tensors(&terms, &mean_point)?;
        let psi0 = poly_eval(&terms, &mean_point);
        Ok(ModelSpec {
            d,
            target: Target::Polynomial(terms),
            mean_point,
            u,
            v,
            w,
            psi0,
        })
    }

    pub fn custom(
        d: usize,
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        mean_point: Vec<f64>,
        u: Vec<f64>,
        v: Sym2,
        w: Sym3,
    ) -> Result<Self> {
        if mean_point.len() != d || u.len() != d || v.d != d || w.d != d {
            return Err(Error::DimensionMismatch(
                "model tensors must all have dimension d".into(),
            ));
        }
        v.check_symmetric(SYMMETRY_TOL)?;
        w.check_symmetric(SYMMETRY_TOL)?;
        let psi0 = f(&mean_point);
        Ok(ModelSpec {
            d,
            target: Target::Custom(f),
            mean_point,
            u,
            v,
            w,
            psi0,
        })
    }

    /// A non-polynomial two-dimensional target: f(x, y) = sin(x + y^2) with
    /// third derivatives computed analytically at the origin.
    pub fn sin_x_plus_y2() -> Self {
        let f = Arc::new(|x: &[f64]| (x[0] + x[1] * x[1]).sin());
        let mut v = Sym2::zeros(2);
        v.set(1, 1, 1.0); // f_yy(0,0) = 2, halved
        let mut w = Sym3::zeros(2);
        w.set_sym(0, 0, 0, -1.0 / 6.0); // f_xxx(0,0) = -1, divided by 6
        ModelSpec::custom(2, f, vec![0.0, 0.0], vec![1.0, 0.0], v, w)
            .expect("static tensors are symmetric")
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.target {
            Target::Polynomial(terms) => poly_eval(terms, x),
            Target::Custom(f) => f(x),
        }
    }

    /// Gradient norm at the expansion point.
    pub fn grad_norm(&self) -> f64 {
        dot(&self.u, &self.u).sqrt()
    }
}

/// Independent marginal kinds with known cumulants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    StdNormal,
    /// exp(1) - 1: kappa_2 = 1, kappa_3 = 2, kappa_4 = 6
    ExpCentered,
    /// (chi^2_1 - 1)/sqrt(2): kappa_2 = 1, kappa_3 = 2 sqrt(2), kappa_4 = 12
    Chisq1Centered,
}

impl Marginal {
    fn cumulants(&self) -> (f64, f64, f64) {
        match self {
            Marginal::StdNormal => (1.0, 0.0, 0.0),
            Marginal::ExpCentered => (1.0, 2.0, 6.0),
            Marginal::Chisq1Centered => (1.0, 2.0 * std::f64::consts::SQRT_2, 12.0),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Marginal::StdNormal => rng.sample(StandardNormal),
            Marginal::ExpCentered => {
                let e: f64 = Exp::new(1.0).unwrap().sample(rng);
                e - 1.0
            }
            Marginal::Chisq1Centered => {
                let z: f64 = rng.sample(StandardNormal);
                (z * z - 1.0) / std::f64::consts::SQRT_2
            }
        }
    }
}

#[derive(Clone)]
enum Sampler {
    /// mean + L z with L the Cholesky factor of sigma
    Normal {
        chol: DMatrix<f64>,
    },
    Product(Vec<Marginal>),
    /// (X, (X^2 - 1)/sqrt(2)) with X standard normal
    NormalAndSquare,
    /// cumulants only; drawing is not possible
    None,
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Normal { .. } => f.write_str("Normal"),
            Sampler::Product(m) => f.debug_tuple("Product").field(m).finish(),
            Sampler::NormalAndSquare => f.write_str("NormalAndSquare"),
            Sampler::None => f.write_str("None"),
        }
    }
}

/// Sampling distribution: a sampler plus mean, covariance and joint cumulant
/// tensors of order 3 and 4.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    pub d: usize,
    pub mean: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub chi3: Sym3,
    pub chi4: Sym4,
    /// true when the cumulants were estimated from samples rather than declared
    pub approximate: bool,
    sampler: Sampler,
}

impl DistributionSpec {
    pub fn normal(mean: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        check_spd(&sigma, d)?;
        let chol = Cholesky::new(sigma.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .l();
        Ok(DistributionSpec {
            d,
            mean,
            sigma,
            chi3: Sym3::zeros(d),
            chi4: Sym4::zeros(d),
            approximate: false,
            sampler: Sampler::Normal { chol },
        })
    }

    pub fn std_normal(d: usize) -> Self {
        DistributionSpec::normal(vec![0.0; d], DMatrix::identity(d, d))
            .expect("identity covariance is SPD")
    }

    /// Independent coordinates with the given marginals (zero mean, unit variance each).
    pub fn product(marginals: Vec<Marginal>) -> Self {
        let d = marginals.len();
        let mut chi3 = Sym3::zeros(d);
        let mut chi4 = Sym4::zeros(d);
        for (i, m) in marginals.iter().enumerate() {
            let (_, k3, k4) = m.cumulants();
            chi3.set(i, i, i, k3);
            chi4.set(i, i, i, i, k4);
        }
        DistributionSpec {
            d,
            mean: vec![0.0; d],
            sigma: DMatrix::identity(d, d),
            chi3,
            chi4,
            approximate: false,
            sampler: Sampler::Product(marginals),
        }
    }

    pub fn exp_centered() -> Self {
        DistributionSpec::product(vec![Marginal::ExpCentered])
    }

    pub fn chisq1_centered() -> Self {
        DistributionSpec::product(vec![Marginal::Chisq1Centered])
    }

    /// The dependent pair (X, (X^2 - 1)/sqrt(2)) with X standard normal.
    /// Nonzero joint cumulants: kappa(X,X,Y) = sqrt(2), kappa(Y,Y,Y) = 2 sqrt(2),
    /// kappa(X,X,Y,Y) = 4, kappa(Y,Y,Y,Y) = 12.
    pub fn normal_and_square() -> Self {
        let s2 = std::f64::consts::SQRT_2;
        let mut chi3 = Sym3::zeros(2);
        chi3.set_sym(0, 0, 1, s2);
        chi3.set(1, 1, 1, 2.0 * s2);
        let mut chi4 = Sym4::zeros(2);
        chi4.set_sym(0, 0, 1, 1, 4.0);
        chi4.set(1, 1, 1, 1, 12.0);
        DistributionSpec {
            d: 2,
            mean: vec![0.0, 0.0],
            sigma: DMatrix::identity(2, 2),
            chi3,
            chi4,
            approximate: false,
            sampler: Sampler::NormalAndSquare,
        }
    }

    /// Declared cumulants without a sampler; usable for coefficient estimation
    /// but not for coverage experiments.
    pub fn from_cumulants(
        mean: Vec<f64>,
        sigma: DMatrix<f64>,
        chi3: Sym3,
        chi4: Sym4,
        approximate: bool,
    ) -> Result<Self> {
        let d = mean.len();
        check_spd(&sigma, d)?;
        if chi3.d != d || chi4.d != d {
            return Err(Error::DimensionMismatch(
                "cumulant tensors must have dimension d".into(),
            ));
        }
        chi3.check_symmetric(SYMMETRY_TOL)?;
        chi4.check_symmetric(SYMMETRY_TOL)?;
        Ok(DistributionSpec {
            d,
            mean,
            sigma,
            chi3,
            chi4,
            approximate,
            sampler: Sampler::None,
        })
    }

    /// Attach explicit cumulants to a sampling distribution (overriding the
    /// defaults), e.g. when the sampler is a custom transform.
    pub fn with_cumulants(mut self, sigma: DMatrix<f64>, chi3: Sym3, chi4: Sym4) -> Result<Self> {
        check_spd(&sigma, self.d)?;
        chi3.check_symmetric(SYMMETRY_TOL)?;
        chi4.check_symmetric(SYMMETRY_TOL)?;
        if let Sampler::Normal { .. } = self.sampler {
            let chol = Cholesky::new(sigma.clone())
                .ok_or(Error::NotPositiveDefinite)?
                .l();
            self.sampler = Sampler::Normal { chol };
        }
        self.sigma = sigma;
        self.chi3 = chi3;
        self.chi4 = chi4;
        Ok(self)
    }

    pub fn can_sample(&self) -> bool {
        !matches!(self.sampler, Sampler::None)
    }

    /// Draws one vector into `out` (length d).
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        match &self.sampler {
            Sampler::Normal { chol } => {
                // out = mean + L z, computed without temporaries
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
                for i in (0..self.d).rev() {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += chol[(i, j)] * out[j];
                    }
                    out[i] = self.mean[i] + acc;
                }
            }
            Sampler::Product(marginals) => {
                for (o, m) in out.iter_mut().zip(marginals) {
                    *o = m.sample(rng);
                }
            }
            Sampler::NormalAndSquare => {
                let x: f64 = rng.sample(StandardNormal);
                out[0] = x;
                out[1] = (x * x - 1.0) / std::f64::consts::SQRT_2;
            }
            Sampler::None => panic!("distribution has no sampler"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.sample_into(rng, &mut out);
        out
    }
}

fn check_spd(sigma: &DMatrix<f64>, d: usize) -> Result<()> {
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch("sigma must be d x d".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((sigma[(i, j)] - sigma[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(worst));
    }
    if Cholesky::new(sigma.clone()).is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}

/// Default floor on the number of samples for k-statistic estimation.
pub fn cumulant_sample_floor(d: usize) -> usize {
    10 * d.pow(4)
}

/// Unbiased k-statistic estimates of the first four joint cumulants.
///
/// `samples` is a flat row-major array of `n` vectors of length `d`. Requires
/// at least `floor` samples (default `10 d^4`) and a nonsingular empirical
/// covariance.
pub fn cumulants_from_samples(samples: &[f64], d: usize) -> Result<(Vec<f64>, Sym2, Sym3, Sym4)> {
    cumulants_from_samples_with_floor(samples, d, cumulant_sample_floor(d))
}

pub fn cumulants_from_samples_with_floor(
    samples: &[f64],
    d: usize,
    floor: usize,
) -> Result<(Vec<f64>, Sym2, Sym3, Sym4)> {
    if d == 0 || !samples.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch(
            "sample buffer length must be a multiple of d".into(),
        ));
    }
    let n = samples.len() / d;
    if n < floor.max(4) {
        return Err(Error::TooFewSamples {
            required: floor.max(4),
            got: n,
        });
    }
    let nf = n as f64;

    let mut mean = vec![0.0; d];
    for row in samples.chunks_exact(d) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }

    // central moment tensors
    let mut m2 = vec![0.0; d * d];
    let mut m3 = vec![0.0; d * d * d];
    let mut m4 = vec![0.0; d * d * d * d];
    let mut c = vec![0.0; d];
    for row in samples.chunks_exact(d) {
        for i in 0..d {
            c[i] = row[i] - mean[i];
        }
        for i in 0..d {
            for j in 0..d {
                let cij = c[i] * c[j];
                m2[i * d + j] += cij;
                for k in 0..d {
                    let cijk = cij * c[k];
                    m3[(i * d + j) * d + k] += cijk;
                    for l in 0..d {
                        m4[((i * d + j) * d + k) * d + l] += cijk * c[l];
                    }
                }
            }
        }
    }
    for x in m2.iter_mut() {
        *x /= nf;
    }
    for x in m3.iter_mut() {
        *x /= nf;
    }
    for x in m4.iter_mut() {
        *x /= nf;
    }

    // k-statistics
    let mut sigma = Sym2::zeros(d);
    for i in 0..d {
        for j in 0..d {
            sigma.set(i, j, nf / (nf - 1.0) * m2[i * d + j]);
        }
    }
    let mut chi3 = Sym3::zeros(d);
    let c3 = nf * nf / ((nf - 1.0) * (nf - 2.0));
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                chi3.set(i, j, k, c3 * m3[(i * d + j) * d + k]);
            }
        }
    }
    let mut chi4 = Sym4::zeros(d);
    let c4 = nf * nf / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let pair = m2[i * d + j] * m2[k * d + l]
                        + m2[i * d + k] * m2[j * d + l]
                        + m2[i * d + l] * m2[j * d + k];
                    let val =
                        c4 * ((nf + 1.0) * m4[((i * d + j) * d + k) * d + l] - (nf - 1.0) * pair);
                    chi4.set(i, j, k, l, val);
                }
            }
        }
    }

    let sig_mat = DMatrix::from_fn(d, d, |i, j| sigma.get(i, j));
    if Cholesky::new(sig_mat).is_none() {
        return Err(Error::SingularCovariance);
    }
    Ok((mean, sigma, chi3, chi4))
}

/// Compares empirical moments of `draws` sampler outputs against the declared
/// mean and covariance; returns the worst deviation measured in estimated
/// Monte Carlo standard errors.
pub fn sampler_moment_deviation<R: Rng + ?Sized>(
    dist: &DistributionSpec,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let d = dist.d;
    let mut buf = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum2 = DMatrix::<f64>::zeros(d, d);
    let mut sum4 = DMatrix::<f64>::zeros(d, d); // centered fourth moments of pair products
    let mut rows = Vec::with_capacity(draws * d);
    for _ in 0..draws {
        dist.sample_into(rng, &mut buf);
        rows.extend_from_slice(&buf);
        for i in 0..d {
            sum[i] += buf[i];
        }
    }
    let nf = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    for row in rows.chunks_exact(d) {
        for i in 0..d {
            for j in 0..d {
                let p = (row[i] - mean[i]) * (row[j] - mean[j]);
                sum2[(i, j)] += p;
                sum4[(i, j)] += p * p;
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..d {
        let se_mean = (dist.sigma[(i, i)] / nf).sqrt();
        worst = worst.max((mean[i] - dist.mean[i]).abs() / se_mean);
    }
    for i in 0..d {
        for j in 0..d {
            let cov = sum2[(i, j)] / nf;
            let var_of_cov = (sum4[(i, j)] / nf - cov * cov).max(1e-300) / nf;
            worst = worst.max((cov - dist.sigma[(i, j)]).abs() / var_of_cov.sqrt());
        }
    }
    worst
}
