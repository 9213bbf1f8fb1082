//! Unbiased Monte Carlo estimation of the n^-1 coverage-error coefficient c in
//!   P(-q <= W <= q) = P(-q <= t_{K-1} <= q) + c/n + O(n^{-3/2}).
//!
//! Two estimators:
//!  * the conditioning-based scheme (all four methods): simulate surrogate
//!    batch fluctuations, Taylor-expand the studentized statistic, solve the
//!    critical value by the implicit function theorem, and combine interior
//!    Edgeworth terms with boundary density terms;
//!  * the batching-only scheme: derive the univariate cumulant series of the
//!    standardized batch estimator and integrate its density corrections over
//!    the t-statistic acceptance region with standard normal draws.
//!
//! The conditioning scheme requires a nonzero first gradient coordinate, so
//! the problem is first permuted (largest |u_i| coordinate to position 1) and
//! positively rescaled to u_1 = 1; both transformations leave every pivot
//! distribution, and hence c, unchanged.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::edgeworth::{
    normal_pdf_var, normal_pdf_var_deriv, Alg2Polynomials, EdgeworthContext,
    UnivariateCumulantSeries,
};
use crate::error::{Error, Result};
use crate::model::{DistributionSpec, ModelSpec};
use crate::par::{par_accumulate, substream, MeanVar};
use crate::stats::Method;
use crate::student_t::t_quantile;
use crate::tensor::{dot, Sym2, Sym3};

/// Critical value given either directly or as a nominal two-sided level.
#[derive(Debug, Clone, Copy)]
pub enum CriticalValue {
    Q(f64),
    Alpha(f64),
}

impl CriticalValue {
    pub fn resolve(&self, k: u32) -> Result<f64> {
        match *self {
            CriticalValue::Q(q) => {
                if q <= 0.0 {
                    return Err(Error::invalid("q", "critical value must be positive"));
                }
                Ok(q)
            }
            CriticalValue::Alpha(a) => t_quantile(k - 1, a / 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Alg1,
    Alg2,
}

/// Scheme-specific polynomial values on one simulated draw, from the expansion
///   W = sqrt(K(K-1)) (a + n^{-1/2} b1 + n^{-1} b2)
///       / sqrt(E2 + n^{-1/2} lambda + n^{-1} e) + O_p(n^{-3/2}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeDecomposition {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub lambda: f64,
    pub e: f64,
    pub e2: f64,
    /// derivative of b1 w.r.t. the first coordinate of A0
    pub b1_prime: f64,
    /// derivative of lambda w.r.t. the first coordinate of A0
    pub lambda_prime: f64,
}

/// Normalized derivative tensors (u_1 = 1 after permutation and rescaling).
#[derive(Debug, Clone)]
pub struct SchemeTensors {
    pub u: Vec<f64>,
    pub v: Sym2,
    pub w: Sym3,
}

/// Evaluates the method-specific polynomials of the decomposition on one draw.
/// `a0` has length d; `b` holds K deviation vectors row-major (they sum to
/// zero by construction).
pub fn scheme_polynomials(
    method: Method,
    a0: &[f64],
    b: &[f64],
    tensors: &SchemeTensors,
) -> SchemeDecomposition {
    let d = a0.len();
    let k = b.len() / d;
    let kf = k as f64;
    let u = &tensors.u;
    let v = &tensors.v;
    let w = &tensors.w;

    let mut ub = vec![0.0; k];
    let mut e2 = 0.0;
    for i in 0..k {
        let ubi = dot(u, &b[i * d..(i + 1) * d]);
        ub[i] = ubi;
        e2 += ubi * ubi;
    }

    let a = dot(u, a0);
    // a' = u_1 = 1 under the normalization; lambda' is shared by all methods
    let mut lambda_prime = 0.0;
    let mut ai = vec![0.0; d];

    match method {
        Method::Sectioning | Method::Sb => {
            let b1 = v.quad(a0);
            let b2 = w.cubic(a0);
            let b1_prime = 2.0 * v.row_dot(0, a0);
            let va0 = v.quad(a0);
            let wa0 = w.cubic(a0);
            let mut lambda_sec = 0.0;
            let mut e_sec = 0.0;
            // batching denominator pieces, needed for SB
            let mut vai = vec![0.0; k];
            let mut lambda_b = 0.0;
            let mut wai_accum = 0.0;
            for i in 0..k {
                for j in 0..d {
                    ai[j] = a0[j] + b[i * d + j];
                }
                let vv = v.quad(&ai);
                let ww = w.cubic(&ai);
                lambda_sec += ub[i] * (vv - va0);
                e_sec += (vv - va0) * (vv - va0) + 2.0 * ub[i] * (ww - wa0);
                lambda_prime += ub[i] * v.row_dot(0, &b[i * d..(i + 1) * d]);
                vai[i] = vv;
                lambda_b += ub[i] * vv;
                wai_accum += ub[i] * ww;
            }
            lambda_sec *= 2.0;
            lambda_prime *= 4.0;
            if method == Method::Sectioning {
                return SchemeDecomposition {
                    a,
                    b1,
                    b2,
                    lambda: lambda_sec,
                    e: e_sec,
                    e2,
                    b1_prime,
                    lambda_prime,
                };
            }
            // SB: sectioning numerator with the batching denominator expansion
            let vbar = vai.iter().sum::<f64>() / kf;
            let mut e_b = 0.0;
            for i in 0..k {
                let dv = vai[i] - vbar;
                e_b += dv * dv;
            }
            e_b += 2.0 * wai_accum;
            SchemeDecomposition {
                a,
                b1,
                b2,
                lambda: 2.0 * lambda_b,
                e: e_b,
                e2,
                b1_prime,
                lambda_prime,
            }
        }
        Method::Batching => {
            let mut vai = vec![0.0; k];
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            let mut lambda = 0.0;
            let mut wai_accum = 0.0;
            for i in 0..k {
                for j in 0..d {
                    ai[j] = a0[j] + b[i * d + j];
                }
                let vv = v.quad(&ai);
                let ww = w.cubic(&ai);
                vai[i] = vv;
                b1 += vv;
                b2 += ww;
                lambda += ub[i] * vv;
                wai_accum += ub[i] * ww;
                lambda_prime += ub[i] * v.row_dot(0, &b[i * d..(i + 1) * d]);
            }
            b1 /= kf;
            b2 /= kf;
            lambda *= 2.0;
            lambda_prime *= 4.0;
            let vbar = vai.iter().sum::<f64>() / kf;
            let mut e = 0.0;
            for i in 0..k {
                let dv = vai[i] - vbar;
                e += dv * dv;
            }
            e += 2.0 * wai_accum;
            let b1_prime = 2.0 * v.row_dot(0, a0);
            SchemeDecomposition {
                a,
                b1,
                b2,
                lambda,
                e,
                e2,
                b1_prime,
                lambda_prime,
            }
        }
        Method::Sj => {
            let km1 = kf - 1.0;
            let mut vtil = vec![0.0; k];
            let mut wtil = vec![0.0; k];
            let mut sum_vb = 0.0;
            for i in 0..k {
                for j in 0..d {
                    ai[j] = a0[j] - b[i * d + j] / km1;
                }
                vtil[i] = v.quad(&ai);
                wtil[i] = w.cubic(&ai);
                sum_vb += v.quad(&b[i * d..(i + 1) * d]);
                lambda_prime += ub[i] * v.row_dot(0, &b[i * d..(i + 1) * d]);
            }
            lambda_prime *= 4.0;
            let b1 = v.quad(a0) - sum_vb / (kf * km1);
            let b2 = kf * w.cubic(a0) - km1 / kf * wtil.iter().sum::<f64>();
            let mut lambda = 0.0;
            for i in 0..k {
                lambda += ub[i] * vtil[i];
            }
            lambda *= -2.0 * km1;
            let vtbar = vtil.iter().sum::<f64>() / kf;
            let mut e = 0.0;
            for i in 0..k {
                let dv = km1 * (vtil[i] - vtbar);
                e += dv * dv;
                e -= 2.0 * km1 * ub[i] * wtil[i];
            }
            let b1_prime = 2.0 * v.row_dot(0, a0);
            SchemeDecomposition {
                a,
                b1,
                b2,
                lambda,
                e,
                e2,
                b1_prime,
                lambda_prime,
            }
        }
    }
}

/// The implicit-function step at one boundary: derivatives of the critical
/// value A_{0,1}(n^{-1/2}) solving W = +/- q.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitStep {
    pub y_x: f64,
    pub y_xx: f64,
    pub y_x_minus: f64,
    pub y_xx_minus: f64,
    pub f_plus: f64,
    pub f_minus: f64,
}

fn branch_derivatives(dec: &SchemeDecomposition) -> (f64, f64) {
    let e2 = dec.e2;
    let rt = e2.sqrt();
    let f_x = dec.b1 / rt - 0.5 * dec.lambda * dec.a / (e2 * rt);
    let f_xx = (dec.a * (-dec.e / e2 + 0.75 * dec.lambda * dec.lambda / (e2 * e2))
        - dec.b1 * dec.lambda / e2
        + 2.0 * dec.b2)
        / rt;
    // F_y = u_1 / sqrt(E2) = 1 / sqrt(E2) under the normalization
    let f_xy = dec.b1_prime / rt - 0.5 * (dec.lambda_prime * dec.a + dec.lambda) / (e2 * rt);
    let y_x = -f_x * rt;
    let y_xx = -(f_xx + 2.0 * f_xy * y_x) * rt;
    (y_x, y_xx)
}

/// A coefficient-estimation problem conditioned on the first coordinate:
/// the model permuted so the largest-|u_i| coordinate leads and rescaled to
/// u_1 = 1, with the matching Edgeworth context and the conditional
/// mean/variance pieces of the leading coordinate.
#[derive(Debug, Clone)]
pub struct ConditionedProblem {
    pub d: usize,
    tensors: SchemeTensors,
    chol: DMatrix<f64>,
    ewctx: EdgeworthContext,
    /// regression of the first coordinate on the rest (length d-1)
    slope: Vec<f64>,
    /// sigma_0 - sigma_01 sigma_11^{-1} sigma_10 (divide by K at use)
    cond_var_base: f64,
    u_norm_sq: f64,
}

impl ConditionedProblem {
    pub fn new(model: &ModelSpec, dist: &DistributionSpec) -> Result<Self> {
        let d = model.d;
        if dist.d != d {
            return Err(Error::DimensionMismatch(
                "model and distribution dimensions differ".into(),
            ));
        }
        for (m, dm) in model.mean_point.iter().zip(&dist.mean) {
            if (m - dm).abs() > 1e-9 {
                return Err(Error::invalid(
                    "model.mean_point",
                    "derivative tensors must be taken at the distribution mean",
                ));
            }
        }
        let pivot = (0..d)
            .max_by(|&i, &j| model.u[i].abs().total_cmp(&model.u[j].abs()))
            .expect("d >= 1");
        let u_pivot = model.u[pivot];
        if u_pivot.abs() < 1e-8 {
            return Err(Error::DegenerateGradient(u_pivot.abs()));
        }
        let mut perm = Vec::with_capacity(d);
        perm.push(pivot);
        perm.extend((0..d).filter(|&i| i != pivot));

        let scale = 1.0 / u_pivot;
        let mut u: Vec<f64> = perm.iter().map(|&i| model.u[i] * scale).collect();
        u[0] = 1.0;
        let v = model.v.permuted(&perm).scaled(scale);
        let w = model.w.permuted(&perm).scaled(scale);

        let sigma = DMatrix::from_fn(d, d, |i, j| dist.sigma[(perm[i], perm[j])]);
        let chi3 = dist.chi3.permuted(&perm);
        let chi4 = dist.chi4.permuted(&perm);
        let chol = Cholesky::new(sigma.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .l();
        let ewctx = EdgeworthContext::new(&sigma, &chi3, &chi4)?;

        let (slope, cond_var_base) = if d == 1 {
            (Vec::new(), sigma[(0, 0)])
        } else {
            let s01 = DMatrix::from_fn(1, d - 1, |_, j| sigma[(0, j + 1)]);
            let s11 = DMatrix::from_fn(d - 1, d - 1, |i, j| sigma[(i + 1, j + 1)]);
            let s11_inv = s11.try_inverse().ok_or(Error::NotPositiveDefinite)?;
            let slope_m = &s01 * &s11_inv;
            let cond = sigma[(0, 0)] - (&slope_m * s01.transpose())[(0, 0)];
            ((0..d - 1).map(|j| slope_m[(0, j)]).collect(), cond)
        };
        if cond_var_base <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let u_norm_sq = dot(&u, &u);
        Ok(ConditionedProblem {
            d,
            tensors: SchemeTensors { u, v, w },
            chol,
            ewctx,
            slope,
            cond_var_base,
            u_norm_sq,
        })
    }

    pub fn tensors(&self) -> &SchemeTensors {
        &self.tensors
    }

    /// Simulates K surrogate batch fluctuations: A0 is the mean of K draws
    /// from N(0, Sigma) and B_i the deviations (summing to zero).
    pub fn draw_surrogates<R: Rng + ?Sized>(
        &self,
        k: usize,
        rng: &mut R,
        a0: &mut [f64],
        b: &mut [f64],
    ) {
        let d = self.d;
        for slot in b.chunks_exact_mut(d) {
            for (i, s) in slot.iter_mut().enumerate() {
                let _ = i;
                *s = rng.sample(StandardNormal);
            }
            // in-place lower-triangular multiply
            for i in (0..d).rev() {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += self.chol[(i, j)] * slot[j];
                }
                slot[i] = acc;
            }
        }
        for x in a0.iter_mut() {
            *x = 0.0;
        }
        for slot in b.chunks_exact(d) {
            for (acc, &x) in a0.iter_mut().zip(slot) {
                *acc += x;
            }
        }
        let kf = k as f64;
        for x in a0.iter_mut() {
            *x /= kf;
        }
        for slot in b.chunks_exact_mut(d) {
            for (s, &m) in slot.iter_mut().zip(a0.iter()) {
                *s -= m;
            }
        }
    }

    /// Both boundary branches of the implicit-function step: critical values
    /// F_+/F_- of the leading coordinate and the first two derivatives of the
    /// solved boundary in n^{-1/2}, with every A_{0,1}-dependent polynomial
    /// re-evaluated at the substituted coordinate.
    pub fn implicit_step(
        &self,
        method: Method,
        a0: &[f64],
        b: &[f64],
        q: f64,
        k: usize,
    ) -> ImplicitStep {
        let d = self.d;
        let kf = k as f64;
        let dec0 = scheme_polynomials(method, a0, b, &self.tensors);
        let e2 = dec0.e2;
        let tail: f64 = (1..d).map(|i| self.tensors.u[i] * a0[i]).sum();
        let scale = (e2).sqrt() / (kf * (kf - 1.0)).sqrt();
        let f_plus = q * scale - tail;
        let f_minus = -q * scale - tail;

        let mut a0_sub = a0.to_vec();
        a0_sub[0] = f_plus;
        let dec_p = scheme_polynomials(method, &a0_sub, b, &self.tensors);
        let (y_x, y_xx) = branch_derivatives(&dec_p);
        a0_sub[0] = f_minus;
        let dec_m = scheme_polynomials(method, &a0_sub, b, &self.tensors);
        let (y_x_minus, y_xx_minus) = branch_derivatives(&dec_m);
        ImplicitStep {
            y_x,
            y_xx,
            y_x_minus,
            y_xx_minus,
            f_plus,
            f_minus,
        }
    }

    /// One replication of the conditioning-based estimator. Returns `None`
    /// when the draw is rejected by the E2 guard (reported, never resampled).
    pub fn replicate<R: Rng + ?Sized>(
        &self,
        method: Method,
        k: usize,
        q: f64,
        rng: &mut R,
        scratch: &mut Alg1Scratch,
    ) -> Option<f64> {
        let d = self.d;
        let kf = k as f64;
        scratch.resize(d, k);
        let a0 = &mut scratch.a0;
        let b = &mut scratch.b;
        self.draw_surrogates(k, rng, a0, b);

        let dec = scheme_polynomials(method, a0, b, &self.tensors);
        let e2 = dec.e2;
        if e2 < 1e-12 * self.u_norm_sq * kf {
            return None;
        }
        let rt_e2 = e2.sqrt();
        let kk1 = (kf * (kf - 1.0)).sqrt();

        // indicator over the limiting acceptance region
        let w_inf = kk1 * dec.a / rt_e2;
        let in_region = -q <= w_inf && w_inf <= q;

        // interior Edgeworth term: sum_{i<j} p1_i p1_j + sum_i p2_i at x_i = A0 + B_i
        let mut interior = 0.0;
        if in_region && !self.ewctx.is_trivial() {
            let mut sum_p1 = 0.0;
            let mut sum_p1_sq = 0.0;
            let mut sum_p2 = 0.0;
            let xi = &mut scratch.xi;
            for i in 0..k {
                for j in 0..d {
                    xi[j] = a0[j] + b[i * d + j];
                }
                let (p1, p2) = self.ewctx.p1_p2(xi);
                sum_p1 += p1;
                sum_p1_sq += p1 * p1;
                sum_p2 += p2;
            }
            interior = 0.5 * (sum_p1 * sum_p1 - sum_p1_sq) + sum_p2;
        }

        // conditional density of the leading coordinate given the rest
        let mut mu = 0.0;
        for (j, s) in self.slope.iter().enumerate() {
            mu += s * a0[j + 1];
        }
        let var = self.cond_var_base / kf;

        let tail: f64 = (1..d).map(|i| self.tensors.u[i] * a0[i]).sum();
        let scale = rt_e2 / kk1;

        let mut er = interior;
        for (sign, branch_sign) in [(1.0, 1.0), (-1.0, -1.0)] {
            let f_b = sign * q * scale - tail;
            let a0_sub = &mut scratch.a0_sub;
            a0_sub.copy_from_slice(a0);
            a0_sub[0] = f_b;
            let dec_b = scheme_polynomials(method, a0_sub, b, &self.tensors);
            let (y_x, y_xx) = branch_derivatives(&dec_b);
            let mut p1_sum = 0.0;
            if !self.ewctx.is_trivial() {
                let xi = &mut scratch.xi;
                for i in 0..k {
                    for j in 0..d {
                        xi[j] = a0_sub[j] + b[i * d + j];
                    }
                    p1_sum += self.ewctx.p1_poly(xi);
                }
            }
            let phi = normal_pdf_var(var, f_b - mu);
            let dphi = normal_pdf_var_deriv(var, f_b - mu);
            er += branch_sign * (phi * (p1_sum * y_x + 0.5 * y_xx) + 0.5 * dphi * y_x * y_x);
        }
        Some(er)
    }
}

/// Reusable buffers for one worker chunk.
#[derive(Debug, Default)]
pub struct Alg1Scratch {
    a0: Vec<f64>,
    b: Vec<f64>,
    a0_sub: Vec<f64>,
    xi: Vec<f64>,
}

impl Alg1Scratch {
    fn resize(&mut self, d: usize, k: usize) {
        self.a0.resize(d, 0.0);
        self.b.resize(d * k, 0.0);
        self.a0_sub.resize(d, 0.0);
        self.xi.resize(d, 0.0);
    }
}

/// Estimated coverage-error coefficient with its Monte Carlo half-width.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientEstimate {
    pub method: Method,
    pub k: u32,
    /// critical value actually used
    pub q: f64,
    pub c_hat: f64,
    /// 1.96 * sd / sqrt(reps)
    pub halfwidth95: f64,
    pub reps: u64,
    pub rejected: u64,
    pub algorithm: Algorithm,
}

impl CoefficientEstimate {
    /// Agreement flag used by comparison reports: overlap of the two 95% CIs.
    pub fn agrees_with(&self, other: &CoefficientEstimate) -> bool {
        (self.c_hat - other.c_hat).abs() <= self.halfwidth95 + other.halfwidth95
    }
}

/// Coefficient of the n^-1 coverage error by the conditioning-based scheme.
///
/// Unbiased for all four methods when K >= 5; smaller K is also fine for
/// sectioning/SB/SJ on the worked examples shipped here, while batching at
/// K = 2 is a known failure mode (use the batching-only scheme there).
pub fn estimate_coefficient(
    model: &ModelSpec,
    dist: &DistributionSpec,
    k: u32,
    q: CriticalValue,
    method: Method,
    reps: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    if reps < 100 {
        return Err(Error::invalid("reps", "need at least 100 replications"));
    }
    if k < 2 {
        return Err(Error::invalid("K", "need at least 2 batches"));
    }
    let problem = ConditionedProblem::new(model, dist)?;
    let qv = q.resolve(k)?;
    let ku = k as usize;

    let mv = par_accumulate(
        reps,
        MeanVar::default,
        Alg1Scratch::default,
        |rep, scratch, acc: &mut MeanVar| {
            let mut rng = substream(seed, rep);
            match problem.replicate(method, ku, qv, &mut rng, scratch) {
                Some(x) => acc.push(x),
                None => acc.reject(),
            }
        },
    );

    if mv.rejected * 100 > reps {
        return Err(Error::TooManyRejections {
            rejected: mv.rejected,
            total: reps,
        });
    }
    Ok(CoefficientEstimate {
        method,
        k,
        q: qv,
        c_hat: mv.mean(),
        halfwidth95: mv.halfwidth95(),
        reps,
        rejected: mv.rejected,
        algorithm: Algorithm::Alg1,
    })
}

/// Input to the batching-only estimator: the univariate cumulant series of
/// the standardized batch estimator, either given directly or derived for a
/// Gaussian sampling distribution.
#[derive(Debug, Clone)]
pub enum Alg2Input<'a> {
    Series(UnivariateCumulantSeries),
    GaussianModel(&'a ModelSpec, &'a DMatrix<f64>),
}

/// Exact cumulant series of
///   ([u, A] + n^{-1/2} [v, A, A] + n^{-1} [w, A, A, A]) / sigma_u
/// for A ~ N(0, Sigma), by Isserlis-theorem moment contractions:
///   k12 = tr(v Sigma) / sigma_u
///   k22 = (2 tr((v Sigma)^2) + 6 [w, Sigma u, Sigma]) / sigma_u^2
///   k31 = 6 (Sigma u)' v (Sigma u) / sigma_u^3
///   k41 = (48 (v Sigma u)' Sigma (v Sigma u) + 24 [w, Sigma u, Sigma u, Sigma u]) / sigma_u^4
/// with sigma_u^2 = u' Sigma u.
pub fn gaussian_series(
    model: &ModelSpec,
    sigma: &DMatrix<f64>,
) -> Result<UnivariateCumulantSeries> {
    let d = model.d;
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch("sigma must be d x d".into()));
    }
    let u = &model.u;
    let v = &model.v;
    let w = &model.w;

    let mut su = vec![0.0; d]; // Sigma u
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..d {
            acc += sigma[(i, j)] * u[j];
        }
        su[i] = acc;
    }
    let sig_u_sq = dot(u, &su);
    if sig_u_sq <= 0.0 {
        return Err(Error::DegenerateGradient(sig_u_sq));
    }
    let sig_u = sig_u_sq.sqrt();

    // v Sigma as a full matrix
    let mut vs = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for l in 0..d {
                acc += v.get(i, l) * sigma[(l, j)];
            }
            vs[i * d + j] = acc;
        }
    }
    let mut tr_vs = 0.0;
    let mut tr_vs2 = 0.0;
    for i in 0..d {
        tr_vs += vs[i * d + i];
        for j in 0..d {
            tr_vs2 += vs[i * d + j] * vs[j * d + i];
        }
    }
    // [w, Sigma u, Sigma] = w_{jkl} (Sigma u)_j Sigma_{kl}
    let mut w_su_sig = 0.0;
    for j in 0..d {
        for kk in 0..d {
            for l in 0..d {
                w_su_sig += w.get(j, kk, l) * su[j] * sigma[(kk, l)];
            }
        }
    }
    // v Sigma u, then the chains (Sigma u)' v (Sigma u) and
    // (v Sigma u)' Sigma (v Sigma u)
    let mut vsu = vec![0.0; d];
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..d {
            acc += v.get(i, j) * su[j];
        }
        vsu[i] = acc;
    }
    let su_v_su = dot(&su, &vsu);
    let mut quad_chain = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad_chain += vsu[i] * sigma[(i, j)] * vsu[j];
        }
    }
    let w_su3 = w.cubic(&su);

    Ok(UnivariateCumulantSeries {
        k12: tr_vs / sig_u,
        k22: (2.0 * tr_vs2 + 6.0 * w_su_sig) / sig_u_sq,
        k31: 6.0 * su_v_su / (sig_u_sq * sig_u),
        k41: (48.0 * quad_chain + 24.0 * w_su3) / (sig_u_sq * sig_u_sq),
    })
}

/// Coefficient of the n^-1 coverage error for batching only, valid for every
/// K >= 2: standard-normal draws, t-statistic acceptance indicator, and the
/// density-correction polynomials of the univariate series.
pub fn estimate_coefficient_alg2(
    input: Alg2Input<'_>,
    k: u32,
    q: CriticalValue,
    reps: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    if reps < 100 {
        return Err(Error::invalid("reps", "need at least 100 replications"));
    }
    if k < 2 {
        return Err(Error::invalid("K", "need at least 2 batches"));
    }
    let series = match input {
        Alg2Input::Series(s) => s,
        Alg2Input::GaussianModel(model, sigma) => gaussian_series(model, sigma)?,
    };
    let polys = Alg2Polynomials::new(series);
    let qv = q.resolve(k)?;
    let ku = k as usize;
    let kf = k as f64;
    let kk1 = (kf * (kf - 1.0)).sqrt();

    let mv = par_accumulate(
        reps,
        MeanVar::default,
        || vec![0.0f64; ku],
        |rep, z, acc: &mut MeanVar| {
            let mut rng = substream(seed, rep);
            let mut zbar = 0.0;
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
                zbar += *zi;
            }
            zbar /= kf;
            let mut ss = 0.0;
            for &zi in z.iter() {
                ss += (zi - zbar) * (zi - zbar);
            }
            if ss <= 0.0 {
                acc.push(0.0);
                return;
            }
            let t = kk1 * zbar / ss.sqrt();
            if -qv <= t && t <= qv {
                let mut sum_p1 = 0.0;
                let mut sum_p1_sq = 0.0;
                let mut sum_p2 = 0.0;
                for &zi in z.iter() {
                    let p1 = polys.p1(zi);
                    sum_p1 += p1;
                    sum_p1_sq += p1 * p1;
                    sum_p2 += polys.p2(zi);
                }
                acc.push(0.5 * (sum_p1 * sum_p1 - sum_p1_sq) + sum_p2);
            } else {
                acc.push(0.0);
            }
        },
    );

    Ok(CoefficientEstimate {
        method: Method::Batching,
        k,
        q: qv,
        c_hat: mv.mean(),
        halfwidth95: mv.halfwidth95(),
        reps,
        rejected: 0,
        algorithm: Algorithm::Alg2,
    })
}

/// nominal + c/n, clamped to [0, 1].
pub fn theoretical_coverage(nominal: f64, c_hat: f64, n: u32) -> f64 {
    (nominal + c_hat / n as f64).clamp(0.0, 1.0)
}
