//! Multivariate Edgeworth correction polynomials and the univariate expansion
//! machinery behind the batching-only estimator.
//!
//! `p1_poly` and `p2_poly` are the pure polynomial correction factors in the
//! expansion of the density of a standardized mean,
//!   phi_Sigma(x) * (1 + n^{-1/2} p1(x) + n^{-1} p2(x)),
//! i.e. the normal density prefactor is omitted and p1's leading 1 stripped.
//! Contractions that do not depend on x are cached at construction; the
//! per-evaluation work is O(d^2) plus one O(d^4) pass for the chi3*chi3 block.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{dot, Sym2, Sym3, Sym4};

/// Precomputed contraction context for one distribution.
#[derive(Debug, Clone)]
pub struct EdgeworthContext {
    pub d: usize,
    pub sigma_inv: DMatrix<f64>,
    chi3: Sym3,
    chi4: Sym4,
    /// t_k = sigma^{ij} chi_{ijk}
    t: Vec<f64>,
    /// s = Sigma^{-1} t
    s: Vec<f64>,
    /// M4_{ij} = chi_{ijkl} sigma^{kl}
    m4: Sym2,
    /// c4 = chi_{ijkl} sigma^{ij} sigma^{kl}
    c4: f64,
    /// C_{ijlm} = chi_{ijk} sigma^{kn} chi_{lmn}
    cc: Sym4,
    /// D_{ij} = chi_{ijk} s_k
    dd: Sym2,
    /// E_{il} = chi_{ijk} sigma^{jm} sigma^{kn} chi_{lmn}
    ee: Sym2,
    /// c33 = chi_{ijk} sigma^{il} sigma^{jm} sigma^{kn} chi_{lmn}
    c33: f64,
}

impl EdgeworthContext {
    pub fn new(sigma: &DMatrix<f64>, chi3: &Sym3, chi4: &Sym4) -> Result<Self> {
        let d = sigma.nrows();
        if sigma.ncols() != d || chi3.d != d || chi4.d != d {
            return Err(Error::DimensionMismatch(
                "sigma and cumulant tensors must share dimension".into(),
            ));
        }
        chi3.check_symmetric(1e-9)?;
        chi4.check_symmetric(1e-9)?;
        let sigma_inv = sigma
            .clone()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite)?;
        // sigma_inv * sigma = I within 1e-10
        let eye = &sigma_inv * sigma;
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                if (eye[(i, j)] - want).abs() > 1e-10 {
                    return Err(Error::invalid(
                        "sigma",
                        "inverse check failed: sigma_inv * sigma deviates from identity",
                    ));
                }
            }
        }

        let mut t = vec![0.0; d];
        for k in 0..d {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += sigma_inv[(i, j)] * chi3.get(i, j, k);
                }
            }
            t[k] = acc;
        }
        let mut s = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += sigma_inv[(i, k)] * t[k];
            }
            s[i] = acc;
        }

        let mut m4 = Sym2::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        acc += chi4.get(i, j, k, l) * sigma_inv[(k, l)];
                    }
                }
                m4.set(i, j, acc);
            }
        }
        let mut c4 = 0.0;
        for i in 0..d {
            for j in 0..d {
                c4 += sigma_inv[(i, j)] * m4.get(i, j);
            }
        }

        let mut cc = Sym4::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for l in 0..d {
                    for m in 0..d {
                        let mut acc = 0.0;
                        for k in 0..d {
                            for n in 0..d {
                                acc += chi3.get(i, j, k) * sigma_inv[(k, n)] * chi3.get(l, m, n);
                            }
                        }
                        cc.set(i, j, l, m, acc);
                    }
                }
            }
        }
        let mut dd = Sym2::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += chi3.get(i, j, k) * s[k];
                }
                dd.set(i, j, acc);
            }
        }
        let mut ee = Sym2::zeros(d);
        for i in 0..d {
            for l in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    for k in 0..d {
                        for m in 0..d {
                            for n in 0..d {
                                acc += chi3.get(i, j, k)
                                    * sigma_inv[(j, m)]
                                    * sigma_inv[(k, n)]
                                    * chi3.get(l, m, n);
                            }
                        }
                    }
                }
                ee.set(i, l, acc);
            }
        }
        let mut c33 = 0.0;
        for i in 0..d {
            for l in 0..d {
                c33 += sigma_inv[(i, l)] * ee.get(i, l);
            }
        }

        Ok(EdgeworthContext {
            d,
            sigma_inv,
            chi3: chi3.clone(),
            chi4: chi4.clone(),
            t,
            s,
            m4,
            c4,
            cc,
            dd,
            ee,
            c33,
        })
    }

    #[inline]
    fn whiten(&self, x: &[f64], y: &mut [f64]) {
        let d = self.d;
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.sigma_inv[(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// First-order polynomial correction factor:
    /// (1/6) chi_{ijk} y_i y_j y_k - (1/2) t_k y_k with y = Sigma^{-1} x.
    pub fn p1_poly(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; 16];
        let y = &mut y[..self.d];
        self.whiten(x, y);
        self.p1_from_whitened(y)
    }

    #[inline]
    fn p1_from_whitened(&self, y: &[f64]) -> f64 {
        self.chi3.cubic(y) / 6.0 - dot(&self.t, y) / 2.0
    }

    /// Second-order polynomial correction factor (chi4 block plus chi3*chi3
    /// block with all six sigma-contraction patterns).
    pub fn p2_poly(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; 16];
        let y = &mut y[..self.d];
        self.whiten(x, y);
        self.p2_from_whitened(y)
    }

    #[inline]
    fn p2_from_whitened(&self, y: &[f64]) -> f64 {
        let s3 = self.chi3.cubic(y);
        let ty = dot(&self.t, y);
        let quart = self.chi4.quartic(y);
        let m4q = self.m4.quad(y);

        let chi4_block = (quart - 6.0 * m4q + 3.0 * self.c4) / 24.0;
        let chi33_block = (s3 * s3 - 6.0 * s3 * ty - 9.0 * self.cc.quartic(y)
            + 9.0 * ty * ty
            + 18.0 * self.dd.quad(y)
            + 18.0 * self.ee.quad(y)
            - 9.0 * dot(&self.s, &self.t)
            - 6.0 * self.c33)
            / 72.0;
        chi4_block + chi33_block
    }

    /// Evaluates both polynomials with one whitening pass.
    pub fn p1_p2(&self, x: &[f64]) -> (f64, f64) {
        let mut y = [0.0; 16];
        let y = &mut y[..self.d];
        self.whiten(x, y);
        (self.p1_from_whitened(y), self.p2_from_whitened(y))
    }

    pub fn is_trivial(&self) -> bool {
        self.chi3.max_abs() == 0.0 && self.chi4.max_abs() == 0.0
    }
}

/// Probabilists' Hermite polynomial He_k, 0 <= k <= 6, by the three-term
/// recurrence He_{k+1} = x He_k - k He_{k-1}.
pub fn hermite(k: u32, x: f64) -> Result<f64> {
    if k > 6 {
        return Err(Error::invalid("k", "supported range is 0..=6"));
    }
    let mut prev = 1.0; // He_0
    if k == 0 {
        return Ok(prev);
    }
    let mut cur = x; // He_1
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Coefficients of the univariate cumulant series of the standardized batch
/// estimator: kappa_{1,n} = n^{-1/2} k12, kappa_{2,n} = 1 + n^{-1} k22,
/// kappa_{3,n} = n^{-1/2} k31, kappa_{4,n} = n^{-1} k41.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnivariateCumulantSeries {
    pub k12: f64,
    pub k22: f64,
    pub k31: f64,
    pub k41: f64,
}

impl UnivariateCumulantSeries {
    pub fn zero() -> Self {
        UnivariateCumulantSeries {
            k12: 0.0,
            k22: 0.0,
            k31: 0.0,
            k41: 0.0,
        }
    }
}

/// The distribution-function corrections h1, h2 and the density correction
/// factors p1 = h1'/phi, p2 = h2'/phi, with the differentiation carried out
/// analytically:
///   p1(x) = k12 x + (k31/6) He3(x)
///   p2(x) = (x^2 - 1) g(x) - x g'(x), where
///   g(x)  = (k22 + k12^2)/2 + (k41 + 4 k12 k31)(x^2 - 3)/24
///           + k31^2 (x^4 - 10 x^2 + 15)/72.
#[derive(Debug, Clone, Copy)]
pub struct Alg2Polynomials {
    series: UnivariateCumulantSeries,
}

impl Alg2Polynomials {
    pub fn new(series: UnivariateCumulantSeries) -> Self {
        Alg2Polynomials { series }
    }

    pub fn h1(&self, x: f64) -> f64 {
        let s = &self.series;
        -(s.k12 + s.k31 / 6.0 * (x * x - 1.0)) * std_normal_pdf(x)
    }

    pub fn h2(&self, x: f64) -> f64 {
        -x * self.g(x) * std_normal_pdf(x)
    }

    #[inline]
    fn g(&self, x: f64) -> f64 {
        let s = &self.series;
        let x2 = x * x;
        0.5 * (s.k22 + s.k12 * s.k12)
            + (s.k41 + 4.0 * s.k12 * s.k31) / 24.0 * (x2 - 3.0)
            + s.k31 * s.k31 / 72.0 * (x2 * x2 - 10.0 * x2 + 15.0)
    }

    #[inline]
    fn g_prime(&self, x: f64) -> f64 {
        let s = &self.series;
        (s.k41 + 4.0 * s.k12 * s.k31) / 24.0 * 2.0 * x
            + s.k31 * s.k31 / 72.0 * (4.0 * x * x * x - 20.0 * x)
    }

    #[inline]
    pub fn p1(&self, x: f64) -> f64 {
        let s = &self.series;
        s.k12 * x + s.k31 / 6.0 * (x * x * x - 3.0 * x)
    }

    #[inline]
    pub fn p2(&self, x: f64) -> f64 {
        (x * x - 1.0) * self.g(x) - x * self.g_prime(x)
    }
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Density of N(0, var). `var` is a variance, not a standard deviation.
#[inline]
pub fn normal_pdf_var(var: f64, z: f64) -> f64 {
    (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Derivative in z of the N(0, var) density: phi_var(z) * (-z / var).
#[inline]
pub fn normal_pdf_var_deriv(var: f64, z: f64) -> f64 {
    normal_pdf_var(var, z) * (-z / var)
}
