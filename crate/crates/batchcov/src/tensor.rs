//! Dense symmetric rank-2/3/4 tensors over small dimensions and the bracket
//! contractions used throughout the estimators:
//! `[u, x] = u_i x_i`, `[v, x, x] = v_ij x_i x_j`, `[w, x, x, x] = w_ijk x_i x_j x_k`.
//!
//! Dimensions stay small (d <= 8 in practice) so everything is stored dense.

use crate::error::{Error, Result};

/// Symmetric d x d tensor stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym2 {
    pub d: usize,
    data: Vec<f64>,
}

/// Symmetric rank-3 tensor, dense d^3 storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym3 {
    pub d: usize,
    data: Vec<f64>,
}

/// Symmetric rank-4 tensor, dense d^4 storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym4 {
    pub d: usize,
    data: Vec<f64>,
}

impl Sym2 {
    pub fn zeros(d: usize) -> Self {
        Sym2 {
            d,
            data: vec![0.0; d * d],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(
                "rank-2 tensor rows must be square".into(),
            ));
        }
        let mut t = Sym2::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.data[i * d + j] = rows[i][j];
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, val: f64) {
        self.data[i * self.d + j] = val;
    }

    /// Adds `val` to entry (i, j) and its transpose mirror, splitting it evenly.
    pub fn add_sym(&mut self, i: usize, j: usize, val: f64) {
        if i == j {
            self.data[i * self.d + j] += val;
        } else {
            self.data[i * self.d + j] += val / 2.0;
            self.data[j * self.d + i] += val / 2.0;
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.d {
            for j in 0..self.d {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let dev = self.max_asymmetry();
        if dev > tol {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(())
    }

    pub fn symmetrize(&self) -> Sym2 {
        let mut out = Sym2::zeros(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                out.data[i * self.d + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        out
    }

    /// `v_ij x_i x_j`
    #[inline]
    pub fn quad(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.data[i * d + j] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `sum_j v_{row,j} x_j`
    #[inline]
    pub fn row_dot(&self, row: usize, x: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for j in 0..d {
            acc += self.data[row * d + j] * x[j];
        }
        acc
    }

    pub fn permuted(&self, perm: &[usize]) -> Sym2 {
        let d = self.d;
        let mut out = Sym2::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[i * d + j] = self.get(perm[i], perm[j]);
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Sym2 {
        Sym2 {
            d: self.d,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Sym3 {
    pub fn zeros(d: usize) -> Self {
        Sym3 {
            d,
            data: vec![0.0; d * d * d],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.d + j) * self.d + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, val: f64) {
        self.data[(i * self.d + j) * self.d + k] = val;
    }

    /// Writes `val` into every permutation of (i, j, k).
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, val: f64) {
        let idx = [i, j, k];
        let perms: [[usize; 3]; 6] = [
            [idx[0], idx[1], idx[2]],
            [idx[0], idx[2], idx[1]],
            [idx[1], idx[0], idx[2]],
            [idx[1], idx[2], idx[0]],
            [idx[2], idx[0], idx[1]],
            [idx[2], idx[1], idx[0]],
        ];
        for p in perms {
            self.set(p[0], p[1], p[2], val);
        }
    }

    /// Distributes `val` over the distinct permutations of (i, j, k), so that
    /// accumulating monomial derivatives yields a symmetric tensor.
    pub fn add_sym(&mut self, i: usize, j: usize, k: usize, val: f64) {
        let mut perms: Vec<[usize; 3]> = vec![
            [i, j, k],
            [i, k, j],
            [j, i, k],
            [j, k, i],
            [k, i, j],
            [k, j, i],
        ];
        perms.sort();
        perms.dedup();
        let share = val / perms.len() as f64;
        for p in perms {
            self.data[(p[0] * self.d + p[1]) * self.d + p[2]] += share;
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let v = self.get(i, j, k);
                    for p in [
                        self.get(i, k, j),
                        self.get(j, i, k),
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(k, j, i),
                    ] {
                        worst = worst.max((v - p).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let dev = self.max_asymmetry();
        if dev > tol {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(())
    }

    /// Averages over index permutations, writing one canonical value per
    /// sorted index class so the result is exactly permutation-symmetric and
    /// symmetrization is bit-exact idempotent.
    pub fn symmetrize(&self) -> Sym3 {
        let d = self.d;
        let mut out = Sym3::zeros(d);
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    let vals = [
                        self.get(i, j, k),
                        self.get(i, k, j),
                        self.get(j, i, k),
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(k, j, i),
                    ];
                    let avg = if vals.iter().all(|v| v.to_bits() == vals[0].to_bits()) {
                        vals[0]
                    } else {
                        vals.iter().sum::<f64>() / 6.0
                    };
                    out.set_sym(i, j, k, avg);
                }
            }
        }
        out
    }

    /// `w_ijk x_i x_j x_k`
    #[inline]
    pub fn cubic(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let xij = x[i] * x[j];
                let base = (i * d + j) * d;
                let mut inner = 0.0;
                for k in 0..d {
                    inner += self.data[base + k] * x[k];
                }
                acc += xij * inner;
            }
        }
        acc
    }

    pub fn permuted(&self, perm: &[usize]) -> Sym3 {
        let d = self.d;
        let mut out = Sym3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    out.set(i, j, k, self.get(perm[i], perm[j], perm[k]));
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Sym3 {
        Sym3 {
            d: self.d,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl Sym4 {
    pub fn zeros(d: usize) -> Self {
        Sym4 {
            d,
            data: vec![0.0; d * d * d * d],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.d + j) * self.d + k) * self.d + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, val: f64) {
        self.data[((i * self.d + j) * self.d + k) * self.d + l] = val;
    }

    /// Writes `val` into every permutation of (i, j, k, l).
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, l: usize, val: f64) {
        let mut idx = [i, j, k, l];
        idx.sort();
        // iterate all 24 permutations via Heap's enumeration over the sorted base
        let perms = permutations4(idx);
        for p in perms {
            self.set(p[0], p[1], p[2], p[3], val);
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = self.get(i, j, k, l);
                        for p in permutations4([i, j, k, l]) {
                            worst = worst.max((v - self.get(p[0], p[1], p[2], p[3])).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let dev = self.max_asymmetry();
        if dev > tol {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(())
    }

    /// See [`Sym3::symmetrize`]: canonical per-class averaging, bit-exact
    /// idempotent.
    pub fn symmetrize(&self) -> Sym4 {
        let d = self.d;
        let mut out = Sym4::zeros(d);
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    for l in k..d {
                        let perms = permutations4([i, j, k, l]);
                        let vals: Vec<f64> = perms
                            .iter()
                            .map(|p| self.get(p[0], p[1], p[2], p[3]))
                            .collect();
                        let avg = if vals.iter().all(|v| v.to_bits() == vals[0].to_bits()) {
                            vals[0]
                        } else {
                            vals.iter().sum::<f64>() / 24.0
                        };
                        out.set_sym(i, j, k, l, avg);
                    }
                }
            }
        }
        out
    }

    /// `chi_ijkl x_i x_j x_k x_l`
    pub fn quartic(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let xij = x[i] * x[j];
                for k in 0..d {
                    let base = ((i * d + j) * d + k) * d;
                    let xijk = xij * x[k];
                    let mut inner = 0.0;
                    for l in 0..d {
                        inner += self.data[base + l] * x[l];
                    }
                    acc += xijk * inner;
                }
            }
        }
        acc
    }

    pub fn permuted(&self, perm: &[usize]) -> Sym4 {
        let d = self.d;
        let mut out = Sym4::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        out.set(i, j, k, l, self.get(perm[i], perm[j], perm[k], perm[l]));
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

fn permutations4(idx: [usize; 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    let mut a = idx;
    heap_permute(&mut a, 4, &mut out);
    out
}

fn heap_permute(a: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 1 {
        out.push(*a);
        return;
    }
    for i in 0..k {
        heap_permute(a, k - 1, out);
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

/// `u_i x_i`
#[inline]
pub fn dot(u: &[f64], x: &[f64]) -> f64 {
    u.iter().zip(x).map(|(a, b)| a * b).sum()
}
