//! The four batching CI constructions and their pivotal statistics for i.i.d.
//! (or pre-batched) data under a smooth-function estimand, plus the brute-force
//! coverage harness.
//!
//! With batch estimates psi_i = f(mean of batch i) and pooled estimate
//! psi_hat = f(mean of all data):
//!   batching    centers at mean(psi_i), scales by S_batch
//!   sectioning  centers at psi_hat,     scales by S_sec (deviations from psi_hat)
//!   SB          centers at psi_hat,     scales by S_batch
//!   SJ          centers at the jackknife mean of J_i = K psi_hat - (K-1) psi_loo_i,
//!               scales by the sample sd of the J_i
//! Each interval is center +/- t_{K-1,alpha/2} * S / sqrt(K).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DistributionSpec, ModelSpec};
use crate::par::{par_accumulate, substream, HitCounts};
use crate::student_t::t_quantile;

/// Batch layout: K batches of n samples, with an optional gap (used by the
/// dependent-data pipeline) of discarded samples between adjacent batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchLayout {
    pub k: u32,
    pub n: u32,
    #[serde(default)]
    pub gap: u32,
}

impl BatchLayout {
    pub fn new(k: u32, n: u32) -> Result<Self> {
        Self::with_gap(k, n, 0)
    }

    pub fn with_gap(k: u32, n: u32, gap: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("K", "need at least 2 batches"));
        }
        if n < 1 {
            return Err(Error::invalid("n", "need at least 1 sample per batch"));
        }
        Ok(BatchLayout { k, n, gap })
    }

    pub fn total(&self) -> usize {
        self.k as usize * self.n as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Batching,
    Sectioning,
    Sb,
    Sj,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Batching, Method::Sectioning, Method::Sb, Method::Sj];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Batching => "batching",
            Method::Sectioning => "sectioning",
            Method::Sb => "sb",
            Method::Sj => "sj",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batching" | "b" => Ok(Method::Batching),
            "sectioning" | "s" => Ok(Method::Sectioning),
            "sb" => Ok(Method::Sb),
            "sj" => Ok(Method::Sj),
            other => Err(Error::invalid(
                "method",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    TwoSidedSymmetric,
    LowerOneSided,
    UpperOneSided,
}

/// A realized confidence interval.
#[derive(Debug, Clone, Copy)]
pub struct IntervalResult {
    pub method: Method,
    pub center: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub sided: Sided,
    pub degenerate: bool,
}

impl IntervalResult {
    pub fn covers(&self, psi0: f64) -> bool {
        match self.sided {
            Sided::TwoSidedSymmetric => self.lower <= psi0 && psi0 <= self.upper,
            Sided::LowerOneSided => psi0 <= self.upper,
            Sided::UpperOneSided => psi0 >= self.lower,
        }
    }
}

/// A realized pivot value W.
#[derive(Debug, Clone, Copy)]
pub struct StatisticValue {
    pub method: Method,
    pub value: f64,
    pub psi0_used: f64,
    pub degenerate: bool,
}

/// Per-dataset summaries shared by the four constructions.
#[derive(Debug, Clone)]
pub struct BatchSummaries {
    pub k: u32,
    /// psi(P_hat_i), the batch estimates
    pub batch_psis: Vec<f64>,
    /// mean of the batch estimates (batching center)
    pub psi_bar: f64,
    /// psi(P_hat) on the pooled mean (sectioning / SB center)
    pub psi_hat: f64,
    pub s_batch: f64,
    pub s_sec: f64,
    /// jackknife mean of the J_i (SJ center)
    pub j_bar: f64,
    pub s_sj: f64,
}

impl BatchSummaries {
    /// Computes all summaries from flat row-major data (`k * n` rows of
    /// dimension `d`). The pooled estimate is evaluated on the mean of all
    /// `k * n` points.
    pub fn from_flat(data: &[f64], d: usize, k: u32, n: u32, model: &ModelSpec) -> Result<Self> {
        let rows = (k as usize) * (n as usize);
        if data.len() != rows * d {
            return Err(Error::DimensionMismatch(format!(
                "data has {} values, layout needs {}",
                data.len(),
                rows * d
            )));
        }
        if model.d != d {
            return Err(Error::DimensionMismatch(
                "model dimension differs from data dimension".into(),
            ));
        }
        let nf = n as f64;
        let mut batch_means = vec![0.0; k as usize * d];
        for (b, chunk) in data.chunks_exact(n as usize * d).enumerate() {
            let acc = &mut batch_means[b * d..(b + 1) * d];
            for row in chunk.chunks_exact(d) {
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a += x;
                }
            }
            for a in acc.iter_mut() {
                *a /= nf;
            }
        }
        Self::from_batch_means(&batch_means, d, k, model)
    }

    /// Computes all summaries from the K batch means directly. For equal batch
    /// sizes the pooled mean is the average of the batch means.
    pub fn from_batch_means(
        batch_means: &[f64],
        d: usize,
        k: u32,
        model: &ModelSpec,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("K", "need at least 2 batches"));
        }
        let kf = k as f64;
        let ku = k as usize;
        if batch_means.len() != ku * d {
            return Err(Error::DimensionMismatch(
                "batch mean buffer has the wrong size".into(),
            ));
        }

        let mut pooled = vec![0.0; d];
        for b in 0..ku {
            for j in 0..d {
                pooled[j] += batch_means[b * d + j];
            }
        }
        for p in pooled.iter_mut() {
            *p /= kf;
        }

        let mut batch_psis = Vec::with_capacity(ku);
        for b in 0..ku {
            batch_psis.push(model.eval(&batch_means[b * d..(b + 1) * d]));
        }
        let psi_bar = batch_psis.iter().sum::<f64>() / kf;
        let psi_hat = model.eval(&pooled);

        let mut loo = vec![0.0; d];
        let mut j_vals = Vec::with_capacity(ku);
        for b in 0..ku {
            for j in 0..d {
                loo[j] = (kf * pooled[j] - batch_means[b * d + j]) / (kf - 1.0);
            }
            let psi_loo = model.eval(&loo);
            j_vals.push(kf * psi_hat - (kf - 1.0) * psi_loo);
        }
        let j_bar = j_vals.iter().sum::<f64>() / kf;

        let mut ss_batch = 0.0;
        let mut ss_sec = 0.0;
        let mut ss_sj = 0.0;
        for b in 0..ku {
            let db = batch_psis[b] - psi_bar;
            ss_batch += db * db;
            let ds = batch_psis[b] - psi_hat;
            ss_sec += ds * ds;
            let dj = j_vals[b] - j_bar;
            ss_sj += dj * dj;
        }
        let s_batch = (ss_batch / (kf - 1.0)).sqrt();
        let s_sec = (ss_sec / (kf - 1.0)).sqrt();
        let s_sj = (ss_sj / (kf - 1.0)).sqrt();

        Ok(BatchSummaries {
            k,
            batch_psis,
            psi_bar,
            psi_hat,
            s_batch,
            s_sec,
            j_bar,
            s_sj,
        })
    }

    pub fn center(&self, method: Method) -> f64 {
        match method {
            Method::Batching => self.psi_bar,
            Method::Sectioning | Method::Sb => self.psi_hat,
            Method::Sj => self.j_bar,
        }
    }

    pub fn scale(&self, method: Method) -> f64 {
        match method {
            Method::Batching | Method::Sb => self.s_batch,
            Method::Sectioning => self.s_sec,
            Method::Sj => self.s_sj,
        }
    }

    /// Builds the interval given a precomputed critical value (upper alpha/2
    /// quantile for two-sided, upper alpha quantile for one-sided).
    pub fn interval(&self, method: Method, t_crit: f64, sided: Sided) -> IntervalResult {
        let center = self.center(method);
        let s = self.scale(method);
        let degenerate = s == 0.0;
        let hw = t_crit * s / (self.k as f64).sqrt();
        let (lower, upper) = match sided {
            Sided::TwoSidedSymmetric => (center - hw, center + hw),
            Sided::LowerOneSided => (f64::NEG_INFINITY, center + hw),
            Sided::UpperOneSided => (center - hw, f64::INFINITY),
        };
        IntervalResult {
            method,
            center,
            half_width: hw,
            lower,
            upper,
            sided,
            degenerate,
        }
    }

    /// Realized pivot W = sqrt(K) (center - psi0) / S. A degenerate dataset
    /// (zero scale) maps to 0 when the center hits psi0 exactly and +/- inf
    /// otherwise, which keeps the coverage identity |W| <= t <=> covered.
    pub fn statistic(&self, method: Method, psi0: f64) -> StatisticValue {
        let center = self.center(method);
        let s = self.scale(method);
        let degenerate = s == 0.0;
        let value = if degenerate {
            if center == psi0 {
                0.0
            } else {
                f64::INFINITY * (center - psi0).signum()
            }
        } else {
            (self.k as f64).sqrt() * (center - psi0) / s
        };
        StatisticValue {
            method,
            value,
            psi0_used: psi0,
            degenerate,
        }
    }
}

/// psi(P_hat_i) for each batch: f applied to each batch mean.
pub fn batch_estimates(
    data: &[f64],
    d: usize,
    layout: BatchLayout,
    model: &ModelSpec,
) -> Result<Vec<f64>> {
    let s = BatchSummaries::from_flat(data, d, layout.k, layout.n, model)?;
    Ok(s.batch_psis)
}

/// Critical value for the given sidedness.
pub fn critical_value(k: u32, alpha: f64, sided: Sided) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", "must be in (0,1)"));
    }
    let p = match sided {
        Sided::TwoSidedSymmetric => alpha / 2.0,
        Sided::LowerOneSided | Sided::UpperOneSided => alpha,
    };
    t_quantile(k - 1, p)
}

pub fn confidence_interval(
    data: &[f64],
    d: usize,
    layout: BatchLayout,
    model: &ModelSpec,
    method: Method,
    alpha: f64,
    sided: Sided,
) -> Result<IntervalResult> {
    let t_crit = critical_value(layout.k, alpha, sided)?;
    let s = BatchSummaries::from_flat(data, d, layout.k, layout.n, model)?;
    Ok(s.interval(method, t_crit, sided))
}

pub fn statistic(
    data: &[f64],
    d: usize,
    layout: BatchLayout,
    model: &ModelSpec,
    method: Method,
    psi0: f64,
) -> Result<StatisticValue> {
    let s = BatchSummaries::from_flat(data, d, layout.k, layout.n, model)?;
    Ok(s.statistic(method, psi0))
}

/// Result of a brute-force coverage experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub method: Method,
    pub coverage: f64,
    /// 1.96 sqrt(p (1-p) / reps)
    pub mc_halfwidth: f64,
    pub reps: u64,
    pub covered: u64,
    pub degenerate: u64,
}

impl CoverageReport {
    fn from_hits(method: Method, covered: u64, degenerate: u64, reps: u64) -> Self {
        let p = covered as f64 / reps as f64;
        CoverageReport {
            method,
            coverage: p,
            mc_halfwidth: 1.96 * (p * (1.0 - p) / reps as f64).sqrt(),
            reps,
            covered,
            degenerate,
        }
    }
}

/// Estimates coverage for several methods on shared datasets. Replication
/// `rep` draws its data from the substream (seed, rep), so results do not
/// depend on the worker count, and adding or removing methods does not change
/// any method's random numbers.
///
/// A degenerate interval counts as covering iff its center equals psi0.
pub fn empirical_coverage_multi(
    dist: &DistributionSpec,
    model: &ModelSpec,
    layout: BatchLayout,
    methods: &[Method],
    alpha: f64,
    sided: Sided,
    reps: u64,
    seed: u64,
) -> Result<Vec<CoverageReport>> {
    if reps < 1 {
        return Err(Error::invalid("reps", "need at least 1 replication"));
    }
    if !dist.can_sample() {
        return Err(Error::invalid(
            "distribution",
            "has no sampler; coverage needs one",
        ));
    }
    if dist.d != model.d {
        return Err(Error::DimensionMismatch(
            "distribution and model dimensions differ".into(),
        ));
    }
    for (m, dm) in model.mean_point.iter().zip(&dist.mean) {
        if (m - dm).abs() > 1e-9 {
            return Err(Error::invalid(
                "model.mean_point",
                "must equal the distribution mean for coverage of psi0 = f(E X)",
            ));
        }
    }
    let t_crit = critical_value(layout.k, alpha, sided)?;
    let d = dist.d;
    let k = layout.k;
    let n = layout.n;
    let rows = layout.total();
    let psi0 = model.psi0;

    let counts = par_accumulate(
        reps,
        || HitCounts::zero(methods.len()),
        || vec![0.0f64; rows * d],
        |rep, buf, acc: &mut HitCounts| {
            let mut rng = substream(seed, rep);
            for row in buf.chunks_exact_mut(d) {
                dist.sample_into(&mut rng, row);
            }
            let s =
                BatchSummaries::from_flat(buf, d, k, n, model).expect("layout validated at entry");
            let mut any_degenerate = false;
            for (slot, &m) in acc.hits.iter_mut().zip(methods) {
                let iv = s.interval(m, t_crit, sided);
                any_degenerate |= iv.degenerate;
                if iv.covers(psi0) {
                    *slot += 1;
                }
            }
            if any_degenerate {
                acc.degenerate += 1;
            }
            acc.total += 1;
        },
    );

    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &m)| CoverageReport::from_hits(m, counts.hits[i], counts.degenerate, reps))
        .collect())
}

pub fn empirical_coverage(
    dist: &DistributionSpec,
    model: &ModelSpec,
    layout: BatchLayout,
    method: Method,
    alpha: f64,
    sided: Sided,
    reps: u64,
    seed: u64,
) -> Result<CoverageReport> {
    let mut v = empirical_coverage_multi(dist, model, layout, &[method], alpha, sided, reps, seed)?;
    Ok(v.pop().expect("one method in, one report out"))
}
