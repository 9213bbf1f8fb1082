//! Dependent-data batching: gap-separated batches and regenerative-cycle
//! batching, with example Markov-chain generators.
//!
//! The gap approach discards `gap` observations between adjacent batches of a
//! stationary sequence so batch averages are nearly independent, then builds
//! the usual CIs for f(E g(X)). The regenerative approach splits the
//! trajectory at visits to a recurrent atom into i.i.d. cycle pairs
//! (Y_i, tau_i) and targets the ratio E Y / E tau through the smooth-function
//! machinery with f(x, y) = x / y.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::par::{par_accumulate, substream, HitCounts};
use crate::stats::{critical_value, BatchSummaries, CoverageReport, Method, Sided};
use crate::tensor::{Sym2, Sym3};

/// Example chains. Each knows its stationary initialization and, where
/// defined, its regenerative atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chain {
    /// Finite-state chain with row-stochastic transition matrix and per-state
    /// observable values g(state).
    FiniteMarkov {
        transition: Vec<Vec<f64>>,
        values: Vec<f64>,
        atom: usize,
    },
    /// M/M/1 waiting-time sequence via the Lindley recursion; atom is the
    /// empty-queue state W = 0. Starts at 0 and discards a burn-in.
    Mm1Waiting { arrival: f64, service: f64 },
    /// AR(1) with normal innovations, started from its exact stationary law.
    Ar1 { rho: f64, innovation_sd: f64 },
}

/// Burn-in for chains without an exactly samplable stationary start.
const MM1_BURN_IN: usize = 1000;

#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub chain: Chain,
    /// known stationary mean of the observable, used as psi0 in coverage runs
    pub stationary_target: f64,
}

impl ChainSpec {
    pub fn new(chain: Chain) -> Result<Self> {
        chain.validate()?;
        let stationary_target = chain.stationary_mean()?;
        Ok(ChainSpec {
            chain,
            stationary_target,
        })
    }

    pub fn has_atom(&self) -> bool {
        !matches!(self.chain, Chain::Ar1 { .. })
    }

    /// Expected cycle length between atom visits, where known analytically.
    pub fn expected_cycle_length(&self) -> Option<f64> {
        match &self.chain {
            Chain::FiniteMarkov { atom, .. } => {
                let pi = self.chain.finite_stationary().ok()?;
                Some(1.0 / pi[*atom])
            }
            Chain::Mm1Waiting { arrival, service } => {
                let rho = arrival / service;
                Some(1.0 / (1.0 - rho))
            }
            Chain::Ar1 { .. } => None,
        }
    }
}

impl Chain {
    fn validate(&self) -> Result<()> {
        match self {
            Chain::FiniteMarkov {
                transition,
                values,
                atom,
            } => {
                let s = transition.len();
                if s == 0 || values.len() != s || *atom >= s {
                    return Err(Error::invalid(
                        "transition",
                        "need a square matrix with matching values and a valid atom state",
                    ));
                }
                for row in transition {
                    if row.len() != s {
                        return Err(Error::invalid("transition", "matrix must be square"));
                    }
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::invalid(
                            "transition",
                            "rows must be probability vectors summing to 1",
                        ));
                    }
                }
                Ok(())
            }
            Chain::Mm1Waiting { arrival, service } => {
                if *arrival <= 0.0 || *service <= 0.0 || arrival >= service {
                    return Err(Error::invalid(
                        "mm1",
                        "need 0 < arrival < service (utilization < 1)",
                    ));
                }
                Ok(())
            }
            Chain::Ar1 { rho, innovation_sd } => {
                if rho.abs() >= 1.0 {
                    return Err(Error::invalid("rho", "need |rho| < 1"));
                }
                if *innovation_sd <= 0.0 {
                    return Err(Error::invalid("innovation_sd", "must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Exact stationary distribution of a finite chain by solving pi P = pi
    /// with power iteration (validated by the residual).
    fn finite_stationary(&self) -> Result<Vec<f64>> {
        let Chain::FiniteMarkov { transition, .. } = self else {
            return Err(Error::invalid("chain", "not a finite chain"));
        };
        let s = transition.len();
        let mut pi = vec![1.0 / s as f64; s];
        let mut next = vec![0.0; s];
        for _ in 0..100_000 {
            for x in next.iter_mut() {
                *x = 0.0;
            }
            for i in 0..s {
                for j in 0..s {
                    next[j] += pi[i] * transition[i][j];
                }
            }
            let mut diff = 0.0f64;
            for (a, b) in pi.iter().zip(&next) {
                diff = diff.max((a - b).abs());
            }
            pi.copy_from_slice(&next);
            if diff < 1e-14 {
                break;
            }
        }
        let norm: f64 = pi.iter().sum();
        for x in pi.iter_mut() {
            *x /= norm;
        }
        Ok(pi)
    }

    fn stationary_mean(&self) -> Result<f64> {
        match self {
            Chain::FiniteMarkov { values, .. } => {
                let pi = self.finite_stationary()?;
                Ok(pi.iter().zip(values).map(|(p, v)| p * v).sum())
            }
            Chain::Mm1Waiting { arrival, service } => {
                // mean stationary waiting time of M/M/1
                Ok(arrival / (service * (service - arrival)))
            }
            Chain::Ar1 { .. } => Ok(0.0),
        }
    }
}

/// Stateful trajectory generator for one replication.
pub struct ChainWalker<'a, R: Rng> {
    chain: &'a Chain,
    rng: &'a mut R,
    state_idx: usize,
    state_val: f64,
    stationary: Option<Vec<f64>>,
}

impl<'a, R: Rng> ChainWalker<'a, R> {
    /// Starts the chain stationary (finite, AR(1)) or from the atom after a
    /// discarded burn-in (M/M/1).
    pub fn new(spec: &'a ChainSpec, rng: &'a mut R) -> Result<Self> {
        let (state_idx, state_val, stationary) = match &spec.chain {
            Chain::FiniteMarkov { values, .. } => {
                let pi = spec.chain.finite_stationary()?;
                let idx = sample_categorical(&pi, rng);
                (idx, values[idx], Some(pi))
            }
            Chain::Mm1Waiting { .. } => (0, 0.0, None),
            Chain::Ar1 { rho, innovation_sd } => {
                let sd = innovation_sd / (1.0 - rho * rho).sqrt();
                let z: f64 = rng.sample(StandardNormal);
                (0, sd * z, None)
            }
        };
        let mut walker = ChainWalker {
            chain: &spec.chain,
            rng,
            state_idx,
            state_val,
            stationary,
        };
        if matches!(spec.chain, Chain::Mm1Waiting { .. }) {
            for _ in 0..MM1_BURN_IN {
                walker.step();
            }
        }
        Ok(walker)
    }

    /// Observable value at the current state.
    #[inline]
    pub fn value(&self) -> f64 {
        self.state_val
    }

    #[inline]
    pub fn at_atom(&self) -> bool {
        match self.chain {
            Chain::FiniteMarkov { atom, .. } => self.state_idx == *atom,
            Chain::Mm1Waiting { .. } => self.state_val == 0.0,
            Chain::Ar1 { .. } => false,
        }
    }

    #[inline]
    pub fn step(&mut self) {
        match self.chain {
            Chain::FiniteMarkov {
                transition, values, ..
            } => {
                let row = &transition[self.state_idx];
                self.state_idx = sample_categorical(row, self.rng);
                self.state_val = values[self.state_idx];
            }
            Chain::Mm1Waiting { arrival, service } => {
                let s: f64 = Exp::new(*service).unwrap().sample(self.rng);
                let a: f64 = Exp::new(*arrival).unwrap().sample(self.rng);
                self.state_val = (self.state_val + s - a).max(0.0);
            }
            Chain::Ar1 { rho, innovation_sd } => {
                let z: f64 = self.rng.sample(StandardNormal);
                self.state_val = rho * self.state_val + innovation_sd * z;
            }
        }
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.value();
            self.step();
        }
    }

    /// Stationary distribution when the chain is finite.
    pub fn stationary(&self) -> Option<&[f64]> {
        self.stationary.as_deref()
    }
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Splits a trajectory into K gap-separated batches of length n: batch i is
/// `trajectory[i (n + gap) .. i (n + gap) + n)`, and the gap segments never
/// appear in any batch. Here n counts post-gap (retained) samples.
pub fn gap_batches(trajectory: &[f64], n: u32, k: u32, gap: u32) -> Result<Vec<f64>> {
    let need = k as usize * n as usize + (k as usize - 1) * gap as usize;
    if trajectory.len() < need {
        return Err(Error::TrajectoryTooShort {
            required: need,
            got: trajectory.len(),
        });
    }
    let mut out = Vec::with_capacity(k as usize * n as usize);
    for i in 0..k as usize {
        let start = i * (n as usize + gap as usize);
        out.extend_from_slice(&trajectory[start..start + n as usize]);
    }
    Ok(out)
}

/// Default gap prescription: ceil(n^delta) with delta = 1/2.
pub fn default_gap(n: u32) -> u32 {
    (n as f64).sqrt().ceil() as u32
}

/// A regenerative cycle: the sum of g over one atom-to-atom excursion and its
/// length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegenerativePair {
    pub y: f64,
    pub tau: u32,
}

/// Extracts consecutive regenerative cycles from a trajectory. Cycles run
/// from one atom visit up to (excluding) the next; observations before the
/// first visit and after the last are discarded.
pub fn regenerative_pairs<S>(
    trajectory: &[S],
    is_atom: impl Fn(&S) -> bool,
    g: impl Fn(&S) -> f64,
) -> Result<Vec<RegenerativePair>> {
    let visits: Vec<usize> = trajectory
        .iter()
        .enumerate()
        .filter_map(|(i, s)| is_atom(s).then_some(i))
        .collect();
    if visits.len() < 2 {
        return Err(Error::TooFewAtomVisits);
    }
    let mut out = Vec::with_capacity(visits.len() - 1);
    for w in visits.windows(2) {
        let (start, end) = (w[0], w[1]);
        let y = trajectory[start..end].iter().map(&g).sum();
        out.push(RegenerativePair {
            y,
            tau: (end - start) as u32,
        });
    }
    Ok(out)
}

/// Smooth-function model for the ratio estimand psi = E[Q1] / E[Q2] with
/// derivative tensors of f(x, y) = x / y at the supplied mean point.
pub fn ratio_model(mean_point: (f64, f64)) -> Result<ModelSpec> {
    let (a, b) = mean_point;
    if b <= 0.0 {
        return Err(Error::invalid(
            "mean_point",
            "second coordinate (mean cycle length) must be positive",
        ));
    }
    let f = std::sync::Arc::new(|x: &[f64]| x[0] / x[1]);
    let u = vec![1.0 / b, -a / (b * b)];
    let mut v = Sym2::zeros(2);
    // hess f = [[0, -1/b^2], [-1/b^2, 2a/b^3]], halved
    v.set(0, 1, -0.5 / (b * b));
    v.set(1, 0, -0.5 / (b * b));
    v.set(1, 1, a / (b * b * b));
    let mut w = Sym3::zeros(2);
    // third derivatives: f_xyy = 2/b^3, f_yyy = -6a/b^4, divided by 6
    w.set_sym(0, 1, 1, 1.0 / (3.0 * b * b * b));
    w.set(1, 1, 1, -a / (b * b * b * b));
    ModelSpec::custom(2, f, vec![a, b], u, v, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Gap,
    Regenerative,
}

/// Brute-force coverage of the dependent-data pipelines. For `Gap`, the model
/// is the identity on the observable mean (psi0 = stationary mean); for
/// `Regenerative`, batches hold n cycle pairs each and the ratio model is
/// used. `gap` falls back to ceil(sqrt(n)) when `None`.
#[allow(clippy::too_many_arguments)]
pub fn dependent_coverage(
    spec: &ChainSpec,
    method: Method,
    approach: Approach,
    k: u32,
    n: u32,
    gap: Option<u32>,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<CoverageReport> {
    let reports =
        dependent_coverage_multi(spec, &[method], approach, k, n, gap, alpha, reps, seed)?;
    Ok(reports.into_iter().next().expect("one method"))
}

#[allow(clippy::too_many_arguments)]
pub fn dependent_coverage_multi(
    spec: &ChainSpec,
    methods: &[Method],
    approach: Approach,
    k: u32,
    n: u32,
    gap: Option<u32>,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<CoverageReport>> {
    if k < 2 || n < 1 {
        return Err(Error::invalid("layout", "need K >= 2 and n >= 1"));
    }
    if approach == Approach::Regenerative && !spec.has_atom() {
        return Err(Error::invalid(
            "approach",
            "regenerative batching needs a chain with a recurrent atom",
        ));
    }
    let t_crit = critical_value(k, alpha, Sided::TwoSidedSymmetric)?;
    let gap_len = gap.unwrap_or_else(|| default_gap(n));

    // per-approach model and data dimension
    let (model, d) = match approach {
        Approach::Gap => {
            let m = ModelSpec::polynomial(
                1,
                vec![crate::model::PolyTerm::new(vec![1], 1.0)],
                vec![spec.stationary_target],
            )?;
            (m, 1usize)
        }
        Approach::Regenerative => {
            let e_tau = spec.expected_cycle_length().ok_or_else(|| {
                Error::invalid("chain", "expected cycle length unknown for this chain")
            })?;
            let e_y = spec.stationary_target * e_tau;
            (ratio_model((e_y, e_tau))?, 2usize)
        }
    };
    let psi0 = model.psi0;
    let rows = k as usize * n as usize;
    let pairs_needed = rows;
    let traj_len = rows + (k as usize - 1) * gap_len as usize;

    let counts = par_accumulate(
        reps,
        || HitCounts::zero(methods.len()),
        || (vec![0.0f64; traj_len.max(rows * d)], vec![0.0f64; rows * d]),
        |rep, (traj, data), acc: &mut HitCounts| {
            let mut rng = substream(seed, rep);
            match approach {
                Approach::Gap => {
                    let mut walker = ChainWalker::new(spec, &mut rng).expect("validated");
                    walker.fill(&mut traj[..traj_len]);
                    let batched =
                        gap_batches(&traj[..traj_len], n, k, gap_len).expect("length arranged");
                    data[..rows].copy_from_slice(&batched);
                }
                Approach::Regenerative => {
                    let mut walker = ChainWalker::new(spec, &mut rng).expect("validated");
                    // advance to the first atom visit (discarded burn-in)
                    let mut guard = 0u64;
                    while !walker.at_atom() {
                        walker.step();
                        guard += 1;
                        if guard > 100_000_000 {
                            panic!("no atom visit after 1e8 steps");
                        }
                    }
                    // collect K n complete cycles on the fly
                    let mut filled = 0usize;
                    while filled < pairs_needed {
                        let mut y = walker.value();
                        let mut tau = 1u32;
                        walker.step();
                        while !walker.at_atom() {
                            y += walker.value();
                            tau += 1;
                            walker.step();
                            guard += 1;
                            if guard > 200_000_000 {
                                panic!("cycle did not close after 2e8 steps");
                            }
                        }
                        data[filled * 2] = y;
                        data[filled * 2 + 1] = tau as f64;
                        filled += 1;
                    }
                }
            }
            let s = BatchSummaries::from_flat(&data[..rows * d], d, k, n, &model)
                .expect("layout arranged");
            let mut any_degenerate = false;
            for (slot, &m) in acc.hits.iter_mut().zip(methods) {
                let iv = s.interval(m, t_crit, Sided::TwoSidedSymmetric);
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
        .map(|(i, &m)| {
            let p = counts.hits[i] as f64 / reps as f64;
            CoverageReport {
                method: m,
                coverage: p,
                mc_halfwidth: 1.96 * (p * (1.0 - p) / reps as f64).sqrt(),
                reps,
                covered: counts.hits[i],
                degenerate: counts.degenerate,
            }
        })
        .collect())
}

/// Simulates one trajectory of observable values, for CSV export.
pub fn simulate_trajectory(spec: &ChainSpec, len: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = substream(seed, 0);
    let mut walker = ChainWalker::new(spec, &mut rng)?;
    let mut out = vec![0.0; len];
    walker.fill(&mut out);
    Ok(out)
}

/// Two-state symmetric example chain used in tests and examples.
pub fn two_state_chain(p_stay: f64) -> Result<ChainSpec> {
    ChainSpec::new(Chain::FiniteMarkov {
        transition: vec![vec![p_stay, 1.0 - p_stay], vec![1.0 - p_stay, p_stay]],
        values: vec![0.0, 1.0],
        atom: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gap_batches_index_arithmetic() {
        let traj: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let out = gap_batches(&traj, 3, 2, 2).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 2.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn gap_zero_is_contiguous() {
        let traj: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let out = gap_batches(&traj, 3, 2, 0).unwrap();
        assert_eq!(out, traj);
    }

    #[test]
    fn gap_prescription_sqrt() {
        assert_eq!(default_gap(100), 10);
        // bookkeeping: K batches of n plus K-1 gaps
        let n = 100u32;
        let k = 3u32;
        let g = default_gap(n);
        let traj = vec![0.0; (k * n + (k - 1) * g) as usize];
        assert!(gap_batches(&traj, n, k, g).is_ok());
        let short = vec![0.0; (k * n + (k - 1) * g - 1) as usize];
        assert!(gap_batches(&short, n, k, g).is_err());
    }

    #[test]
    fn regenerative_pairs_cycle_extraction() {
        // states 0,1,1,0,1,0 with atom 0 and g = identity on the state label
        let traj = [0u8, 1, 1, 0, 1, 0];
        let pairs = regenerative_pairs(&traj, |s| *s == 0, |s| *s as f64).unwrap();
        assert_eq!(
            pairs,
            vec![
                RegenerativePair { y: 2.0, tau: 3 },
                RegenerativePair { y: 1.0, tau: 2 }
            ]
        );
        // lossless partition: total tau spans first to last visit
        let total: u32 = pairs.iter().map(|p| p.tau).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn too_few_atom_visits_is_an_error() {
        let traj = [1u8, 1, 0, 1];
        match regenerative_pairs(&traj, |s| *s == 0, |s| *s as f64) {
            Err(Error::TooFewAtomVisits) => {}
            other => panic!("expected TooFewAtomVisits, got {other:?}"),
        }
    }

    #[test]
    fn bernoulli_cycle_length_is_geometric() {
        // i.i.d. Bernoulli(p) "chain" as a finite Markov chain with identical
        // rows; atom {0}: E tau = 1 / (1 - p)
        let p = 0.7;
        let spec = ChainSpec::new(Chain::FiniteMarkov {
            transition: vec![vec![1.0 - p, p], vec![1.0 - p, p]],
            values: vec![0.0, 1.0],
            atom: 0,
        })
        .unwrap();
        let traj = simulate_trajectory(&spec, 60_000, 3).unwrap();
        let pairs = regenerative_pairs(&traj, |v| *v == 0.0, |v| *v).unwrap();
        let mean_tau: f64 = pairs.iter().map(|p| p.tau as f64).sum::<f64>() / pairs.len() as f64;
        let expect = 1.0 / (1.0 - p);
        // SE of the mean of geometric(1-p) cycle lengths
        let sd = (p / ((1.0 - p) * (1.0 - p))).sqrt();
        let se = sd / (pairs.len() as f64).sqrt();
        assert!(
            (mean_tau - expect).abs() < 5.0 * se,
            "mean tau {mean_tau} expect {expect}"
        );
    }

    #[test]
    fn mm1_cycles_start_at_zero_waiting() {
        let spec = ChainSpec::new(Chain::Mm1Waiting {
            arrival: 0.5,
            service: 1.0,
        })
        .unwrap();
        let traj = simulate_trajectory(&spec, 5_000, 11).unwrap();
        let pairs = regenerative_pairs(&traj, |v| *v == 0.0, |v| *v).unwrap();
        assert!(pairs.len() > 100);
        // every cycle starts with waiting time 0, so Y excludes that zero term
        // and tau >= 1
        for p in &pairs {
            assert!(p.tau >= 1);
        }
    }

    #[test]
    fn ratio_model_calculus() {
        let m = ratio_model((2.0, 4.0)).unwrap();
        assert_relative_eq!(m.psi0, 0.5);
        assert_relative_eq!(m.u[0], 0.25);
        assert_relative_eq!(m.u[1], -0.125);

        let m = ratio_model((1.0, 1.0)).unwrap();
        assert_eq!(m.u, vec![1.0, -1.0]);
        assert_relative_eq!(m.v.get(1, 1), 1.0);
        assert_relative_eq!(m.v.get(0, 1), -0.5);

        assert!(ratio_model((1.0, 0.0)).is_err());
    }

    #[test]
    fn ratio_model_tensors_match_finite_differences() {
        let (a, b) = (1.7, 2.3);
        let m = ratio_model((a, b)).unwrap();
        let f = |x: &[f64]| x[0] / x[1];
        let h = 1e-4;
        // gradient
        for i in 0..2 {
            let mut xp = [a, b];
            let mut xm = [a, b];
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((m.u[i] - fd).abs() < 1e-6);
        }
        // hessian / 2
        for i in 0..2 {
            for j in 0..2 {
                let mut x = [a, b];
                let eval = |x: &[f64]| f(x);
                x[i] += h;
                x[j] += h;
                let fpp = eval(&x);
                x = [a, b];
                x[i] += h;
                x[j] -= h;
                let fpm = eval(&x);
                x = [a, b];
                x[i] -= h;
                x[j] += h;
                let fmp = eval(&x);
                x = [a, b];
                x[i] -= h;
                x[j] -= h;
                let fmm = eval(&x);
                let fd = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                assert!(
                    (m.v.get(i, j) - fd / 2.0).abs() < 1e-6,
                    "v[{i}{j}] = {} vs fd {}",
                    m.v.get(i, j),
                    fd / 2.0
                );
            }
        }
    }

    #[test]
    fn two_state_stationary_mean() {
        let spec = two_state_chain(0.7).unwrap();
        assert_relative_eq!(spec.stationary_target, 0.5, epsilon = 1e-10);
        assert_relative_eq!(spec.expected_cycle_length().unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn regenerative_point_estimate_consistency() {
        // psi(P_hat) -> stationary mean as cycles grow
        let spec = two_state_chain(0.6).unwrap();
        let mut errs = Vec::new();
        for (i, cycles) in [200usize, 3200].iter().enumerate() {
            let mut acc = 0.0;
            let reps = 20;
            for r in 0..reps {
                let traj =
                    simulate_trajectory(&spec, cycles * 4 + 100, (i * reps + r) as u64).unwrap();
                let pairs = regenerative_pairs(&traj, |v| *v == 0.0, |v| *v).unwrap();
                let take = pairs.len().min(*cycles);
                let ysum: f64 = pairs[..take].iter().map(|p| p.y).sum();
                let tsum: f64 = pairs[..take].iter().map(|p| p.tau as f64).sum();
                acc += (ysum / tsum - spec.stationary_target).abs();
            }
            errs.push(acc / reps as f64);
        }
        // error should shrink roughly like 1/sqrt(cycles): ratio near 4
        let ratio = errs[0] / errs[1];
        assert!(ratio > 2.0, "consistency ratio {ratio}, errors {errs:?}");
    }

    #[test]
    fn iid_disguised_chain_matches_gap_free_coverage() {
        // transition rows identical => i.i.d. samples; gap vs no gap must agree
        // in distribution (same seed path => identical batches when gap = 0)
        let p = 0.5;
        let spec = ChainSpec::new(Chain::FiniteMarkov {
            transition: vec![vec![1.0 - p, p], vec![1.0 - p, p]],
            values: vec![0.0, 1.0],
            atom: 0,
        })
        .unwrap();
        let a = dependent_coverage(
            &spec,
            Method::Batching,
            Approach::Gap,
            5,
            20,
            Some(0),
            0.1,
            4_000,
            21,
        )
        .unwrap();
        let b = dependent_coverage(
            &spec,
            Method::Batching,
            Approach::Gap,
            5,
            20,
            Some(7),
            0.1,
            4_000,
            21,
        )
        .unwrap();
        // both estimate the same coverage; allow combined MC error
        assert!(
            (a.coverage - b.coverage).abs() < a.mc_halfwidth + b.mc_halfwidth,
            "{} vs {}",
            a.coverage,
            b.coverage
        );
    }

    #[test]
    fn ar1_gap_improves_coverage_directionally() {
        let spec = ChainSpec::new(Chain::Ar1 {
            rho: 0.5,
            innovation_sd: 1.0,
        })
        .unwrap();
        let no_gap = dependent_coverage(
            &spec,
            Method::Batching,
            Approach::Gap,
            10,
            50,
            Some(0),
            0.1,
            6_000,
            33,
        )
        .unwrap();
        let with_gap = dependent_coverage(
            &spec,
            Method::Batching,
            Approach::Gap,
            10,
            50,
            None, // ceil(sqrt(50)) = 8
            0.1,
            6_000,
            33,
        )
        .unwrap();
        assert!(
            (with_gap.coverage - 0.9).abs() < (no_gap.coverage - 0.9).abs(),
            "gap {} vs no gap {}",
            with_gap.coverage,
            no_gap.coverage
        );
    }

    #[test]
    fn ar1_has_no_atom() {
        let spec = ChainSpec::new(Chain::Ar1 {
            rho: 0.3,
            innovation_sd: 1.0,
        })
        .unwrap();
        assert!(!spec.has_atom());
        let res = dependent_coverage(
            &spec,
            Method::Sj,
            Approach::Regenerative,
            4,
            10,
            None,
            0.1,
            100,
            1,
        );
        assert!(res.is_err());
    }

    #[test]
    fn regenerative_two_state_coverage_smoke() {
        let spec = two_state_chain(0.5).unwrap();
        let rep = dependent_coverage(
            &spec,
            Method::Sectioning,
            Approach::Regenerative,
            10,
            50,
            None,
            0.1,
            2_000,
            5,
        )
        .unwrap();
        assert!(
            (rep.coverage - 0.9).abs() < 0.06,
            "coverage {}",
            rep.coverage
        );
    }
}
