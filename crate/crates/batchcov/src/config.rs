//! JSON experiment configuration.
//!
//! A single versioned document drives the `batchcov` binary. Unknown keys are
//! rejected everywhere (fail-closed) so a typo in an experiment definition
//! cannot silently fall back to a default.

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dependent::{Approach, Chain};
use crate::error::{Error, Result};
use crate::model::{DistributionSpec, Marginal, ModelSpec, PolyTerm};
use crate::stats::Method;
use crate::tensor::{Sym3, Sym4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Coverage,
    Coefficient,
    OracleK2,
    Compare,
    KSweep,
    FixedNSweep,
    Dependent,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coverage => "coverage",
            Command::Coefficient => "coefficient",
            Command::OracleK2 => "oracle-k2",
            Command::Compare => "compare",
            Command::KSweep => "k-sweep",
            Command::FixedNSweep => "fixed-n-sweep",
            Command::Dependent => "dependent",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub exps: Vec<u32>,
    pub coef: f64,
}

/// Target function: explicit polynomial terms or a named builtin with
/// hand-derived tensors (for non-polynomial examples).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    #[serde(default)]
    pub terms: Option<Vec<TermConfig>>,
    #[serde(default)]
    pub builtin: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub f: FunctionConfig,
    /// expansion point; defaults to the distribution mean
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantsConfig {
    pub mean: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub chi3: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub chi4: Option<Vec<Vec<Vec<Vec<f64>>>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistParams {
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub marginals: Option<Vec<String>>,
    #[serde(default)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    pub kind: String,
    #[serde(default)]
    pub params: Option<DistParams>,
    /// optional explicit cumulant tensors; these override sampler defaults
    #[serde(default)]
    pub cumulants: Option<CumulantsConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub command: Command,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub distribution: Option<DistributionConfig>,
    #[serde(default)]
    pub chain: Option<Chain>,
    #[serde(default)]
    pub k: Option<u32>,
    /// inclusive [lo, hi]
    #[serde(default)]
    pub k_range: Option<[u32; 2]>,
    #[serde(default)]
    pub k_list: Option<Vec<u32>>,
    #[serde(default)]
    pub n: Option<u32>,
    /// fixed total data size for the fixed-n-sweep regime
    #[serde(default)]
    pub total_n: Option<u32>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    /// explicit critical value; mutually exclusive with `alphas`
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub reps: Option<u64>,
    /// replication budget for coefficient estimation inside sweeps
    #[serde(default)]
    pub coeff_reps: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub sided: Option<crate::stats::Sided>,
    /// coefficient estimator for the `coefficient` command
    #[serde(default)]
    pub algorithm: Option<AlgorithmChoice>,
    /// comparison baseline for the `compare` command
    #[serde(default)]
    pub baseline: Option<Baseline>,
    /// K2 oracle parameter
    #[serde(default)]
    pub lambda: Option<f64>,
    // dependent-data settings
    #[serde(default)]
    pub approach: Option<Approach>,
    #[serde(default)]
    pub gap: Option<u32>,
    #[serde(default)]
    pub export_trajectory: Option<String>,
    #[serde(default)]
    pub trajectory_len: Option<usize>,
    /// write measured wall time into the artifact (disable for byte-identical
    /// rerun comparisons)
    #[serde(default)]
    pub timing: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Alg1,
    Alg2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Alg2,
    OracleK2,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config("document", e.to_string()))?;
        if cfg.version != 1 {
            return Err(Error::config(
                "version",
                format!("unsupported version {}, expected 1", cfg.version),
            ));
        }
        if let Some(reps) = cfg.reps {
            if reps == 0 {
                return Err(Error::config("reps", "must be positive"));
            }
        }
        Ok(cfg)
    }

    pub fn k_values(&self) -> Result<Vec<u32>> {
        if let Some(list) = &self.k_list {
            if list.is_empty() {
                return Err(Error::config("k_list", "must be non-empty"));
            }
            return Ok(list.clone());
        }
        if let Some([lo, hi]) = self.k_range {
            if lo > hi || lo < 2 {
                return Err(Error::config("k_range", "need 2 <= lo <= hi"));
            }
            return Ok((lo..=hi).collect());
        }
        if let Some(k) = self.k {
            return Ok(vec![k]);
        }
        Err(Error::config("k", "one of k, k_range, k_list is required"))
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| Method::ALL.to_vec())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn format(&self) -> OutputFormat {
        self.format.unwrap_or(OutputFormat::Csv)
    }

    pub fn timing(&self) -> bool {
        self.timing.unwrap_or(true)
    }

    /// Builds the distribution spec; `model` is used to default dimensions.
    pub fn build_distribution(&self) -> Result<DistributionSpec> {
        let dc = self
            .distribution
            .as_ref()
            .ok_or_else(|| Error::config("distribution", "required for this command"))?;
        let params = dc.params.clone().unwrap_or(DistParams {
            mean: None,
            sigma: None,
            marginals: None,
            d: None,
        });
        let mut dist = match dc.kind.as_str() {
            "normal" => {
                let mean = params
                    .mean
                    .clone()
                    .or_else(|| params.d.map(|d| vec![0.0; d]));
                let mean = mean.ok_or_else(|| {
                    Error::config("distribution.params", "normal needs `mean` or `d`")
                })?;
                let d = mean.len();
                let sigma = match &params.sigma {
                    Some(rows) => parse_matrix(rows, d, "distribution.params.sigma")?,
                    None => DMatrix::identity(d, d),
                };
                DistributionSpec::normal(mean, sigma)?
            }
            "exp_centered" => DistributionSpec::exp_centered(),
            "chisq1_centered" => DistributionSpec::chisq1_centered(),
            "normal_and_square" => DistributionSpec::normal_and_square(),
            "product" => {
                let names = params.marginals.clone().ok_or_else(|| {
                    Error::config("distribution.params.marginals", "required for product")
                })?;
                let mut marginals = Vec::with_capacity(names.len());
                for name in &names {
                    marginals.push(match name.as_str() {
                        "std_normal" | "normal" => Marginal::StdNormal,
                        "exp_centered" => Marginal::ExpCentered,
                        "chisq1_centered" => Marginal::Chisq1Centered,
                        other => {
                            return Err(Error::config(
                                "distribution.params.marginals",
                                format!("unknown marginal `{other}`"),
                            ))
                        }
                    });
                }
                DistributionSpec::product(marginals)
            }
            "custom" => {
                let c = dc.cumulants.as_ref().ok_or_else(|| {
                    Error::config("distribution.cumulants", "required for kind custom")
                })?;
                let d = c.mean.len();
                let sigma = parse_matrix(&c.sigma, d, "distribution.cumulants.sigma")?;
                let chi3 = parse_chi3(c.chi3.as_deref(), d)?;
                let chi4 = parse_chi4(c.chi4.as_deref(), d)?;
                return DistributionSpec::from_cumulants(c.mean.clone(), sigma, chi3, chi4, false);
            }
            other => {
                return Err(Error::config(
                    "distribution.kind",
                    format!("unknown kind `{other}`"),
                ))
            }
        };
        if let Some(c) = &dc.cumulants {
            let d = dist.d;
            let sigma = parse_matrix(&c.sigma, d, "distribution.cumulants.sigma")?;
            let chi3 = parse_chi3(c.chi3.as_deref(), d)?;
            let chi4 = parse_chi4(c.chi4.as_deref(), d)?;
            dist = dist.with_cumulants(sigma, chi3, chi4)?;
        }
        Ok(dist)
    }

    /// Builds the model spec at the distribution mean (or an explicit point).
    pub fn build_model(&self, dist: &DistributionSpec) -> Result<ModelSpec> {
        let mc = self
            .model
            .as_ref()
            .ok_or_else(|| Error::config("model", "required for this command"))?;
        let mean = mc.mean.clone().unwrap_or_else(|| dist.mean.clone());
        match (&mc.f.terms, &mc.f.builtin) {
            (Some(terms), None) => {
                let poly: Vec<PolyTerm> = terms
                    .iter()
                    .map(|t| PolyTerm::new(t.exps.clone(), t.coef))
                    .collect();
                ModelSpec::polynomial(dist.d, poly, mean)
            }
            (None, Some(name)) => match name.as_str() {
                "sin_x_plus_y2" => Ok(ModelSpec::sin_x_plus_y2()),
                other => Err(Error::config(
                    "model.f.builtin",
                    format!("unknown builtin `{other}`"),
                )),
            },
            _ => Err(Error::config(
                "model.f",
                "exactly one of `terms` or `builtin` is required",
            )),
        }
    }
}

fn parse_matrix(rows: &[Vec<f64>], d: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::config(field, format!("must be {d} x {d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn parse_chi3(raw: Option<&[Vec<Vec<f64>>]>, d: usize) -> Result<Sym3> {
    let mut out = Sym3::zeros(d);
    let Some(raw) = raw else {
        return Ok(out);
    };
    if raw.len() != d {
        return Err(Error::config("distribution.cumulants.chi3", "wrong shape"));
    }
    for i in 0..d {
        if raw[i].len() != d {
            return Err(Error::config("distribution.cumulants.chi3", "wrong shape"));
        }
        for j in 0..d {
            if raw[i][j].len() != d {
                return Err(Error::config("distribution.cumulants.chi3", "wrong shape"));
            }
            for k in 0..d {
                out.set(i, j, k, raw[i][j][k]);
            }
        }
    }
    out.check_symmetric(1e-9)?;
    Ok(out)
}

fn parse_chi4(raw: Option<&[Vec<Vec<Vec<f64>>>]>, d: usize) -> Result<Sym4> {
    let mut out = Sym4::zeros(d);
    let Some(raw) = raw else {
        return Ok(out);
    };
    if raw.len() != d {
        return Err(Error::config("distribution.cumulants.chi4", "wrong shape"));
    }
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                if raw[i].len() != d || raw[i][j].len() != d || raw[i][j][k].len() != d {
                    return Err(Error::config("distribution.cumulants.chi4", "wrong shape"));
                }
                for l in 0..d {
                    out.set(i, j, k, l, raw[i][j][k][l]);
                }
            }
        }
    }
    out.check_symmetric(1e-9)?;
    Ok(out)
}
