use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{DistributionSpec, WalkSpec, DEFAULT_POINT_CAP, DEFAULT_POPULATION_CAP};
use crate::stepfun::DEFAULT_ATOM_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    CoupledClt,
    DecoupledClt,
    HeavyTail,
    MeanIdentity,
    LemmaReg,
    LemmaExp,
    PropAlmsure,
}

impl Theorem {
    pub fn name(&self) -> &'static str {
        match self {
            Theorem::CoupledClt => "coupled_clt",
            Theorem::DecoupledClt => "decoupled_clt",
            Theorem::HeavyTail => "heavy_tail",
            Theorem::MeanIdentity => "mean_identity",
            Theorem::LemmaReg => "lemma_reg",
            Theorem::LemmaExp => "lemma_exp",
            Theorem::PropAlmsure => "prop_almsure",
        }
    }

    pub fn is_statistical(&self) -> bool {
        matches!(self, Theorem::CoupledClt | Theorem::DecoupledClt | Theorem::HeavyTail | Theorem::MeanIdentity)
    }
}

pub const MIN_REPLICAS: usize = 100;

/// One verification experiment. Fields left out of the JSON fall back to
/// per-theorem defaults through the accessor methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theorem: Theorem,
    #[serde(default)]
    pub walk: Option<WalkSpec>,
    #[serde(default = "default_j_list")]
    pub j_list: Vec<u32>,
    #[serde(default = "default_u_list")]
    pub u_list: Vec<f64>,
    /// Time scale `t` of the statistics, or the evaluation point `T` of the
    /// deterministic lemmas.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_replicas", alias = "N", alias = "n")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Grid step of quadratures and limit paths.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Grid step in the subordinator's own time.
    #[serde(default)]
    pub dt_v: Option<f64>,
    #[serde(default = "default_ks_alpha")]
    pub ks_alpha: f64,
    #[serde(default)]
    pub relative_tol: Option<f64>,
    /// Fraction of KS cells that must pass.
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
    /// Index `α` of the power (or the `t^α` factor for the exponential lemma).
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Exponential rate `β ≥ 0` for the exponential lemma and `prop_almsure`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Replicas of the separate Monte Carlo pass estimating `E[Y_j]`.
    #[serde(default)]
    pub mean_replicas: Option<usize>,
    #[serde(default)]
    pub atom_cap: Option<usize>,
    #[serde(default)]
    pub population_cap: Option<usize>,
    #[serde(default)]
    pub point_cap: Option<usize>,
}

fn default_j_list() -> Vec<u32> {
    vec![1]
}
fn default_u_list() -> Vec<f64> {
    vec![1.0]
}
fn default_replicas() -> usize {
    1000
}
fn default_ks_alpha() -> f64 {
    0.001
}
fn default_pass_fraction() -> f64 {
    0.9
}
fn default_amplitude() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn new(theorem: Theorem) -> Self {
        ExperimentConfig {
            theorem,
            walk: None,
            j_list: default_j_list(),
            u_list: default_u_list(),
            t: None,
            replicas: default_replicas(),
            seed: 0,
            dt: None,
            dt_v: None,
            ks_alpha: default_ks_alpha(),
            relative_tol: None,
            pass_fraction: default_pass_fraction(),
            alpha: None,
            beta: None,
            amplitude: default_amplitude(),
            mean_replicas: None,
            atom_cap: None,
            population_cap: None,
            point_cap: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn t(&self) -> f64 {
        self.t.unwrap_or(match self.theorem {
            Theorem::CoupledClt | Theorem::DecoupledClt => 400.0,
            Theorem::HeavyTail => 1e4,
            Theorem::MeanIdentity => 10.0,
            Theorem::LemmaReg => 1.0,
            Theorem::LemmaExp | Theorem::PropAlmsure => 60.0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(match self.theorem {
            Theorem::LemmaReg => 1e-4,
            Theorem::LemmaExp => 1e-2,
            Theorem::PropAlmsure => {
                if self.beta() > 0.0 {
                    1e-2
                } else {
                    1e-4
                }
            }
            Theorem::HeavyTail => 1e-2,
            _ => 1e-3,
        })
    }

    pub fn dt_v(&self) -> f64 {
        self.dt_v.unwrap_or(1e-4)
    }

    pub fn relative_tol(&self) -> f64 {
        self.relative_tol.unwrap_or(match self.theorem {
            Theorem::LemmaReg => 1e-3,
            Theorem::PropAlmsure if self.beta() == 0.0 => 1e-3,
            _ => 0.05,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(match self.theorem {
            Theorem::LemmaExp => 1.0,
            _ => 0.0,
        })
    }

    pub fn mean_replicas(&self) -> usize {
        self.mean_replicas.unwrap_or(20 * self.replicas)
    }

    pub fn atom_cap(&self) -> usize {
        self.atom_cap.unwrap_or(DEFAULT_ATOM_CAP)
    }

    pub fn population_cap(&self) -> usize {
        self.population_cap.unwrap_or(DEFAULT_POPULATION_CAP)
    }

    pub fn point_cap(&self) -> usize {
        self.point_cap.unwrap_or(DEFAULT_POINT_CAP)
    }

    pub fn max_j(&self) -> u32 {
        self.j_list.iter().copied().max().unwrap_or(1)
    }

    pub fn max_u(&self) -> f64 {
        self.u_list.iter().copied().fold(0.0, f64::max)
    }

    pub fn walk(&self) -> Result<&WalkSpec> {
        self.walk.as_ref().ok_or_else(|| Error::InvalidConfig(format!("{} requires a walk", self.theorem.name())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.j_list.is_empty() || self.j_list.contains(&0) {
            return bad("j_list must be nonempty with entries >= 1".into());
        }
        if self.u_list.is_empty() || self.u_list.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
            return bad("u_list must be nonempty with positive entries".into());
        }
        if !(self.t() > 0.0 && self.t().is_finite()) {
            return bad(format!("t must be positive, got {}", self.t()));
        }
        if !(self.dt() > 0.0 && self.dt_v() > 0.0) {
            return bad("dt and dt_v must be positive".into());
        }
        if !(self.ks_alpha > 0.0 && self.ks_alpha < 1.0) {
            return bad(format!("ks_alpha must lie in (0, 1), got {}", self.ks_alpha));
        }
        if !(self.pass_fraction > 0.0 && self.pass_fraction <= 1.0) {
            return bad(format!("pass_fraction must lie in (0, 1], got {}", self.pass_fraction));
        }
        if !(self.relative_tol() > 0.0) {
            return bad("relative_tol must be positive".into());
        }
        if self.theorem.is_statistical() && self.replicas < MIN_REPLICAS {
            return bad(format!("statistical experiments need at least {MIN_REPLICAS} replicas, got {}", self.replicas));
        }
        if let Some(w) = &self.walk {
            w.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        match self.theorem {
            Theorem::CoupledClt | Theorem::DecoupledClt => {
                let w = self.walk()?;
                let s2 = w.sigma2();
                if !(s2 > 0.0 && s2.is_finite()) {
                    return bad(format!("CLT experiments need 0 < Var[xi] < inf, got {s2}"));
                }
            }
            Theorem::HeavyTail => {
                let w = self.walk()?;
                match w.xi {
                    DistributionSpec::Pareto { tail_index, .. } if tail_index > 0.0 && tail_index < 1.0 => {}
                    _ => return bad("heavy_tail needs a pareto xi with tail index in (0, 1)".into()),
                }
            }
            Theorem::MeanIdentity => {
                if !self.walk()?.eta_equals_xi {
                    return bad("mean_identity needs a standard walk (eta_equals_xi = true)".into());
                }
            }
            Theorem::LemmaReg | Theorem::LemmaExp | Theorem::PropAlmsure => {
                if !(self.alpha() > 0.0) || !(self.amplitude > 0.0) {
                    return bad("alpha and amplitude must be positive".into());
                }
                if !(self.beta() >= 0.0) {
                    return bad("beta must be >= 0".into());
                }
                if self.theorem == Theorem::LemmaExp && self.beta() <= 0.0 {
                    return bad("lemma_exp needs beta > 0".into());
                }
                if self.j_list.iter().any(|&j| j < 2) {
                    return bad("deterministic convolution lemmas need j >= 2".into());
                }
            }
        }
        Ok(())
    }
}
