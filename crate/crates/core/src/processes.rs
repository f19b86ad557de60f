//! Globally perturbed random walks and the generation counts of coupled and
//! decoupled branching random walks built on them.
//!
//! Points are `T_1 = η_1` and `T_k = ξ_1 + … + ξ_{k-1} + η_k` for i.i.d.
//! nonnegative pairs `(ξ_k, η_k)`.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gridfun::PowerFunction;
use crate::rng::{ReplicaStreams, Substreams};
use crate::special::erfc;
use crate::stepfun::StepFunction;

pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;
pub const DEFAULT_POINT_CAP: usize = 10_000_000;

/// Law of a nonnegative step or perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Constant { value: f64 },
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    /// `P{ξ > t} = (t/scale)^{-tail_index}` for `t ≥ scale`.
    Pareto { tail_index: f64, scale: f64 },
    /// `exp(N)` with `N` normal of mean `m` and variance `v`.
    Lognormal { m: f64, v: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistributionSpec::Constant { value } => value >= 0.0 && value.is_finite(),
            DistributionSpec::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            DistributionSpec::Uniform { a, b } => a >= 0.0 && a < b && b.is_finite(),
            DistributionSpec::Pareto { tail_index, scale } => {
                tail_index > 0.0 && tail_index.is_finite() && scale > 0.0 && scale.is_finite()
            }
            DistributionSpec::Lognormal { m, v } => m.is_finite() && v > 0.0 && v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("parameters out of range: {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Constant { value } => value,
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Uniform { a, b } => 0.5 * (a + b),
            DistributionSpec::Pareto { tail_index, scale } => {
                if tail_index > 1.0 {
                    tail_index * scale / (tail_index - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            DistributionSpec::Lognormal { m, v } => (m + 0.5 * v).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Constant { .. } => 0.0,
            DistributionSpec::Exponential { rate } => 1.0 / (rate * rate),
            DistributionSpec::Uniform { a, b } => (b - a).powi(2) / 12.0,
            DistributionSpec::Pareto { tail_index: k, scale: s } => {
                if k > 2.0 {
                    s * s * k / ((k - 1.0).powi(2) * (k - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            DistributionSpec::Lognormal { m, v } => (v.exp() - 1.0) * (2.0 * m + v).exp(),
        }
    }

    /// `P{ξ > t}`.
    pub fn tail(&self, t: f64) -> f64 {
        match *self {
            DistributionSpec::Constant { value } => f64::from(u8::from(value > t)),
            DistributionSpec::Exponential { rate } => {
                if t < 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            DistributionSpec::Uniform { a, b } => ((b - t) / (b - a)).clamp(0.0, 1.0),
            DistributionSpec::Pareto { tail_index, scale } => {
                if t < scale {
                    1.0
                } else {
                    (t / scale).powf(-tail_index)
                }
            }
            DistributionSpec::Lognormal { m, v } => {
                if t <= 0.0 {
                    1.0
                } else {
                    0.5 * erfc((t.ln() - m) / (2.0 * v).sqrt())
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistributionSpec::Constant { value } => value,
            DistributionSpec::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            DistributionSpec::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            DistributionSpec::Pareto { tail_index, scale } => {
                // inverse CDF with U in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                scale * u.powf(-1.0 / tail_index)
            }
            DistributionSpec::Lognormal { m, v } => LogNormal::new(m, v.sqrt()).expect("validated").sample(rng),
        }
    }
}

/// Law of the pair `(ξ, η)`. With `eta_equals_xi` every `η_k` reuses the
/// draw of `ξ_k`, so `T_k = ξ_1 + … + ξ_k` is a standard random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSpec {
    pub xi: DistributionSpec,
    pub eta: DistributionSpec,
    #[serde(default)]
    pub eta_equals_xi: bool,
}

impl WalkSpec {
    pub fn new(xi: DistributionSpec, eta: DistributionSpec) -> Self {
        WalkSpec { xi, eta, eta_equals_xi: false }
    }

    pub fn standard(xi: DistributionSpec) -> Self {
        WalkSpec { xi, eta: xi, eta_equals_xi: true }
    }

    pub fn validate(&self) -> Result<()> {
        self.xi.validate()?;
        self.eta.validate()?;
        if self.eta_equals_xi && self.xi != self.eta {
            return Err(invalid("eta_equals_xi requires identical xi and eta laws"));
        }
        if self.xi == (DistributionSpec::Constant { value: 0.0 }) {
            return Err(Error::DegenerateWalk("xi is identically zero, so every bounded interval holds infinitely many points".into()));
        }
        Ok(())
    }

    /// `μ = E[ξ]`.
    pub fn mu(&self) -> f64 {
        self.xi.mean()
    }

    /// `σ² = Var[ξ]`.
    pub fn sigma2(&self) -> f64 {
        self.xi.variance()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: WalkSpec = serde_json::from_str(s)?;
        w.validate()?;
        Ok(w)
    }
}

/// All points `T_k ≤ horizon`, sorted.
///
/// Generation stops once `S_{k-1} = ξ_1 + … + ξ_{k-1}` exceeds the horizon;
/// since `η ≥ 0` implies `T_k ≥ S_{k-1}`, no point below the horizon is missed.
/// `point_cap` bounds the number of generated pairs.
pub fn sample_prw_points<R: Rng + ?Sized>(spec: &WalkSpec, horizon: f64, rng: &mut R, point_cap: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let mut points = Vec::new();
    let mut partial = 0.0;
    let mut generated = 0usize;
    while partial <= horizon {
        generated += 1;
        if generated > point_cap {
            return Err(Error::PointCapExceeded { cap: point_cap });
        }
        let xi = spec.xi.sample(rng);
        let eta = if spec.eta_equals_xi { xi } else { spec.eta.sample(rng) };
        let t = partial + eta;
        if t <= horizon {
            points.push(t);
        }
        partial += xi;
    }
    points.sort_unstable_by(f64::total_cmp);
    Ok(points)
}

/// `t ↦ #{k : T_k ≤ t}` as a step function with unit atoms.
pub fn counting_step_function(times: &[f64]) -> Result<StepFunction> {
    StepFunction::counting(times)
}

/// Generation-`j` counts of the coupled branching random walk: the `j`-fold
/// Lebesgue–Stieltjes convolution of `x` with itself.
pub fn coupled_counts(x: &StepFunction, j: u32, horizon: f64, atom_cap: usize) -> Result<StepFunction> {
    x.jfold(j, horizon, atom_cap)
}

/// Birth-time counting functions of generations `1..=j` of a decoupled
/// branching random walk on `[0, horizon]`.
///
/// Generation 1 uses stream `(1, 0)` of the replica. Individual `i` (in
/// birth-time order) of generation `g` draws its offspring displacements from
/// stream `(g + 1, i)`.
pub fn decoupled_generations(
    spec: &WalkSpec,
    j: u32,
    horizon: f64,
    streams: &ReplicaStreams,
    population_cap: usize,
) -> Result<Vec<StepFunction>> {
    if j == 0 {
        return Err(invalid("generation j must be >= 1"));
    }
    let point_cap = population_cap.max(1);
    let mut births = sample_prw_points(spec, horizon, &mut streams.stream(1, 0), point_cap)?;
    if births.len() > population_cap {
        return Err(Error::PopulationCapExceeded { cap: population_cap, generation: 1 });
    }
    let mut out = vec![counting_step_function(&births)?];
    for generation in 2..=j {
        let mut next = Vec::new();
        for (i, &tau) in births.iter().enumerate() {
            let mut rng = streams.stream(generation, i as u64);
            let children = sample_prw_points(spec, horizon - tau, &mut rng, point_cap)?;
            next.extend(children.into_iter().map(|x| tau + x).filter(|&x| x <= horizon));
            if next.len() > population_cap {
                return Err(Error::PopulationCapExceeded { cap: population_cap, generation });
            }
        }
        next.sort_unstable_by(f64::total_cmp);
        out.push(counting_step_function(&next)?);
        births = next;
    }
    Ok(out)
}

/// Generation-`j` birth-time counts `Y_j` of the decoupled branching random walk.
pub fn decoupled_brw(spec: &WalkSpec, j: u32, horizon: f64, streams: &ReplicaStreams, population_cap: usize) -> Result<StepFunction> {
    Ok(decoupled_generations(spec, j, horizon, streams, population_cap)?.pop().expect("j >= 1"))
}

/// Value of a mean function, with a standard error when it is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValue {
    pub value: f64,
    pub standard_error: f64,
}

/// `b(t) = E[X(t)]`, exact where a closed form exists.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanFunction {
    /// `b(t) = rate·t` (Poisson process: standard walk with exponential steps).
    Linear { rate: f64 },
    /// Deterministic lattice `T_k = offset + (k-1)·step`.
    Lattice { step: f64, offset: f64 },
    MonteCarlo(MeanEstimator),
}

/// Options for the Monte Carlo fallback of [`mean_function`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMeanOptions {
    pub replicas: usize,
    pub horizon: f64,
    pub seed: u64,
    pub point_cap: usize,
}

impl MeanFunction {
    /// Closed form for the walks that have one.
    pub fn exact(spec: &WalkSpec) -> Option<MeanFunction> {
        match (spec.xi, spec.eta, spec.eta_equals_xi) {
            (DistributionSpec::Exponential { rate }, _, true) => Some(MeanFunction::Linear { rate }),
            (DistributionSpec::Constant { value: step }, DistributionSpec::Constant { value: offset }, _) if step > 0.0 => {
                let offset = if spec.eta_equals_xi { step } else { offset };
                Some(MeanFunction::Lattice { step, offset })
            }
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, MeanFunction::MonteCarlo(_))
    }

    pub fn evaluate(&self, t: f64) -> MeanValue {
        let value = match *self {
            MeanFunction::Linear { rate } => rate * t.max(0.0),
            MeanFunction::Lattice { step, offset } => {
                if t < offset {
                    0.0
                } else {
                    ((t - offset) / step).floor() + 1.0
                }
            }
            MeanFunction::MonteCarlo(ref est) => return est.evaluate(t),
        };
        MeanValue { value, standard_error: 0.0 }
    }

    /// `b_j = b^{*(j)}` at `t` in closed form, when available.
    pub fn generation_mean(&self, j: u32, t: f64, atom_cap: usize) -> Result<f64> {
        match *self {
            MeanFunction::Linear { rate } => Ok(PowerFunction::new(rate, 1.0)?.jfold(j)?.evaluate(t)),
            MeanFunction::Lattice { .. } => Ok(self.lattice_steps(t)?.jfold(j, t.max(0.0), atom_cap)?.evaluate(t)),
            MeanFunction::MonteCarlo(_) => {
                Err(Error::MeanUnavailable("no closed form for b_j; estimate E[Y_j] by simulation".into()))
            }
        }
    }

    /// The lattice mean as an exact step function on `[0, horizon]`.
    pub fn lattice_steps(&self, horizon: f64) -> Result<StepFunction> {
        match *self {
            MeanFunction::Lattice { step, offset } => {
                let n = if horizon < offset { 0 } else { ((horizon - offset) / step).floor() as usize + 1 };
                StepFunction::counting(&(0..n).map(|k| offset + k as f64 * step).collect::<Vec<_>>())?.with_horizon(horizon.max(0.0))
            }
            _ => Err(invalid("not a lattice mean function")),
        }
    }
}

/// Monte Carlo estimate of `b(t) = E[X(t)]` from independent point samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimator {
    samples: Vec<Vec<f64>>,
    horizon: f64,
}

impl MeanEstimator {
    pub fn new(spec: &WalkSpec, opts: McMeanOptions) -> Result<Self> {
        if opts.replicas < 2 {
            return Err(invalid("mean estimator needs at least 2 replicas"));
        }
        let streams = Substreams::new(opts.seed).with_domain(crate::rng::domain::MEAN);
        let samples = (0..opts.replicas as u64)
            .map(|r| sample_prw_points(spec, opts.horizon, &mut streams.replica(r).stream(1, 0), opts.point_cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(MeanEstimator { samples, horizon: opts.horizon })
    }

    pub fn replicas(&self) -> usize {
        self.samples.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Sample mean and standard error of `X(t)`; `t` is clamped to the horizon.
    pub fn evaluate(&self, t: f64) -> MeanValue {
        let t = t.min(self.horizon);
        let counts: Vec<f64> = self.samples.iter().map(|p| p.partition_point(|&x| x <= t) as f64).collect();
        let (mean, se) = mean_and_se(&counts);
        MeanValue { value: mean, standard_error: se }
    }
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Exact mean where available, otherwise a Monte Carlo estimator.
pub fn mean_function(spec: &WalkSpec, fallback: McMeanOptions) -> Result<MeanFunction> {
    spec.validate()?;
    match MeanFunction::exact(spec) {
        Some(m) => Ok(m),
        None => Ok(MeanFunction::MonteCarlo(MeanEstimator::new(spec, fallback)?)),
    }
}
