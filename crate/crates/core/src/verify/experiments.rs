use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gridfun::{exponential_growth_constant, regular_variation_constant, tilted_jfold, GridFunction, PowerFunction};
use crate::limits::inverse_stable_path;
use crate::processes::{
    coupled_counts, counting_step_function, decoupled_generations, mean_and_se, sample_prw_points, DistributionSpec,
    MeanFunction, WalkSpec,
};
use crate::rng::{domain, Substreams};
use crate::special::{factorial, gamma, normal_cdf};
use crate::stepfun::{ConvolveOptions, StepFunction};

use super::config::{ExperimentConfig, Theorem};
use super::ks::{kolmogorov_survival, ks_one_sample, ks_two_sample};
use super::report::{CellReport, CheckReport, ExperimentReport, Verdict};

/// Minimum p-value for the j = 1 coupled/decoupled two-sample comparison.
pub const CROSS_CHECK_ALPHA: f64 = 0.01;
/// Relative tolerance of the heavy-tail mean check.
pub const HEAVY_TAIL_MEAN_TOL: f64 = 0.1;

/// Runs the experiment named by `cfg.theorem`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.theorem {
        Theorem::CoupledClt => run_coupled_clt(cfg),
        Theorem::DecoupledClt => run_decoupled_clt(cfg),
        Theorem::HeavyTail => run_heavy_tail(cfg),
        Theorem::MeanIdentity => run_mean_identity(cfg),
        Theorem::LemmaReg => run_lemma_reg(cfg),
        Theorem::LemmaExp => run_lemma_exp(cfg),
        Theorem::PropAlmsure => {
            let mut report = if cfg.beta() > 0.0 { run_lemma_exp(cfg)? } else { run_lemma_reg(cfg)? };
            report.theorem = Theorem::PropAlmsure;
            Ok(report)
        }
    }
}

fn empty_report(cfg: &ExperimentConfig) -> ExperimentReport {
    ExperimentReport {
        theorem: cfg.theorem,
        seed: cfg.seed,
        replicas: cfg.replicas,
        t: cfg.t(),
        ks_alpha: cfg.ks_alpha,
        pass_fraction: cfg.pass_fraction,
        cells: Vec::new(),
        checks: Vec::new(),
        verdict: Verdict::Fail,
    }
}

/// `(j, u)` pairs in row-major order of `j_list × u_list`.
fn grid_cells(cfg: &ExperimentConfig) -> Vec<(u32, f64)> {
    cfg.j_list.iter().flat_map(|&j| cfg.u_list.iter().map(move |&u| (j, u))).collect()
}

/// For each replica, the values `Z_j(u·t)` in [`grid_cells`] order.
fn collect_values(
    cfg: &ExperimentConfig,
    per_replica: impl Fn(u64) -> Result<Vec<StepFunction>> + Sync,
) -> Result<Vec<Vec<f64>>> {
    let cells = grid_cells(cfg);
    let t = cfg.t();
    (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let gens = per_replica(r)?;
            Ok(cells.iter().map(|&(j, u)| gens[j as usize - 1].evaluate(u * t)).collect())
        })
        .collect()
}

fn column(values: &[Vec<f64>], k: usize) -> Vec<f64> {
    values.iter().map(|row| row[k]).collect()
}

/// Centering `E[Y_j(u·t)]` with its standard error, for each cell.
fn centering(cfg: &ExperimentConfig, walk: &WalkSpec) -> Result<Vec<(f64, f64)>> {
    let t = cfg.t();
    let cells = grid_cells(cfg);
    if let Some(mean) = MeanFunction::exact(walk) {
        return cells.iter().map(|&(j, u)| Ok((mean.generation_mean(j, u * t, cfg.atom_cap())?, 0.0))).collect();
    }
    let n_mean = cfg.mean_replicas();
    if n_mean < 2 {
        return Err(Error::MeanUnavailable("no closed-form mean and mean_replicas < 2".into()));
    }
    let streams = Substreams::new(cfg.seed).with_domain(domain::MEAN);
    let horizon = cfg.max_u() * t;
    let values: Vec<Vec<f64>> = (0..n_mean as u64)
        .into_par_iter()
        .map(|r| {
            let gens = decoupled_generations(walk, cfg.max_j(), horizon, &streams.replica(r), cfg.population_cap())?;
            Ok(cells.iter().map(|&(j, u)| gens[j as usize - 1].evaluate(u * t)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..cells.len()).map(|k| mean_and_se(&column(&values, k))).collect())
}

/// Gaussian-target cells for the two CLT experiments. `prefactor(j)` is the
/// constant in front of the centered count.
fn gaussian_cells(
    cfg: &ExperimentConfig,
    walk: &WalkSpec,
    values: &[Vec<f64>],
    centers: &[(f64, f64)],
    prefactor: impl Fn(u32) -> f64,
) -> Result<Vec<CellReport>> {
    let t = cfg.t();
    let (mu, s2) = (walk.mu(), walk.sigma2());
    grid_cells(cfg)
        .into_iter()
        .enumerate()
        .map(|(k, (j, u))| {
            let jf = j as f64;
            let scale = statistic_scale(mu, s2, t, j, prefactor(j));
            let (center, center_se) = centers[k];
            let samples: Vec<f64> = values.iter().map(|row| scale * (row[k] - center)).collect();
            let variance = u.powf(2.0 * jf - 1.0) / (2.0 * jf - 1.0);
            let ks = ks_one_sample(&samples, |x| normal_cdf(x, variance))?;
            // A shift δ of the centering moves a Gaussian CDF by at most
            // δ·φ(0)/σ; three standard errors of that shift are forgiven.
            let slack = 3.0 * scale.abs() * center_se / (2.0 * std::f64::consts::PI * variance).sqrt();
            let d = (ks.statistic - slack).max(0.0);
            let p = kolmogorov_survival(ks.effective_n.sqrt() * d);
            let (mean, se) = mean_and_se(&samples);
            let mut cell = CellReport::blank(j, u, samples.len(), format!("N(0, {variance})"));
            cell.ks_d = Some(ks.statistic);
            cell.p_value = Some(p);
            cell.estimate = Some(mean);
            cell.expected = Some(0.0);
            cell.standard_error = Some(se);
            cell.verdict = Verdict::from_bool(p >= cfg.ks_alpha);
            cell.samples = samples;
            Ok(cell)
        })
        .collect()
}

/// `prefactor / (μ^{-2j-1} σ² t^{2j-1})^{1/2}`.
fn statistic_scale(mu: f64, s2: f64, t: f64, j: u32, prefactor: f64) -> f64 {
    let jf = j as f64;
    prefactor / (mu.powf(-2.0 * jf - 1.0) * s2 * t.powf(2.0 * jf - 1.0)).sqrt()
}

/// Coupled branching random walk: `((j-1)!/j)(X_j(ut) - E[Y_j(ut)])` over
/// `(μ^{-2j-1} σ² t^{2j-1})^{1/2}` against `N(0, u^{2j-1}/(2j-1))`.
pub fn run_coupled_clt(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let walk = cfg.walk()?;
    let centers = centering(cfg, walk)?;
    let values = collect_values(cfg, |r| coupled_replica(cfg, walk, r))?;
    let mut report = empty_report(cfg);
    report.cells = gaussian_cells(cfg, walk, &values, &centers, |j| factorial(j - 1) / j as f64)?;
    Ok(report.finish())
}

fn coupled_replica(cfg: &ExperimentConfig, walk: &WalkSpec, r: u64) -> Result<Vec<StepFunction>> {
    let horizon = cfg.max_u() * cfg.t();
    let streams = Substreams::new(cfg.seed).replica(r);
    let points = sample_prw_points(walk, horizon, &mut streams.stream(1, 0), cfg.point_cap())?;
    let x = counting_step_function(&points)?;
    x.jfold_all(cfg.max_j(), ConvolveOptions::new(horizon).atom_cap(cfg.atom_cap()))
}

fn decoupled_replica(cfg: &ExperimentConfig, walk: &WalkSpec, r: u64) -> Result<Vec<StepFunction>> {
    let horizon = cfg.max_u() * cfg.t();
    decoupled_generations(walk, cfg.max_j(), horizon, &Substreams::new(cfg.seed).replica(r), cfg.population_cap())
}

/// Decoupled branching random walk: `(j-1)!(Y_j(ut) - E[Y_j(ut)])` with the
/// same normalization and targets as [`run_coupled_clt`]. When `j = 1` is
/// tested, the coupled samples of the same seed are compared with a
/// two-sample KS test.
pub fn run_decoupled_clt(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let walk = cfg.walk()?;
    let centers = centering(cfg, walk)?;
    let values = collect_values(cfg, |r| decoupled_replica(cfg, walk, r))?;
    let mut report = empty_report(cfg);
    report.cells = gaussian_cells(cfg, walk, &values, &centers, |j| factorial(j - 1))?;

    if cfg.j_list.contains(&1) {
        let coupled = ExperimentConfig { j_list: vec![1], ..cfg.clone() };
        let coupled_values = collect_values(&coupled, |r| coupled_replica(&coupled, walk, r))?;
        for (k, &u) in cfg.u_list.iter().enumerate() {
            let decoupled_col = report.cell(1, u).map(|c| c.samples.clone()).unwrap_or_default();
            let center = centers[grid_cells(cfg).iter().position(|&c| c == (1, u)).expect("cell")].0;
            let scale = statistic_scale(walk.mu(), walk.sigma2(), cfg.t(), 1, 1.0);
            let coupled_col: Vec<f64> = column(&coupled_values, k).into_iter().map(|x| scale * (x - center)).collect();
            let ks = ks_two_sample(&coupled_col, &decoupled_col)?;
            report.checks.push(CheckReport {
                name: format!("coupled_vs_decoupled_j1_u{u}"),
                value: ks.p_value,
                threshold: CROSS_CHECK_ALPHA,
                detail: format!("two-sample KS D = {}", ks.statistic),
                verdict: Verdict::from_bool(ks.p_value > CROSS_CHECK_ALPHA),
            });
        }
    }
    Ok(report.finish())
}

/// Heavy-tailed walk: `P{ξ > ut}^j · Y_j(ut)` against independent draws of
/// `∫_{[0,u]} S^←_β(u-y) d y^{β(j-1)} / (Γ(1-β)^{j-1} Γ(1+β(j-1)))`.
pub fn run_heavy_tail(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let walk = cfg.walk()?;
    let beta = match walk.xi {
        DistributionSpec::Pareto { tail_index, .. } => tail_index,
        _ => unreachable!("validated"),
    };
    let t = cfg.t();
    let values = collect_values(cfg, |r| decoupled_replica(cfg, walk, r))?;

    let (dt, dt_v, max_u) = (cfg.dt(), cfg.dt_v(), cfg.max_u());
    let limit_streams = Substreams::new(cfg.seed).with_domain(domain::LIMIT);
    let cells = grid_cells(cfg);
    let limits: Vec<Vec<f64>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let path = inverse_stable_path(beta, dt_v, dt, max_u, &mut limit_streams.replica(r).stream(0, 0))?;
            let mut by_j: Vec<(u32, GridFunction)> = Vec::new();
            cells
                .iter()
                .map(|&(j, u)| {
                    if !by_j.iter().any(|(jj, _)| *jj == j) {
                        let gamma_exp = beta * (j - 1) as f64;
                        let norm = gamma(1.0 - beta).powi(j as i32 - 1) * gamma(1.0 + gamma_exp);
                        by_j.push((j, path.power_measure_convolve(gamma_exp)?.scale(1.0 / norm)));
                    }
                    let g = &by_j.iter().find(|(jj, _)| *jj == j).expect("inserted").1;
                    g.at(u).ok_or_else(|| Error::InvalidConfig(format!("u = {u} is not a multiple of dt = {dt}")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut report = empty_report(cfg);
    for (k, &(j, u)) in cells.iter().enumerate() {
        let weight = walk.xi.tail(u * t).powi(j as i32);
        let samples: Vec<f64> = values.iter().map(|row| weight * row[k]).collect();
        let limit = column(&limits, k);
        let ks = ks_two_sample(&samples, &limit)?;
        let (mean, se) = mean_and_se(&samples);
        let expected = u.powf(beta * j as f64) / (gamma(1.0 - beta).powi(j as i32) * gamma(1.0 + beta * j as f64));
        let rel = (mean / expected - 1.0).abs();
        let mut cell = CellReport::blank(j, u, samples.len(), format!("limit sample, beta = {beta}"));
        cell.ks_d = Some(ks.statistic);
        cell.p_value = Some(ks.p_value);
        cell.estimate = Some(mean);
        cell.expected = Some(expected);
        cell.relative_error = Some(rel);
        cell.standard_error = Some(se);
        cell.verdict = Verdict::from_bool(ks.p_value >= cfg.ks_alpha);
        cell.samples = samples;
        report.cells.push(cell);
        report.checks.push(CheckReport {
            name: format!("mean_j{j}_u{u}"),
            value: rel,
            threshold: HEAVY_TAIL_MEAN_TOL,
            detail: format!("MC mean {mean} vs {expected}"),
            verdict: Verdict::from_bool(rel <= HEAVY_TAIL_MEAN_TOL),
        });
    }
    Ok(report.finish())
}

/// `E[X_2(t)] = E[X(t/2)] + 2 ∫_{[0,t]} E[X(t-y)] dE[X(y/2)]` for standard
/// walks, with the left side estimated from `N` replicas.
pub fn run_mean_identity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let walk = cfg.walk()?;
    let mean = MeanFunction::exact(walk)
        .ok_or_else(|| Error::MeanUnavailable("mean identity needs a closed-form mean function".into()))?;
    let t = cfg.t();
    let rhs = mean_identity_rhs(&mean, t, cfg.dt(), cfg.atom_cap())?;

    let streams = Substreams::new(cfg.seed);
    let counts: Vec<f64> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let points = sample_prw_points(walk, t, &mut streams.replica(r).stream(1, 0), cfg.point_cap())?;
            Ok(coupled_counts(&counting_step_function(&points)?, 2, t, cfg.atom_cap())?.evaluate(t))
        })
        .collect::<Result<_>>()?;
    let (est, se) = mean_and_se(&counts);
    let diff = (est - rhs).abs();
    let mut cell = CellReport::blank(2, 1.0, counts.len(), format!("E[X_2({t})] = {rhs}"));
    cell.estimate = Some(est);
    cell.expected = Some(rhs);
    cell.standard_error = Some(se);
    cell.relative_error = Some(if rhs != 0.0 { diff / rhs.abs() } else { diff });
    cell.verdict = Verdict::from_bool(diff <= 3.0 * se + 1e-9 * rhs.abs().max(1.0));
    let mut report = empty_report(cfg);
    report.cells.push(cell);
    Ok(report.finish())
}

/// Right side of the mean identity. Linear means use grid quadrature with
/// step `dt`; lattice means are evaluated exactly as step functions.
pub fn mean_identity_rhs(mean: &MeanFunction, t: f64, dt: f64, atom_cap: usize) -> Result<f64> {
    match mean {
        MeanFunction::Linear { rate } => {
            let steps = (t / dt).round() as usize;
            if steps == 0 {
                return Ok(0.0);
            }
            let dt = t / steps as f64;
            let b = PowerFunction::new(*rate, 1.0)?;
            let f = b.sample(dt, t)?;
            let half = GridFunction::monotone(dt, f.values().iter().map(|v| 0.5 * v).collect())?;
            let conv = f.stieltjes_convolve(&half)?;
            Ok(b.evaluate(t / 2.0) + 2.0 * conv.values()[steps])
        }
        MeanFunction::Lattice { .. } => {
            let b = mean.lattice_steps(t)?;
            let half = b.dilate(2.0)?;
            let conv = b.convolve(&half, t, atom_cap)?;
            Ok(mean.evaluate(t / 2.0).value + 2.0 * conv.evaluate(t))
        }
        MeanFunction::MonteCarlo(_) => Err(Error::MeanUnavailable("mean identity needs a closed-form mean".into())),
    }
}

fn ratio_cell(cfg: &ExperimentConfig, j: u32, ratio: f64, target: f64, label: String) -> CellReport {
    let rel = (ratio / target - 1.0).abs();
    let mut cell = CellReport::blank(j, cfg.t(), 0, label);
    cell.estimate = Some(ratio);
    cell.expected = Some(target);
    cell.relative_error = Some(rel);
    cell.verdict = Verdict::from_bool(rel <= cfg.relative_tol());
    cell
}

/// `f^{*(j)}(T)/f(T)^j` for `f(t) = A t^α` by grid quadrature against
/// `Γ(1+α)^j/Γ(1+αj)`. The cell's `u` field holds `T`.
pub fn run_lemma_reg(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (alpha, big_t) = (cfg.alpha(), cfg.t());
    let f = PowerFunction::new(cfg.amplitude, alpha)?;
    let grid = f.sample(cfg.dt(), big_t)?;
    let mut report = empty_report(cfg);
    for &j in &cfg.j_list {
        let folded = grid.jfold(j)?;
        let end = *folded.values().last().expect("nonempty grid");
        let ratio = end / grid.values().last().expect("nonempty grid").powi(j as i32);
        let target = regular_variation_constant(alpha, j);
        report.cells.push(ratio_cell(cfg, j, ratio, target, format!("Gamma(1+{alpha})^{j}/Gamma(1+{alpha}*{j})")));
    }
    Ok(report.finish())
}

/// `f^{*(j)}(T)` for `f(t) = A e^{βt} t^α` from the tilted quadrature,
/// divided by `C e^{βT} T^{(1+α)j-1}`. Both sides are compared after
/// multiplying by `e^{-βT}`, so `e^{βT}` itself is never formed.
pub fn run_lemma_exp(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (a, alpha, beta, big_t) = (cfg.amplitude, cfg.alpha(), cfg.beta(), cfg.t());
    let tilted = PowerFunction::new(a, alpha)?.sample(cfg.dt(), big_t)?;
    let mut report = empty_report(cfg);
    for &j in &cfg.j_list {
        let folded = tilted_jfold(&tilted, beta, j)?;
        let end = *folded.values().last().expect("nonempty grid");
        if !end.is_finite() {
            return Err(Error::OverflowGuard { exponent: beta * big_t });
        }
        let coef = exponential_growth_constant(a, alpha, beta, j);
        let asymptote = coef * big_t.powf((1.0 + alpha) * j as f64 - 1.0);
        if !(asymptote.is_finite() && asymptote > 0.0) {
            return Err(Error::OverflowGuard { exponent: beta * big_t });
        }
        report.cells.push(ratio_cell(cfg, j, end / asymptote, 1.0, format!("ratio to {coef} e^(bT) T^((1+a)j-1)")));
    }
    Ok(report.finish())
}
