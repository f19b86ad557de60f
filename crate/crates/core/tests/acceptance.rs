//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.
//!
//! `cargo test -p lsconv-core --test acceptance`

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;

use lsconv_core::gridfun::GridFunction;
use lsconv_core::limits::{brownian_grid, inverse_stable_mean, riemann_liouville, w_j_from_path};
use lsconv_core::processes::DistributionSpec::{Exponential, Pareto};
use lsconv_core::rng::{domain, Substreams};
use lsconv_core::stepfun::{ConvolveOptions, StepFunction};
use lsconv_core::verify::{run, ExperimentConfig, ExperimentReport, Theorem};
use lsconv_core::WalkSpec;

/// Seed used by every stochastic criterion.
const SEED: u64 = 271_828;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- criterion 1

/// Atoms on the dyadic grid `k/8` with integer weights, so every sum and
/// product below is exact in floating point.
fn random_atoms(rng: &mut impl Rng) -> Vec<(i64, i64)> {
    let n = rng.random_range(0..=50);
    (0..n).map(|_| (rng.random_range(0..=80), rng.random_range(1..=5))).collect()
}

fn to_step(atoms: &[(i64, i64)]) -> StepFunction {
    StepFunction::from_atoms(atoms.iter().map(|&(k, w)| (k as f64 / 8.0, w as f64))).unwrap()
}

fn brute_force(f: &[(i64, i64)], g: &[(i64, i64)], horizon_eighths: i64) -> BTreeMap<i64, i64> {
    let mut out = BTreeMap::new();
    for &(a, wa) in f {
        for &(b, wb) in g {
            if a + b <= horizon_eighths {
                *out.entry(a + b).or_insert(0) += wa * wb;
            }
        }
    }
    out
}

fn as_map(f: &StepFunction) -> BTreeMap<i64, i64> {
    f.atoms().map(|(x, w)| ((x * 8.0) as i64, w as i64)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let streams = Substreams::new(SEED).with_domain(domain::AUXILIARY);
    let mut failures = Vec::new();
    let cases = 1000;
    for case in 0..cases {
        let mut rng = streams.replica(case).stream(0, 0);
        let (fa, ga, ha) = (random_atoms(&mut rng), random_atoms(&mut rng), random_atoms(&mut rng));
        let (f, g, h) = (to_step(&fa), to_step(&ga), to_step(&ha));
        let horizon_eighths = rng.random_range(0..=240);
        let horizon = horizon_eighths as f64 / 8.0;
        let opts = ConvolveOptions::new(horizon);
        let fg = f.convolve_with(&g, opts).unwrap();
        let gf = g.convolve_with(&f, opts).unwrap();

        let mut ok = as_map(&fg) == brute_force(&fa, &ga, horizon_eighths);
        ok &= fg.atoms().eq(gf.atoms());
        ok &= f.convolve_with(&StepFunction::dirac(), opts).unwrap().atoms().eq(f.truncate(horizon).atoms());
        let fgh = fg.convolve_with(&h, opts).unwrap();
        let f_gh = f.convolve_with(&g.convolve_with(&h, opts).unwrap(), opts).unwrap();
        ok &= fgh.atoms().eq(f_gh.atoms());

        // untruncated products for the transform identity
        let full = ConvolveOptions::new(20.0);
        let fg_full = f.convolve_with(&g, full).unwrap();
        for s in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let lhs = fg_full.laplace_stieltjes(s);
            let rhs = f.laplace_stieltjes(s) * g.laplace_stieltjes(s);
            ok &= (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(f64::MIN_POSITIVE);
        }
        if !ok {
            failures.push(case);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && elapsed < 1.0,
        format!("{} / {cases} cases pass, {elapsed:.3} s (limit 1 s); failing cases {failures:?}", cases as usize - failures.len()),
    )
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Outcome {
    let mut cfg = ExperimentConfig::new(Theorem::LemmaReg);
    cfg.j_list = vec![2, 3];
    cfg.t = Some(1.0);
    cfg.dt = Some(1e-4);
    cfg.relative_tol = Some(1e-3);
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 0.5, 2.0] {
        cfg.alpha = Some(alpha);
        let report = run(&cfg).unwrap();
        for c in &report.cells {
            let err = c.relative_error.unwrap();
            pass &= err <= 1e-3;
            parts.push(format!("a={alpha},j={}: rel err {err:.2e}", c.j));
        }
        if alpha == 1.0 {
            let target = report.cell(2, 1.0).unwrap().expected.unwrap();
            pass &= (target - 0.5).abs() < 1e-12;
        }
        pass &= report.passed();
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3() -> Outcome {
    let mut cfg = ExperimentConfig::new(Theorem::LemmaExp);
    cfg.amplitude = 1.0;
    cfg.alpha = Some(1.0);
    cfg.beta = Some(1.0);
    cfg.j_list = vec![2];
    cfg.t = Some(60.0);
    cfg.dt = Some(0.01);
    cfg.relative_tol = Some(0.05);
    let lemma = run(&cfg).unwrap();
    cfg.theorem = Theorem::PropAlmsure;
    let prop = run(&cfg).unwrap();
    let ratio = lemma.cells[0].estimate.unwrap();
    let pass = (ratio - 1.0).abs() <= 0.05 && lemma.passed() && prop.passed();
    outcome(pass, format!("ratio {ratio:.6} at T = 60 (|ratio - 1| <= 0.05 required; exact convolution gives 1 + 3/T = 1.05)"))
}

// ------------------------------------------------------ stochastic experiments

fn poisson() -> WalkSpec {
    WalkSpec::standard(Exponential { rate: 1.0 })
}

fn config_4() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Theorem::MeanIdentity);
    cfg.walk = Some(poisson());
    cfg.t = Some(10.0);
    cfg.replicas = 10_000;
    cfg.seed = SEED;
    cfg
}

fn config_5() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Theorem::CoupledClt);
    cfg.walk = Some(poisson());
    cfg.j_list = vec![1, 2];
    cfg.u_list = vec![0.5, 1.0];
    cfg.t = Some(400.0);
    cfg.replicas = 4000;
    cfg.seed = SEED;
    cfg.ks_alpha = 0.001;
    cfg
}

fn config_6() -> ExperimentConfig {
    ExperimentConfig { theorem: Theorem::DecoupledClt, ..config_5() }
}

fn config_7() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Theorem::HeavyTail);
    cfg.walk = Some(WalkSpec::standard(Pareto { tail_index: 0.5, scale: 1.0 }));
    cfg.t = Some(1e4);
    cfg.replicas = 2000;
    cfg.seed = SEED;
    cfg.ks_alpha = 0.001;
    cfg
}

fn criterion_4(report: &ExperimentReport) -> Outcome {
    let c = &report.cells[0];
    let (est, se) = (c.estimate.unwrap(), c.standard_error.unwrap());
    let pass = (est - 55.0).abs() <= 3.0 * se && report.passed();
    outcome(pass, format!("E[X_2(10)] = {est:.4} +/- {se:.4} vs 55; quadrature RHS {:.4}", c.expected.unwrap()))
}

fn ks_summary(report: &ExperimentReport) -> String {
    report
        .cells
        .iter()
        .map(|c| format!("j={},u={}: D={:.4} p={:.4}", c.j, c.u, c.ks_d.unwrap(), c.p_value.unwrap()))
        .collect::<Vec<_>>()
        .join("; ")
}

fn ks_cells_pass(report: &ExperimentReport) -> bool {
    let passed = report.cells.iter().filter(|c| c.p_value.unwrap() >= report.ks_alpha).count();
    passed as f64 >= 0.9 * report.cells.len() as f64
}

fn criterion_5(report: &ExperimentReport) -> Outcome {
    outcome(ks_cells_pass(report) && report.passed(), ks_summary(report))
}

fn criterion_6(report: &ExperimentReport) -> Outcome {
    let cross: Vec<String> = report.checks.iter().map(|c| format!("{} p={:.4}", c.name, c.value)).collect();
    let cross_ok = !report.checks.is_empty() && report.checks.iter().all(|c| c.value > 0.01);
    outcome(ks_cells_pass(report) && cross_ok && report.passed(), format!("{}; {}", ks_summary(report), cross.join("; ")))
}

fn criterion_7(report: &ExperimentReport) -> Outcome {
    let c = &report.cells[0];
    let mean = c.estimate.unwrap();
    let target = inverse_stable_mean(0.5, 1.0);
    let rel = (mean / target - 1.0).abs();
    let pass = c.p_value.unwrap() >= 0.001 && rel <= 0.1 && report.passed();
    outcome(pass, format!("{}; mean {mean:.4} vs 2/pi = {target:.4} (rel {rel:.3})", ks_summary(report)))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let streams = Substreams::new(SEED).with_domain(domain::LIMIT);
    let mut worst_ratio: f64 = 0.0;
    let mut non_monotone = 0;
    for path in 0..100u64 {
        let fine = brownian_grid(1e-4, 1.0, &mut streams.replica(path).stream(0, 0)).unwrap();
        for j in [2u32, 3] {
            let mut prev = f64::INFINITY;
            for stride in [100usize, 10, 1] {
                let w: GridFunction = fine.subsample(stride).unwrap();
                let wj = w_j_from_path(&w, 1.0, j).unwrap();
                let rl = riemann_liouville(&w, (j - 1) as f64).unwrap().scale(j as f64);
                let d = wj.sup_distance(&rl).unwrap();
                if d >= prev {
                    non_monotone += 1;
                }
                prev = d;
                if stride == 1 {
                    worst_ratio = worst_ratio.max(d / rl.sup_norm());
                }
            }
        }
    }
    outcome(
        non_monotone == 0 && worst_ratio < 5e-2,
        format!("non-monotone refinements: {non_monotone}; max sup diff / path sup at dt=1e-4: {worst_ratio:.2e}"),
    )
}

// ---------------------------------------------------------------- criterion 9

fn report_bytes(report: &ExperimentReport, dir: &std::path::Path, name: &str) -> (Vec<u8>, Vec<u8>) {
    let path = dir.join(format!("{name}.json"));
    report.save(&path).unwrap();
    (std::fs::read(&path).unwrap(), std::fs::read(path.with_extension("csv")).unwrap())
}

fn criterion_9(first: &[(ExperimentConfig, ExperimentReport)]) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let threads = [1usize, 4];
    for (k, (cfg, report)) in first.iter().enumerate() {
        let reference = report_bytes(report, dir.path(), &format!("ref_{k}"));
        for &n in &threads {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            let again = pool.install(|| run(cfg)).unwrap();
            if report_bytes(&again, dir.path(), &format!("rerun_{k}_{n}")) != reference {
                mismatches.push(format!("{} with {n} threads", cfg.theorem.name()));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{} reports x {:?} threads; mismatches {:?}", first.len(), threads, mismatches),
    )
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut record = |n: u32, o: Outcome| {
        println!("criterion {n}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    record(1, criterion_1());
    record(2, criterion_2());
    record(3, criterion_3());

    let configs = [config_4(), config_5(), config_6(), config_7()];
    let mut first = Vec::new();
    for (cfg, n) in configs.into_iter().zip(4..) {
        let start = Instant::now();
        let report = run(&cfg).unwrap();
        let o = match n {
            4 => criterion_4(&report),
            5 => criterion_5(&report),
            6 => criterion_6(&report),
            _ => criterion_7(&report),
        };
        eprintln!("  ({} took {:.1} s)", cfg.theorem.name(), start.elapsed().as_secs_f64());
        record(n, o);
        first.push((cfg, report));
    }
    record(8, criterion_8());
    record(9, criterion_9(&first));

    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!("acceptance: {} / {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
