use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use lsconv_core::processes::{
    coupled_counts, counting_step_function, decoupled_brw, sample_prw_points, DEFAULT_POINT_CAP, DEFAULT_POPULATION_CAP,
};
use lsconv_core::rng::{domain, Substreams};
use lsconv_core::stepfun::DEFAULT_ATOM_CAP;
use lsconv_core::verify::{self, ExperimentConfig};
use lsconv_core::{Error, LimitKind, LimitPathSpec, StepFunction, WalkSpec};

use crate::{Cli, Command, ConvolveArgs, LimitPathArgs, PathKind, SimulateArgs, VerifyArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAP: u8 = 3;

const ATOM_CAP_ENV: &str = "LSCONV_ATOM_CAP";
/// Replicas held in memory at once by `simulate`.
const BATCH: u64 = 256;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_cap() => EXIT_CAP,
        _ => EXIT_USAGE,
    }
}

pub fn dispatch(cli: Cli) -> Result<u8> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building thread pool")?;
    pool.install(|| match cli.command {
        Command::Convolve(args) => convolve(args),
        Command::Simulate(args) => simulate(args),
        Command::LimitPath(args) => limit_path(args),
        Command::Verify(args) => verify_cmd(args),
    })
}

/// `--atom-cap`, else `LSCONV_ATOM_CAP`, else the library default.
fn atom_cap(flag: Option<usize>) -> Result<usize> {
    if let Some(cap) = flag {
        return Ok(cap);
    }
    match std::env::var(ATOM_CAP_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{ATOM_CAP_ENV}={v:?} is not a count")),
        Err(_) => Ok(DEFAULT_ATOM_CAP),
    }
}

fn read_step(path: &Path) -> Result<StepFunction> {
    StepFunction::from_csv_path(path).with_context(|| format!("reading {}", path.display()))
}

fn convolve(args: ConvolveArgs) -> Result<u8> {
    let cap = atom_cap(args.atom_cap)?;
    let f = read_step(&args.input)?;
    let out = match &args.with {
        Some(path) => {
            if args.fold != 1 {
                bail!("--fold and --with cannot be combined");
            }
            f.convolve(&read_step(path)?, args.horizon, cap)?
        }
        None => f.jfold(args.fold, args.horizon, cap)?,
    };
    out.to_csv_path(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("wrote {} atoms to {}", out.len(), args.out.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Caps {
    atom_cap: usize,
    population_cap: usize,
    point_cap: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    spec_sha256: String,
    walk: &'a WalkSpec,
    mode: &'static str,
    generation: u32,
    horizon: f64,
    replicas: u64,
    caps: Caps,
    files: Vec<String>,
}

fn replica_file(r: u64) -> String {
    format!("replica_{r:06}.csv")
}

fn simulate(args: SimulateArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&args.walk).with_context(|| format!("reading {}", args.walk.display()))?;
    let walk = WalkSpec::from_json(&text)?;
    if !(args.horizon >= 0.0 && args.horizon.is_finite()) {
        bail!("--horizon must be finite and >= 0");
    }
    if args.generations == 0 {
        bail!("--generations must be at least 1");
    }
    let caps = Caps {
        atom_cap: atom_cap(args.atom_cap)?,
        population_cap: args.population_cap.unwrap_or(DEFAULT_POPULATION_CAP),
        point_cap: args.point_cap.unwrap_or(DEFAULT_POINT_CAP),
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let streams = Substreams::new(args.seed);
    let (j, h) = (args.generations, args.horizon);

    let mut start = 0;
    while start < args.replicas {
        let end = (start + BATCH).min(args.replicas);
        let batch: Vec<StepFunction> = (start..end)
            .into_par_iter()
            .map(|r| -> lsconv_core::Result<StepFunction> {
                let rs = streams.replica(r);
                if args.coupled {
                    let points = sample_prw_points(&walk, h, &mut rs.stream(1, 0), caps.point_cap)?;
                    coupled_counts(&counting_step_function(&points)?, j, h, caps.atom_cap)
                } else {
                    decoupled_brw(&walk, j, h, &rs, caps.population_cap)
                }
            })
            .collect::<lsconv_core::Result<_>>()?;
        for (r, f) in (start..end).zip(&batch) {
            f.to_csv_path(args.out.join(replica_file(r)))?;
        }
        start = end;
    }

    let canonical = serde_json::to_string(&walk)?;
    let manifest = Manifest {
        seed: args.seed,
        spec_sha256: Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
        walk: &walk,
        mode: if args.coupled { "coupled" } else { "decoupled" },
        generation: j,
        horizon: h,
        replicas: args.replicas,
        caps,
        files: (0..args.replicas).map(replica_file).collect(),
    };
    std::fs::write(args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    eprintln!("wrote {} replicas to {}", args.replicas, args.out.display());
    Ok(EXIT_OK)
}

fn limit_path(args: LimitPathArgs) -> Result<u8> {
    let need = |v: Option<f64>, flag: &str| v.with_context(|| format!("--{flag} is required for this kind"));
    let kind = match args.kind {
        PathKind::Brownian => LimitKind::Brownian,
        PathKind::RiemannLiouville => LimitKind::RiemannLiouville { q: need(args.q, "q")? },
        PathKind::WJ => LimitKind::WJ {
            alpha: need(args.alpha, "alpha")?,
            j: args.j.context("--j is required for this kind")?,
        },
        PathKind::InverseStable => LimitKind::InverseStable { beta: need(args.beta, "beta")?, dt_v: args.dt_v },
    };
    let spec = LimitPathSpec { dt: args.dt, horizon: args.horizon, kind };
    let mut rng = Substreams::new(args.seed).with_domain(domain::LIMIT).replica(args.replica).stream(0, 0);
    let path = spec.generate(&mut rng)?;
    if args.out.extension().is_some_and(|e| e == "json") {
        std::fs::write(&args.out, path.to_json()?)?;
    } else {
        path.to_csv_path(&args.out)?;
    }
    eprintln!("wrote {} grid points to {}", path.len(), args.out.display());
    Ok(EXIT_OK)
}

fn verify_cmd(args: VerifyArgs) -> Result<u8> {
    let mut cfg = ExperimentConfig::from_path(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if cfg.atom_cap.is_none() {
        cfg.atom_cap = Some(atom_cap(None)?);
    }
    let start = Instant::now();
    let report = verify::run(&cfg)?;
    report.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    for c in &report.cells {
        let stat = match (c.p_value, c.relative_error) {
            (Some(p), _) => format!("p = {p:.4}"),
            (None, Some(e)) => format!("relative error = {e:.3e}"),
            _ => String::new(),
        };
        eprintln!("{} j={} u={}: {} {}", cfg.theorem.name(), c.j, c.u, c.verdict.as_str(), stat);
    }
    for c in &report.checks {
        eprintln!("check {}: {} ({})", c.name, c.verdict.as_str(), c.detail);
    }
    eprintln!("verdict: {} ({:.1} s)", report.verdict.as_str(), start.elapsed().as_secs_f64());
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
}
