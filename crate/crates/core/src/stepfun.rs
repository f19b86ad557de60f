//! Pure-jump nondecreasing càdlàg functions on `[0, ∞)`.
//!
//! A [`StepFunction`] is a finite list of atoms `(position, weight)` with
//! strictly increasing positions and strictly positive weights. Its value at
//! `t` is the total weight of atoms at positions `≤ t`, so counting processes
//! such as `t ↦ #{k : T_k ≤ t}` and their Lebesgue–Stieltjes convolutions are
//! represented exactly.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Positions closer than this (after rounding) are merged into one atom.
pub const DEFAULT_QUANTUM: f64 = 1e-12;
pub const DEFAULT_ATOM_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolveOptions {
    pub horizon: f64,
    pub atom_cap: usize,
    /// Merge resolution for coinciding positions. Zero means exact equality.
    pub quantum: f64,
}

impl ConvolveOptions {
    pub fn new(horizon: f64) -> Self {
        ConvolveOptions { horizon, atom_cap: DEFAULT_ATOM_CAP, quantum: DEFAULT_QUANTUM }
    }

    pub fn atom_cap(mut self, cap: usize) -> Self {
        self.atom_cap = cap;
        self
    }

    pub fn quantum(mut self, quantum: f64) -> Self {
        self.quantum = quantum;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0) {
            return Err(invalid(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if self.atom_cap == 0 {
            return Err(invalid("atom_cap must be >= 1"));
        }
        if !(self.quantum >= 0.0 && self.quantum.is_finite()) {
            return Err(invalid(format!("quantum must be finite and >= 0, got {}", self.quantum)));
        }
        Ok(())
    }
}

/// Value of a step function together with a flag telling whether `t` lies
/// beyond the truncation horizon (in which case atoms may be missing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr", into = "StepFunctionRepr")]
pub struct StepFunction {
    positions: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    horizon: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    horizon: Option<f64>,
}

impl TryFrom<StepFunctionRepr> for StepFunction {
    type Error = Error;

    fn try_from(repr: StepFunctionRepr) -> Result<Self> {
        let f = StepFunction::from_atoms(repr.atoms)?;
        match repr.horizon {
            Some(h) => f.with_horizon(h),
            None => Ok(f),
        }
    }
}

impl From<StepFunction> for StepFunctionRepr {
    fn from(f: StepFunction) -> Self {
        StepFunctionRepr { atoms: f.atoms().collect(), horizon: f.horizon }
    }
}

impl Default for StepFunction {
    fn default() -> Self {
        Self::empty()
    }
}

impl StepFunction {
    /// The zero function; it annihilates every convolution.
    pub fn empty() -> Self {
        StepFunction { positions: Vec::new(), weights: Vec::new(), cumulative: Vec::new(), horizon: None }
    }

    /// Unit mass at the origin, the identity of convolution.
    pub fn dirac() -> Self {
        Self::from_sorted_unchecked(vec![0.0], vec![1.0], None)
    }

    /// Builds a step function from atoms in any order. Atoms whose positions
    /// coincide up to [`DEFAULT_QUANTUM`] are merged by adding weights.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        for &(x, w) in &atoms {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(invalid(format!("atom position must be finite and >= 0, got {x}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("atom weight must be finite and > 0, got {w}")));
            }
        }
        let (positions, weights) = canonicalize(atoms, DEFAULT_QUANTUM);
        Ok(Self::from_sorted_unchecked(positions, weights, None))
    }

    /// Counting function of a list of nonnegative times: unit weight per
    /// time, repeated times merge into a single atom of their multiplicity.
    pub fn counting(times: &[f64]) -> Result<Self> {
        Self::from_atoms(times.iter().map(|&t| (t, 1.0)))
    }

    fn from_sorted_unchecked(positions: Vec<f64>, weights: Vec<f64>, horizon: Option<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        StepFunction { positions, weights, cumulative, horizon }
    }

    /// Declares a truncation horizon. Fails if an atom lies beyond it.
    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(invalid(format!("horizon must be >= 0, got {horizon}")));
        }
        if self.positions.last().is_some_and(|&x| x > horizon) {
            return Err(invalid(format!("atom beyond horizon {horizon}")));
        }
        self.horizon = Some(horizon);
        Ok(self)
    }

    /// Drops atoms strictly above `horizon` and records it.
    pub fn truncate(&self, horizon: f64) -> Self {
        let keep = self.positions.partition_point(|&x| x <= horizon);
        let horizon = Some(self.horizon.map_or(horizon, |h| h.min(horizon)));
        StepFunction {
            positions: self.positions[..keep].to_vec(),
            weights: self.weights[..keep].to_vec(),
            cumulative: self.cumulative[..keep].to_vec(),
            horizon,
        }
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `Σ_{position ≤ t} weight`; zero for negative `t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let idx = self.positions.partition_point(|&x| x <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    pub fn evaluate_checked(&self, t: f64) -> Evaluation {
        Evaluation { value: self.evaluate(t), truncated: self.horizon.is_some_and(|h| t > h) }
    }

    /// Rescales time: the result `g` satisfies `g(t) = f(t / factor)`.
    pub fn dilate(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid(format!("dilation factor must be positive, got {factor}")));
        }
        let positions = self.positions.iter().map(|x| x * factor).collect();
        Ok(Self::from_sorted_unchecked(positions, self.weights.clone(), self.horizon.map(|h| h * factor)))
    }

    /// Laplace–Stieltjes transform `∫ e^{-s y} df(y)` over the stored atoms.
    pub fn laplace_stieltjes(&self, s: f64) -> f64 {
        self.atoms().map(|(x, w)| w * (-s * x).exp()).sum()
    }

    /// Lebesgue–Stieltjes convolution `∫_{[0,t]} f(t-y) dg(y)` truncated at
    /// `horizon`, with the default merge quantum.
    pub fn convolve(&self, other: &StepFunction, horizon: f64, atom_cap: usize) -> Result<Self> {
        self.convolve_with(other, ConvolveOptions::new(horizon).atom_cap(atom_cap))
    }

    pub fn convolve_with(&self, other: &StepFunction, opts: ConvolveOptions) -> Result<Self> {
        opts.validate()?;
        let horizon = opts.horizon;
        let cap = opts.atom_cap;
        // Compaction keeps the scratch buffer bounded when many sums coincide.
        let compact_at = cap.saturating_mul(2).max(1 << 16);

        let mut buf: Vec<(f64, f64)> = Vec::new();
        let mut merged = 0usize;
        for (xf, wf) in self.atoms() {
            if xf > horizon {
                break;
            }
            for (xg, wg) in other.atoms() {
                let x = xf + xg;
                if x > horizon {
                    break;
                }
                buf.push((x, wf * wg));
            }
            if buf.len() - merged >= compact_at {
                let (p, w) = canonicalize(std::mem::take(&mut buf), opts.quantum);
                if p.len() > cap {
                    return Err(Error::AtomCapExceeded { cap });
                }
                merged = p.len();
                buf = p.into_iter().zip(w).collect();
            }
        }
        let (positions, weights) = canonicalize(buf, opts.quantum);
        if positions.len() > cap {
            return Err(Error::AtomCapExceeded { cap });
        }
        Ok(Self::from_sorted_unchecked(positions, weights, Some(horizon)))
    }

    /// `f^{*(j)}`: `f` itself for `j = 1`, otherwise `j - 1` successive
    /// convolutions with `f`, all truncated at `horizon`.
    pub fn jfold(&self, j: u32, horizon: f64, atom_cap: usize) -> Result<Self> {
        self.jfold_with(j, ConvolveOptions::new(horizon).atom_cap(atom_cap))
    }

    pub fn jfold_with(&self, j: u32, opts: ConvolveOptions) -> Result<Self> {
        Ok(self.jfold_all(j, opts)?.pop().expect("j >= 1"))
    }

    /// All folds `f^{*(1)}, …, f^{*(j)}` in order.
    pub fn jfold_all(&self, j: u32, opts: ConvolveOptions) -> Result<Vec<Self>> {
        if j == 0 {
            return Err(invalid("fold order j must be >= 1"));
        }
        opts.validate()?;
        let base = self.truncate(opts.horizon);
        if base.len() > opts.atom_cap {
            return Err(Error::AtomCapExceeded { cap: opts.atom_cap });
        }
        let mut out = Vec::with_capacity(j as usize);
        out.push(base.clone());
        for _ in 1..j {
            let next = out.last().expect("nonempty").convolve_with(&base, opts)?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["position", "weight"])?;
        for (x, wt) in self.atoms() {
            w.write_record([x.to_string(), wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `position,weight` CSV format. Positions must be strictly
    /// increasing and weights positive.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "position" || &headers[1] != "weight" {
            return Err(Error::Parse(format!("expected header `position,weight`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut atoms = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!("row {}: expected 2 fields", line + 2)));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", line + 2)));
            let x = parse(&record[0])?;
            let w = parse(&record[1])?;
            if !(x > last) {
                return Err(Error::Parse(format!("row {}: positions must be strictly increasing", line + 2)));
            }
            last = x;
            atoms.push((x, w));
        }
        Self::from_atoms(atoms).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn merge_key(x: f64, quantum: f64) -> f64 {
    if quantum > 0.0 {
        (x / quantum).round()
    } else {
        x
    }
}

/// Sorts atoms and merges those with equal rounded positions. The merged
/// atom keeps the smallest raw position of its group.
fn canonicalize(mut atoms: Vec<(f64, f64)>, quantum: f64) -> (Vec<f64>, Vec<f64>) {
    atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut positions: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut last_key = f64::NAN;
    for (x, w) in atoms {
        let key = merge_key(x, quantum);
        if key == last_key {
            *weights.last_mut().expect("group open") += w;
        } else {
            positions.push(x);
            weights.push(w);
            last_key = key;
        }
    }
    (positions, weights)
}
