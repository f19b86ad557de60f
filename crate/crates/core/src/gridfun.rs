//! Paths sampled on a uniform grid `t_n = n·dt`, their Stieltjes
//! convolutions, and the closed-form algebra of power functions `C·t^α`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conv;
use crate::error::{invalid, Error, Result};
use crate::special::gamma;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridFunction {
    dt: f64,
    values: Vec<f64>,
    monotone: bool,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dt: f64,
    values: Vec<f64>,
}

impl TryFrom<GridRepr> for GridFunction {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        let g = GridFunction::new(r.dt, r.values)?;
        Ok(if is_nondecreasing(&g.values) { GridFunction { monotone: true, ..g } } else { g })
    }
}

impl From<GridFunction> for GridRepr {
    fn from(g: GridFunction) -> Self {
        GridRepr { dt: g.dt, values: g.values }
    }
}

fn is_nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

impl GridFunction {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("grid step must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(invalid("grid function needs at least one value"));
        }
        Ok(GridFunction { dt, values, monotone: false })
    }

    /// Like [`GridFunction::new`] but declares the path nondecreasing, which is checked.
    pub fn monotone(dt: f64, values: Vec<f64>) -> Result<Self> {
        let g = Self::new(dt, values)?;
        if !is_nondecreasing(&g.values) {
            return Err(invalid("values are not nondecreasing"));
        }
        Ok(GridFunction { monotone: true, ..g })
    }

    /// Samples `f` at `t_n = n·dt` for `n = 0..=steps`.
    pub fn from_fn(dt: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(dt, (0..=steps).map(|n| f(n as f64 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// Last grid time `(len - 1)·dt`.
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Index of the grid point nearest to `u`, if `u` lies on the grid range.
    pub fn index_of(&self, u: f64) -> Option<usize> {
        let n = (u / self.dt).round();
        (n >= 0.0 && (n as usize) < self.values.len()).then_some(n as usize)
    }

    /// Value at the grid point nearest to `u`.
    pub fn at(&self, u: f64) -> Option<f64> {
        self.index_of(u).map(|n| self.values[n])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Every `stride`-th value: the same path on the grid of step `stride·dt`.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid("stride must be >= 1"));
        }
        let values = self.values.iter().step_by(stride).copied().collect();
        Ok(GridFunction { dt: self.dt * stride as f64, values, monotone: self.monotone })
    }

    pub fn scale(&self, factor: f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|v| v * factor).collect();
        let monotone = self.monotone && factor >= 0.0;
        GridFunction { dt: self.dt, values, monotone }
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.dt != other.dt {
            return Err(Error::GridMismatch(format!("dt {} vs {}", self.dt, other.dt)));
        }
        if self.values.len() != other.values.len() {
            return Err(Error::GridMismatch(format!("length {} vs {}", self.values.len(), other.values.len())));
        }
        Ok(())
    }

    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Left-point Stieltjes convolution `u ↦ ∫_{[0,u]} self(u-y) dg(y)`.
    ///
    /// `g` carries an atom `g[0]` at the origin and mass `g[k+1] - g[k]` on
    /// each cell `(y_k, y_{k+1}]`, which is charged to its left end:
    /// `out[n] = self[n]·g[0] + Σ_{k<n} self[n-k]·(g[k+1] - g[k])`.
    pub fn stieltjes_convolve(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(g)?;
        if !g.monotone {
            return Err(invalid("integrator must be a monotone grid function"));
        }
        let masses = cell_masses(&g.values);
        Ok(self.convolve_masses(g.values[0], &masses))
    }

    /// `out[n] = self[n]·atom + Σ_{k<n} self[n-k]·masses[k]`.
    pub(crate) fn convolve_masses(&self, atom: f64, masses: &[f64]) -> GridFunction {
        let len = self.values.len();
        let mut shifted = self.values.clone();
        shifted[0] = 0.0;
        let mut out = conv::causal(&shifted, masses, len);
        for (o, f) in out.iter_mut().zip(&self.values) {
            *o += f * atom;
        }
        let monotone = is_nondecreasing(&out);
        GridFunction { dt: self.dt, values: out, monotone }
    }

    /// `u ↦ ∫_{[0,u]} self(u-y) d(y^exponent)` with exact cell masses
    /// `y_{k+1}^e - y_k^e` and a left-point integrand. For `exponent = 0` the
    /// measure is the unit atom at the origin and the path is returned as is.
    pub fn power_measure_convolve(&self, exponent: f64) -> Result<GridFunction> {
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return Err(invalid(format!("measure exponent must be >= 0, got {exponent}")));
        }
        if exponent == 0.0 {
            return Ok(self.clone());
        }
        let masses: Vec<f64> = (0..self.values.len() - 1)
            .map(|k| ((k + 1) as f64 * self.dt).powf(exponent) - (k as f64 * self.dt).powf(exponent))
            .collect();
        Ok(self.convolve_masses(0.0, &masses))
    }

    /// `f^{*(j)}` on the grid by repeated left-point convolution with `self`.
    pub fn jfold(&self, j: u32) -> Result<GridFunction> {
        if j == 0 {
            return Err(invalid("fold order j must be >= 1"));
        }
        let mut acc = self.clone();
        for _ in 1..j {
            acc = acc.stieltjes_convolve(self)?;
        }
        Ok(acc)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "value"])?;
        for (n, v) in self.values.iter().enumerate() {
            w.write_record([self.time(n).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `t,value` CSV format; times must be `0, dt, 2dt, …`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::Parse("expected header `t,value`".into()));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            times.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        if times.first() != Some(&0.0) {
            return Err(Error::Parse("grid must start at t = 0".into()));
        }
        let dt = if times.len() > 1 { times[1] } else { 1.0 };
        for (n, &t) in times.iter().enumerate() {
            if (t - n as f64 * dt).abs() > 1e-9 * dt.max(t.abs()) {
                return Err(Error::Parse(format!("row {}: time {t} is off the uniform grid", n + 2)));
            }
        }
        GridRepr { dt, values }.try_into()
    }

    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn cell_masses(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `t ↦ C·t^α` with `C > 0`, `α > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFunction {
    coefficient: f64,
    exponent: f64,
}

impl PowerFunction {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(invalid(format!("coefficient must be positive, got {coefficient}")));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(invalid(format!("exponent must be positive, got {exponent}")));
        }
        Ok(PowerFunction { coefficient, exponent })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.coefficient * t.powf(self.exponent)
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.coefficient * factor, self.exponent)
    }

    /// Beta-integral closed form of `∫_{[0,t]} p(t-y) dq(y)`.
    pub fn convolve(&self, other: &PowerFunction) -> PowerFunction {
        let (a, b) = (self.exponent, other.exponent);
        PowerFunction {
            coefficient: self.coefficient * other.coefficient * gamma(1.0 + a) * gamma(1.0 + b) / gamma(1.0 + a + b),
            exponent: a + b,
        }
    }

    /// `p^{*(j)} = C^j Γ(1+α)^j / Γ(1+αj) · t^{αj}`.
    pub fn jfold(&self, j: u32) -> Result<PowerFunction> {
        if j == 0 {
            return Err(invalid("fold order j must be >= 1"));
        }
        if j == 1 {
            return Ok(*self);
        }
        let jf = j as f64;
        let a = self.exponent;
        Ok(PowerFunction {
            coefficient: self.coefficient.powi(j as i32) * gamma(1.0 + a).powi(j as i32) / gamma(1.0 + a * jf),
            exponent: a * jf,
        })
    }

    /// Samples on `[0, horizon]` with step `dt` (horizon rounded to the grid).
    pub fn sample(&self, dt: f64, horizon: f64) -> Result<GridFunction> {
        let steps = (horizon / dt).round() as usize;
        let g = GridFunction::from_fn(dt, steps, |t| self.evaluate(t))?;
        Ok(GridFunction { monotone: true, ..g })
    }
}

/// Limiting ratio `f^{*(j)}(t)/f(t)^j` for `f` regularly varying of index `α`.
pub fn regular_variation_constant(alpha: f64, j: u32) -> f64 {
    let jf = j as f64;
    gamma(1.0 + alpha).powi(j as i32) / gamma(1.0 + alpha * jf)
}

/// `Γ(1+α)^j / Γ((1+α)j) · β^{j-1} A^j`, the coefficient of
/// `e^{βt} t^{(1+α)j-1}` in the asymptotics of `f^{*(j)}` for
/// `f(t) ~ A e^{βt} t^α`.
pub fn exponential_growth_constant(amplitude: f64, alpha: f64, beta: f64, j: u32) -> f64 {
    let ji = j as i32;
    gamma(1.0 + alpha).powi(ji) / gamma((1.0 + alpha) * j as f64) * beta.powi(ji - 1) * amplitude.powi(ji)
}

/// Tilted grid convolution power for exponentially growing `f`.
///
/// Takes `f_β(t) = e^{-βt} f(t)` on a grid and returns `e^{-βt} f^{*(j)}(t)`
/// on the same grid, never forming `e^{βt}`. The tilted integrator
/// `∫_{[0,t]} e^{-βy} df(y)` gets an atom `f(0)` at the origin and cell masses
/// from a trapezoidal weight on `e^{-βy}`:
/// `½(e^{βdt} f_β(y_{k+1}) - f_β(y_k)) + ½(f_β(y_{k+1}) - e^{-βdt} f_β(y_k))`.
pub fn tilted_jfold(tilted: &GridFunction, beta: f64, j: u32) -> Result<GridFunction> {
    if j == 0 {
        return Err(invalid("fold order j must be >= 1"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be >= 0, got {beta}")));
    }
    let dt = tilted.dt;
    let (up, down) = ((beta * dt).exp(), (-beta * dt).exp());
    let v = &tilted.values;
    let masses: Vec<f64> =
        v.windows(2).map(|w| 0.5 * (up * w[1] - w[0]) + 0.5 * (w[1] - down * w[0])).collect();
    let mut acc = tilted.clone();
    for _ in 1..j {
        acc = acc.convolve_masses(v[0], &masses);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dt: f64, steps: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(dt, steps, f).unwrap()
    }

    fn mono(dt: f64, steps: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::monotone(dt, grid(dt, steps, f).into_values()).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(GridFunction::new(0.0, vec![1.0]).is_err());
        assert!(GridFunction::new(0.1, vec![]).is_err());
        assert!(GridFunction::monotone(0.1, vec![0.0, 1.0, 0.5]).is_err());
        let g = GridFunction::new(0.5, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.horizon(), 1.0);
        assert_eq!(g.at(1.0), Some(2.0));
        assert_eq!(g.at(1.6), None);
    }

    #[test]
    fn zero_integrator_gives_zero() {
        let f = grid(0.1, 10, |t| t.sin() + 2.0);
        let g = mono(0.1, 10, |_| 0.0);
        assert!(f.stieltjes_convolve(&g).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_integrand_reproduces_integrator() {
        let f = grid(0.01, 300, |_| 1.0);
        let g = mono(0.01, 300, |t| 0.7 + t * t);
        let c = f.stieltjes_convolve(&g).unwrap();
        for (a, b) in c.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(c.values()[0], f.values()[0] * g.values()[0]);
    }

    #[test]
    fn linear_convolution_converges_at_first_order() {
        // ∫_0^1 (1 - y) dy = 1/2; left-point sum equals 1/2 + dt/2 exactly.
        for steps in [10usize, 100, 1000, 10_000] {
            let dt = 1.0 / steps as f64;
            let f = grid(dt, steps, |t| t);
            let g = mono(dt, steps, |t| t);
            let v = *f.stieltjes_convolve(&g).unwrap().values().last().unwrap();
            assert!((v - (0.5 + dt / 2.0)).abs() < 1e-10, "steps {steps}: {v}");
        }
    }

    #[test]
    fn grid_mismatch_and_monotone_requirements() {
        let f = grid(0.1, 10, |t| t);
        assert!(matches!(f.stieltjes_convolve(&mono(0.2, 10, |t| t)), Err(Error::GridMismatch(_))));
        assert!(matches!(f.stieltjes_convolve(&mono(0.1, 11, |t| t)), Err(Error::GridMismatch(_))));
        assert!(f.stieltjes_convolve(&grid(0.1, 10, |t| t)).is_err());
    }

    #[test]
    fn monotone_inputs_give_monotone_output() {
        let f = mono(0.05, 200, |t| t.sqrt());
        let g = mono(0.05, 200, |t| (t * 3.0).floor() + t);
        let c = f.stieltjes_convolve(&g).unwrap();
        assert!(c.is_monotone());
    }

    #[test]
    fn power_closed_forms() {
        let p = PowerFunction::new(1.0, 1.0).unwrap();
        let c = p.convolve(&p);
        assert!((c.coefficient() - 0.5).abs() < 1e-14);
        assert_eq!(c.exponent(), 2.0);

        let q = PowerFunction::new(3.0, 0.7).unwrap();
        let lhs = p.scaled(2.0).unwrap().convolve(&q);
        assert!((lhs.coefficient() - 2.0 * p.convolve(&q).coefficient()).abs() < 1e-13);
        assert!((p.convolve(&q).coefficient() - q.convolve(&p).coefficient()).abs() < 1e-14);

        assert_eq!(p.jfold(1).unwrap(), p);
        let p3 = p.jfold(3).unwrap();
        assert!((p3.coefficient() - 1.0 / 6.0).abs() < 1e-14);
        assert_eq!(p3.exponent(), 3.0);
        assert!((p.jfold(2).unwrap().coefficient() - 0.5).abs() < 1e-14);
        assert!(p.jfold(0).is_err());
        assert!(PowerFunction::new(0.0, 1.0).is_err());
        assert!(PowerFunction::new(1.0, -1.0).is_err());
    }

    #[test]
    fn half_power_convolution_matches_beta_integral() {
        // Oracle: ∫_0^1 (1-y)^{1/2} d(y^{1/2}) by the substitution y = s²,
        // which removes the endpoint singularity: ∫_0^1 (1-s²)^{1/2} ds,
        // integrated with composite Simpson on s = sin θ, i.e. ∫_0^{π/2} cos²θ dθ.
        let n = 2000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let f = |th: f64| th.cos().powi(2);
        let simpson = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let p = PowerFunction::new(1.0, 0.5).unwrap();
        let closed = p.convolve(&p).evaluate(1.0);
        assert!((closed - simpson).abs() < 1e-12);
        assert!((closed - 0.785_398_163_4).abs() < 1e-10);
    }

    #[test]
    fn power_jfold_recursion() {
        for &(c, a) in &[(1.0, 1.0), (2.5, 0.3), (0.4, 2.0)] {
            let p = PowerFunction::new(c, a).unwrap();
            for j in 1..6 {
                let next = p.jfold(j + 1).unwrap();
                let rec = p.jfold(j).unwrap().convolve(&p);
                assert!(((next.coefficient() - rec.coefficient()) / next.coefficient()).abs() < 1e-12);
                assert!((next.exponent() - rec.exponent()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_quadrature_converges_to_closed_form() {
        let p = PowerFunction::new(1.0, 1.5).unwrap();
        let q = PowerFunction::new(2.0, 0.8).unwrap();
        let exact = p.convolve(&q).evaluate(1.0);
        let mut errs = Vec::new();
        for steps in [100usize, 1000, 10_000] {
            let dt = 1.0 / steps as f64;
            let c = p.sample(dt, 1.0).unwrap().stieltjes_convolve(&q.sample(dt, 1.0).unwrap()).unwrap();
            errs.push((c.values().last().unwrap() - exact).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        // first order: each decade of refinement gains roughly a decade
        assert!(errs[2] < 3.0 * errs[0] / 100.0, "{errs:?}");
    }

    #[test]
    fn power_measure_convolve_examples() {
        let w = grid(0.001, 1000, |t| t);
        let c = w.power_measure_convolve(1.0).unwrap();
        // 2∫_0^1 (1-y) dy = 1, left-point sum = 1/2 + dt/2
        assert!((2.0 * c.values()[1000] - 1.0).abs() < 2e-3);
        assert_eq!(w.power_measure_convolve(0.0).unwrap(), w);
        assert!(w.power_measure_convolve(-1.0).is_err());
    }

    #[test]
    fn tilted_jfold_matches_exact_convolution() {
        // f(t) = t e^t: f^{*2}(t) = e^t (t³/6 + t²/2), tilted: t³/6 + t²/2.
        let t_end: f64 = 10.0;
        let dt = 1e-3;
        let tilted = grid(dt, 10_000, |t| t);
        let c = tilted_jfold(&tilted, 1.0, 2).unwrap();
        let exact = t_end.powi(3) / 6.0 + t_end.powi(2) / 2.0;
        let got = c.values()[10_000];
        assert!(((got - exact) / exact).abs() < 1e-3, "{got} vs {exact}");
    }

    #[test]
    fn tilted_jfold_small_beta_recovers_power_case() {
        let dt = 1e-3;
        let f = PowerFunction::new(1.0, 1.0).unwrap();
        let c = tilted_jfold(&f.sample(dt, 1.0).unwrap(), 1e-9, 2).unwrap();
        let target = regular_variation_constant(1.0, 2);
        assert!((c.values()[1000] - target).abs() < 1e-3);
    }

    #[test]
    fn csv_and_json_formats() {
        let g = GridFunction::new(0.5, vec![0.0, 1.5, 1.0]).unwrap();
        let mut out = Vec::new();
        g.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "t,value\n0,0\n0.5,1.5\n1,1\n");
        assert_eq!(GridFunction::read_csv(out.as_slice()).unwrap(), g);
        assert_eq!(g.to_json().unwrap(), r#"{"dt":0.5,"values":[0.0,1.5,1.0]}"#);
        let m = GridFunction::from_json(r#"{"dt":0.5,"values":[0.0,1.0]}"#).unwrap();
        assert!(m.is_monotone());
        assert!(GridFunction::read_csv("t,value\n0,0\n0.5,1\n1.2,3\n".as_bytes()).is_err());
    }
}
