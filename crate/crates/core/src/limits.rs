//! Limit processes on a uniform grid: Brownian motion, Riemann–Liouville
//! processes `B_q(u) = ∫_0^u (u-y)^q dB(y)`, the convolution processes
//! `W_j(u) = j ∫_0^u W(u-y) d(y^{α(j-1)})`, and first-passage times of
//! drift-free stable subordinators.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::conv;
use crate::error::{invalid, Result};
use crate::gridfun::GridFunction;
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    Brownian,
    RiemannLiouville { q: f64 },
    /// `W_j` driven by a Brownian `W`.
    WJ { alpha: f64, j: u32 },
    InverseStable { beta: f64, dt_v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPathSpec {
    pub dt: f64,
    pub horizon: f64,
    #[serde(flatten)]
    pub kind: LimitKind,
}

impl LimitPathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(invalid(format!("need 0 < dt <= horizon, got dt = {}, horizon = {}", self.dt, self.horizon)));
        }
        match self.kind {
            LimitKind::Brownian => Ok(()),
            LimitKind::RiemannLiouville { q } if q >= 0.0 && q.is_finite() => Ok(()),
            LimitKind::WJ { alpha, j } if alpha > 0.0 && alpha.is_finite() && j >= 1 => Ok(()),
            LimitKind::InverseStable { beta, dt_v } if beta > 0.0 && beta < 1.0 && dt_v > 0.0 => Ok(()),
            kind => Err(invalid(format!("parameters out of range: {kind:?}"))),
        }
    }

    /// Supremum of the local Hölder exponents of the path. Informational only.
    pub fn holder_exponent(&self) -> Option<f64> {
        match self.kind {
            LimitKind::Brownian => Some(0.5),
            LimitKind::RiemannLiouville { q } => Some((0.5 + q).min(1.0)),
            LimitKind::WJ { alpha, j } => Some((0.5 + alpha * (j - 1) as f64).min(1.0)),
            LimitKind::InverseStable { .. } => None,
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GridFunction> {
        self.validate()?;
        match self.kind {
            LimitKind::Brownian => brownian_grid(self.dt, self.horizon, rng),
            LimitKind::RiemannLiouville { q } => riemann_liouville(&brownian_grid(self.dt, self.horizon, rng)?, q),
            LimitKind::WJ { alpha, j } => w_j_from_path(&brownian_grid(self.dt, self.horizon, rng)?, alpha, j),
            LimitKind::InverseStable { beta, dt_v } => inverse_stable_path(beta, dt_v, self.dt, self.horizon, rng),
        }
    }
}

fn steps_for(dt: f64, horizon: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && horizon >= dt && horizon.is_finite()) {
        return Err(invalid(format!("need 0 < dt <= horizon, got dt = {dt}, horizon = {horizon}")));
    }
    Ok((horizon / dt).round() as usize)
}

/// Standard Brownian motion on `[0, horizon]` with `N(0, dt)` increments.
pub fn brownian_grid<R: Rng + ?Sized>(dt: f64, horizon: f64, rng: &mut R) -> Result<GridFunction> {
    let steps = steps_for(dt, horizon)?;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    values.push(acc);
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        acc += sd * z;
        values.push(acc);
    }
    GridFunction::new(dt, values)
}

/// `B_q(u_n) = Σ_{k<n} (u_n - y_k)^q (B(y_{k+1}) - B(y_k))`; `q = 0` returns
/// the input unchanged.
pub fn riemann_liouville(b: &GridFunction, q: f64) -> Result<GridFunction> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(invalid(format!("q must be >= 0, got {q}")));
    }
    if q == 0.0 {
        return Ok(b.clone());
    }
    let dt = b.dt();
    let v = b.values();
    let increments: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let kernel: Vec<f64> = (0..v.len()).map(|m| if m == 0 { 0.0 } else { (m as f64 * dt).powf(q) }).collect();
    GridFunction::new(dt, conv::causal(&kernel, &increments, v.len()))
}

/// `W_j(u) = j ∫_0^u W(u-y) d(y^{α(j-1)})` with exact cell masses; on the
/// cell `(y_k, y_{k+1}]` the integrand is taken at the left end of its own
/// argument, `W(u_n - y_{k+1})`. `j = 1` returns `W`.
pub fn w_j_from_path(w: &GridFunction, alpha: f64, j: u32) -> Result<GridFunction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if j == 0 {
        return Err(invalid("j must be >= 1"));
    }
    if w.values()[0] != 0.0 {
        return Err(invalid("W must start at 0"));
    }
    if j == 1 {
        return Ok(w.clone());
    }
    let v = w.values();
    let mut lagged = Vec::with_capacity(v.len());
    lagged.push(0.0);
    lagged.extend_from_slice(&v[..v.len() - 1]);
    Ok(GridFunction::new(w.dt(), lagged)?.power_measure_convolve(alpha * (j - 1) as f64)?.scale(j as f64))
}

/// Positive `β`-stable variable with `E[e^{-sS}] = e^{-s^β}`, by Kanter's
/// representation from one uniform angle and one unit exponential.
pub fn standard_positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = PI * open_unit(rng);
    let e: f64 = Exp1.sample(rng);
    let a = (beta * u).sin() / u.sin().powf(1.0 / beta);
    let b = (((1.0 - beta) * u).sin() / e).powf((1.0 - beta) / beta);
    a * b
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// One draw of `S_β(v)` for the subordinator with Laplace exponent
/// `Γ(1-β)·v·s^β`, i.e. `(Γ(1-β)v)^{1/β}` times a standard positive stable.
pub fn stable_subordinator_increment<R: Rng + ?Sized>(beta: f64, v: f64, rng: &mut R) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("v must be positive, got {v}")));
    }
    Ok((gamma(1.0 - beta) * v).powf(1.0 / beta) * standard_positive_stable(beta, rng))
}

/// First-passage path `S^←(u) = inf{v ≥ 0 : S(v) > u}` on `u_n = n·dt`.
///
/// `S` is built on the grid `v_i = i·dt_v` from independent increments and
/// extended until it exceeds `horizon`; `S^←(u_n)` is the first grid `v_i`
/// with `S(v_i) > u_n`.
pub fn inverse_stable_path<R: Rng + ?Sized>(beta: f64, dt_v: f64, dt: f64, horizon: f64, rng: &mut R) -> Result<GridFunction> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(dt_v > 0.0 && dt_v.is_finite()) {
        return Err(invalid(format!("dt_v must be positive, got {dt_v}")));
    }
    let steps = steps_for(dt, horizon)?;
    let scale = (gamma(1.0 - beta) * dt_v).powf(1.0 / beta);
    let mut values = Vec::with_capacity(steps + 1);
    let mut s = 0.0;
    let mut i = 0u64;
    for n in 0..=steps {
        let u = n as f64 * dt;
        while s <= u {
            s += scale * standard_positive_stable(beta, rng);
            i += 1;
        }
        values.push(i as f64 * dt_v);
    }
    GridFunction::monotone(dt, values)
}

/// `E[S^←(u)] = u^β / (Γ(1-β) Γ(1+β))`.
pub fn inverse_stable_mean(beta: f64, u: f64) -> f64 {
    u.powf(beta) / (gamma(1.0 - beta) * gamma(1.0 + beta))
}
