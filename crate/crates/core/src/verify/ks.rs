//! Kolmogorov–Smirnov statistics with asymptotic p-values.

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the √n scaling.
    pub effective_n: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi theta form converges fast for small λ:
        // 1 - Q(λ) = √(2π)/λ Σ_{k≥1} e^{-(2k-1)²π²/(8λ²)}
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=6).map(|k| (c * ((2 * k - 1) as f64).powi(2)).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in KS sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample test of `samples` against a continuous target CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples.len(), need: MIN_SAMPLES });
    }
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(n.sqrt() * d), effective_n: n })
}

/// Two-sample test. Ties are handled by stepping both empirical CDFs past
/// each distinct value before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    for s in [a, b] {
        if s.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples { got: s.len(), need: MIN_SAMPLES });
        }
    }
    let xa = sorted(a)?;
    let xb = sorted(b)?;
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(ne.sqrt() * d), effective_n: ne })
}
