//! Special functions used by the closed forms and the Gaussian targets.

use statrs::function::gamma as sgamma;

/// Euler gamma function for positive arguments.
pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

/// Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`, evaluated in log space.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Complementary error function (correctly rounded to within an ulp or two).
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// CDF of a centered Gaussian with the given variance.
pub fn normal_cdf(x: f64, variance: f64) -> f64 {
    0.5 * erfc(-x / (2.0 * variance).sqrt())
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}
