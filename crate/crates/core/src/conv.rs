//! Discrete causal convolution shared by the grid quadratures.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

const DIRECT_LIMIT: usize = 2048;

/// `out[n] = Σ_{k=0}^{n} a[n-k] · b[k]` for `n < len`.
pub(crate) fn causal(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let a = &a[..a.len().min(len)];
    let b = &b[..b.len().min(len)];
    if a.is_empty() || b.is_empty() {
        return vec![0.0; len];
    }
    if len <= DIRECT_LIMIT {
        direct(a, b, len)
    } else {
        fft(a, b, len)
    }
}

pub(crate) fn direct(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (k, &bk) in b.iter().enumerate() {
        if bk == 0.0 {
            continue;
        }
        for (o, &av) in out[k..].iter_mut().zip(a) {
            *o += av * bk;
        }
    }
    out
}

fn fft(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let lift = |x: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (slot, &v) in buf.iter_mut().zip(x) {
            slot.re = v;
        }
        buf
    };
    let mut fa = lift(a);
    let mut fb = lift(b);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inverse.process(&mut fa);
    let norm = 1.0 / size as f64;
    fa.iter().take(len).map(|c| c.re * norm).chain(std::iter::repeat(0.0)).take(len).collect()
}
