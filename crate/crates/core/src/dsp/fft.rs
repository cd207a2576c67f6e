use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Causal FIR filtering with zero initial state, `y[n] = sum_k h[k] x[n-k]`,
/// computed by FFT convolution and truncated to `x.len()`.
pub(crate) fn fir_causal(x: &[f64], taps: &[f64]) -> Vec<f64> {
    if x.is_empty() || taps.is_empty() {
        return vec![0.0; x.len()];
    }
    let n = (x.len() + taps.len() - 1).next_power_of_two();
    let mut xs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    xs.resize(n, Complex64::default());
    let mut hs: Vec<Complex64> = taps.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    hs.resize(n, Complex64::default());
    let fwd = forward(n);
    fwd.process(&mut xs);
    fwd.process(&mut hs);
    for (a, b) in xs.iter_mut().zip(&hs) {
        *a *= b;
    }
    inverse(n).process(&mut xs);
    let scale = 1.0 / n as f64;
    xs.iter().take(x.len()).map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let x: Vec<f64> = (0..97).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let h = [0.25, -0.5, 1.0, 0.125];
        let y = fir_causal(&x, &h);
        for n in 0..x.len() {
            let direct: f64 = (0..h.len()).filter(|&k| k <= n).map(|k| h[k] * x[n - k]).sum();
            assert!((y[n] - direct).abs() < 1e-12);
        }
    }
}
