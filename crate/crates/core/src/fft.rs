//! Thin wrappers around rustfft with a per-thread plan cache.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Forward DFT of a real vector: `X_k = Σ_j x_j e^{-2πi jk/n}` (unnormalized).
pub(crate) fn dft_real(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(buf.len(), false).process(&mut buf);
    buf
}

/// Unnormalized inverse DFT: `x_j = Σ_k X_k e^{+2πi jk/n}`.
pub(crate) fn idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// Inverse DFT normalized by `1/n`, real parts only.
pub(crate) fn idft_real_scaled(spectrum: &[Complex64]) -> Vec<f64> {
    let n = spectrum.len() as f64;
    idft(spectrum).iter().map(|z| z.re / n).collect()
}

pub(crate) fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// m-fold linear self-convolution of a nonnegative mass sequence, computed by
/// raising the DFT to the m-th power on a zero-padded buffer. The output has
/// length `m·(len−1)+1`; tiny negative ringing is clamped to zero.
pub(crate) fn convolve_power(masses: &[f64], m: usize) -> Vec<f64> {
    assert!(m >= 1);
    if m == 1 {
        return masses.to_vec();
    }
    let out_len = m * (masses.len() - 1) + 1;
    let fft_len = next_pow2(out_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    for (b, &v) in buf.iter_mut().zip(masses) {
        b.re = v;
    }
    plan(fft_len, false).process(&mut buf);
    for z in buf.iter_mut() {
        *z = z.powu(m as u32);
    }
    plan(fft_len, true).process(&mut buf);
    let scale = 1.0 / fft_len as f64;
    buf[..out_len].iter().map(|z| (z.re * scale).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolve_power_matches_direct() {
        let a = [0.2, 0.5, 0.3];
        // direct square
        let mut direct = vec![0.0; 5];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in a.iter().enumerate() {
                direct[i + j] += x * y;
            }
        }
        let fftd = convolve_power(&a, 2);
        assert_eq!(fftd.len(), 5);
        for (d, f) in direct.iter().zip(&fftd) {
            assert!((d - f).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_power_conserves_mass() {
        let a = [0.1, 0.2, 0.3, 0.25, 0.15];
        let c = convolve_power(&a, 7);
        let total: f64 = c.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}
