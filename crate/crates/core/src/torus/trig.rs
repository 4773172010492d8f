//! Trigonometric polynomials with exact coefficient arithmetic.
//!
//! A `TrigPoly` stores complex coefficients `c_k`, `|k| ≤ K`, for
//! `f(x) = Σ c_k e^{2πikx}`. Shifts, derivatives and Fourier-multiplier
//! actions are exact on the coefficients; only L_p norms go through a
//! (heavily oversampled) quadrature grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::torus::{lp_norm_of_samples, GridFunction, Lp, TorusGrid};

const REAL_SYMMETRY_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct TrigPoly {
    max_freq: usize,
    /// Coefficient of frequency `k` at index `k + max_freq`.
    coeffs: Vec<Complex64>,
    real: bool,
}

impl TrigPoly {
    /// Build from centered coefficients (`coeffs[k + max_freq]` is `c_k`).
    pub fn new(max_freq: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * max_freq + 1 {
            return Err(Error::LengthMismatch { expected: 2 * max_freq + 1, got: coeffs.len() });
        }
        let mut poly = TrigPoly { max_freq, coeffs, real: false };
        poly.real = poly.check_real_symmetry();
        Ok(poly)
    }

    pub fn zero(max_freq: usize) -> Self {
        TrigPoly { max_freq, coeffs: vec![Complex64::new(0.0, 0.0); 2 * max_freq + 1], real: true }
    }

    /// `amplitude·sin(2π·freq·x)`.
    pub fn sine(freq: usize, amplitude: f64) -> Self {
        let mut p = TrigPoly::zero(freq.max(1));
        if freq > 0 {
            p.set_coefficient(freq as i64, Complex64::new(0.0, -amplitude / 2.0));
            p.set_coefficient(-(freq as i64), Complex64::new(0.0, amplitude / 2.0));
        }
        p
    }

    /// `amplitude·cos(2π·freq·x)`.
    pub fn cosine(freq: usize, amplitude: f64) -> Self {
        let mut p = TrigPoly::zero(freq.max(1));
        if freq == 0 {
            p.set_coefficient(0, Complex64::new(amplitude, 0.0));
        } else {
            p.set_coefficient(freq as i64, Complex64::new(amplitude / 2.0, 0.0));
            p.set_coefficient(-(freq as i64), Complex64::new(amplitude / 2.0, 0.0));
        }
        p
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    /// True when `c_{-k} = conj(c_k)` for all k, so the poly is real-valued.
    pub fn is_real(&self) -> bool {
        self.real
    }

    fn check_real_symmetry(&self) -> bool {
        let k0 = self.max_freq as i64;
        (0..=k0).all(|k| {
            let a = self.coefficient(k);
            let b = self.coefficient(-k);
            (a - b.conj()).norm() <= REAL_SYMMETRY_TOL * (1.0 + a.norm())
        })
    }

    pub fn coefficient(&self, k: i64) -> Complex64 {
        let kk = k + self.max_freq as i64;
        if kk < 0 || kk >= self.coeffs.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[kk as usize]
        }
    }

    pub fn set_coefficient(&mut self, k: i64, c: Complex64) {
        let kk = k + self.max_freq as i64;
        assert!(kk >= 0 && kk < self.coeffs.len() as i64, "frequency {k} out of range");
        self.coeffs[kk as usize] = c;
        self.real = self.check_real_symmetry();
    }

    /// Pointwise evaluation `Σ c_k e^{2πikx}` (real part).
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx as i64 - self.max_freq as i64;
            acc += c * Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 * x);
        }
        acc.re
    }

    /// `f'` via `c_k ↦ 2πik·c_k`.
    pub fn derivative(&self) -> TrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = idx as i64 - self.max_freq as i64;
                c * Complex64::new(0.0, std::f64::consts::TAU * k as f64)
            })
            .collect();
        TrigPoly::new(self.max_freq, coeffs).expect("length preserved")
    }

    /// `x ↦ f(x + s)` via `c_k ↦ e^{2πiks}·c_k` (exact shift).
    pub fn shift(&self, s: f64) -> TrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = idx as i64 - self.max_freq as i64;
                c * Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 * s)
            })
            .collect();
        TrigPoly::new(self.max_freq, coeffs).expect("length preserved")
    }

    pub fn sub(&self, rhs: &TrigPoly) -> TrigPoly {
        let kmax = self.max_freq.max(rhs.max_freq);
        let mut out = TrigPoly::zero(kmax);
        for k in -(kmax as i64)..=(kmax as i64) {
            let c = self.coefficient(k) - rhs.coefficient(k);
            out.coeffs[(k + kmax as i64) as usize] = c;
        }
        out.real = out.check_real_symmetry();
        out
    }

    pub fn scale(&self, a: f64) -> TrigPoly {
        let coeffs = self.coeffs.iter().map(|c| c * a).collect();
        TrigPoly::new(self.max_freq, coeffs).expect("length preserved")
    }

    /// Sample at the n grid points (with exact aliasing of frequencies
    /// congruent mod n). Requires a real-valued poly.
    pub fn sample(&self, grid: TorusGrid) -> Result<GridFunction> {
        if !self.real {
            return Err(Error::BadParameter("cannot sample a non-real trig poly".into()));
        }
        let n = grid.len();
        let values = self.values_on(n);
        GridFunction::new(grid, values)
    }

    fn values_on(&self, m: usize) -> Vec<f64> {
        let mut spectrum = vec![Complex64::new(0.0, 0.0); m];
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx as i64 - self.max_freq as i64;
            let bin = k.rem_euclid(m as i64) as usize;
            spectrum[bin] += c;
        }
        fft::idft(&spectrum).iter().map(|z| z.re).collect()
    }

    /// Quadrature length: at least 64 points per highest oscillation and
    /// never below 4096, rounded to a power of two.
    fn quadrature_len(&self) -> usize {
        fft::next_pow2((64 * (self.max_freq + 1)).max(4096))
    }

    /// Oversampled values and the quadrature step, for integrands built
    /// pointwise out of this poly.
    pub fn values_oversampled(&self) -> (Vec<f64>, f64) {
        let m = self.quadrature_len();
        (self.values_on(m), 1.0 / m as f64)
    }

    /// L_p norm by midpoint quadrature on the oversampled grid.
    pub fn lp_norm(&self, p: Lp) -> f64 {
        let (values, h) = self.values_oversampled();
        lp_norm_of_samples(&values, h, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_norms() {
        let f = TrigPoly::sine(1, 1.0);
        assert!(f.is_real());
        assert!((f.lp_norm(Lp::One) - 2.0 / PI).abs() < 5e-7);
        assert!((f.lp_norm(Lp::Two) - 1.0 / 2.0f64.sqrt()).abs() < 1e-9);
        assert!((f.lp_norm(Lp::Inf) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn normalized_sine_has_unit_l1() {
        // (π/2)·sin(2πnx) has L1 norm 1 for every n.
        for n in [1usize, 5, 17] {
            let f = TrigPoly::sine(n, PI / 2.0);
            assert!((f.lp_norm(Lp::One) - 1.0).abs() < 2e-4, "n = {n}");
        }
    }

    #[test]
    fn shift_and_derivative_are_exact() {
        let f = TrigPoly::sine(3, 2.0);
        let g = f.shift(0.1);
        for &x in &[0.0, 0.21, 0.77] {
            assert!((g.eval(x) - f.eval(x + 0.1)).abs() < 1e-12);
        }
        let df = f.derivative();
        for &x in &[0.05, 0.4, 0.9] {
            let exact = 2.0 * 3.0 * std::f64::consts::TAU * (3.0 * std::f64::consts::TAU * x).cos();
            assert!((df.eval(x) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_matches_pointwise_eval() {
        let grid = TorusGrid::new(256).unwrap();
        let mut f = TrigPoly::sine(4, 1.0);
        f.set_coefficient(2, Complex64::new(0.25, 0.5));
        f.set_coefficient(-2, Complex64::new(0.25, -0.5));
        assert!(f.is_real());
        let s = f.sample(grid).unwrap();
        for j in (0..256).step_by(17) {
            assert!((s.values()[j] - f.eval(grid.point(j))).abs() < 1e-11);
        }
    }

    #[test]
    fn real_flag_detects_asymmetry() {
        let mut f = TrigPoly::zero(2);
        f.set_coefficient(1, Complex64::new(1.0, 0.0));
        assert!(!f.is_real());
        f.set_coefficient(-1, Complex64::new(1.0, 0.0));
        assert!(f.is_real());
    }
}
