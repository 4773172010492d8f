//! Uniform grid on the circle `T = R/Z`, sampled functions, and L_p norms.
//!
//! Grid points sit at `x_j = j/n`; each point owns the cell
//! `[x_j − h/2, x_j + h/2)` of width `h = 1/n` (midpoint convention), so the
//! Riemann sum `h·Σ f(x_j)` is the midpoint rule and circular convolution by
//! probability weights is exactly a Markov matrix in these coordinates.

mod trig;

pub use trig::TrigPoly;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// Uniform n-point discretization of the circle.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadParameter(format!("grid size must be >= 2, got {n}")));
        }
        Ok(TorusGrid { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width `h = 1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Grid point `x_j = j/n`.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    /// Index of the cell (centered at a grid point) containing `x mod 1`.
    pub fn cell_of(&self, x: f64) -> usize {
        let w = x.rem_euclid(1.0);
        (w * self.n as f64).round() as usize % self.n
    }
}

/// Wrap a real number into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Exponent for an L_p norm; `p >= 1` or infinity.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Lp {
    One,
    Two,
    Inf,
    Other(f64),
}

impl Lp {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Lp::Inf);
        }
        if !p.is_finite() || p < 1.0 {
            return Err(Error::BadExponent(p));
        }
        if p == 1.0 {
            Ok(Lp::One)
        } else if p == 2.0 {
            Ok(Lp::Two)
        } else {
            Ok(Lp::Other(p))
        }
    }

    pub fn exponent(&self) -> f64 {
        match self {
            Lp::One => 1.0,
            Lp::Two => 2.0,
            Lp::Inf => f64::INFINITY,
            Lp::Other(p) => *p,
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Lp::Inf)
    }
}

impl std::fmt::Display for Lp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lp::One => write!(f, "1"),
            Lp::Two => write!(f, "2"),
            Lp::Inf => write!(f, "inf"),
            Lp::Other(p) => write!(f, "{p}"),
        }
    }
}

impl std::str::FromStr for Lp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "oo" => Ok(Lp::Inf),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::BadParameter(format!("cannot parse Lp exponent '{other}'")))?;
                Lp::new(p)
            }
        }
    }
}

impl serde::Serialize for Lp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Lp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Neumaier compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Real-valued function sampled at the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.point(j))).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Subtract the grid mean. A second compensated pass removes the residual
    /// rounding so the output mean is zero at machine precision.
    pub fn project_mean_zero(&self) -> GridFunction {
        let mut values = self.values.clone();
        for _ in 0..2 {
            let m = compensated_sum(values.iter().copied()) / values.len() as f64;
            if m == 0.0 {
                break;
            }
            for v in values.iter_mut() {
                *v -= m;
            }
        }
        GridFunction { grid: self.grid, values }
    }

    /// Riemann L_p norm: `(h·Σ|f_j|^p)^{1/p}`, max for `p = ∞`.
    pub fn lp_norm(&self, p: Lp) -> f64 {
        lp_norm_of_samples(&self.values, self.grid.h(), p)
    }

    /// Differentiation by frequency multiplication `c_k ↦ 2πik·c_k`.
    /// Exact for functions band-limited below the Nyquist frequency; the
    /// Nyquist bin (even n) is zeroed.
    pub fn spectral_derivative(&self) -> GridFunction {
        let n = self.grid.len();
        let mut spec = fft::dft_real(&self.values);
        for (m, z) in spec.iter_mut().enumerate() {
            let k = signed_frequency(m, n);
            if n % 2 == 0 && m == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, std::f64::consts::TAU * k as f64);
            }
        }
        GridFunction { grid: self.grid, values: fft::idft_real_scaled(&spec) }
    }

    pub fn sub(&self, rhs: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(rhs)?;
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    fn check_same_grid(&self, rhs: &GridFunction) -> Result<()> {
        if self.grid.len() != rhs.grid.len() {
            return Err(Error::GridMismatch(self.grid.len(), rhs.grid.len()));
        }
        Ok(())
    }

    /// CSV export with one `index,value` row per grid point (17 significant
    /// digits, lossless round-trip).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{j},{v:.16e}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 && line.starts_with("index") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let field = line
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::BadParameter(format!("csv line {lineno}: missing value field")))?;
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::BadParameter(format!("csv line {lineno}: bad float '{field}'")))?;
            values.push(v);
        }
        let grid = TorusGrid::new(values.len())?;
        GridFunction::new(grid, values)
    }

    /// Raw export: little-endian IEEE-754 doubles, one per grid point.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 8 != 0 {
            return Err(Error::BadParameter(format!(
                "raw vector length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let grid = TorusGrid::new(values.len())?;
        GridFunction::new(grid, values)
    }
}

pub(crate) fn lp_norm_of_samples(values: &[f64], h: f64, p: Lp) -> f64 {
    match p {
        Lp::One => h * compensated_sum(values.iter().map(|v| v.abs())),
        Lp::Two => (h * compensated_sum(values.iter().map(|v| v * v))).sqrt(),
        Lp::Inf => values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Lp::Other(p) => (h * compensated_sum(values.iter().map(|v| v.abs().powf(p)))).powf(1.0 / p),
    }
}

/// Signed frequency of DFT bin `m` on an n-point grid.
pub(crate) fn signed_frequency(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Circular correlation `(f ⋆ w)_i = Σ_j w_j f_{(i+j) mod n}`, i.e. the
/// discrete realization of `E f(x ⊕ ξ)` when `w` are the probability masses
/// of `ξ` on the grid. Computed via the DFT; matches direct summation.
pub fn circular_convolve(f: &GridFunction, weights: &[f64]) -> Result<GridFunction> {
    let n = f.grid().len();
    if weights.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: weights.len() });
    }
    let f_hat = fft::dft_real(f.values());
    let w_hat = fft::dft_real(weights);
    let spec: Vec<Complex64> = f_hat.iter().zip(&w_hat).map(|(fk, wk)| fk * wk.conj()).collect();
    GridFunction::new(f.grid(), fft::idft_real_scaled(&spec))
}

/// Direct O(n²) evaluation of the same correlation, used as an oracle.
pub fn circular_convolve_direct(f: &GridFunction, weights: &[f64]) -> Result<GridFunction> {
    let n = f.grid().len();
    if weights.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: weights.len() });
    }
    let vals = f.values();
    let out: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| weights[j] * vals[(i + j) % n]).sum())
        .collect();
    GridFunction::new(f.grid(), out)
}
