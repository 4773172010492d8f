//! Densities on the real line and their reductions mod 1.
//!
//! The i.i.d.-sum pipeline works in cell masses: the law of `Y` is put on a
//! uniform grid of cells of width `1/resolution`, the n-fold sum is the
//! n-fold linear self-convolution of that mass sequence (one padded FFT,
//! symbol raised to the n-th power), and standardizing by `√n` is a pure
//! relabeling of the axis. Wrapping mod 1 sends each cell mass onto the
//! circle grid exactly, so total mass is conserved to rounding.

use crate::error::{Error, Result};
use crate::fft;
use crate::law::pushforward;
use crate::law::LawSpec;
use crate::torus::{compensated_sum, TorusGrid};

/// Density of a real random variable, sampled as cell averages on a uniform
/// grid: `values[i]` is the average density over the cell centered at
/// `lo + i·step`.
#[derive(Clone, Debug)]
pub struct RealDensity {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    /// How far the raw integral drifted from 1 before the final
    /// renormalization (truncation plus FFT rounding).
    renorm_drift: f64,
}

impl RealDensity {
    pub fn new(lo: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::BadParameter(format!("density step must be > 0, got {step}")));
        }
        if values.len() < 2 {
            return Err(Error::BadParameter("density needs at least 2 samples".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::BadParameter("density samples must be nonnegative".into()));
        }
        Ok(RealDensity { lo, step, values, renorm_drift: 0.0 })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Center of the i-th cell.
    pub fn position(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn renorm_drift(&self) -> f64 {
        self.renorm_drift
    }

    /// Riemann integral `step·Σ values`.
    pub fn integral(&self) -> f64 {
        self.step * compensated_sum(self.values.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.step
            * compensated_sum(
                self.values.iter().enumerate().map(|(i, v)| v * self.position(i)),
            )
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.step
            * compensated_sum(self.values.iter().enumerate().map(|(i, v)| {
                let d = self.position(i) - m;
                v * d * d
            }))
    }

    /// Sup distance to the centered Gaussian density with deviation `sigma`,
    /// evaluated at the cell centers.
    pub fn sup_distance_to_gaussian(&self, sigma: f64) -> f64 {
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = self.position(i);
                (v - norm * (-x * x / (2.0 * sigma * sigma)).exp()).abs()
            })
            .fold(0.0f64, f64::max)
    }

    /// Density of `(scale·X) mod 1` on the circle grid: every cell mass is
    /// spread over its scaled interval and wrapped, summing the integer
    /// translates exactly.
    pub fn wrap(&self, scale: f64, grid: TorusGrid) -> Result<WrappedDensity> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::BadParameter(format!("wrap scale must be > 0, got {scale}")));
        }
        let mut cell_mass = vec![0.0; grid.len()];
        let piece = scale * self.step;
        for (i, &v) in self.values.iter().enumerate() {
            let mass = v * self.step;
            if mass <= 0.0 {
                continue;
            }
            let lo = scale * (self.position(i) - 0.5 * self.step);
            pushforward::distribute_uniform_interval(lo, piece, mass, &mut cell_mass);
        }
        let total = compensated_sum(cell_mass.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadParameter(format!(
                "wrapped mass drifted to {total}; density not normalized?"
            )));
        }
        let h = grid.h();
        let values = cell_mass.iter().map(|m| m / (h * total)).collect();
        Ok(WrappedDensity { grid, values })
    }
}

/// Density of a circle-valued random variable, as cell averages on the grid.
/// The mean of `values` is 1 (the density integrates to 1).
#[derive(Clone, Debug)]
pub struct WrappedDensity {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl WrappedDensity {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `c` for which the discretized law is c-good: the minimum cell
    /// density. Zero when the density vanishes somewhere.
    pub fn goodness_constant(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min).max(0.0)
    }

    /// Probability weights (cell masses) of the wrapped law, usable as a
    /// circulant averaging kernel.
    pub fn to_weights(&self) -> Vec<f64> {
        let h = self.grid.h();
        let mut w: Vec<f64> = self.values.iter().map(|v| v * h).collect();
        let total: f64 = compensated_sum(w.iter().copied());
        for v in w.iter_mut() {
            *v /= total;
        }
        w
    }
}

/// Cell-mass sequence of a law on a uniform grid with the given step. Cell
/// centers are anchored at integer multiples of `step`, so sequences of
/// different mixture components align. Returns `(lo, masses)` where `lo` is
/// the center of the first cell. Atoms become two-point spikes; the purely
/// atomic remainder of a mixture is kept (its mass decays geometrically
/// under convolution powers).
fn base_mass_sequence(law: &LawSpec, step: f64) -> Result<(f64, Vec<f64>)> {
    let (lo_hint, hi_hint) = support_hint(law);
    let i_lo = (lo_hint / step).floor() as i64 - 1;
    let i_hi = (hi_hint / step).ceil() as i64 + 1;
    let len = (i_hi - i_lo + 1) as usize;
    let lo = i_lo as f64 * step;
    let mut masses = vec![0.0; len];
    fill_masses(law, lo, step, 1.0, &mut masses)?;
    Ok((lo, masses))
}

fn support_hint(law: &LawSpec) -> (f64, f64) {
    match law {
        LawSpec::Uniform { a, b } => (*a, *b),
        LawSpec::Gaussian { mean, sigma } => (mean - 8.5 * sigma, mean + 8.5 * sigma),
        LawSpec::Atoms { atoms } => {
            let lo = atoms.iter().map(|a| a.position).fold(f64::INFINITY, f64::min);
            let hi = atoms.iter().map(|a| a.position).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
        LawSpec::DensityTable { lo, hi, .. } => (*lo, *hi),
        LawSpec::Mixture { components } => components.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), c| {
                let (clo, chi) = support_hint(&c.law);
                (lo.min(clo), hi.max(chi))
            },
        ),
        LawSpec::IidSum { base, count } => {
            let (lo, hi) = support_hint(base);
            (*count as f64 * lo, *count as f64 * hi)
        }
    }
}

fn fill_masses(law: &LawSpec, lo: f64, step: f64, mass: f64, out: &mut [f64]) -> Result<()> {
    match law {
        LawSpec::Uniform { a, b } => {
            add_interval_masses(*a, *b, mass, lo, step, out);
            Ok(())
        }
        LawSpec::Gaussian { mean, sigma } => {
            for (i, o) in out.iter_mut().enumerate() {
                let c = lo + i as f64 * step;
                let m = pushforward::normal_cdf(c + 0.5 * step, *mean, *sigma)
                    - pushforward::normal_cdf(c - 0.5 * step, *mean, *sigma);
                *o += mass * m;
            }
            Ok(())
        }
        LawSpec::Atoms { atoms } => {
            for atom in atoms {
                add_atom_mass(atom.position, mass * atom.mass, lo, step, out);
            }
            Ok(())
        }
        LawSpec::DensityTable { lo: tlo, hi: thi, samples } => {
            let m = samples.len();
            let tstep = (thi - tlo) / (m - 1) as f64;
            let integral: f64 =
                (0..m - 1).map(|i| 0.5 * (samples[i] + samples[i + 1]) * tstep).sum();
            let scale = mass / integral;
            // Integrate each linear segment into the aligned cells.
            for i in 0..m - 1 {
                let seg_lo = tlo + i as f64 * tstep;
                let v0 = samples[i] * scale;
                let v1 = samples[i + 1] * scale;
                let mut s = 0.0;
                while s < tstep {
                    let x = seg_lo + s;
                    let cell = ((x - lo) / step + 0.5).floor();
                    let edge = lo + (cell + 0.5) * step - x;
                    let ds = edge.min(tstep - s).max(1e-18);
                    let f0 = v0 + (v1 - v0) * (s / tstep);
                    let f1 = v0 + (v1 - v0) * ((s + ds) / tstep);
                    let idx = cell as i64;
                    if idx >= 0 && (idx as usize) < out.len() {
                        out[idx as usize] += 0.5 * (f0 + f1) * ds;
                    }
                    s += ds;
                }
            }
            Ok(())
        }
        LawSpec::Mixture { components } => {
            for c in components {
                fill_masses(&c.law, lo, step, mass * c.weight, out)?;
            }
            Ok(())
        }
        LawSpec::IidSum { base, count } => {
            let (blo, bmass) = base_mass_sequence(base, step)?;
            let conv = fft::convolve_power(&bmass, *count);
            let conv_lo = *count as f64 * blo;
            for (i, &v) in conv.iter().enumerate() {
                let x = conv_lo + i as f64 * step;
                let idx = ((x - lo) / step).round() as i64;
                if idx >= 0 && (idx as usize) < out.len() {
                    out[idx as usize] += mass * v;
                }
            }
            Ok(())
        }
    }
}

fn add_interval_masses(a: f64, b: f64, mass: f64, lo: f64, step: f64, out: &mut [f64]) {
    let density = mass / (b - a);
    for (i, o) in out.iter_mut().enumerate() {
        let c = lo + i as f64 * step;
        let cell_a = (c - 0.5 * step).max(a);
        let cell_b = (c + 0.5 * step).min(b);
        if cell_b > cell_a {
            *o += density * (cell_b - cell_a);
        }
    }
}

fn add_atom_mass(pos: f64, mass: f64, lo: f64, step: f64, out: &mut [f64]) {
    let u = (pos - lo) / step;
    let i0 = u.floor() as i64;
    let frac = u - i0 as f64;
    if i0 >= 0 && (i0 as usize) < out.len() {
        out[i0 as usize] += mass * (1.0 - frac);
    }
    if i0 + 1 >= 0 && ((i0 + 1) as usize) < out.len() {
        out[(i0 + 1) as usize] += mass * frac;
    }
}

/// Density of the law itself (no standardization).
pub(crate) fn law_density(law: &LawSpec, resolution: usize) -> Result<RealDensity> {
    if law.decency_order().is_none() {
        return Err(Error::PurelyAtomic);
    }
    let step = 1.0 / resolution as f64;
    let (lo, masses) = base_mass_sequence(law, step)?;
    let values = masses.iter().map(|m| m / step).collect();
    finish_density(lo, step, values)
}

/// Density of `(Y₁+…+Yₙ − nEY)/√n` via n-fold FFT self-convolution of the
/// cell masses of `Y`. Standardization is an exact axis relabeling.
pub(crate) fn sum_density_iid(law: &LawSpec, n: usize, resolution: usize) -> Result<RealDensity> {
    if n < 1 {
        return Err(Error::BadParameter("sum order n must be >= 1".into()));
    }
    if law.decency_order().is_none() {
        return Err(Error::PurelyAtomic);
    }
    let step = 1.0 / resolution as f64;
    let (lo, masses) = base_mass_sequence(law, step)?;
    let conv = fft::convolve_power(&masses, n);
    let sqrt_n = (n as f64).sqrt();
    let shift = n as f64 * law.mean();
    let lo_q = (n as f64 * lo - shift) / sqrt_n;
    let step_q = step / sqrt_n;
    let values: Vec<f64> = conv.iter().map(|m| m * sqrt_n / step).collect();
    finish_density(lo_q, step_q, values)
}

fn finish_density(lo: f64, step: f64, values: Vec<f64>) -> Result<RealDensity> {
    let mut d = RealDensity::new(lo, step, values)?;
    let total = d.integral();
    d.renorm_drift = total - 1.0;
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::BadParameter(format!(
            "density integral drifted to {total}; window too small?"
        )));
    }
    for v in d.values.iter_mut() {
        *v /= total;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Atom;

    fn wrapped_gaussian_theta(x: f64, sigma: f64) -> f64 {
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        let reach = (10.0 * sigma).ceil() as i64 + 2;
        (-reach..=reach)
            .map(|k| {
                let y = x + k as f64;
                norm * (-y * y / (2.0 * sigma * sigma)).exp()
            })
            .sum()
    }

    #[test]
    fn triangle_from_two_uniforms() {
        // U(0,1) + U(0,1) has the triangle density peaking at 1; after
        // standardization the peak sits at 0 with height √2.
        let law = LawSpec::Uniform { a: 0.0, b: 1.0 };
        let d = law.sum_density_iid(2, 4096).unwrap();
        let peak_idx = d
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(d.position(peak_idx).abs() < 1e-3);
        assert!((d.values()[peak_idx] - 2.0f64.sqrt()).abs() < 1e-3);
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_sums_stay_gaussian() {
        let law = LawSpec::standard_gaussian();
        let d = law.sum_density_iid(4, 4096).unwrap();
        assert!(d.sup_distance_to_gaussian(1.0) < 1e-6);
    }

    #[test]
    fn atoms_are_rejected() {
        let law = LawSpec::Atoms {
            atoms: vec![Atom { position: 0.0, mass: 0.5 }, Atom { position: 1.0, mass: 0.5 }],
        };
        assert!(matches!(law.sum_density_iid(8, 1024), Err(Error::PurelyAtomic)));
    }

    #[test]
    fn variance_is_standardized() {
        for law in [LawSpec::uniform_symmetric(), LawSpec::standard_gaussian()] {
            for n in [16usize, 32] {
                let d = law.sum_density_iid(n, 2048).unwrap();
                let rel = (d.variance() - law.variance()).abs() / law.variance();
                assert!(rel < 0.02, "law {} n {} rel {}", law.describe(), n, rel);
            }
        }
    }

    #[test]
    fn wrap_two_full_periods_is_flat() {
        let d = RealDensity::new(0.0 + 0.5 / 4096.0, 1.0 / 4096.0, vec![0.5; 8192]).unwrap();
        let grid = TorusGrid::new(256).unwrap();
        let w = d.wrap(1.0, grid).unwrap();
        for v in w.values() {
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert!((w.goodness_constant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wrap_half_support() {
        // Density 2 on [0, ½): wrapped density is 2 on half the circle and 0
        // on the other half (cell averages at the two jump cells in between).
        let m = 4096;
        let step = 0.5 / m as f64;
        let d = RealDensity::new(0.5 * step, step, vec![2.0; m]).unwrap();
        let grid = TorusGrid::new(256).unwrap();
        let w = d.wrap(1.0, grid).unwrap();
        let h = grid.h();
        for j in 0..256 {
            let x = grid.point(j);
            if x > h && x < 0.5 - h {
                assert!((w.values()[j] - 2.0).abs() < 1e-9, "cell {j}");
            } else if x > 0.5 + h && x < 1.0 - h {
                assert!(w.values()[j].abs() < 1e-12, "cell {j}");
            }
        }
        assert!(w.goodness_constant() < 1e-12);
    }

    #[test]
    fn wrapped_wide_gaussian_is_nearly_uniform() {
        let law = LawSpec::Gaussian { mean: 0.0, sigma: 10.0 };
        let d = law.density(512).unwrap();
        let grid = TorusGrid::new(512).unwrap();
        let w = d.wrap(1.0, grid).unwrap();
        assert!(w.goodness_constant() >= 0.999);
    }

    #[test]
    fn wrapped_unit_gaussian_matches_theta_series() {
        let law = LawSpec::standard_gaussian();
        let d = law.density(4096).unwrap();
        let grid = TorusGrid::new(4096).unwrap();
        let w = d.wrap(1.0, grid).unwrap();
        let oracle = wrapped_gaussian_theta(0.5, 1.0);
        assert!(
            (w.goodness_constant() - oracle).abs() < 1e-6,
            "goodness {} vs theta {}",
            w.goodness_constant(),
            oracle
        );
    }

    #[test]
    fn wrap_conserves_mass() {
        let law = LawSpec::uniform_symmetric();
        let d = law.sum_density_iid(8, 1024).unwrap();
        let grid = TorusGrid::new(1024).unwrap();
        let w = d.wrap(3.0, grid).unwrap();
        let mean: f64 = w.values().iter().sum::<f64>() / w.values().len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
    }
}
