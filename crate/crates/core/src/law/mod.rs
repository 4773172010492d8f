//! Probability laws of the real random variable driving the averaging
//! operator: characteristic functions, pushforwards to the circle grid, and
//! n-fold convolution densities of i.i.d. sums.

mod density;
mod pushforward;

pub use density::{RealDensity, WrappedDensity};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::torus::TorusGrid;

pub(crate) const MASS_TOL: f64 = 1e-12;
const DENSITY_INTEGRAL_TOL: f64 = 1e-9;

/// Point mass of an atomic law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Mixture component: `weight` times the component law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub law: LawSpec,
}

/// Symbolic description of the law of `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    /// Uniform on `[a, b]`, `b > a`.
    Uniform { a: f64, b: f64 },
    /// Normal with the given mean and standard deviation.
    Gaussian { mean: f64, sigma: f64 },
    /// Purely atomic law; masses sum to 1.
    Atoms { atoms: Vec<Atom> },
    /// Tabulated density on `[lo, hi]` with uniformly spaced samples
    /// (endpoints included); trapezoid integral must equal 1.
    DensityTable { lo: f64, hi: f64, samples: Vec<f64> },
    /// Convex combination of laws; weights sum to 1.
    Mixture { components: Vec<MixtureComponent> },
    /// Sum of `count` i.i.d. copies of `base`.
    IidSum { base: Box<LawSpec>, count: usize },
}

impl LawSpec {
    pub fn uniform_symmetric() -> Self {
        LawSpec::Uniform { a: -1.0, b: 1.0 }
    }

    pub fn standard_gaussian() -> Self {
        LawSpec::Gaussian { mean: 0.0, sigma: 1.0 }
    }

    /// The half-Dirac half-uniform mixture `½δ₀ + ½·U(−1,1)`.
    pub fn dirac_uniform_mix() -> Self {
        LawSpec::Mixture {
            components: vec![
                MixtureComponent {
                    weight: 0.5,
                    law: LawSpec::Atoms { atoms: vec![Atom { position: 0.0, mass: 1.0 }] },
                },
                MixtureComponent { weight: 0.5, law: LawSpec::uniform_symmetric() },
            ],
        }
    }

    /// Validate all structural invariants, collecting every violation with a
    /// field path rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        self.collect_issues("", &mut issues);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLaw(issues))
        }
    }

    fn collect_issues(&self, path: &str, issues: &mut Vec<String>) {
        let at = |field: &str| {
            if path.is_empty() {
                field.to_string()
            } else {
                format!("{path}.{field}")
            }
        };
        match self {
            LawSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    issues.push(format!("{}: bounds must be finite", at("uniform")));
                } else if b <= a {
                    issues.push(format!("{}: requires b > a, got [{a}, {b}]", at("uniform")));
                }
            }
            LawSpec::Gaussian { mean, sigma } => {
                if !mean.is_finite() {
                    issues.push(format!("{}: mean must be finite", at("gaussian")));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    issues.push(format!("{}: sigma must be > 0, got {sigma}", at("gaussian")));
                }
            }
            LawSpec::Atoms { atoms } => {
                if atoms.is_empty() {
                    issues.push(format!("{}: at least one atom required", at("atoms")));
                }
                let mut total = 0.0;
                for (i, atom) in atoms.iter().enumerate() {
                    if !atom.position.is_finite() {
                        issues.push(format!("{}[{i}].position: must be finite", at("atoms")));
                    }
                    if !(atom.mass.is_finite() && atom.mass >= 0.0) {
                        issues.push(format!(
                            "{}[{i}].mass: must be nonnegative, got {}",
                            at("atoms"),
                            atom.mass
                        ));
                    } else {
                        total += atom.mass;
                    }
                }
                if !atoms.is_empty() && (total - 1.0).abs() > MASS_TOL {
                    issues.push(format!(
                        "{}: masses sum to {total:.17}, expected 1 within {MASS_TOL:e}",
                        at("atoms")
                    ));
                }
            }
            LawSpec::DensityTable { lo, hi, samples } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    issues.push(format!("{}: requires finite hi > lo", at("density_table")));
                }
                if samples.len() < 2 {
                    issues.push(format!("{}: needs at least 2 samples", at("density_table.samples")));
                    return;
                }
                if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    issues.push(format!("{}: samples must be nonnegative", at("density_table.samples")));
                }
                if hi > lo {
                    let integral = trapezoid_integral(*lo, *hi, samples);
                    if (integral - 1.0).abs() > DENSITY_INTEGRAL_TOL {
                        issues.push(format!(
                            "{}: trapezoid integral is {integral:.12}, expected 1 within {DENSITY_INTEGRAL_TOL:e}",
                            at("density_table")
                        ));
                    }
                }
            }
            LawSpec::Mixture { components } => {
                if components.is_empty() {
                    issues.push(format!("{}: at least one component required", at("mixture")));
                }
                let mut total = 0.0;
                for (i, comp) in components.iter().enumerate() {
                    if !(comp.weight.is_finite() && comp.weight >= 0.0) {
                        issues.push(format!(
                            "{}[{i}].weight: must be nonnegative, got {}",
                            at("mixture"),
                            comp.weight
                        ));
                    } else {
                        total += comp.weight;
                    }
                    comp.law.collect_issues(&format!("{}[{i}]", at("mixture")), issues);
                }
                if !components.is_empty() && (total - 1.0).abs() > MASS_TOL {
                    issues.push(format!(
                        "{}: weights sum to {total:.17}, expected 1 within {MASS_TOL:e}",
                        at("mixture")
                    ));
                }
            }
            LawSpec::IidSum { base, count } => {
                if *count < 1 {
                    issues.push(format!("{}: count must be >= 1", at("iid_sum")));
                }
                base.collect_issues(&at("iid_sum.base"), issues);
            }
        }
    }

    /// Characteristic function `φ_Y(u) = E e^{iuY}`; closed form everywhere
    /// except `DensityTable`, which uses trapezoid quadrature. `φ(0) = 1`
    /// exactly.
    pub fn char_fn(&self, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        match self {
            LawSpec::Uniform { a, b } => {
                let half = u * (b - a) / 2.0;
                Complex64::from_polar(1.0, u * (a + b) / 2.0) * sinc(half)
            }
            LawSpec::Gaussian { mean, sigma } => {
                Complex64::from_polar((-u * u * sigma * sigma / 2.0).exp(), u * mean)
            }
            LawSpec::Atoms { atoms } => atoms
                .iter()
                .map(|a| a.mass * Complex64::from_polar(1.0, u * a.position))
                .sum(),
            LawSpec::DensityTable { lo, hi, samples } => {
                let step = (hi - lo) / (samples.len() - 1) as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &v) in samples.iter().enumerate() {
                    let w = if i == 0 || i == samples.len() - 1 { 0.5 } else { 1.0 };
                    acc += w * v * Complex64::from_polar(1.0, u * (lo + i as f64 * step));
                }
                acc * step
            }
            LawSpec::Mixture { components } => {
                components.iter().map(|c| c.weight * c.law.char_fn(u)).sum()
            }
            LawSpec::IidSum { base, count } => base.char_fn(u).powu(*count as u32),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            LawSpec::Uniform { a, b } => (a + b) / 2.0,
            LawSpec::Gaussian { mean, .. } => *mean,
            LawSpec::Atoms { atoms } => atoms.iter().map(|a| a.mass * a.position).sum(),
            LawSpec::DensityTable { lo, hi, samples } => {
                trapezoid_moment(*lo, *hi, samples, 1) / trapezoid_integral(*lo, *hi, samples)
            }
            LawSpec::Mixture { components } => {
                components.iter().map(|c| c.weight * c.law.mean()).sum()
            }
            LawSpec::IidSum { base, count } => *count as f64 * base.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            LawSpec::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            LawSpec::Gaussian { sigma, .. } => sigma * sigma,
            LawSpec::Atoms { atoms } => {
                let m = self.mean();
                atoms.iter().map(|a| a.mass * (a.position - m) * (a.position - m)).sum()
            }
            LawSpec::DensityTable { lo, hi, samples } => {
                let z = trapezoid_integral(*lo, *hi, samples);
                let m = trapezoid_moment(*lo, *hi, samples, 1) / z;
                trapezoid_moment(*lo, *hi, samples, 2) / z - m * m
            }
            LawSpec::Mixture { components } => {
                let m = self.mean();
                components
                    .iter()
                    .map(|c| {
                        let mi = c.law.mean();
                        c.weight * (c.law.variance() + (mi - m) * (mi - m))
                    })
                    .sum()
            }
            LawSpec::IidSum { base, count } => *count as f64 * base.variance(),
        }
    }

    /// Structural decency: the smallest order `ℓ` at which the ℓ-fold i.i.d.
    /// sum is known (by the shape of the spec) to carry an absolutely
    /// continuous part. `None` means purely atomic at every order. The
    /// reduction is total over this grammar: density-type variants are decent
    /// at order 1, atoms never are, mixtures inherit the best component, and
    /// an m-fold sum divides the base order by m.
    pub fn decency_order(&self) -> Option<usize> {
        match self {
            LawSpec::Uniform { .. } | LawSpec::Gaussian { .. } | LawSpec::DensityTable { .. } => {
                Some(1)
            }
            LawSpec::Atoms { .. } => None,
            LawSpec::Mixture { components } => components
                .iter()
                .filter(|c| c.weight > MASS_TOL)
                .filter_map(|c| c.law.decency_order())
                .min(),
            LawSpec::IidSum { base, count } => {
                base.decency_order().map(|k| k.div_ceil(*count).max(1))
            }
        }
    }

    /// Probability weights of `(tY) mod 1` on the grid: densities are
    /// integrated over cell preimages (cells are centered at grid points),
    /// atoms split linearly between the two nearest grid points.
    pub fn pushforward_to_torus(&self, t: f64, grid: TorusGrid) -> Result<Vec<f64>> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::BadParameter(format!("t must lie in (0, 1], got {t}")));
        }
        let mut w = vec![0.0; grid.len()];
        self.pushforward_into(t, grid, 1.0, &mut w)?;
        // Normalize the tiny accumulation drift away so that Σw = 1 and the
        // operator fixes constants exactly.
        let total: f64 = crate::torus::compensated_sum(w.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadParameter(format!(
                "pushforward mass drifted to {total}, law likely invalid"
            )));
        }
        for v in w.iter_mut() {
            *v /= total;
        }
        Ok(w)
    }

    fn pushforward_into(&self, t: f64, grid: TorusGrid, mass: f64, out: &mut [f64]) -> Result<()> {
        match self {
            LawSpec::Uniform { a, b } => {
                pushforward::distribute_uniform_interval(t * a, t * (b - a), mass, out);
                Ok(())
            }
            LawSpec::Gaussian { mean, sigma } => {
                pushforward::distribute_gaussian(t * mean, t * sigma, mass, out);
                Ok(())
            }
            LawSpec::Atoms { atoms } => {
                for atom in atoms {
                    pushforward::split_atom(t * atom.position, mass * atom.mass, out);
                }
                Ok(())
            }
            LawSpec::DensityTable { lo, hi, samples } => {
                pushforward::distribute_linear_table(t * lo, t * hi, samples, mass, out);
                Ok(())
            }
            LawSpec::Mixture { components } => {
                for comp in components {
                    comp.law.pushforward_into(t, grid, mass * comp.weight, out)?;
                }
                Ok(())
            }
            LawSpec::IidSum { base, count } => {
                let base_w = base.pushforward_to_torus(t, grid)?;
                let powered = circular_power(&base_w, *count);
                for (o, v) in out.iter_mut().zip(powered) {
                    *o += mass * v;
                }
                Ok(())
            }
        }
    }

    /// Density of the law itself on a uniform real-line grid with
    /// `resolution` cells per unit length (no standardization). Fails on
    /// purely atomic laws.
    pub fn density(&self, resolution: usize) -> Result<RealDensity> {
        density::law_density(self, resolution)
    }

    /// Density of the standardized i.i.d. sum `(Y₁+…+Yₙ − nEY)/√n`, built by
    /// n-fold FFT self-convolution of the cell-mass sequence of `Y`.
    pub fn sum_density_iid(&self, n: usize, resolution: usize) -> Result<RealDensity> {
        density::sum_density_iid(self, n, resolution)
    }

    /// Short identifier used in reports.
    pub fn describe(&self) -> String {
        match self {
            LawSpec::Uniform { a, b } => format!("uniform({a},{b})"),
            LawSpec::Gaussian { mean, sigma } => format!("gaussian({mean},{sigma})"),
            LawSpec::Atoms { atoms } => {
                let parts: Vec<String> =
                    atoms.iter().map(|a| format!("{}:{}", a.position, a.mass)).collect();
                format!("atoms[{}]", parts.join(" "))
            }
            LawSpec::DensityTable { lo, hi, samples } => {
                format!("table[{lo},{hi}]x{}", samples.len())
            }
            LawSpec::Mixture { components } => {
                let parts: Vec<String> =
                    components.iter().map(|c| format!("{}*{}", c.weight, c.law.describe())).collect();
                format!("mix({})", parts.join(" + "))
            }
            LawSpec::IidSum { base, count } => format!("iid_sum({}, {count})", base.describe()),
        }
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0 + x * x * x * x / 120.0
    } else {
        x.sin() / x
    }
}

fn trapezoid_integral(lo: f64, hi: f64, samples: &[f64]) -> f64 {
    trapezoid_moment(lo, hi, samples, 0)
}

fn trapezoid_moment(lo: f64, hi: f64, samples: &[f64], power: i32) -> f64 {
    let step = (hi - lo) / (samples.len() - 1) as f64;
    let mut acc = 0.0;
    for (i, &v) in samples.iter().enumerate() {
        let w = if i == 0 || i == samples.len() - 1 { 0.5 } else { 1.0 };
        let x = lo + i as f64 * step;
        acc += w * v * x.powi(power);
    }
    acc * step
}

/// m-fold circular self-convolution of a probability vector (DFT power).
fn circular_power(w: &[f64], m: usize) -> Vec<f64> {
    if m == 1 {
        return w.to_vec();
    }
    let mut spec = fft::dft_real(w);
    for z in spec.iter_mut() {
        *z = z.powu(m as u32);
    }
    let mut out = fft::idft_real_scaled(&spec);
    for v in out.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= total;
    }
    out
}
