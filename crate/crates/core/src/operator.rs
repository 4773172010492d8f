//! The averaging operator `(A_t f)(x) = E f(x ⊕ tY)` in two backends.
//!
//! The grid backend is the circulant Markov matrix whose kernel is the
//! pushforward of `tY mod 1`; it is diagonalized by the DFT with eigenvalue
//! `λ_k = conj(ŵ_k)` at frequency `k`. The multiplier backend acts on
//! trigonometric polynomials exactly: frequency `k` is multiplied by
//! `φ_Y(2πkt)`, with no grid smoothing — the only backend safe for atomic
//! laws, whose multipliers are unimodular.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::law::LawSpec;
use crate::torus::{circular_convolve, GridFunction, TorusGrid, TrigPoly};

/// Common access to the frequency symbol `λ_k` of an averaging operator.
pub trait FrequencySymbol {
    /// Multiplier at frequency `k` (`λ_0 = 1`).
    fn symbol(&self, k: i64) -> Result<Complex64>;
    /// Largest frequency the backend can report.
    fn max_frequency(&self) -> usize;
    fn backend_tag(&self) -> &'static str;
}

/// Circulant realization of `A_t` on an n-point grid.
#[derive(Clone, Debug)]
pub struct GridOperator {
    grid: TorusGrid,
    t: f64,
    weights: Vec<f64>,
    law_desc: String,
    symbols: OnceLock<Vec<Complex64>>,
}

impl GridOperator {
    /// Build from a law: weights are the pushforward of `tY mod 1`.
    pub fn new(law: &LawSpec, t: f64, grid: TorusGrid) -> Result<Self> {
        law.validate()?;
        let weights = law.pushforward_to_torus(t, grid)?;
        Ok(GridOperator { grid, t, weights, law_desc: law.describe(), symbols: OnceLock::new() })
    }

    /// Build directly from probability weights (must be nonnegative and sum
    /// to 1 within 1e−12).
    pub fn from_weights(grid: TorusGrid, t: f64, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: weights.len() });
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::BadParameter("kernel weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadParameter(format!("kernel weights sum to {total}, expected 1")));
        }
        Ok(GridOperator { grid, t, weights, law_desc: "weights".into(), symbols: OnceLock::new() })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn law_desc(&self) -> &str {
        &self.law_desc
    }

    /// Eigenvalue table indexed by DFT bin: `λ_k = conj(ŵ_k)`.
    pub fn symbol_table(&self) -> &[Complex64] {
        self.symbols.get_or_init(|| fft::dft_real(&self.weights).iter().map(|z| z.conj()).collect())
    }

    /// Apply the operator: circular correlation of `f` with the weights.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid().len() != self.grid.len() {
            return Err(Error::GridMismatch(self.grid.len(), f.grid().len()));
        }
        circular_convolve(f, &self.weights)
    }

    /// m-fold application by raising the symbol to the m-th power (one
    /// forward and one inverse transform regardless of m).
    pub fn apply_power(&self, f: &GridFunction, m: usize) -> Result<GridFunction> {
        if f.grid().len() != self.grid.len() {
            return Err(Error::GridMismatch(self.grid.len(), f.grid().len()));
        }
        if m == 0 {
            return Err(Error::BadParameter("power must be >= 1".into()));
        }
        let table = self.symbol_table();
        let mut spec = fft::dft_real(f.values());
        for (z, lam) in spec.iter_mut().zip(table) {
            *z *= lam.powu(m as u32);
        }
        GridFunction::new(self.grid, fft::idft_real_scaled(&spec))
    }

    /// Apply the transposed operator (kernel reversed mod n).
    pub fn apply_transpose(&self, f: &GridFunction) -> Result<GridFunction> {
        let table = self.symbol_table();
        let mut spec = fft::dft_real(f.values());
        for (z, lam) in spec.iter_mut().zip(table) {
            *z *= lam.conj();
        }
        GridFunction::new(self.grid, fft::idft_real_scaled(&spec))
    }

    /// The operator with reversed kernel, i.e. the transpose.
    pub fn transpose(&self) -> GridOperator {
        let n = self.grid.len();
        let mut weights = vec![0.0; n];
        for (j, &w) in self.weights.iter().enumerate() {
            weights[(n - j) % n] = w;
        }
        GridOperator {
            grid: self.grid,
            t: self.t,
            weights,
            law_desc: format!("transpose({})", self.law_desc),
            symbols: OnceLock::new(),
        }
    }

    /// Kernel weights as CSV (`index,weight`).
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("index,weight\n");
        for (j, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{j},{w:.16e}\n"));
        }
        out
    }
}

impl FrequencySymbol for GridOperator {
    fn symbol(&self, k: i64) -> Result<Complex64> {
        let n = self.grid.len() as i64;
        if k.abs() >= n / 2 && k != 0 {
            return Err(Error::FrequencyOverflow { freq: k, cutoff: (n / 2 - 1).max(0) as usize });
        }
        Ok(self.symbol_table()[k.rem_euclid(n) as usize])
    }

    fn max_frequency(&self) -> usize {
        self.grid.len() / 2 - 1
    }

    fn backend_tag(&self) -> &'static str {
        "grid"
    }
}

/// Exact Fourier-multiplier realization of `A_t` up to a frequency cutoff.
#[derive(Clone, Debug)]
pub struct MultiplierOperator {
    law: LawSpec,
    t: f64,
    cutoff: usize,
}

impl MultiplierOperator {
    pub const DEFAULT_CUTOFF: usize = 512;

    pub fn new(law: LawSpec, t: f64, cutoff: usize) -> Result<Self> {
        law.validate()?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::BadParameter(format!("t must lie in (0, 1], got {t}")));
        }
        if cutoff == 0 {
            return Err(Error::BadParameter("cutoff must be >= 1".into()));
        }
        Ok(MultiplierOperator { law, t, cutoff })
    }

    pub fn law(&self) -> &LawSpec {
        &self.law
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Exact action on a trigonometric polynomial: `c_k ↦ φ_Y(2πkt)·c_k`.
    pub fn apply_trig(&self, f: &TrigPoly) -> Result<TrigPoly> {
        if f.max_freq() > self.cutoff {
            return Err(Error::FrequencyOverflow {
                freq: f.max_freq() as i64,
                cutoff: self.cutoff,
            });
        }
        let kmax = f.max_freq() as i64;
        let mut coeffs = Vec::with_capacity(2 * f.max_freq() + 1);
        for k in -kmax..=kmax {
            let lam = self.law.char_fn(std::f64::consts::TAU * k as f64 * self.t);
            coeffs.push(lam * f.coefficient(k));
        }
        TrigPoly::new(f.max_freq(), coeffs)
    }
}

impl FrequencySymbol for MultiplierOperator {
    fn symbol(&self, k: i64) -> Result<Complex64> {
        if k.unsigned_abs() as usize > self.cutoff {
            return Err(Error::FrequencyOverflow { freq: k, cutoff: self.cutoff });
        }
        Ok(self.law.char_fn(std::f64::consts::TAU * k as f64 * self.t))
    }

    fn max_frequency(&self) -> usize {
        self.cutoff
    }

    fn backend_tag(&self) -> &'static str {
        "multiplier"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Atom;
    use crate::torus::Lp;
    use std::f64::consts::TAU;

    #[test]
    fn global_average_kills_mean_zero() {
        let grid = TorusGrid::new(256).unwrap();
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), 0.5, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * 3.0 * x).sin()).project_mean_zero();
        let g = op.apply(&f).unwrap();
        assert!(g.lp_norm(Lp::Inf) < 1e-12);
        let g5 = op.apply_power(&f, 5).unwrap();
        assert!(g5.lp_norm(Lp::Inf) < 1e-12);
    }

    #[test]
    fn degenerate_atom_is_identity() {
        let grid = TorusGrid::new(128).unwrap();
        let law = LawSpec::Atoms { atoms: vec![Atom { position: 0.0, mass: 1.0 }] };
        assert_eq!(law.decency_order(), None);
        let op = GridOperator::new(&law, 0.3, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * x).cos() + 0.2);
        let g = op.apply(&f).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_is_eigenfunction_with_sinc_eigenvalue() {
        let grid = TorusGrid::new(4096).unwrap();
        let t = 0.1;
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), t, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * x).cos());
        let g = op.apply(&f).unwrap();
        let factor = (TAU * t).sin() / (TAU * t); // ≈ 0.935489
        for (j, v) in g.values().iter().enumerate() {
            let expect = factor * (TAU * grid.point(j)).cos();
            assert!((v - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn symbol_values() {
        let grid = TorusGrid::new(1024).unwrap();
        let t = 0.2;
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), t, grid).unwrap();
        assert!((op.symbol(0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let s1 = op.symbol(1).unwrap();
        let expected = (TAU * t).sin() / (TAU * t);
        assert!((s1.re - expected).abs() < 1e-5);
        assert!(s1.im.abs() < 1e-12);
        // Atom laws have unimodular symbols.
        let atom = LawSpec::Atoms { atoms: vec![Atom { position: 0.37, mass: 1.0 }] };
        let mop = MultiplierOperator::new(atom, 0.9, 64).unwrap();
        for k in 1..=64i64 {
            assert!((mop.symbol(k).unwrap().norm() - 1.0).abs() < 1e-12);
        }
        assert!(mop.symbol(65).is_err());
    }

    #[test]
    fn apply_power_matches_repeated_apply() {
        let grid = TorusGrid::new(512).unwrap();
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), 0.13, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * 2.0 * x).sin() - 0.4 * (TAU * 5.0 * x).cos());
        let mut g = f.clone();
        for _ in 0..6 {
            g = op.apply(&g).unwrap();
        }
        let fast = op.apply_power(&f, 6).unwrap();
        for (a, b) in g.values().iter().zip(fast.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn eight_shifts_of_an_eighth_wrap_to_identity() {
        let grid = TorusGrid::new(64).unwrap();
        // atom at ½ with t = ¼ shifts by ⅛, aligned with the grid
        let law = LawSpec::Atoms { atoms: vec![Atom { position: 0.5, mass: 1.0 }] };
        let op = GridOperator::new(&law, 0.25, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * 3.0 * x).sin() + 0.1);
        let g = op.apply_power(&f, 8).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn trig_backend_atom_shift_residual() {
        // For Y ≡ x₁ the operator shifts by t·x₁ and the residual of the
        // unit-L1 sine has norm 2|sin(πnt·x₁)|.
        let x1 = 0.37;
        let t = 0.9;
        let n = 5usize;
        let law = LawSpec::Atoms { atoms: vec![Atom { position: x1, mass: 1.0 }] };
        let op = MultiplierOperator::new(law, t, 64).unwrap();
        let f = TrigPoly::sine(n, std::f64::consts::PI / 2.0);
        let af = op.apply_trig(&f).unwrap();
        for &x in &[0.1, 0.45, 0.81] {
            assert!((af.eval(x) - f.eval(x + t * x1)).abs() < 1e-10);
        }
        let residual = f.sub(&af);
        let expected = 2.0 * (std::f64::consts::PI * n as f64 * t * x1).sin().abs();
        assert!((residual.lp_norm(Lp::One) - expected).abs() < 2e-4);
        let expected_l2 =
            2.0f64.sqrt() * (std::f64::consts::PI / 2.0) * (std::f64::consts::PI * n as f64 * t * x1).sin().abs();
        assert!((residual.lp_norm(Lp::Two) - expected_l2).abs() < 1e-6);
    }

    #[test]
    fn trig_backend_gaussian_damps_cosine() {
        let law = LawSpec::standard_gaussian();
        let t = 0.15;
        let op = MultiplierOperator::new(law, t, 8).unwrap();
        let f = TrigPoly::cosine(1, 1.0);
        let af = op.apply_trig(&f).unwrap();
        let damp = (-2.0 * std::f64::consts::PI.powi(2) * t * t).exp();
        for &x in &[0.0, 0.3, 0.62] {
            assert!((af.eval(x) - damp * (TAU * x).cos()).abs() < 1e-12);
        }
        // Y ≡ 0 leaves the poly unchanged.
        let id = MultiplierOperator::new(
            LawSpec::Atoms { atoms: vec![Atom { position: 0.0, mass: 1.0 }] },
            t,
            8,
        )
        .unwrap();
        let same = id.apply_trig(&f).unwrap();
        for &x in &[0.0, 0.3, 0.62] {
            assert!((same.eval(x) - f.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn positivity_and_contraction() {
        use rand::{Rng, SeedableRng};
        let grid = TorusGrid::new(128).unwrap();
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), 0.23, grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = GridFunction::new(
                grid,
                (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let pos = GridFunction::new(grid, f.values().iter().map(|v| v.abs()).collect()).unwrap();
            let apos = op.apply(&pos).unwrap();
            assert!(apos.values().iter().all(|v| *v >= -1e-14));
            for p in [Lp::One, Lp::Other(1.5), Lp::Two, Lp::Other(4.0), Lp::Inf] {
                let before = f.lp_norm(p);
                let after = op.apply(&f).unwrap().lp_norm(p);
                assert!(after <= before + 1e-12);
            }
        }
    }

    #[test]
    fn shift_equivariance() {
        let grid = TorusGrid::new(64).unwrap();
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), 0.31, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * 2.0 * x).cos() + 0.5 * (TAU * 7.0 * x).sin());
        let shift = 5usize;
        let rotate = |g: &GridFunction| {
            let v = g.values();
            let rotated: Vec<f64> = (0..64).map(|j| v[(j + shift) % 64]).collect();
            GridFunction::new(grid, rotated).unwrap()
        };
        let a = rotate(&op.apply(&f).unwrap());
        let b = op.apply(&rotate(&f)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_property() {
        let grid = TorusGrid::new(256).unwrap();
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), 0.17, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * 4.0 * x).sin() + (TAU * x).cos());
        let ab = op.apply_power(&f, 9).unwrap();
        let a_then_b = op.apply_power(&op.apply_power(&f, 4).unwrap(), 5).unwrap();
        for (x, y) in ab.values().iter().zip(a_then_b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn backend_agreement_low_frequency() {
        // Grid and multiplier backends agree to 1e−6 for very low
        // frequencies at n = 4096; the cell-average symbol error grows as
        // (2πKh)²/24, so higher bands get the derived bound.
        let grid = TorusGrid::new(4096).unwrap();
        let t = 0.21;
        let law = LawSpec::uniform_symmetric();
        let gop = GridOperator::new(&law, t, grid).unwrap();
        let mop = MultiplierOperator::new(law, t, 64).unwrap();
        let h = grid.h();

        for kmax in [3usize, 32] {
            let mut poly = TrigPoly::zero(kmax);
            for k in 1..=kmax as i64 {
                let c = Complex64::new(0.3 / k as f64, 0.1);
                poly.set_coefficient(k, c);
                poly.set_coefficient(-k, c.conj());
            }
            let f = poly.sample(grid).unwrap();
            let via_grid = gop.apply(&f).unwrap();
            let via_mult = mop.apply_trig(&poly).unwrap().sample(grid).unwrap();
            let diff = via_grid.sub(&via_mult).unwrap().lp_norm(Lp::Inf);
            let coeff_sum: f64 = (1..=kmax as i64).map(|k| 2.0 * poly.coefficient(k).norm()).sum();
            let bound = (TAU * kmax as f64 * h).powi(2) / 12.0 * coeff_sum + 1e-12;
            assert!(diff <= bound, "kmax {kmax}: diff {diff} bound {bound}");
            if kmax <= 3 {
                assert!(diff <= 1e-6, "kmax {kmax}: diff {diff}");
            }
        }
    }
}
