//! Spectral gap of `I − A_t` on the mean-zero subspace.
//!
//! On the discrete circle the operator is circulant, so the gap
//! `g_p = inf ‖(I−A)f‖_p/‖f‖_p` over mean-zero `f` is the reciprocal of the
//! norm of the inverse kernel `g` (symbol `1/(1−λ_k)` for `k ≠ 0`, zero at
//! `k = 0`) restricted to that subspace. The restricted norms are exact for
//! `p ∈ {1, 2, ∞}`:
//!
//! * `p = 2`: `g_2 = min_{k≠0} |1 − λ_k|` (Parseval),
//! * `p = 1`: `1/g_1 = max_{d≠0} ½·Σ_s |g_s − g_{s−d}|` — the extreme points
//!   of the mean-zero L1 unit ball are `(e_i − e_j)/2`,
//! * `p = ∞`: `1/g_∞ = min_λ Σ_k |g_k − λ|`, attained at the (lower) median —
//!   the dual description of `sup {⟨g, f⟩ : |f| ≤ 1, Σf = 0}`.
//!
//! General `p ∈ (1, ∞)` gets a heuristic upper bound by projected descent on
//! the Rayleigh-type ratio.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::law::LawSpec;
use crate::operator::{FrequencySymbol, GridOperator};
use crate::torus::{GridFunction, Lp, TorusGrid};

/// Below this distance from 1 a multiplier is declared resonant: gap 0,
/// inverse kernel undefined on the mean-zero subspace.
pub const RESONANCE_TOL: f64 = 1e-13;

/// Circulant kernel of `(I − A)⁻¹` restricted to mean-zero functions.
#[derive(Clone, Debug)]
pub struct InverseKernel {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl InverseKernel {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Kernel of `(I − A)⁻¹` by symbol inversion: `1/(1 − λ_k)` for `k ≠ 0`, `0`
/// at `k = 0`. Fails with [`Error::Resonant`] when some `λ_k = 1` within
/// [`RESONANCE_TOL`].
pub fn inverse_kernel(op: &GridOperator) -> Result<InverseKernel> {
    let n = op.grid().len();
    let table = op.symbol_table();
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for (m, lam) in table.iter().enumerate().skip(1) {
        let denom = Complex64::new(1.0, 0.0) - lam;
        if denom.norm() < RESONANCE_TOL {
            return Err(Error::Resonant {
                k: crate::torus::signed_frequency(m, n),
                tol: RESONANCE_TOL,
            });
        }
        spec[m] = denom.inv();
    }
    // spec is the λ-indexed symbol; the DFT of the kernel is its conjugate.
    let w_hat: Vec<Complex64> = spec.iter().map(|z| z.conj()).collect();
    let values = fft::idft_real_scaled(&w_hat);
    Ok(InverseKernel { grid: op.grid(), values })
}

/// One gap (or restricted-norm) computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub p: Lp,
    pub t: f64,
    pub gap: f64,
    /// How the value was obtained; `descent-upper-bound` marks heuristics.
    pub method: String,
    /// Minimizing frequency, extremal shift, or optimal level.
    pub witness: String,
    pub grid_n: Option<usize>,
    pub cutoff: Option<usize>,
}

impl GapReport {
    pub fn gap_over_t2(&self) -> f64 {
        self.gap / (self.t * self.t)
    }
}

/// Exact L2 gap: exhaustive scan of `|1 − λ_k|` over the backend's
/// frequencies (all DFT bins for the grid backend, `1..=K` for the
/// multiplier backend).
pub fn gap_l2<S: FrequencySymbol>(op: &S, t: f64) -> GapReport {
    let mut best = f64::INFINITY;
    let mut best_k: i64 = 0;
    for k in 1..=op.max_frequency() as i64 {
        let lam = op.symbol(k).expect("frequency within backend range");
        let d = (Complex64::new(1.0, 0.0) - lam).norm();
        if d < best {
            best = d;
            best_k = k;
        }
    }
    GapReport {
        p: Lp::Two,
        t,
        gap: if best < RESONANCE_TOL { 0.0 } else { best },
        method: "l2-exhaustive".into(),
        witness: format!("k*={best_k}"),
        grid_n: None,
        cutoff: Some(op.max_frequency()),
    }
}

/// Exact L2 gap of a grid operator, scanning every DFT bin (including the
/// Nyquist bin, which the signed-frequency API cannot address).
pub fn gap_l2_grid(op: &GridOperator) -> GapReport {
    let n = op.grid().len();
    let table = op.symbol_table();
    let mut best = f64::MAX;
    let mut best_k: i64 = 0;
    // Scan bins ordered by |frequency|, positive first, so ties (symmetric
    // laws have λ_k = λ_{−k}) pick the canonical small positive witness.
    let mut bins: Vec<usize> = (1..n).collect();
    bins.sort_by_key(|&m| {
        let k = crate::torus::signed_frequency(m, n);
        (k.abs(), k < 0)
    });
    for m in bins {
        let d = (Complex64::new(1.0, 0.0) - table[m]).norm();
        if d < best - 1e-13 * (1.0 + best) {
            best = d;
            best_k = crate::torus::signed_frequency(m, n);
        }
    }
    GapReport {
        p: Lp::Two,
        t: op.t(),
        gap: if best < RESONANCE_TOL { 0.0 } else { best },
        method: "l2-exhaustive".into(),
        witness: format!("k*={best_k}"),
        grid_n: Some(n),
        cutoff: None,
    }
}

/// Norm of the circulant with the given kernel, restricted to mean-zero
/// functions, in L1: `max_{d≠0} ½·Σ_s |g_s − g_{s−d}|`, with the extremal
/// shift.
pub fn restricted_norm_l1(kernel: &[f64]) -> (f64, usize) {
    let n = kernel.len();
    let mut best = 0.0;
    let mut best_d = 1;
    for d in 1..n {
        let mut acc = 0.0;
        for s in 0..n {
            let other = if s >= d { s - d } else { s + n - d };
            acc += (kernel[s] - kernel[other]).abs();
        }
        let norm = 0.5 * acc;
        if norm > best {
            best = norm;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Restricted L∞ norm: `min_λ Σ_k |g_k − λ|`; the minimum is attained at the
/// median (ties broken by the lower median), returned as witness.
pub fn restricted_norm_linf(kernel: &[f64]) -> (f64, f64) {
    let mut sorted = kernel.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda = sorted[(sorted.len() - 1) / 2];
    let norm = kernel.iter().map(|g| (g - lambda).abs()).sum();
    (norm, lambda)
}

/// Restricted L2 norm of a circulant from its λ-symbol table: the largest
/// `|λ_k|` over nonzero frequencies.
pub fn restricted_norm_l2(symbol_table: &[Complex64]) -> (f64, i64) {
    let n = symbol_table.len();
    let mut best = 0.0;
    let mut best_k = 1i64;
    for (m, lam) in symbol_table.iter().enumerate().skip(1) {
        if lam.norm() > best {
            best = lam.norm();
            best_k = crate::torus::signed_frequency(m, n);
        }
    }
    (best, best_k)
}

fn resonant_report(p: Lp, op: &GridOperator, k: i64) -> GapReport {
    GapReport {
        p,
        t: op.t(),
        gap: 0.0,
        method: "resonant".into(),
        witness: format!("resonant k={k}"),
        grid_n: Some(op.grid().len()),
        cutoff: None,
    }
}

/// Exact L1 gap via the inverse kernel and the extreme points of the
/// mean-zero L1 unit ball. A resonant operator yields gap 0 with the
/// resonant frequency as witness.
pub fn gap_l1(op: &GridOperator) -> GapReport {
    match inverse_kernel(op) {
        Err(Error::Resonant { k, .. }) => resonant_report(Lp::One, op, k),
        Err(e) => unreachable!("inverse_kernel returns only Resonant: {e}"),
        Ok(kernel) => gap_l1_from_kernel(op, &kernel),
    }
}

pub(crate) fn gap_l1_from_kernel(op: &GridOperator, kernel: &InverseKernel) -> GapReport {
    let (norm, d) = restricted_norm_l1(kernel.values());
    GapReport {
        p: Lp::One,
        t: op.t(),
        gap: 1.0 / norm,
        method: "l1-extreme-points".into(),
        witness: format!("d*={d}"),
        grid_n: Some(op.grid().len()),
        cutoff: None,
    }
}

/// Exact L∞ gap via the inverse kernel and the median level.
pub fn gap_linf(op: &GridOperator) -> GapReport {
    match inverse_kernel(op) {
        Err(Error::Resonant { k, .. }) => resonant_report(Lp::Inf, op, k),
        Err(e) => unreachable!("inverse_kernel returns only Resonant: {e}"),
        Ok(kernel) => gap_linf_from_kernel(op, &kernel),
    }
}

pub(crate) fn gap_linf_from_kernel(op: &GridOperator, kernel: &InverseKernel) -> GapReport {
    let (norm, lambda) = restricted_norm_linf(kernel.values());
    GapReport {
        p: Lp::Inf,
        t: op.t(),
        gap: 1.0 / norm,
        method: "linf-median".into(),
        witness: format!("lambda*={lambda:.6e}"),
        grid_n: Some(op.grid().len()),
        cutoff: None,
    }
}

/// Budget for the general-p descent.
#[derive(Clone, Copy, Debug)]
pub struct DescentBudget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for DescentBudget {
    fn default() -> Self {
        DescentBudget { restarts: 4, iterations: 300 }
    }
}

/// Heuristic UPPER bound on the gap for `1 < p < ∞`: projected normalized
/// subgradient descent on `‖(I−A)f‖_p/‖f‖_p` over mean-zero `f`, restarted
/// from the best L2 frequencies and from random functions.
pub fn gap_general_p(
    op: &GridOperator,
    p: f64,
    budget: DescentBudget,
    seed: u64,
) -> Result<GapReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let lp = Lp::new(p)?;
    let grid = op.grid();
    let n = grid.len();
    let ratio = |f: &GridFunction| -> f64 {
        let residual = f.sub(&op.apply(f).unwrap()).unwrap();
        residual.lp_norm(lp) / f.lp_norm(lp)
    };

    // Restart pool: the L2-optimal frequency and its neighbors, then random.
    let l2 = gap_l2_grid(op);
    let k_star: i64 = l2.witness.trim_start_matches("k*=").parse().unwrap_or(1);
    let mut inits: Vec<(String, GridFunction)> = Vec::new();
    for k in [k_star, k_star.max(2) - 1, k_star + 1] {
        let k = k.unsigned_abs().max(1).min((n / 2 - 1) as u64) as f64;
        inits.push((
            format!("cos(2pi*{k}x)"),
            GridFunction::from_fn(grid, |x| (std::f64::consts::TAU * k * x).cos()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..budget.restarts {
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        inits.push((format!("random#{r}"), GridFunction::new(grid, values)?));
    }

    let mut best_val = f64::INFINITY;
    let mut best_witness = String::new();
    for (label, start) in inits {
        let mut f = start.project_mean_zero();
        let scale = f.lp_norm(lp);
        if scale == 0.0 {
            continue;
        }
        f = f.scale(1.0 / scale);
        let mut current = ratio(&f);
        let mut step = 0.1;
        for _ in 0..budget.iterations {
            let residual = f.sub(&op.apply(&f).unwrap()).unwrap();
            let rnorm = residual.lp_norm(lp);
            let fnorm = f.lp_norm(lp);
            // Subgradient of ‖·‖_p at v: (|v|/‖v‖)^{p−1}·sign(v).
            let dual = |v: &GridFunction, norm: f64| -> Vec<f64> {
                v.values()
                    .iter()
                    .map(|x| (x.abs() / norm).powf(p - 1.0) * x.signum())
                    .collect()
            };
            let du = dual(&residual, rnorm);
            let df = dual(&f, fnorm);
            // (I−A)ᵀ du
            let du_fn = GridFunction::new(grid, du)?;
            let bt = du_fn.sub(&op.apply_transpose(&du_fn)?)?;
            let grad: Vec<f64> = bt
                .values()
                .iter()
                .zip(&df)
                .map(|(a, b)| (a - (rnorm / fnorm) * b) / fnorm)
                .collect();
            let grad = GridFunction::new(grid, grad)?.project_mean_zero();
            let gnorm = grad.lp_norm(Lp::Two);
            if gnorm < 1e-15 {
                break;
            }
            let candidate = f.sub(&grad.scale(step / gnorm))?.project_mean_zero();
            let cnorm = candidate.lp_norm(lp);
            if cnorm == 0.0 {
                step *= 0.5;
                continue;
            }
            let candidate = candidate.scale(1.0 / cnorm);
            let value = ratio(&candidate);
            if value < current {
                current = value;
                f = candidate;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        if current < best_val {
            best_val = current;
            best_witness = label;
        }
    }

    Ok(GapReport {
        p: lp,
        t: op.t(),
        gap: best_val,
        method: "descent-upper-bound".into(),
        witness: format!("init={best_witness}"),
        grid_n: Some(n),
        cutoff: None,
    })
}

/// Per-exponent fitted constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerPConstant {
    pub p: Lp,
    pub c_est: f64,
}

/// Gap sweep over a `(p, t)` lattice with the fitted `c` in the `c·t²`
/// lower bound: `c_est = min gap/t²` over the lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub law: String,
    pub grid_n: usize,
    pub points: Vec<GapReport>,
    pub c_est: f64,
    pub per_p: Vec<PerPConstant>,
    /// Set when some lattice point is resonant (c_est = 0).
    pub resonant_witness: Option<String>,
}

impl SweepReport {
    /// CSV rows in lattice order (t-major, p-minor), plot-ready columns.
    pub fn to_csv(&self, header_comment: &str) -> String {
        let mut out = String::new();
        if !header_comment.is_empty() {
            out.push_str(header_comment);
            if !header_comment.ends_with('\n') {
                out.push('\n');
            }
        }
        out.push_str("law,p,t,t_squared,gap,gap_over_t2,method,witness,grid_n,cutoff\n");
        for r in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&self.law),
                r.p,
                fmt17(r.t),
                fmt17(r.t * r.t),
                fmt17(r.gap),
                fmt17(r.gap_over_t2()),
                csv_field(&r.method),
                csv_field(&r.witness),
                r.grid_n.map(|n| n.to_string()).unwrap_or_default(),
                r.cutoff.map(|k| k.to_string()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// 17-significant-digit float formatting (lossless round-trip).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Quote a CSV field when it contains separators.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Sweep the `(p, t)` lattice for a law, computing exact gaps for
/// `p ∈ {1,2,∞}` and descent upper bounds otherwise, and fit the constant.
/// Lattice points are independent; results are merged in lattice order
/// (t-major, p-minor) regardless of the executing thread count.
pub fn sweep_fit_constant(
    law: &LawSpec,
    p_list: &[Lp],
    t_list: &[f64],
    grid: TorusGrid,
    seed: u64,
) -> Result<SweepReport> {
    law.validate()?;
    let blocks: Vec<Result<Vec<GapReport>>> = t_list
        .par_iter()
        .map(|&t| {
            let op = GridOperator::new(law, t, grid)?;
            let kernel = inverse_kernel(&op);
            let mut rows = Vec::with_capacity(p_list.len());
            for &p in p_list {
                let report = match p {
                    Lp::Two => gap_l2_grid(&op),
                    Lp::One => match &kernel {
                        Ok(k) => gap_l1_from_kernel(&op, k),
                        Err(Error::Resonant { k, .. }) => resonant_report(Lp::One, &op, *k),
                        Err(e) => return Err(e.clone()),
                    },
                    Lp::Inf => match &kernel {
                        Ok(k) => gap_linf_from_kernel(&op, k),
                        Err(Error::Resonant { k, .. }) => resonant_report(Lp::Inf, &op, *k),
                        Err(e) => return Err(e.clone()),
                    },
                    Lp::Other(pv) => gap_general_p(&op, pv, DescentBudget::default(), seed)?,
                };
                rows.push(report);
            }
            Ok(rows)
        })
        .collect();

    let mut points = Vec::with_capacity(t_list.len() * p_list.len());
    for block in blocks {
        points.extend(block?);
    }

    let mut c_est = f64::INFINITY;
    let mut resonant_witness = None;
    let mut per_p = Vec::new();
    for &p in p_list {
        let mut c_p = f64::INFINITY;
        for r in points.iter().filter(|r| r.p == p) {
            c_p = c_p.min(r.gap_over_t2());
            if r.gap == 0.0 && resonant_witness.is_none() {
                resonant_witness = Some(r.witness.clone());
            }
        }
        per_p.push(PerPConstant { p, c_est: c_p });
        c_est = c_est.min(c_p);
    }

    Ok(SweepReport {
        law: law.describe(),
        grid_n: grid.len(),
        points,
        c_est,
        per_p,
        resonant_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Atom;
    use std::f64::consts::TAU;

    fn uniform_op(t: f64, n: usize) -> GridOperator {
        let grid = TorusGrid::new(n).unwrap();
        GridOperator::new(&LawSpec::uniform_symmetric(), t, grid).unwrap()
    }

    #[test]
    fn l2_gap_full_average_is_one() {
        let op = uniform_op(0.5, 256);
        let r = gap_l2_grid(&op);
        assert!((r.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2_gap_small_t_sinc_value() {
        let op = uniform_op(0.1, 4096);
        let r = gap_l2_grid(&op);
        let expected = 1.0 - (TAU * 0.1).sin() / (TAU * 0.1); // ≈ 0.064511
        assert!((r.gap - expected).abs() < 1e-6, "gap {} vs {}", r.gap, expected);
        assert_eq!(r.witness, "k*=1");
        // Multiplier backend with a wide scan agrees to closed form.
        let mop =
            crate::operator::MultiplierOperator::new(LawSpec::uniform_symmetric(), 0.1, 1000)
                .unwrap();
        let rm = gap_l2(&mop, 0.1);
        assert!((rm.gap - expected).abs() < 1e-12);
        assert_eq!(rm.witness, "k*=1");
    }

    #[test]
    fn identity_operator_is_resonant() {
        let grid = TorusGrid::new(64).unwrap();
        let law = LawSpec::Atoms { atoms: vec![Atom { position: 0.0, mass: 1.0 }] };
        let op = GridOperator::new(&law, 0.3, grid).unwrap();
        assert!((gap_l2_grid(&op).gap - 0.0).abs() < 1e-15);
        assert!(matches!(inverse_kernel(&op), Err(Error::Resonant { .. })));
        let r1 = gap_l1(&op);
        assert_eq!(r1.gap, 0.0);
        assert!(r1.witness.contains("resonant"));
        let rinf = gap_linf(&op);
        assert_eq!(rinf.gap, 0.0);
    }

    #[test]
    fn inverse_kernel_of_global_average() {
        // (I − mean)⁻¹ on mean-zero functions is the mean-zero projector:
        // kernel δ₀ − 1/n, hand-checked at n = 4.
        let op = uniform_op(0.5, 4);
        let g = inverse_kernel(&op).unwrap();
        let expect = [0.75, -0.25, -0.25, -0.25];
        for (a, b) in g.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(g.values().iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn inverse_kernel_inverts_i_minus_a() {
        use rand::{Rng, SeedableRng};
        let n = 16;
        let grid = TorusGrid::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let op = GridOperator::from_weights(grid, 0.5, w.clone()).unwrap();
            let g = inverse_kernel(&op).unwrap();
            // (δ₀ − w) correlated with g must be the mean-zero projector.
            for i in 0..n {
                for j in 0..n {
                    // projector entry: δ_{ij} − 1/n
                    let mut acc = 0.0;
                    for s in 0..n {
                        // kernel of I−A at row i, col (i+s): δ_{s,0} − w_s
                        let delta = if s == 0 { 1.0 } else { 0.0 };
                        let gcol = g.values()[(j + n - (i + s) % n) % n];
                        acc += (delta - w[s]) * gcol;
                    }
                    let expect = if i == j { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
                    assert!((acc - expect).abs() < 1e-8, "entry ({i},{j}): {acc} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn l1_linf_gap_of_global_average_is_one() {
        let op = uniform_op(0.5, 64);
        assert!((gap_l1(&op).gap - 1.0).abs() < 1e-10);
        assert!((gap_linf(&op).gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaps_lower_bound_random_ratios() {
        use rand::{Rng, SeedableRng};
        let op = uniform_op(0.23, 128);
        let grid = op.grid();
        let reports = [gap_l1(&op), gap_l2_grid(&op), gap_linf(&op)];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let f = GridFunction::new(grid, (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap()
                .project_mean_zero();
            let residual = f.sub(&op.apply(&f).unwrap()).unwrap();
            for r in &reports {
                let ratio = residual.lp_norm(r.p) / f.lp_norm(r.p);
                assert!(r.gap <= ratio + 1e-10, "p={} gap {} ratio {}", r.p, r.gap, ratio);
            }
        }
    }

    #[test]
    fn general_p_agrees_with_l2() {
        let op = uniform_op(0.1, 512);
        let exact = gap_l2_grid(&op).gap;
        let heur = gap_general_p(&op, 2.0, DescentBudget::default(), 0).unwrap();
        assert!((heur.gap - exact).abs() < 1e-4, "heuristic {} exact {}", heur.gap, exact);
        assert!(heur.method.contains("upper-bound"));
    }

    #[test]
    fn general_p_on_global_average() {
        let op = uniform_op(0.5, 128);
        for p in [1.5, 3.0] {
            let r = gap_general_p(&op, p, DescentBudget::default(), 1).unwrap();
            assert!((r.gap - 1.0).abs() < 1e-6, "p={p} gap {}", r.gap);
        }
    }

    #[test]
    fn general_p_sanity_band() {
        let op = uniform_op(0.1, 1024);
        let g1 = gap_l1(&op).gap;
        let g2 = gap_l2_grid(&op).gap;
        let r = gap_general_p(&op, 1.5, DescentBudget::default(), 2).unwrap();
        let lo = 0.8 * g1.min(g2);
        let hi = 1.2 * g1.max(g2);
        assert!(r.gap >= lo && r.gap <= hi, "g1.5={} outside [{lo}, {hi}]", r.gap);
    }

    #[test]
    fn refinement_stability_uniform() {
        for (p, tol) in [(Lp::One, 0.02), (Lp::Two, 0.02), (Lp::Inf, 0.02)] {
            let coarse = match p {
                Lp::One => gap_l1(&uniform_op(0.1, 2048)).gap,
                Lp::Two => gap_l2_grid(&uniform_op(0.1, 2048)).gap,
                _ => gap_linf(&uniform_op(0.1, 2048)).gap,
            };
            let fine = match p {
                Lp::One => gap_l1(&uniform_op(0.1, 4096)).gap,
                Lp::Two => gap_l2_grid(&uniform_op(0.1, 4096)).gap,
                _ => gap_linf(&uniform_op(0.1, 4096)).gap,
            };
            let rel = (coarse - fine).abs() / fine;
            assert!(rel < tol, "p={p}: {coarse} vs {fine} rel {rel}");
        }
    }

    #[test]
    fn gap_l1_ratio_stable_under_refinement() {
        let coarse = gap_l1(&uniform_op(0.1, 2048));
        let fine = gap_l1(&uniform_op(0.1, 4096));
        assert!(coarse.gap > 0.0 && fine.gap > 0.0);
        let rc = coarse.gap_over_t2();
        let rf = fine.gap_over_t2();
        assert!(((rc - rf) / rf).abs() < 0.01, "{rc} vs {rf}");
    }

    #[test]
    fn gaussian_l2_taylor_constant() {
        let law = LawSpec::standard_gaussian();
        let grid = TorusGrid::new(4096).unwrap();
        for t in [0.02, 0.01] {
            let op = GridOperator::new(&law, t, grid).unwrap();
            let r = gap_l2_grid(&op);
            let expected = 2.0 * std::f64::consts::PI.powi(2); // ≈ 19.739
            assert!((r.gap_over_t2() - expected).abs() / expected < 0.01, "t={t}");
        }
    }

    #[test]
    fn sweep_uniform_constant_positive() {
        let grid = TorusGrid::new(512).unwrap();
        let t_list = [0.05, 0.1, 0.2, 0.4];
        let p_list = [Lp::One, Lp::Two, Lp::Inf];
        let sweep =
            sweep_fit_constant(&LawSpec::uniform_symmetric(), &p_list, &t_list, grid, 0).unwrap();
        assert!(sweep.c_est > 0.0);
        assert_eq!(sweep.points.len(), 12);
        assert!(sweep.resonant_witness.is_none());
        // degenerate law flags c_est = 0
        let degenerate = LawSpec::Atoms { atoms: vec![Atom { position: 0.0, mass: 1.0 }] };
        let flagged = sweep_fit_constant(&degenerate, &p_list, &t_list, grid, 0).unwrap();
        assert_eq!(flagged.c_est, 0.0);
        assert!(flagged.resonant_witness.is_some());
    }

    #[test]
    fn telescoping_bound_holds() {
        use rand::{Rng, SeedableRng};
        let op = uniform_op(0.1, 256);
        let grid = op.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let f = GridFunction::new(grid, (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap()
                .project_mean_zero();
            for m in [1usize, 2, 16, 64] {
                let am = op.apply_power(&f, m).unwrap();
                for p in [Lp::One, Lp::Two, Lp::Inf] {
                    let lhs = f.sub(&op.apply(&f).unwrap()).unwrap().lp_norm(p);
                    let rhs = f.sub(&am).unwrap().lp_norm(p) / m as f64;
                    assert!(lhs >= rhs - 1e-12, "m={m} p={p}: {lhs} vs {rhs}");
                }
            }
        }
    }
}
