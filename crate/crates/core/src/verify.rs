//! Named, runnable checks for every quantitative claim the operator theory
//! makes at desk scale: the sharpness identity of the cosine eigenfunction,
//! the `c`-goodness of wrapped standardized sums, the `(1−c)` contraction of
//! averaging by a good law, telescoping bounds, the Sobolev-type inequality,
//! and the counterexample search for purely atomic laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::gap::{self, SweepReport};
use crate::law::{Atom, LawSpec};
use crate::operator::{GridOperator, MultiplierOperator};
use crate::torus::{GridFunction, Lp, TorusGrid, TrigPoly};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The claim does not apply to this input (e.g. goodness of a purely
    /// atomic law); counts as non-failing.
    NotApplicable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

/// Outcome of one named check, with enough metadata to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    pub measured: Vec<Measurement>,
    /// Smallest slack to the violated/satisfied threshold.
    pub margin: Option<f64>,
    pub witness: Option<String>,
    pub law: Option<String>,
    pub t: Option<f64>,
    pub p: Option<String>,
    pub grid_n: Option<usize>,
}

impl CheckResult {
    fn new(name: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            verdict: Verdict::Pass,
            measured: Vec::new(),
            margin: None,
            witness: None,
            law: None,
            t: None,
            p: None,
            grid_n: None,
        }
    }

    fn measure(&mut self, name: &str, value: f64) {
        self.measured.push(Measurement { name: name.into(), value });
    }

    /// Record a `value >= threshold − slack` requirement.
    fn require_at_least(&mut self, value: f64, threshold: f64, slack: f64, witness: &str) {
        let margin = value - (threshold - slack);
        self.margin = Some(self.margin.map_or(margin, |m| m.min(margin)));
        if margin < 0.0 && self.verdict == Verdict::Pass {
            self.verdict = Verdict::Fail;
            self.witness = Some(witness.to_string());
        }
    }

    /// Record a `value <= threshold + slack` requirement.
    fn require_at_most(&mut self, value: f64, threshold: f64, slack: f64, witness: &str) {
        self.require_at_least(threshold, value, slack, witness);
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Which realization of the operator a check runs on.
#[derive(Copy, Clone, Debug)]
pub enum BackendChoice {
    Grid(TorusGrid),
    Multiplier { cutoff: usize },
}

/// Sharpness identity: for `f = cos(2πx)` and `U_t` the uniform averaging
/// operator, `‖f − U_t f‖_p / ‖f‖_p = 1 − sin(2πt)/(2πt)` for every `p`
/// (the cosine is an eigenfunction).
pub fn sharpness_cos(t: f64, p: Lp, backend: BackendChoice, tol: f64) -> CheckResult {
    let mut check = CheckResult::new(format!("sharpness_cos_t{t}_p{p}"));
    check.law = Some("uniform(-1,1)".into());
    check.t = Some(t);
    check.p = Some(p.to_string());
    let expected = 1.0 - crate::law::sinc(TAU * t);
    let ratio = match backend {
        BackendChoice::Grid(grid) => {
            check.grid_n = Some(grid.len());
            let op = GridOperator::new(&LawSpec::uniform_symmetric(), t, grid)
                .expect("uniform law is valid");
            let f = GridFunction::from_fn(grid, |x| (TAU * x).cos());
            let residual = f.sub(&op.apply(&f).unwrap()).unwrap();
            residual.lp_norm(p) / f.lp_norm(p)
        }
        BackendChoice::Multiplier { cutoff } => {
            let op = MultiplierOperator::new(LawSpec::uniform_symmetric(), t, cutoff)
                .expect("uniform law is valid");
            let f = TrigPoly::cosine(1, 1.0);
            let residual = f.sub(&op.apply_trig(&f).unwrap());
            residual.lp_norm(p) / f.lp_norm(p)
        }
    };
    check.measure("ratio", ratio);
    check.measure("expected", expected);
    check.measure("abs_error", (ratio - expected).abs());
    check.require_at_most((ratio - expected).abs(), tol, 0.0, "ratio deviates from 1 - sinc(2pi t)");
    check
}

/// Options for the wrapped-sum goodness check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma1Options {
    /// Wrap scale `C` applied to the standardized sum.
    pub c_scale: f64,
    pub n_values: Vec<usize>,
    /// Density cells per unit length.
    pub resolution: usize,
    /// The goodness constant must exceed this floor...
    pub goodness_floor: f64,
    /// ...for every `n_values[i]` with `i >= stabilization_index`.
    pub stabilization_index: usize,
}

impl Default for Lemma1Options {
    fn default() -> Self {
        Lemma1Options {
            c_scale: 3.0,
            n_values: vec![8, 16, 32, 64],
            resolution: 4096,
            goodness_floor: 0.2,
            stabilization_index: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma1Row {
    pub n: usize,
    /// Minimum of the wrapped density of `(C·(Y₁+…+Yₙ)/√n) mod 1`.
    pub goodness: f64,
    /// Sup distance of the standardized-sum density to the centered Gaussian
    /// with the law's standard deviation.
    pub lclt_sup_dist: f64,
    pub renorm_drift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub rows: Vec<Lemma1Row>,
    pub check: CheckResult,
}

/// Goodness of the wrapped standardized sums: for each `n`, build the sum
/// density, scale by `C`, wrap mod 1, and report the minimum density and the
/// sup distance to the Gaussian limit. Purely atomic laws get the
/// not-applicable verdict.
pub fn lemma1_check(law: &LawSpec, opts: &Lemma1Options, grid: TorusGrid) -> Result<Lemma1Report> {
    let mut check = CheckResult::new("lemma1_wrapped_sum_goodness");
    check.law = Some(law.describe());
    check.grid_n = Some(grid.len());

    if law.decency_order().is_none() {
        check.verdict = Verdict::NotApplicable;
        check.witness = Some("law is purely atomic: i.i.d. sums never gain a density".into());
        return Ok(Lemma1Report { rows: Vec::new(), check });
    }
    let sigma = law.variance().sqrt();
    let rows: Vec<Result<Lemma1Row>> = opts
        .n_values
        .par_iter()
        .map(|&n| {
            let d = law.sum_density_iid(n, opts.resolution)?;
            let wrapped = d.wrap(opts.c_scale, grid)?;
            Ok(Lemma1Row {
                n,
                goodness: wrapped.goodness_constant(),
                lclt_sup_dist: d.sup_distance_to_gaussian(sigma),
                renorm_drift: d.renorm_drift(),
            })
        })
        .collect();
    let rows: Vec<Lemma1Row> = rows.into_iter().collect::<Result<_>>()?;

    for (i, row) in rows.iter().enumerate() {
        check.measure(&format!("goodness_n{}", row.n), row.goodness);
        check.measure(&format!("lclt_sup_dist_n{}", row.n), row.lclt_sup_dist);
        if i >= opts.stabilization_index {
            check.require_at_least(
                row.goodness,
                opts.goodness_floor,
                0.0,
                &format!("goodness at n={} below floor {}", row.n, opts.goodness_floor),
            );
        }
    }
    Ok(Lemma1Report { rows, check })
}

/// Contraction by a c-good averaging kernel: with `c = n·min_j w_j`, the
/// operator norm of `B` on mean-zero functions is at most `1 − c` — exactly
/// via the circulant formulas for `p ∈ {1,2,∞}`, and sampled for other `p`.
pub fn lemma2_check(
    weights: &[f64],
    sample_ps: &[Lp],
    samples: usize,
    seed: u64,
    slack: f64,
) -> Result<CheckResult> {
    use rand::{Rng, SeedableRng};
    let n = weights.len();
    let grid = TorusGrid::new(n)?;
    let op = GridOperator::from_weights(grid, 0.5, weights.to_vec())?;
    let c = n as f64 * weights.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = 1.0 - c;

    let mut check = CheckResult::new("lemma2_good_kernel_contraction");
    check.grid_n = Some(n);
    check.measure("goodness_c", c);
    check.measure("bound_1_minus_c", bound);

    // Exact restricted norms.
    let (n1, _) = gap::restricted_norm_l1(weights);
    let (n2, _) = gap::restricted_norm_l2(op.symbol_table());
    let (ninf, _) = gap::restricted_norm_linf(weights);
    for (p, norm) in [(Lp::One, n1), (Lp::Two, n2), (Lp::Inf, ninf)] {
        check.measure(&format!("norm_p{p}"), norm);
        check.require_at_most(norm, bound, slack, &format!("exact p={p} norm exceeds 1-c"));
    }

    // Random mean-zero samples must stay below the bound for other p, and
    // below the exact norm where one exists.
    if samples > 0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let exact: Vec<(Lp, f64)> = vec![(Lp::One, n1), (Lp::Two, n2), (Lp::Inf, ninf)];
        let mut worst_sampled: Vec<(Lp, f64)> = sample_ps
            .iter()
            .map(|&p| (p, 0.0))
            .chain(exact.iter().map(|&(p, _)| (p, 0.0)))
            .collect();
        for _ in 0..samples {
            let f = GridFunction::new(grid, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?
                .project_mean_zero();
            let bf = op.apply(&f)?;
            for (p, worst) in worst_sampled.iter_mut() {
                let ratio = bf.lp_norm(*p) / f.lp_norm(*p);
                *worst = worst.max(ratio);
            }
        }
        for (p, worst) in &worst_sampled {
            check.measure(&format!("sampled_max_p{p}"), *worst);
            check.require_at_most(*worst, bound, slack, &format!("sampled p={p} ratio exceeds 1-c"));
        }
        // Sampling may never contradict the exact norms.
        for (p, norm) in &exact {
            let sampled = worst_sampled.iter().find(|(q, _)| q == p).unwrap().1;
            check.require_at_most(sampled, *norm, slack, &format!("sampled p={p} exceeds exact norm"));
        }
    }
    Ok(check)
}

/// Contraction plus the telescoping bound for one mean-zero function:
/// `‖Af‖_p ≤ ‖f‖_p` and `‖f − Af‖_p ≥ (1/m)·‖f − A^m f‖_p`.
pub fn telescoping_contraction_check(
    op: &GridOperator,
    f: &GridFunction,
    m: usize,
    p_list: &[Lp],
    slack: f64,
) -> Result<CheckResult> {
    let mut check = CheckResult::new(format!("telescoping_contraction_m{m}"));
    check.law = Some(op.law_desc().to_string());
    check.t = Some(op.t());
    check.grid_n = Some(op.grid().len());
    let f = f.project_mean_zero();
    let af = op.apply(&f)?;
    let amf = op.apply_power(&f, m)?;
    let residual = f.sub(&af)?;
    let residual_m = f.sub(&amf)?;
    for &p in p_list {
        let nf = f.lp_norm(p);
        let naf = af.lp_norm(p);
        check.require_at_most(naf, nf, slack, &format!("contraction fails at p={p}"));
        let lhs = residual.lp_norm(p);
        let rhs = residual_m.lp_norm(p) / m as f64;
        check.require_at_least(lhs, rhs, slack, &format!("telescoping fails at p={p}, m={m}"));
    }
    Ok(check)
}

/// The Sobolev-type inequality for a band-limited mean-zero `f`:
/// `∫ |f'(x) − (f(x⊕t) − f(x⊖t))/2t| dx ≥ c_est·t²·∫|f|`, plus the chain
/// `LHS ≥ 2‖f − U_t f‖₁` (the centered difference is exactly `(U_t f)'`,
/// and a mean-zero `g` has `‖g‖₁ ≤ ‖g‖_∞ ≤ ½‖g'‖₁`).
pub fn sobolev_corollary_check(f: &TrigPoly, t: f64, c_est: f64, chain_slack: f64) -> CheckResult {
    let mut check = CheckResult::new(format!("sobolev_corollary_t{t}"));
    check.t = Some(t);
    check.p = Some("1".into());

    let centered = f.shift(t).sub(&f.shift(-t)).scale(1.0 / (2.0 * t));
    let lhs = f.derivative().sub(&centered).lp_norm(Lp::One);
    let f_l1 = f.lp_norm(Lp::One);
    let rhs = c_est * t * t * f_l1;

    let op = MultiplierOperator::new(LawSpec::uniform_symmetric(), t, f.max_freq().max(1))
        .expect("uniform law is valid");
    let g = f.sub(&op.apply_trig(f).expect("frequencies within cutoff"));
    let chain_rhs = 2.0 * g.lp_norm(Lp::One);

    check.measure("lhs", lhs);
    check.measure("c_rhs", rhs);
    check.measure("chain_rhs", chain_rhs);
    check.measure("c_est", c_est);
    check.require_at_least(lhs, rhs, chain_slack, "LHS below c_est*t^2*|f|_1");
    check.require_at_least(lhs, chain_rhs, chain_slack, "LHS below 2|f - U_t f|_1");
    check
}

/// Search record for the atomic-law near-invariant function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub atoms: Vec<Atom>,
    pub t: f64,
    pub eps: f64,
    /// Mass of dropped atoms when the law was truncated (`1 − Σ p_i`).
    pub tail_mass: f64,
    /// `n₀ = ⌈8π/ε⌉`; the pigeonhole argument guarantees a hit below `n₀^N`.
    pub n0: u64,
    pub pigeonhole_bound: f64,
    pub n_max: usize,
    /// First `n` whose bound `π·Σ p_i|sin(πnt·x_i)| + 2·tail ≤ ε`.
    pub found_n: Option<usize>,
    pub bound_at_found: Option<f64>,
    /// `‖f_n − A_t f_n‖₁` on the exact trigonometric backend (plus `2·tail`),
    /// with `f_n = (π/2)·sin(2πnx)` of unit L1 norm.
    pub residual_l1: Option<f64>,
    /// The same residual integrated from the explicit shifted-sine sum.
    pub residual_l1_direct: Option<f64>,
    pub best_n: usize,
    pub best_bound: f64,
}

impl CounterexampleReport {
    pub fn succeeded(&self) -> bool {
        matches!((self.found_n, self.residual_l1), (Some(_), Some(r)) if r <= self.eps)
    }
}

/// Scan `n = 1..n_max` for the first `n` making the atomic bound
/// `π·Σ p_i|sin(πnt·x_i)| + 2·tail` fall below `ε`, then verify the residual
/// of `f_n = (π/2)sin(2πnx)` on the exact trigonometric backend two ways.
/// Atom masses may sum to less than 1; the deficit is treated as truncation
/// tail and bounded by `2·tail`.
pub fn counterexample_search(
    atoms: &[Atom],
    t: f64,
    eps: f64,
    n_max: usize,
) -> Result<CounterexampleReport> {
    if atoms.is_empty() {
        return Err(Error::BadParameter("counterexample needs at least one atom".into()));
    }
    if atoms.iter().any(|a| !(a.mass >= 0.0) || !a.position.is_finite()) {
        return Err(Error::BadParameter("atom masses must be nonnegative and finite".into()));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::BadParameter(format!("t must lie in (0, 1], got {t}")));
    }
    if !(eps > 0.0) {
        return Err(Error::BadParameter(format!("eps must be positive, got {eps}")));
    }
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    if total > 1.0 + crate::law::MASS_TOL {
        return Err(Error::BadParameter(format!("atom masses sum to {total} > 1")));
    }
    let tail = (1.0 - total).max(0.0);

    let n0 = (8.0 * PI / eps).ceil() as u64;
    let pigeonhole_bound = (n0 as f64).powi(atoms.len() as i32);

    let bound_at = |n: usize| -> f64 {
        let s: f64 =
            atoms.iter().map(|a| a.mass * (PI * n as f64 * t * a.position).sin().abs()).sum();
        PI * s + 2.0 * tail
    };

    let mut found_n = None;
    let mut best_n = 1;
    let mut best_bound = f64::INFINITY;
    for n in 1..=n_max {
        let b = bound_at(n);
        if b < best_bound {
            best_bound = b;
            best_n = n;
        }
        if b <= eps {
            found_n = Some(n);
            break;
        }
    }

    let mut report = CounterexampleReport {
        atoms: atoms.to_vec(),
        t,
        eps,
        tail_mass: tail,
        n0,
        pigeonhole_bound,
        n_max,
        found_n,
        bound_at_found: found_n.map(bound_at),
        residual_l1: None,
        residual_l1_direct: None,
        best_n,
        best_bound,
    };

    let n = found_n.unwrap_or(best_n);

    // Residual of the truncated operator on the exact trig backend:
    // Σ p_i (f_n − f_n(· + t·x_i)) has coefficients (Σ p_i − λ_n)·c_k.
    let f_n = TrigPoly::sine(n, PI / 2.0);
    let lam: num_complex::Complex64 = atoms
        .iter()
        .map(|a| a.mass * num_complex::Complex64::from_polar(1.0, TAU * n as f64 * t * a.position))
        .sum();
    let mut residual_poly = TrigPoly::zero(n);
    let factor = num_complex::Complex64::new(total, 0.0) - lam;
    residual_poly.set_coefficient(n as i64, factor * f_n.coefficient(n as i64));
    residual_poly.set_coefficient(-(n as i64), factor.conj() * f_n.coefficient(-(n as i64)));
    let residual = residual_poly.lp_norm(Lp::One);

    // Independent route: quadrature of the explicit shifted-sine expression
    // on the same oversampled grid.
    let (_, h) = residual_poly.values_oversampled();
    let m = (1.0 / h).round() as usize;
    let mut acc = 0.0;
    for j in 0..m {
        let x = j as f64 * h;
        let base = (TAU * n as f64 * x).sin();
        let v: f64 = atoms
            .iter()
            .map(|a| a.mass * (base - (TAU * n as f64 * (x + t * a.position)).sin()))
            .sum();
        acc += (PI / 2.0 * v).abs();
    }
    let residual_direct = acc * h;

    report.residual_l1 = Some(residual + 2.0 * tail);
    report.residual_l1_direct = Some(residual_direct + 2.0 * tail);
    Ok(report)
}

/// Everything `run_suite` needs; mirrors the CLI run configuration.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub law: LawSpec,
    pub grid: TorusGrid,
    pub t_list: Vec<f64>,
    pub p_list: Vec<Lp>,
    pub seed: u64,
    pub sharpness_tol: f64,
    pub contraction_slack: f64,
    pub chain_slack: f64,
    pub lemma2_slack: f64,
    pub lemma1: Lemma1Options,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub law: String,
    pub grid_n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub meta: SuiteMeta,
    pub checks: Vec<CheckResult>,
    pub sweep: Option<SweepReport>,
    pub all_passed: bool,
}

impl SuiteReport {
    /// One CSV row per check.
    pub fn to_csv(&self, header_comment: &str) -> String {
        let mut out = String::new();
        if !header_comment.is_empty() {
            out.push_str(header_comment);
            if !header_comment.ends_with('\n') {
                out.push('\n');
            }
        }
        out.push_str("check,verdict,margin,law,t,p,grid_n,witness\n");
        for c in &self.checks {
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::NotApplicable => "not_applicable",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                gap::csv_field(&c.name),
                verdict,
                c.margin.map(gap::fmt17).unwrap_or_default(),
                gap::csv_field(c.law.as_deref().unwrap_or("")),
                c.t.map(gap::fmt17).unwrap_or_default(),
                c.p.clone().unwrap_or_default(),
                c.grid_n.map(|n| n.to_string()).unwrap_or_default(),
                gap::csv_field(c.witness.as_deref().unwrap_or("")),
            ));
        }
        out
    }

    pub fn failed_checks(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }
}

const SHARPNESS_T: [f64; 4] = [0.05, 0.1, 0.25, 0.5];

/// Run the full verification suite. Deterministic for a fixed config and
/// seed regardless of worker threads: parallel stages merge in lattice
/// order and all randomness comes from per-stage seeded generators.
pub fn run_suite(opts: &SuiteOptions, tool_version: &str, config_hash: &str) -> Result<SuiteReport> {
    let mut checks: Vec<CheckResult> = Vec::new();
    let law = &opts.law;
    law.validate()?;
    let grid = opts.grid;

    // 1. Sharpness identity on the grid backend, every configured p.
    for &t in &SHARPNESS_T {
        for &p in &opts.p_list {
            checks.push(sharpness_cos(t, p, BackendChoice::Grid(grid), opts.sharpness_tol));
        }
    }
    // Cross-backend and p-independence at one t.
    {
        let t = 0.1;
        let mut check = CheckResult::new("sharpness_p_independent_t0.1");
        check.t = Some(t);
        check.law = Some("uniform(-1,1)".into());
        check.grid_n = Some(grid.len());
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), t, grid)?;
        let f = GridFunction::from_fn(grid, |x| (TAU * x).cos());
        let residual = f.sub(&op.apply(&f)?)?;
        let ratios: Vec<f64> = [Lp::One, Lp::Two, Lp::Inf]
            .iter()
            .map(|&p| residual.lp_norm(p) / f.lp_norm(p))
            .collect();
        let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
            - ratios.iter().cloned().fold(f64::MAX, f64::min);
        check.measure("ratio_spread", spread);
        check.require_at_most(spread, 1e-8, 0.0, "eigenfunction ratio depends on p");
        let mult = sharpness_cos(t, Lp::Two, BackendChoice::Multiplier { cutoff: 8 }, 1e-12);
        let grid_ratio = ratios[1];
        let mult_ratio = mult.measured[0].value;
        check.measure("backend_diff", (grid_ratio - mult_ratio).abs());
        check.require_at_most(
            (grid_ratio - mult_ratio).abs(),
            opts.sharpness_tol,
            0.0,
            "grid and multiplier backends disagree",
        );
        checks.push(check);
    }

    // 2. Gap sweep and the fitted constant.
    let sweep = gap::sweep_fit_constant(law, &opts.p_list, &opts.t_list, grid, opts.seed)?;
    {
        let mut check = CheckResult::new("theorem2_cest_positive");
        check.law = Some(law.describe());
        check.grid_n = Some(grid.len());
        check.measure("c_est", sweep.c_est);
        for pp in &sweep.per_p {
            check.measure(&format!("c_est_p{}", pp.p), pp.c_est);
        }
        if law.decency_order().is_none() {
            check.verdict = Verdict::NotApplicable;
            check.witness = Some(format!(
                "law not decent; c_est = {} with witness {:?}",
                sweep.c_est, sweep.resonant_witness
            ));
        } else {
            check.require_at_least(sweep.c_est, f64::MIN_POSITIVE, 0.0, "c_est is zero");
            let max_p = sweep.per_p.iter().map(|p| p.c_est).fold(f64::MIN, f64::max);
            let min_p = sweep.per_p.iter().map(|p| p.c_est).fold(f64::MAX, f64::min);
            check.measure("per_p_ratio", max_p / min_p);
            check.require_at_most(max_p / min_p, 10.0, 0.0, "per-p constants spread beyond 10x");
        }
        checks.push(check);
    }

    // 3. Goodness of wrapped standardized sums.
    let lemma1 = lemma1_check(law, &opts.lemma1, grid)?;
    checks.push(lemma1.check.clone());

    // 4a. Contraction of the wrapped-sum kernel (ties the two lemmas).
    if let Some(&n_last) = opts.lemma1.n_values.last() {
        if law.decency_order().is_some() {
            let d = law.sum_density_iid(n_last, opts.lemma1.resolution)?;
            let wrapped = d.wrap(opts.lemma1.c_scale, grid)?;
            let mut check =
                lemma2_check(&wrapped.to_weights(), &[], 0, opts.seed ^ 0xa5a5, opts.lemma2_slack)?;
            check.name = "lemma2_wrapped_sum_kernel".into();
            check.law = Some(law.describe());
            checks.push(check);
        }
    }
    // 4b. Contraction for random strictly-positive kernels at n = 64.
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5a5a);
        let mut worst_margin = f64::INFINITY;
        let mut merged = CheckResult::new("lemma2_random_kernels");
        merged.grid_n = Some(64);
        for i in 0..20u64 {
            let raw: Vec<f64> = (0..64).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let sub = lemma2_check(
                &w,
                &[Lp::Other(1.5), Lp::Other(3.0)],
                100,
                opts.seed.wrapping_add(i),
                opts.lemma2_slack,
            )?;
            if let Some(m) = sub.margin {
                worst_margin = worst_margin.min(m);
            }
            if !sub.passed() {
                merged.verdict = Verdict::Fail;
                merged.witness = sub.witness.clone();
            }
        }
        merged.margin = Some(worst_margin);
        merged.measure("kernels", 20.0);
        checks.push(merged);
    }

    // 5. Telescoping and contraction on random mean-zero functions.
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7e1e);
        let t_probe: Vec<f64> = pick_representatives(&opts.t_list, 3);
        for &t in &t_probe {
            let op = GridOperator::new(law, t, grid)?;
            let mut merged = CheckResult::new(format!("telescoping_contraction_t{t}"));
            merged.law = Some(law.describe());
            merged.t = Some(t);
            merged.grid_n = Some(grid.len());
            let mut worst = f64::INFINITY;
            for _ in 0..25 {
                let f = GridFunction::new(
                    grid,
                    (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )?;
                for m in [1usize, 2, 16, 64] {
                    let sub = telescoping_contraction_check(
                        &op,
                        &f,
                        m,
                        &[Lp::One, Lp::Two, Lp::Inf],
                        opts.contraction_slack,
                    )?;
                    if let Some(mg) = sub.margin {
                        worst = worst.min(mg);
                    }
                    if !sub.passed() {
                        merged.verdict = Verdict::Fail;
                        merged.witness = sub.witness.clone();
                    }
                }
            }
            merged.margin = Some(worst);
            checks.push(merged);
        }
    }

    // 6. Sobolev-type inequality for low sines, with the sweep's constant.
    for k in 1..=4usize {
        for &t in &SHARPNESS_T {
            let f = TrigPoly::sine(k, 1.0);
            let mut check = sobolev_corollary_check(&f, t, sweep.c_est, opts.chain_slack);
            check.name = format!("sobolev_corollary_k{k}_t{t}");
            checks.push(check);
        }
    }

    // 7. Atomic counterexamples (fixed documented cases).
    for (name, atoms, t, eps, n_max) in counterexample_cases() {
        let mut check = CheckResult::new(name);
        check.t = Some(t);
        check.law = Some(LawSpec::Atoms { atoms: atoms.clone() }.describe());
        match counterexample_search(&atoms, t, eps, n_max) {
            Ok(report) => {
                if let Some(n) = report.found_n {
                    check.measure("found_n", n as f64);
                }
                if let Some(r) = report.residual_l1 {
                    check.measure("residual_l1", r);
                    check.require_at_most(r, eps, 0.0, "residual exceeds eps");
                }
                if let (Some(a), Some(b)) = (report.residual_l1, report.residual_l1_direct) {
                    check.measure("route_disagreement", (a - b).abs());
                    check.require_at_most((a - b).abs(), 1e-9, 0.0, "residual routes disagree");
                }
                check.measure("pigeonhole_bound", report.pigeonhole_bound);
                if let Some(n) = report.found_n {
                    check.require_at_most(
                        n as f64,
                        report.pigeonhole_bound,
                        0.0,
                        "found n exceeds the pigeonhole bound",
                    );
                } else {
                    check.verdict = Verdict::Fail;
                    check.witness = Some(format!(
                        "no n <= {n_max}; best n={} bound={}",
                        report.best_n, report.best_bound
                    ));
                }
            }
            Err(e) => {
                check.verdict = Verdict::Fail;
                check.witness = Some(e.to_string());
            }
        }
        checks.push(check);
    }

    let all_passed = checks.iter().all(|c| c.passed());
    Ok(SuiteReport {
        meta: SuiteMeta {
            tool_version: tool_version.to_string(),
            config_hash: config_hash.to_string(),
            law: law.describe(),
            grid_n: grid.len(),
            seed: opts.seed,
        },
        checks,
        sweep: Some(sweep),
        all_passed,
    })
}

/// The three documented atomic cases: a rational atom hit exactly, an
/// irrational atom approximated along continued-fraction denominators, and
/// two rational atoms aligned simultaneously.
pub fn counterexample_cases() -> Vec<(&'static str, Vec<Atom>, f64, f64, usize)> {
    vec![
        ("counterexample_rational_atom", vec![Atom { position: 0.5, mass: 1.0 }], 0.5, 1e-9, 100),
        (
            "counterexample_irrational_atom",
            vec![Atom { position: std::f64::consts::FRAC_1_SQRT_2, mass: 1.0 }],
            1.0,
            0.01,
            10_000,
        ),
        (
            "counterexample_two_atoms",
            vec![Atom { position: 0.3, mass: 0.5 }, Atom { position: 0.7, mass: 0.5 }],
            1.0,
            1e-6,
            1000,
        ),
    ]
}

fn pick_representatives(values: &[f64], count: usize) -> Vec<f64> {
    if values.len() <= count {
        return values.to_vec();
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let idx = i * (values.len() - 1) / (count - 1).max(1);
        out.push(values[idx]);
    }
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharpness_trivial_and_small_t() {
        let grid = TorusGrid::new(4096).unwrap();
        // t = ½ makes sinc vanish: ratio 1 for every p.
        for p in [Lp::One, Lp::Two, Lp::Inf] {
            let c = sharpness_cos(0.5, p, BackendChoice::Grid(grid), 1e-6);
            assert!(c.passed(), "{c:?}");
            assert!((c.measured[0].value - 1.0).abs() < 1e-9);
        }
        let c = sharpness_cos(0.1, Lp::One, BackendChoice::Grid(grid), 1e-6);
        assert!(c.passed());
        assert!((c.measured[0].value - 0.06451071621136529).abs() < 1e-6);
        // multiplier backend is exact
        let m = sharpness_cos(0.1, Lp::Inf, BackendChoice::Multiplier { cutoff: 4 }, 1e-9);
        assert!(m.passed(), "{m:?}");
    }

    #[test]
    fn lemma1_uniform_c3() {
        let opts = Lemma1Options {
            c_scale: 3.0,
            n_values: vec![16, 32],
            resolution: 1024,
            goodness_floor: 0.99,
            stabilization_index: 0,
        };
        let grid = TorusGrid::new(1024).unwrap();
        let report = lemma1_check(&LawSpec::uniform_symmetric(), &opts, grid).unwrap();
        assert!(report.check.passed(), "{:?}", report.check);
        for row in &report.rows {
            assert!(row.goodness >= 0.99, "n={} goodness={}", row.n, row.goodness);
        }
    }

    #[test]
    fn lemma1_atoms_not_applicable() {
        let law = LawSpec::Atoms {
            atoms: vec![Atom { position: 0.0, mass: 0.5 }, Atom { position: 1.0, mass: 0.5 }],
        };
        let grid = TorusGrid::new(256).unwrap();
        let report = lemma1_check(&law, &Lemma1Options::default(), grid).unwrap();
        assert_eq!(report.check.verdict, Verdict::NotApplicable);
        assert!(report.rows.is_empty());
    }

    #[test]
    fn lemma1_mixture_step_two() {
        // ½δ₀ + ½U(−1,1): the sum still wraps to a strictly positive density.
        let opts = Lemma1Options {
            c_scale: 3.0,
            n_values: vec![64],
            resolution: 1024,
            goodness_floor: 0.9,
            stabilization_index: 0,
        };
        let grid = TorusGrid::new(1024).unwrap();
        let report = lemma1_check(&LawSpec::dirac_uniform_mix(), &opts, grid).unwrap();
        assert!(report.check.passed(), "{:?}", report.check);
        assert!(report.rows[0].goodness > 0.9);
    }

    #[test]
    fn lemma2_uniform_kernel_contracts_everything() {
        let n = 64;
        let w = vec![1.0 / n as f64; n];
        let check = lemma2_check(&w, &[Lp::Other(1.5)], 50, 0, 1e-9).unwrap();
        assert!(check.passed(), "{check:?}");
        // c = 1, so the exact norms must all be ~0.
        for m in &check.measured {
            if m.name.starts_with("norm_p") {
                assert!(m.value < 1e-9, "{}: {}", m.name, m.value);
            }
        }
    }

    #[test]
    fn lemma2_three_quarters_mix() {
        // w = ¾·uniform + ¼·δ₀ has c = ¾ and B = ¾·mean + ¼·I, so the
        // mean-zero norm is exactly ¼ in every p.
        let n = 64;
        let mut w = vec![0.75 / n as f64; n];
        w[0] += 0.25;
        let check = lemma2_check(&w, &[Lp::Other(1.5), Lp::Other(3.0)], 200, 1, 1e-9).unwrap();
        assert!(check.passed(), "{check:?}");
        for m in &check.measured {
            if m.name.starts_with("norm_p") {
                assert!((m.value - 0.25).abs() < 1e-9, "{}: {}", m.name, m.value);
            }
        }
    }

    #[test]
    fn telescoping_equality_at_m1() {
        let grid = TorusGrid::new(256).unwrap();
        let op = GridOperator::new(&LawSpec::uniform_symmetric(), 0.2, grid).unwrap();
        let f = GridFunction::from_fn(grid, |x| (TAU * 3.0 * x).sin());
        let check =
            telescoping_contraction_check(&op, &f, 1, &[Lp::One, Lp::Two, Lp::Inf], 1e-12).unwrap();
        assert!(check.passed());
    }

    #[test]
    fn sobolev_sine_half_t() {
        // f = sin(2πx), t = ½: the centered difference vanishes and the LHS
        // is ‖f'‖₁ = 4.
        let f = TrigPoly::sine(1, 1.0);
        let check = sobolev_corollary_check(&f, 0.5, 4.0, 1e-8);
        assert!(check.passed(), "{check:?}");
        let lhs = check.measured.iter().find(|m| m.name == "lhs").unwrap().value;
        assert!((lhs - 4.0).abs() < 1e-5, "lhs = {lhs}");
        // zero function: both sides vanish
        let z = TrigPoly::zero(2);
        let zc = sobolev_corollary_check(&z, 0.25, 4.0, 1e-8);
        assert!(zc.passed());
        let zl = zc.measured.iter().find(|m| m.name == "lhs").unwrap().value;
        assert!(zl.abs() < 1e-12);
    }

    #[test]
    fn sobolev_small_t_taylor() {
        // LHS/t² → (2π)³/6·‖cos‖₁ as t → 0 for f = sin(2πx).
        let f = TrigPoly::sine(1, 1.0);
        let limit = TAU.powi(3) / 6.0 * (2.0 / PI);
        for t in [0.05, 0.02] {
            let check = sobolev_corollary_check(&f, t, 1.0, 1e-8);
            let lhs = check.measured.iter().find(|m| m.name == "lhs").unwrap().value;
            let ratio = lhs / (t * t);
            assert!((ratio - limit).abs() / limit < 0.05, "t={t}: {ratio} vs {limit}");
        }
    }

    #[test]
    fn counterexample_rational_atom() {
        let atoms = vec![Atom { position: 0.5, mass: 1.0 }];
        let report = counterexample_search(&atoms, 0.5, 1e-9, 100).unwrap();
        assert_eq!(report.found_n, Some(4));
        assert!(report.residual_l1.unwrap() <= 1e-9);
        assert!(report.residual_l1.unwrap() < 1e-12); // exact wrap
        assert!((report.residual_l1.unwrap() - report.residual_l1_direct.unwrap()).abs() < 1e-9);
        assert!(4.0 <= report.pigeonhole_bound);
    }

    #[test]
    fn counterexample_irrational_atom() {
        let atoms = vec![Atom { position: std::f64::consts::FRAC_1_SQRT_2, mass: 1.0 }];
        let report = counterexample_search(&atoms, 1.0, 0.01, 10_000).unwrap();
        let n = report.found_n.expect("some n <= 10^4 must qualify");
        assert!(n <= 10_000);
        // the first denominator with |sin(πn/√2)| small enough is 577
        assert_eq!(n, 577);
        assert!(report.residual_l1.unwrap() <= 0.01);
        assert!((report.found_n.unwrap() as f64) <= report.pigeonhole_bound);
    }

    #[test]
    fn counterexample_two_rational_atoms() {
        let atoms = vec![Atom { position: 0.3, mass: 0.5 }, Atom { position: 0.7, mass: 0.5 }];
        let report = counterexample_search(&atoms, 1.0, 1e-6, 1000).unwrap();
        assert_eq!(report.found_n, Some(10));
        assert!(report.residual_l1.unwrap() <= 1e-6);
        assert!((report.residual_l1.unwrap() - report.residual_l1_direct.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn counterexample_truncated_tail() {
        // Dropping a 1e-3 atom keeps the bound honest through 2·tail.
        let atoms = vec![Atom { position: 0.5, mass: 0.999 }];
        let report = counterexample_search(&atoms, 0.5, 0.01, 100).unwrap();
        assert!((report.tail_mass - 1e-3).abs() < 1e-12);
        let n = report.found_n.unwrap();
        assert_eq!(n, 4);
        let r = report.residual_l1.unwrap();
        assert!(r >= 2.0 * report.tail_mass - 1e-12 && r <= 0.01);
    }
}
