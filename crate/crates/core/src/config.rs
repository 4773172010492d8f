//! Run configuration: one flat file per run, validated exhaustively.
//!
//! The on-disk format is TOML (key-value with nested tables/lists). Every
//! violation is reported with its field path; validation never stops at the
//! first error. Defaults: `n = 4096`, `p_list = ["1", "2", "inf"]`, twelve
//! geometric `t` values from 0.02 to 0.5, `seed = 0`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::law::LawSpec;
use crate::torus::Lp;
use crate::verify::Lemma1Options;

pub const DEFAULT_GRID_N: usize = 4096;
pub const DEFAULT_CUTOFF: usize = 512;
pub const DEFAULT_T_FROM: f64 = 0.02;
pub const DEFAULT_T_TO: f64 = 0.5;
pub const DEFAULT_T_POINTS: usize = 12;

/// Geometric progression of `points` values from `from` to `to` inclusive.
pub fn geometric_t_list(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![from];
    }
    let ratio = (to / from).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| from * ratio.powi(i as i32)).collect()
}

/// Tolerance overrides; defaults match the check definitions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Sharpness identity comparison.
    pub sharpness: f64,
    /// Slack for contraction/telescoping inequalities.
    pub contraction_slack: f64,
    /// Slack for the Sobolev chain inequalities.
    pub chain_slack: f64,
    /// Slack over `1 − c` in the good-kernel contraction.
    pub lemma2_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sharpness: 1e-6,
            contraction_slack: 1e-12,
            chain_slack: 1e-8,
            lemma2_slack: 1e-9,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub law: LawSpec,
    pub grid_n: usize,
    pub t_list: Vec<f64>,
    pub p_list: Vec<Lp>,
    pub cutoff: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
    pub lemma1: Lemma1Options,
}

impl RunConfig {
    /// Defaults with the symmetric uniform law.
    pub fn default_uniform() -> Self {
        RunConfig {
            law: LawSpec::uniform_symmetric(),
            grid_n: DEFAULT_GRID_N,
            t_list: geometric_t_list(DEFAULT_T_FROM, DEFAULT_T_TO, DEFAULT_T_POINTS),
            p_list: vec![Lp::One, Lp::Two, Lp::Inf],
            cutoff: DEFAULT_CUTOFF,
            seed: 0,
            out_dir: PathBuf::from("out"),
            tolerances: Tolerances::default(),
            lemma1: Lemma1Options::default(),
        }
    }

    /// Canonical serialized form; runs with equal canonical strings produce
    /// identical outputs, so this is what gets hashed into reports.
    pub fn canonical_string(&self) -> String {
        toml::to_string(self).expect("resolved config serializes")
    }
}

fn add_issue(issues: &mut Vec<FieldIssue>, path: &str, message: String) {
    issues.push(FieldIssue { path: path.to_string(), message });
}

/// One schema violation, with the path of the offending field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldIssue>),
}

/// Raw mirror of the file; everything optional so validation can report all
/// problems at once.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    law: Option<LawSpec>,
    n: Option<i64>,
    t_list: Option<Vec<f64>>,
    t_geom: Option<RawTGeom>,
    p_list: Option<Vec<String>>,
    cutoff: Option<i64>,
    seed: Option<u64>,
    out_dir: Option<String>,
    tolerances: Option<Tolerances>,
    lemma1: Option<RawLemma1>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTGeom {
    from: f64,
    to: f64,
    points: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawLemma1 {
    c_scale: Option<f64>,
    n_values: Option<Vec<usize>>,
    resolution: Option<usize>,
    goodness_floor: Option<f64>,
    stabilization_index: Option<usize>,
}

/// Parse and validate a config file. Schema violations are collected
/// exhaustively; missing fields fall back to defaults. The only required
/// field is `law`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut issues: Vec<FieldIssue> = Vec::new();

    let defaults = RunConfig::default_uniform();

    let law = match raw.law {
        None => {
            add_issue(&mut issues, "law", "missing (set [law] with kind = \"uniform\" etc.)".into());
            defaults.law.clone()
        }
        Some(law) => {
            if let Err(crate::error::Error::InvalidLaw(problems)) = law.validate() {
                for p in problems {
                    // law validation already prefixes paths relative to the law node
                    issues.push(FieldIssue { path: format!("law.{p}"), message: String::new() });
                }
            }
            law
        }
    };

    let grid_n = match raw.n {
        None => defaults.grid_n,
        Some(n) if n >= 2 => n as usize,
        Some(n) => {
            add_issue(&mut issues, "n", format!("grid size must be >= 2, got {n}"));
            defaults.grid_n
        }
    };

    let t_list = match (raw.t_list, raw.t_geom) {
        (Some(_), Some(_)) => {
            add_issue(&mut issues, "t_list", "give either t_list or t_geom, not both".into());
            defaults.t_list.clone()
        }
        (Some(list), None) => {
            for (i, t) in list.iter().enumerate() {
                if !(*t > 0.0 && *t <= 1.0) {
                    add_issue(&mut issues, &format!("t_list[{i}]"), format!("t must lie in (0, 1], got {t}"));
                }
            }
            if list.is_empty() {
                add_issue(&mut issues, "t_list", "must not be empty".into());
                defaults.t_list.clone()
            } else {
                list
            }
        }
        (None, Some(g)) => {
            let mut ok = true;
            if !(g.from > 0.0 && g.from <= 1.0) {
                add_issue(&mut issues, "t_geom.from", format!("must lie in (0, 1], got {}", g.from));
                ok = false;
            }
            if !(g.to > 0.0 && g.to <= 1.0) {
                add_issue(&mut issues, "t_geom.to", format!("must lie in (0, 1], got {}", g.to));
                ok = false;
            }
            if g.points == 0 {
                add_issue(&mut issues, "t_geom.points", "must be >= 1".into());
                ok = false;
            }
            if ok {
                geometric_t_list(g.from, g.to, g.points)
            } else {
                defaults.t_list.clone()
            }
        }
        (None, None) => defaults.t_list.clone(),
    };

    let p_list = match raw.p_list {
        None => defaults.p_list.clone(),
        Some(list) => {
            let mut parsed = Vec::new();
            for (i, s) in list.iter().enumerate() {
                match s.parse::<Lp>() {
                    Ok(p) => parsed.push(p),
                    Err(e) => add_issue(&mut issues, &format!("p_list[{i}]"), e.to_string()),
                }
            }
            if parsed.is_empty() {
                add_issue(&mut issues, "p_list", "must contain at least one valid exponent".into());
                defaults.p_list.clone()
            } else {
                parsed
            }
        }
    };

    let cutoff = match raw.cutoff {
        None => defaults.cutoff,
        Some(k) if k >= 1 => k as usize,
        Some(k) => {
            add_issue(&mut issues, "cutoff", format!("must be >= 1, got {k}"));
            defaults.cutoff
        }
    };

    let mut lemma1 = defaults.lemma1.clone();
    if let Some(raw_l1) = raw.lemma1 {
        if let Some(c) = raw_l1.c_scale {
            if c > 0.0 {
                lemma1.c_scale = c;
            } else {
                add_issue(&mut issues, "lemma1.c_scale", format!("must be > 0, got {c}"));
            }
        }
        if let Some(nv) = raw_l1.n_values {
            if nv.is_empty() || nv.iter().any(|&n| n == 0) {
                add_issue(&mut issues, "lemma1.n_values", "must be a nonempty list of positive integers".into());
            } else {
                lemma1.n_values = nv;
            }
        }
        if let Some(r) = raw_l1.resolution {
            if r >= 2 {
                lemma1.resolution = r;
            } else {
                add_issue(&mut issues, "lemma1.resolution", format!("must be >= 2, got {r}"));
            }
        }
        if let Some(fl) = raw_l1.goodness_floor {
            if fl >= 0.0 {
                lemma1.goodness_floor = fl;
            } else {
                add_issue(&mut issues, "lemma1.goodness_floor", format!("must be >= 0, got {fl}"));
            }
        }
        if let Some(idx) = raw_l1.stabilization_index {
            if idx < lemma1.n_values.len() {
                lemma1.stabilization_index = idx;
            } else {
                add_issue(&mut issues, 
                    "lemma1.stabilization_index",
                    format!("must index into n_values (len {}), got {idx}", lemma1.n_values.len()),
                );
            }
        }
    }

    let tolerances = raw.tolerances.unwrap_or_default();
    for (path, v) in [
        ("tolerances.sharpness", tolerances.sharpness),
        ("tolerances.contraction_slack", tolerances.contraction_slack),
        ("tolerances.chain_slack", tolerances.chain_slack),
        ("tolerances.lemma2_slack", tolerances.lemma2_slack),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            add_issue(&mut issues, path, format!("must be a positive finite number, got {v}"));
        }
    }

    let config = RunConfig {
        law,
        grid_n,
        t_list,
        p_list,
        cutoff,
        seed: raw.seed.unwrap_or(0),
        out_dir: raw.out_dir.map(PathBuf::from).unwrap_or_else(|| defaults.out_dir.clone()),
        tolerances,
        lemma1,
    };

    if issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

impl RunConfig {
    /// Assemble the verification-suite options from this config.
    pub fn suite_options(&self) -> crate::error::Result<crate::verify::SuiteOptions> {
        Ok(crate::verify::SuiteOptions {
            law: self.law.clone(),
            grid: crate::torus::TorusGrid::new(self.grid_n)?,
            t_list: self.t_list.clone(),
            p_list: self.p_list.clone(),
            seed: self.seed,
            sharpness_tol: self.tolerances.sharpness,
            contraction_slack: self.tolerances.contraction_slack,
            chain_slack: self.tolerances.chain_slack,
            lemma2_slack: self.tolerances.lemma2_slack,
            lemma1: self.lemma1.clone(),
        })
    }
}
