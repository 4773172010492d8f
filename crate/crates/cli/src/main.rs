//! Command-line front end: parse law/config files, run gap sweeps and the
//! verification suite, and emit CSV/JSON reports with plot-ready columns.
//!
//! Every output file embeds the tool version and a hash of the resolved
//! configuration. Runs are deterministic for a fixed config and seed
//! regardless of the worker-thread count (`TORUSGAP_THREADS`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use torusgap::config::{parse_config, RunConfig};
use torusgap::gap;
use torusgap::law::{Atom, LawSpec};
use torusgap::operator::{GridOperator, MultiplierOperator};
use torusgap::torus::{Lp, TorusGrid};
use torusgap::verify;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "torusgap", version, about = "Spectral gaps of averaging operators on the circle")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct LawArgs {
    /// Law shorthand: `uniform` (U(-1,1)), `gaussian` (N(0,1)),
    /// `dirac-uniform-mix` (half Dirac at 0, half U(-1,1)).
    #[arg(long)]
    law: Option<String>,
    /// TOML run configuration file (see README for the schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (falls back to TORUSGAP_OUT_DIR, then the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral gap of I - A_t for one (law, t, p).
    Gap {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        t: f64,
        /// Norm exponent: 1, 2, inf, or any p > 1 (heuristic).
        #[arg(long)]
        p: String,
        /// Grid size override.
        #[arg(long)]
        n: Option<usize>,
        /// Backend: `grid` (default) or `multiplier` (p = 2 only).
        #[arg(long, default_value = "grid")]
        backend: String,
    },
    /// Sweep the (p, t) lattice and fit the constant in the c*t^2 bound.
    Sweep {
        #[command(flatten)]
        law: LawArgs,
    },
    /// Run the full verification suite; nonzero exit on any failed check.
    Verify {
        #[command(flatten)]
        law: LawArgs,
    },
    /// Search for a near-invariant unit function of an atomic law.
    Counterexample {
        /// Atom as position:mass; repeat for several atoms.
        #[arg(long = "atom", required = true)]
        atoms: Vec<String>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Goodness table of wrapped standardized i.i.d. sums.
    Lemma1 {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        c_scale: Option<f64>,
        /// Comma-separated list of sum orders, e.g. 8,16,32.
        #[arg(long)]
        n_values: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Merge sweep outputs found in a directory into one summary table.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let pool = build_pool()?;
    pool.install(|| dispatch(cli))
}

/// Worker pool sized by TORUSGAP_THREADS (0 or unset: one per core).
fn build_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("TORUSGAP_THREADS") {
        Ok(v) => v.parse::<usize>().context("TORUSGAP_THREADS must be an integer")?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gap { law, t, p, n, backend } => cmd_gap(law, t, &p, n, &backend),
        Cmd::Sweep { law } => cmd_sweep(law),
        Cmd::Verify { law } => cmd_verify(law),
        Cmd::Counterexample { atoms, t, eps, n_max, out } => {
            cmd_counterexample(&atoms, t, eps, n_max, out)
        }
        Cmd::Lemma1 { law, c_scale, n_values, resolution, floor } => {
            cmd_lemma1(law, c_scale, n_values, resolution, floor)
        }
        Cmd::Report { dir, out } => cmd_report(&dir, out),
    }
}

fn shorthand_law(name: &str) -> Result<LawSpec> {
    match name {
        "uniform" => Ok(LawSpec::uniform_symmetric()),
        "gaussian" => Ok(LawSpec::standard_gaussian()),
        "dirac-uniform-mix" => Ok(LawSpec::dirac_uniform_mix()),
        other => bail!(
            "unknown law shorthand '{other}' (use uniform, gaussian, dirac-uniform-mix, or --config)"
        ),
    }
}

/// Resolve the run configuration from --config / --law, with defaults.
fn resolve_config(args: &LawArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            parse_config(&text).map_err(|e| anyhow::anyhow!("{e}"))?
        }
        None => RunConfig::default_uniform(),
    };
    if let Some(name) = &args.law {
        cfg.law = shorthand_law(name)?;
    }
    Ok(cfg)
}

fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_string().as_bytes());
    hex_prefix(&digest, 16)
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::new();
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

fn out_dir(args_out: &Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = args_out
        .clone()
        .or_else(|| std::env::var("TORUSGAP_OUT_DIR").ok().map(PathBuf::from))
        .unwrap_or_else(|| cfg.out_dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn csv_header(hash: &str) -> String {
    format!("# torusgap {VERSION} config {hash}\n")
}

fn meta_json(hash: &str) -> serde_json::Value {
    json!({ "tool_version": VERSION, "config_hash": hash })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_gap(law_args: LawArgs, t: f64, p: &str, n: Option<usize>, backend: &str) -> Result<ExitCode> {
    let mut cfg = resolve_config(&law_args)?;
    if let Some(n) = n {
        cfg.grid_n = n;
    }
    let hash = config_hash(&cfg);
    let p: Lp = p.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    let report = match backend {
        "grid" => {
            let grid = TorusGrid::new(cfg.grid_n)?;
            let op = GridOperator::new(&cfg.law, t, grid)?;
            match p {
                Lp::One => gap::gap_l1(&op),
                Lp::Two => gap::gap_l2_grid(&op),
                Lp::Inf => gap::gap_linf(&op),
                Lp::Other(pv) => {
                    gap::gap_general_p(&op, pv, gap::DescentBudget::default(), cfg.seed)?
                }
            }
        }
        "multiplier" => {
            if p != Lp::Two {
                bail!("the multiplier backend computes only the p = 2 gap");
            }
            let op = MultiplierOperator::new(cfg.law.clone(), t, cfg.cutoff)?;
            gap::gap_l2(&op, t)
        }
        other => bail!("unknown backend '{other}' (grid or multiplier)"),
    };

    let doc = json!({
        "meta": meta_json(&hash),
        "law": cfg.law.describe(),
        "report": report,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    println!("{text}");
    let dir = out_dir(&law_args.out, &cfg)?;
    write_text(&dir.join("gap.json"), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(law_args: LawArgs) -> Result<ExitCode> {
    let cfg = resolve_config(&law_args)?;
    let hash = config_hash(&cfg);
    let grid = TorusGrid::new(cfg.grid_n)?;
    let sweep = gap::sweep_fit_constant(&cfg.law, &cfg.p_list, &cfg.t_list, grid, cfg.seed)?;

    println!("law {}  c_est {:.6e}", sweep.law, sweep.c_est);
    for pp in &sweep.per_p {
        println!("  p={}  c_est {:.6e}", pp.p, pp.c_est);
    }
    if let Some(w) = &sweep.resonant_witness {
        println!("  resonant: {w}");
    }

    let dir = out_dir(&law_args.out, &cfg)?;
    let doc = json!({ "meta": meta_json(&hash), "sweep": sweep });
    write_text(&dir.join("sweep.json"), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    write_text(&dir.join("sweep.csv"), &sweep.to_csv(&csv_header(&hash)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(law_args: LawArgs) -> Result<ExitCode> {
    let cfg = resolve_config(&law_args)?;
    let hash = config_hash(&cfg);
    let suite = verify::run_suite(&cfg.suite_options()?, VERSION, &hash)?;

    for check in &suite.checks {
        let tag = match check.verdict {
            verify::Verdict::Pass => "pass",
            verify::Verdict::Fail => "FAIL",
            verify::Verdict::NotApplicable => "n/a ",
        };
        println!("{tag}  {}", check.name);
    }

    let dir = out_dir(&law_args.out, &cfg)?;
    write_text(&dir.join("verify_report.json"), &(serde_json::to_string_pretty(&suite)? + "\n"))?;
    write_text(&dir.join("verify_report.csv"), &suite.to_csv(&csv_header(&hash)))?;

    if suite.all_passed {
        println!("all {} checks passed", suite.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for failed in suite.failed_checks() {
            eprintln!(
                "failed check: {} ({}); see {}",
                failed.name,
                failed.witness.as_deref().unwrap_or("no witness"),
                dir.join("verify_report.json").display(),
            );
        }
        Ok(ExitCode::FAILURE)
    }
}

fn parse_atom(s: &str) -> Result<Atom> {
    let (pos, mass) =
        s.split_once(':').with_context(|| format!("atom '{s}' must be position:mass"))?;
    Ok(Atom {
        position: pos.trim().parse().with_context(|| format!("bad atom position in '{s}'"))?,
        mass: mass.trim().parse().with_context(|| format!("bad atom mass in '{s}'"))?,
    })
}

fn cmd_counterexample(
    atoms: &[String],
    t: f64,
    eps: f64,
    n_max: usize,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let atoms: Vec<Atom> = atoms.iter().map(|s| parse_atom(s)).collect::<Result<_>>()?;
    let report = verify::counterexample_search(&atoms, t, eps, n_max)?;

    // Hash the search parameters; there is no run config here.
    let canon = format!("counterexample t={t} eps={eps} n_max={n_max} atoms={atoms:?}");
    let hash = hex_prefix(&Sha256::digest(canon.as_bytes()), 16);
    let doc = json!({ "meta": meta_json(&hash), "report": report });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    println!("{text}");

    let dir = out
        .or_else(|| std::env::var("TORUSGAP_OUT_DIR").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    write_text(&dir.join("counterexample.json"), &text)?;

    if report.succeeded() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "no qualifying n <= {n_max}: best n = {} with bound {:.3e}",
            report.best_n, report.best_bound
        );
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_lemma1(
    law_args: LawArgs,
    c_scale: Option<f64>,
    n_values: Option<String>,
    resolution: Option<usize>,
    floor: Option<f64>,
) -> Result<ExitCode> {
    let mut cfg = resolve_config(&law_args)?;
    if let Some(c) = c_scale {
        cfg.lemma1.c_scale = c;
    }
    if let Some(list) = n_values {
        cfg.lemma1.n_values = list
            .split(',')
            .map(|s| s.trim().parse::<usize>().context("n_values must be integers"))
            .collect::<Result<_>>()?;
    }
    if let Some(r) = resolution {
        cfg.lemma1.resolution = r;
    }
    if let Some(f) = floor {
        cfg.lemma1.goodness_floor = f;
    }
    let hash = config_hash(&cfg);
    let grid = TorusGrid::new(cfg.grid_n)?;
    let report = verify::lemma1_check(&cfg.law, &cfg.lemma1, grid)?;

    let mut csv = csv_header(&hash);
    csv.push_str("n,goodness,lclt_sup_dist,renorm_drift\n");
    for row in &report.rows {
        println!(
            "n {:4}  goodness {:.6}  lclt sup-dist {:.3e}",
            row.n, row.goodness, row.lclt_sup_dist
        );
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.n,
            gap::fmt17(row.goodness),
            gap::fmt17(row.lclt_sup_dist),
            gap::fmt17(row.renorm_drift),
        ));
    }

    let dir = out_dir(&law_args.out, &cfg)?;
    let doc = json!({ "meta": meta_json(&hash), "lemma1": report });
    write_text(&dir.join("lemma1.json"), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    write_text(&dir.join("lemma1.csv"), &csv)?;

    Ok(if report.check.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_report(dir: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut sweeps: Vec<gap::SweepReport> = Vec::new();
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    for path in &names {
        let value: serde_json::Value = match serde_json::from_str(&fs::read_to_string(path)?) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if let Some(sweep) = value.get("sweep") {
            if sweep.is_null() {
                continue;
            }
            if let Ok(s) = serde_json::from_value::<gap::SweepReport>(sweep.clone()) {
                sweeps.push(s);
            }
        }
    }
    if sweeps.is_empty() {
        bail!("no sweep outputs found under {}", dir.display());
    }
    let canon: String = sweeps.iter().map(|s| format!("{}:{}", s.law, s.points.len())).collect();
    let hash = hex_prefix(&Sha256::digest(canon.as_bytes()), 16);
    let csv = torusgap::report::summary_csv(&sweeps, &csv_header(&hash));
    let target = out.unwrap_or_else(|| dir.join("report.csv"));
    write_text(&target, &csv)?;
    println!("merged {} sweeps into {}", sweeps.len(), target.display());
    Ok(ExitCode::SUCCESS)
}
