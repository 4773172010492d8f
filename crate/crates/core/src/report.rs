//! Merging sweep outputs into one plot-ready summary table.

use crate::gap::{csv_field, fmt17, SweepReport};
use crate::torus::Lp;

/// Merge sweeps into a wide CSV: one row per `(law, t)` with gap and
/// `gap/t²` columns per exponent, plus the fitted per-p constants repeated
/// on each row. Column order is fixed by the order exponents first appear.
pub fn summary_csv(sweeps: &[SweepReport], header_comment: &str) -> String {
    let mut ps: Vec<Lp> = Vec::new();
    for sweep in sweeps {
        for point in &sweep.points {
            if !ps.contains(&point.p) {
                ps.push(point.p);
            }
        }
    }

    let mut out = String::new();
    if !header_comment.is_empty() {
        out.push_str(header_comment);
        if !header_comment.ends_with('\n') {
            out.push('\n');
        }
    }
    out.push_str("law,t,t_squared");
    for p in &ps {
        out.push_str(&format!(",gap_{p}"));
    }
    for p in &ps {
        out.push_str(&format!(",gap_over_t2_{p}"));
    }
    for p in &ps {
        out.push_str(&format!(",c_est_{p}"));
    }
    out.push_str(",c_est\n");

    for sweep in sweeps {
        let mut ts: Vec<f64> = Vec::new();
        for point in &sweep.points {
            if !ts.iter().any(|&t| t == point.t) {
                ts.push(point.t);
            }
        }
        for &t in &ts {
            out.push_str(&format!("{},{},{}", csv_field(&sweep.law), fmt17(t), fmt17(t * t)));
            for p in &ps {
                let gap = sweep.points.iter().find(|r| r.t == t && r.p == *p).map(|r| r.gap);
                out.push(',');
                if let Some(g) = gap {
                    out.push_str(&fmt17(g));
                }
            }
            for p in &ps {
                let ratio =
                    sweep.points.iter().find(|r| r.t == t && r.p == *p).map(|r| r.gap_over_t2());
                out.push(',');
                if let Some(r) = ratio {
                    out.push_str(&fmt17(r));
                }
            }
            for p in &ps {
                let c = sweep.per_p.iter().find(|c| c.p == *p).map(|c| c.c_est);
                out.push(',');
                if let Some(c) = c {
                    out.push_str(&fmt17(c));
                }
            }
            out.push(',');
            out.push_str(&fmt17(sweep.c_est));
            out.push('\n');
        }
    }
    out
}
