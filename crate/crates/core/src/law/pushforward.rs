//! Exact mass assignment of real-line laws to the cells of the circle grid.
//!
//! Cells are centered at the grid points: cell `j` is
//! `[(j − ½)h, (j + ½)h) mod 1`. Interval and piecewise-linear densities are
//! integrated over cell preimages exactly; atoms split linearly between the
//! two nearest grid points.

use crate::torus::wrap_unit;

/// Add `mass` spread uniformly over the wrapped interval `[lo, lo + len)`.
pub(crate) fn distribute_uniform_interval(lo: f64, len: f64, mass: f64, out: &mut [f64]) {
    debug_assert!(len > 0.0);
    let n = out.len();
    let h = 1.0 / n as f64;

    // Whole periods cover every cell evenly.
    let whole = len.floor();
    if whole > 0.0 {
        let per_cell = mass * whole * h / len;
        for v in out.iter_mut() {
            *v += per_cell;
        }
    }
    let rem = len - whole;
    if rem <= f64::EPSILON * len.max(1.0) {
        return;
    }
    // Walk the remainder across cell boundaries. Shifting by h/2 maps
    // centered cells onto the standard partition [jh, (j+1)h).
    let mut pos = wrap_unit(lo + whole + 0.5 * h);
    let mut remaining = rem;
    let density = mass / len;
    while remaining > 1e-300 {
        let j = ((pos * n as f64).floor() as usize).min(n - 1);
        let cell_end = (j + 1) as f64 * h;
        let take = (cell_end - pos).min(remaining);
        out[j] += density * take;
        remaining -= take;
        pos = if j + 1 == n { 0.0 } else { cell_end };
        if take <= 0.0 {
            // Degenerate float stall; dump what is left into this cell.
            out[j] += density * remaining;
            break;
        }
    }
}

/// Add an atom of the given mass at wrapped position `pos`, split linearly
/// between the two nearest grid points.
pub(crate) fn split_atom(pos: f64, mass: f64, out: &mut [f64]) {
    let n = out.len();
    let u = wrap_unit(pos) * n as f64;
    let j0 = (u.floor() as usize).min(n - 1);
    let frac = u - j0 as f64;
    out[j0] += mass * (1.0 - frac);
    out[(j0 + 1) % n] += mass * frac;
}

/// Add a Gaussian with the given (already scaled) mean and standard
/// deviation, integrating the normal CDF over every cell translate within
/// nine standard deviations.
pub(crate) fn distribute_gaussian(mu: f64, sd: f64, mass: f64, out: &mut [f64]) {
    debug_assert!(sd > 0.0);
    let n = out.len();
    let h = 1.0 / n as f64;
    let reach = 9.0 * sd;
    let k_lo = (mu - reach - 1.0).floor() as i64;
    let k_hi = (mu + reach + 1.0).ceil() as i64;
    for j in 0..n {
        let center = j as f64 * h;
        let mut cell_mass = 0.0;
        for k in k_lo..=k_hi {
            let a = center - 0.5 * h + k as f64;
            let b = a + h;
            if b < mu - reach || a > mu + reach {
                continue;
            }
            cell_mass += normal_cdf(b, mu, sd) - normal_cdf(a, mu, sd);
        }
        out[j] += mass * cell_mass;
    }
}

/// Add a piecewise-linear density given by uniformly spaced samples on the
/// (already scaled) interval `[lo, hi]`. Each linear segment is integrated
/// exactly, splitting at cell boundaries.
pub(crate) fn distribute_linear_table(lo: f64, hi: f64, samples: &[f64], mass: f64, out: &mut [f64]) {
    let n = out.len();
    let h = 1.0 / n as f64;
    let m = samples.len();
    debug_assert!(m >= 2);
    let step = (hi - lo) / (m - 1) as f64;
    // Normalize so the table contributes exactly `mass` in total.
    let integral: f64 = (0..m - 1).map(|i| 0.5 * (samples[i] + samples[i + 1]) * step).sum();
    let scale = mass / integral;

    for i in 0..m - 1 {
        let seg_lo = lo + i as f64 * step;
        let v0 = samples[i] * scale;
        let v1 = samples[i + 1] * scale;
        // Split the segment [seg_lo, seg_lo + step) at wrapped cell edges.
        let mut s = 0.0; // offset within the segment
        while s < step {
            let pos = wrap_unit(seg_lo + s + 0.5 * h);
            let j = ((pos * n as f64).floor() as usize).min(n - 1);
            let to_edge = (j + 1) as f64 * h - pos;
            let ds = to_edge.min(step - s).max(1e-18);
            let f0 = v0 + (v1 - v0) * (s / step);
            let f1 = v0 + (v1 - v0) * ((s + ds) / step);
            out[j] += 0.5 * (f0 + f1) * ds;
            s += ds;
        }
    }
}

pub(crate) fn normal_cdf(x: f64, mu: f64, sd: f64) -> f64 {
    0.5 * libm::erfc(-(x - mu) / (sd * std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use crate::law::{Atom, LawSpec};
    use crate::torus::TorusGrid;

    #[test]
    fn uniform_full_period_is_flat() {
        // t·Y with Y ~ U(−1,1) and t = 1/2 covers exactly one period.
        let grid = TorusGrid::new(64).unwrap();
        let w = LawSpec::uniform_symmetric().pushforward_to_torus(0.5, grid).unwrap();
        for v in &w {
            assert!((v - 1.0 / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_window_is_flat_inside() {
        // Width-0.5 window centered at 0 for t = 0.25.
        let grid = TorusGrid::new(4096).unwrap();
        let w = LawSpec::uniform_symmetric().pushforward_to_torus(0.25, grid).unwrap();
        let h = 1.0 / 4096.0;
        let inside = 2.0 * h; // uniform height 1/0.5 = 2 per unit, mass 2h per cell
        for j in 0..4096 {
            let x = grid.point(j);
            let d = (x. min(1.0 - x)).abs();
            if d < 0.25 - h {
                assert!((w[j] - inside).abs() < 1e-15, "inside cell {j}");
            } else if d > 0.25 + h {
                assert!(w[j].abs() < 1e-18, "outside cell {j}");
            }
        }
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atom_on_grid_point() {
        let grid = TorusGrid::new(4).unwrap();
        let law = LawSpec::Atoms { atoms: vec![Atom { position: 0.25, mass: 1.0 }] };
        let w = law.pushforward_to_torus(1.0, grid).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn atom_splits_linearly() {
        let grid = TorusGrid::new(4).unwrap();
        let law = LawSpec::Atoms { atoms: vec![Atom { position: 1.0 / 3.0, mass: 1.0 }] };
        let w = law.pushforward_to_torus(1.0, grid).unwrap();
        assert!((w[0] - 0.0).abs() < 1e-15);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w[2] - 1.0 / 3.0).abs() < 1e-12);
        assert!((w[3] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn translation_by_period_is_exact_on_grid() {
        // Translating the law by k/t leaves the pushforward unchanged;
        // exact when the atom lands on a grid point.
        let grid = TorusGrid::new(8).unwrap();
        let t = 0.5;
        let a = LawSpec::Atoms { atoms: vec![Atom { position: 0.25, mass: 1.0 }] };
        let b = LawSpec::Atoms { atoms: vec![Atom { position: 0.25 + 2.0 / t, mass: 1.0 }] };
        let wa = a.pushforward_to_torus(t, grid).unwrap();
        let wb = b.pushforward_to_torus(t, grid).unwrap();
        assert_eq!(wa, wb);
    }

    #[test]
    fn gaussian_masses_sum_to_one() {
        let grid = TorusGrid::new(512).unwrap();
        let w = LawSpec::standard_gaussian().pushforward_to_torus(0.3, grid).unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn table_matches_uniform() {
        // A flat density table must reproduce the uniform pushforward.
        let grid = TorusGrid::new(256).unwrap();
        let table = LawSpec::DensityTable { lo: -1.0, hi: 1.0, samples: vec![0.5; 33] };
        let wt = table.pushforward_to_torus(0.37, grid).unwrap();
        let wu = LawSpec::uniform_symmetric().pushforward_to_torus(0.37, grid).unwrap();
        for (a, b) in wt.iter().zip(&wu) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_sum_pushforward_is_convolution_power() {
        let grid = TorusGrid::new(64).unwrap();
        let base = LawSpec::Atoms { atoms: vec![Atom { position: 0.125, mass: 1.0 }] };
        let law = LawSpec::IidSum { base: Box::new(base), count: 3 };
        let w = law.pushforward_to_torus(1.0, grid).unwrap();
        // Three shifts of 1/8 put the whole mass at 3/8.
        let j = (0.375 * 64.0) as usize;
        assert!((w[j] - 1.0).abs() < 1e-9);
    }
}
