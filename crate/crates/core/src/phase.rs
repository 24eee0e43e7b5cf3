//! Global-minimum structure of `V` on `[0, ∞)` and the five-region phase
//! classification.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

use crate::error::{Error, Result};
use crate::potential::EffectivePotential;

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;
pub const DEFAULT_T_MAX: f64 = 50.0;
const GRID_POINTS: usize = 2000;
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseLabel {
    Dilute,
    SecondOrderCurve,
    Tricritical,
    FirstOrderCurve,
    Dense,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PhaseLabel::Dilute => "Dilute",
            PhaseLabel::SecondOrderCurve => "SecondOrderCurve",
            PhaseLabel::Tricritical => "Tricritical",
            PhaseLabel::FirstOrderCurve => "FirstOrderCurve",
            PhaseLabel::Dense => "Dense",
        };
        f.write_str(s)
    }
}

/// A local minimum of `V` at `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorMin {
    pub t: f64,
    pub value: f64,
    pub d2: f64,
}

/// Signed distances of the defining quantities from their thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    pub vp0: f64,
    pub vpp0: f64,
    pub vppp0: f64,
    /// Smallest `V(t_i)` over interior minima, if any.
    pub min_interior_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub label: PhaseLabel,
    pub vp0: f64,
    pub vpp0: f64,
    pub vppp0: f64,
    pub t0: Option<f64>,
    pub vt0: Option<f64>,
    pub vppt0: Option<f64>,
    pub minima: Vec<InteriorMin>,
    pub margins: Margins,
    pub tol: f64,
}

/// Local minima of `V` in `(0, t_max]`, enlarging `t_max` until `V(t_max)`
/// clears every minimum by at least 10.
pub fn interior_minima(ep: &EffectivePotential, t_max: f64) -> Result<Vec<InteriorMin>> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    let mut t_max = t_max;
    for _ in 0..8 {
        let mins = scan_minima(ep, t_max)?;
        let top = mins.iter().map(|m| m.value).fold(0.0_f64, f64::max);
        if ep.value(t_max)? > top + 10.0 {
            return Ok(mins);
        }
        t_max *= 2.0;
    }
    Err(Error::RootIsolation(format!(
        "V did not rise 10 above its minima by t = {t_max}"
    )))
}

fn scan_minima(ep: &EffectivePotential, t_max: f64) -> Result<Vec<InteriorMin>> {
    let grid = scan_grid(t_max);
    let d1: Vec<f64> = grid
        .par_iter()
        .map(|&t| ep.eval(t).map(|e| e.d1))
        .collect::<Result<_>>()?;
    let mut mins = Vec::new();
    // a sign change inside (0, 1e-8) is the origin itself, not an interior minimum
    for i in 1..grid.len() - 1 {
        if d1[i] < 0.0 && d1[i + 1] >= 0.0 {
            let t = polish_root(ep, grid[i], grid[i + 1])?;
            let e = ep.eval(t)?;
            if e.d2 > 0.0 {
                mins.push(InteriorMin {
                    t,
                    value: e.value,
                    d2: e.d2,
                });
            }
        }
    }
    Ok(mins)
}

/// `0`, a geometric run up to 0.05, then a uniform run to `t_max`.
fn scan_grid(t_max: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let lo = 1e-8_f64;
    let hi = 0.05_f64.min(t_max);
    let n_geo = 80;
    for i in 0..n_geo {
        g.push(lo * (hi / lo).powf(i as f64 / n_geo as f64));
    }
    for i in 0..=GRID_POINTS {
        g.push(hi + (t_max - hi) * i as f64 / GRID_POINTS as f64);
    }
    g
}

/// Root of `V'` in `[a, b]` with `V'(a) < 0 <= V'(b)`, by Newton steps kept
/// inside a shrinking bracket.
pub(crate) fn polish_root(ep: &EffectivePotential, a: f64, b: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let e = ep.eval(t)?;
        if e.d1.abs() < ROOT_TOL {
            return Ok(t);
        }
        if e.d1 < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - e.d1 / e.d2;
        t = if e.d2 > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(t);
        }
    }
    Err(Error::RootIsolation(format!(
        "V' root in [{a}, {b}] not polished below {ROOT_TOL:e}"
    )))
}

pub fn classify(ep: &EffectivePotential, tol: f64) -> Result<PhaseReport> {
    let z = ep.at_zero();
    let (vp0, vpp0, vppp0) = (z.d1, z.d2, z.d3);
    let minima = interior_minima(ep, DEFAULT_T_MAX)?;
    let global = minima.iter().cloned().min_by(|a, b| a.value.total_cmp(&b.value));
    let margins = Margins {
        vp0,
        vpp0,
        vppp0,
        min_interior_value: global.map(|m| m.value),
    };
    let near_zero_min = minima.iter().any(|m| m.value.abs() <= tol);
    let ambiguous = |why: &str| {
        Err(Error::AmbiguousClassification(format!(
            "{why} (V'(0)={vp0:e}, V''(0)={vpp0:e}, V'''(0)={vppp0:e}, min V(t_i)={:?}, tol={tol:e})",
            global.map(|m| m.value)
        )))
    };

    let label = if global.is_some_and(|m| m.value < -tol) {
        PhaseLabel::Dense
    } else if vp0 > tol {
        if near_zero_min {
            PhaseLabel::FirstOrderCurve
        } else {
            PhaseLabel::Dilute
        }
    } else if vp0.abs() <= tol {
        if near_zero_min {
            return ambiguous("V'(0) vanishes and an interior minimum sits at level 0");
        }
        if vpp0 > tol {
            PhaseLabel::SecondOrderCurve
        } else if vpp0.abs() <= tol {
            if vppp0 > tol {
                PhaseLabel::Tricritical
            } else {
                return ambiguous("higher-order degeneracy at the origin");
            }
        } else {
            return ambiguous("V''(0) < 0 with no interior minimum below 0");
        }
    } else {
        return Err(Error::RootIsolation(format!(
            "V'(0) = {vp0:e} < 0 but no interior minimum below 0 was isolated"
        )));
    };

    let witness = match label {
        PhaseLabel::Dense => global,
        PhaseLabel::FirstOrderCurve => minima
            .iter()
            .cloned()
            .filter(|m| m.value.abs() <= tol)
            .min_by(|a, b| a.value.abs().total_cmp(&b.value.abs())),
        _ => None,
    };
    Ok(PhaseReport {
        label,
        vp0,
        vpp0,
        vppp0,
        t0: witness.map(|m| m.t),
        vt0: witness.map(|m| m.value),
        vppt0: witness.map(|m| m.d2),
        minima,
        margins,
        tol,
    })
}
