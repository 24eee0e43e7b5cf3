//! Phase-boundary curves in the `(g, nu)` plane and the tricritical point.
//!
//! Every Jacobian comes from the moment identities
//! `dM_i/dg = -M_{i+2}`, `dM_i/dnu = -M_{i+1}` or from the `nu`-derivatives
//! of the potential; nothing is differenced.

use serde::Serialize;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::model::{make_polynomial_interaction, ModelParams};
use crate::phase::{classify, PhaseLabel, DEFAULT_CLASSIFY_TOL};
use crate::potential::{moments_upto, EffectivePotential};

/// Quadrature tolerance used inside the curve solvers.
pub const CURVE_TOL: f64 = 1e-13;
/// Default starting point for the tricritical Newton iteration.
pub const DEFAULT_TRICRITICAL_GUESS: (f64, f64) = (-3.2, 2.1);
/// Closest approach to `g_c` accepted by [`first_order_point`].
pub const FIRST_ORDER_MIN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryKind {
    SecondOrder,
    FirstOrder,
    /// The curve `V''(0) = 0`, i.e. `M_1 = M_0^2`.
    Vpp0Zero,
    /// The curve `M_0 = 1` where `V''(0) <= 0`; not a phase boundary.
    Vpp0Unchecked,
    Tricritical,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BoundaryKind::SecondOrder => "second-order",
            BoundaryKind::FirstOrder => "first-order",
            BoundaryKind::Vpp0Zero => "vpp0-zero",
            BoundaryKind::Vpp0Unchecked => "vpp0-unchecked",
            BoundaryKind::Tricritical => "tricritical",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub g: f64,
    pub nu: f64,
    pub kind: BoundaryKind,
    pub t0: Option<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TricriticalPoint {
    pub u: f64,
    pub g_c: f64,
    pub nu_c: f64,
    /// `M_0..=M_4` at the point.
    pub moments: [f64; 5],
    /// `V'''(0)`.
    pub alpha: f64,
    /// `M_3 - M_2^2`.
    pub b: f64,
    /// `(M_4 - 2 M_2 M_3 + M_2^3) / 2`.
    pub a_coef: f64,
    pub residual: f64,
}

impl TricriticalPoint {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.u, self.g_c, self.nu_c)
    }

    /// Normal `(M_2, M_1)` to the curve `M_0 = 1`, pointing into the dilute side.
    pub fn normal(&self) -> [f64; 2] {
        [self.moments[2], self.moments[1]]
    }
}

fn moments5(params: ModelParams) -> Result<[f64; 5]> {
    let inter = make_polynomial_interaction(params)?;
    let m = moments_upto::<5>(&inter, CURVE_TOL)?.m;
    Ok([m[0], m[1], m[2], m[3], m[4]])
}

fn solve2(j: [[f64; 2]; 2], f: [f64; 2], what: &'static str) -> Result<[f64; 2]> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = j.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).powi(2);
    if det.abs() < 1e-14 * scale.max(1e-300) || !det.is_finite() {
        return Err(Error::SingularJacobian { what, det });
    }
    Ok([
        (j[1][1] * f[0] - j[0][1] * f[1]) / det,
        (-j[1][0] * f[0] + j[0][0] * f[1]) / det,
    ])
}

/// Newton on `(M_0 - 1, M_1 - 1)` in `(g, nu)` with
/// `J = [[-M_2, -M_1], [-M_3, -M_2]]`.
pub fn tricritical_solve(u: f64, guess: (f64, f64)) -> Result<TricriticalPoint> {
    let (mut g, mut nu) = guess;
    let mut m = moments5(ModelParams::new(u, g, nu))?;
    let norm = |m: &[f64; 5]| (m[0] - 1.0).abs().max((m[1] - 1.0).abs());
    let mut res = norm(&m);
    for it in 0..50 {
        if res < 1e-14 {
            return finish_tricritical(u, g, nu, m, res);
        }
        let j = [[-m[2], -m[1]], [-m[3], -m[2]]];
        let d = solve2(j, [m[0] - 1.0, m[1] - 1.0], "tricritical")?;
        let mut lambda = 1.0;
        loop {
            let (g1, nu1) = (g - lambda * d[0], nu - lambda * d[1]);
            let p = ModelParams::new(u, g1, nu1);
            if let Ok(m1) = p.validate().map_err(Error::from).and_then(|_| moments5(p)) {
                let r1 = norm(&m1);
                if r1 < res || lambda < 1e-3 {
                    g = g1;
                    nu = nu1;
                    m = m1;
                    let step = (lambda * d[0]).abs().max((lambda * d[1]).abs());
                    res = r1;
                    if step < 1e-15 && res < 1e-11 {
                        return finish_tricritical(u, g, nu, m, res);
                    }
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(Error::NoConvergence {
                    what: "tricritical",
                    iterations: it,
                    residual: res,
                });
            }
        }
    }
    if res < 1e-11 {
        return finish_tricritical(u, g, nu, m, res);
    }
    Err(Error::NoConvergence {
        what: "tricritical",
        iterations: 50,
        residual: res,
    })
}

fn finish_tricritical(u: f64, g: f64, nu: f64, m: [f64; 5], res: f64) -> Result<TricriticalPoint> {
    let alpha = -0.5 * m[2] + 3.0 * m[1] * m[0] - 2.0 * m[0].powi(3);
    let tc = TricriticalPoint {
        u,
        g_c: g,
        nu_c: nu,
        moments: m,
        alpha,
        b: m[3] - m[2] * m[2],
        a_coef: 0.5 * (m[4] - 2.0 * m[2] * m[3] + m[2].powi(3)),
        residual: res,
    };
    if !(alpha > 0.0) {
        return Err(Error::Verification {
            what: "tricritical",
            detail: format!("V'''(0) = {alpha} is not positive"),
        });
    }
    Ok(tc)
}

/// Tricritical point of the unit-cubic model, computed once.
pub fn tricritical_default() -> Result<TricriticalPoint> {
    static TC: OnceLock<std::result::Result<TricriticalPoint, Error>> = OnceLock::new();
    TC.get_or_init(|| tricritical_solve(1.0, DEFAULT_TRICRITICAL_GUESS))
        .clone()
}

/// Safeguarded Newton for a scalar `f(nu)` with `f` decreasing.
fn newton_decreasing<F>(f: F, guess: f64, lo_limit: f64, what: &'static str) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (mut lo, mut hi) = (f64::NAN, f64::NAN);
    let mut x = guess.max(lo_limit + 1e-9);
    let (mut fx, mut dfx) = f(x)?;
    // bracket: f(lo) > 0 > f(hi)
    let mut step = 0.5;
    for _ in 0..80 {
        if fx > 0.0 {
            lo = x;
            if !hi.is_nan() {
                break;
            }
            let nx = x + step;
            let (a, b) = f(nx)?;
            if a <= 0.0 {
                hi = nx;
                let _ = b;
                break;
            }
            x = nx;
            fx = a;
            dfx = b;
        } else {
            hi = x;
            if !lo.is_nan() {
                break;
            }
            let nx = (x - step).max(0.5 * (x + lo_limit));
            let (a, b) = f(nx)?;
            if a > 0.0 {
                lo = nx;
                break;
            }
            x = nx;
            fx = a;
            dfx = b;
        }
        step *= 2.0;
    }
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::RootIsolation(format!(
            "{what}: no sign change found near {guess}"
        )));
    }
    let mut x = if (lo..=hi).contains(&x) || (hi..=lo).contains(&x) {
        x
    } else {
        0.5 * (lo + hi)
    };
    let _ = dfx;
    for it in 0..100 {
        let (fx, dfx) = f(x)?;
        if fx.abs() < 1e-14 {
            return Ok((x, fx));
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let nx = x - fx / dfx;
        let inside = nx > lo.min(hi) && nx < lo.max(hi);
        let nx = if inside && dfx < 0.0 { nx } else { 0.5 * (lo + hi) };
        if (nx - x).abs() < 1e-15 * (1.0 + x.abs()) {
            let (fx, _) = f(nx)?;
            if fx.abs() < 1e-11 {
                return Ok((nx, fx));
            }
            return Err(Error::NoConvergence {
                what,
                iterations: it,
                residual: fx.abs(),
            });
        }
        x = nx;
    }
    let (fx, _) = f(x)?;
    Err(Error::NoConvergence {
        what,
        iterations: 100,
        residual: fx.abs(),
    })
}

fn admissible_floor(u: f64, g: f64) -> f64 {
    if u == 0.0 && g == 0.0 {
        -1.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Solves `M_0(g, nu) = 1` for `nu` without the phase check.
pub fn m0_curve_nu(u: f64, g: f64, guess: Option<f64>) -> Result<(f64, [f64; 5])> {
    let floor = admissible_floor(u, g);
    let (nu, _) = newton_decreasing(
        |nu| {
            let m = moments5(ModelParams::new(u, g, nu))?;
            Ok((m[0] - 1.0, -m[1]))
        },
        guess.unwrap_or(1.0),
        floor,
        "second-order curve",
    )?;
    Ok((nu, moments5(ModelParams::new(u, g, nu))?))
}

/// The curve `V'(0) = 0` at `g`. Where `V''(0) > 0` it is the second-order
/// curve and the point is re-classified as a check; elsewhere it is returned
/// as [`BoundaryKind::Vpp0Unchecked`].
pub fn second_order_nu(u: f64, g: f64, guess: Option<f64>) -> Result<BoundaryPoint> {
    let (nu, m) = m0_curve_nu(u, g, guess)?;
    let r0 = m[0] - 1.0;
    let vpp0 = m[0] * m[0] - m[1];
    if vpp0 <= 0.0 {
        return Ok(BoundaryPoint {
            g,
            nu,
            kind: BoundaryKind::Vpp0Unchecked,
            t0: None,
            residuals: vec![r0],
        });
    }
    let ep = EffectivePotential::with_tol(ModelParams::new(u, g, nu), CURVE_TOL)?;
    let rep = classify(&ep, DEFAULT_CLASSIFY_TOL)?;
    if rep.label != PhaseLabel::SecondOrderCurve {
        return Err(Error::Verification {
            what: "second-order curve",
            detail: format!("({g}, {nu}) classified as {} with margins {:?}", rep.label, rep.margins),
        });
    }
    Ok(BoundaryPoint {
        g,
        nu,
        kind: BoundaryKind::SecondOrder,
        t0: None,
        residuals: vec![r0],
    })
}

/// The curve `V''(0) = 0`, i.e. `M_1 = M_0^2`, by Newton in `nu` with
/// derivative `-M_2 + 2 M_0 M_1`.
pub fn vpp0_curve_nu(u: f64, g: f64, guess: Option<f64>) -> Result<BoundaryPoint> {
    let mut nu = match guess {
        Some(x) => x,
        None => m0_curve_nu(u, g, None)?.0,
    };
    let f = |nu: f64| -> Result<(f64, f64)> {
        let m = moments5(ModelParams::new(u, g, nu))?;
        Ok((m[1] - m[0] * m[0], -m[2] + 2.0 * m[0] * m[1]))
    };
    let (mut fx, mut dfx) = f(nu)?;
    for it in 0..100 {
        if fx.abs() < 1e-14 {
            return Ok(BoundaryPoint {
                g,
                nu,
                kind: BoundaryKind::Vpp0Zero,
                t0: None,
                residuals: vec![fx],
            });
        }
        let d = fx / dfx;
        let mut lambda = 1.0;
        loop {
            let cand = nu - lambda * d;
            if ModelParams::new(u, g, cand).validate().is_ok() {
                let (f1, d1) = f(cand)?;
                if f1.abs() < fx.abs() || lambda < 1e-3 {
                    let moved = (lambda * d).abs();
                    nu = cand;
                    fx = f1;
                    dfx = d1;
                    if moved < 1e-15 * (1.0 + nu.abs()) && fx.abs() < 1e-11 {
                        return Ok(BoundaryPoint {
                            g,
                            nu,
                            kind: BoundaryKind::Vpp0Zero,
                            t0: None,
                            residuals: vec![fx],
                        });
                    }
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(Error::NoConvergence {
                    what: "V''(0)=0 curve",
                    iterations: it,
                    residual: fx.abs(),
                });
            }
        }
    }
    Err(Error::NoConvergence {
        what: "V''(0)=0 curve",
        iterations: 100,
        residual: fx.abs(),
    })
}

/// Damped Newton in `(nu, t0)` on `(V(t0), V'(t0)) = 0`.
fn first_order_newton(u: f64, g: f64, nu0: f64, t00: f64) -> Result<BoundaryPoint> {
    let what = "first-order curve";
    let eval = |nu: f64, t: f64| -> Result<_> {
        let ep = EffectivePotential::with_tol(ModelParams::new(u, g, nu), CURVE_TOL)?;
        let e = ep.eval(t)?;
        Ok((ep, e))
    };
    let (mut nu, mut t0) = (nu0, t00.max(1e-12));
    let (_, mut e) = eval(nu, t0)?;
    // residuals are compared on the natural scale of V near t0
    let resid = |e: &crate::potential::PotentialEval, t: f64| (e.value.abs() / (t * t * t)).max(e.d1.abs() / (t * t));
    let mut r = resid(&e, t0);
    let mut small_steps = 0;
    for it in 0..100 {
        let j = [[e.dot, e.d1], [e.dot_d1, e.d2]];
        let d = solve2(j, [e.value, e.d1], what)?;
        let tiny = d[0].abs() < 1e-13 * (1.0 + nu.abs()) && d[1].abs() < 1e-10 * t0;
        if tiny {
            nu -= d[0];
            t0 -= d[1];
            break;
        }
        let mut lambda = 1.0_f64;
        // keep t0 positive and the step moderate
        if t0 - d[1] < 0.2 * t0 {
            lambda = lambda.min(0.8 * t0 / d[1]);
        }
        let small = d[0].abs() < 1e-9 * (1.0 + nu.abs()) && d[1].abs() < 1e-6 * t0;
        if small {
            small_steps += 1;
            if small_steps > 3 {
                nu -= d[0];
                t0 -= d[1];
                break;
            }
        }
        let r_here = resid(&e, t0);
        let t_ref = t0;
        loop {
            let (nu1, t1) = (nu - lambda * d[0], t0 - lambda * d[1]);
            let ok = ModelParams::new(u, g, nu1).validate().is_ok() && t1 > 0.0;
            if ok {
                if let Ok((_, e1)) = eval(nu1, t1) {
                    let r1 = resid(&e1, t_ref);
                    // near convergence the residual is at its noise floor, take the step
                    if r1 < r_here || small {
                        nu = nu1;
                        t0 = t1;
                        e = e1;
                        r = resid(&e, t0);
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(Error::NoConvergence {
                    what,
                    iterations: it,
                    residual: r,
                });
            }
        }
        if it == 99 {
            return Err(Error::NoConvergence {
                what,
                iterations: 100,
                residual: r,
            });
        }
    }
    let (ep, e) = eval(nu, t0)?;
    let z = ep.at_zero();
    if e.value.abs() > 1e-10 || e.d1.abs() > 1e-10 {
        return Err(Error::NoConvergence {
            what,
            iterations: 100,
            residual: e.value.abs().max(e.d1.abs()),
        });
    }
    if !(z.d1 > 0.0) || !(e.d2 > 0.0) {
        return Err(Error::Verification {
            what,
            detail: format!("at ({g}, {nu}): V'(0) = {:e}, V''(t0) = {:e}, t0 = {t0}", z.d1, e.d2),
        });
    }
    Ok(BoundaryPoint {
        g,
        nu,
        kind: BoundaryKind::FirstOrder,
        t0: Some(t0),
        residuals: vec![e.value, e.d1],
    })
}

/// Point on the first-order curve at `g < g_c`. Without a hint the solve is
/// seeded from the expansion about the tricritical point and continued
/// toward `g` in steps.
pub fn first_order_point(u: f64, g: f64, hint: Option<(f64, f64)>) -> Result<BoundaryPoint> {
    if let Some((nu, t0)) = hint {
        return first_order_newton(u, g, nu, t0);
    }
    let tc = if u == 1.0 {
        tricritical_default()?
    } else {
        tricritical_solve(u, DEFAULT_TRICRITICAL_GUESS)?
    };
    let s = tc.g_c - g;
    if s < FIRST_ORDER_MIN_GAP {
        return Err(Error::InvalidArgument(format!(
            "first-order point needs g < g_c - {FIRST_ORDER_MIN_GAP:e} (g_c = {})",
            tc.g_c
        )));
    }
    let seed = |s: f64| -> (f64, f64) {
        let m2 = tc.moments[2];
        let nu_gg = tc.moments[4] - 2.0 * tc.moments[3] * m2 + m2.powi(3) + 0.75 * tc.b * tc.b / tc.alpha;
        let b3 = 1.5 * tc.b / tc.alpha;
        (tc.nu_c + m2 * s + 0.5 * nu_gg * s * s, b3 * s)
    };
    const SEED_GAP: f64 = 0.02;
    if s <= SEED_GAP {
        let (nu, t0) = seed(s);
        return first_order_newton(u, g, nu, t0);
    }
    let (nu, t0) = seed(SEED_GAP);
    let first = first_order_newton(u, tc.g_c - SEED_GAP, nu, t0)?;
    let (nu, t0) = seed(2.0 * SEED_GAP);
    let second = first_order_newton(u, tc.g_c - 2.0 * SEED_GAP, nu, t0)?;
    continue_first_order(u, &first, &second, g)
}

/// Walks the first-order curve from the last two points to `g` in substeps
/// no longer than the previous spacing allows.
fn continue_first_order(u: f64, p0: &BoundaryPoint, p1: &BoundaryPoint, g: f64) -> Result<BoundaryPoint> {
    const MAX_STEP: f64 = 0.05;
    let (mut before, mut last) = (p0.clone(), p1.clone());
    let dir = (g - last.g).signum();
    while (g - last.g).abs() > 1e-15 {
        let h = (1.5 * (last.g - before.g).abs()).min(MAX_STEP).min((g - last.g).abs());
        let gn = if h == (g - last.g).abs() { g } else { last.g + dir * h };
        let hint = predict(&last, Some(&before), gn);
        let p = first_order_newton(u, gn, hint.0, hint.1)?;
        before = last;
        last = p;
    }
    Ok(last)
}

/// Secant predictor in `(nu, t0)` from the last two points.
fn predict(p1: &BoundaryPoint, p0: Option<&BoundaryPoint>, g: f64) -> (f64, f64) {
    let t1 = p1.t0.unwrap_or(0.0);
    match p0 {
        Some(p0) if p0.g != p1.g => {
            let r = (g - p1.g) / (p1.g - p0.g);
            let t = t1 + r * (t1 - p0.t0.unwrap_or(0.0));
            (p1.nu + r * (p1.nu - p0.nu), if t > 0.0 { t } else { t1 })
        }
        _ => (p1.nu, t1),
    }
}

/// Traces the phase boundary on a `g` grid. Second-order points for
/// `g >= g_c`, first-order points below, and the tricritical point itself.
pub fn trace_boundary(u: f64, g_min: f64, g_max: f64, step: f64) -> Result<Vec<BoundaryPoint>> {
    if !(step > 0.0) || !(g_max >= g_min) {
        return Err(Error::InvalidArgument(format!(
            "trace needs g_min <= g_max and step > 0 (got {g_min}, {g_max}, {step})"
        )));
    }
    let tc = if u == 1.0 {
        tricritical_default()?
    } else {
        tricritical_solve(u, DEFAULT_TRICRITICAL_GUESS)?
    };
    let n = ((g_max - g_min) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| g_min + i as f64 * step).collect();
    let stop = |g: f64, e: Error| Error::TraceStopped { g, source: Box::new(e) };

    let mut upper = Vec::new();
    let mut last: Option<BoundaryPoint> = None;
    let mut before: Option<BoundaryPoint> = None;
    for &g in grid.iter().filter(|&&g| g >= tc.g_c) {
        let guess = match (&last, &before) {
            (Some(a), Some(b)) => Some(a.nu + (g - a.g) * (a.nu - b.nu) / (a.g - b.g)),
            (Some(a), None) => Some(a.nu - tc.moments[2] * (g - a.g)),
            _ => Some(tc.nu_c - tc.moments[2] * (g - tc.g_c)),
        };
        let p = if (g - tc.g_c).abs() < 1e-12 {
            BoundaryPoint {
                g,
                nu: tc.nu_c,
                kind: BoundaryKind::Tricritical,
                t0: None,
                residuals: vec![tc.residual],
            }
        } else {
            second_order_nu(u, g, guess).map_err(|e| stop(g, e))?
        };
        before = last.take();
        last = Some(p.clone());
        upper.push(p);
    }

    let mut lower = Vec::new();
    let mut last: Option<BoundaryPoint> = None;
    let mut before: Option<BoundaryPoint> = None;
    for &g in grid.iter().rev().filter(|&&g| g < tc.g_c - 1e-4) {
        let p = match (&last, &before) {
            (Some(a), Some(b)) => continue_first_order(u, b, a, g),
            (Some(a), None) => {
                let gap = tc.g_c - a.g;
                let b = first_order_point(u, tc.g_c - 0.5 * gap, None).map_err(|e| stop(g, e))?;
                continue_first_order(u, &b, a, g)
            }
            (None, _) => first_order_point(u, g, None),
        }
        .map_err(|e| stop(g, e))?;
        before = last.take();
        last = Some(p.clone());
        lower.push(p);
    }
    lower.reverse();

    let mut out = lower;
    if !upper.iter().any(|p| p.kind == BoundaryKind::Tricritical) && g_min <= tc.g_c && tc.g_c <= g_max {
        out.push(BoundaryPoint {
            g: tc.g_c,
            nu: tc.nu_c,
            kind: BoundaryKind::Tricritical,
            t0: None,
            residuals: vec![tc.residual],
        });
    }
    out.extend(upper);
    Ok(out)
}

/// Shared handle so callers can avoid re-solving the potential at a boundary point.
pub fn potential_at(p: &BoundaryPoint, u: f64) -> Result<Arc<EffectivePotential>> {
    Ok(Arc::new(EffectivePotential::with_tol(
        ModelParams::new(u, p.g, p.nu),
        CURVE_TOL,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tricritical_point_location() {
        let tc = tricritical_default().unwrap();
        assert!((tc.g_c + 3.2103).abs() < 2e-4, "{}", tc.g_c);
        assert!((tc.nu_c - 2.0772).abs() < 2e-4, "{}", tc.nu_c);
        assert!((tc.moments[0] - 1.0).abs() < 1e-10);
        assert!((tc.moments[1] - 1.0).abs() < 1e-10);
        assert!((tc.moments[2] - 1.4478).abs() < 1e-3);
        assert!((tc.alpha - 0.2762).abs() < 1e-3);
        assert!((tc.alpha - (1.0 - 0.5 * tc.moments[2])).abs() < 1e-9);
        assert!(tc.b > 0.0 && tc.a_coef > 0.0);
    }

    #[test]
    fn second_order_curve_passes_through_tricritical_point() {
        let tc = tricritical_default().unwrap();
        let (nu, _) = m0_curve_nu(1.0, tc.g_c, None).unwrap();
        assert!((nu - tc.nu_c).abs() < 2e-4);
        let p = vpp0_curve_nu(1.0, tc.g_c, None).unwrap();
        assert!((p.nu - tc.nu_c).abs() < 2e-4);
    }

    #[test]
    fn second_order_point_between_sample_points() {
        let p = second_order_nu(1.0, -2.7, None).unwrap();
        assert_eq!(p.kind, BoundaryKind::SecondOrder);
        assert!(p.nu > 1.2 && p.nu < 1.5, "{}", p.nu);
        assert!(p.residuals[0].abs() < 1e-11);
    }

    #[test]
    fn free_walk_second_order_point() {
        // M_0 = 1 / (1 + nu)
        let (nu, _) = m0_curve_nu(0.0, 0.0, None).unwrap();
        assert!(nu.abs() < 1e-12, "{nu}");
    }

    #[test]
    fn vpp0_curve_below_m0_curve() {
        let p = vpp0_curve_nu(1.0, -3.5, None).unwrap();
        assert!(p.residuals[0].abs() < 1e-10);
        let ep = EffectivePotential::from_params(ModelParams::cubic(-3.5, p.nu)).unwrap();
        assert!(ep.at_zero().d2.abs() < 1e-9);
        // V''(0) > 0 below the V''(0) = 0 curve, so on the second-order arc
        // the M_0 = 1 curve sits underneath it; past g_c the order flips
        let q = vpp0_curve_nu(1.0, -3.0, None).unwrap();
        assert!(q.nu > m0_curve_nu(1.0, -3.0, None).unwrap().0);
        assert!(p.nu < m0_curve_nu(1.0, -3.5, None).unwrap().0);
    }

    #[test]
    fn m0_curve_past_tricritical_point_is_not_a_boundary() {
        let p = second_order_nu(1.0, -3.6, None).unwrap();
        assert_eq!(p.kind, BoundaryKind::Vpp0Unchecked);
    }

    #[test]
    fn first_order_anchor() {
        let p = first_order_point(1.0, -3.7, None).unwrap();
        assert!((p.nu - 2.864).abs() < 2e-3, "{}", p.nu);
        let t0 = p.t0.unwrap();
        assert!(t0 > 0.0);
        let q = first_order_point(1.0, -4.4, None).unwrap();
        assert!(q.nu > 4.21 && q.nu < 4.26, "{}", q.nu);
        // refinement from a hint reproduces the same point
        let again = first_order_point(1.0, -3.7, Some((p.nu + 1e-3, t0 * 1.01))).unwrap();
        assert!((again.nu - p.nu).abs() < 1e-10);
    }

    #[test]
    fn first_order_root_scales_linearly_near_tricritical_point() {
        let tc = tricritical_default().unwrap();
        let b3 = 1.5 * tc.b / tc.alpha;
        let s = 1e-4;
        let p = first_order_point(1.0, tc.g_c - s, None).unwrap();
        assert!((p.t0.unwrap() / s / b3 - 1.0).abs() < 1e-2);
        assert!(first_order_point(1.0, tc.g_c - 1e-8, None).is_err());
    }

    #[test]
    fn trace_switches_kind_at_tricritical_point() {
        let pts = trace_boundary(1.0, -4.0, -2.5, 0.25).unwrap();
        let tc = tricritical_default().unwrap();
        let k = pts.iter().position(|p| p.kind == BoundaryKind::Tricritical).unwrap();
        assert!(pts[..k]
            .iter()
            .all(|p| p.kind == BoundaryKind::FirstOrder && p.g < tc.g_c));
        assert!(pts[k + 1..]
            .iter()
            .all(|p| p.kind == BoundaryKind::SecondOrder && p.g > tc.g_c));
        for w in pts.windows(2) {
            assert!(w[0].g < w[1].g);
            assert!(w[0].nu > w[1].nu);
        }
    }
}
