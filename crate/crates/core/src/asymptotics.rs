//! Laplace-method asymptotics and the large-`N` laws for the two-point
//! function, susceptibility and expected length, plus the constants that
//! govern how `t0` opens up near the tricritical point.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::curves::{TricriticalPoint, CURVE_TOL};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::phase::{interior_minima, PhaseLabel, PhaseReport, DEFAULT_T_MAX};
use crate::potential::EffectivePotential;

/// `exp(exp_rate * N) * N^n_power * prefactor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticLaw {
    pub exp_rate: f64,
    pub n_power: f64,
    pub prefactor: f64,
    pub region: PhaseLabel,
}

impl AsymptoticLaw {
    fn new(exp_rate: f64, n_power: f64, prefactor: f64, region: PhaseLabel) -> Self {
        AsymptoticLaw {
            exp_rate,
            n_power,
            prefactor,
            region,
        }
    }

    /// `log` of the law at `n`; `-inf` for a zero law.
    pub fn log_value(&self, n: f64) -> f64 {
        self.exp_rate * n + self.n_power * n.ln() + self.prefactor.ln()
    }

    /// The law at `n`; overflows to `inf` for large dense-phase `n`.
    pub fn value(&self, n: f64) -> f64 {
        if self.prefactor == 0.0 {
            return 0.0;
        }
        self.log_value(n).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceEndpointData {
    /// Order of vanishing of `V - V(a)` at the endpoint.
    pub mu: u32,
    pub v0: f64,
    pub lambda: f64,
    pub q0: f64,
}

/// `exp(-N V(a)) q0 Gamma(lambda/mu) / (mu (v0 N)^(lambda/mu))`.
pub fn laplace_endpoint(d: &LaplaceEndpointData, n: f64, v_at_a: f64) -> Result<f64> {
    if !(1..=3).contains(&d.mu) {
        return Err(Error::InvalidArgument(format!(
            "endpoint order mu = {} not in 1..=3",
            d.mu
        )));
    }
    if !(d.v0 > 0.0) || !(d.lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "endpoint Laplace needs v0 > 0 and lambda > 0 (v0 = {}, lambda = {})",
            d.v0, d.lambda
        )));
    }
    let mu = d.mu as f64;
    let r = d.lambda / mu;
    Ok((-n * v_at_a).exp() * d.q0 * gamma(r) / (mu * (d.v0 * n).powf(r)))
}

/// First two interior expansion coefficients for `int exp(-N V) q` about a
/// non-degenerate minimum, given `V''..V''''` and `q, q', q''` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceInteriorData {
    pub t0: f64,
    pub b0: f64,
    pub b1: f64,
}

impl LaplaceInteriorData {
    pub fn new(t0: f64, v: [f64; 3], q: [f64; 3]) -> Result<Self> {
        let [v2, v3, v4] = v;
        if !(v2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "interior Laplace needs V''(t0) > 0, got {v2}"
            )));
        }
        let b0 = q[0] / (2.0 * v2).sqrt();
        let b1 = (2.0 * q[2] - 2.0 * v3 * q[1] / v2 + (5.0 * v3 * v3 / (6.0 * v2 * v2) - v4 / (2.0 * v2)) * q[0])
            / (2.0 * v2).powf(1.5);
        Ok(LaplaceInteriorData { t0, b0, b1 })
    }

    /// Two-sided sum `2 sum_s Gamma(s+1/2) b_s N^-(s+1/2)`, without `exp(-N V(t0))`;
    /// `terms` is 1 or 2.
    pub fn sum(&self, n: f64, terms: usize) -> f64 {
        let lead = 2.0 * gamma(0.5) * self.b0 / n.sqrt();
        if terms < 2 {
            lead
        } else {
            lead + 2.0 * gamma(1.5) * self.b1 / n.powf(1.5)
        }
    }
}

/// Leading interior Laplace term from `V(t0)`, `V''(t0)` and `d2F(t0, t0)`.
pub fn laplace_interior_with(vt0: f64, vpp_t0: f64, d2f: f64, n: f64) -> Result<f64> {
    if !(vpp_t0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "interior Laplace needs V''(t0) > 0, got {vpp_t0}"
        )));
    }
    Ok((-n * vt0).exp() * (2.0 * PI).sqrt() / (vpp_t0.sqrt() * n.sqrt()) * d2f)
}

/// Leading interior Laplace term for the effective potential at `t0`.
pub fn laplace_interior(ep: &EffectivePotential, t0: f64, d2f: f64, n: f64) -> Result<f64> {
    let e = ep.eval(t0)?;
    laplace_interior_with(e.value, e.d2, d2f, n)
}

/// `sqrt(2 pi) / sqrt(V'')`: interior chi prefactor.
pub fn dense_chi_prefactor(vpp: f64) -> f64 {
    (2.0 * PI).sqrt() / vpp.sqrt()
}

/// `Gamma(3/2) / (V''(0)/2)^(1/2)`: chi prefactor on the second-order curve.
pub fn second_order_chi_prefactor(vpp0: f64) -> f64 {
    gamma(1.5) / (0.5 * vpp0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub g00: AsymptoticLaw,
    pub g01: AsymptoticLaw,
    pub chi: AsymptoticLaw,
    pub el: AsymptoticLaw,
    pub rho: AsymptoticLaw,
}

/// Large-`N` laws for the region in `report`.
pub fn observable_laws(ep: &EffectivePotential, report: &PhaseReport) -> Result<Observables> {
    let z = ep.at_zero();
    let (vp0, vpp0, vppp0, vdotp0) = (z.d1, z.d2, z.d3, z.dot_d1);
    let region = report.label;
    let law = |r: f64, p: f64, c: f64| AsymptoticLaw::new(r, p, c, region);
    let out = match region {
        PhaseLabel::Dilute => Observables {
            g00: law(0.0, 0.0, 1.0 - vp0),
            g01: law(0.0, -1.0, (1.0 - vp0).powi(2) / vp0),
            chi: law(0.0, 0.0, (1.0 - vp0) / vp0),
            el: law(0.0, 0.0, vdotp0 / (vp0 * (1.0 - vp0))),
            rho: law(0.0, 0.0, 0.0),
        },
        PhaseLabel::SecondOrderCurve => {
            let c = (0.5 * vpp0).sqrt();
            Observables {
                g00: law(0.0, 0.0, 1.0),
                g01: law(0.0, -0.5, gamma(1.5) / c),
                chi: law(0.0, 0.5, gamma(1.5) / c),
                el: law(0.0, 0.5, vdotp0 / (gamma(0.5) * c)),
                rho: law(0.0, 0.0, 0.0),
            }
        }
        PhaseLabel::Tricritical => {
            let c = (vppp0 / 6.0).cbrt();
            Observables {
                g00: law(0.0, 0.0, 1.0),
                g01: law(0.0, -1.0 / 3.0, gamma(4.0 / 3.0) / c),
                chi: law(0.0, 2.0 / 3.0, gamma(4.0 / 3.0) / c),
                el: law(0.0, 2.0 / 3.0, gamma(2.0 / 3.0) / gamma(1.0 / 3.0) / c),
                rho: law(0.0, 0.0, 0.0),
            }
        }
        PhaseLabel::Dense | PhaseLabel::FirstOrderCurve => {
            let t0 = report
                .t0
                .ok_or(Error::MissingWitness("t0 for dense or first-order laws"))?;
            let e = ep.eval(t0)?;
            let rate = if region == PhaseLabel::Dense {
                e.value.abs()
            } else {
                0.0
            };
            let pre = dense_chi_prefactor(e.d2);
            let g00 = if region == PhaseLabel::Dense {
                law(rate, -0.5, pre * (1.0 - e.d2))
            } else {
                law(0.0, 0.0, 1.0 - vp0)
            };
            Observables {
                g00,
                g01: law(rate, -0.5, pre),
                chi: law(rate, 0.5, pre),
                el: law(0.0, 1.0, e.dot),
                rho: law(0.0, 0.0, e.dot),
            }
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TricriticalConstants {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub nu_gg_second: f64,
    pub nu_gg_first: f64,
}

pub fn tricritical_constants(tc: &TricriticalPoint) -> Result<TricriticalConstants> {
    let m = &tc.moments;
    let alpha = 1.0 - 0.5 * m[2];
    let b = m[3] - m[2] * m[2];
    let a = 0.5 * (m[4] - 2.0 * m[2] * m[3] + m[2].powi(3));
    if !(alpha > 0.0) || !(b > 0.0) {
        return Err(Error::Verification {
            what: "tricritical constants",
            detail: format!("alpha = {alpha}, b = {b}; both must be positive"),
        });
    }
    let root = (b * b + 2.0 * alpha * a).sqrt();
    let nu_gg_second = m[4] - 2.0 * m[3] * m[2] + m[2].powi(3);
    let c = TricriticalConstants {
        a,
        alpha,
        b,
        b0: (2.0 / alpha).sqrt(),
        b1: (root - b) / alpha,
        b2: (root + b) / alpha,
        b3: 1.5 * b / alpha,
        nu_gg_second,
        nu_gg_first: nu_gg_second + 0.75 * b * b / alpha,
    };
    if !(c.b1 > 0.0 && c.b2 > 0.0 && c.b3 > 0.0) {
        return Err(Error::Verification {
            what: "tricritical constants",
            detail: format!("{c:?}"),
        });
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Dilute,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproachRow {
    pub s: f64,
    pub g: f64,
    pub nu: f64,
    pub t0: Option<f64>,
    pub rho: Option<f64>,
    pub chi: Option<f64>,
}

/// `y ~ amplitude * s^exponent` by least squares in log-log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproachTable {
    pub base: (f64, f64),
    pub direction: [f64; 2],
    pub side: Side,
    pub rows: Vec<ApproachRow>,
    /// Fit of `chi` (dilute side) or `t0` (dense side) over the smallest decade of `s`.
    pub fit: PowerFit,
}

pub fn fit_power(xy: &[(f64, f64)]) -> Result<PowerFit> {
    if xy.len() < 2 {
        return Err(Error::InvalidArgument("power fit needs at least two points".into()));
    }
    let pts: Vec<(f64, f64)> = xy.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(Error::InvalidArgument(
            "power fit needs distinct positive abscissae".into(),
        ));
    }
    let k = sxy / sxx;
    Ok(PowerFit {
        exponent: k,
        amplitude: (my - k * mx).exp(),
        points: pts.len(),
    })
}

/// Newton on `V'` from `t` until the step is below `1e-14 t`.
fn refine_minimum(ep: &EffectivePotential, mut t: f64) -> Result<f64> {
    for _ in 0..50 {
        let e = ep.eval(t)?;
        let dt = e.d1 / e.d2;
        if !(e.d2 > 0.0) || !dt.is_finite() {
            break;
        }
        let next = if t - dt > 0.5 * t { t - dt } else { 0.5 * t };
        let done = (next - t).abs() < 1e-14 * t;
        t = next;
        if done {
            break;
        }
    }
    Ok(t)
}

fn approach_row(u: f64, base: (f64, f64), m: [f64; 2], s: f64, side: Side) -> Result<ApproachRow> {
    let (g, nu) = (base.0 + s * m[0], base.1 + s * m[1]);
    let ep = EffectivePotential::with_tol(ModelParams::new(u, g, nu), CURVE_TOL)?;
    let wrong = |detail: String| Error::WrongRegion { s, detail };
    let z = ep.at_zero();
    let mins = interior_minima(&ep, DEFAULT_T_MAX)?;
    let global = mins.iter().min_by(|a, b| a.value.total_cmp(&b.value));
    match side {
        Side::Dilute => {
            if !(z.d1 > 0.0) {
                return Err(wrong(format!("V'(0) = {:e} at ({g}, {nu}) is not positive", z.d1)));
            }
            if let Some(m) = global.filter(|m| m.value <= 0.0) {
                return Err(wrong(format!(
                    "interior minimum V({}) = {:e} at ({g}, {nu})",
                    m.t, m.value
                )));
            }
            Ok(ApproachRow {
                s,
                g,
                nu,
                t0: None,
                rho: None,
                chi: Some((1.0 - z.d1) / z.d1),
            })
        }
        Side::Dense => {
            let m = global.ok_or_else(|| wrong(format!("no interior minimum at ({g}, {nu})")))?;
            let t0 = refine_minimum(&ep, m.t)?;
            let e = ep.eval(t0)?;
            if !(e.value < 0.0) {
                return Err(wrong(format!("V(t0) = {:e} at ({g}, {nu}) is not negative", e.value)));
            }
            Ok(ApproachRow {
                s,
                g,
                nu,
                t0: Some(t0),
                rho: Some(e.dot),
                chi: None,
            })
        }
    }
}

/// Samples `(g, nu) = base + s m` for each `s`, checks the side, and fits the
/// dilute `chi` or the dense `t0` against `s` on the smallest decade.
pub fn approach_scaling(u: f64, base: (f64, f64), m: [f64; 2], s_values: &[f64], side: Side) -> Result<ApproachTable> {
    if s_values.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("approach parameters s must be positive".into()));
    }
    let rows: Vec<ApproachRow> = s_values
        .par_iter()
        .map(|&s| approach_row(u, base, m, s, side))
        .collect::<Result<_>>()?;
    let s_min = s_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.s <= 10.0 * s_min * (1.0 + 1e-12))
        .map(|r| (r.s, r.chi.or(r.t0).unwrap()))
        .collect();
    let fit = fit_power(&pts)?;
    Ok(ApproachTable {
        base,
        direction: m,
        side,
        rows,
        fit,
    })
}

/// `n` points geometric between `10^-lo` and `10^-hi` (`lo < hi`), decreasing.
pub fn geometric_s(lo_decade: f64, hi_decade: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(-(lo_decade + (hi_decade - lo_decade) * i as f64 / (n.max(2) - 1) as f64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{second_order_nu, tricritical_default};
    use crate::phase::{classify, DEFAULT_CLASSIFY_TOL};

    #[test]
    fn endpoint_trivial_integrals() {
        let d = LaplaceEndpointData {
            mu: 1,
            v0: 1.0,
            lambda: 1.0,
            q0: 1.0,
        };
        assert!((laplace_endpoint(&d, 50.0, 0.0).unwrap() - 1.0 / 50.0).abs() < 1e-15);
        let d = LaplaceEndpointData { lambda: 2.0, ..d };
        assert!((laplace_endpoint(&d, 50.0, 0.0).unwrap() - 1.0 / 2500.0).abs() < 1e-15);
        assert!(laplace_endpoint(&LaplaceEndpointData { v0: 0.0, ..d }, 5.0, 0.0).is_err());
        assert!(laplace_endpoint(&LaplaceEndpointData { lambda: -1.0, ..d }, 5.0, 0.0).is_err());
    }

    #[test]
    fn endpoint_gamma_identity() {
        for mu in 1..=3u32 {
            for lambda in [1.0, 2.0, 3.0, 4.0] {
                let r = lambda / mu as f64;
                let lhs = gamma((mu as f64 + lambda) / mu as f64);
                assert!((lhs - r * gamma(r)).abs() < 1e-12 * lhs);
            }
        }
    }

    #[test]
    fn endpoint_matches_tricritical_g01_form() {
        let v3 = 0.2762;
        let n = 1e5;
        let d = LaplaceEndpointData {
            mu: 3,
            v0: v3 / 6.0,
            lambda: 1.0,
            q0: 1.0,
        };
        // q0 = 1, lambda = 1 gives Gamma(1/3)/(3 (v0 N)^(1/3)) = Gamma(4/3)/(v0 N)^(1/3)
        let want = gamma(4.0 / 3.0) / (v3 / 6.0 * n).cbrt();
        assert!((laplace_endpoint(&d, n, 0.0).unwrap() / want - 1.0).abs() < 1e-13);
    }

    #[test]
    fn interior_gaussian() {
        for n in [10.0, 100.0, 1e4] {
            let got = laplace_interior_with(0.0, 2.0, 1.0, n).unwrap();
            assert!((got / (PI / n).sqrt() - 1.0).abs() < 1e-14);
        }
        assert!(laplace_interior_with(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn interior_second_coefficient_on_exact_oracles() {
        // V = (t-1)^2, q = t^2: integral sqrt(pi/N) (1 + 1/(2N)) exactly
        let d = LaplaceInteriorData::new(1.0, [2.0, 0.0, 0.0], [1.0, 2.0, 2.0]).unwrap();
        for n in [5.0, 50.0, 500.0] {
            let exact = (PI / n).sqrt() * (1.0 + 0.5 / n);
            assert!((d.sum(n, 2) / exact - 1.0).abs() < 1e-14);
        }
        // V = 1 - cos t, q = 1: 2 pi e^-N I0(N) = sqrt(2 pi / N)(1 + 1/(8N) + 9/(128 N^2) + ...)
        let d = LaplaceInteriorData::new(0.0, [1.0, 0.0, -1.0], [1.0, 0.0, 0.0]).unwrap();
        for n in [100.0, 1000.0] {
            let exact = 2.0 * PI * crate::specfun::bessel_i_scaled(0, n).unwrap();
            let one = (d.sum(n, 1) / exact - 1.0).abs();
            let two = (d.sum(n, 2) / exact - 1.0).abs();
            assert!(two < 0.1 / (n * n), "{two}");
            assert!(two < one / 10.0);
        }
    }

    #[test]
    fn factor_two_between_dense_and_second_order_prefactors() {
        for vpp in [0.01, 0.3, 1.0, 7.0] {
            let r = dense_chi_prefactor(vpp) / second_order_chi_prefactor(vpp);
            assert!((r - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn free_walk_dilute_laws() {
        let ep = EffectivePotential::from_params(ModelParams::free(1.0)).unwrap();
        let rep = classify(&ep, DEFAULT_CLASSIFY_TOL).unwrap();
        let laws = observable_laws(&ep, &rep).unwrap();
        assert!((laws.chi.value(1e3) - 1.0).abs() < 1e-10);
        assert!((laws.el.value(1e3) - 1.0).abs() < 1e-10);
        assert!((laws.g00.prefactor - 0.5).abs() < 1e-10);
        assert_eq!(laws.rho.value(1e3), 0.0);
    }

    #[test]
    fn dense_laws_have_exponential_rate() {
        let ep = EffectivePotential::from_params(ModelParams::cubic(-2.7, 1.2)).unwrap();
        let rep = classify(&ep, DEFAULT_CLASSIFY_TOL).unwrap();
        let laws = observable_laws(&ep, &rep).unwrap();
        assert!(laws.chi.exp_rate > 0.0);
        assert_eq!(laws.chi.exp_rate, laws.g01.exp_rate);
        assert!(laws.rho.prefactor > 0.0);
        assert!(laws.g00.prefactor > 0.0);
        assert_eq!(laws.el.n_power, 1.0);
        let mut r = rep.clone();
        r.t0 = None;
        assert!(matches!(observable_laws(&ep, &r), Err(Error::MissingWitness(_))));
    }

    #[test]
    fn constants_from_tricritical_moments() {
        let tc = tricritical_default().unwrap();
        let c = tricritical_constants(&tc).unwrap();
        assert!((c.b0 - 2.0 / (2.0 - tc.moments[2]).sqrt()).abs() < 1e-12);
        assert!((c.b0 - 2.6915).abs() < 2e-3);
        assert!((c.b - 0.3101).abs() < 2e-3);
        assert!((c.alpha - 0.2762).abs() < 1e-3);
        assert!(c.b2 > c.b1);
        assert!((c.b2 - c.b1 - 2.0 * c.b / c.alpha).abs() < 1e-12);
    }

    #[test]
    fn power_fit_recovers_exact_law() {
        let xy: Vec<(f64, f64)> = [1e-3, 3e-3, 1e-2]
            .iter()
            .map(|&s: &f64| (s, 2.5 * s.powf(-0.75)))
            .collect();
        let f = fit_power(&xy).unwrap();
        assert!((f.exponent + 0.75).abs() < 1e-12);
        assert!((f.amplitude - 2.5).abs() < 1e-10);
    }

    #[test]
    fn second_order_tangential_t0_is_quadratic() {
        let p = second_order_nu(1.0, -2.7, None).unwrap();
        let ep = EffectivePotential::with_tol(ModelParams::cubic(p.g, p.nu), CURVE_TOL).unwrap();
        let m = ep.moments();
        let dir = [m[1], -m[2]];
        let a = 0.5 * (m[1] * m[1] * m[4] - 2.0 * m[1] * m[2] * m[3] + m[2].powi(3));
        let t = approach_scaling(1.0, (p.g, p.nu), dir, &geometric_s(2.0, 3.0, 4), Side::Dense).unwrap();
        assert!((t.fit.exponent - 2.0).abs() < 0.05, "{:?}", t.fit);
        assert!((t.fit.amplitude / (a / (1.0 - m[1])) - 1.0).abs() < 0.1, "{:?}", t.fit);
    }

    #[test]
    fn wrong_side_is_reported() {
        let p = second_order_nu(1.0, -2.7, None).unwrap();
        let e = approach_scaling(1.0, (p.g, p.nu), [0.0, 1.0], &[1e-3], Side::Dense).unwrap_err();
        assert!(matches!(e, Error::WrongRegion { .. }));
    }
}
