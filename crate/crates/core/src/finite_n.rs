//! Exact finite-`N` two-point function, susceptibility and expected length
//! from the one-dimensional reduced integrals
//! `I[F] = int_0^inf exp(-N V) (N V' F(t,t) - d1F(t,t)) dt`.
//!
//! Kernels are two-slot functions `F(x, y)`: the first slot is the argument
//! of `V` and its relatives, the second is the `|zeta|^2` slot. Only the
//! diagonal restrictions are needed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase::{interior_minima, InteriorMin, PhaseReport, DEFAULT_T_MAX};
use crate::potential::{EffectivePotential, PotentialEval};
use crate::quadrature::{integrate_vec, integrate_vec_noise, DecayHint, QuadOptions};

pub const FINITE_N_TOL: f64 = 1e-10;

/// Diagonal data of a two-slot kernel: `F(t,t)`, `d1F(t,t)` and `d2F(t,t)`,
/// each a function of the potential's derivative stack at `t`.
#[derive(Clone, Copy)]
pub struct KernelPair {
    pub name: &'static str,
    pub f: fn(&PotentialEval) -> f64,
    pub d1f: fn(&PotentialEval) -> f64,
    pub d2f: fn(&PotentialEval) -> f64,
}

impl std::fmt::Debug for KernelPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelPair").field("name", &self.name).finish()
    }
}

// Q = 1 - V', Q' = -V''; D = Vdot and its t-derivatives
fn q(e: &PotentialEval) -> f64 {
    1.0 - e.d1
}

pub const F01: KernelPair = KernelPair {
    name: "F01",
    f: |e| q(e).powi(2) * e.t,
    d1f: |e| -2.0 * q(e) * e.d2 * e.t,
    d2f: |e| q(e).powi(2),
};

/// Correction kernel in `G00`.
pub const FC: KernelPair = KernelPair {
    name: "Fc",
    f: |e| e.d2 * e.t,
    d1f: |e| e.d3 * e.t,
    d2f: |e| e.d2,
};

pub const K012: KernelPair = KernelPair {
    name: "K012",
    f: |e| e.t * q(e).powi(2) * e.dot,
    d1f: |e| e.t * (-2.0 * q(e) * e.d2 * e.dot + q(e).powi(2) * e.dot_d1),
    d2f: |e| q(e).powi(2) * e.dot,
};

pub const K001: KernelPair = KernelPair {
    name: "K001",
    f: |e| {
        let qq = q(e);
        (qq + qq * qq * e.t - e.d2 * e.t) * e.dot
    },
    d1f: |e| {
        let qq = q(e);
        (-e.d2 - 2.0 * qq * e.d2 * e.t - e.d3 * e.t) * e.dot + (qq + qq * qq * e.t - e.d2 * e.t) * e.dot_d1
    },
    d2f: |e| (q(e).powi(2) - e.d2) * e.dot,
};

pub const K011: KernelPair = KernelPair {
    name: "K011",
    f: |e| e.t * q(e) * (q(e) * e.dot + e.dot_d1),
    d1f: |e| {
        let qq = q(e);
        e.t * (-2.0 * qq * e.d2 * e.dot + qq * qq * e.dot_d1 - e.d2 * e.dot_d1 + qq * e.dot_d2)
    },
    d2f: |e| q(e) * (q(e) * e.dot + e.dot_d1),
};

pub const K000: KernelPair = KernelPair {
    name: "K000",
    f: |e| {
        let qq = q(e);
        (qq + qq * qq * e.t - e.d2 * e.t) * e.dot + (1.0 + 2.0 * qq * e.t) * e.dot_d1 + e.dot_d2 * e.t
    },
    d1f: |e| {
        let qq = q(e);
        let t = e.t;
        (-e.d2 - 2.0 * qq * e.d2 * t - e.d3 * t) * e.dot + (qq + qq * qq * t - e.d2 * t) * e.dot_d1
            - 2.0 * e.d2 * t * e.dot_d1
            + (1.0 + 2.0 * qq * t) * e.dot_d2
            + e.dot_d3 * t
    },
    d2f: |e| {
        let qq = q(e);
        (qq * qq - e.d2) * e.dot + 2.0 * qq * e.dot_d1 + e.dot_d2
    },
};

/// `F01` and the `G00` correction.
pub fn two_point_kernels() -> [KernelPair; 2] {
    [F01, FC]
}

/// `K012, K001, K011, K000`.
pub fn length_kernels() -> [KernelPair; 4] {
    [K012, K001, K011, K000]
}

const ALL: [KernelPair; 6] = [F01, FC, K012, K001, K011, K000];

/// A positive or signed quantity stored as `sign * exp(log)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub log: f64,
    pub sign: f64,
    pub rel_err: f64,
}

impl Estimate {
    fn from_parts(scale: f64, v: f64, abs_err: f64) -> Self {
        Estimate {
            log: scale + v.abs().ln(),
            sign: if v < 0.0 { -1.0 } else { 1.0 },
            rel_err: abs_err / v.abs(),
        }
    }

    /// Value in natural units; `inf` when it overflows.
    pub fn value(&self) -> f64 {
        self.sign * self.log.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteNObservables {
    pub n: f64,
    pub g00: Estimate,
    pub g01: Estimate,
    pub chi: Estimate,
    pub el: Estimate,
    pub rho_n: Estimate,
    /// True when `V` has an interior minimum at level `<= 0`; the plain
    /// values then grow like `exp(N |V(t0)|)` and may overflow.
    pub log_space: bool,
}

/// Raw reduced integrals for all six kernels on one shared partition:
/// `I_k = values[k] * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedIntegrals {
    pub n: f64,
    pub values: [f64; 6],
    pub abs_errors: [f64; 6],
    pub log_scale: f64,
}

/// Precomputed interior structure of `V` for repeated evaluations in `N`.
pub struct FiniteN<'a> {
    ep: &'a EffectivePotential,
    at_zero: PotentialEval,
    minima: Vec<InteriorMin>,
    rel_tol: f64,
}

impl<'a> FiniteN<'a> {
    pub fn new(ep: &'a EffectivePotential) -> Result<Self> {
        Ok(FiniteN {
            ep,
            at_zero: ep.at_zero(),
            minima: interior_minima(ep, DEFAULT_T_MAX)?,
            rel_tol: FINITE_N_TOL,
        })
    }

    /// Reuses the minima already found by `classify` on the same potential.
    pub fn from_report(ep: &'a EffectivePotential, report: &PhaseReport) -> Self {
        FiniteN {
            ep,
            at_zero: ep.at_zero(),
            minima: report.minima.clone(),
            rel_tol: FINITE_N_TOL,
        }
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Global interior minimum at level `<= 0`, if any.
    pub fn dense_minimum(&self) -> Option<InteriorMin> {
        self.minima
            .iter()
            .cloned()
            .filter(|m| m.value <= 0.0)
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }

    fn options(&self, n: f64) -> QuadOptions {
        let mut bp = Vec::new();
        let mut x = 1e-3 / n;
        while x < 10.0 {
            bp.push(x);
            x *= 2.0;
        }
        for m in &self.minima {
            let sigma = 1.0 / (n * m.d2).sqrt();
            for k in [-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
                let t = m.t + k * sigma;
                if t > 0.0 {
                    bp.push(t);
                }
            }
        }
        bp.sort_by(f64::total_cmp);
        QuadOptions::with_tol(self.rel_tol).breakpoints(bp)
    }

    /// Tail bound for `exp(-N V)` times the kernels: find `t1` past every
    /// minimum where `N (V - V_min)` exceeds 60 and `V' > 0`.
    fn tail(&self, n: f64) -> Result<DecayHint> {
        let vmin = self.minima.iter().map(|m| m.value).fold(0.0_f64, f64::min);
        let start = self.minima.iter().map(|m| m.t).fold(1e-3 / n, f64::max);
        let mut t1 = start * 1.5;
        for _ in 0..200 {
            let e = self.ep.eval(t1)?;
            if n * (e.value - vmin) > 60.0 && e.d1 > 0.0 {
                let rate = 0.5 * n * e.d1;
                let log_c = -n * e.value + (n * (1.0 + t1).powi(3) * 10.0).ln();
                return Ok(DecayHint::new(t1, rate, log_c));
            }
            t1 *= 1.5;
        }
        Err(Error::NonDecayingWeight(format!(
            "exp(-N V) does not decay by t = {t1} (N = {n})"
        )))
    }

    /// All six reduced integrals `I[F] = int exp(-NV)(N V' F - d1F)`.
    pub fn reduced(&self, n: f64) -> Result<ReducedIntegrals> {
        self.integrate(n, false)
    }

    /// The same integrals in the form `F(0,0) + int exp(-NV) d2F`; used as an
    /// independent check since the integrand has no cancellation.
    pub fn reduced_by_parts(&self, n: f64) -> Result<ReducedIntegrals> {
        self.integrate(n, true)
    }

    fn integrate(&self, n: f64, by_parts: bool) -> Result<ReducedIntegrals> {
        if !(n >= 1.0) {
            return Err(Error::InvalidArgument(format!("N must be at least 1, got {n}")));
        }
        let hint = self.tail(n)?;
        let opts = self.options(n);
        let ep = self.ep;
        let f = |t: f64| -> (f64, [f64; 6], [f64; 6]) {
            let e = match ep.eval(t) {
                Ok(e) => e,
                Err(_) => return (0.0, [f64::NAN; 6], [0.0; 6]),
            };
            let (vals, mut mags) = if by_parts {
                let v = ALL.map(|k| (k.d2f)(&e));
                (v, v.map(f64::abs))
            } else {
                (
                    ALL.map(|k| n * e.d1 * (k.f)(&e) - (k.d1f)(&e)),
                    ALL.map(|k| (n * e.d1 * (k.f)(&e)).abs() + (k.d1f)(&e).abs()),
                )
            };
            // Fc only matters next to G01 in G00; for a linear V it is pure
            // roundoff and is measured on the F01 scale
            mags[1] += mags[0];
            (-n * e.value, vals, mags)
        };
        let r = integrate_vec_noise(f, hint, &opts)?;
        let mut values = r.values;
        let mut abs_errors = r.abs_errors;
        let mut log_scale = r.log_scale;
        if by_parts {
            // F(0,0) enters without the exp(-N V) rescaling
            let boundary = ALL.map(|k| (k.f)(&self.at_zero));
            let shift = (-log_scale).exp();
            if shift.is_finite() {
                for k in 0..6 {
                    values[k] += boundary[k] * shift;
                }
            } else {
                // boundary terms are negligible against the rescaled integral
                let _ = &mut abs_errors;
            }
        }
        if log_scale.abs() < 1e-300 {
            log_scale = 0.0;
        }
        Ok(ReducedIntegrals {
            n,
            values,
            abs_errors,
            log_scale,
        })
    }

    pub fn observables(&self, n: f64) -> Result<FiniteNObservables> {
        let r = self.reduced(n)?;
        let mut o = assemble(&r, self.at_zero.d1)?;
        o.log_space = self.dense_minimum().is_some();
        Ok(o)
    }
}

/// Combines the reduced integrals into `G00, G01, chi, EL, rho_N`.
pub fn assemble(r: &ReducedIntegrals, vp0: f64) -> Result<FiniteNObservables> {
    let n = r.n;
    let [i01, ic, i012, i001, i011, i000] = r.values;
    let [e01, ec, e012, e001, e011, e000] = r.abs_errors;
    let l = r.log_scale;
    // constant (1 - V'(0)) expressed in the rescaled units
    let c0 = (1.0 - vp0) * (-l).exp();
    let g01 = i01;
    let g00 = c0 + i01 - ic;
    let chi = g00 + (n - 1.0) * g01;
    let chi_el = (n - 1.0) * (n - 2.0) * i012 + (n - 1.0) * (i001 + 2.0 * i011) + i000;
    let g00_err = e01 + ec;
    let chi_err = g00_err + (n - 1.0) * e01;
    let chi_el_err = (n - 1.0) * (n - 2.0) * e012 + (n - 1.0) * (e001 + 2.0 * e011) + e000;
    for (what, v) in [("G00", g00), ("G01", g01), ("chi", chi), ("chi*EL", chi_el)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Verification {
                what: "finite-N observables",
                detail: format!("{what} = {v:e} (rescaled by exp({l})) is not positive at N = {n}"),
            });
        }
    }
    let el_rel = chi_el_err / chi_el + chi_err / chi;
    let el = Estimate {
        log: chi_el.ln() - chi.ln(),
        sign: 1.0,
        rel_err: el_rel,
    };
    Ok(FiniteNObservables {
        n,
        g00: Estimate::from_parts(l, g00, g00_err),
        g01: Estimate::from_parts(l, g01, e01),
        chi: Estimate::from_parts(l, chi, chi_err),
        el,
        rho_n: Estimate {
            log: el.log - n.ln(),
            ..el
        },
        log_space: false,
    })
}

/// `I[F]` for a single kernel.
pub fn reduce_integral(ep: &EffectivePotential, kernel: &KernelPair, n: f64) -> Result<f64> {
    let fin = FiniteN::new(ep)?;
    let hint = fin.tail(n)?;
    let opts = fin.options(n);
    let r = integrate_vec(
        |t| match ep.eval(t) {
            Ok(e) => (-n * e.value, [n * e.d1 * (kernel.f)(&e) - (kernel.d1f)(&e)]),
            Err(_) => (0.0, [f64::NAN]),
        },
        hint,
        &opts,
    )?;
    Ok(r.totals()[0])
}

pub fn finite_n_observables(ep: &EffectivePotential, n: f64) -> Result<FiniteNObservables> {
    FiniteN::new(ep)?.observables(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use proptest::prelude::*;

    fn ep(g: f64, nu: f64) -> EffectivePotential {
        EffectivePotential::from_params(ModelParams::cubic(g, nu)).unwrap()
    }

    #[test]
    fn free_walk_closed_forms() {
        for nu in [0.5, 1.0, 3.0] {
            let e = EffectivePotential::from_params(ModelParams::free(nu)).unwrap();
            let c = nu / (1.0 + nu);
            for n in [3.0, 5.0, 10.0, 100.0] {
                let o = finite_n_observables(&e, n).unwrap();
                assert!((o.g01.value() - (1.0 - c).powi(2) / (n * c)).abs() < 1e-9);
                assert!((o.chi.value() - 1.0 / nu).abs() < 1e-9 / nu);
                assert!((o.el.value() - 1.0 / nu).abs() < 1e-9 / nu, "{nu} {n} {:?}", o.el);
                assert!(!o.log_space);
            }
        }
    }

    #[test]
    fn single_kernel_matches_shared_partition() {
        let e = ep(-2.7, 1.5);
        let fin = FiniteN::new(&e).unwrap();
        let r = fin.reduced(50.0).unwrap();
        let one = reduce_integral(&e, &K011, 50.0).unwrap();
        let shared = r.values[4] * r.log_scale.exp();
        assert!((one - shared).abs() < 1e-9 * one.abs());
    }

    #[test]
    fn by_parts_agrees() {
        for (g, nu, n) in [
            (-2.7, 1.5, 100.0),
            (-2.7, 1.2, 40.0),
            (0.0, 1.0, 3.0),
            (-3.5, 2.6, 20.0),
        ] {
            let e = ep(g, nu);
            let fin = FiniteN::new(&e).unwrap();
            let a = fin.reduced(n).unwrap();
            let b = fin.reduced_by_parts(n).unwrap();
            for ((kernel, &x), &y) in ALL.iter().zip(&a.values).zip(&b.values) {
                let va = x * (a.log_scale - b.log_scale).exp();
                let scale = va.abs().max(y.abs()).max(1e-300);
                assert!(
                    (va - y).abs() < 1e-8 * scale,
                    "{} at ({g},{nu}) N={n}: {va} vs {y}",
                    kernel.name
                );
            }
        }
    }

    #[test]
    fn linear_potential_cancellation() {
        // V = t with F = t: N * 1/N^2 - 1/N = 0
        let r = crate::quadrature::integrate_decaying(
            |t| (-7.0 * t).exp() * (7.0 * t - 1.0),
            DecayHint::exponential(7.0),
            1e-12,
        )
        .unwrap();
        assert!(r.value.abs() < 1e-13);
    }

    #[test]
    fn g01_expansion_matches_printed_form() {
        // (N V' Q + 2 V'') Q t
        let e = ep(-3.0, 2.0);
        let n = 17.0;
        for i in 0..20 {
            let t = 0.05 + 0.37 * i as f64;
            let s = e.eval(t).unwrap();
            let lhs = n * s.d1 * (F01.f)(&s) - (F01.d1f)(&s);
            let rhs = (n * s.d1 * q(&s) + 2.0 * s.d2) * q(&s) * t;
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn small_t_leading_orders() {
        let e = ep(-2.7, 1.5);
        let z = e.at_zero();
        let t = 1e-6;
        let s = e.eval(t).unwrap();
        let k012 = (K012.f)(&s) / ((1.0 - z.d1).powi(2) * z.dot_d1 * t * t);
        assert!((k012 - 1.0).abs() < 1e-4);
        assert!(((K000.f)(&s) / z.dot_d1 - 1.0).abs() < 1e-4);
        assert!(((K000.f)(&z) - e.moments()[1]).abs() < 1e-12);
        for k in ALL {
            assert!((k.f)(&z).is_finite() && (k.d1f)(&z).is_finite());
        }
    }

    type TwoSlot = fn(&PotentialEval, f64) -> f64;
    // two-slot forms F(x, y) with the stack taken at x
    const TWO_SLOT: [(KernelPair, TwoSlot); 6] = [
        (F01, |e, y| q(e).powi(2) * y),
        (FC, |e, y| e.d2 * y),
        (K012, |e, y| y * q(e).powi(2) * e.dot),
        (K001, |e, y| (q(e) + q(e).powi(2) * y - e.d2 * y) * e.dot),
        (K011, |e, y| y * q(e) * (q(e) * e.dot + e.dot_d1)),
        (K000, |e, y| {
            (q(e) + q(e).powi(2) * y - e.d2 * y) * e.dot + (1.0 + 2.0 * q(e) * y) * e.dot_d1 + e.dot_d2 * y
        }),
    ];

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn diagonal_partials_match_two_slot_differences(t in 0.05f64..4.0) {
            let e = ep(-3.3, 2.3);
            let h = 1e-4 * (1.0 + t);
            let (lo, mid, hi) = (e.eval(t - h).unwrap(), e.eval(t).unwrap(), e.eval(t + h).unwrap());
            for (k, two) in TWO_SLOT {
                prop_assert!(((k.f)(&mid) - two(&mid, t)).abs() < 1e-14 * (1.0 + two(&mid, t).abs()));
                let d1 = (two(&hi, t) - two(&lo, t)) / (2.0 * h);
                let d2 = (two(&mid, t + h) - two(&mid, t - h)) / (2.0 * h);
                let s1 = 1.0 + d1.abs();
                prop_assert!(((k.d1f)(&mid) - d1).abs() < 1e-6 * s1, "{} d1: {} vs {}", k.name, (k.d1f)(&mid), d1);
                prop_assert!(((k.d2f)(&mid) - d2).abs() < 1e-8 * (1.0 + d2.abs()), "{} d2", k.name);
            }
        }
    }

    #[test]
    fn expected_length_is_minus_log_derivative_of_chi() {
        // chi EL = -d chi / d nu
        for (g, nu, n) in [(-2.7, 1.5, 30.0), (-3.5, 2.6, 10.0), (-2.7, 1.2, 8.0)] {
            let chi = |nu: f64| finite_n_observables(&ep(g, nu), n).unwrap().chi.value();
            let h = 1e-4;
            let dchi = (chi(nu + h) - chi(nu - h)) / (2.0 * h);
            let o = finite_n_observables(&ep(g, nu), n).unwrap();
            let want = -dchi / o.chi.value();
            assert!(
                (o.el.value() / want - 1.0).abs() < 1e-6,
                "({g},{nu}) N={n}: {} vs {want}",
                o.el.value()
            );
        }
    }

    #[test]
    fn chi_identity_with_independent_integrands() {
        for (g, nu, n) in [(-2.7, 1.5, 1e3), (-2.7, 1.2, 1e3), (-4.4, 4.26, 50.0)] {
            let e = ep(g, nu);
            let fin = FiniteN::new(&e).unwrap();
            let o = fin.observables(n).unwrap();
            let b = assemble(&fin.reduced_by_parts(n).unwrap(), e.at_zero().d1).unwrap();
            let lhs = o.chi.log;
            // G00 + (N-1) G01 from the by-parts integrals against chi from the direct form
            let a = b.g00.log;
            let c = (n - 1.0).ln() + b.g01.log;
            let top = a.max(c);
            let rhs = top + ((a - top).exp() + (c - top).exp()).ln();
            let err = o.chi.rel_err + b.chi.rel_err + 1e-9;
            assert!((lhs - rhs).abs() < err.max(1e-8), "({g},{nu}): {lhs} vs {rhs}");
            assert!(o.g00.value() > 0.0 && o.g01.value() > 0.0 && o.el.value() > 0.0);
        }
    }

    #[test]
    fn dense_output_in_log_space() {
        let e = ep(-2.7, 1.2);
        let o = finite_n_observables(&e, 1e4).unwrap();
        assert!(o.log_space);
        assert!(o.chi.log > 700.0 || o.chi.log.is_finite());
        assert!(o.rho_n.value() > 0.0 && o.rho_n.value() < 10.0);
    }

    #[test]
    fn reusing_classify_minima_changes_nothing() {
        let e = ep(-2.7, 1.2);
        let report = crate::phase::classify(&e, crate::phase::DEFAULT_CLASSIFY_TOL).unwrap();
        let a = FiniteN::from_report(&e, &report).observables(50.0).unwrap();
        assert_eq!(a, finite_n_observables(&e, 50.0).unwrap());
    }

    #[test]
    fn rejects_small_n() {
        assert!(finite_n_observables(&ep(-2.7, 1.5), 0.5).is_err());
    }
}
