//! Moments `M_k`, the generating function `v(t)`, and the effective potential
//! `V(t) = t - log(1 + v(t))` with its `t`- and `nu`-derivatives.
//!
//! With `z = 2 sqrt(st)` and `R_n(z) = e^{-z} I_n(z) / (z/2)^n` every
//! integrand has the form `p(s) e^{-s} e^{z} * poly(s, t) * R_n(z)`:
//!
//! ```text
//! v    = ∫ E t R_1        vdot    = -∫ E s t R_1
//! v'   = ∫ E R_0          vdot'   = -∫ E s R_0
//! v''  = ∫ E s R_1        vdot''  = -∫ E s^2 R_1
//! v''' = ∫ E s^2 R_2      vdot''' = -∫ E s^3 R_2
//! ```
//!
//! where `E = p(s) e^{-s} e^{z}`. The `nu`-derivative multiplies the integrand
//! by `-s`. At `t = 0` these reduce to moments, and for small `t` the power
//! series `v(t) = sum_k M_k t^{k+1} / (k! (k+1)!)` is summed directly from
//! cached moments.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{make_polynomial_interaction, Interaction, ModelParams};
use crate::quadrature::{bump_shape, integrate_vec, QuadOptions};
use crate::specfun::scaled_ratios;

/// Moments cached for the small-`t` series.
pub const SERIES_MOMENTS: usize = 24;
/// Largest `t` at which the series is tried before falling back to quadrature.
pub const SERIES_T_MAX: f64 = 1.0;
pub const MOMENT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub params: Option<ModelParams>,
    pub m: Vec<f64>,
    pub err: Vec<f64>,
}

impl Moments {
    pub fn get(&self, k: usize) -> f64 {
        self.m[k]
    }
}

/// `M_k = ∫ p(s) e^{-s} s^k ds` for `k = 0..=kmax`, `kmax <= 8`.
pub fn moments(inter: &dyn Interaction, kmax: usize) -> Result<Moments> {
    if kmax > 8 {
        return Err(Error::InvalidArgument(format!("kmax {kmax} exceeds 8")));
    }
    let mut m = moments_upto::<9>(inter, 1e-11)?;
    m.m.truncate(kmax + 1);
    m.err.truncate(kmax + 1);
    Ok(m)
}

pub(crate) fn moments_upto<const K: usize>(inter: &dyn Interaction, tol: f64) -> Result<Moments> {
    let kmax = (K - 1) as f64;
    let shape = bump_shape(
        |s| inter.log_p(s) - s + kmax * (1.0 + s).ln(),
        |s| inter.dlog_p(s) - 1.0 + kmax / (1.0 + s),
        1.0,
    );
    let opts = QuadOptions::with_tol(tol).breakpoints(shape.breakpoints());
    let r = integrate_vec(
        |s| {
            let mut v = [1.0; K];
            for k in 1..K {
                v[k] = v[k - 1] * s;
            }
            (inter.log_p(s) - s, v)
        },
        shape.hint,
        &opts,
    )?;
    let f = r.log_scale.exp();
    Ok(Moments {
        params: inter.params(),
        m: r.values.iter().map(|v| v * f).collect(),
        err: r.abs_errors.iter().map(|v| v * f).collect(),
    })
}

/// `v` and its derivatives at one `t`, with the `nu`-derivatives.
///
/// All entries are stored relative to `exp(log_scale)`; `w` is `1 + v` and
/// `q` is `1 + v - v'` on the same scale. Only ratios enter `V`, so large `t`
/// never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VStack {
    pub t: f64,
    pub log_scale: f64,
    /// `[v, v', v'', v''']`
    pub v: [f64; 4],
    /// `[vdot, vdot', vdot'', vdot''']`
    pub vdot: [f64; 4],
    pub w: f64,
    pub q: f64,
    /// Largest absolute quadrature error among the entries, same scale.
    pub abs_err: f64,
}

impl VStack {
    /// Unscaled `[v, v', v'', v''']` (overflows for very large `t`).
    pub fn v_values(&self) -> [f64; 4] {
        let f = self.log_scale.exp();
        self.v.map(|x| x * f)
    }

    pub fn vdot_values(&self) -> [f64; 4] {
        let f = self.log_scale.exp();
        self.vdot.map(|x| x * f)
    }

    fn at_zero(m: &[f64]) -> Self {
        VStack {
            t: 0.0,
            log_scale: 0.0,
            v: [0.0, m[0], m[1], 0.5 * m[2]],
            vdot: [0.0, -m[1], -m[2], -0.5 * m[3]],
            w: 1.0,
            q: 1.0 - m[0],
            abs_err: 0.0,
        }
    }
}

/// `V` and derivatives at a point. `d1..d3` are `t`-derivatives; `dot*` are
/// `nu`-derivatives of `V`, `V'`, `V''`, `V'''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEval {
    pub t: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub dot: f64,
    pub dot_d1: f64,
    pub dot_d2: f64,
    pub dot_d3: f64,
    pub stack: VStack,
    /// Propagated absolute error estimate for the `V`-quantities.
    pub err: f64,
}

impl PotentialEval {
    pub fn from_stack(st: VStack) -> Result<Self> {
        if !(st.w > 0.0) {
            return Err(Error::Verification {
                what: "potential",
                detail: format!("1 + v = {} is not positive at t = {}", st.w, st.t),
            });
        }
        let w = st.w;
        let a1 = st.v[1] / w;
        let a2 = st.v[2] / w;
        let a3 = st.v[3] / w;
        let [d0, d1, d2, d3] = st.vdot.map(|x| x / w);
        // w * r^{(n)} for r = 1/w
        let r1 = -a1;
        let r2 = -a2 + 2.0 * a1 * a1;
        let r3 = -a3 + 6.0 * a1 * a2 - 6.0 * a1 * a1 * a1;
        let value = if st.log_scale == 0.0 {
            st.t - st.v[0].ln_1p()
        } else {
            st.t - st.log_scale - w.ln()
        };
        Ok(PotentialEval {
            t: st.t,
            value,
            d1: st.q / w,
            d2: -a2 + a1 * a1,
            d3: -a3 + 3.0 * a1 * a2 - 2.0 * a1 * a1 * a1,
            dot: -d0,
            dot_d1: -(d1 + d0 * r1),
            dot_d2: -(d2 + 2.0 * d1 * r1 + d0 * r2),
            dot_d3: -(d3 + 3.0 * d2 * r1 + 3.0 * d1 * r2 + d0 * r3),
            stack: st,
            err: st.abs_err / w * (1.0 + a1.abs()).powi(3),
        })
    }
}

/// Pure quadrature evaluation of the `v`-stack at `t > 0`.
pub fn quadrature_stack(inter: &dyn Interaction, t: f64, rel_tol: f64) -> Result<VStack> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("quadrature stack needs t > 0, got {t}")));
    }
    let sqrt_t = t.sqrt();
    let shape = bump_shape(
        |s| inter.log_p(s) - s + 2.0 * (s * t).sqrt() + 3.0 * (1.0 + s).ln(),
        |s| inter.dlog_p(s) - 1.0 + sqrt_t / s.sqrt() + 3.0 / (1.0 + s),
        t.max(1.0),
    );
    let opts = QuadOptions::with_tol(rel_tol).breakpoints(shape.breakpoints());
    let r = integrate_vec(
        |s| {
            let z = 2.0 * (s * t).sqrt();
            let [r0, r1, r2] = scaled_ratios(z);
            let s2 = s * s;
            (
                inter.log_p(s) - s + z,
                [
                    t * r1,
                    r0,
                    s * r1,
                    s2 * r2,
                    -s * t * r1,
                    -s * r0,
                    -s2 * r1,
                    -s2 * s * r2,
                ],
            )
        },
        shape.hint,
        &opts,
    )?;
    let l = r.log_scale;
    let x = r.values;
    let unit = (-l).exp();
    let abs_err = r.abs_errors.iter().cloned().fold(0.0, f64::max);
    Ok(VStack {
        t,
        log_scale: l,
        v: [x[0], x[1], x[2], x[3]],
        vdot: [x[4], x[5], x[6], x[7]],
        w: unit + x[0],
        q: unit + x[0] - x[1],
        abs_err,
    })
}

/// `[v, v', v'', v''']` at `t`; entries above `max_order` are zero.
pub fn v_and_derivs(inter: &dyn Interaction, t: f64, max_order: usize) -> Result<[f64; 4]> {
    let st = raw_stack(inter, t, max_order)?;
    let mut v = st.v_values();
    for x in v.iter_mut().skip(max_order + 1) {
        *x = 0.0;
    }
    Ok(v)
}

/// `[vdot, vdot', vdot'', vdot''']` at `t`; entries above `max_order` are zero.
pub fn vdot_and_derivs(inter: &dyn Interaction, t: f64, max_order: usize) -> Result<[f64; 4]> {
    let st = raw_stack(inter, t, max_order)?;
    let mut v = st.vdot_values();
    for x in v.iter_mut().skip(max_order + 1) {
        *x = 0.0;
    }
    Ok(v)
}

pub fn potential_eval(inter: &dyn Interaction, t: f64) -> Result<PotentialEval> {
    PotentialEval::from_stack(raw_stack(inter, t, 3)?)
}

fn raw_stack(inter: &dyn Interaction, t: f64, max_order: usize) -> Result<VStack> {
    if max_order > 3 {
        return Err(Error::InvalidArgument(format!(
            "derivative order {max_order} exceeds 3"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        let m = moments_upto::<5>(inter, 1e-11)?;
        return Ok(VStack::at_zero(&m.m));
    }
    quadrature_stack(inter, t, 1e-11)
}

/// Effective potential for one interaction, with cached moments for the
/// small-`t` series.
#[derive(Clone)]
pub struct EffectivePotential {
    inter: Arc<dyn Interaction>,
    m: Vec<f64>,
    rel_tol: f64,
}

impl std::fmt::Debug for EffectivePotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectivePotential")
            .field("params", &self.inter.params())
            .field("m0", &self.m[0])
            .field("m1", &self.m[1])
            .field("rel_tol", &self.rel_tol)
            .finish()
    }
}

impl EffectivePotential {
    pub fn new(inter: Arc<dyn Interaction>, rel_tol: f64) -> Result<Self> {
        let m = moments_upto::<{ SERIES_MOMENTS + 1 }>(&*inter, MOMENT_TOL)?.m;
        Ok(Self { inter, m, rel_tol })
    }

    pub fn from_params(params: ModelParams) -> Result<Self> {
        Self::with_tol(params, 1e-12)
    }

    pub fn with_tol(params: ModelParams, rel_tol: f64) -> Result<Self> {
        let inter = make_polynomial_interaction(params)?;
        Self::new(Arc::new(inter), rel_tol)
    }

    pub fn interaction(&self) -> &Arc<dyn Interaction> {
        &self.inter
    }

    pub fn params(&self) -> Option<ModelParams> {
        self.inter.params()
    }

    /// Cached `M_0..=M_24`.
    pub fn moments(&self) -> &[f64] {
        &self.m
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn stack(&self, t: f64) -> Result<VStack> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(VStack::at_zero(&self.m));
        }
        if t <= SERIES_T_MAX {
            if let Some(st) = self.series_stack(t) {
                return Ok(st);
            }
        }
        quadrature_stack(&*self.inter, t, self.rel_tol)
    }

    pub fn eval(&self, t: f64) -> Result<PotentialEval> {
        PotentialEval::from_stack(self.stack(t)?)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.value)
    }

    pub fn at_zero(&self) -> PotentialEval {
        PotentialEval::from_stack(VStack::at_zero(&self.m)).expect("w = 1 at the origin")
    }

    /// Sums the moment series; `None` if its tail is not negligible.
    pub fn series_stack(&self, t: f64) -> Option<VStack> {
        let m = &self.m;
        let kmax = m.len() - 1;
        // inv[k] = 1 / k!
        let mut inv = vec![1.0; kmax + 2];
        for k in 1..inv.len() {
            inv[k] = inv[k - 1] / k as f64;
        }
        let mut tp = vec![1.0; kmax + 2];
        for k in 1..tp.len() {
            tp[k] = tp[k - 1] * t;
        }
        let mut v = [0.0f64; 4];
        let mut vd = [0.0f64; 4];
        let mut last = [0.0f64; 8];
        // v^{(n)} = sum_{k >= n-1} M_k t^{k+1-n} / (k! (k+1-n)!), vdot: M_k -> -M_{k+1}
        for n in 0..4 {
            let k0 = (n as usize).saturating_sub(1);
            for k in k0..kmax {
                let n = n as usize;
                let c = tp[k + 1 - n] * inv[k] * inv[k + 1 - n];
                v[n] += m[k] * c;
                vd[n] -= m[k + 1] * c;
                last[n] = (m[k] * c).abs();
                last[4 + n] = (m[k + 1] * c).abs();
            }
        }
        let mut q = 1.0 - m[0];
        let mut q_abs = (1.0 - m[0]).abs() + m[0];
        let mut q_last = 0.0;
        for j in 1..=kmax {
            let term = tp[j] * (j as f64 * m[j - 1] - m[j]) * inv[j] * inv[j];
            q += term;
            q_abs += term.abs();
            q_last = term.abs();
        }
        let sums = [v[0], v[1], v[2], v[3], vd[0], vd[1], vd[2], vd[3]];
        let ok = (0..8).all(|i| last[i] <= 1e-17 * sums[i].abs().max(1e-300)) && q_last <= 1e-17 * q_abs;
        if !ok {
            return None;
        }
        Some(VStack {
            t,
            log_scale: 0.0,
            v,
            vdot: vd,
            w: 1.0 + v[0],
            q,
            abs_err: 1e-13 * (1.0 + v[1] + v[2] + v[3]),
        })
    }
}
