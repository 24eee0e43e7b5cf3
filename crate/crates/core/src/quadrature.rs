//! Adaptive Gauss–Kronrod integration on `[0, ∞)` for integrands with a known
//! exponential tail.
//!
//! The half line is truncated at a point derived from a [`DecayHint`], the
//! finite piece is covered by 21-point Kronrod panels refined by bisection, and
//! the truncation point is then checked against the integrand itself.
//!
//! Integrands are supplied in log-magnitude form: a closure returns
//! `(log_mag, vals)` and the `k`-th component is `vals[k] * exp(log_mag)`.
//! Panels are accumulated relative to the running maximum of `log_mag`, so
//! results like `∫ e^{-N V(t)} ...` with `N V` in the thousands stay finite;
//! the shift comes back as [`QuadResult::log_scale`].

use crate::error::QuadError;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const MIN_REL_TOL: f64 = 1e-13;
pub const MAX_REL_TOL: f64 = 1e-3;
pub const ABS_FLOOR: f64 = 1e-300;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208932990108,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the odd-indexed nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Tail bound `|f(s)| <= exp(log_c - rate * (s - s0))` for `s >= s0`.
///
/// In log-magnitude mode `log_c` is measured in the same units as the
/// integrand's `log_mag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayHint {
    pub s0: f64,
    pub rate: f64,
    pub log_c: f64,
}

impl DecayHint {
    pub fn new(s0: f64, rate: f64, log_c: f64) -> Self {
        Self { s0, rate, log_c }
    }

    /// `|f(s)| <= e^{-rate s}`.
    pub fn exponential(rate: f64) -> Self {
        Self {
            s0: 0.0,
            rate,
            log_c: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Interior points that seed the initial panel partition. Narrow peaks
    /// must be announced here, or a coarse panel can step over them.
    pub breakpoints: Vec<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            max_panels: 4000,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn breakpoints(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(pts);
        self
    }
}

/// Scalar result. The integral is `value * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub truncation_point: f64,
    pub log_scale: f64,
}

impl QuadResult {
    /// The integral in natural units (may overflow for large `log_scale`).
    pub fn total(&self) -> f64 {
        if self.log_scale == 0.0 {
            self.value
        } else {
            self.value * self.log_scale.exp()
        }
    }
}

/// Vector result; component `k` of the integral is `values[k] * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecQuadResult<const K: usize> {
    pub values: [f64; K],
    pub abs_errors: [f64; K],
    pub evaluations: usize,
    pub truncation_point: f64,
    pub log_scale: f64,
}

impl<const K: usize> VecQuadResult<K> {
    pub fn totals(&self) -> [f64; K] {
        let f = if self.log_scale == 0.0 {
            1.0
        } else {
            self.log_scale.exp()
        };
        self.values.map(|v| v * f)
    }

    pub fn component(&self, k: usize) -> QuadResult {
        QuadResult {
            value: self.values[k],
            abs_error_estimate: self.abs_errors[k],
            evaluations: self.evaluations,
            truncation_point: self.truncation_point,
            log_scale: self.log_scale,
        }
    }
}

/// Integrates a plain real-valued `f` over `[0, ∞)`.
pub fn integrate_decaying<F>(f: F, hint: DecayHint, rel_tol: f64) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_vec(|s| (0.0, [f(s)]), hint, &QuadOptions::with_tol(rel_tol))?;
    Ok(r.component(0))
}

/// Integrates `sign(s) * exp(log_mag(s))` given as `(log_mag, sign_or_factor)`.
pub fn integrate_log<F>(f: F, hint: DecayHint, opts: &QuadOptions) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> (f64, f64),
{
    let r = integrate_vec(
        |s| {
            let (l, v) = f(s);
            (l, [v])
        },
        hint,
        opts,
    )?;
    Ok(r.component(0))
}

#[derive(Clone, Copy)]
struct Panel<const K: usize> {
    a: f64,
    b: f64,
    val: [f64; K],
    err: [f64; K],
    l1: [f64; K],
    /// Integral of the per-component roundoff magnitude.
    noise: [f64; K],
}

struct Integrator<'f, const K: usize, F> {
    f: &'f F,
    shift: f64,
    panels: Vec<Panel<K>>,
    evaluations: usize,
}

impl<'f, const K: usize, F> Integrator<'f, K, F>
where
    F: Fn(f64) -> (f64, [f64; K], [f64; K]),
{
    fn eval(&mut self, s: f64) -> Result<(f64, [f64; K], [f64; K]), QuadError> {
        self.evaluations += 1;
        let (l, v, m) = (self.f)(s);
        if l.is_nan() || l == f64::INFINITY || v.iter().chain(m.iter()).any(|x| !x.is_finite()) {
            return Err(QuadError::NaN { abscissa: s });
        }
        Ok((l, v, m))
    }

    /// One Gauss–Kronrod panel, stored relative to the current shift.
    fn panel(&mut self, a: f64, b: f64) -> Result<Panel<K>, QuadError> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut logs = [0.0; 21];
        let mut vals = [[0.0; K]; 21];
        let mut mags = [[0.0; K]; 21];
        // index 0..10 left of centre (XGK order), 10 = centre, 11..20 right
        for j in 0..10 {
            let (l, v, m) = self.eval(c - h * XGK[j])?;
            logs[j] = l;
            vals[j] = v;
            mags[j] = m;
            let (l, v, m) = self.eval(c + h * XGK[j])?;
            logs[20 - j] = l;
            vals[20 - j] = v;
            mags[20 - j] = m;
        }
        let (l, v, m) = self.eval(c)?;
        logs[10] = l;
        vals[10] = v;
        mags[10] = m;

        let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lmax == f64::NEG_INFINITY {
            return Ok(Panel {
                a,
                b,
                val: [0.0; K],
                err: [0.0; K],
                l1: [0.0; K],
                noise: [0.0; K],
            });
        }
        if lmax > self.shift {
            let r = (self.shift - lmax).exp();
            for p in &mut self.panels {
                for k in 0..K {
                    p.val[k] *= r;
                    p.err[k] *= r;
                    p.l1[k] *= r;
                    p.noise[k] *= r;
                }
            }
            self.shift = lmax;
        }
        let mut w = [0.0; 21];
        for j in 0..21 {
            w[j] = (logs[j] - self.shift).exp();
        }

        let mut panel = Panel {
            a,
            b,
            val: [0.0; K],
            err: [0.0; K],
            l1: [0.0; K],
            noise: [0.0; K],
        };
        for k in 0..K {
            let mut noise = WGK[10] * mags[10][k] * w[10];
            for j in 0..10 {
                noise += WGK[j] * (mags[j][k] * w[j] + mags[20 - j][k] * w[20 - j]);
            }
            let noise = noise * h.abs();
            let fx = |j: usize| vals[j][k] * w[j];
            let fc = fx(10);
            let mut kron = WGK[10] * fc;
            let mut gauss = 0.0;
            let mut abs = WGK[10] * fc.abs();
            for j in 0..10 {
                let (f1, f2) = (fx(j), fx(20 - j));
                kron += WGK[j] * (f1 + f2);
                abs += WGK[j] * (f1.abs() + f2.abs());
                if j % 2 == 1 {
                    gauss += WG[j / 2] * (f1 + f2);
                }
            }
            let mean = 0.5 * kron;
            let mut asc = WGK[10] * (fc - mean).abs();
            for (j, w) in WGK[..10].iter().enumerate() {
                asc += w * ((fx(j) - mean).abs() + (fx(20 - j) - mean).abs());
            }
            let (kron, abs, asc) = (kron * h, abs * h.abs(), asc * h.abs());
            let mut err = (kron - gauss * h).abs();
            if asc != 0.0 && err != 0.0 {
                err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
            }
            if noise > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
                err = err.max(50.0 * f64::EPSILON * noise);
            }
            panel.val[k] = kron;
            panel.err[k] = err;
            panel.l1[k] = abs;
            panel.noise[k] = noise;
        }
        Ok(panel)
    }

    fn push(&mut self, a: f64, b: f64) -> Result<(), QuadError> {
        let p = self.panel(a, b)?;
        self.panels.push(p);
        Ok(())
    }

    fn totals(&self) -> ([f64; K], [f64; K], [f64; K]) {
        let (val, err, l1, _) = self.totals_with_noise();
        (val, err, l1)
    }

    fn totals_with_noise(&self) -> ([f64; K], [f64; K], [f64; K], [f64; K]) {
        let mut val = [0.0; K];
        let mut err = [0.0; K];
        let mut l1 = [0.0; K];
        let mut noise = [0.0; K];
        for p in &self.panels {
            for k in 0..K {
                val[k] += p.val[k];
                err[k] += p.err[k];
                l1[k] += p.l1[k];
                noise[k] += p.noise[k];
            }
        }
        (val, err, l1, noise)
    }

    fn floor(&self) -> f64 {
        if self.shift.is_finite() {
            (ABS_FLOOR.ln() - self.shift).exp()
        } else {
            ABS_FLOOR
        }
    }

    fn refine(&mut self, rel_tol: f64, max_panels: usize) -> Result<(), QuadError> {
        loop {
            let (val, err, _, noise) = self.totals_with_noise();
            let floor = self.floor();
            let mut target = [0.0; K];
            let mut done = true;
            for k in 0..K {
                target[k] = (rel_tol * val[k].abs()).max(200.0 * f64::EPSILON * noise[k]).max(floor);
                if err[k] > target[k] {
                    done = false;
                }
            }
            if done {
                return Ok(());
            }
            if self.panels.len() >= max_panels {
                let worst = (0..K)
                    .max_by(|&i, &j| (err[i] / target[i]).total_cmp(&(err[j] / target[j])))
                    .unwrap_or(0);
                return Err(QuadError::NotConverged {
                    best: val[worst] * self.shift.exp(),
                    abs_error: err[worst] * self.shift.exp(),
                    panels: self.panels.len(),
                });
            }
            let (idx, _) = self
                .panels
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let score = (0..K).map(|k| p.err[k] / target[k]).fold(0.0_f64, f64::max);
                    (i, score)
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("at least one panel");
            let p = self.panels.swap_remove(idx);
            let m = 0.5 * (p.a + p.b);
            if m <= p.a || m >= p.b {
                // cannot split further; accept the panel as is
                let mut q = p;
                q.err = [0.0; K];
                self.panels.push(q);
                continue;
            }
            self.push(p.a, m)?;
            self.push(m, p.b)?;
        }
    }
}

/// Vector-valued integration over `[0, ∞)`.
///
/// `f(s)` returns `(log_mag, vals)`; every component shares the log factor,
/// which lets expensive common pieces (Bessel functions, `log p`) be computed
/// once per abscissa. Convergence requires every component to meet the
/// tolerance.
pub fn integrate_vec<const K: usize, F>(
    f: F,
    hint: DecayHint,
    opts: &QuadOptions,
) -> Result<VecQuadResult<K>, QuadError>
where
    F: Fn(f64) -> (f64, [f64; K]),
{
    integrate_vec_noise(
        |s| {
            let (l, v) = f(s);
            (l, v, v.map(f64::abs))
        },
        hint,
        opts,
    )
}

/// As [`integrate_vec`], with a third array giving, per component, the
/// magnitude whose rounding error bounds the integrand's own error (for
/// `a - b` this is `|a| + |b|`). Components that cancel to zero then
/// converge at the roundoff level instead of chasing noise.
pub fn integrate_vec_noise<const K: usize, F>(
    f: F,
    hint: DecayHint,
    opts: &QuadOptions,
) -> Result<VecQuadResult<K>, QuadError>
where
    F: Fn(f64) -> (f64, [f64; K], [f64; K]),
{
    let tol = opts.rel_tol;
    if !(MIN_REL_TOL..=MAX_REL_TOL).contains(&tol) {
        return Err(QuadError::InvalidTolerance(tol));
    }
    let rate = if hint.rate > 0.0 && hint.rate.is_finite() {
        hint.rate
    } else {
        1.0
    };
    let s0 = hint.s0.max(0.0);

    // first guess: tail below tol relative to the bound's own scale, doubled
    let mut cut = 2.0 * (s0 + (-(tol.ln()) + 2.0) / rate);
    let mut it = Integrator {
        f: &f,
        shift: f64::NEG_INFINITY,
        panels: Vec::new(),
        evaluations: 0,
    };

    let mut pts: Vec<f64> = opts
        .breakpoints
        .iter()
        .cloned()
        .filter(|&x| x > 0.0 && x.is_finite())
        .collect();
    if s0 > 0.0 {
        pts.push(s0);
    }
    if let Some(&mx) = pts.iter().max_by(|a, b| a.total_cmp(b)) {
        cut = cut.max(1.25 * mx);
    }
    pts.retain(|&x| x < cut);
    for i in 1..4 {
        pts.push(cut * i as f64 / 4.0);
    }
    pts.push(0.0);
    pts.push(cut);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    for w in pts.windows(2) {
        it.push(w[0], w[1])?;
    }
    it.refine(tol, opts.max_panels)?;

    // extend if the tail bound, measured against the actual integral, asks for it
    for _ in 0..8 {
        let (val, _, l1) = it.totals();
        let mut need = cut;
        for k in 0..K {
            let scale = val[k].abs().max(1e-3 * l1[k]);
            if scale <= it.floor() {
                continue;
            }
            let log_target = (0.1 * tol * scale).ln() + it.shift;
            let s_req = s0 + (hint.log_c - rate.ln() - log_target) / rate;
            need = need.max(2.0 * s_req);
        }
        if need <= cut * (1.0 + 1e-12) {
            break;
        }
        let step = need.min(cut * 4.0);
        it.push(cut, step)?;
        cut = step;
        it.refine(tol, opts.max_panels)?;
    }

    // check the integrand itself at the cut
    for _ in 0..40 {
        let (val, _, l1) = it.totals();
        let (l_here, v_here, _) = it.eval(cut)?;
        let (l_next, v_next, _) = it.eval(cut * 1.05)?;
        let mut ok = true;
        for k in 0..K {
            let scale = val[k].abs().max(1e-3 * l1[k]).max(it.floor());
            let here = v_here[k].abs() * (l_here - it.shift).exp();
            let next = v_next[k].abs() * (l_next - it.shift).exp();
            // tail of a decaying exponential from `cut` is about here / rate
            if here / rate > tol * scale || (here > 0.0 && next > here) {
                ok = false;
            }
        }
        if ok {
            break;
        }
        let next_cut = cut * 1.5;
        it.push(cut, next_cut)?;
        cut = next_cut;
        it.refine(tol, opts.max_panels)?;
    }

    let (values, abs_errors, _) = it.totals();
    let log_scale = if it.shift.is_finite() { it.shift } else { 0.0 };
    Ok(VecQuadResult {
        values,
        abs_errors,
        evaluations: it.evaluations,
        truncation_point: cut,
        log_scale,
    })
}

/// Shape of a log-concave bump `exp(phi(s))` on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpShape {
    pub mode: f64,
    pub width: f64,
    pub hint: DecayHint,
}

impl BumpShape {
    /// Breakpoints around the mode at multiples of the width.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = vec![self.hint.s0];
        for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            let x = self.mode + k * self.width;
            if x > 0.0 {
                v.push(x);
            }
        }
        v
    }
}

/// Locates the mode of `phi` (assumed unimodal, eventually concave and
/// decreasing) and builds a tangent-line tail bound a few e-folds past it.
///
/// `scale` is a starting guess for the bracket.
pub fn bump_shape<P, D>(phi: P, dphi: D, scale: f64) -> BumpShape
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let tiny = 1e-12 * scale;
    let mode = if dphi(tiny) <= 0.0 {
        0.0
    } else {
        let mut lo = tiny;
        let mut hi = scale;
        let mut n = 0;
        while dphi(hi) > 0.0 && n < 200 {
            lo = hi;
            hi *= 2.0;
            n += 1;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dphi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let top = phi(mode);
    let mut h = 1e-3 * (1.0 + mode).min(scale.max(1e-3));
    let mut s1 = mode + h;
    for _ in 0..400 {
        if phi(s1) <= top - 3.0 && dphi(s1) < 0.0 {
            break;
        }
        h *= 1.5;
        s1 = mode + h;
    }
    let rate = (-dphi(s1)).max(1e-6);
    BumpShape {
        mode,
        width: (s1 - mode) / 6f64.sqrt(),
        hint: DecayHint {
            s0: s1,
            rate,
            log_c: phi(s1),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(|x| x as f64).product()
    }

    #[test]
    fn unit_exponential() {
        let r = integrate_decaying(|s| (-s).exp(), DecayHint::exponential(1.0), 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.evaluations >= 1);
        assert!(r.abs_error_estimate >= 0.0);
        assert!(r.truncation_point > 0.0);
    }

    #[test]
    fn gamma_two_and_four() {
        let h = DecayHint::exponential(1.0);
        let r = integrate_decaying(|s| s * (-s).exp(), h, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let r = integrate_decaying(|s| s.powi(3) * (-s).exp(), h, 1e-10).unwrap();
        assert!((r.value - 6.0).abs() < 6e-10);
    }

    #[test]
    fn gamma_family_and_error_honesty() {
        for tol in [1e-6, 1e-10, 1e-13] {
            for k in 0..=8u32 {
                // |s^k e^{-s}| <= (k/e)^k e^{-s/2} ... use the tangent bound instead
                let shape = bump_shape(|s| k as f64 * s.max(1e-300).ln() - s, |s| k as f64 / s - 1.0, 1.0);
                let r = integrate_decaying(|s| s.powi(k as i32) * (-s).exp(), shape.hint, tol).unwrap();
                let exact = factorial(k);
                let err = (r.value - exact).abs();
                assert!(err <= tol * exact, "k={k} tol={tol}: {}", r.value);
                assert!(
                    err <= 5.0 * r.abs_error_estimate + 4.0 * f64::EPSILON * exact,
                    "k={k}: err {err:e} est {:e}",
                    r.abs_error_estimate
                );
            }
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let h = DecayHint::exponential(1.0);
        assert!(matches!(
            integrate_decaying(|s| (-s).exp(), h, 1e-2),
            Err(QuadError::InvalidTolerance(_))
        ));
        assert!(integrate_decaying(|s| (-s).exp(), h, 1e-15).is_err());
    }

    #[test]
    fn nan_reports_abscissa() {
        let h = DecayHint::exponential(1.0);
        match integrate_decaying(|s| if s > 2.0 { f64::NAN } else { (-s).exp() }, h, 1e-8) {
            Err(QuadError::NaN { abscissa }) => assert!(abscissa > 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_carries_best_estimate() {
        let opts = QuadOptions {
            rel_tol: 1e-13,
            max_panels: 6,
            breakpoints: vec![],
        };
        // a kink at s = 1/3 defeats the polynomial rule
        let r = integrate_vec(
            |s| (0.0, [(s - 1.0 / 3.0).abs().sqrt() * (-s).exp()]),
            DecayHint::exponential(1.0),
            &opts,
        );
        match r {
            Err(QuadError::NotConverged { best, panels, .. }) => {
                assert!(best > 0.5 && best < 1.0);
                assert!(panels >= 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn log_mode_handles_huge_scales() {
        // exp(5000 - s) integrates to e^{5000}
        let r = integrate_log(
            |s| (5000.0 - s, 1.0),
            DecayHint::new(0.0, 1.0, 5000.0),
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.log_scale + r.value.ln() - 5000.0).abs() < 1e-10);
        assert!(r.total().is_infinite());
    }

    #[test]
    fn narrow_peak_found_with_breakpoints() {
        // Gaussian of width 0.01 centred at 40, on top of a slow exponential
        let sigma = 0.01;
        let f = |s: f64| (0.0, [(-(s - 40.0).powi(2) / (2.0 * sigma * sigma)).exp()]);
        let shape = bump_shape(
            |s| -(s - 40.0).powi(2) / (2.0 * sigma * sigma),
            |s| -(s - 40.0) / (sigma * sigma),
            1.0,
        );
        assert!((shape.mode - 40.0).abs() < 1e-8);
        let opts = QuadOptions::default().breakpoints(shape.breakpoints());
        let r = integrate_vec(f, shape.hint, &opts).unwrap();
        let exact = sigma * (2.0 * std::f64::consts::PI).sqrt();
        assert!(((r.values[0] - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn signed_integrand_with_cancellation() {
        // ∫ (N t - 1) e^{-N t} dt = 0
        let n = 50.0;
        let r = integrate_vec(
            |t| (0.0, [(n * t - 1.0) * (-n * t).exp()]),
            DecayHint::exponential(n),
            &QuadOptions::default(),
        )
        .unwrap();
        assert!(r.values[0].abs() < 1e-14);
    }

    #[test]
    fn vector_components_share_abscissae() {
        let r = integrate_vec(
            |s| (-s, [1.0, s, s * s]),
            DecayHint::exponential(1.0),
            &QuadOptions::default(),
        )
        .unwrap();
        let t = r.totals();
        assert!((t[0] - 1.0).abs() < 1e-10);
        assert!((t[1] - 1.0).abs() < 1e-10);
        assert!((t[2] - 2.0).abs() < 2e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn linearity(a in -3.0..3.0f64, b in -3.0..3.0f64,
                         r1 in 0.3..4.0f64, r2 in 0.3..4.0f64, w in 0.0..5.0f64) {
                let tol = 1e-10;
                let rate = r1.min(r2);
                let h = DecayHint::exponential(rate);
                let f = move |s: f64| (w * s).cos() * (-r1 * s).exp();
                let g = move |s: f64| s * s * (-r2 * s).exp();
                let ff = integrate_decaying(f, h, tol).unwrap().value;
                let gg = integrate_decaying(g, h, tol).unwrap().value;
                let comb = integrate_decaying(move |s| a * f(s) + b * g(s), h, tol).unwrap().value;
                let exact_f = r1 / (r1 * r1 + w * w);
                let exact_g = 2.0 / r2.powi(3);
                prop_assert!((ff - exact_f).abs() <= 10.0 * tol * exact_f.abs().max(1e-3));
                prop_assert!((gg - exact_g).abs() <= 10.0 * tol * exact_g);
                let scale = (a * ff).abs() + (b * gg).abs();
                prop_assert!((comb - (a * ff + b * gg)).abs() <= 10.0 * tol * scale.max(1e-12));
            }
        }
    }
}
