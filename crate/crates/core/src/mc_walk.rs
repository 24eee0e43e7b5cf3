//! Monte Carlo for the continuous-time walk on the complete graph.
//!
//! Each trajectory starts at vertex 0, holds for an `Exp(1 - 1/N)` time and
//! jumps to one of the other `N - 1` vertices uniformly. Along a holding
//! segment only one local time grows, so `log p_N(L_T)` is a cubic in the
//! elapsed time and the `T`-integral of the weight is done per segment by
//! Gauss-Legendre rather than on a grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Per-trajectory integration stops once the weight tail is below `e^-37`.
pub const TAIL_LOG_CUTOFF: f64 = -37.0;
/// Trajectories running past this many decay lengths are reported as non-decaying.
const MAX_DECAY_LENGTHS: f64 = 1e4;
const GL_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Deterministic bound on truncation and quadrature error, separate from `std_error`.
    pub bias_bound: f64,
}

impl McEstimate {
    /// `|value - x| <= k * std_error + bias_bound`.
    pub fn agrees_with(&self, x: f64, k: f64) -> bool {
        (self.value - x).abs() <= k * self.std_error + self.bias_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrajectory {
    pub vertices: Vec<usize>,
    pub holding_times: Vec<f64>,
    /// Local time per vertex at `total_time`.
    pub local_times: Vec<f64>,
    pub total_time: f64,
}

impl WalkTrajectory {
    pub fn jumps(&self) -> usize {
        self.vertices.len() - 1
    }

    /// `sum_x L_{T,x} - T`.
    pub fn conservation_defect(&self) -> f64 {
        pairwise_sum(&self.local_times) - self.total_time
    }
}

/// Stream `index` of the generator seeded by `seed`; trajectories are
/// reproducible independently of scheduling.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "the walk needs N >= 2 vertices, got {n}"
        )));
    }
    Ok(())
}

fn holding_time(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn jump_target(rng: &mut ChaCha8Rng, from: usize, n: usize) -> usize {
    let y = rng.random_range(0..n - 1);
    if y >= from {
        y + 1
    } else {
        y
    }
}

/// Simulates to time `t_max`; the last holding time is cut at `t_max`.
pub fn simulate_trajectory(n: usize, t_max: f64, rng: &mut ChaCha8Rng) -> Result<WalkTrajectory> {
    check_n(n)?;
    let rate = 1.0 - 1.0 / n as f64;
    let mut tr = WalkTrajectory {
        vertices: vec![0],
        holding_times: Vec::new(),
        local_times: vec![0.0; n],
        total_time: t_max,
    };
    let mut t = 0.0;
    let mut x = 0;
    loop {
        let h = holding_time(rng, rate);
        if t + h >= t_max {
            let last = t_max - t;
            tr.holding_times.push(last);
            tr.local_times[x] += last;
            break;
        }
        tr.holding_times.push(h);
        tr.local_times[x] += h;
        t += h;
        x = jump_target(rng, x, n);
        tr.vertices.push(x);
    }
    Ok(tr)
}

/// `log p(s) - nu s`, i.e. the part of `log p` carried by local times.
fn log_q(p: &ModelParams, s: f64) -> f64 {
    -(p.u * s + p.g) * s * s
}

/// Tail bound for the weight: with `h(s) = log p(s) + r s`, a vertex at
/// local time `l` contributes at most `m(l) - r delta` after gaining
/// `delta` more, where `m(l) = sup_{s >= l} h(s) - r l`.
struct DecayBound {
    params: ModelParams,
    r: f64,
    /// positive stationary points of `h`
    stationary: Vec<f64>,
}

impl DecayBound {
    fn new(p: &ModelParams) -> Result<Self> {
        let r = if p.nu > 0.0 { 0.5 * p.nu } else { 1.0 };
        let a = p.nu - r;
        if p.u == 0.0 && (p.g < 0.0 || (p.g == 0.0 && a < 0.0)) {
            return Err(Error::NonDecayingWeight(format!("p(s) e^(rs) is unbounded for {p}")));
        }
        // h'(s) = -(3u s^2 + 2g s + a)
        let mut stationary = Vec::new();
        if p.u > 0.0 {
            let disc = p.g * p.g - 3.0 * p.u * a;
            if disc >= 0.0 {
                stationary.push((-p.g + disc.sqrt()) / (3.0 * p.u));
                stationary.push((-p.g - disc.sqrt()) / (3.0 * p.u));
            }
        } else if p.g > 0.0 {
            stationary.push(-a / (2.0 * p.g));
        }
        stationary.retain(|&s| s > 0.0);
        Ok(DecayBound {
            params: *p,
            r,
            stationary,
        })
    }

    fn h(&self, s: f64) -> f64 {
        log_q(&self.params, s) - (self.params.nu - self.r) * s
    }

    fn m(&self, l: f64) -> f64 {
        let mut best = self.h(l);
        for &s in &self.stationary {
            if s > l {
                best = best.max(self.h(s));
            }
        }
        best - self.r * l
    }
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Per-trajectory integrals `int w dT`, `int T w dT` and the per-endpoint
/// split of `int w dT`.
struct PathIntegrals {
    total: f64,
    length: f64,
    by_vertex: Vec<f64>,
    /// Tail bound plus a rounding bound for the segment sums.
    bias: f64,
}

struct Segment {
    a0: f64,
    a1: f64,
    panels: usize,
    /// time actually spent, shorter than the holding time when cut
    len: f64,
    log_tail: Option<f64>,
}

struct Integrator {
    params: ModelParams,
    n: usize,
    rate: f64,
    decay: DecayBound,
    gl: (Vec<f64>, Vec<f64>),
}

impl Integrator {
    fn new(params: ModelParams, n: usize) -> Result<Self> {
        check_n(n)?;
        params.validate()?;
        Ok(Integrator {
            params,
            n,
            rate: 1.0 - 1.0 / n as f64,
            decay: DecayBound::new(&params)?,
            gl: gauss_legendre(GL_POINTS),
        })
    }

    /// `int_0^h exp(base + log_q(l + s) - nu (t + s)) (1, t + s) ds`, cut
    /// short once the bound on everything after `s` drops below the cutoff
    /// (`others_m` is the sum of `m` over the vertices not being visited).
    fn segment(&self, base: f64, others_m: f64, l: f64, t: f64, h: f64) -> Segment {
        let p = &self.params;
        let phi = |s: f64| base + log_q(p, l + s) - p.nu * (t + s);
        let dphi = |s: f64| {
            let x = l + s;
            -(3.0 * p.u * x + 2.0 * p.g) * x - p.nu
        };
        let (xs, ws) = &self.gl;
        let mut seg = Segment {
            a0: 0.0,
            a1: 0.0,
            panels: 0,
            len: h,
            log_tail: None,
        };
        let mut s = 0.0;
        while s < h {
            let log_tail = others_m + self.decay.m(l + s) - self.decay.r.ln();
            if log_tail < TAIL_LOG_CUTOFF {
                seg.len = s;
                seg.log_tail = Some(log_tail);
                break;
            }
            seg.panels += 1;
            // keep |phi'| * width / 2 <= 1 so the rule is exact to rounding
            let slope = dphi(s).abs().max(dphi((s + 0.25).min(h)).abs());
            let w = (2.0 / (slope + 1.0)).min(0.25).min(h - s);
            let (c, r) = (s + 0.5 * w, 0.5 * w);
            for (x, wt) in xs.iter().zip(ws) {
                let u = c + r * x;
                let f = phi(u).exp() * wt * r;
                seg.a0 += f;
                seg.a1 += f * (t + u);
            }
            s += w;
        }
        seg
    }

    fn path(&self, rng: &mut ChaCha8Rng) -> Result<PathIntegrals> {
        let r = self.decay.r;
        let mut local = vec![0.0; self.n];
        let mut out = PathIntegrals {
            total: 0.0,
            length: 0.0,
            by_vertex: vec![0.0; self.n],
            bias: 0.0,
        };
        let mut terms = 0usize;
        let (mut x, mut t) = (0usize, 0.0);
        // sums of log_q and of m over vertices other than x
        let mut others = 0.0;
        let m0 = self.decay.m(0.0);
        let mut others_m = m0 * (self.n - 1) as f64;
        loop {
            let h = holding_time(rng, self.rate);
            let seg = self.segment(others, others_m, local[x], t, h);
            terms += seg.panels * GL_POINTS;
            out.total += seg.a0;
            out.length += seg.a1;
            out.by_vertex[x] += seg.a0;
            local[x] += seg.len;
            t += seg.len;
            if let Some(log_tail) = seg.log_tail {
                out.bias = log_tail.exp() + f64::EPSILON * terms as f64 * out.total;
                break;
            }
            if r * t > MAX_DECAY_LENGTHS {
                return Err(Error::NonDecayingWeight(format!(
                    "trajectory weight bound still above e^{TAIL_LOG_CUTOFF} at T = {t}"
                )));
            }
            let y = jump_target(rng, x, self.n);
            others += log_q(&self.params, local[x]) - log_q(&self.params, local[y]);
            others_m += self.decay.m(local[x]) - self.decay.m(local[y]);
            x = y;
        }
        let defect = pairwise_sum(&local) - t;
        if defect.abs() > 1e-12 * t.max(1.0) {
            return Err(Error::Verification {
                what: "local-time conservation",
                detail: format!("sum of local times differs from T = {t} by {defect:e}"),
            });
        }
        Ok(out)
    }

    fn run(&self, n_samples: usize, seed: u64) -> Result<Vec<PathIntegrals>> {
        if n_samples < 2 {
            return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
        }
        (0..n_samples as u64)
            .into_par_iter()
            .map(|i| self.path(&mut trajectory_rng(seed, i)))
            .collect()
    }
}

/// Pairwise (cascade) summation; the result does not depend on thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn estimate(xs: &[f64], seed: u64, bias: f64) -> McEstimate {
    let (value, std_error) = mean_and_se(xs);
    McEstimate {
        value,
        std_error,
        n_samples: xs.len(),
        seed,
        bias_bound: bias,
    }
}

fn max_bias(paths: &[PathIntegrals]) -> f64 {
    paths.iter().map(|p| p.bias).fold(0.0, f64::max)
}

fn chi_from(paths: &[PathIntegrals], seed: u64) -> McEstimate {
    let xs: Vec<f64> = paths.iter().map(|p| p.total).collect();
    estimate(&xs, seed, max_bias(paths))
}

fn two_point_from(paths: &[PathIntegrals], n: usize, x_equals_y: bool, seed: u64) -> McEstimate {
    let xs: Vec<f64> = paths
        .iter()
        .map(|p| {
            if x_equals_y {
                p.by_vertex[0]
            } else {
                pairwise_sum(&p.by_vertex[1..]) / (n - 1) as f64
            }
        })
        .collect();
    estimate(&xs, seed, max_bias(paths))
}

fn length_from(paths: &[PathIntegrals], seed: u64) -> McEstimate {
    let a: Vec<f64> = paths.iter().map(|p| p.length).collect();
    let b: Vec<f64> = paths.iter().map(|p| p.total).collect();
    let (ma, _) = mean_and_se(&a);
    let (mb, _) = mean_and_se(&b);
    let ratio = ma / mb;
    let resid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - ratio * y).collect();
    let (_, se) = mean_and_se(&resid);
    McEstimate {
        value: ratio,
        std_error: se / mb,
        n_samples: paths.len(),
        seed,
        bias_bound: max_bias(paths) * (1.0 + ratio) / mb,
    }
}

/// `chi = int_0^inf E_0 p_N(L_T) dT`.
pub fn estimate_chi(params: ModelParams, n: usize, n_samples: usize, seed: u64) -> Result<McEstimate> {
    let paths = Integrator::new(params, n)?.run(n_samples, seed)?;
    Ok(chi_from(&paths, seed))
}

/// `G_00` (`x_equals_y`) or `G_01`, the latter pooled over the `N - 1`
/// targets `y != 0`.
pub fn estimate_two_point(
    params: ModelParams,
    n: usize,
    x_equals_y: bool,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let paths = Integrator::new(params, n)?.run(n_samples, seed)?;
    Ok(two_point_from(&paths, n, x_equals_y, seed))
}

/// `G_0y` for each `y = 0..N` separately.
pub fn estimate_two_point_by_target(
    params: ModelParams,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let paths = Integrator::new(params, n)?.run(n_samples, seed)?;
    let tail = max_bias(&paths);
    Ok((0..n)
        .map(|y| {
            let xs: Vec<f64> = paths.iter().map(|p| p.by_vertex[y]).collect();
            estimate(&xs, seed, tail)
        })
        .collect())
}

/// `E L = int T E p_N dT / chi` by the ratio of sample means; the standard
/// error is from the delta method.
pub fn estimate_expected_length(params: ModelParams, n: usize, n_samples: usize, seed: u64) -> Result<McEstimate> {
    let paths = Integrator::new(params, n)?.run(n_samples, seed)?;
    Ok(length_from(&paths, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McObservables {
    pub n: usize,
    pub chi: McEstimate,
    pub g00: McEstimate,
    pub g01: McEstimate,
    pub el: McEstimate,
}

/// All four estimates from one set of trajectories; each equals the
/// corresponding single-purpose estimator with the same seed.
pub fn estimate_observables(params: ModelParams, n: usize, n_samples: usize, seed: u64) -> Result<McObservables> {
    let paths = Integrator::new(params, n)?.run(n_samples, seed)?;
    Ok(McObservables {
        n,
        chi: chi_from(&paths, seed),
        g00: two_point_from(&paths, n, true, seed),
        g01: two_point_from(&paths, n, false, seed),
        el: length_from(&paths, seed),
    })
}

/// `E_0 p_N(L_T)` at each `T` of an increasing grid, one trajectory serving
/// every grid time.
pub fn sample_weight_curve(
    params: ModelParams,
    n: usize,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    weight_curve(params, n, None, t_grid, n_samples, seed)
}

/// `E_0 p_N(L_T) 1{X(T) = y}` on the grid.
pub fn sample_two_point_weight_curve(
    params: ModelParams,
    n: usize,
    y: usize,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if y >= n {
        return Err(Error::InvalidArgument(format!("target vertex {y} not in 0..{n}")));
    }
    weight_curve(params, n, Some(y), t_grid, n_samples, seed)
}

fn weight_curve(
    params: ModelParams,
    n: usize,
    target: Option<usize>,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_n(n)?;
    params.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "T grid must be non-empty, non-negative and increasing".into(),
        ));
    }
    if n_samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
    }
    let t_max = *t_grid.last().unwrap();
    let rate = 1.0 - 1.0 / n as f64;
    let rows: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let mut local = vec![0.0; n];
            let mut out = Vec::with_capacity(t_grid.len());
            let (mut x, mut t) = (0usize, 0.0);
            let mut k = 0;
            let mut end = holding_time(&mut rng, rate);
            while k < t_grid.len() {
                let tk = t_grid[k];
                if tk <= end || end >= t_max {
                    let mut lw = -params.nu * tk;
                    for (y, &l) in local.iter().enumerate() {
                        let l = if y == x { l + (tk - t) } else { l };
                        lw += log_q(&params, l);
                    }
                    out.push(if target.is_none_or(|y| y == x) { lw.exp() } else { 0.0 });
                    k += 1;
                } else {
                    local[x] += end - t;
                    t = end;
                    x = jump_target(&mut rng, x, n);
                    end = t + holding_time(&mut rng, rate);
                }
            }
            out
        })
        .collect();
    let est: Vec<McEstimate> = (0..t_grid.len())
        .map(|k| {
            let xs: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            estimate(&xs, seed, 0.0)
        })
        .collect();
    // the last decade of the grid must show decay
    let last = est.len() - 1;
    if t_max > 0.0 {
        if let Some(j) = t_grid.iter().position(|&t| t >= 0.1 * t_max) {
            if j < last && est[last].value >= est[j].value && est[j].value > 0.0 {
                return Err(Error::NonDecayingWeight(format!(
                    "mean weight {:e} at T = {t_max} is not below {:e} at T = {}",
                    est[last].value, est[j].value, t_grid[j]
                )));
            }
        }
    }
    Ok(est)
}
