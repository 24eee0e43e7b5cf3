// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod table;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use tricrit_core::asymptotics::{
    self, approach_scaling, fit_power, geometric_s, observable_laws, tricritical_constants,
};
use tricrit_core::curves::{
    first_order_point, second_order_nu, trace_boundary, tricritical_solve, CURVE_TOL, DEFAULT_TRICRITICAL_GUESS,
};
use tricrit_core::finite_n::FiniteN;
use tricrit_core::mc_walk::{estimate_observables, estimate_two_point_by_target};
use tricrit_core::phase::{classify, DEFAULT_CLASSIFY_TOL};
use tricrit_core::potential::EffectivePotential;
use tricrit_core::verify::{run_criterion, CRITERIA};
use tricrit_core::{Error, ModelParams};

use table::{Cell, Table};

#[derive(Parser, Debug)]
#[command(
    name = "tricrit",
    version,
    about = "Phase diagram, finite-N observables and asymptotics of the cubic self-interacting walk on the complete graph"
)]
struct Cli {
    /// JSON file with defaults for u, g, nu, tol, seed, output and format.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    /// Relative quadrature tolerance for V.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// V and its derivatives on a t grid (CSV t,V,Vp,Vpp,Vppp,Vdot,Vdotp).
    Potential {
        #[command(flatten)]
        model: ModelArgs,
        /// `a:b:n`, n points from a to b inclusive.
        #[arg(long, default_value = "0:10:11")]
        t_grid: String,
    },
    /// Phase label with margins and interior minima (JSON).
    Classify {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Phase map over a (g, nu) rectangle (CSV g,nu,label,vp0,vpp0,t0,vt0).
    Scan {
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value = "-5:-2")]
        g_range: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0:5.5")]
        nu_range: String,
        /// Points per axis, `n` or `ng,nnu`.
        #[arg(long, default_value = "31")]
        resolution: String,
    },
    /// Phase boundary nu(g) (CSV g,nu,kind,t0).
    Boundary {
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = -4.5)]
        g_min: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = -2.0)]
        g_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Tricritical point, its moments and derived constants (JSON).
    Tricritical {
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
    },
    /// Large-N laws for the region of (g, nu) (JSON).
    Laws {
        #[command(flatten)]
        model: ModelArgs,
        /// Also evaluate the laws at these N.
        #[arg(long = "N", value_delimiter = ',')]
        n: Vec<f64>,
    },
    /// t0, rho and chi along base + s m with a power fit.
    Approach {
        #[arg(long, value_enum)]
        base: Base,
        /// g of the base point for `--base second`.
        #[arg(long, allow_negative_numbers = true, default_value_t = -2.7)]
        g: f64,
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        /// `dg,dnu`; defaults to the unit normal (second) or -n/|n|^2 (tricritical).
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        /// `lo:hi`, s from 10^-lo down to 10^-hi.
        #[arg(long, default_value = "4:5")]
        s_decades: String,
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Exact finite-N observables (CSV).
    FiniteN {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<f64>,
    },
    /// Monte Carlo estimates on the complete graph (JSON).
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "N", default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Also report G_0y for every target y.
        #[arg(long)]
        two_point: bool,
    },
    /// Acceptance criteria with a pass/fail table.
    Verify {
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Base {
    Second,
    Tricritical,
    First,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Dilute,
    Dense,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    u: Option<f64>,
    g: Option<f64>,
    nu: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numeric(String),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn config_err<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Config(msg.into()))
}

enum Output {
    Table(Table),
    Json(Value),
    Text(String),
}

struct Ctx {
    cfg: RunConfig,
}

impl Ctx {
    fn u(&self, u: Option<f64>) -> f64 {
        u.or(self.cfg.u).unwrap_or(1.0)
    }

    fn params(&self, m: &ModelArgs) -> Res<ModelParams> {
        let g = m.g.or(self.cfg.g);
        let nu = m.nu.or(self.cfg.nu);
        let (Some(g), Some(nu)) = (g, nu) else {
            return config_err("both --g and --nu are required (or set them in --config)");
        };
        let p = ModelParams::new(self.u(m.u), g, nu);
        p.validate().map_err(|e| Failure::Config(e.to_string()))?;
        Ok(p)
    }

    fn potential(&self, m: &ModelArgs) -> Res<EffectivePotential> {
        let p = self.params(m)?;
        match m.tol.or(self.cfg.tol) {
            Some(tol) => Ok(EffectivePotential::with_tol(p, tol)?),
            None => Ok(EffectivePotential::from_params(p)?),
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Res<f64> {
    s.trim()
        .parse::<f64>()
        .or_else(|_| config_err(format!("{what}: cannot parse '{s}' as a number")))
}

/// `a:b` or `a:b:n`.
fn parse_range(s: &str, what: &str) -> Res<(f64, f64, Option<usize>)> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b] => Ok((parse_f64(a, what)?, parse_f64(b, what)?, None)),
        [a, b, n] => {
            let n = n
                .trim()
                .parse::<usize>()
                .or_else(|_| config_err(format!("{what}: bad count '{n}'")))?;
            Ok((parse_f64(a, what)?, parse_f64(b, what)?, Some(n)))
        }
        _ => config_err(format!("{what}: expected a:b or a:b:n, got '{s}'")),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn potential_cmd(ctx: &Ctx, model: &ModelArgs, t_grid: &str) -> Res<Output> {
    let (a, b, n) = parse_range(t_grid, "--t-grid")?;
    let n = n.unwrap_or(11);
    if n == 0 || !(a >= 0.0) || !(b >= a) {
        return config_err("--t-grid needs 0 <= a <= b and n >= 1");
    }
    let ep = ctx.potential(model)?;
    let rows: Vec<_> = linspace(a, b, n)
        .into_par_iter()
        .map(|t| ep.eval(t))
        .collect::<Result<_, _>>()?;
    let mut tab = Table::new(vec!["t", "V", "Vp", "Vpp", "Vppp", "Vdot", "Vdotp"]);
    for e in rows {
        tab.push(vec![
            e.t.into(),
            e.value.into(),
            e.d1.into(),
            e.d2.into(),
            e.d3.into(),
            e.dot.into(),
            e.dot_d1.into(),
        ]);
    }
    Ok(Output::Table(tab))
}

fn classify_cmd(ctx: &Ctx, model: &ModelArgs) -> Res<Output> {
    let ep = ctx.potential(model)?;
    let report = classify(&ep, DEFAULT_CLASSIFY_TOL)?;
    let mut v = serde_json::to_value(&report).expect("report serialises");
    let p = ctx.params(model)?;
    if let Value::Object(m) = &mut v {
        m.insert("u".into(), json!(p.u));
        m.insert("g".into(), json!(p.g));
        m.insert("nu".into(), json!(p.nu));
    }
    Ok(Output::Json(v))
}

fn scan_cmd(ctx: &Ctx, u: Option<f64>, g_range: &str, nu_range: &str, resolution: &str) -> Res<Output> {
    let (g0, g1, _) = parse_range(g_range, "--g-range")?;
    let (n0, n1, _) = parse_range(nu_range, "--nu-range")?;
    let res: Vec<usize> = resolution
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .or_else(|_| config_err(format!("--resolution: bad count '{s}'")))
        })
        .collect::<Res<_>>()?;
    let (ng, nn) = match res.as_slice() {
        [n] => (*n, *n),
        [a, b] => (*a, *b),
        _ => return config_err("--resolution takes n or ng,nnu"),
    };
    if ng == 0 || nn == 0 {
        return config_err("--resolution must be positive");
    }
    let u = ctx.u(u);
    let points: Vec<(f64, f64)> = linspace(n0, n1, nn)
        .into_iter()
        .flat_map(|nu| linspace(g0, g1, ng).into_iter().map(move |g| (g, nu)))
        .collect();
    let rows: Vec<Vec<Cell>> = points
        .into_par_iter()
        .map(|(g, nu)| -> Res<Vec<Cell>> {
            let p = ModelParams::new(u, g, nu);
            p.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let ep = EffectivePotential::from_params(p)?;
            match classify(&ep, DEFAULT_CLASSIFY_TOL) {
                Ok(r) => Ok(vec![
                    g.into(),
                    nu.into(),
                    r.label.to_string().into(),
                    r.vp0.into(),
                    r.vpp0.into(),
                    r.t0.into(),
                    r.vt0.into(),
                ]),
                Err(Error::AmbiguousClassification(_)) => {
                    let z = ep.at_zero();
                    Ok(vec![
                        g.into(),
                        nu.into(),
                        "Ambiguous".into(),
                        z.d1.into(),
                        z.d2.into(),
                        Cell::Empty,
                        Cell::Empty,
                    ])
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Res<_>>()?;
    let mut tab = Table::new(vec!["g", "nu", "label", "vp0", "vpp0", "t0", "vt0"]);
    rows.into_iter().for_each(|r| tab.push(r));
    Ok(Output::Table(tab))
}

fn boundary_cmd(ctx: &Ctx, u: Option<f64>, g_min: f64, g_max: f64, step: f64) -> Res<Output> {
    if !(step > 0.0) || !(g_max > g_min) {
        return config_err("boundary needs g_min < g_max and step > 0");
    }
    let pts = trace_boundary(ctx.u(u), g_min, g_max, step)?;
    let mut tab = Table::new(vec!["g", "nu", "kind", "t0"]);
    for p in pts {
        tab.push(vec![p.g.into(), p.nu.into(), p.kind.to_string().into(), p.t0.into()]);
    }
    Ok(Output::Table(tab))
}

fn tricritical_cmd(ctx: &Ctx, u: Option<f64>) -> Res<Output> {
    let tc = tricritical_solve(ctx.u(u), DEFAULT_TRICRITICAL_GUESS)?;
    let k = tricritical_constants(&tc)?;
    let mut m = Map::new();
    m.insert("u".into(), json!(tc.u));
    m.insert("g_c".into(), json!(tc.g_c));
    m.insert("nu_c".into(), json!(tc.nu_c));
    for (i, x) in tc.moments.iter().enumerate() {
        m.insert(format!("M{i}"), json!(x));
    }
    for (key, x) in [
        ("alpha", k.alpha),
        ("b", k.b),
        ("a", k.a),
        ("B0", k.b0),
        ("B1", k.b1),
        ("B2", k.b2),
        ("B3", k.b3),
        ("nu_gg_second", k.nu_gg_second),
        ("nu_gg_first", k.nu_gg_first),
        ("residual", tc.residual),
    ] {
        m.insert(key.into(), json!(x));
    }
    Ok(Output::Json(Value::Object(m)))
}

fn law_json(l: &asymptotics::AsymptoticLaw) -> Value {
    json!({ "exp_rate": l.exp_rate, "n_power": l.n_power, "prefactor": l.prefactor })
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn laws_cmd(ctx: &Ctx, model: &ModelArgs, ns: &[f64]) -> Res<Output> {
    let p = ctx.params(model)?;
    let ep = ctx.potential(model)?;
    let report = classify(&ep, DEFAULT_CLASSIFY_TOL)?;
    let laws = observable_laws(&ep, &report)?;
    let named = [
        ("g00", &laws.g00),
        ("g01", &laws.g01),
        ("chi", &laws.chi),
        ("el", &laws.el),
        ("rho", &laws.rho),
    ];
    let mut obj = Map::new();
    obj.insert("u".into(), json!(p.u));
    obj.insert("g".into(), json!(p.g));
    obj.insert("nu".into(), json!(p.nu));
    obj.insert("region".into(), json!(report.label.to_string()));
    for (k, l) in named {
        obj.insert(k.into(), law_json(l));
    }
    if !ns.is_empty() {
        let vals: Vec<Value> = ns
            .iter()
            .map(|&n| {
                let mut row = Map::new();
                row.insert("N".into(), json!(n));
                for (k, l) in named {
                    row.insert(k.into(), num(l.value(n)));
                    row.insert(format!("log_{k}"), num(l.log_value(n)));
                }
                Value::Object(row)
            })
            .collect();
        obj.insert("values".into(), Value::Array(vals));
    }
    Ok(Output::Json(Value::Object(obj)))
}

fn parse_direction(s: &str) -> Res<[f64; 2]> {
    let v: Vec<f64> = s.split(',').map(|x| parse_f64(x, "--direction")).collect::<Res<_>>()?;
    match v.as_slice() {
        [a, b] if a.is_finite() && b.is_finite() && (*a != 0.0 || *b != 0.0) => Ok([*a, *b]),
        _ => config_err("--direction takes two numbers dg,dnu, not both zero"),
    }
}

#[allow(clippy::too_many_arguments)]
fn approach_cmd(
    ctx: &Ctx,
    base: Base,
    g: f64,
    u: Option<f64>,
    direction: Option<&str>,
    side: Option<SideArg>,
    s_decades: &str,
    points: usize,
    json_out: bool,
) -> Res<Output> {
    let (lo, hi, _) = parse_range(s_decades, "--s-decades")?;
    if !(hi > lo) || points < 2 {
        return config_err("--s-decades lo:hi needs lo < hi, and --points >= 2");
    }
    let s = geometric_s(lo, hi, points);
    let u = ctx.u(u);
    if base == Base::First {
        let tc = tricritical_solve(u, DEFAULT_TRICRITICAL_GUESS)?;
        let rows: Vec<_> = s
            .par_iter()
            .map(|&si| first_order_point(u, tc.g_c - si, None))
            .collect::<Result<_, _>>()?;
        let pts: Vec<(f64, f64)> = s
            .iter()
            .zip(&rows)
            .filter_map(|(&si, p)| p.t0.map(|t| (si, t)))
            .collect();
        let fit = fit_power(&pts)?;
        let mut tab = Table::new(vec!["s", "g", "nu", "t0", "rho", "chi"]);
        for (si, p) in s.iter().zip(&rows) {
            tab.push(vec![
                (*si).into(),
                p.g.into(),
                p.nu.into(),
                p.t0.into(),
                Cell::Empty,
                Cell::Empty,
            ]);
        }
        return Ok(approach_output(
            tab,
            json!({ "base": "first", "g_c": tc.g_c, "nu_c": tc.nu_c }),
            &fit,
            json_out,
        ));
    }
    let (bg, bnu, n) = match base {
        Base::Tricritical => {
            let tc = tricritical_solve(u, DEFAULT_TRICRITICAL_GUESS)?;
            (tc.g_c, tc.nu_c, tc.normal())
        }
        _ => {
            let p = second_order_nu(u, g, None)?;
            let ep = EffectivePotential::with_tol(ModelParams::new(u, p.g, p.nu), CURVE_TOL)?;
            let m = ep.moments();
            (p.g, p.nu, [m[2], m[1]])
        }
    };
    let m = match direction {
        Some(d) => parse_direction(d)?,
        None => {
            let nn = n[0].hypot(n[1]);
            match base {
                Base::Tricritical => [-n[0] / (nn * nn), -n[1] / (nn * nn)],
                _ => [n[0] / nn, n[1] / nn],
            }
        }
    };
    let side = match side {
        Some(SideArg::Dilute) => asymptotics::Side::Dilute,
        Some(SideArg::Dense) => asymptotics::Side::Dense,
        // tangential directions (m.n = 0 up to rounding) open the dense side
        None if m[0] * n[0] + m[1] * n[1] > 1e-8 * m[0].hypot(m[1]) * n[0].hypot(n[1]) => asymptotics::Side::Dilute,
        None => asymptotics::Side::Dense,
    };
    let t = approach_scaling(u, (bg, bnu), m, &s, side)?;
    let mut tab = Table::new(vec!["s", "g", "nu", "t0", "rho", "chi"]);
    for r in &t.rows {
        tab.push(vec![
            r.s.into(),
            r.g.into(),
            r.nu.into(),
            r.t0.into(),
            r.rho.into(),
            r.chi.into(),
        ]);
    }
    let meta = json!({
        "base": format!("{base:?}").to_lowercase(),
        "base_g": bg,
        "base_nu": bnu,
        "direction": m,
        "normal": n,
        "m_dot_n": m[0] * n[0] + m[1] * n[1],
        "side": format!("{side:?}").to_lowercase(),
    });
    Ok(approach_output(tab, meta, &t.fit, json_out))
}

fn approach_output(tab: Table, mut meta: Value, fit: &asymptotics::PowerFit, json_out: bool) -> Output {
    let fit = json!({ "exponent": fit.exponent, "amplitude": fit.amplitude, "points": fit.points });
    if json_out {
        meta["fit"] = fit;
        meta["rows"] = tab.to_json();
        Output::Json(meta)
    } else {
        // the fit goes to stderr so the CSV stays a single table
        eprintln!("fit over the smallest decade: {fit}");
        Output::Table(tab)
    }
}

fn finite_n_cmd(ctx: &Ctx, model: &ModelArgs, ns: &[f64]) -> Res<Output> {
    if ns.iter().any(|&n| !(n >= 2.0) || !n.is_finite()) {
        return config_err("--N values must be finite and at least 2");
    }
    let ep = ctx.potential(model)?;
    let fin = FiniteN::new(&ep)?;
    let mut tab = Table::new(vec![
        "N",
        "log_space",
        "g00",
        "g01",
        "chi",
        "el",
        "rho_n",
        "log_g00",
        "log_g01",
        "log_chi",
    ]);
    for &n in ns {
        let o = fin.observables(n)?;
        tab.push(vec![
            n.into(),
            o.log_space.into(),
            o.g00.value().into(),
            o.g01.value().into(),
            o.chi.value().into(),
            o.el.value().into(),
            o.rho_n.value().into(),
            o.g00.log.into(),
            o.g01.log.into(),
            o.chi.log.into(),
        ]);
    }
    Ok(Output::Table(tab))
}

fn mc_cmd(ctx: &Ctx, model: &ModelArgs, n: usize, samples: usize, seed: Option<u64>, two_point: bool) -> Res<Output> {
    let p = ctx.params(model)?;
    let seed = seed.or(ctx.cfg.seed).unwrap_or(0);
    let o = estimate_observables(p, n, samples, seed)?;
    let mut v = serde_json::to_value(o).expect("estimates serialise");
    v["u"] = json!(p.u);
    v["g"] = json!(p.g);
    v["nu"] = json!(p.nu);
    v["samples"] = json!(samples);
    v["seed"] = json!(seed);
    if two_point {
        let by = estimate_two_point_by_target(p, n, samples, seed)?;
        v["g0y"] = serde_json::to_value(by).expect("estimates serialise");
    }
    Ok(Output::Json(v))
}

fn verify_cmd(criteria: &[u8], json_out: bool) -> Res<(Output, bool)> {
    let ids: Vec<u8> = if criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        criteria.to_vec()
    };
    let mut results = Vec::new();
    for id in ids {
        match run_criterion(id) {
            Some(r) => results.push(r),
            None => return config_err(format!("no criterion {id}; valid ids are 1 to {}", CRITERIA.len())),
        }
    }
    let ok = results.iter().all(|r| r.passed);
    if json_out {
        return Ok((
            Output::Json(serde_json::to_value(&results).expect("results serialise")),
            ok,
        ));
    }
    let mut s = String::new();
    for r in &results {
        s.push_str(&format!("{r}\n"));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    s.push_str(&format!("{passed} of {} criteria passed\n", results.len()));
    Ok((Output::Text(s), ok))
}

fn load_config(path: Option<&PathBuf>) -> Res<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).or_else(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).or_else(|e| config_err(format!("bad config {}: {e}", path.display())))
}

fn set_threads() -> Res<()> {
    let Ok(v) = std::env::var("TRICRIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .or_else(|_| config_err(format!("TRICRIT_THREADS='{v}' is not a count")))?;
    if n == 0 {
        return config_err("TRICRIT_THREADS must be at least 1");
    }
    // fails only if a pool already exists, in which case it is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    set_threads()?;
    let cfg = load_config(cli.config.as_ref())?;
    if let Some(tol) = cfg.tol {
        if !(tol > 0.0) {
            return config_err("config tol must be positive");
        }
    }
    let format = cli.format.or(cfg.format);
    let output = cli.output.clone().or_else(|| cfg.output.clone());
    let ctx = Ctx { cfg };
    let json_out = format == Some(Format::Json);
    let table_only = |f: Option<Format>| -> Res<()> {
        if f == Some(Format::Csv) {
            return config_err("this subcommand writes JSON only");
        }
        Ok(())
    };
    let mut verified = true;
    let out = match &cli.command {
        Command::Potential { model, t_grid } => potential_cmd(&ctx, model, t_grid)?,
        Command::Classify { model } => {
            table_only(format)?;
            classify_cmd(&ctx, model)?
        }
        Command::Scan {
            u,
            g_range,
            nu_range,
            resolution,
        } => scan_cmd(&ctx, *u, g_range, nu_range, resolution)?,
        Command::Boundary { u, g_min, g_max, step } => boundary_cmd(&ctx, *u, *g_min, *g_max, *step)?,
        Command::Tricritical { u } => {
            table_only(format)?;
            tricritical_cmd(&ctx, *u)?
        }
        Command::Laws { model, n } => {
            table_only(format)?;
            laws_cmd(&ctx, model, n)?
        }
        Command::Approach {
            base,
            g,
            u,
            direction,
            side,
            s_decades,
            points,
        } => approach_cmd(
            &ctx,
            *base,
            *g,
            *u,
            direction.as_deref(),
            *side,
            s_decades,
            *points,
            json_out,
        )?,
        Command::FiniteN { model, n } => finite_n_cmd(&ctx, model, n)?,
        Command::Mc {
            model,
            n,
            samples,
            seed,
            two_point,
        } => {
            table_only(format)?;
            mc_cmd(&ctx, model, *n, *samples, *seed, *two_point)?
        }
        Command::Verify { criteria } => {
            let (o, ok) = verify_cmd(criteria, json_out)?;
            verified = ok;
            o
        }
    };
    let text = match out {
        Output::Table(t) if json_out => format!("{}\n", serde_json::to_string_pretty(&t.to_json()).expect("json")),
        Output::Table(t) => t.to_csv(),
        Output::Json(v) => format!("{}\n", serde_json::to_string_pretty(&v).expect("json")),
        Output::Text(s) => s,
    };
    match output {
        Some(path) => {
            fs::write(&path, text).or_else(|e| config_err(format!("cannot write {}: {e}", path.display())))?
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .or_else(|e| config_err(format!("stdout: {e}")))?;
        }
    }
    if !verified {
        return Err(Failure::Verify("one or more acceptance criteria failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) => format!("configuration error: {m}"),
                Failure::Numeric(m) => format!("numerical failure: {m}"),
                Failure::Verify(m) => m.clone(),
            };
            eprintln!("tricrit: {msg}");
            ExitCode::from(f.code())
        }
    }
}
