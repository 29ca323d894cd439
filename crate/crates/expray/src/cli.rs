//! Command-line front end: TOML configuration, command dispatch, and CSV
//! emission for the library's capabilities.
//!
//! Exit codes: 0 on success, 1 on verification failure, 2 on configuration
//! errors. All magnitudes are emitted as (lmag, arg) pairs — never
//! exponentiated — so downstream plotting never overflows.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use serde::Deserialize;

use crate::algebra::{Poly, ProblemSpec, RationalFn};
use crate::asymptotics;
use crate::field::Field;
use crate::paths::TracedPath;
use crate::reroute::{self, RerouteLedger};
use crate::verify::{self, fmt17, ClaimSet};
use crate::Result;

#[derive(Parser)]
#[command(
    name = "expray",
    about = "Far-field evaluation of f' = S e^P f + 1 along rays, with growth-bound verification"
)]
struct Cli {
    /// TOML run configuration (see examples/*.toml).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the ray angle theta (radians).
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Override the modulus-curve level omega.
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Override the window half-width parameter epsilon.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Override the highest traced level index.
    #[arg(long, global = true)]
    kmax: Option<i64>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tighter quadrature acceptance for the path integrals.
    #[arg(long, global = true)]
    high_accuracy: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the rational antiderivative expansion U ≈ Q·e^P.
    Expand,
    /// Trace the modulus curve and the level curves; write one CSV per path.
    Trace,
    /// Evaluate f at ray abscissae (prints lmag and arg).
    Eval {
        /// Ray abscissa; repeatable.
        #[arg(long, required = true)]
        x: Vec<f64>,
    },
    /// Sweep f and the window factor H across all windows; write sweep.csv.
    Sweep,
    /// Run a verification claim set and write report.csv.
    Verify {
        #[arg(value_enum)]
        claim: ClaimArg,
    },
    /// Dump the rerouting ledger (per-level F, G, J) as CSV.
    Ledger,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClaimArg {
    Identities,
    Thm1,
    Thm2,
    Upper,
    Hyperorder,
    Oracles,
    All,
}

impl From<ClaimArg> for ClaimSet {
    fn from(c: ClaimArg) -> ClaimSet {
        match c {
            ClaimArg::Identities => ClaimSet::Identities,
            ClaimArg::Thm1 => ClaimSet::Thm1,
            ClaimArg::Thm2 => ClaimSet::Thm2,
            ClaimArg::Upper => ClaimSet::Upper,
            ClaimArg::Hyperorder => ClaimSet::Hyperorder,
            ClaimArg::Oracles => ClaimSet::Oracles,
            ClaimArg::All => ClaimSet::All,
        }
    }
}

/// On-disk run configuration. Complex numbers are [re, im] pairs; polynomial
/// coefficient lists are ascending (constant term first).
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    problem: ProblemTable,
    #[serde(default)]
    geometry: GeometryTable,
    #[serde(default)]
    tolerances: ToleranceTable,
    #[serde(default)]
    output: OutputTable,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemTable {
    p: Vec<[f64; 2]>,
    s_num: Vec<[f64; 2]>,
    #[serde(default = "one_coeff")]
    s_den: Vec<[f64; 2]>,
    z0: [f64; 2],
    #[serde(default = "one_pair")]
    c: [f64; 2],
    #[serde(default)]
    pole_radius: f64,
}

fn one_coeff() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0]]
}

fn one_pair() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GeometryTable {
    theta: f64,
    omega: f64,
    epsilon: f64,
    k_max: i64,
    x_max: f64,
}

impl Default for GeometryTable {
    fn default() -> Self {
        GeometryTable { theta: std::f64::consts::FRAC_PI_4, omega: 1.0, epsilon: 0.1, k_max: 6, x_max: 0.0 }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct ToleranceTable {
    trace_tol: Option<f64>,
    quad_tol: Option<f64>,
    high_accuracy: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputTable {
    directory: PathBuf,
    formats: Vec<String>,
}

impl Default for OutputTable {
    fn default() -> Self {
        OutputTable { directory: PathBuf::from("out"), formats: vec!["csv".into()] }
    }
}

fn cpx(p: [f64; 2]) -> C {
    C::new(p[0], p[1])
}

fn poly(coeffs: &[[f64; 2]]) -> Poly {
    Poly::new(coeffs.iter().copied().map(cpx).collect())
}

/// Everything a command needs, resolved from config file + flag overrides.
struct Run {
    spec: ProblemSpec,
    omega: f64,
    epsilon: f64,
    k_max: i64,
    x_max: f64,
    out_dir: PathBuf,
}

fn load_run(cli: &Cli) -> std::result::Result<Run, String> {
    let path = cli
        .config
        .as_ref()
        .ok_or("this command needs a problem definition: pass --config PATH")?;
    let text = fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| format!("{}: {e}", path.display()))?;

    let theta = cli.theta.unwrap_or(cfg.geometry.theta);
    let s = RationalFn::new(poly(&cfg.problem.s_num), poly(&cfg.problem.s_den))
        .map_err(|e| format!("{}: [problem] s: {e}", path.display()))?;
    let spec = ProblemSpec::new(
        poly(&cfg.problem.p),
        s,
        cpx(cfg.problem.z0),
        cpx(cfg.problem.c),
        cfg.problem.pole_radius,
        theta,
    )
    .map_err(|e| format!("{}: [problem]: {e}", path.display()))?;

    let _ = (cfg.tolerances.trace_tol, cfg.tolerances.quad_tol, cfg.tolerances.high_accuracy);
    let k_max = cli.kmax.unwrap_or(cfg.geometry.k_max).max(1);
    let x_max = if cfg.geometry.x_max > 0.0 { cfg.geometry.x_max } else { f64::INFINITY };
    Ok(Run {
        spec,
        omega: cli.omega.unwrap_or(cfg.geometry.omega),
        epsilon: cli.epsilon.unwrap_or(cfg.geometry.epsilon),
        k_max,
        x_max,
        out_dir: cli.out.clone().unwrap_or(cfg.output.directory),
    })
}

fn rational_str(r: &RationalFn) -> String {
    if r.den.degree() == Some(0) {
        let d = r.den.coeff(0);
        return poly_str(&r.num.scale(1.0 / d));
    }
    format!("({}) / ({})", poly_str(&r.num), poly_str(&r.den))
}

fn poly_str(p: &Poly) -> String {
    let mut terms = Vec::new();
    for (i, &a) in p.coeffs().iter().enumerate() {
        if a.norm() <= 1e-14 * (1.0 + p.max_coeff_norm()) {
            continue;
        }
        let coef = if a.im.abs() <= 1e-14 * a.norm() {
            format!("{}", a.re)
        } else {
            format!("({}{:+}i)", a.re, a.im)
        };
        let term = match i {
            0 => coef,
            1 if coef == "1" => "z".to_string(),
            1 => format!("{coef}·z"),
            _ if coef == "1" => format!("z^{i}"),
            _ => format!("{coef}·z^{i}"),
        };
        terms.push(term);
    }
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

fn path_csv(p: &TracedPath) -> String {
    let mut out = String::from("x,y,u,v,uy,vy\n");
    for fr in &p.frames {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(fr.z.re),
            fmt17(fr.z.im),
            fmt17(fr.u),
            fmt17(fr.v),
            fmt17(fr.uy),
            fmt17(fr.vy)
        ));
    }
    out
}

fn write_out(dir: &Path, name: &str, text: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_expand(run: &Run) -> Result<()> {
    let exp = asymptotics::expand(&run.spec, asymptotics::default_tail_order(&run.spec))?;
    if exp.terminated {
        println!("Q = {} (terminated, k={})", rational_str(&exp.q), exp.k);
    } else {
        println!("Q = {} (k={}, tail O(|z|^-{}))", rational_str(&exp.q), exp.k, exp.n_tail);
        println!("residual integrand Q_k = {}", rational_str(&exp.qk));
    }
    for (i, t) in exp.terms.iter().enumerate() {
        println!("  S_{} = {}", i + 1, rational_str(t));
    }
    Ok(())
}

fn cmd_trace(run: &Run) -> Result<()> {
    let field = Field::new(run.spec.clone())?;
    let ledger = reroute::build_ledger(&field, run.omega, run.epsilon, run.k_max)?;
    write_out(&run.out_dir, "omega.csv", &path_csv(&ledger.omega_path))
        .map_err(|e| crate::Error::Config(format!("write omega.csv: {e}")))?;
    for lv in &ledger.levels {
        let name = format!("level_{}.csv", lv.k);
        write_out(&run.out_dir, &name, &path_csv(&lv.path))
            .map_err(|e| crate::Error::Config(format!("write {name}: {e}")))?;
    }
    Ok(())
}

fn cmd_eval(run: &Run, xs: &[f64]) -> Result<()> {
    let field = Field::new(run.spec.clone())?;
    let ledger = reroute::build_ledger(&field, run.omega, run.epsilon, run.k_max)?;
    let t = run.spec.theta.tan();
    for &x in xs {
        let z = C::new(x, x * t);
        match reroute::eval_solution(&field, Some(&ledger), z) {
            Ok(v) => println!(
                "x = {x}  z = {} + {}i  lmag f = {}  arg f = {}",
                fmt17(z.re),
                fmt17(z.im),
                fmt17(v.lmag),
                fmt17(v.arg)
            ),
            Err(e) => println!("x = {x}  error: {e}"),
        }
    }
    Ok(())
}

fn cmd_sweep(run: &Run) -> Result<()> {
    use rayon::prelude::*;
    let field = Field::new(run.spec.clone())?;
    let ledger = reroute::build_ledger(&field, run.omega, run.epsilon, run.k_max)?;
    let t = run.spec.theta.tan();

    // Sample every window and anti-window on a uniform interior grid,
    // bounded by the configured x_max.
    let mut xs: Vec<f64> = Vec::new();
    let all = ledger
        .windows
        .windows
        .iter()
        .chain(ledger.windows.anti_windows.iter());
    for w in all {
        for i in 0..9 {
            let x = w.x_lo + (w.x_hi - w.x_lo) * (0.05 + 0.9 * i as f64 / 8.0);
            if x <= run.x_max {
                xs.push(x);
            }
        }
    }
    xs.sort_by(f64::total_cmp);

    let rows: Vec<String> = xs
        .par_iter()
        .map(|&x| {
            let h = reroute::eval_h(&field, &ledger, x);
            let f = reroute::eval_solution(&field, Some(&ledger), C::new(x, x * t));
            match (h, f) {
                (Ok(h), Ok(f)) => {
                    let regime = match h.regime {
                        reroute::HRegime::WindowDirect => "window",
                        reroute::HRegime::AntiDirect => "anti-direct",
                        reroute::HRegime::AntiSeries => "anti-series",
                    };
                    format!(
                        "{},{},{},{},{},{},{}\n",
                        fmt17(x),
                        fmt17(h.zeta),
                        fmt17(h.lmag()),
                        fmt17(h.rel.arg),
                        fmt17(f.lmag),
                        fmt17(f.arg),
                        regime
                    )
                }
                (h, f) => {
                    let e = h.err().map(|e| e.to_string()).or_else(|| f.err().map(|e| e.to_string()));
                    format!("{},,,,,,skipped: {}\n", fmt17(x), e.unwrap().replace(',', ";"))
                }
            }
        })
        .collect();

    let mut csv = String::from("x,zeta,lmag_h,arg_h,lmag_f,arg_f,regime\n");
    for r in rows {
        csv.push_str(&r);
    }
    write_out(&run.out_dir, "sweep.csv", &csv)
        .map_err(|e| crate::Error::Config(format!("write sweep.csv: {e}")))
}

fn cmd_ledger(run: &Run) -> Result<()> {
    let field = Field::new(run.spec.clone())?;
    let ledger = reroute::build_ledger(&field, run.omega, run.epsilon, run.k_max)?;
    write_out(&run.out_dir, "ledger.csv", &ledger_csv(&ledger))
        .map_err(|e| crate::Error::Config(format!("write ledger.csv: {e}")))
}

fn ledger_csv(ledger: &RerouteLedger) -> String {
    let mut out = String::from("k,re_f,im_f,re_g,im_g,re_j,im_j\n");
    for lv in &ledger.levels {
        let g = ledger.g_k(lv.k).unwrap_or_default();
        let j = ledger.j_limit(lv.k).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            lv.k,
            fmt17(lv.d_k.re),
            fmt17(lv.d_k.im),
            fmt17(g.re),
            fmt17(g.im),
            fmt17(j.re),
            fmt17(j.im)
        ));
    }
    out
}

fn cmd_verify(cli: &Cli, claim: ClaimArg) -> i32 {
    let reports = verify::run_claims(claim.into());
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let csv = verify::to_csv(&reports);
    if let Err(e) = write_out(&out_dir, "report.csv", &csv) {
        eprintln!("error: write report.csv: {e}");
        return 2;
    }
    if reports.iter().all(|r| r.pass) {
        0
    } else {
        1
    }
}

pub fn run() {
    std::process::exit(main_impl());
}

fn main_impl() -> i32 {
    let cli = Cli::parse();

    if let Ok(threads) = std::env::var("EXPRAY_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: EXPRAY_THREADS must be a positive integer, got {threads:?}");
                return 2;
            }
        }
    }

    if let Cmd::Verify { claim } = cli.cmd {
        return cmd_verify(&cli, claim);
    }

    let run = match load_run(&cli) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let res = match &cli.cmd {
        Cmd::Expand => cmd_expand(&run),
        Cmd::Trace => cmd_trace(&run),
        Cmd::Eval { x } => cmd_eval(&run, x),
        Cmd::Sweep => cmd_sweep(&run),
        Cmd::Ledger => cmd_ledger(&run),
        Cmd::Verify { .. } => unreachable!(),
    };
    match res {
        Ok(()) => 0,
        Err(e @ crate::Error::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
