//! Desk-scale verification drivers.
//!
//! Every quantitative claim the library rests on — the mean-value identities,
//! the doubly-exponential lower bound on ray windows, the anti-window
//! cancellation bound, the hyper-order of the solutions, and the agreement of
//! the independent evaluation regimes — is checked here against closed forms,
//! brute-force oracles, or explicit bound formulas, and reported with measured
//! margins. Asymptotic claims (those true only up to 1 + O(1/x) factors) use a
//! trend policy: the last sample must be within tolerance *and* the deviation
//! must improve monotonically over the final three samples; no unquantified
//! rate constant is ever asserted.
//!
//! The independent oracle for solution values is a high-order Taylor-stepping
//! integrator of the defining equation f′ = S·e^P·f + 1 ([`taylor_solution`]),
//! sharing no code with the contour-rerouting evaluator beyond polynomial
//! arithmetic.

use crate::algebra::{Poly, ProblemSpec, RationalFn};
use crate::field::Field;
use crate::logscale::LogComplex;
use crate::paths;
use crate::quad::{integrate_log, QuadOptions};
use crate::reroute::{
    build_ledger, chi_series, eval_h, eval_h_forced, eval_solution, HRegime, RerouteLedger,
};
use crate::{Error, Result};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// One checked sample: what was measured, what it was compared against, and
/// the signed margin (oriented so that `margin >= 0.0` means pass).
#[derive(Debug, Clone)]
pub struct SampleRecord {
    /// Reproduction parameters (family, x, k, η, …) in `key=value` form.
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Outcome of one verification claim.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub claim: String,
    pub samples: Vec<SampleRecord>,
    /// Samples skipped because they fall in a reported-unresolvable band.
    pub skipped: usize,
    pub pass: bool,
    /// Wall-clock time; excluded from CSV output to keep reports
    /// byte-deterministic.
    pub runtime: Duration,
}

impl VerificationReport {
    fn assemble(claim: &str, samples: Vec<SampleRecord>, skipped: usize, t0: Instant) -> Self {
        let pass = samples.iter().all(|s| s.pass);
        VerificationReport {
            claim: claim.to_string(),
            samples,
            skipped,
            pass,
            runtime: t0.elapsed(),
        }
    }

    fn from_error(claim: &str, e: Error, t0: Instant) -> Self {
        VerificationReport {
            claim: claim.to_string(),
            samples: vec![SampleRecord {
                label: format!("error: {e}"),
                measured: f64::NAN,
                bound: f64::NAN,
                margin: f64::NAN,
                pass: false,
            }],
            skipped: 0,
            pass: false,
            runtime: t0.elapsed(),
        }
    }

    /// One human-readable line.
    pub fn summary_line(&self) -> String {
        let worst = self
            .samples
            .iter()
            .map(|s| s.margin)
            .fold(f64::INFINITY, f64::min);
        format!(
            "{:<12} {}  samples={} skipped={} min_margin={:.6e} ({:.2}s)",
            self.claim,
            if self.pass { "PASS" } else { "FAIL" },
            self.samples.len(),
            self.skipped,
            worst,
            self.runtime.as_secs_f64(),
        )
    }
}

pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Deterministic CSV rendering (no timestamps, fixed ordering, 17 significant
/// digits). Two runs with the same configuration produce identical bytes.
pub fn to_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from("claim,sample,measured,bound,margin,pass\n");
    for r in reports {
        for s in &r.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.claim,
                s.label.replace(',', ";"),
                fmt17(s.measured),
                fmt17(s.bound),
                fmt17(s.margin),
                s.pass
            ));
        }
    }
    out
}

fn sample(label: String, measured: f64, bound: f64, margin: f64) -> SampleRecord {
    SampleRecord { label, measured, bound, margin, pass: margin >= 0.0 }
}

/// Trend policy for asymptotic (→ limit) claims: the final deviation is within
/// `tol` and the deviations improve monotonically over the last three samples
/// (with a small slack for quadrature noise).
fn trend_ok(devs: &[f64], tol: f64) -> bool {
    let n = devs.len();
    if n == 0 {
        return false;
    }
    if devs[n - 1].abs() > tol {
        return false;
    }
    if n >= 3 {
        let a = devs[n - 3].abs();
        let b = devs[n - 2].abs();
        let c = devs[n - 1].abs();
        return c <= b + 0.05 * a.max(tol) && b <= a + 0.05 * a.max(tol);
    }
    true
}

// ---------------------------------------------------------------------------
// Test families
// ---------------------------------------------------------------------------

fn cx(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// S = 1, P = z, z0 = 0, θ = π/4: U = e^z exactly.
pub fn family_ez() -> Field {
    Field::new(
        ProblemSpec::new(
            Poly::from_real(&[0.0, 1.0]),
            RationalFn::from_poly(Poly::one()),
            cx(0.0, 0.0),
            cx(1.0, 0.0),
            0.0,
            PI / 4.0,
        )
        .unwrap(),
    )
    .unwrap()
}

/// S = 2z, P = z², z0 = 3, θ = π/8: U = e^{z²} exactly.
pub fn family_ez2() -> Field {
    Field::new(
        ProblemSpec::new(
            Poly::from_real(&[0.0, 0.0, 1.0]),
            RationalFn::from_poly(Poly::from_real(&[0.0, 2.0])),
            cx(3.0, 0.0),
            cx(1.0, 0.0),
            0.0,
            PI / 8.0,
        )
        .unwrap(),
    )
    .unwrap()
}

/// S = 3z², P = z³, z0 = 0, θ = π/12: U = e^{z³} exactly.
pub fn family_ez3() -> Field {
    Field::new(
        ProblemSpec::new(
            Poly::from_real(&[0.0, 0.0, 0.0, 1.0]),
            RationalFn::from_poly(Poly::from_real(&[0.0, 0.0, 3.0])),
            cx(0.0, 0.0),
            cx(1.0, 0.0),
            0.0,
            PI / 12.0,
        )
        .unwrap(),
    )
    .unwrap()
}

/// S = z², P = z, z0 = 5, θ = π/4: terminated with Q = z² − 2z + 2 (non-monic
/// S, m − n + 1 = 2 > 0).
pub fn family_poly() -> Field {
    Field::new(
        ProblemSpec::new(
            Poly::from_real(&[0.0, 1.0]),
            RationalFn::from_poly(Poly::from_real(&[0.0, 0.0, 1.0])),
            cx(5.0, 0.0),
            cx(1.0, 0.0),
            0.0,
            PI / 4.0,
        )
        .unwrap(),
    )
    .unwrap()
}

/// S = 1/(z − 0.5), P = z, z0 = 2, θ = π/4, pole disk radius 1: the expansion
/// does not terminate (m − n + 1 = 0 at the first step, then negative).
pub fn family_ratl() -> Field {
    Field::new(
        ProblemSpec::new(
            Poly::from_real(&[0.0, 1.0]),
            RationalFn::new(Poly::one(), Poly::from_real(&[-0.5, 1.0])).unwrap(),
            cx(2.0, 0.0),
            cx(1.0, 0.0),
            1.0,
            PI / 4.0,
        )
        .unwrap(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Taylor-stepping ODE oracle
// ---------------------------------------------------------------------------

const ORD: usize = 24;

fn series_mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); ORD];
    for (i, &ai) in a.iter().enumerate().take(ORD) {
        if ai.norm_sqr() == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(ORD - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// exp of a power series via (e^a)′ = a′·e^a. The constant term must satisfy
/// |Re a₀| ≤ 300 so that e^{a₀} stays in double range.
fn series_exp(a: &[C]) -> Result<Vec<C>> {
    if a[0].re.abs() > 300.0 {
        return Err(Error::Overflow(a[0].re));
    }
    let mut b = vec![C::new(0.0, 0.0); ORD];
    b[0] = a[0].exp();
    for k in 1..ORD {
        let mut acc = C::new(0.0, 0.0);
        for j in 1..=k {
            acc += (j as f64) * a[j] * b[k - j];
        }
        b[k] = acc / k as f64;
    }
    Ok(b)
}

/// 1 / a for a power series with a₀ ≠ 0.
fn series_inv(a: &[C]) -> Result<Vec<C>> {
    if a[0].norm() == 0.0 {
        return Err(Error::PoleEval(C::new(0.0, 0.0)));
    }
    let mut b = vec![C::new(0.0, 0.0); ORD];
    b[0] = 1.0 / a[0];
    for k in 1..ORD {
        let mut acc = C::new(0.0, 0.0);
        for j in 1..=k {
            acc += a[j] * b[k - j];
        }
        b[k] = -acc * b[0];
    }
    Ok(b)
}

/// Taylor coefficients of p(z_c + h) in h, padded/truncated to [`ORD`].
fn shifted(p: &Poly, z_c: C) -> Vec<C> {
    let s = p.compose_linear(C::new(1.0, 0.0), z_c);
    let mut out = vec![C::new(0.0, 0.0); ORD];
    for (i, &c) in s.coeffs().iter().enumerate().take(ORD) {
        out[i] = c;
    }
    out
}

/// f in split representation f = g·e^ℓ with |g| renormalized to ~1 after each
/// step, so that doubly-exponential magnitudes never touch the mantissa.
#[derive(Debug, Clone, Copy)]
struct ScaledValue {
    g: C,
    lscale: f64,
}

impl ScaledValue {
    fn to_log(self) -> LogComplex {
        if self.g.norm() == 0.0 {
            LogComplex::zero()
        } else {
            LogComplex::new(self.lscale + self.g.norm().ln(), self.g.arg())
        }
    }
}

/// One Taylor step of f′ = S·e^P·f + 1 from z_c toward z_c + h_dir·h_len,
/// returning the advanced value and the actual step taken (≤ h_len).
fn taylor_step(
    spec: &ProblemSpec,
    z_c: C,
    h_dir: C,
    h_len: f64,
    v: ScaledValue,
    step_cap: f64,
) -> Result<(ScaledValue, f64)> {
    // r(h) = S(z_c + h·dir)·e^{P(z_c + h·dir)} as a series in the arclength h.
    let p_series: Vec<C> = shifted(&spec.p, z_c)
        .iter()
        .enumerate()
        .map(|(i, &c)| c * h_dir.powi(i as i32))
        .collect();
    let num: Vec<C> = shifted(&spec.s.num, z_c)
        .iter()
        .enumerate()
        .map(|(i, &c)| c * h_dir.powi(i as i32))
        .collect();
    let den: Vec<C> = shifted(&spec.s.den, z_c)
        .iter()
        .enumerate()
        .map(|(i, &c)| c * h_dir.powi(i as i32))
        .collect();
    let r = series_mul(&series_mul(&num, &series_inv(&den)?), &series_exp(&p_series)?);

    // Convergence-radius estimate: keep |r_j|·h^j ≤ step_cap^j term-wise.
    let mut rho = r[0].norm().max(1.0);
    for (j, rj) in r.iter().enumerate().skip(1) {
        let m = rj.norm();
        if m > 0.0 {
            rho = rho.max(m.powf(1.0 / j as f64));
        }
    }
    let h = (step_cap / rho).min(h_len);

    // Taylor recurrence for g(h) with f = g·e^ℓ and d/dh = dir·d/dz:
    // g_{k+1} = dir·(Σ r_j g_{k−j} + [k=0]·e^{−ℓ})/(k+1).
    let mut gs = vec![C::new(0.0, 0.0); ORD + 1];
    gs[0] = v.g;
    let inhom = if v.lscale > 700.0 { 0.0 } else { (-v.lscale).exp() };
    for k in 0..ORD {
        let mut acc = C::new(0.0, 0.0);
        for j in 0..=k {
            acc += r[j] * gs[k - j];
        }
        if k == 0 {
            acc += C::new(inhom, 0.0);
        }
        gs[k + 1] = h_dir * acc / (k + 1) as f64;
    }
    let mut g = C::new(0.0, 0.0);
    for &c in gs.iter().rev() {
        g = g * h + c;
    }
    let m = g.norm();
    let out = if m > 0.0 {
        ScaledValue { g: g / m, lscale: v.lscale + m.ln() }
    } else {
        ScaledValue { g, lscale: v.lscale }
    };
    Ok((out, h))
}

/// Independent solution oracle: integrate f′ = S·e^P·f + 1 with f(z0) =
/// c·e^{U(z0)} along the polyline `waypoints` (which must start at z0 and
/// avoid the pole disk), recording f at every waypoint. `step_cap` bounds
/// |r₀|·h per step (default 0.25; halve it for the self-convergence check).
pub fn taylor_solution_along(
    field: &Field,
    waypoints: &[C],
    step_cap: f64,
) -> Result<Vec<LogComplex>> {
    let spec = &field.spec;
    assert_eq!(waypoints[0], spec.z0, "oracle path must start at the base point");
    // f(z0) = c·e^{U(z0)}: |e^U| = e^{Re U} with Re U = e^{lmag U}·cos(arg U).
    let u0 = field.u_value(spec.z0)?;
    if u0.lmag > 690.0 {
        return Err(Error::Overflow(u0.lmag));
    }
    let re_u0 = u0.lmag.exp() * u0.arg.cos();
    let im_u0 = u0.lmag.exp() * u0.arg.sin();
    let mut v = if spec.c.norm() == 0.0 {
        ScaledValue { g: C::new(0.0, 0.0), lscale: 0.0 }
    } else {
        ScaledValue {
            g: C::from_polar(1.0, im_u0 + spec.c.arg()),
            lscale: re_u0 + spec.c.norm().ln(),
        }
    };
    let mut out = vec![v.to_log()];
    for w in waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        let dir = (b - a) / len;
        let mut t = 0.0;
        while t < len {
            let (nv, h) = taylor_step(spec, a + dir * t, dir, len - t, v, step_cap)?;
            v = nv;
            t += h;
        }
        out.push(v.to_log());
    }
    Ok(out)
}

/// Oracle waypoints: straight from z0 to the first listed ray point, then
/// chords between consecutive ray points (ascending x).
///
/// Forward integration is conditionally stable only along paths where Re U
/// never recovers from a deep trough: error committed where Re U = −D is
/// amplified by e^{D} once Re U climbs back, so the points must stay ahead of
/// the first anti-window center (trough depth ≲ 18 e-folds keeps the floor
/// below 1e−8). The straight chords here satisfy that for the test families;
/// they also clear the pole-exclusion disk.
fn oracle_waypoints(field: &Field, xs: &[f64]) -> Vec<C> {
    let t = field.spec.theta.tan();
    let mut wp = vec![field.spec.z0];
    for &x in xs {
        wp.push(C::new(x, x * t));
    }
    wp
}

// ---------------------------------------------------------------------------
// Claim drivers
// ---------------------------------------------------------------------------

/// Mean-value identities: (1/2π)∫₀^{2π} e^{−ω cos t}·cos(ω sin t) dt = 1 and
/// the sine counterpart = 0, for ω ∈ {0.5, 1, 2, 5}, within 1e−9.
pub fn check_identities() -> VerificationReport {
    let t0 = Instant::now();
    let opts = QuadOptions { high_accuracy: true, ..QuadOptions::default() };
    let mut samples = Vec::new();
    for omega in [0.5, 1.0, 2.0, 5.0] {
        // Combined: (1/2π)∫ e^{−ω e^{it}} dt = 1 + 0i; split into parts.
        let val = integrate_log(
            |t| Ok(LogComplex::exp_of(-omega * C::from_polar(1.0, t))),
            0.0,
            TAU,
            None,
            &opts,
        )
        .and_then(|v| v.to_complex());
        match val {
            Ok(v) => {
                let cos_part = v.re / TAU;
                let sin_part = v.im / TAU;
                samples.push(sample(
                    format!("omega={omega} cos"),
                    cos_part,
                    1.0,
                    1e-9 - (cos_part - 1.0).abs(),
                ));
                samples.push(sample(
                    format!("omega={omega} sin"),
                    sin_part,
                    0.0,
                    1e-9 - sin_part.abs(),
                ));
            }
            Err(e) => samples.push(SampleRecord {
                label: format!("omega={omega} error: {e}"),
                measured: f64::NAN,
                bound: f64::NAN,
                margin: f64::NAN,
                pass: false,
            }),
        }
    }
    VerificationReport::assemble("identities", samples, 0, t0)
}

/// The window lower bound: lmag of the bound value
/// (1−ε)·((sin nθ)^{1/n}/(n cos θ))·x·exp(e^{(1−ε)·(cos nθ/cosⁿθ)·xⁿ}·sin ε).
fn window_bound_lmag(n: usize, theta: f64, eps: f64, x: f64) -> f64 {
    let kappa = (n as f64 * theta).cos() / theta.cos().powi(n as i32);
    let pre = (1.0 - eps) * (n as f64 * theta).sin().powf(1.0 / n as f64)
        / (n as f64 * theta.cos())
        * x;
    ((1.0 - eps) * kappa * x.powf(n as f64)).exp() * eps.sin() + pre.ln()
}

/// Doubly-exponential growth on ray windows: lmag f exceeds the bound at the
/// window centers and interior quartiles for k in `k_lo..=k_hi`, with the
/// center margin increasing in k for k ≥ 5.
pub fn check_theorem1(
    field: &Field,
    name: &str,
    k_lo: i64,
    k_hi: i64,
) -> Result<VerificationReport> {
    let t0 = Instant::now();
    let eps = 0.1;
    let ledger = build_ledger(field, 1.0, eps, k_hi + 1)?;
    let n = field.spec.n();
    let theta = field.spec.theta;
    let tan = theta.tan();
    let mut samples = Vec::new();
    let mut center_margins: Vec<(i64, f64)> = Vec::new();
    for w in &ledger.windows.windows {
        if w.k < k_lo || w.k > k_hi {
            continue;
        }
        for (tag, x) in [
            ("q1", w.x_lo + 0.25 * (w.x_hi - w.x_lo)),
            ("center", w.x_center),
            ("q3", w.x_lo + 0.75 * (w.x_hi - w.x_lo)),
        ] {
            let f = eval_solution(field, Some(&ledger), C::new(x, x * tan))?;
            let bound = window_bound_lmag(n, theta, eps, x);
            let margin = f.lmag - bound;
            if tag == "center" {
                center_margins.push((w.k, margin));
            }
            samples.push(sample(
                format!("family={name} k={} {tag} x={x:.6}", w.k),
                f.lmag,
                bound,
                margin,
            ));
        }
    }
    // Margin growth across windows for k ≥ 5.
    let tail: Vec<&(i64, f64)> = center_margins.iter().filter(|(k, _)| *k >= 5).collect();
    for pair in tail.windows(2) {
        let (k0, m0) = *pair[0];
        let (k1, m1) = *pair[1];
        samples.push(sample(
            format!("family={name} margin-growth k={k0}->{k1}"),
            m1,
            m0,
            m1 - m0,
        ));
    }
    Ok(VerificationReport::assemble(
        &format!("thm1-{name}"),
        samples,
        0,
        t0,
    ))
}

/// Asymptotic ray factor: |H|·n·cosθ/((sin nθ)^{1/n}·x) at window centers
/// lies in [0.8, 1.2] at the largest k and improves over the final 3 windows.
pub fn check_ray_factor(field: &Field, name: &str, k_hi: i64) -> Result<VerificationReport> {
    let t0 = Instant::now();
    let ledger = build_ledger(field, 1.0, 0.1, k_hi + 1)?;
    let n = field.spec.n() as f64;
    let theta = field.spec.theta;
    let scale = n * theta.cos() / (n * theta).sin().powf(1.0 / n);
    let mut samples = Vec::new();
    let mut devs = Vec::new();
    for w in &ledger.windows.windows {
        if w.k < 2 || w.k > k_hi {
            continue;
        }
        let h = eval_h(field, &ledger, w.x_center)?;
        let factor = h.rel.lmag.exp() * scale / w.x_center;
        devs.push(factor - 1.0);
        samples.push(sample(
            format!("family={name} k={} x={:.6}", w.k, w.x_center),
            factor,
            1.0,
            0.2 - (factor - 1.0).abs(),
        ));
    }
    samples.push(sample(
        format!("family={name} trend(final 3)"),
        devs.last().copied().unwrap_or(f64::NAN),
        0.0,
        if trend_ok(&devs, 0.2) { 1.0 } else { -1.0 },
    ));
    Ok(VerificationReport::assemble(
        &format!("rayfactor-{name}"),
        samples,
        0,
        t0,
    ))
}

/// Anti-window stability: over an η-grid at e^𝐮 spanning ~1e4 … ~1e28, the
/// ratio ρ = |H|·(e^𝐮 cos η)/exp(e^𝐮 cos η) stays within [1e−3, …] with
/// spread ≤ 1e3; χ decreases strictly on every retained lattice; brackets
/// ≤ 1e−10; the two quarter regimes agree to 1e−6 where both apply; I₁ is
/// negative whenever the anchor phase lands in the second quadrant.
pub fn check_theorem2() -> Result<VerificationReport> {
    let t0 = Instant::now();
    let field = family_ez();
    let eps = 0.1;
    let ledger = build_ledger(&field, 1.0, eps, 24)?;
    let theta = field.spec.theta;
    let n_grid = 20usize;
    let eta_lo = eps;
    let eta_hi = PI / 2.0 - eps;
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    let mut rhos: Vec<f64> = Vec::new();
    let mut l1_checked = 0usize;

    for k_anti in [1i64, 2, 10] {
        for i in 0..n_grid {
            let eta = eta_lo + (eta_hi - eta_lo) * i as f64 / (n_grid - 1) as f64;
            // For this family 𝐯 = x·tanθ on the ray; place 𝐯 = (2k+1)π + η.
            let x = ((2 * k_anti + 1) as f64 * PI + eta) / theta.tan();
            let h = match eval_h(&field, &ledger, x) {
                Ok(h) => h,
                Err(Error::UnresolvedBand(_)) | Err(Error::RegimeUndecidable(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let log_rho = h.rel.lmag + h.base_exponent.ln();
            let rho = log_rho.exp();
            rhos.push(rho);
            samples.push(sample(
                format!("k={k_anti} eta={eta:.4} rho"),
                rho,
                1e-3,
                log_rho - (1e-3f64).ln(),
            ));
            if h.regime == HRegime::AntiSeries {
                let fr = paths::branch_frame(&field, C::new(x, x * theta.tan()))?;
                let cs = chi_series(&field, &fr, k_anti, eps)?;
                let monotone = cs
                    .window
                    .lnchi
                    .windows(2)
                    .all(|p| p[1] < p[0]);
                samples.push(sample(
                    format!("k={k_anti} eta={eta:.4} chi-monotone"),
                    if monotone { 1.0 } else { 0.0 },
                    1.0,
                    if monotone { 0.0 } else { -1.0 },
                ));
                samples.push(sample(
                    format!("k={k_anti} eta={eta:.4} bracket"),
                    cs.bracket,
                    1e-10,
                    1e-10 - cs.bracket,
                ));
                if cs.window.l == 1 {
                    l1_checked += 1;
                }
            }
        }
    }

    // Regime agreement on the overlap band (e^𝐮 ≈ 1.2e4 at k = 1).
    for i in 0..n_grid {
        let eta = eta_lo + (eta_hi - eta_lo) * i as f64 / (n_grid - 1) as f64;
        let x = (3.0 * PI + eta) / theta.tan();
        let a = eval_h_forced(&field, &ledger, x, Some(HRegime::AntiDirect))?;
        let b = eval_h_forced(&field, &ledger, x, Some(HRegime::AntiSeries))?;
        let dev = (a.rel.lmag - b.rel.lmag).abs();
        samples.push(sample(
            format!("overlap eta={eta:.4} regime-agreement"),
            dev,
            1e-6,
            1e-6 - dev,
        ));
    }

    // Sign-flip stability: ρ(η) vs ρ(−η) within a factor of 10.
    for k_anti in [1i64, 2] {
        for eta in [0.3, 0.7, 1.1] {
            let mut lr = [0.0f64; 2];
            for (j, e) in [eta, -eta].iter().enumerate() {
                let x = ((2 * k_anti + 1) as f64 * PI + e) / theta.tan();
                let h = eval_h(&field, &ledger, x)?;
                lr[j] = h.rel.lmag + h.base_exponent.ln();
            }
            let dev = (lr[0] - lr[1]).abs();
            samples.push(sample(
                format!("k={k_anti} eta=+-{eta} sign-flip"),
                dev.exp(),
                10.0,
                10.0f64.ln() - dev,
            ));
        }
    }

    // Cosine-moment sign at the λ = π/2 lattice case: pin the anchor phase
    // ŵ = e^𝐮 sin|η| to π/2 (mod 2π) by Newton in x; the retained cells then
    // span quadrants where cos < 0 against a strictly decreasing density, so
    // the cosine moment I₁ must come out negative.
    for eta0 in [0.5, 0.9] {
        let k_anti = 2i64;
        let anchor = |x: f64| -> Result<f64> {
            let fr = paths::branch_frame(&field, C::new(x, x * theta.tan()))?;
            let eta = fr.v - (2 * k_anti + 1) as f64 * PI;
            Ok(fr.u.exp() * eta.abs().sin())
        };
        let mut x = ((2 * k_anti + 1) as f64 * PI + eta0) / theta.tan();
        let w0 = anchor(x)?;
        let target = TAU * ((w0 - 0.5 * PI) / TAU).round() + 0.5 * PI;
        // ŵ ~ 1e7 carries ~1e−5 absolute noise from the frame itself; the
        // sign check only needs λ pinned to a small fraction of a quadrant.
        let mut pinned = None;
        for _ in 0..60 {
            let w = anchor(x)?;
            if (w - target).abs() < 1e-4 {
                pinned = Some(x);
                break;
            }
            let h = 1e-6;
            let w2 = anchor(x + h)?;
            x += (target - w) * h / (w2 - w);
        }
        let x =
            pinned.ok_or_else(|| Error::NewtonFailed("anchor-phase pinning stalled".into()))?;
        let fr = paths::branch_frame(&field, C::new(x, x * theta.tan()))?;
        let cs = chi_series(&field, &fr, k_anti, eps)?;
        let neg = !cs.i1.is_zero() && (cs.i1.arg - PI).abs() < 1e-12;
        samples.push(sample(
            format!("eta0={eta0} lambda=pi/2 I1-negative"),
            if neg { -1.0 } else { 1.0 },
            0.0,
            if neg { 0.0 } else { -1.0 },
        ));
    }

    // Empirical stability-constant report: min ρ and spread.
    let rho_min = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_max = rhos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    samples.push(sample("xi_min".into(), rho_min, 1e-3, rho_min - 1e-3));
    samples.push(sample(
        "rho-spread".into(),
        rho_max / rho_min,
        1e3,
        1e3 - rho_max / rho_min,
    ));
    samples.push(sample(
        "l=1-cases-observed".into(),
        l1_checked as f64,
        1.0,
        l1_checked as f64 - 1.0,
    ));
    Ok(VerificationReport::assemble("thm2", samples, skipped, t0))
}

/// Anti-window upper bound: lmag f ≤ ln(4π) + 0.05·e^𝐮·|cos ζ| at and near
/// anti-window centers — the doubly-exponential factor e^{Re U} must cancel
/// against the tail of H inside the evaluator, in both quarter regimes and
/// for a perturbed integration constant.
pub fn check_upper_antiwindow() -> Result<VerificationReport> {
    let t0 = Instant::now();
    let mut samples = Vec::new();

    let push = |field: &Field,
                    ledger: &RerouteLedger,
                    name: &str,
                    x: f64,
                    samples: &mut Vec<SampleRecord>|
     -> Result<()> {
        let theta = field.spec.theta;
        let z = C::new(x, x * theta.tan());
        let fr = paths::branch_frame(field, z)?;
        let zeta = fr.v - TAU * (fr.v / TAU).round();
        let f = eval_solution(field, Some(ledger), z)?;
        let bound = (4.0 * PI).ln() + 0.05 * fr.u.exp() * zeta.cos().abs();
        samples.push(sample(
            format!("family={name} x={x:.6} e_u={:.3e}", fr.u.exp()),
            f.lmag,
            bound,
            bound - f.lmag,
        ));
        Ok(())
    };

    // Family with U = e^z: exact center at moderate magnitude, then series
    // territory at η = ±1.2ε on two far anti-windows.
    let f1 = family_ez();
    let l1 = build_ledger(&f1, 1.0, 0.1, 24)?;
    push(&f1, &l1, "ez", 3.0 * PI, &mut samples)?;
    for k_anti in [2i64, 10] {
        for s in [-1.0, 1.0] {
            let x = (2 * k_anti + 1) as f64 * PI + s * 0.12;
            push(&f1, &l1, "ez", x, &mut samples)?;
        }
    }
    // Perturbed constant: c ← c + 1 leaves the bound intact (H dominates).
    let f1c = Field::new(
        ProblemSpec::new(
            f1.spec.p.clone(),
            f1.spec.s.clone(),
            f1.spec.z0,
            f1.spec.c + C::new(1.0, 0.0),
            f1.spec.pole_radius,
            f1.spec.theta,
        )
        .unwrap(),
    )?;
    let l1c = build_ledger(&f1c, 1.0, 0.1, 3)?;
    push(&f1c, &l1c, "ez-cshift", 3.0 * PI, &mut samples)?;

    // Family with U = e^{z²}: center at moderate magnitude, far samples at
    // η = ±0.75 (the series band starts at |η| ≳ ε + (n−1)θ here).
    let f2 = family_ez2();
    let l2 = build_ledger(&f2, 1.0, 0.1, 8)?;
    let t2 = 2.0 * f2.spec.theta.tan();
    push(&f2, &l2, "ez2", (3.0 * PI / t2).sqrt(), &mut samples)?;
    for s in [-1.0, 1.0] {
        let x = ((5.0 * PI + s * 0.75) / t2).sqrt();
        push(&f2, &l2, "ez2", x, &mut samples)?;
    }
    Ok(VerificationReport::assemble("upper", samples, 0, t0))
}

/// Least-squares slope of ln(ln(lmag f)) against ln x over window centers
/// k = 5…k_hi: the iterated-log growth rate, which must equal n.
pub fn estimate_hyperorder(field: &Field, name: &str, k_hi: i64) -> Result<VerificationReport> {
    let t0 = Instant::now();
    let ledger = build_ledger(field, 1.0, 0.1, k_hi + 1)?;
    let tan = field.spec.theta.tan();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for w in &ledger.windows.windows {
        if w.k < 5 || w.k > k_hi {
            continue;
        }
        let f = eval_solution(field, Some(&ledger), C::new(w.x_center, w.x_center * tan))?;
        if f.lmag <= 1.0 {
            continue;
        }
        xs.push(w.x_center.ln());
        ys.push(f.lmag.ln().ln());
    }
    let n_pts = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n_pts;
    let my = ys.iter().sum::<f64>() / n_pts;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let n = field.spec.n() as f64;
    let tol = if field.spec.n() >= 3 { 0.1 } else { 0.05 };
    let samples = vec![sample(
        format!("family={name} points={} slope", xs.len()),
        slope,
        n,
        tol - (slope - n).abs(),
    )];
    Ok(VerificationReport::assemble(
        &format!("hyperorder-{name}"),
        samples,
        0,
        t0,
    ))
}

/// Truncated factorial series for ∫ e^{e^s} ds against log-domain quadrature:
/// ∫_0^{ln r} e^{e^s} ds ≈ (e^r/r)·Σ_{j=0}^{k} j!/r^j with relative error
/// bounded by (k+1)!/r^k.
pub fn check_expexp_series(r: f64, k_terms: usize) -> VerificationReport {
    let t0 = Instant::now();
    let opts = QuadOptions { high_accuracy: true, ..QuadOptions::default() };
    let quad = integrate_log(
        |s| Ok(LogComplex::new(s.exp(), 0.0)),
        0.0,
        r.ln(),
        None,
        &opts,
    );
    let mut samples = Vec::new();
    match quad {
        Ok(q) => {
            let mut series = 0.0f64;
            let mut fact = 1.0f64;
            for j in 0..=k_terms {
                if j > 0 {
                    fact *= j as f64;
                }
                series += fact / r.powi(j as i32);
            }
            let series_lmag = r - r.ln() + series.ln();
            let rel_err = (q.lmag - series_lmag).exp_m1().abs();
            let mut bound = fact * (k_terms as f64 + 1.0) / r.powi(k_terms as i32);
            // The quadrature runs from s = 0 (w = 1), so its value misses the
            // O(e) lower-limit constant; include it in the error budget.
            bound += 3.0 * (1.0 - r).exp() * r;
            samples.push(sample(
                format!("r={r} k={k_terms} rel-err"),
                rel_err,
                bound,
                bound - rel_err,
            ));
        }
        Err(e) => samples.push(SampleRecord {
            label: format!("r={r} error: {e}"),
            measured: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            pass: false,
        }),
    }
    VerificationReport::assemble("expexp", samples, 0, t0)
}

/// Leading-term trend of the factorial series: the ratio of quadrature to
/// e^r/r tends to 1 as r grows.
pub fn check_expexp_trend() -> VerificationReport {
    let t0 = Instant::now();
    let opts = QuadOptions { high_accuracy: true, ..QuadOptions::default() };
    let mut devs = Vec::new();
    let mut samples = Vec::new();
    for r in [10.0, 20.0, 40.0] {
        let q = integrate_log(
            |s| Ok(LogComplex::new(s.exp(), 0.0)),
            0.0,
            (r as f64).ln(),
            None,
            &opts,
        )
        .unwrap();
        let ratio = (q.lmag - (r - (r as f64).ln())).exp();
        devs.push(ratio - 1.0);
        samples.push(sample(
            format!("r={r} leading-ratio"),
            ratio,
            1.0,
            0.2 - (ratio - 1.0).abs(),
        ));
    }
    samples.push(sample(
        "trend(final 3)".into(),
        devs.last().copied().unwrap(),
        0.0,
        if trend_ok(&devs, 0.2) { 1.0 } else { -1.0 },
    ));
    VerificationReport::assemble("expexp-trend", samples, 0, t0)
}

/// Independent-oracle suite:
/// 1. Taylor-stepping ODE integration vs the evaluator at 20 near-field ray
///    points per family, |Δ lmag| and |Δ arg| ≤ 1e−6, for all five families.
/// 2. Step-halving self-consistency of the oracle (≤ 1e−10).
/// 3. Exact-antiderivative families: field magnitude equals Re P + ln|Q| to
///    1e−12.
/// 4. The level-0 tail limit equals E₁(1) to 1e−9.
/// 5. Vertical-periodicity: Im J_k = 2kπ exactly for U = e^z at moderate x.
pub fn run_oracles() -> Result<VerificationReport> {
    let t0 = Instant::now();
    let mut samples = Vec::new();

    let families: Vec<(&str, Field, Vec<f64>)> = vec![
        // Upper x per family keeps 𝐯 on the ray below π (ahead of the first
        // anti-window center), bounding the trough depth the oracle path must
        // climb out of; see `oracle_waypoints`.
        ("ez", family_ez(), (0..20).map(|i| 0.5 + 2.4 * i as f64 / 19.0).collect()),
        ("ez2", family_ez2(), (0..20).map(|i| 0.5 + 1.35 * i as f64 / 19.0).collect()),
        ("ez3", family_ez3(), (0..20).map(|i| 0.4 + 1.1 * i as f64 / 19.0).collect()),
        // poly starts past x = 1: its antiderivative factor z²−2z+2 vanishes
        // at 1+i, which lies on the θ = π/4 ray, and branch continuation
        // cannot pass a zero of U.
        ("poly", family_poly(), (0..20).map(|i| 1.3 + 1.3 * i as f64 / 19.0).collect()),
        ("ratl", family_ratl(), (0..20).map(|i| 1.5 + 1.5 * i as f64 / 19.0).collect()),
    ];
    for (name, field, xs) in &families {
        let wps = oracle_waypoints(field, xs);
        let oracle = taylor_solution_along(field, &wps, 0.25)?;
        let skip = wps.len() - xs.len();
        for (i, &x) in xs.iter().enumerate() {
            let z = C::new(x, x * field.spec.theta.tan());
            let got = eval_solution(field, None, z)?;
            let want = &oracle[skip + i];
            let dl = (got.lmag - want.lmag).abs();
            let mut da = (got.arg - want.arg).rem_euclid(TAU);
            if da > PI {
                da = TAU - da;
            }
            samples.push(sample(
                format!("family={name} x={x:.4} lmag"),
                got.lmag,
                want.lmag,
                1e-6 - dl,
            ));
            samples.push(sample(
                format!("family={name} x={x:.4} arg"),
                got.arg,
                want.arg,
                1e-6 - da,
            ));
        }
    }

    // Step-halving self-test on the stiffest family.
    {
        let field = family_ez2();
        let xs = [1.5];
        let wps = oracle_waypoints(&field, &xs);
        let a = taylor_solution_along(&field, &wps, 0.25)?;
        let b = taylor_solution_along(&field, &wps, 0.125)?;
        let dl = (a.last().unwrap().lmag - b.last().unwrap().lmag).abs();
        samples.push(sample("self-test step-halving".into(), dl, 1e-10, 1e-10 - dl));
    }

    // Exact antiderivative: lmag U = Re P + ln|Q| to 1e−12 where Q ≡ 1.
    for (name, field) in [("ez", family_ez()), ("ez2", family_ez2()), ("ez3", family_ez3())] {
        let z = C::new(1.3, 0.7);
        let u = field.u_value(z)?;
        let want = field.spec.p.eval(z).re;
        let dev = (u.lmag - want).abs();
        samples.push(sample(
            format!("family={name} exact-antiderivative"),
            u.lmag,
            want,
            1e-12 - dev,
        ));
    }

    // E₁(1) tail limit.
    {
        let field = family_ez();
        let ledger = build_ledger(&field, 1.0, 0.1, 6)?;
        let d0 = ledger.level(0).unwrap().d_k;
        const E1_OF_1: f64 = 0.21938393439552026;
        let dev = (d0 - C::new(E1_OF_1, 0.0)).norm();
        samples.push(sample("ez d0=E1(1)".into(), d0.re, E1_OF_1, 1e-9 - dev));

        // Vertical periodicity: each full 2π of 𝐯 contributes exactly 2π to
        // Im J for U = e^z (the mean-value identity per period).
        for k in 1..=5i64 {
            let j = ledger.j_at(&field, k, 2.5)?;
            let dev = (j.im / (TAU * k as f64) - 1.0).abs();
            samples.push(sample(
                format!("ez x=2.5 ImJ_{k}/2kpi"),
                j.im / (TAU * k as f64),
                1.0,
                1e-8 - dev,
            ));
        }
    }

    Ok(VerificationReport::assemble("oracles", samples, 0, t0))
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Claim selector for the command-line driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimSet {
    Identities,
    Thm1,
    Thm2,
    Upper,
    Hyperorder,
    Oracles,
    All,
}

/// Run the selected claims (independent claims in parallel; output order is
/// fixed regardless of scheduling).
pub fn run_claims(which: ClaimSet) -> Vec<VerificationReport> {
    type Job = Box<dyn Fn() -> VerificationReport + Send + Sync>;
    let mut jobs: Vec<Job> = Vec::new();
    let want = |c: ClaimSet| which == ClaimSet::All || which == c;
    if want(ClaimSet::Identities) {
        jobs.push(Box::new(check_identities));
    }
    if want(ClaimSet::Oracles) {
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            run_oracles().unwrap_or_else(|e| VerificationReport::from_error("oracles", e, t0))
        }));
        jobs.push(Box::new(|| check_expexp_series(20.0, 3)));
        jobs.push(Box::new(|| check_expexp_series(50.0, 1)));
        jobs.push(Box::new(check_expexp_trend));
    }
    if want(ClaimSet::Thm1) {
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            check_theorem1(&family_ez(), "ez", 2, 20)
                .unwrap_or_else(|e| VerificationReport::from_error("thm1-ez", e, t0))
        }));
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            check_theorem1(&family_ez2(), "ez2", 2, 20)
                .unwrap_or_else(|e| VerificationReport::from_error("thm1-ez2", e, t0))
        }));
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            check_ray_factor(&family_ez(), "ez", 20)
                .unwrap_or_else(|e| VerificationReport::from_error("rayfactor-ez", e, t0))
        }));
    }
    if want(ClaimSet::Thm2) {
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            check_theorem2().unwrap_or_else(|e| VerificationReport::from_error("thm2", e, t0))
        }));
    }
    if want(ClaimSet::Upper) {
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            check_upper_antiwindow()
                .unwrap_or_else(|e| VerificationReport::from_error("upper", e, t0))
        }));
    }
    if want(ClaimSet::Hyperorder) {
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            estimate_hyperorder(&family_ez(), "ez", 20)
                .unwrap_or_else(|e| VerificationReport::from_error("hyperorder-ez", e, t0))
        }));
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            estimate_hyperorder(&family_ez2(), "ez2", 20)
                .unwrap_or_else(|e| VerificationReport::from_error("hyperorder-ez2", e, t0))
        }));
        jobs.push(Box::new(|| {
            let t0 = Instant::now();
            estimate_hyperorder(&family_ez3(), "ez3", 16)
                .unwrap_or_else(|e| VerificationReport::from_error("hyperorder-ez3", e, t0))
        }));
    }
    jobs.par_iter().map(|j| j()).collect()
}
