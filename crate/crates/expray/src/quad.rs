//! Adaptive Gauss–Legendre quadrature in log scale.
//!
//! The integrators in this crate accumulate contributions whose magnitudes
//! span hundreds of orders, so every node value is carried as a
//! [`LogComplex`](crate::logscale::LogComplex) and panels are combined with
//! max-shift compensated summation. A panel is accepted when a 15-point rule
//! agrees with its two halves to the requested relative tolerance *measured
//! against the global magnitude peak*, which automatically prunes refinement
//! in regions that are exponentially below the dominant contribution.

use crate::logscale::LogComplex;
use crate::{Error, Result};
use once_cell::sync::Lazy;

/// Number of nodes in the base rule.
const N_GL: usize = 15;

/// Gauss–Legendre nodes/weights on [−1, 1], computed once at startup by
/// Newton iteration on the degree-15 Legendre polynomial (no hardcoded
/// tables; the recurrence is exact and Newton converges to full precision
/// from the Chebyshev-like initial guesses).
static GL15: Lazy<([f64; N_GL], [f64; N_GL])> = Lazy::new(|| {
    let n = N_GL;
    let mut nodes = [0.0; N_GL];
    let mut weights = [0.0; N_GL];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
});

/// Legendre Pₙ(x) and Pₙ′(x) via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Options for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Relative tolerance against the global magnitude peak.
    pub rel_tol: f64,
    /// Maximum bisection depth per initial panel.
    pub max_depth: u32,
    /// Use double-double accumulation for the final cross-panel sum.
    pub high_accuracy: bool,
    /// Panels whose peak log-magnitude sits this far below the global peak
    /// are accepted without refinement: e^{−60} ≈ 9e−27 is far below any
    /// tolerance used in this crate.
    pub prune_drop: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-12, max_depth: 48, high_accuracy: false, prune_drop: 60.0 }
    }
}

/// One evaluated panel: its rule value and the largest node log-magnitude.
struct PanelEval {
    value: LogComplex,
    peak: f64,
}

fn eval_panel<F>(f: &mut F, a: f64, b: f64) -> Result<PanelEval>
where
    F: FnMut(f64) -> Result<LogComplex>,
{
    let (nodes, weights) = &*GL15;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut terms = Vec::with_capacity(N_GL);
    let mut peak = f64::NEG_INFINITY;
    for i in 0..N_GL {
        let t = mid + half * nodes[i];
        let v = f(t)?;
        peak = peak.max(v.lmag);
        terms.push(v.scale_complex(num_complex::Complex64::new(weights[i] * half, 0.0)));
    }
    Ok(PanelEval { value: LogComplex::sum(&terms, false), peak })
}

/// Integrate `f` (already including any dz/dt Jacobian, returned in log
/// scale) over the parameter interval [a, b].
///
/// `guide` optionally supplies a real "exponent profile" w(t); the initial
/// panels are split so |Δw| ≤ 0.8 per panel, which keeps the integrand close
/// to resolvable on each starting panel even when e^{w} varies by thousands
/// of orders across the full interval.
pub fn integrate_log<F>(
    mut f: F,
    a: f64,
    b: f64,
    guide: Option<&dyn Fn(f64) -> f64>,
    opts: &QuadOptions,
) -> Result<LogComplex>
where
    F: FnMut(f64) -> Result<LogComplex>,
{
    if a == b {
        return Ok(LogComplex::zero());
    }

    // Initial subdivision from the exponent guide.
    let mut cuts = vec![a];
    if let Some(g) = guide {
        // March adaptively: sample the guide on a fine grid and cut whenever
        // the accumulated |Δw| reaches 0.8.
        const SAMPLES: usize = 512;
        let mut wprev = g(a);
        let mut acc = 0.0;
        for i in 1..=SAMPLES {
            let t = a + (b - a) * i as f64 / SAMPLES as f64;
            let w = g(t);
            acc += (w - wprev).abs();
            wprev = w;
            if acc > 0.8 && i < SAMPLES {
                cuts.push(t);
                acc = 0.0;
            }
        }
    }
    cuts.push(b);

    // First pass: evaluate every initial panel to establish the global peak.
    let mut stack: Vec<(f64, f64, u32, PanelEval)> = Vec::new();
    let mut global_peak = f64::NEG_INFINITY;
    for w in cuts.windows(2) {
        let p = eval_panel(&mut f, w[0], w[1])?;
        global_peak = global_peak.max(p.peak);
        stack.push((w[0], w[1], 0, p));
    }

    let mut accepted: Vec<LogComplex> = Vec::new();
    while let Some((pa, pb, depth, whole)) = stack.pop() {
        // Prune: contributions exponentially below the global peak cannot
        // affect the sum at the working tolerances.
        if whole.peak < global_peak - opts.prune_drop && whole.value.lmag < global_peak - opts.prune_drop {
            accepted.push(whole.value);
            continue;
        }
        let mid = 0.5 * (pa + pb);
        let left = eval_panel(&mut f, pa, mid)?;
        let right = eval_panel(&mut f, mid, pb)?;
        global_peak = global_peak.max(left.peak).max(right.peak);
        let halves = LogComplex::sum(&[left.value, right.value], false);
        let diff = LogComplex::sum(&[whole.value, halves.neg()], false);
        // Accept when the whole-vs-halves discrepancy is negligible relative
        // to the largest contribution anywhere on the contour. A value whose
        // log-magnitude is L carries relative rounding noise of order |L|·ε
        // (the exponent itself is rounded), so the tolerance cannot be
        // tightened below that floor no matter how far the panel is split.
        let ref_mag = halves.lmag.max(global_peak + (pb - pa).abs().max(1e-300).ln());
        let noise = (whole.value.lmag.abs() + whole.value.arg.abs()) * f64::EPSILON * 32.0;
        let tol = opts.rel_tol.max(noise);
        if diff.is_zero() || diff.lmag <= ref_mag + tol.ln() {
            accepted.push(left.value);
            accepted.push(right.value);
            continue;
        }
        if depth >= opts.max_depth {
            return Err(Error::RefinementDepth(depth));
        }
        stack.push((pa, mid, depth + 1, left));
        stack.push((mid, pb, depth + 1, right));
    }

    Ok(LogComplex::sum(&accepted, opts.high_accuracy))
}

/// One smooth leg of a piecewise path, parametrized by arclength. Legs are
/// integrated separately so that quadrature panels never straddle a corner
/// where the Jacobian jumps (Gauss rules do not converge across a
/// discontinuity; bisection would exhaust its depth budget instead).
#[derive(Debug, Clone)]
pub enum PathLeg {
    /// Circular arc |z| = radius from theta_start, sweeping `sweep` radians
    /// (signed: positive is counterclockwise).
    Arc { radius: f64, theta_start: f64, sweep: f64 },
    /// Straight ray start + t·dir with |dir| = 1, t ∈ [0, len].
    Ray { start: num_complex::Complex64, dir: num_complex::Complex64, len: f64 },
    /// Straight segment from a to b.
    Segment { a: num_complex::Complex64, b: num_complex::Complex64 },
}

impl PathLeg {
    pub fn len(&self) -> f64 {
        match self {
            PathLeg::Arc { radius, sweep, .. } => (radius * sweep).abs(),
            PathLeg::Ray { len, .. } => *len,
            PathLeg::Segment { a, b } => (b - a).norm(),
        }
    }

    /// Point and dz/dt at arclength parameter t ∈ [0, len()].
    pub fn at(&self, t: f64) -> (num_complex::Complex64, num_complex::Complex64) {
        match self {
            PathLeg::Arc { radius, theta_start, sweep } => {
                let ang = theta_start + sweep.signum() * t / radius;
                let z = num_complex::Complex64::from_polar(*radius, ang);
                (z, z * num_complex::Complex64::new(0.0, sweep.signum() / *radius))
            }
            PathLeg::Ray { start, dir, .. } => (start + dir * t, *dir),
            PathLeg::Segment { a, b } => {
                let d = *b - *a;
                let n = d.norm();
                (a + d * (t / n), d / n)
            }
        }
    }

}

/// Integrate a log-scale integrand g(z)·dz over a piecewise-smooth path,
/// leg by leg. `guide` maps a point to a real exponent profile (typically
/// Re P + ln|rational part|) used for initial panel splitting.
pub fn integrate_legs<G>(
    legs: &[PathLeg],
    mut g: G,
    guide: Option<&dyn Fn(num_complex::Complex64) -> f64>,
    opts: &QuadOptions,
) -> Result<LogComplex>
where
    G: FnMut(num_complex::Complex64) -> Result<LogComplex>,
{
    let mut parts = Vec::with_capacity(legs.len());
    for leg in legs {
        let len = leg.len();
        if len == 0.0 {
            continue;
        }
        let leg_guide = guide.map(|gd| move |t: f64| gd(leg.at(t).0));
        let part = integrate_log(
            |t| {
                let (z, dz) = leg.at(t);
                Ok(g(z)?.scale_complex(dz))
            },
            0.0,
            len,
            leg_guide.as_ref().map(|f| f as &dyn Fn(f64) -> f64),
            opts,
        )?;
        parts.push(part);
    }
    Ok(LogComplex::sum(&parts, opts.high_accuracy))
}
