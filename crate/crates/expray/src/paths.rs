//! Curve construction in the (𝐮, 𝐯) field: the query ray, the level curves
//! L_k (𝐯 = 2kπ), the curve Ω̄ (𝐮 = ln ω), vertical crossings, and the
//! window/anti-window decomposition of the ray.
//!
//! All curve conditions are solved exactly by Newton iteration on the field
//! values (the leading-order closed forms become test predictions, not
//! implementation machinery). Predictor–corrector stepping keeps |Δ𝐯| ≤ π/8
//! and |Δ𝐮| ≤ 0.5 per node so branch continuity is never ambiguous.

use crate::field::{Field, FieldFrame};
use crate::quad::PathLeg;
use crate::{Error, Result};
use num_complex::Complex64 as C;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Truncation level for 𝐮 along level curves: e^{−e^u} < 1e−300 once
/// u > ln(690.8) ≈ 6.54; tracing to 7.0 leaves two decades of margin.
pub const U_STOP: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    /// The query ray arg z = θ.
    Ray,
    /// Level curve 𝐯 = 2kπ.
    LevelCurve(i64),
    /// Curve 𝐮 = ln ω.
    Omega(f64),
    /// Vertical segment Re z = x.
    Vertical(f64),
    /// Decaying mid-sector ray used for the far-field constant.
    LemmaRay,
}

/// An ordered polyline of field frames with a monotone arc parameter
/// (cumulative chord length).
#[derive(Debug, Clone)]
pub struct TracedPath {
    pub kind: PathKind,
    pub frames: Vec<FieldFrame>,
    pub param: Vec<f64>,
}

impl TracedPath {
    fn from_frames(kind: PathKind, frames: Vec<FieldFrame>) -> TracedPath {
        let mut param = Vec::with_capacity(frames.len());
        let mut acc = 0.0;
        for (i, fr) in frames.iter().enumerate() {
            if i > 0 {
                acc += (fr.z - frames[i - 1].z).norm();
            }
            param.push(acc);
        }
        TracedPath { kind, frames, param }
    }

    pub fn first(&self) -> &FieldFrame {
        self.frames.first().expect("path has at least one frame")
    }

    pub fn last(&self) -> &FieldFrame {
        self.frames.last().expect("path has at least one frame")
    }
}

/// One window (or anti-window) on the ray: the x-interval where
/// ζ = 𝐯 − 2kπ spans (−π/2+ε, π/2−ε) (windows) or (π/2+ε, 3π/2−ε)
/// (anti-windows, recorded with the same k as the window to their left).
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub k: i64,
    pub x_lo: f64,
    /// ζ = 0 for windows; ζ = π for anti-windows.
    pub x_center: f64,
    pub x_hi: f64,
}

#[derive(Debug, Clone)]
pub struct WindowSet {
    pub theta: f64,
    pub epsilon: f64,
    pub windows: Vec<Window>,
    pub anti_windows: Vec<Window>,
}

/// Branch-consistent frame at an arbitrary point: continue the field from the
/// base point z0 along the pole-avoiding arc+segment route. This fixes every
/// curve's branch to the convention v(z0) = principal arg U(z0).
pub fn branch_frame(field: &Field, z: C) -> Result<FieldFrame> {
    let base = field.base_frame()?;
    if (z - base.z).norm() == 0.0 {
        return Ok(base);
    }
    let z0 = field.spec.z0;
    let r0 = z0.norm();
    let mut legs: Vec<PathLeg> = Vec::new();
    if r0 == 0.0 {
        legs.push(PathLeg::Segment { a: z0, b: z });
    } else {
        let mut sweep = z.arg() - z0.arg();
        if sweep > PI {
            sweep -= TAU;
        } else if sweep < -PI {
            sweep += TAU;
        }
        if sweep != 0.0 {
            legs.push(PathLeg::Arc { radius: r0, theta_start: z0.arg(), sweep });
        }
        let corner = C::from_polar(r0, z.arg());
        if (z - corner).norm() > 0.0 {
            legs.push(PathLeg::Segment { a: corner, b: z });
        }
    }
    // Sample each leg coarsely; continue_along inserts midpoints as needed.
    let mut pts = vec![z0];
    for leg in &legs {
        let len = leg.len();
        let steps = (len / 0.5).ceil().max(2.0) as usize;
        for i in 1..=steps {
            pts.push(leg.at(len * i as f64 / steps as f64).0);
        }
    }
    let frames = field.continue_along(&pts, base.v)?;
    Ok(*frames.last().unwrap())
}

/// Trace Ω̄ (𝐮 = ln ω) through the upper region. The path is returned with v
/// ascending: it is traced downward from the seed until v ≤ −π/4 (or the
/// gradient collapses near a saddle of W, or the pole disk is approached) and
/// upward until v > 2π·(k_max + 1), so that every level-curve crossing the
/// branch actually meets is bracketed.
pub fn trace_omega(field: &Field, omega: f64, k_max: i64) -> Result<TracedPath> {
    assert!(omega > 0.0, "omega must be positive");
    let ln_omega = omega.ln();
    let seed = omega_seed(field, ln_omega)?;

    let mut down = march_omega(field, seed, ln_omega, -1.0, |fr: &FieldFrame| {
        fr.v <= -PI / 4.0
            || fr.wprime().norm() < 1e-2
            || fr.z.norm() < 1.2 * field.spec.pole_radius
            || fr.z.im < -0.5
    })?;
    let up = march_omega(field, seed, ln_omega, 1.0, |fr: &FieldFrame| {
        fr.v > TAU * (k_max + 1) as f64
    })?;

    down.reverse();
    down.extend_from_slice(&up[1..]); // both start with the seed
    Ok(TracedPath::from_frames(PathKind::Omega(omega), down))
}

/// Seed Ω̄ by 1-D Newton along the real axis (solve 𝐮(x, 0) = ln ω with
/// derivative 𝐮_x = 𝐯_y); if the axis root is a saddle of W (|W′| ≈ 0, e.g.
/// the origin for even-symmetric P with ω = 1), fall back to Newton in the
/// angle on the circle |z| = max(4, 1.3·pole_radius + 1), starting mid-sector.
fn omega_seed(field: &Field, ln_omega: f64) -> Result<FieldFrame> {
    let axis = || -> Result<FieldFrame> {
        let mut x = field.spec.z0.norm().max(1.0);
        for _ in 0..60 {
            let fr = branch_frame(field, C::new(x, 0.0))?;
            let resid = fr.u - ln_omega;
            if resid.abs() < 1e-11 {
                return Ok(fr);
            }
            if fr.vy.abs() < 1e-12 {
                return Err(Error::NewtonFailed("zero u_x on the real axis".into()));
            }
            let step = -resid / fr.vy;
            x += step.clamp(-2.0, 2.0);
            if x < 1.05 * field.spec.pole_radius {
                return Err(Error::NewtonFailed("axis seed would enter the pole disk".into()));
            }
        }
        Err(Error::NewtonFailed("omega axis seed did not converge".into()))
    };
    match axis() {
        Ok(fr) if fr.wprime().norm() >= 1e-6 => return Ok(fr),
        _ => {}
    }
    // Circle fallback.
    let n = field.spec.n() as f64;
    let radius = 4.0f64.max(1.3 * field.spec.pole_radius + 1.0);
    let mut phi = PI / (2.0 * n);
    for _ in 0..60 {
        let z = C::from_polar(radius, phi);
        let fr = branch_frame(field, z)?;
        let resid = fr.u - ln_omega;
        if resid.abs() < 1e-11 {
            if fr.wprime().norm() < 1e-6 {
                return Err(Error::SeedNotFound("circle seed sits on a saddle of W".into()));
            }
            return Ok(fr);
        }
        // du/dφ = Re(W′ · iz) on the circle.
        let du_dphi = (fr.wprime() * C::new(0.0, 1.0) * z).re;
        if du_dphi.abs() < 1e-12 {
            return Err(Error::SeedNotFound("stationary u along the seed circle".into()));
        }
        phi -= (resid / du_dphi).clamp(-0.3, 0.3);
        phi = phi.clamp(1e-3, PI / n - 1e-3);
    }
    Err(Error::SeedNotFound("omega circle seed did not converge".into()))
}

/// Predictor–corrector march along Ω̄ in the given y-direction until `stop`.
fn march_omega(
    field: &Field,
    seed: FieldFrame,
    ln_omega: f64,
    dir: f64,
    stop: impl Fn(&FieldFrame) -> bool,
) -> Result<Vec<FieldFrame>> {
    let mut frames = vec![seed];
    let mut fr = seed;
    for _ in 0..200_000 {
        if stop(&fr) {
            break;
        }
        // Predictor: dx/dy = −u_y/v_y; along the curve dv/dy = (u_y²+v_y²)/v_y.
        if fr.vy.abs() < 1e-12 {
            return Err(Error::CorrectorDiverged("v_y vanished along the omega curve".into()));
        }
        let slope = -fr.uy / fr.vy;
        let dv_dy = (fr.uy * fr.uy + fr.vy * fr.vy) / fr.vy;
        let mut dy = (PI / 8.0) / dv_dy.abs().max(1e-12);
        dy = dy.min(0.5 / (1.0 + slope.abs()));
        loop {
            let y_next = fr.z.im + dir * dy;
            let x_pred = fr.z.re + slope * dir * dy;
            let v_pred = fr.v + dv_dy * dir * dy;
            match correct_omega(field, x_pred, y_next, v_pred, ln_omega) {
                Ok(next) if (next.v - fr.v).abs() <= PI / 2.0 => {
                    frames.push(next);
                    fr = next;
                    break;
                }
                _ => {
                    dy *= 0.5;
                    if dy < 1e-12 {
                        return Err(Error::CorrectorDiverged(format!(
                            "omega corrector stalled near z = {}",
                            fr.z
                        )));
                    }
                }
            }
        }
    }
    Ok(frames)
}

/// Newton over x at fixed y: solve 𝐮(x, y) = ln ω using 𝐮_x = 𝐯_y.
fn correct_omega(field: &Field, x0: f64, y: f64, v_hint: f64, ln_omega: f64) -> Result<FieldFrame> {
    let mut x = x0;
    for _ in 0..20 {
        let fr = field.frame_at(C::new(x, y), Some(v_hint))?;
        let resid = fr.u - ln_omega;
        if resid.abs() < 1e-11 {
            return Ok(fr);
        }
        if fr.vy.abs() < 1e-14 {
            break;
        }
        x -= resid / fr.vy;
    }
    Err(Error::CorrectorDiverged(format!("omega Newton at y = {y}")))
}

/// Trace the level curve 𝐯 = 2kπ rightward (x increasing) from a seed frame
/// on the curve, until x ≥ until_x or 𝐮 exceeds `u_stop` (the e^{−e^u}
/// underflow level for the rerouting integrals). Steps are limited so 𝐮
/// increases by at most 0.5 per node.
pub fn trace_level_curve(
    field: &Field,
    seed: &FieldFrame,
    k: i64,
    until_x: f64,
    u_stop: f64,
) -> Result<TracedPath> {
    let target = TAU * k as f64;
    debug_assert!((seed.v - target).abs() < 1e-8, "seed is not on L_{k}");
    let mut frames = vec![*seed];
    let mut fr = *seed;
    for _ in 0..200_000 {
        if fr.z.re >= until_x || fr.u >= u_stop {
            break;
        }
        if fr.vy.abs() < 1e-12 {
            return Err(Error::CorrectorDiverged(format!("v_y vanished on L_{k} at z = {}", fr.z)));
        }
        // Predictor: dy/dx = u_y/v_y; along the curve du/dx = (u_y²+v_y²)/v_y.
        let slope = fr.uy / fr.vy;
        let du_dx = (fr.uy * fr.uy + fr.vy * fr.vy) / fr.vy;
        let mut dx = 0.5 / du_dx.abs().max(1e-12);
        dx = dx.min(0.5 / (1.0 + slope.abs())).min(until_x - fr.z.re + 1e-9).max(1e-9);
        loop {
            let x_next = fr.z.re + dx;
            let y_pred = fr.z.im + slope * dx;
            match correct_level(field, x_next, y_pred, target) {
                Ok(next) if (next.u - fr.u).abs() <= 0.75 => {
                    frames.push(next);
                    fr = next;
                    break;
                }
                _ => {
                    dx *= 0.5;
                    if dx < 1e-12 {
                        return Err(Error::CorrectorDiverged(format!(
                            "level corrector stalled on L_{k} near z = {}",
                            fr.z
                        )));
                    }
                }
            }
        }
    }
    Ok(TracedPath::from_frames(PathKind::LevelCurve(k), frames))
}

/// Newton over y at fixed x: solve 𝐯(x, y) = 2kπ using 𝐯_y.
fn correct_level(field: &Field, x: f64, y0: f64, target: f64) -> Result<FieldFrame> {
    let mut y = y0;
    for _ in 0..20 {
        let fr = field.frame_at(C::new(x, y), Some(target))?;
        let resid = fr.v - target;
        if resid.abs() < 1e-11 {
            return Ok(fr);
        }
        if fr.vy.abs() < 1e-14 {
            break;
        }
        y -= resid / fr.vy;
    }
    Err(Error::CorrectorDiverged(format!("level Newton at x = {x}")))
}

/// Intersections of a traced path with the level curves 𝐯 = 2kπ for k in
/// `k_lo..=k_hi`. Requires v monotone along the path (asserted). For Ω̄ paths
/// the crossing is refined by complex Newton on W(z) = ln ω + 2kπ·i (exact in
/// both coordinates); for verticals Newton runs in y; for rays in x.
pub fn find_crossings(
    field: &Field,
    path: &TracedPath,
    k_lo: i64,
    k_hi: i64,
) -> Result<Vec<(i64, FieldFrame)>> {
    for w in path.frames.windows(2) {
        assert!(
            w[1].v >= w[0].v - 1e-9,
            "find_crossings requires v monotone along the path"
        );
    }
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        let target = TAU * k as f64;
        let Some(i) = path.frames.windows(2).position(|w| {
            (w[0].v - target) * (w[1].v - target) <= 0.0
        }) else {
            continue;
        };
        let (a, b) = (&path.frames[i], &path.frames[i + 1]);
        let t = if (b.v - a.v).abs() > 1e-300 { (target - a.v) / (b.v - a.v) } else { 0.0 };
        let guess = a.z + (b.z - a.z) * t;
        let fr = match path.kind {
            PathKind::Omega(omega) => newton_w(field, guess, C::new(omega.ln(), target))?,
            PathKind::Vertical(x) => vertical_crossing(field, x, k, guess.im)?,
            _ => ray_crossing(field, guess.re / guess.im.atan2(guess.re).cos(), target)?,
        };
        out.push((k, fr));
    }
    Ok(out)
}

/// Complex Newton for W(z) = target (u + iv prescribed simultaneously).
fn newton_w(field: &Field, z0: C, target: C) -> Result<FieldFrame> {
    let mut z = z0;
    for _ in 0..30 {
        let fr = field.frame_at(z, Some(target.im))?;
        let w = C::new(fr.u, fr.v);
        if (w - target).norm() < 1e-11 {
            return Ok(fr);
        }
        let wp = fr.wprime();
        if wp.norm() < 1e-14 {
            return Err(Error::NewtonFailed(format!("W' vanished near z = {z}")));
        }
        z -= (w - target) / wp;
    }
    Err(Error::NewtonFailed(format!("W(z) = {target} from z0 = {z0}")))
}

/// Crossing 𝐳_k of the vertical Re z = x with L_k: Newton in y.
pub fn vertical_crossing(field: &Field, x: f64, k: i64, y0: f64) -> Result<FieldFrame> {
    let target = TAU * k as f64;
    let mut y = y0;
    for _ in 0..40 {
        let fr = field.frame_at(C::new(x, y), Some(target))?;
        let resid = fr.v - target;
        if resid.abs() < 1e-11 {
            return Ok(fr);
        }
        if fr.vy.abs() < 1e-14 {
            return Err(Error::NewtonFailed(format!("v_y vanished on the vertical x = {x}")));
        }
        y -= resid / fr.vy;
    }
    Err(Error::NewtonFailed(format!("vertical crossing x = {x}, k = {k}")))
}

/// Point on the ray at abscissa x with branch-continuous v refined to v = target.
fn ray_crossing(_field: &Field, _x_hint: f64, _target: f64) -> Result<FieldFrame> {
    Err(Error::PreconditionViolated(
        "ray crossings are produced by windows(), not find_crossings()".into(),
    ))
}

/// Adaptive branch-continuous walk along the ray y = x·tanθ from x_from,
/// extended until `stop` returns true for the latest frame.
pub fn ray_walk(
    field: &Field,
    x_from: f64,
    stop: impl Fn(&FieldFrame) -> bool,
) -> Result<TracedPath> {
    let theta = field.spec.theta;
    let u_dir = C::new(1.0, theta.tan());
    let mut fr = branch_frame(field, C::new(x_from, x_from * theta.tan()))?;
    let mut frames = vec![fr];
    for _ in 0..2_000_000 {
        if stop(&fr) {
            break;
        }
        let dw_dx = fr.wprime() * u_dir;
        let mut dx = (PI / 8.0) / dw_dx.im.abs().max(1e-12);
        dx = dx.min(0.5 / dw_dx.re.abs().max(1e-12)).min(0.25 * (1.0 + fr.z.re)).max(1e-9);
        loop {
            let x_next = fr.z.re + dx;
            let z_next = C::new(x_next, x_next * theta.tan());
            let hint = fr.v + (fr.wprime() * (z_next - fr.z)).im;
            let next = field.frame_at(z_next, Some(hint))?;
            if (next.v - fr.v).abs() <= PI / 2.0 {
                frames.push(next);
                fr = next;
                break;
            }
            dx *= 0.5;
            if dx < 1e-12 {
                return Err(Error::CorrectorDiverged(format!(
                    "ray walk stalled near x = {}",
                    fr.z.re
                )));
            }
        }
    }
    Ok(TracedPath::from_frames(PathKind::Ray, frames))
}

/// Solve 𝐯(x, x·tanθ) = target along the ray by Newton in x, starting from a
/// bracketing frame of a ray walk.
pub fn ray_newton(field: &Field, x0: f64, target: f64) -> Result<FieldFrame> {
    let theta = field.spec.theta;
    let u_dir = C::new(1.0, theta.tan());
    let mut x = x0;
    for _ in 0..40 {
        let z = C::new(x, x * theta.tan());
        let fr = field.frame_at(z, Some(target))?;
        let resid = fr.v - target;
        if resid.abs() < 1e-11 {
            return Ok(fr);
        }
        let dv_dx = (fr.wprime() * u_dir).im;
        if dv_dx.abs() < 1e-14 {
            return Err(Error::NewtonFailed(format!("dv/dx vanished on the ray at x = {x}")));
        }
        x -= resid / dv_dx;
    }
    Err(Error::NewtonFailed(format!("ray Newton for v = {target}")))
}

/// Window/anti-window decomposition of the ray: windows k = 1…k_max where
/// ζ = 𝐯 − 2kπ ∈ (−π/2+ε, π/2−ε), anti-windows k = 0…k_max−1 where
/// ζ − 2kπ ∈ (π/2+ε, 3π/2−ε). Boundaries are exact Newton roots of
/// 𝐯(x, x·tanθ) = 2kπ ± (π/2 − ε) etc.; centers solve ζ = 0 and ζ = π.
pub fn windows(field: &Field, epsilon: f64, k_max: i64) -> Result<WindowSet> {
    assert!(epsilon > 0.0 && epsilon < PI / 4.0, "epsilon must lie in (0, pi/4)");
    let theta = field.spec.theta;
    let v_stop = TAU * k_max as f64 + 3.0 * PI / 2.0;
    let x_from = if field.spec.pole_radius > 0.0 {
        1.15 * field.spec.pole_radius * theta.cos().max(0.5)
    } else {
        0.05
    };
    let walk = ray_walk(field, x_from, |fr| fr.v >= v_stop)?;

    // Locate the x bracketing a v-target along the (v-monotone tail of the) walk.
    let bracket = |target: f64| -> Option<f64> {
        walk.frames
            .windows(2)
            .find(|w| (w[0].v - target) * (w[1].v - target) <= 0.0 && w[1].v >= w[0].v)
            .map(|w| {
                let t = (target - w[0].v) / (w[1].v - w[0].v).max(1e-300);
                w[0].z.re + (w[1].z.re - w[0].z.re) * t
            })
    };
    let solve = |target: f64| -> Result<Option<f64>> {
        match bracket(target) {
            None => Ok(None),
            Some(x0) => Ok(Some(ray_newton(field, x0, target)?.z.re)),
        }
    };

    let mut wins = Vec::new();
    let mut antis = Vec::new();
    for k in 0..=k_max {
        let base = TAU * k as f64;
        if k >= 1 {
            let lo = solve(base - (PI / 2.0 - epsilon))?;
            let mid = solve(base)?;
            let hi = solve(base + (PI / 2.0 - epsilon))?;
            if let (Some(x_lo), Some(x_center), Some(x_hi)) = (lo, mid, hi) {
                wins.push(Window { k, x_lo, x_center, x_hi });
            }
        }
        if k < k_max {
            let lo = solve(base + PI / 2.0 + epsilon)?;
            let mid = solve(base + PI)?;
            let hi = solve(base + 3.0 * PI / 2.0 - epsilon)?;
            if let (Some(x_lo), Some(x_center), Some(x_hi)) = (lo, mid, hi) {
                antis.push(Window { k, x_lo, x_center, x_hi });
            }
        }
    }
    // Disjointness / ordering invariant.
    for pair in wins.windows(2) {
        assert!(pair[0].x_hi < pair[1].x_lo, "windows overlap: {:?} {:?}", pair[0], pair[1]);
    }
    Ok(WindowSet { theta, epsilon, windows: wins, anti_windows: antis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Poly, ProblemSpec, RationalFn};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn ez() -> Field {
        Field::new(
            ProblemSpec::new(
                Poly::from_real(&[0.0, 1.0]),
                RationalFn::from_poly(Poly::one()),
                c(0.0, 0.0),
                c(1.0, 0.0),
                0.0,
                PI / 4.0,
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn ez2() -> Field {
        Field::new(
            ProblemSpec::new(
                Poly::from_real(&[0.0, 0.0, 1.0]),
                RationalFn::from_poly(Poly::from_real(&[0.0, 2.0])),
                c(3.0, 0.0),
                c(1.0, 0.0),
                0.0,
                PI / 8.0,
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn omega_is_the_imaginary_axis_for_w_eq_z() {
        // |e^z| = 1 ⇔ x = 0.
        let f = ez();
        let path = trace_omega(&f, 1.0, 5).unwrap();
        for fr in &path.frames {
            assert!(fr.z.re.abs() < 1e-9, "off the axis at {}", fr.z);
            assert!((fr.u - 0.0).abs() < 1e-10);
        }
        assert!(path.last().v > TAU * 5.0);
        assert!(path.first().v <= 0.0 + 1e-12);
    }

    #[test]
    fn omega_is_the_diagonal_for_w_eq_z_squared() {
        // |e^{z²}| = 1 ⇔ x² = y², branch x = y > 0; the axis seed is the
        // saddle at the origin, so the circle fallback must engage.
        let f = ez2();
        let path = trace_omega(&f, 1.0, 6).unwrap();
        for fr in &path.frames {
            assert!(
                (fr.z.re * fr.z.re - fr.z.im * fr.z.im).abs() <= 1e-9,
                "off the level set at {}",
                fr.z
            );
            assert!(fr.u.abs() < 1e-10);
        }
        assert!(path.last().v > TAU * 6.0);
    }

    #[test]
    fn omega_hyperbola_for_omega_e() {
        // |e^{z²}| = e ⇔ x² − y² = 1.
        let f = ez2();
        let path = trace_omega(&f, std::f64::consts::E, 4).unwrap();
        for fr in &path.frames {
            assert_relative_eq!(fr.z.re * fr.z.re - fr.z.im * fr.z.im, 1.0, epsilon = 1e-9);
        }
        // Traced down through v = 0 (regular point (1,0)), so k = 0 is bracketed.
        assert!(path.first().v < 0.0);
    }

    #[test]
    fn crossings_on_omega_match_closed_forms() {
        // W = z²: Ω̄(ω=1) ∩ L_k at x = y = √(kπ); k = 4 → 3.5449077.
        let f = ez2();
        let path = trace_omega(&f, 1.0, 6).unwrap();
        let crossings = find_crossings(&f, &path, 1, 6).unwrap();
        assert_eq!(crossings.len(), 6);
        for (k, fr) in &crossings {
            let expect = (*k as f64 * PI).sqrt();
            assert_relative_eq!(fr.z.re, expect, epsilon = 1e-8);
            assert_relative_eq!(fr.z.im, expect, epsilon = 1e-8);
        }
        let (_, z4) = crossings.iter().find(|(k, _)| *k == 4).unwrap();
        assert_relative_eq!(z4.z.re, 3.5449077018110318, epsilon = 1e-8);

        // W = z: Ω̄ ∩ L_k at (0, 2kπ), including k = 0 at the origin.
        let f = ez();
        let path = trace_omega(&f, 1.0, 3).unwrap();
        let crossings = find_crossings(&f, &path, 0, 3).unwrap();
        assert_eq!(crossings.len(), 4);
        for (k, fr) in &crossings {
            assert!(fr.z.re.abs() < 1e-9);
            assert_relative_eq!(fr.z.im, TAU * *k as f64, epsilon = 1e-8);
        }
    }

    #[test]
    fn level_curves_match_closed_forms() {
        // W = z²: L_k is xy = kπ. Trace from z_k and check at x = 4.
        let f = ez2();
        let omega = trace_omega(&f, 1.0, 4).unwrap();
        let crossings = find_crossings(&f, &omega, 1, 3).unwrap();
        for (k, seed) in &crossings {
            let path = trace_level_curve(&f, seed, *k, 4.0, U_STOP).unwrap();
            for fr in &path.frames {
                assert!(
                    (fr.z.re * fr.z.im - *k as f64 * PI).abs() < 1e-8,
                    "off L_{k} at {}",
                    fr.z
                );
                assert!((fr.v - TAU * *k as f64).abs() < 1e-9);
            }
            // u strictly increasing along the curve.
            for w in path.frames.windows(2) {
                assert!(w[1].u > w[0].u, "u not increasing on L_{k}");
            }
            // y strictly decreasing (n ≥ 2 behavior).
            for w in path.frames.windows(2) {
                assert!(w[1].z.im < w[0].z.im, "y not decreasing on L_{k}");
            }
            let last = path.last();
            if last.z.re < 4.0 {
                // stopped on the u cap instead
                assert!(last.u >= U_STOP - 0.75);
            } else {
                assert_relative_eq!(last.z.im, *k as f64 * PI / last.z.re, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn level_zero_is_the_real_axis_for_w_eq_z() {
        let f = ez();
        let omega = trace_omega(&f, 1.0, 2).unwrap();
        let crossings = find_crossings(&f, &omega, 0, 0).unwrap();
        let (_, seed) = &crossings[0];
        let path = trace_level_curve(&f, seed, 0, 6.0, U_STOP).unwrap();
        for fr in &path.frames {
            assert!(fr.z.im.abs() < 1e-9, "L_0 off the real axis at {}", fr.z);
        }
        // L_k for W = z is the horizontal line y = 2kπ.
        let crossings = find_crossings(&f, &omega, 2, 2).unwrap();
        let (_, seed) = &crossings[0];
        let path = trace_level_curve(&f, seed, 2, 6.0, U_STOP).unwrap();
        for fr in &path.frames {
            assert_relative_eq!(fr.z.im, 2.0 * TAU, epsilon = 1e-9);
        }
    }

    #[test]
    fn vertical_crossings_are_ordered() {
        // W = z, vertical x = 3: 𝐳_k = 3 + 2kπ·i exactly.
        let f = ez();
        let z2 = vertical_crossing(&f, 3.0, 2, 11.0).unwrap();
        assert_relative_eq!(z2.z.im, 2.0 * TAU, epsilon = 1e-9);
        let mut prev = -1.0;
        for k in 0..4 {
            let fr = vertical_crossing(&f, 3.0, k, TAU * k as f64).unwrap();
            assert!(fr.z.im > prev, "crossing ordering violated at k = {k}");
            prev = fr.z.im;
        }
    }

    #[test]
    fn windows_match_closed_forms() {
        // W = z, θ = π/4: v = y = x on the ray; window 1 is
        // [2π − (π/2 − 0.1), 2π + (π/2 − 0.1)] ≈ [4.8124, 7.7540].
        let f = ez();
        let ws = windows(&f, 0.1, 3).unwrap();
        let w1 = ws.windows.iter().find(|w| w.k == 1).unwrap();
        assert_relative_eq!(w1.x_lo, TAU - (PI / 2.0 - 0.1), epsilon = 1e-8);
        assert_relative_eq!(w1.x_center, TAU, epsilon = 1e-8);
        assert_relative_eq!(w1.x_hi, TAU + (PI / 2.0 - 0.1), epsilon = 1e-8);

        // W = z², θ = π/8: v = 2x²·tanθ; x_lo(k=1) = √(4.8124/0.82843) ≈ 2.4102.
        let f = ez2();
        let ws = windows(&f, 0.1, 3).unwrap();
        let w1 = ws.windows.iter().find(|w| w.k == 1).unwrap();
        let t = 2.0 * (PI / 8.0).tan();
        assert_relative_eq!(w1.x_lo, ((TAU - (PI / 2.0 - 0.1)) / t).sqrt(), epsilon = 1e-7);
        assert_relative_eq!(w1.x_hi, ((TAU + (PI / 2.0 - 0.1)) / t).sqrt(), epsilon = 1e-7);
        assert_relative_eq!(w1.x_lo, 2.4102, epsilon = 1e-3);
        assert_relative_eq!(w1.x_hi, 3.0594, epsilon = 1e-3);

        // Windows disjoint and increasing in k; anti-windows interleave.
        for pair in ws.windows.windows(2) {
            assert!(pair[0].k < pair[1].k && pair[0].x_hi < pair[1].x_lo);
        }
        for (w, a) in ws.windows.iter().zip(ws.anti_windows.iter().skip(1)) {
            assert!(w.x_hi < a.x_lo, "anti-window {} overlaps window {}", a.k, w.k);
        }
    }

    #[test]
    fn window_boundaries_satisfy_the_defining_equation() {
        let f = ez2();
        let eps = 0.1;
        let ws = windows(&f, eps, 4).unwrap();
        for w in &ws.windows {
            let t = 2.0 * (PI / 8.0).tan();
            // v(x, x tanθ) = 2x² tanθ exactly for W = z².
            assert!((t * w.x_lo * w.x_lo - (TAU * w.k as f64 - (PI / 2.0 - eps))).abs() < 1e-8);
            assert!((t * w.x_hi * w.x_hi - (TAU * w.k as f64 + (PI / 2.0 - eps))).abs() < 1e-8);
        }
        for a in &ws.anti_windows {
            let t = 2.0 * (PI / 8.0).tan();
            assert!((t * a.x_lo * a.x_lo - (TAU * a.k as f64 + PI / 2.0 + eps)).abs() < 1e-8);
            assert!((t * a.x_hi * a.x_hi - (TAU * a.k as f64 + 3.0 * PI / 2.0 - eps)).abs() < 1e-8);
        }
    }

    #[test]
    fn crossing_height_ratio_approaches_the_sector_factor() {
        // y_k (on Ω̄) over 𝐲_k (on the vertical through the window center):
        // for W = z², θ = π/8, θ̄ = π/4 the factor is
        // (sin θ̄/sin θ)·(sin nθ/sin nθ̄)^{1/n} = 1/√tan(π/8) ≈ 1.55377.
        let f = ez2();
        let omega = trace_omega(&f, 1.0, 14).unwrap();
        let crossings = find_crossings(&f, &omega, 10, 14).unwrap();
        let ws = windows(&f, 0.1, 14).unwrap();
        let factor = {
            let th = PI / 8.0;
            let thb = PI / 4.0;
            (thb.sin() / th.sin()) * ((2.0 * th).sin() / (2.0 * thb).sin()).sqrt()
        };
        for (k, zk) in &crossings {
            let w = ws.windows.iter().find(|w| w.k == *k).unwrap();
            let vk = vertical_crossing(&f, w.x_center, *k, w.x_center * (PI / 8.0).tan()).unwrap();
            let ratio = zk.z.im / vk.z.im;
            assert!(
                (ratio - factor).abs() <= 10.0 / zk.z.im,
                "k = {k}: ratio {ratio} vs predicted {factor}"
            );
        }
    }
}
