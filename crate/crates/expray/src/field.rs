//! Evaluation of the canonical antiderivative U and its logarithm
//! W = 𝐮 + i𝐯 with a branch-continuous phase.
//!
//! U is the antiderivative of S·e^P that is constant-free at infinity along
//! the mid-sector decay direction. In the far field it is the rational
//! approximation Q(z)·e^{P(z)} with relative tail O(|z|^{−N}); in the near
//! field it is direct adaptive quadrature of S·e^P from the base point,
//! shifted by the ray constant c₁ so the two regimes describe the same
//! function. 𝐮 = ln|U| and 𝐯 = arg U (branch-continuous, not wrapped); the
//! exact partials follow from W′ = U′/U = S·e^P/U via the Cauchy–Riemann
//! relations: 𝐯_y = Re W′, 𝐮_y = −Im W′.

use crate::algebra::ProblemSpec;
use crate::asymptotics::{expand, default_tail_order, ray_constant, ExpansionResult, RayConstant};
use crate::logscale::LogComplex;
use crate::quad::{integrate_legs, PathLeg, QuadOptions};
use crate::{Error, Result};
use num_complex::Complex64 as C;

/// Which branch of `u_value` produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Direct quadrature of S·e^P from the base point (minus c₁).
    Near,
    /// Rational far-field form Q(z)·e^{P(z)}.
    Far,
}

/// A point z with branch-continuous field data.
#[derive(Debug, Clone, Copy)]
pub struct FieldFrame {
    pub z: C,
    /// 𝐮 = ln|U(z)|.
    pub u: f64,
    /// 𝐯 = branch-continuous argument of U(z) (not wrapped to (−π, π]).
    pub v: f64,
    /// ∂𝐮/∂y = −Im(S e^P/U).
    pub uy: f64,
    /// ∂𝐯/∂y = Re(S e^P/U).
    pub vy: f64,
    pub regime: Regime,
}

impl FieldFrame {
    /// W′(z) = 𝐯_y − i·𝐮_y (Cauchy–Riemann reassembly).
    pub fn wprime(&self) -> C {
        C::new(self.vy, -self.uy)
    }
}

/// Bundled evaluation context: the problem, its expansion, the ray constant,
/// and the near/far switch radius. Immutable once built; evaluation methods
/// are pure.
#[derive(Debug, Clone)]
pub struct Field {
    pub spec: ProblemSpec,
    pub exp: ExpansionResult,
    pub ray: RayConstant,
    /// |z| beyond which the far-field form is used: max(2·pole_radius, 10,
    /// and — for non-terminated expansions — the radius where the relative
    /// tail bound |z|^{−N} drops below 1e−12).
    pub r_switch: f64,
}

impl Field {
    pub fn new(spec: ProblemSpec) -> Result<Field> {
        let exp = expand(&spec, default_tail_order(&spec))?;
        Field::with_expansion(spec, exp)
    }

    pub fn with_expansion(spec: ProblemSpec, exp: ExpansionResult) -> Result<Field> {
        let ray = ray_constant(&spec, &exp)?;
        // A terminated expansion has zero residual, so the far-field form
        // Q(z)·e^{P(z)} is exact at every radius — use it unconditionally.
        let r_switch = if exp.terminated {
            0.0
        } else {
            (2.0 * spec.pole_radius)
                .max(10.0)
                .max(10f64.powf(12.0 / exp.n_tail as f64))
        };
        Ok(Field { spec, exp, ray, r_switch })
    }

    /// U(z) in log scale; dispatches on |z| vs `r_switch`.
    pub fn u_value(&self, z: C) -> Result<LogComplex> {
        if z.norm() > self.r_switch {
            self.u_value_far(z)
        } else {
            self.u_value_near(z)
        }
    }

    /// Far-field branch: Q(z)·e^{P(z)}.
    pub fn u_value_far(&self, z: C) -> Result<LogComplex> {
        let q = self.exp.q.eval(z)?;
        Ok(LogComplex::exp_of(self.spec.p.eval(z)).scale_complex(q))
    }

    /// Near-field branch: ∫_{z0}^{z} S·e^P dt − c₁ along an arc at radius
    /// |z0| followed by a radial segment — a route that stays outside the
    /// pole-exclusion disk (for |z| ≥ pole_radius) and never winds around it,
    /// so the value is single-valued across calls even when S has residues.
    pub fn u_value_near(&self, z: C) -> Result<LogComplex> {
        if z.norm() < self.spec.pole_radius {
            return Err(Error::PoleDisk(z));
        }
        let legs = self.route_from_base(z);
        let spec = &self.spec;
        let integral = integrate_legs(
            &legs,
            |t| {
                let s = spec.s.eval(t)?;
                Ok(LogComplex::exp_of(spec.p.eval(t)).scale_complex(s))
            },
            Some(&|t: C| {
                let rp = spec.p.eval(t).re;
                match spec.s.eval(t) {
                    Ok(v) if v.norm() > 0.0 => rp + v.norm().ln(),
                    _ => rp,
                }
            }),
            &QuadOptions { rel_tol: 1e-13, ..Default::default() },
        )?;
        Ok(LogComplex::sum(&[integral, self.ray.c1.neg()], false))
    }

    /// Pole-disk-avoiding route from z0 to z: arc at radius |z0| from arg z0
    /// to arg z (short way; ties counterclockwise), then radial segment.
    fn route_from_base(&self, z: C) -> Vec<PathLeg> {
        let z0 = self.spec.z0;
        let r0 = z0.norm();
        if r0 == 0.0 {
            return vec![PathLeg::Segment { a: z0, b: z }];
        }
        let mut sweep = z.arg() - z0.arg();
        if sweep > std::f64::consts::PI {
            sweep -= std::f64::consts::TAU;
        } else if sweep < -std::f64::consts::PI {
            sweep += std::f64::consts::TAU;
        }
        let corner = C::from_polar(r0, z.arg());
        let mut legs = Vec::new();
        if sweep != 0.0 {
            legs.push(PathLeg::Arc { radius: r0, theta_start: z0.arg(), sweep });
        }
        if (z - corner).norm() > 0.0 {
            legs.push(PathLeg::Segment { a: corner, b: z });
        }
        legs
    }

    /// Field frame at z. `v_hint`, when given, selects the branch: v is the
    /// 2π-translate of arg U(z) nearest the hint. Without a hint the
    /// principal argument is used (the convention fixing v(z0)).
    pub fn frame_at(&self, z: C, v_hint: Option<f64>) -> Result<FieldFrame> {
        let uval = self.u_value(z)?;
        self.frame_from(z, uval, v_hint, if z.norm() > self.r_switch { Regime::Far } else { Regime::Near })
    }

    fn frame_from(&self, z: C, uval: LogComplex, v_hint: Option<f64>, regime: Regime) -> Result<FieldFrame> {
        if uval.is_zero() {
            return Err(Error::BranchSingularity(z));
        }
        let v = match v_hint {
            None => uval.arg,
            Some(h) => uval.arg + std::f64::consts::TAU * ((h - uval.arg) / std::f64::consts::TAU).round(),
        };
        // W′ = U′/U = S·e^P/U: the magnitudes cancel to a modest quotient
        // even when both sides are astronomically large.
        let s = self.spec.s.eval(z)?;
        let wp = LogComplex::exp_of(self.spec.p.eval(z))
            .scale_complex(s)
            .div(&uval)?
            .to_complex()?;
        Ok(FieldFrame { z, u: uval.lmag, v, uy: -wp.im, vy: wp.re, regime })
    }

    /// Branch-continuous frames along a polyline. v starts at `v_start` for
    /// the first point (whose arg U must be a 2π-translate of it) and each
    /// subsequent frame is unwrapped against the W′-linearized prediction
    /// from its predecessor; midpoints are inserted (depth ≤ 40) whenever a
    /// step would move v by more than π/2.
    pub fn continue_along(&self, points: &[C], v_start: f64) -> Result<Vec<FieldFrame>> {
        let first = self.frame_at(points[0], Some(v_start))?;
        let mut frames = vec![first];
        for &z in &points[1..] {
            let prev = *frames.last().unwrap();
            self.step_refined(prev, z, 0, &mut frames)?;
        }
        Ok(frames)
    }

    fn step_refined(&self, prev: FieldFrame, z: C, depth: u32, out: &mut Vec<FieldFrame>) -> Result<()> {
        let dz = z - prev.z;
        let hint = prev.v + (prev.wprime() * dz).im;
        let frame = self.frame_at(z, Some(hint))?;
        if (frame.v - prev.v).abs() > std::f64::consts::FRAC_PI_2 {
            if depth >= 40 {
                return Err(Error::RefinementDepth(depth));
            }
            let mid = prev.z + dz * 0.5;
            self.step_refined(prev, mid, depth + 1, out)?;
            let new_prev = *out.last().unwrap();
            return self.step_refined(new_prev, z, depth + 1, out);
        }
        out.push(frame);
        Ok(())
    }

    /// The branch origin: frame at z0 with v = principal argument of U(z0).
    pub fn base_frame(&self) -> Result<FieldFrame> {
        self.frame_at(self.spec.z0, None)
    }
}
