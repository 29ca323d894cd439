//! Complex-coefficient polynomials, rational functions, and the affine
//! normalization that puts the exponent polynomial P into canonical form
//! (monic, zero coefficient on z^{n−1}).
//!
//! Coefficients are stored in double precision, ascending degree, trimmed so
//! that the last stored coefficient is nonzero (unless the polynomial is
//! identically zero). Rational functions are kept *unreduced* after symbolic
//! operations — derivatives via the quotient rule stay cheap and exact — and a
//! tolerance-based GCD reduction runs only when the degree difference
//! m = deg num − deg den is requested.

use crate::{Error, Result};
use num_complex::Complex64 as C;

/// A polynomial with complex coefficients, ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C>,
}

impl Poly {
    /// Build from ascending coefficients; trailing (exact) zeros are trimmed.
    pub fn new(coeffs: Vec<C>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        Poly::new(vec![c])
    }

    pub fn one() -> Self {
        Poly::constant(C::new(1.0, 0.0))
    }

    /// Convenience constructor from real coefficients, ascending degree.
    pub fn from_real(cs: &[f64]) -> Self {
        Poly::new(cs.iter().map(|&x| C::new(x, 0.0)).collect())
    }

    fn trim(&mut self) {
        while let Some(c) = self.coeffs.last() {
            if c.re == 0.0 && c.im == 0.0 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> C {
        self.coeffs.get(i).copied().unwrap_or(C::new(0.0, 0.0))
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<C> {
        self.coeffs.last().copied()
    }

    /// Horner evaluation (exact for degree 0).
    pub fn eval(&self, z: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation together with the magnitude scale Σ|cᵢ||z|^i,
    /// used to decide whether a value is "numerically zero".
    pub fn eval_with_scale(&self, z: C) -> (C, f64) {
        let r = z.norm();
        let mut acc = C::new(0.0, 0.0);
        let mut scale = 0.0f64;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
            scale = scale * r + c.norm();
        }
        (acc, scale)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * ((i + 1) as f64))
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }

    pub fn scale(&self, s: C) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![C::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop coefficients of magnitude ≤ `tol` (absolute).
    pub fn trim_small(&self, tol: f64) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| if c.norm() <= tol { C::new(0.0, 0.0) } else { c })
                .collect(),
        )
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some(l) => self.scale(C::new(1.0, 0.0) / l),
        }
    }

    /// Euclidean division: self = q·d + r with deg r < deg d.
    pub fn div_rem(&self, d: &Poly) -> Result<(Poly, Poly)> {
        let dd = d.degree().ok_or(Error::ZeroDivisor)?;
        let lead = d.leading().unwrap();
        let mut r = self.coeffs.clone();
        if r.len() < dd + 1 {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut q = vec![C::new(0.0, 0.0); r.len() - dd];
        for i in (dd..r.len()).rev() {
            let f = r[i] / lead;
            q[i - dd] = f;
            for j in 0..=dd {
                r[i - dd + j] -= f * d.coeff(j);
            }
            r[i] = C::new(0.0, 0.0);
        }
        Ok((Poly::new(q), Poly::new(r)))
    }

    /// Compose with an affine map: returns p(α·w + β) as a polynomial in w.
    pub fn compose_linear(&self, alpha: C, beta: C) -> Poly {
        let lin = Poly::new(vec![beta, alpha]);
        let mut acc = Poly::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&Poly::constant(c));
        }
        acc
    }
}

/// Affine normalization of the exponent polynomial.
///
/// Returns `(p_canonical, α, β)` with p_canonical(w) = p_raw(αw + β) monic and
/// with zero coefficient on w^{n−1}. β recenters (−c_{n−1}/(n·c_n)); α is the
/// principal n-th root of 1/c_n, which makes the output deterministic (any
/// n-th root would be admissible).
pub fn normalize(p_raw: &Poly) -> Result<(Poly, C, C)> {
    let n = match p_raw.degree() {
        Some(n) if n >= 1 => n,
        _ => return Err(Error::DegreeZero),
    };
    let cn = p_raw.leading().unwrap();
    let cn1 = p_raw.coeff(n - 1);
    let beta = -cn1 / (cn * n as f64);
    let alpha = (C::new(1.0, 0.0) / cn).powf(1.0 / n as f64);
    Ok((p_raw.compose_linear(alpha, beta), alpha, beta))
}

/// Ratio of two polynomials. `den` is never identically zero; the
/// representation is not required to be gcd-reduced.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(RationalFn { num, den })
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFn { num: p, den: Poly::one() }
    }

    /// Evaluate. A numerically vanishing denominator is an error — a common
    /// root of num and den is reported distinctly from a plain pole, never
    /// returned as a silent 0/0.
    pub fn eval(&self, z: C) -> Result<C> {
        let (nv, nscale) = self.num.eval_with_scale(z);
        let (dv, dscale) = self.den.eval_with_scale(z);
        if dv.norm() <= 1e-14 * dscale.max(f64::MIN_POSITIVE) {
            if nv.norm() <= 1e-12 * nscale.max(f64::MIN_POSITIVE) {
                return Err(Error::CommonRoot(z));
            }
            return Err(Error::PoleEval(z));
        }
        Ok(nv / dv)
    }

    /// Quotient-rule derivative: (n′d − n·d′)/d².
    pub fn derivative(&self) -> RationalFn {
        let n = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        RationalFn { num: n, den: self.den.mul(&self.den) }
    }

    /// Divide by a polynomial: den is multiplied by `p`.
    pub fn divide_by(&self, p: &Poly) -> Result<RationalFn> {
        if p.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(RationalFn { num: self.num.clone(), den: self.den.mul(p) })
    }

    pub fn neg(&self) -> RationalFn {
        RationalFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, other: &RationalFn) -> RationalFn {
        RationalFn {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn mul_poly(&self, p: &Poly) -> RationalFn {
        RationalFn { num: self.num.mul(p), den: self.den.clone() }
    }

    /// Is the numerator numerically zero relative to `scale_hint`?
    pub fn is_zero(&self, tol: f64, scale_hint: f64) -> bool {
        self.num.max_coeff_norm() <= tol * scale_hint.max(f64::MIN_POSITIVE)
    }

    /// Tolerance-based GCD reduction (approximate Euclid with coefficient
    /// truncation at `tol` relative to the running scale).
    pub fn reduce(&self, tol: f64) -> RationalFn {
        if self.num.is_zero() {
            return RationalFn { num: Poly::zero(), den: Poly::one() };
        }
        let g = gcd_approx(&self.num, &self.den, tol);
        if g.degree() == Some(0) || g.is_zero() {
            return self.clone();
        }
        let num = self.num.div_rem(&g).map(|(q, _)| q).unwrap_or_else(|_| self.num.clone());
        let den = self.den.div_rem(&g).map(|(q, _)| q).unwrap_or_else(|_| self.den.clone());
        RationalFn { num, den }
    }

    /// Degree difference m = deg num − deg den after reduction; the zero
    /// function returns `None`.
    pub fn m_degree(&self) -> Option<i64> {
        let r = self.reduce(1e-10);
        Some(r.num.degree()? as i64 - r.den.degree()? as i64)
    }
}

/// Approximate monic GCD by the Euclidean algorithm with coefficient
/// truncation. Adequate for the mild cases that arise here (exactly shared
/// factors up to double-precision roundoff).
fn gcd_approx(a: &Poly, b: &Poly, tol: f64) -> Poly {
    let mut a = a.monic();
    let mut b = b.monic();
    if a.degree() < b.degree() {
        std::mem::swap(&mut a, &mut b);
    }
    for _ in 0..128 {
        if b.is_zero() || b.max_coeff_norm() <= tol {
            return a.monic();
        }
        let r = match a.div_rem(&b) {
            Ok((_, r)) => r.trim_small(tol * (1.0 + a.max_coeff_norm())),
            Err(_) => return Poly::one(),
        };
        a = b;
        b = r.monic();
        if b.is_zero() {
            return a.monic();
        }
        // `monic` lost the scale; re-probe smallness on the raw remainder.
        if r.max_coeff_norm() <= tol * (1.0 + a.max_coeff_norm()) {
            return a.monic();
        }
        b = r.monic();
    }
    Poly::one()
}

/// The normalized problem: exponent polynomial P (canonical form), coefficient
/// S, base point z0, integration constant c, pole-exclusion radius, and the
/// ray angle θ.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: Poly,
    pub s: RationalFn,
    pub z0: C,
    pub c: C,
    /// All poles of S lie strictly inside |z| = pole_radius.
    pub pole_radius: f64,
    /// Ray angle, required in (0, π/(2n)).
    pub theta: f64,
}

impl ProblemSpec {
    pub fn new(p: Poly, s: RationalFn, z0: C, c: C, pole_radius: f64, theta: f64) -> Result<Self> {
        let spec = ProblemSpec { p, s, z0, c, pole_radius, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.p.degree().unwrap_or(0)
    }

    /// m = deg num − deg den of S after reduction.
    pub fn m(&self) -> i64 {
        self.s.m_degree().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p.degree().ok_or(Error::DegreeZero)?;
        if n < 1 {
            return Err(Error::DegreeZero);
        }
        let lead = self.p.leading().unwrap();
        if (lead - C::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Config(format!(
                "P must be monic after normalization; leading coefficient is {lead}"
            )));
        }
        if n >= 2 && self.p.coeff(n - 1).norm() > 1e-12 {
            return Err(Error::Config(
                "P must have zero coefficient on z^{n-1} after normalization".into(),
            ));
        }
        if self.z0.norm() < self.pole_radius {
            return Err(Error::Config(format!(
                "base point z0 = {} lies inside the pole disk of radius {}",
                self.z0, self.pole_radius
            )));
        }
        if self.s.num.is_zero() {
            return Err(Error::Config("S must not be identically zero".into()));
        }
        let bound = std::f64::consts::PI / (2.0 * n as f64);
        if !(self.theta > 0.0 && self.theta < bound) {
            return Err(Error::Config(format!(
                "theta = {} outside the valid interval (0, {bound}) = (0, pi/(2n)) for n = {n}",
                self.theta
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn eval_examples() {
        // z² − 1 at 2i → −5
        let p = Poly::from_real(&[-1.0, 0.0, 1.0]);
        assert_relative_eq!((p.eval(c(0.0, 2.0)) - c(-5.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        // z³ at 1 → 1
        let p = Poly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!((p.eval(c(1.0, 0.0)) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        // z² + 4z + 2 at 1 → 7
        let p = Poly::from_real(&[2.0, 4.0, 1.0]);
        assert_relative_eq!((p.eval(c(1.0, 0.0)) - c(7.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn normalize_shifted_quadratics() {
        // 2z² + 4z + 1 → (w² − 1, α = 2^{−1/2}, β = −1); checked by brute
        // expansion of 2(αw+β)² + 4(αw+β) + 1.
        let p = Poly::from_real(&[1.0, 4.0, 2.0]);
        let (pc, alpha, beta) = normalize(&p).unwrap();
        assert_relative_eq!((alpha - c(0.5f64.sqrt(), 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((beta - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(pc.degree(), Some(2));
        assert_relative_eq!((pc.coeff(0) - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-13);
        assert!(pc.coeff(1).norm() < 1e-13);
        assert_relative_eq!((pc.coeff(2) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-13);

        // z² + 2z → w² − 1 (expand (w−1)² + 2(w−1))
        let p = Poly::from_real(&[0.0, 2.0, 1.0]);
        let (pc, alpha, beta) = normalize(&p).unwrap();
        assert_relative_eq!((alpha - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((beta - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((pc.coeff(0) - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-13);

        // z³ is already canonical
        let p = Poly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        let (pc, alpha, beta) = normalize(&p).unwrap();
        assert_eq!(pc, p);
        assert_relative_eq!((alpha - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert!(beta.norm() < 1e-14);
    }

    #[test]
    fn normalize_is_idempotent_and_consistent_on_grid() {
        let p_raw = Poly::new(vec![c(1.0, 0.5), c(-2.0, 1.0), c(0.3, -0.7), c(2.0, 1.0)]);
        let (pc, alpha, beta) = normalize(&p_raw).unwrap();
        // p_canonical(w) = p_raw(αw + β) on a 20-point grid, 1e−12 relative.
        for i in 0..20 {
            let t = i as f64 * 0.31;
            let w = c(t.cos() * (1.0 + t), t.sin() * (1.0 - 0.4 * t));
            let lhs = pc.eval(w);
            let rhs = p_raw.eval(alpha * w + beta);
            let scale = lhs.norm().max(rhs.norm()).max(1e-30);
            assert!(
                (lhs - rhs).norm() <= 1e-12 * scale,
                "grid mismatch at {w}: {lhs} vs {rhs}"
            );
        }
        // Idempotence: re-normalizing the canonical form gives |α| = 1, β = 0.
        let (_, a2, b2) = normalize(&pc).unwrap();
        assert!((a2.norm() - 1.0).abs() < 1e-12);
        assert!(b2.norm() < 1e-12);
    }

    #[test]
    fn rational_derivative_examples() {
        // d/dz (z²) = 2z
        let r = RationalFn::from_poly(Poly::from_real(&[0.0, 0.0, 1.0]));
        let d = r.derivative().reduce(1e-12);
        assert_eq!(d.num.degree(), Some(1));
        let z = c(1.3, -0.4);
        assert_relative_eq!((d.eval(z).unwrap() - 2.0 * z).norm(), 0.0, epsilon = 1e-12);

        // divide_by(2z, 2z) = 1 pointwise
        let s = RationalFn::from_poly(Poly::from_real(&[0.0, 2.0]));
        let q = s.divide_by(&Poly::from_real(&[0.0, 2.0])).unwrap();
        assert_relative_eq!((q.eval(c(2.0, 1.0)).unwrap() - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);

        // d/dz (z³/(z−1)) = (2z³ − 3z²)/(z−1)², cross-checked pointwise.
        let r = RationalFn::new(
            Poly::from_real(&[0.0, 0.0, 0.0, 1.0]),
            Poly::from_real(&[-1.0, 1.0]),
        )
        .unwrap();
        let d = r.derivative();
        for k in 0..5 {
            let z = c(2.0 + 0.7 * k as f64, 0.3 * k as f64);
            let den = z - c(1.0, 0.0);
            let expect = (2.0 * z * z * z - 3.0 * z * z) / (den * den);
            assert_relative_eq!((d.eval(z).unwrap() - expect).norm() / expect.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences_on_random_polys() {
        // Deterministic pseudo-random polynomials of degree ≤ 6; the
        // derivative matches a centered finite-difference slope.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..20 {
            let deg = 1 + (next().abs() * 6.0) as usize;
            let p = Poly::new((0..=deg).map(|_| c(next() * 3.0, next() * 3.0)).collect());
            let dp = p.derivative();
            for _ in 0..100 {
                let z = c(next() * 10.0, next() * 10.0);
                let h = 1e-6;
                let fd = (p.eval(z + c(h, 0.0)) - p.eval(z - c(h, 0.0))) / (2.0 * h);
                let exact = dp.eval(z);
                assert!(
                    (fd - exact).norm() <= 1e-4 * (1.0 + exact.norm()),
                    "FD mismatch at {z}"
                );
            }
        }
    }

    #[test]
    fn reduce_strips_common_factor() {
        // (z−1)(z−2) / (z−1) reduces to z−2.
        let num = Poly::from_real(&[2.0, -3.0, 1.0]);
        let den = Poly::from_real(&[-1.0, 1.0]);
        let r = RationalFn::new(num, den).unwrap();
        let red = r.reduce(1e-10);
        assert_eq!(red.num.degree(), Some(1));
        assert_eq!(red.den.degree(), Some(0));
        assert_eq!(r.m_degree(), Some(1));
    }

    #[test]
    fn problem_spec_validation() {
        let p = Poly::from_real(&[0.0, 1.0]); // P = z
        let s = RationalFn::from_poly(Poly::one());
        assert!(ProblemSpec::new(p.clone(), s.clone(), c(0.0, 0.0), c(1.0, 0.0), 0.0,
            std::f64::consts::FRAC_PI_4).is_ok());
        // theta out of range
        assert!(ProblemSpec::new(p.clone(), s.clone(), c(0.0, 0.0), c(1.0, 0.0), 0.0, 1.6).is_err());
        // non-monic P
        let p2 = Poly::from_real(&[0.0, 2.0]);
        assert!(ProblemSpec::new(p2, s, c(0.0, 0.0), c(1.0, 0.0), 0.0, 0.7).is_err());
    }
}
