//! Log-scale complex arithmetic.
//!
//! Values that overflow (or underflow) double precision are carried as a
//! log-magnitude / argument pair: `LogComplex { lmag, arg }` represents
//! e^{lmag}·e^{i·arg} with `arg` kept in the principal range (−π, π].
//! Multiplication and division are exact up to rounding in `lmag`; sums are
//! performed by factoring out the largest magnitude (max-shift) and
//! accumulating the rescaled terms with compensated (Kahan–Neumaier)
//! summation, optionally upgraded to double-double when a caller needs extra
//! guard digits against cancellation.

use crate::{Error, Result};
use num_complex::Complex64 as C;

/// e^{lmag}·(cos arg + i sin arg) with arg ∈ (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub lmag: f64,
    pub arg: f64,
}

/// Reduce an angle to the principal range (−π, π].
fn principal(a: f64) -> f64 {
    if a.is_finite() {
        let mut r = a.rem_euclid(std::f64::consts::TAU);
        if r > std::f64::consts::PI {
            r -= std::f64::consts::TAU;
        }
        r
    } else {
        a
    }
}

impl LogComplex {
    /// The zero value: lmag = −∞, arg = 0.
    pub fn zero() -> Self {
        LogComplex { lmag: f64::NEG_INFINITY, arg: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.lmag == f64::NEG_INFINITY
    }

    pub fn new(lmag: f64, arg: f64) -> Self {
        LogComplex { lmag, arg: principal(arg) }
    }

    /// Lossless from an ordinary complex (zero maps to the zero value).
    pub fn from_complex(z: C) -> Self {
        let r = z.norm();
        if r == 0.0 {
            return LogComplex::zero();
        }
        LogComplex { lmag: r.ln(), arg: z.arg() }
    }

    /// e^w for an ordinary complex exponent: lmag = Re w, arg = Im w.
    pub fn exp_of(w: C) -> Self {
        LogComplex::new(w.re, w.im)
    }

    /// Back to an ordinary complex. Errors on overflow (guard at lmag = 700,
    /// just below ln(f64::MAX) ≈ 709.78, leaving headroom for downstream
    /// arithmetic); deep underflow flushes to zero.
    pub fn to_complex(&self) -> Result<C> {
        if self.is_zero() || self.lmag < -745.0 {
            return Ok(C::new(0.0, 0.0));
        }
        if self.lmag > 700.0 {
            return Err(Error::Overflow(self.lmag));
        }
        let m = self.lmag.exp();
        Ok(C::new(m * self.arg.cos(), m * self.arg.sin()))
    }

    pub fn mul(&self, other: &LogComplex) -> LogComplex {
        if self.is_zero() || other.is_zero() {
            return LogComplex::zero();
        }
        LogComplex::new(self.lmag + other.lmag, self.arg + other.arg)
    }

    pub fn div(&self, other: &LogComplex) -> Result<LogComplex> {
        if other.is_zero() {
            return Err(Error::LogZeroDiv);
        }
        if self.is_zero() {
            return Ok(LogComplex::zero());
        }
        Ok(LogComplex::new(self.lmag - other.lmag, self.arg - other.arg))
    }

    pub fn scale_complex(&self, z: C) -> LogComplex {
        self.mul(&LogComplex::from_complex(z))
    }

    pub fn neg(&self) -> LogComplex {
        LogComplex::new(self.lmag, self.arg + std::f64::consts::PI)
    }

    /// Sum of many log-scale values: the largest lmag is factored out, the
    /// rescaled terms (all of magnitude ≤ 1) are accumulated with
    /// Kahan–Neumaier compensation, and the result is re-expressed in log
    /// scale. With `high_accuracy` the real and imaginary accumulators run in
    /// double-double, which keeps ~30 significant digits before the final
    /// rounding — used where terms of magnitude ~e^{46} must cancel to
    /// roughly unit size.
    pub fn sum(terms: &[LogComplex], high_accuracy: bool) -> LogComplex {
        let shift = terms.iter().map(|t| t.lmag).fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return LogComplex::zero();
        }
        if high_accuracy {
            let mut re = Dd::zero();
            let mut im = Dd::zero();
            for t in terms {
                if t.is_zero() {
                    continue;
                }
                let m = (t.lmag - shift).exp();
                re = re.add_f64(m * t.arg.cos());
                im = im.add_f64(m * t.arg.sin());
            }
            let z = C::new(re.hi + re.lo, im.hi + im.lo);
            let r = LogComplex::from_complex(z);
            if r.is_zero() {
                return LogComplex::zero();
            }
            LogComplex::new(r.lmag + shift, r.arg)
        } else {
            let mut re = Neumaier::default();
            let mut im = Neumaier::default();
            for t in terms {
                if t.is_zero() {
                    continue;
                }
                let m = (t.lmag - shift).exp();
                re.add(m * t.arg.cos());
                im.add(m * t.arg.sin());
            }
            let z = C::new(re.total(), im.total());
            let r = LogComplex::from_complex(z);
            if r.is_zero() {
                return LogComplex::zero();
            }
            LogComplex::new(r.lmag + shift, r.arg)
        }
    }
}

/// Kahan–Neumaier compensated accumulator.
#[derive(Default, Debug, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Unevaluated double-double value hi + lo with |lo| ≤ ulp(hi)/2.
/// Only the operations needed for accumulation are provided.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn zero() -> Self {
        Dd { hi: 0.0, lo: 0.0 }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Error-free transformation of a + b (Knuth two-sum).
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        (s, err)
    }

    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = Dd::two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = Dd::two_sum(s, lo);
        Dd { hi, lo }
    }

    pub fn add(self, other: Dd) -> Dd {
        self.add_f64(other.hi).add_f64(other.lo)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}
