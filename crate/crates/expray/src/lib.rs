//! Numerical machinery for the first-order equation f′(z) = S(z)·e^{P(z)}·f(z) + 1,
//! where P is a monic polynomial (zero sub-leading coefficient) and S is rational.
//!
//! Solutions have the closed form f(z) = e^{U(z)}·[c + ∫_{z0}^{z} e^{−U(t)} dt],
//! with U an antiderivative of S·e^{P}. Far along a ray arg z = θ the factor
//! e^{U} reaches doubly-exponential magnitudes (|f| ~ exp(e^{x^n})) and the
//! bracket integral oscillates with frequency e^{u}; naive quadrature is
//! impossible. This crate evaluates f anyway, by
//!
//! 1. building a rational antiderivative approximation Q with U ≈ Q·e^{P}
//!    via an integration-by-parts recursion ([`asymptotics`]),
//! 2. tracking the branch-continuous logarithm W = 𝐮 + i𝐯 of U and its exact
//!    partials over the plane ([`field`]),
//! 3. tracing the level curves 𝐯 = 2kπ (where e^{−U} is positive and rapidly
//!    decaying) and the modulus curve e^{𝐮} = ω (where e^{−U} is bounded)
//!    ([`paths`]),
//! 4. rerouting the impossible vertical integrals through those tame curves by
//!    Cauchy's theorem, and summing the residual oscillatory cell by an
//!    alternating half-period series in w = e^{𝐮}·sin 𝐯 ([`reroute`]),
//! 5. verifying the resulting growth bounds — the doubly-exponential lower
//!    bound on ray windows, the anti-window cancellation bounds, and the
//!    hyper-order — at desk scale ([`verify`]).
//!
//! All extreme-range values are carried as [`logscale::LogComplex`]
//! (log-magnitude, argument) pairs, which represent magnitudes up to
//! exp(±1.7e308).

pub mod algebra;
pub mod asymptotics;
pub mod cli;
pub mod field;
pub mod logscale;
pub mod paths;
pub(crate) mod quad;
pub mod reroute;
pub mod verify;

use num_complex::Complex64;

/// Errors surfaced by every layer of the crate.
///
/// Numerical code distinguishes *caller* errors (bad configuration, evaluation
/// inside the pole disk) from *solver* findings (corrector divergence, branch
/// singularities, unresolved regimes) so that verification drivers can count
/// and report the latter instead of aborting.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degree-0 polynomial cannot be normalized")]
    DegreeZero,
    #[error("division by an identically zero polynomial")]
    ZeroDivisor,
    #[error("rational function evaluated at a common root of num and den near z = {0}")]
    CommonRoot(Complex64),
    #[error("rational function evaluated at a pole near z = {0}")]
    PoleEval(Complex64),
    #[error("log-magnitude {0} exceeds the double-precision exponent range")]
    Overflow(f64),
    #[error("division by zero in log-scale arithmetic")]
    LogZeroDiv,
    #[error("evaluation inside the pole disk at z = {0}")]
    PoleDisk(Complex64),
    #[error("U(z) vanishes near z = {0}: branch singularity of log U")]
    BranchSingularity(Complex64),
    #[error("branch continuation refinement exceeded depth {0} (path passes too near a zero of U)")]
    RefinementDepth(u32),
    #[error("corrector failed to converge: {0}")]
    CorrectorDiverged(String),
    #[error("no seed found: {0}")]
    SeedNotFound(String),
    #[error("Newton iteration failed: {0}")]
    NewtonFailed(String),
    #[error("quadrature did not converge: {0}")]
    QuadNonConvergence(String),
    #[error("path integrand precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("half-period series: non-monotone density at lattice point w = {0}")]
    NonMonotoneChi(f64),
    #[error("unresolved band: |eta| = {0} is below the resolvable offset at this magnitude")]
    UnresolvedBand(f64),
    #[error("regime undecidable: zeta = {0} is within 1e-3 of a window boundary")]
    RegimeUndecidable(f64),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
