//! Checkable identities and estimates of the continuous theory evaluated on
//! discrete solutions, an independent root finder for the decoupled
//! spectrum, and the energy-decay fitter.

mod decay;
mod identity;
mod multiplier;
mod oracle;
mod static_problem;

pub use decay::{check_tail_guard, decay_fit, decay_fit_series, DecayFit};
pub use identity::{resolvent_identity_check, shifted_solve, ResolventIdentityReport};
pub use multiplier::{multiplier_check, multiplier_constant, AffineMultiplier, MultiplierReport};
pub use oracle::{characteristic_roots_oracle, characteristic_roots_scalar};
pub use static_problem::{static_solve, StaticSolution};

/// Simpson's rule on one element; exact for quadratics.
pub(crate) fn simpson(f0: f64, fm: f64, f1: f64, h: f64) -> f64 {
    h / 6.0 * (f0 + 4.0 * fm + f1)
}
