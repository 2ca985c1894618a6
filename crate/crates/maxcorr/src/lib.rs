//! Testing independence in high dimension through the largest off-diagonal
//! entry of the sample correlation matrix (the coherence).
//!
//! The crate provides:
//!
//! * [`corr`]: column standardization and a blocked, deterministic kernel for
//!   the coherence `L = max_{i<j} |r_ij|`, plus the centered test statistic
//!   `T = n L^2 - a(p)` with `a(p) = 4 log p - log log p`.
//! * [`limit`]: the type I extreme value law `exp(-(1/sqrt(8 pi)) e^{-t/2})`
//!   that `T` obeys as `n/p` stays bounded, with quantiles and p-values.
//! * [`dist`]: the symmetric data laws used in simulations (normal, Student t,
//!   symmetric Pareto, Rademacher, uniform, and user survival functions),
//!   with exact absolute moments and tail functions.
//! * [`conditions`]: numerical evaluation of the moment conditions that
//!   delimit when the limit law holds, via Stieltjes quadrature.
//! * [`lemmas`]: small self-normalized statistics useful for probing the
//!   proof-level behaviour of pairs of columns.
//! * [`mc`]: a seeded, thread-count independent Monte Carlo harness.
//! * [`io`] and [`cli`]: CSV ingestion, JSON reports, and the command line
//!   front end.
//!
//! Numeric kernels are generic over the scalar type through [`Real`]
//! (instantiated in practice at `f32` or `f64`); distribution analytics and
//! quadrature are evaluated in double precision.

pub mod cli;
pub mod conditions;
pub mod corr;
pub mod dist;
pub mod io;
pub mod lemmas;
pub mod limit;
pub mod mc;
mod numeric;
mod scalar;

pub use scalar::Real;

// ---------------------------------------------------------------------------
// Concrete aliases for the generic core types
// ---------------------------------------------------------------------------

/// Double precision data matrix, the type the CLI and harness operate on.
pub type DataMatrix64 = corr::DataMatrix<f64>;
/// Single precision data matrix.
pub type DataMatrix32 = corr::DataMatrix<f32>;
/// Double precision standardized matrix.
pub type Standardized64 = corr::Standardized<f64>;
/// Single precision standardized matrix.
pub type Standardized32 = corr::Standardized<f32>;
