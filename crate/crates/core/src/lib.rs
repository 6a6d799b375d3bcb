//! Exact computation of p-adic orbital integrals, their Fourier kernel
//! functions, finite character sums and local Igusa zeta data over `Q_p`.
//!
//! Everything is exact: scalars are arbitrary-precision rationals, character
//! values live in cyclotomic fields `Q(zeta_{p^k})`, and integrals are
//! Laurent series in `t = p^{-s}` with a tracked truncation order.  Floating
//! point appears only in human-readable reports.

pub mod charsum;
pub mod cyclotomic;
pub mod group;
pub mod kernel;
pub mod lattice;
pub mod rational;
pub mod series;

pub use cyclotomic::{psi, Cyclotomic};
pub use lattice::{GramMatrix, QVec, ResidueVec};
pub use rational::{frac_p, val_p, Valuation};
pub use series::{RatFunc, SeriesEq, TruncatedSeries};
