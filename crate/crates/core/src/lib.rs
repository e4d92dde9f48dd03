//! Keyed permutations over finite fields built from generalized triangular
//! dynamical systems (GTDS), factories for the classic design families and
//! exhaustive differential / linear analysis with the matching GTDS bounds.

pub mod analysis;
pub mod cipher;
pub mod error;
pub mod field;
pub mod format;
pub mod gtds;
pub mod instantiations;
pub mod poly;
pub mod space;

pub use cipher::{AffineLayer, CipherSpec, RoundKeys, RoundSpec, Stage};
pub use error::{Error, Result};
pub use field::{Fe, FieldCtx, FieldDesc};
pub use gtds::{Branch, Coupling, Gtds, InversionMode, Layout};
pub use poly::{MultiPoly, UniPoly};
