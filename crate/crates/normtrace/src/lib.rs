//! Exact computations in the norm-trace tower of function fields over F_{q^2}:
//! finite-field tables, symbolic tower arithmetic, rational places, Weierstrass
//! semigroups, automorphism groups, subtowers, and one-point evaluation codes.

pub mod cod;
pub mod error;
pub mod gf;
pub mod grp;
pub mod plc;
pub mod sgp;
pub mod sub;
pub mod twr;

pub use error::{Error, Result};
