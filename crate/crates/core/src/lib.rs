//! Certified tests for 1-Lipschitz maps on the p-adic integers.
//!
//! Functions are described in the van der Put or Mahler basis, as integer
//! polynomials, as explicit value tables or through the `d + x + pΔg`
//! constructions. Coefficient criteria for measure preservation and
//! ergodicity are decided on the finite tables and can be cross-checked
//! against brute-force cycle counting modulo `p^n`.

pub mod analysis;
pub mod bases;
pub mod constructor;
pub mod criteria;
pub mod document;
pub mod model;
pub mod oracle;
pub mod padic;
pub mod stream;

pub use bases::{BasesError, MahlerTable, NormalizedVdp, VdpTable};
pub use model::{compile, FunctionSpec, ModelError, SpecKind, ValueTable};
pub use padic::{PadicError, PadicTrunc, PrimeConfig, ResidueRing, Valuation};
