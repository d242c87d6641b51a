//! Selberg correlation integrals through their Fuchsian matrix ODE.
//!
//! The split integrals `I_q^{(α)}(x)` are expanded in the Frobenius basis of
//! the system about `x = 0` and recombined with a closed-form connection
//! matrix. Everything downstream — gap probabilities, order-statistic
//! densities, moments, characteristic-polynomial averages, monodromy — is
//! built on that expansion, and [`oracle`] provides brute-force integrals to
//! check it against.

pub mod assembly;
pub mod connection;
pub mod error;
pub mod fuchsian;
pub mod jacobi;
pub mod monodromy;
pub mod oracle;
pub mod params;
pub mod roots;
pub mod selberg;
pub mod special;
pub mod verify;

/// Library version, embedded in every CLI artefact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use fuchsian::{FrobeniusSolution, FuchsMatrices};
pub use params::{LogValue, Params, Rational, Validity};
pub use selberg::SelbergArgs;
