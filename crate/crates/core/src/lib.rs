//! Interference-alignment precoding for the 3-user (p, p+1) MIMO interference
//! channel with constant coefficients.
//!
//! The crate builds the whole linear scheme end to end: random channel draws,
//! the transmit/receive change of basis that forces a banded zero pattern on
//! the cross channels, alignment-chain precoders generated from three support
//! precoding blocks, zero-forcing receivers, and the numerical checks that the
//! scheme reaches `p(p+1)/(2p+1)` degrees of freedom per user when asymmetric
//! complex signaling (ACS) is used over `T = 2p+1` symbol extensions.
//!
//! Two signaling models share one generic pipeline through the [`Signal`]
//! trait: real-valued ACS (`f64`) and the complex time-extension-only baseline
//! (`Complex64`).
//!
//! ```
//! use ia_dof::pipeline::Link;
//!
//! let link = Link::<f64>::establish(2, 7).unwrap();
//! let dof = link.achieved_dof(1);
//! assert_eq!(dof.to_string(), "6/5");
//! ```

pub mod alignment;
pub mod basis_change;
pub mod channel;
pub mod detection;
pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod pipeline;
pub mod seed;
pub mod verification;

pub use channel::{ExtensionMode, Scheme, Signal};
pub use error::{IaError, Result};
pub use exec::Execution;

/// Complex scalar used for raw and change-of-basis channel coefficients.
pub type Complex64 = num_complex::Complex<f64>;

/// Exact degrees-of-freedom value, e.g. `6/5`.
pub type Dof = num_rational::Ratio<usize>;

/// Optimal per-user DoF of the 3-user (p, p+1) channel: `p(p+1)/(2p+1)`.
pub fn optimal_dof(p: usize) -> Dof {
    Dof::new(p * (p + 1), 2 * p + 1)
}

/// Whether the per-user DoF claim for `p` is a proven case (`2..=6`) or only
/// conjectured.
pub fn claim_status(p: usize) -> &'static str {
    if (2..=6).contains(&p) {
        "proven"
    } else {
        "conjectured"
    }
}
