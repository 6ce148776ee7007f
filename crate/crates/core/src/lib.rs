//! Geodesics of the Clifton–Pohl torus in real and complex time.
//!
//! The crate has three layers:
//!
//! * [`engine`]: Taylor-element continuation of holomorphic ODEs along paths
//!   in the complex time plane, with radius estimation and semicircular
//!   detours around real singularities.
//! * [`model`]: the Clifton–Pohl metric, its geodesic flow, first integrals,
//!   impulse, closed-form null geodesics, the logarithmic chart and the
//!   dilation quotient.
//! * [`classify`]: completeness verdicts from the impulse criterion and from
//!   numerical continuation, grid sweeps and their cross-validation.
//!
//! ```
//! use cptorus::model::{impulse, RealIC};
//!
//! let ic = RealIC::new(1.0, 1.0, 1.0, 1.0).unwrap();
//! assert_eq!(impulse(&ic).unwrap(), 2.0);
//! ```

pub mod classify;
pub mod engine;
pub mod error;
pub mod model;
pub mod series;

pub use num_complex::Complex64;

// The guide's code blocks run as doctests of these empty modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/taylor.md")]
    mod taylor {}
    #[doc = include_str!("../../../book/src/continuation.md")]
    mod continuation {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
