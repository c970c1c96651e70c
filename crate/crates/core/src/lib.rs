//! Desk-scale numerical laboratory for states on Borchers algebras with
//! matrix targets.
//!
//! The pipeline mirrors the reconstruction route from n-point data to
//! operators: sampled test-function algebras ([`algebra`]), Wightman-type
//! state functionals and axiom checkers ([`states`]), the GNS construction
//! ([`gns`]), finite-order matrix-state approximations ([`matrix_states`]),
//! exact two-dimensional Yang-Mills correlators ([`ym2`]), and Hermitian
//! one-matrix models ([`matrix_model`]).

pub mod algebra;
pub mod error;
pub mod gns;
pub mod io;
pub mod linalg;
pub mod matrix_model;
pub mod matrix_states;
pub mod space;
pub mod states;
pub mod ym2;

pub use algebra::{BorchersElement, MatrixTestFunction};
pub use error::{Error, Result};
pub use gns::{GnsRepresentation, WordBasis};
pub use matrix_states::MatrixState;
pub use space::SampledSpace;
pub use states::{StateFunctional, TraceMode, WightmanData};
pub use ym2::{IrrepLabel, SurfaceParams};
