//! Shared error type for the laboratory.
//!
//! One enum covers all modules; variants carry enough context to be
//! actionable from the command line (which grid axis, which degree, which
//! eigenvalue went negative).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two objects that must live on the same sampled space (and share the
    /// same target size k) do not.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// A product would exceed the degree cap of the tensor algebra.
    #[error("degree {degree} exceeds the degree cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    /// A translation was requested along an axis without a declared period.
    #[error("space is not periodic on axis {axis}")]
    NotPeriodic { axis: usize },

    /// A shift vector does not map the lattice onto itself.
    #[error("shift is off-lattice: {0}")]
    OffLattice(String),

    /// The state's data cannot evaluate a term of this degree.
    #[error("unsupported degree {degree}: {reason}")]
    UnsupportedDegree { degree: usize, reason: String },

    /// omega(1) differs from 1.
    #[error("state is not normalized: omega(1) = {re} + {im}i")]
    NotNormalized { re: f64, im: f64 },

    /// A mixing weight fell outside [0, 1].
    #[error("mixing weight {0} is outside [0, 1]")]
    LambdaOutOfRange(f64),

    /// A deformation with epsilon = 0 is singular.
    #[error("deformation parameter epsilon must be nonzero")]
    ZeroEpsilon,

    /// The Gram matrix has an eigenvalue below the negativity tolerance.
    #[error("state is not positive: minimum Gram eigenvalue {min_eigenvalue:e} ({witness})")]
    NonPositiveState {
        min_eigenvalue: f64,
        witness: String,
    },

    /// A generator, grid-point, or color index is out of range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// An automorphism does not map the generator span into itself.
    #[error("generator images leave the generator span (residual {residual:e})")]
    GeneratorsNotClosed { residual: f64 },

    /// The state is not invariant under the proposed automorphism.
    #[error("state is not invariant under the automorphism: {0}")]
    NotInvariant(String),

    /// state_order was called with no probes.
    #[error("probe list is empty")]
    EmptyProbes,

    /// finite_order_approx was called with no chosen functions.
    #[error("chosen-function list is empty")]
    EmptyChoice,

    /// A compression level beyond the word-basis length was requested.
    #[error("compression level {level} exceeds the basis max_len {max_len}")]
    LevelTooLarge { level: usize, max_len: usize },

    /// A higher Casimir was requested without an evaluator for it.
    #[error("no Casimir evaluator for order 2*{0}")]
    MissingCasimir(usize),

    /// Quadrature with too few points for the requested accuracy.
    #[error("too few quadrature points: {got} < {min}")]
    TooFewPoints { got: usize, min: usize },

    /// The matrix-model action does not define a normalizable weight.
    #[error("action is not normalizable: {0}")]
    NonNormalizableAction(String),

    /// A moment table lacks entries for the requested degree or indices.
    #[error("missing moments: {0}")]
    MissingMoments(String),

    /// A saddle-point configuration has coincident eigenvalues.
    #[error("coincident eigenvalues at positions {0} and {1}")]
    CoincidentEigenvalues(usize, usize),

    /// Construction-time validation failure (bad lattice, bad lambda, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
}
