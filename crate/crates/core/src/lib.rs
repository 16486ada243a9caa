//! Compressed sensing of signals that are sparse in a redundant dictionary.
//!
//! A signal `y = D x` with few nonzero coefficients `x` is measured as
//! `s = A y` with a random `n × d` matrix `A`. Recovery runs on the composed
//! sensing matrix `Φ = A D`.
//!
//! * [`numerics`]: QR least squares, Jacobi eigenvalues, seeded random streams.
//! * [`dictionary`]: dictionaries, coherence, Babel function, restricted isometry constants.
//! * [`measurement`]: Gaussian/Bernoulli ensembles and concentration checks.
//! * [`recovery`]: thresholding, orthogonal matching pursuit and basis pursuit.
//! * [`bounds`]: sample-count bounds, failure probabilities and recovery conditions.
//! * [`experiments`]: seeded phase-transition harness with CSV output.

pub mod bounds;
pub mod dictionary;
pub mod experiments;
pub mod measurement;
pub mod numerics;
pub mod recovery;

pub use dictionary::Dictionary;
pub use numerics::{DenseMatrix, RngStream};
