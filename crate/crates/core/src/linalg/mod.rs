//! Dense complex linear algebra, validated quantum state/observable types,
//! seeded random streams, and state samplers.

mod eig;
mod matrix;
mod random;

pub use eig::{hermitian_eigenvalues, min_hermitian_eigenvalue};
pub use matrix::{
    trace_inner, ComplexMatrix, DensityMatrix, HermitianObservable, PureState, StateEntries,
};
pub use random::{
    depolarize, haar_random_pure, haar_random_unit_vector, hs_random_mixed, make_rho_a,
    RandomStream,
};
