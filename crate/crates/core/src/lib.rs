//! Berry phases of cavity-QED models in a truncated Fock space, and the
//! semiclassical Born–Oppenheimer surfaces that explain them.
//!
//! * [`fock`]: ladder, quadrature and Pauli operators, tensor products.
//! * [`hamiltonians`]: Jaynes–Cummings, Rabi and Λ-system builders.
//! * [`eigensolve`]: dense Hermitian eigendecomposition.
//! * [`berry`]: eigenstate tracking, Wilson loops and closed-form phases.
//! * [`surfaces`]: adiabatic surfaces and degeneracy classification.
//! * [`cli`]: the command-line front end.

pub mod berry;
pub mod cli;
pub mod eigensolve;
pub mod fock;
pub mod hamiltonians;
pub mod matrix;
pub mod settings;
pub mod surfaces;

pub use matrix::ComplexMatrix;
pub use settings::NumericSettings;
