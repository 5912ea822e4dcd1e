//! Exact simulator for the binary-coupling-scheme model of quantum
//! computation.
//!
//! States are binary coupling schemes of SU(2) angular momenta; elementary
//! operations are tree rotations (Racah transforms, built from 6j symbols)
//! and twists (phase transforms). The crate builds the rotation graph of
//! coupling schemes, compiles programs as move sequences into exact unitary
//! transfer matrices, and verifies the algebraic identities that make the
//! whole construction consistent, plus the large-spin asymptotics and the
//! statistical-tensor (mixed state) extension.
//!
//! Module map:
//! - [`numerics`]: half-integer spins, exact square-root scalars,
//!   configurable-precision reals.
//! - [`wigner`]: Clebsch-Gordan, 6j and 9j symbols; pentagon and triangle
//!   identity verifiers.
//! - [`tree`]: coupling trees, the bracketing grammar, rotation and twist
//!   moves.
//! - [`graph`]: the twist-reduced rotation graph, its statistics, and
//!   shortest move sequences.
//! - [`engine`]: coupled bases, elementary unitaries, compiled programs,
//!   Hermitian generators.
//! - [`semiclassics`]: tetrahedral asymptotics of the 6j symbol.
//! - [`density`]: statistical-tensor decomposition and 9j-coupled
//!   composition of density operators.

pub mod density;
pub mod engine;
pub mod graph;
pub mod numerics;
pub mod semiclassics;
pub mod tree;
pub mod wigner;

pub use numerics::{triangle_ok, HalfInt, MPReal, QRoot, Scalar};
pub use tree::{CouplingTree, Move, MoveSequence};
