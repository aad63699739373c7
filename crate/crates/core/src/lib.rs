//! Numerical toolkit for entanglement in spin chains and itinerant-fermion
//! systems.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`state`] — dense n-qubit pure states, density matrices, Pauli words,
//!   partial traces, and the JSON state-file format;
//! * [`linalg`] — the small set of complex linear-algebra kernels the rest of
//!   the crate relies on (Hermitian eigensolver via real embedding, Gram-based
//!   SVD, Kronecker products);
//! * [`bipartite`] — Schmidt decompositions, entropies, tangles, concurrence
//!   (pure and mixed), entanglement of formation, negativity, and the
//!   correlator route to two-site reduced density matrices;
//! * [`multipartite`] — polynomial invariants built from antilinear
//!   expectations (three-tangle, n-tangles, degree-6 filters), geometric
//!   measure, convex-roof extensions, localizable entanglement, and the
//!   translation of antilinear combs into linear expectation identities;
//! * [`fermions`] — entanglement for indistinguishable particles: Slater
//!   decompositions, fermionic concurrence with its antiunitary dual, Pfaffian
//!   evaluation, bosonic Schmidt reductions, and entanglement of particles;
//! * [`spin_chain`] — exact diagonalization of anisotropic XY/XXZ chains in
//!   parity sectors, ground-state correlators, and factorizing-field searches;
//! * [`free_fermion`] — the quadratic-form solution of the XY chain for large
//!   N, string correlators by Wick Pfaffians, concurrence profiles, and
//!   finite-size scaling of the concurrence derivative;
//! * [`dynamics`] — single-magnon wave-packet propagation (exact finite-N and
//!   Bessel asymptotics) and exact unitary evolution at ED sizes;
//! * [`itinerant`] — free-electron-gas two-point entanglement, eta-pairing
//!   rung concurrence, and Hubbard-dimer/chain local entropies.
//!
//! Everything is deterministic given explicit seeds; nothing holds global
//! state, so all entry points are safe to call from parallel workers.

// Index-driven loops are kept where they transcribe tensor contractions and
// lattice sums: the indices carry the physics (site, mode, Lorentz index) and
// iterator chains would bury them.
#![allow(clippy::needless_range_loop)]

pub mod bipartite;
pub mod dynamics;
pub mod error;
pub mod fermions;
pub mod free_fermion;
pub mod itinerant;
pub mod linalg;
pub mod multipartite;
pub mod spin_chain;
pub mod state;

pub use error::{Error, Result};
