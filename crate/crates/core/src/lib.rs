//! Exact density-matrix simulation of an entanglement-swapping
//! purification protocol for amplitude-damped two-qubit states.
//!
//! Two entangled pairs travel through local amplitude-damping channels; a
//! middle node Bell-measures one qubit of each pair, entangling the outer
//! qubits. Weak nondestructive measurements between rounds let the
//! procedure be iterated, asymptotically concentrating the surviving
//! branch toward a maximally entangled state. The library provides the
//! dense complex-matrix kernel, state and channel constructors, exact
//! branch-by-branch measurement, the Wootters concurrence with its
//! closed-form companions, the protocol driver, and verification suites
//! that pit every closed form against the brute-force simulator.

pub mod channels;
pub mod entanglement;
pub mod error;
pub mod measure;
pub mod protocol;
pub mod qmat;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use qmat::{ComplexMatrix, Numerics, C64};
pub use states::{BellLabel, DensityMatrix, PureState};
