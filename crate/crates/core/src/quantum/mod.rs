//! Exact quantum spectra: bases, Hamiltonian matrices, diagonalization,
//! convergence control and Peres-lattice observables.

pub mod basis;
pub mod eigen;
pub mod hamiltonian;
pub mod overlap;
pub mod spectrum;
pub mod tc;

pub use basis::{fock_state_parity, Basis, BasisScheme, BasisSpec};
pub use eigen::{diagonalize, Eigen};
pub use hamiltonian::{assemble_hamiltonian, DEFAULT_MAX_DIM};
pub use spectrum::{check_convergence, compute_spectrum, eigenvalues, ConvergenceReport, PeresObservables, SpectrumBlock, SpectrumOptions};
pub use tc::{tc_block_spectrum, tc_gap_minima, tc_lattice, TcGap};
