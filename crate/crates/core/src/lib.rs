//! Numerical QED engine for single, double and triple Compton scattering.
//!
//! Amplitudes are evaluated by explicit multiplication of Dirac matrices in the
//! standard (Dirac) representation, summed over all orderings of the photon
//! vertices along the electron line. On top of the amplitudes the crate builds
//! polarization-resolved differential cross sections, energy-integrated angular
//! distributions, Monte Carlo total cross sections, and the 8×8 polarization
//! density matrix of the three emitted photons together with its entropy and a
//! genuine-tripartite-entanglement measure obtained from a witness SDP.
//!
//! Energies and momenta are in MeV (natural units, ħ = c = 1); cross sections
//! are reported in barn.

pub mod amplitudes;
pub mod constants;
pub mod dirac;
pub mod entanglement;
mod error;
pub mod kinematics;
pub mod quadrature;
pub mod xsec;

pub use amplitudes::{AmplitudeTensor, Permutation};
pub use constants::{ALPHA, BARN_PER_INV_MEV2, ELECTRON_MASS};
pub use dirac::{minkowski_dot, Bispinor, DiracMatrix, FourVector};
pub use entanglement::{DensityMatrix, Subset, TauResult, WitnessDecomposition};
pub use error::{Error, Result};
pub use kinematics::{Direction, Frame, PhotonLeg, Polarization, ScatterConfig};
pub use quadrature::{IntegralEstimate, McOptions, RombergOptions};
pub use xsec::{Channel, FrameStrategy, Process, SpinTreatment};
