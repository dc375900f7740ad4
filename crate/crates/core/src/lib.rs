//! Strict k-local move sets for lattice protein models.
//!
//! Structures live on an integer lattice (square, simple cubic or
//! face-centered cubic), either as a bare backbone chain or with one
//! side-chain node attached to every backbone node. The neighborhood of a
//! structure under strict k-local moves is enumerated by solving one small
//! constraint problem per residue interval ([`moves`], [`csp`]). On top of
//! that sit contact energies ([`model`]), gradient walks and Metropolis
//! annealing ([`search`]), and structure comparison by dRMSD/cRMSD
//! ([`metrics`]).

pub mod csp;
pub mod io;
pub mod lattice;
pub mod metrics;
pub mod model;
pub mod moves;
pub mod search;

pub use lattice::{Coord, Lattice, LatticeError, LatticeKind};
pub use model::{
    BackboneStructure, Conformation, ContactPotential, EnergyFunction, HpMapping, ModelKind, Sequence,
    SideChainResidue, SideChainStructure, Structure, ValidationError,
};
pub use moves::{MoveInterval, MoveSolution};
