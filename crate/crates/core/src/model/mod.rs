//! Sequences, backbone-only and side-chain structures, their validity
//! conditions, and contact-based energies.

mod energy;
mod potential;
mod sequence;
mod structure;

pub(crate) use energy::IntervalScorer;
pub use energy::{energy_backbone, energy_sidechain, ContactModel, EnergyError, EnergyFunction};
pub use potential::{ContactPotential, PotentialError, SYMMETRY_TOLERANCE};
pub use sequence::{Alphabet, HpMapping, Sequence, SequenceError, AMINO_ACIDS, DEFAULT_HYDROPHOBIC};
pub use structure::{
    validate_backbone, validate_sidechain, BackboneStructure, Conformation, ModelKind, Monomer, SideChainResidue,
    SideChainStructure, Structure, ValidationError,
};

/// Reads a contact potential matrix from text.
pub fn load_potential(source: impl std::io::BufRead) -> Result<ContactPotential, PotentialError> {
    ContactPotential::from_reader(source)
}

/// Positionwise H/P translation of an amino-acid sequence.
pub fn translate_to_hp(sequence: &Sequence, mapping: &HpMapping) -> Result<Sequence, SequenceError> {
    mapping.translate(sequence)
}

pub fn hp_potential() -> ContactPotential {
    ContactPotential::hp()
}
