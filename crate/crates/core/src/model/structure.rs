use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use thiserror::Error;

use crate::lattice::{AxisTransform, Coord, Lattice};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Backbone,
    SideChain,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Backbone => "backbone",
            ModelKind::SideChain => "sidechain",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "backbone" => Ok(ModelKind::Backbone),
            "sidechain" | "side-chain" | "side_chain" => Ok(ModelKind::SideChain),
            other => Err(format!("unknown model kind '{other}' (expected backbone or sidechain)")),
        }
    }
}

/// A monomer of a structure, 1-based residue index. Ordered residue-major,
/// backbone before side chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Monomer {
    Backbone(usize),
    SideChain(usize),
}

impl Monomer {
    fn key(self) -> (usize, u8) {
        match self {
            Monomer::Backbone(i) => (i, 0),
            Monomer::SideChain(i) => (i, 1),
        }
    }
}

impl PartialOrd for Monomer {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomer {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for Monomer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monomer::Backbone(i) => write!(f, "backbone {i}"),
            Monomer::SideChain(i) => write!(f, "sidechain {i}"),
        }
    }
}

/// The first violated validity condition of a structure. Residue indices
/// are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("structure has no residues")]
    Empty,
    #[error("broken chain: residue {0} is not adjacent to residue {next}", next = .0 + 1)]
    BrokenChain(usize),
    #[error("side chain {0} is detached from its backbone")]
    DetachedSideChain(usize),
    #[error("clash: {0} and {1} occupy the same node")]
    Clash(Monomer, Monomer),
    #[error("backbone has {backbone} residues but side chain list has {sidechain}")]
    LengthMismatch { backbone: usize, sidechain: usize },
}

/// Finds the lexicographically smallest pair of colliding monomers. `items`
/// must be listed in monomer order.
fn first_clash(items: impl Iterator<Item = (Monomer, Coord)>) -> Option<(Monomer, Monomer)> {
    let mut first_seen: HashMap<Coord, Monomer> = HashMap::new();
    let mut best: Option<(Monomer, Monomer)> = None;
    for (m, c) in items {
        match first_seen.get(&c) {
            Some(&earlier) => {
                let pair = (earlier, m);
                if best.is_none_or(|b| pair < b) {
                    best = Some(pair);
                }
            }
            None => {
                first_seen.insert(c, m);
            }
        }
    }
    best
}

pub fn validate_backbone(lattice: &Lattice, coords: &[Coord]) -> Result<(), ValidationError> {
    if coords.is_empty() {
        return Err(ValidationError::Empty);
    }
    if let Some(i) = coords.windows(2).position(|w| !lattice.are_neighbors(w[0], w[1])) {
        return Err(ValidationError::BrokenChain(i + 1));
    }
    let items = coords.iter().enumerate().map(|(i, &c)| (Monomer::Backbone(i + 1), c));
    match first_clash(items) {
        Some((a, b)) => Err(ValidationError::Clash(a, b)),
        None => Ok(()),
    }
}

pub fn validate_sidechain(lattice: &Lattice, backbone: &[Coord], sidechain: &[Coord]) -> Result<(), ValidationError> {
    if backbone.len() != sidechain.len() {
        return Err(ValidationError::LengthMismatch { backbone: backbone.len(), sidechain: sidechain.len() });
    }
    if backbone.is_empty() {
        return Err(ValidationError::Empty);
    }
    if let Some(i) = backbone.windows(2).position(|w| !lattice.are_neighbors(w[0], w[1])) {
        return Err(ValidationError::BrokenChain(i + 1));
    }
    if let Some(i) = backbone.iter().zip(sidechain).position(|(&b, &s)| !lattice.are_neighbors(b, s)) {
        return Err(ValidationError::DetachedSideChain(i + 1));
    }
    let items = backbone
        .iter()
        .zip(sidechain)
        .enumerate()
        .flat_map(|(i, (&b, &s))| [(Monomer::Backbone(i + 1), b), (Monomer::SideChain(i + 1), s)]);
    match first_clash(items) {
        Some((a, b)) => Err(ValidationError::Clash(a, b)),
        None => Ok(()),
    }
}

/// Per-residue placement in the side-chain model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SideChainResidue {
    pub backbone: Coord,
    pub sidechain: Coord,
}

/// Behavior shared by the backbone-only and side-chain structure types, so
/// that move generation and search can be written once.
pub trait Conformation: Clone + PartialEq + Eq + Hash + fmt::Debug + Send + Sync {
    /// Coordinates of a single residue.
    type Residue: Copy + Eq + Ord + Hash + fmt::Debug + Send + Sync;

    const KIND: ModelKind;
    /// Monomers per residue: 1 (backbone) or 2 (backbone, side chain).
    const POINTS_PER_RESIDUE: usize;

    fn lattice(&self) -> &Lattice;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// 0-based residue access.
    fn residue(&self, i: usize) -> Self::Residue;
    fn residue_points(r: Self::Residue) -> impl Iterator<Item = Coord>;
    /// Inverse of [`Conformation::residue_points`].
    fn residue_from_points(points: &[Coord]) -> Self::Residue;
    fn validate(&self) -> Result<(), ValidationError>;
    /// Copy with residues `start..start + residues.len()` (0-based) replaced;
    /// the result is not validated.
    fn with_residues(&self, start: usize, residues: &[Self::Residue]) -> Self;
    /// Rebuilds from a residue list without validation.
    fn from_residues_unchecked(lattice: Lattice, residues: &[Self::Residue]) -> Self;
    fn transformed(&self, f: impl Fn(Coord) -> Coord) -> Self;
    fn into_structure(self) -> Structure;

    /// Every monomer point in residue order.
    fn points(&self) -> Vec<Coord> {
        (0..self.len()).flat_map(|i| Self::residue_points(self.residue(i))).collect()
    }

    fn residues(&self) -> Vec<Self::Residue> {
        (0..self.len()).map(|i| self.residue(i)).collect()
    }
}

/// A backbone-only lattice protein: one node per residue.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BackboneStructure {
    lattice: Lattice,
    coords: Vec<Coord>,
}

impl BackboneStructure {
    pub fn new(lattice: Lattice, coords: Vec<Coord>) -> Result<Self, ValidationError> {
        validate_backbone(&lattice, &coords)?;
        Ok(BackboneStructure { lattice, coords })
    }

    pub fn new_unchecked(lattice: Lattice, coords: Vec<Coord>) -> Self {
        BackboneStructure { lattice, coords }
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }
}

impl Conformation for BackboneStructure {
    type Residue = Coord;
    const KIND: ModelKind = ModelKind::Backbone;
    const POINTS_PER_RESIDUE: usize = 1;

    fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn len(&self) -> usize {
        self.coords.len()
    }

    fn residue(&self, i: usize) -> Coord {
        self.coords[i]
    }

    fn residue_points(r: Coord) -> impl Iterator<Item = Coord> {
        std::iter::once(r)
    }

    fn residue_from_points(points: &[Coord]) -> Coord {
        points[0]
    }

    fn validate(&self) -> Result<(), ValidationError> {
        validate_backbone(&self.lattice, &self.coords)
    }

    fn with_residues(&self, start: usize, residues: &[Coord]) -> Self {
        let mut coords = self.coords.clone();
        coords[start..start + residues.len()].copy_from_slice(residues);
        BackboneStructure { lattice: self.lattice.clone(), coords }
    }

    fn from_residues_unchecked(lattice: Lattice, residues: &[Coord]) -> Self {
        BackboneStructure { lattice, coords: residues.to_vec() }
    }

    fn transformed(&self, f: impl Fn(Coord) -> Coord) -> Self {
        BackboneStructure { lattice: self.lattice.clone(), coords: self.coords.iter().map(|&c| f(c)).collect() }
    }

    fn into_structure(self) -> Structure {
        Structure::Backbone(self)
    }
}

/// A lattice protein with a backbone node and a side-chain centroid node
/// per residue.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SideChainStructure {
    lattice: Lattice,
    backbone: Vec<Coord>,
    sidechain: Vec<Coord>,
}

impl SideChainStructure {
    pub fn new(lattice: Lattice, backbone: Vec<Coord>, sidechain: Vec<Coord>) -> Result<Self, ValidationError> {
        validate_sidechain(&lattice, &backbone, &sidechain)?;
        Ok(SideChainStructure { lattice, backbone, sidechain })
    }

    pub fn new_unchecked(lattice: Lattice, backbone: Vec<Coord>, sidechain: Vec<Coord>) -> Self {
        SideChainStructure { lattice, backbone, sidechain }
    }

    pub fn backbone(&self) -> &[Coord] {
        &self.backbone
    }

    pub fn sidechain(&self) -> &[Coord] {
        &self.sidechain
    }
}

impl Conformation for SideChainStructure {
    type Residue = SideChainResidue;
    const KIND: ModelKind = ModelKind::SideChain;
    const POINTS_PER_RESIDUE: usize = 2;

    fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn len(&self) -> usize {
        self.backbone.len()
    }

    fn residue(&self, i: usize) -> SideChainResidue {
        SideChainResidue { backbone: self.backbone[i], sidechain: self.sidechain[i] }
    }

    fn residue_points(r: SideChainResidue) -> impl Iterator<Item = Coord> {
        [r.backbone, r.sidechain].into_iter()
    }

    fn residue_from_points(points: &[Coord]) -> SideChainResidue {
        SideChainResidue { backbone: points[0], sidechain: points[1] }
    }

    fn validate(&self) -> Result<(), ValidationError> {
        validate_sidechain(&self.lattice, &self.backbone, &self.sidechain)
    }

    fn with_residues(&self, start: usize, residues: &[SideChainResidue]) -> Self {
        let mut out = self.clone();
        for (i, r) in residues.iter().enumerate() {
            out.backbone[start + i] = r.backbone;
            out.sidechain[start + i] = r.sidechain;
        }
        out
    }

    fn from_residues_unchecked(lattice: Lattice, residues: &[SideChainResidue]) -> Self {
        SideChainStructure {
            lattice,
            backbone: residues.iter().map(|r| r.backbone).collect(),
            sidechain: residues.iter().map(|r| r.sidechain).collect(),
        }
    }

    fn transformed(&self, f: impl Fn(Coord) -> Coord) -> Self {
        SideChainStructure {
            lattice: self.lattice.clone(),
            backbone: self.backbone.iter().map(|&c| f(c)).collect(),
            sidechain: self.sidechain.iter().map(|&c| f(c)).collect(),
        }
    }

    fn into_structure(self) -> Structure {
        Structure::SideChain(self)
    }
}

/// Either kind of lattice protein structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Structure {
    Backbone(BackboneStructure),
    SideChain(SideChainStructure),
}

impl Structure {
    pub fn kind(&self) -> ModelKind {
        match self {
            Structure::Backbone(_) => ModelKind::Backbone,
            Structure::SideChain(_) => ModelKind::SideChain,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        match self {
            Structure::Backbone(s) => s.lattice(),
            Structure::SideChain(s) => s.lattice(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Structure::Backbone(s) => s.len(),
            Structure::SideChain(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        match self {
            Structure::Backbone(s) => s.validate(),
            Structure::SideChain(s) => s.validate(),
        }
    }

    pub fn backbone(&self) -> &[Coord] {
        match self {
            Structure::Backbone(s) => s.coords(),
            Structure::SideChain(s) => s.backbone(),
        }
    }

    pub fn sidechain(&self) -> Option<&[Coord]> {
        match self {
            Structure::Backbone(_) => None,
            Structure::SideChain(s) => Some(s.sidechain()),
        }
    }

    /// Applies a lattice symmetry, e.g. for canonicalization.
    pub fn apply_symmetry(&self, t: &AxisTransform) -> Structure {
        match self {
            Structure::Backbone(s) => Structure::Backbone(s.transformed(|c| t.apply(c))),
            Structure::SideChain(s) => Structure::SideChain(s.transformed(|c| t.apply(c))),
        }
    }
}

impl From<BackboneStructure> for Structure {
    fn from(s: BackboneStructure) -> Self {
        Structure::Backbone(s)
    }
}

impl From<SideChainStructure> for Structure {
    fn from(s: SideChainStructure) -> Self {
        Structure::SideChain(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32, z: i32) -> Coord {
        Coord::new(x, y, z)
    }

    #[test]
    fn backbone_validation() {
        let sq = Lattice::square();
        assert!(validate_backbone(&sq, &[c(0, 0, 0), c(1, 0, 0), c(2, 0, 0)]).is_ok());
        assert_eq!(
            validate_backbone(&sq, &[c(0, 0, 0), c(1, 0, 0), c(0, 0, 0)]),
            Err(ValidationError::Clash(Monomer::Backbone(1), Monomer::Backbone(3)))
        );
        assert_eq!(
            validate_backbone(&Lattice::fcc(), &[c(0, 0, 0), c(1, 0, 0)]),
            Err(ValidationError::BrokenChain(1))
        );
        assert_eq!(validate_backbone(&sq, &[]), Err(ValidationError::Empty));
    }

    #[test]
    fn clash_reports_smallest_pair() {
        let sq = Lattice::square();
        // 1=5 and 2=... : walk around a square twice
        let coords = [c(0, 0, 0), c(1, 0, 0), c(1, 1, 0), c(0, 1, 0), c(0, 0, 0), c(1, 0, 0)];
        assert_eq!(
            validate_backbone(&sq, &coords),
            Err(ValidationError::Clash(Monomer::Backbone(1), Monomer::Backbone(5)))
        );
    }

    #[test]
    fn sidechain_validation() {
        let cub = Lattice::cubic();
        let bb = [c(0, 0, 0), c(1, 0, 0)];
        assert!(validate_sidechain(&cub, &bb, &[c(0, 1, 0), c(1, 1, 0)]).is_ok());
        assert_eq!(
            validate_sidechain(&cub, &bb, &[c(1, 0, 0), c(2, 0, 0)]),
            Err(ValidationError::Clash(Monomer::SideChain(1), Monomer::Backbone(2)))
        );
        assert_eq!(
            validate_sidechain(&cub, &bb, &[c(0, 2, 0), c(1, 1, 0)]),
            Err(ValidationError::DetachedSideChain(1))
        );
        assert_eq!(
            validate_sidechain(&cub, &bb, &[c(0, 1, 0)]),
            Err(ValidationError::LengthMismatch { backbone: 2, sidechain: 1 })
        );
    }

    #[test]
    fn error_messages() {
        assert_eq!(ValidationError::BrokenChain(1).to_string(), "broken chain: residue 1 is not adjacent to residue 2");
        assert_eq!(
            ValidationError::Clash(Monomer::SideChain(1), Monomer::Backbone(2)).to_string(),
            "clash: sidechain 1 and backbone 2 occupy the same node"
        );
    }
}
