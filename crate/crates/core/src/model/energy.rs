use thiserror::Error;

use super::potential::ContactPotential;
use super::sequence::Sequence;
use super::structure::{BackboneStructure, Conformation, ModelKind, SideChainResidue, SideChainStructure, Structure};
use crate::lattice::Coord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnergyError {
    #[error("sequence has {sequence} residues but structure has {structure}")]
    LengthMismatch { sequence: usize, structure: usize },
    #[error("residue '{symbol}' at position {position} is not in the potential's alphabet")]
    UnknownSymbol { symbol: char, position: usize },
}

/// A contact potential bound to a specific sequence, with residue symbols
/// resolved to table indices once.
///
/// Backbone structures are scored by backbone–backbone contacts, side-chain
/// structures by side-chain–side-chain contacts only.
#[derive(Clone, Debug)]
pub struct EnergyFunction {
    potential: ContactPotential,
    codes: Vec<usize>,
    exclude_chain_adjacent: bool,
}

impl EnergyFunction {
    pub fn new(sequence: &Sequence, potential: &ContactPotential) -> Result<Self, EnergyError> {
        let codes = sequence
            .symbols()
            .enumerate()
            .map(|(i, c)| potential.index_of(c).ok_or(EnergyError::UnknownSymbol { symbol: c, position: i + 1 }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EnergyFunction { potential: potential.clone(), codes, exclude_chain_adjacent: false })
    }

    /// Skip pairs `(i, i+1)` in the backbone energy. Has no effect on
    /// side-chain energies.
    pub fn exclude_chain_adjacent(mut self, exclude: bool) -> Self {
        self.exclude_chain_adjacent = exclude;
        self
    }

    pub fn excludes_chain_adjacent(&self) -> bool {
        self.exclude_chain_adjacent
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn potential(&self) -> &ContactPotential {
        &self.potential
    }

    #[inline]
    fn weight(&self, i: usize, j: usize, model: ModelKind) -> f64 {
        if model == ModelKind::Backbone && self.exclude_chain_adjacent && i.abs_diff(j) == 1 {
            0.0
        } else {
            self.potential.by_index(self.codes[i], self.codes[j])
        }
    }

    fn check_len(&self, n: usize) -> Result<(), EnergyError> {
        if n == self.codes.len() {
            Ok(())
        } else {
            Err(EnergyError::LengthMismatch { sequence: self.codes.len(), structure: n })
        }
    }

    pub fn evaluate<C: ContactModel>(&self, c: &C) -> Result<f64, EnergyError> {
        self.check_len(c.len())?;
        Ok(self.energy_of(c))
    }

    pub fn evaluate_structure(&self, s: &Structure) -> Result<f64, EnergyError> {
        match s {
            Structure::Backbone(b) => self.evaluate(b),
            Structure::SideChain(sc) => self.evaluate(sc),
        }
    }

    /// Energy without the length check; callers guarantee matching lengths.
    pub(crate) fn energy_of<C: ContactModel>(&self, c: &C) -> f64 {
        debug_assert_eq!(c.len(), self.codes.len());
        let lattice = c.lattice();
        let n = c.len();
        let mut e = 0.0;
        for i in 0..n {
            let pi = c.contact_point(i);
            for j in i + 1..n {
                if lattice.are_neighbors(pi, c.contact_point(j)) {
                    e += self.weight(i, j, C::KIND);
                }
            }
        }
        e
    }

    /// Energy change from replacing residues `start..start + new.len()`
    /// (0-based) of `c` with `new`.
    pub(crate) fn delta_of<C: ContactModel>(&self, c: &C, start: usize, new: &[C::Residue]) -> f64 {
        let lattice = c.lattice();
        let end = start + new.len();
        let old_at = |i: usize| c.contact_point(i);
        let new_at = |i: usize| {
            if (start..end).contains(&i) {
                C::contact_of(new[i - start])
            } else {
                c.contact_point(i)
            }
        };
        let mut delta = 0.0;
        for i in start..end {
            for j in 0..c.len() {
                // pairs inside the interval are visited once
                if (start..end).contains(&j) && j <= i {
                    continue;
                }
                let w = self.weight(i, j, C::KIND);
                if w == 0.0 {
                    continue;
                }
                if lattice.are_neighbors(old_at(i), old_at(j)) {
                    delta -= w;
                }
                if lattice.are_neighbors(new_at(i), new_at(j)) {
                    delta += w;
                }
            }
        }
        delta
    }

    /// Precomputes everything [`delta_of`](Self::delta_of) needs that does
    /// not depend on the replacement residues, for repeated scoring of
    /// moves on one interval.
    pub(crate) fn interval_scorer<C: ContactModel>(&self, c: &C, start: usize, len: usize) -> IntervalScorer {
        let lattice = c.lattice().clone();
        let end = start + len;
        let mut outside = Vec::with_capacity(len);
        let mut old = 0.0;
        for i in start..end {
            let pi = c.contact_point(i);
            let mut row = Vec::new();
            for j in (0..start).chain(end..c.len()) {
                let w = self.weight(i, j, C::KIND);
                if w != 0.0 {
                    let pj = c.contact_point(j);
                    if lattice.are_neighbors(pi, pj) {
                        old += w;
                    }
                    row.push((pj, w));
                }
            }
            outside.push(row);
        }
        let mut inside = Vec::new();
        for i in start..end {
            for j in i + 1..end {
                let w = self.weight(i, j, C::KIND);
                if w != 0.0 {
                    if lattice.are_neighbors(c.contact_point(i), c.contact_point(j)) {
                        old += w;
                    }
                    inside.push((i - start, j - start, w));
                }
            }
        }
        IntervalScorer { lattice, outside, inside, old }
    }
}

/// Energy deltas for replacements of one fixed interval.
pub(crate) struct IntervalScorer {
    lattice: crate::lattice::Lattice,
    outside: Vec<Vec<(Coord, f64)>>,
    inside: Vec<(usize, usize, f64)>,
    old: f64,
}

impl IntervalScorer {
    pub(crate) fn delta<C: ContactModel>(&self, new: &[C::Residue]) -> f64 {
        let mut e = 0.0;
        for (r, row) in new.iter().zip(&self.outside) {
            let p = C::contact_of(*r);
            for &(q, w) in row {
                if self.lattice.are_neighbors(p, q) {
                    e += w;
                }
            }
        }
        for &(a, b, w) in &self.inside {
            if self.lattice.are_neighbors(C::contact_of(new[a]), C::contact_of(new[b])) {
                e += w;
            }
        }
        e - self.old
    }
}

/// A conformation with one contact-carrying point per residue.
pub trait ContactModel: Conformation {
    fn contact_of(r: Self::Residue) -> Coord;

    fn contact_point(&self, i: usize) -> Coord {
        Self::contact_of(self.residue(i))
    }
}

impl ContactModel for BackboneStructure {
    fn contact_of(r: Coord) -> Coord {
        r
    }
}

impl ContactModel for SideChainStructure {
    fn contact_of(r: SideChainResidue) -> Coord {
        r.sidechain
    }
}

/// Σ e(S_i, S_j) over backbone contacts i < j.
pub fn energy_backbone(
    sequence: &Sequence,
    structure: &BackboneStructure,
    potential: &ContactPotential,
    exclude_chain_adjacent: bool,
) -> Result<f64, EnergyError> {
    EnergyFunction::new(sequence, potential)?
        .exclude_chain_adjacent(exclude_chain_adjacent)
        .evaluate(structure)
}

/// Σ e(S_i, S_j) over side-chain contacts i < j; backbone positions play no
/// part.
pub fn energy_sidechain(
    sequence: &Sequence,
    structure: &SideChainStructure,
    potential: &ContactPotential,
) -> Result<f64, EnergyError> {
    EnergyFunction::new(sequence, potential)?.evaluate(structure)
}
