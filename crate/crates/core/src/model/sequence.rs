use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The 20 proteinogenic amino acids, one-letter codes.
pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Residues treated as hydrophobic by [`HpMapping::default`].
pub const DEFAULT_HYDROPHOBIC: &str = "ACFILMVWY";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    AminoAcid,
    Hp,
}

impl Alphabet {
    pub fn symbols(self) -> &'static str {
        match self {
            Alphabet::AminoAcid => AMINO_ACIDS,
            Alphabet::Hp => "HP",
        }
    }

    pub fn contains(self, c: char) -> bool {
        self.symbols().contains(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("sequence is empty")]
    Empty,
    #[error("symbol '{symbol}' at position {position} is not in the {alphabet:?} alphabet")]
    InvalidSymbol { symbol: char, position: usize, alphabet: Alphabet },
    #[error("residue '{symbol}' at position {position} has no H/P assignment")]
    Unmapped { symbol: char, position: usize },
    #[error("H/P mapping is missing amino acid '{0}'")]
    IncompleteMapping(char),
    #[error("H/P mapping assigns '{value}' to '{symbol}' (expected H or P)")]
    InvalidClass { symbol: char, value: char },
}

/// A protein sequence over a declared alphabet. Never empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequence {
    alphabet: Alphabet,
    residues: String,
}

impl Sequence {
    pub fn new(residues: &str, alphabet: Alphabet) -> Result<Self, SequenceError> {
        let residues = residues.trim().to_ascii_uppercase();
        if residues.is_empty() {
            return Err(SequenceError::Empty);
        }
        if let Some((i, c)) = residues.chars().enumerate().find(|&(_, c)| !alphabet.contains(c)) {
            return Err(SequenceError::InvalidSymbol { symbol: c, position: i + 1, alphabet });
        }
        Ok(Sequence { alphabet, residues })
    }

    /// Parses a sequence, choosing the H/P alphabet when every symbol is
    /// `H` or `P` and the amino-acid alphabet otherwise.
    pub fn infer(residues: &str) -> Result<Self, SequenceError> {
        let upper = residues.trim().to_ascii_uppercase();
        if !upper.is_empty() && upper.chars().all(|c| c == 'H' || c == 'P') {
            Sequence::new(&upper, Alphabet::Hp)
        } else {
            Sequence::new(&upper, Alphabet::AminoAcid)
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_str(&self) -> &str {
        &self.residues
    }

    pub fn symbols(&self) -> impl Iterator<Item = char> + '_ {
        self.residues.chars()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.residues)
    }
}

impl FromStr for Sequence {
    type Err = SequenceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sequence::infer(s)
    }
}

/// Assignment of every amino acid to the hydrophobic (`H`) or polar (`P`)
/// class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HpMapping {
    classes: BTreeMap<char, char>,
}

impl Default for HpMapping {
    fn default() -> Self {
        HpMapping::from_hydrophobic(DEFAULT_HYDROPHOBIC.chars())
    }
}

impl HpMapping {
    /// Builds a mapping from an explicit table, which must cover all 20
    /// amino acids with values `H` or `P`.
    pub fn new(classes: BTreeMap<char, char>) -> Result<Self, SequenceError> {
        for aa in AMINO_ACIDS.chars() {
            match classes.get(&aa) {
                None => return Err(SequenceError::IncompleteMapping(aa)),
                Some(&v) if v != 'H' && v != 'P' => {
                    return Err(SequenceError::InvalidClass { symbol: aa, value: v })
                }
                _ => {}
            }
        }
        Ok(HpMapping { classes })
    }

    /// Every residue in `hydrophobic` maps to `H`, everything else to `P`.
    pub fn from_hydrophobic(hydrophobic: impl IntoIterator<Item = char>) -> Self {
        let h: Vec<char> = hydrophobic.into_iter().map(|c| c.to_ascii_uppercase()).collect();
        let classes = AMINO_ACIDS
            .chars()
            .map(|aa| (aa, if h.contains(&aa) { 'H' } else { 'P' }))
            .collect();
        HpMapping { classes }
    }

    pub fn all_hydrophobic() -> Self {
        HpMapping::from_hydrophobic(AMINO_ACIDS.chars())
    }

    pub fn class_of(&self, aa: char) -> Option<char> {
        self.classes.get(&aa).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.classes.iter().map(|(&a, &c)| (a, c))
    }

    pub fn translate(&self, seq: &Sequence) -> Result<Sequence, SequenceError> {
        let mut out = String::with_capacity(seq.len());
        for (i, c) in seq.symbols().enumerate() {
            match self.class_of(c) {
                Some(class) => out.push(class),
                None => return Err(SequenceError::Unmapped { symbol: c, position: i + 1 }),
            }
        }
        Sequence::new(&out, Alphabet::Hp)
    }
}
