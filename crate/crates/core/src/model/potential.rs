use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

/// Entries `e(a,b)` and `e(b,a)` may differ by at most this much in a
/// loaded matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not symmetric: e({a},{b}) = {ab} but e({b},{a}) = {ba}")]
    Asymmetric { a: char, b: char, ab: f64, ba: f64 },
    #[error("duplicate alphabet symbol '{0}'")]
    DuplicateSymbol(char),
    #[error("alphabet entry '{0}' is not a single-letter symbol")]
    UnknownSymbol(String),
    #[error("expected a {expected}x{expected} table, got {rows} rows")]
    Shape { expected: usize, rows: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric pairwise contact energies over a symbol alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPotential {
    alphabet: Vec<char>,
    table: Vec<f64>,
    lookup: [Option<u8>; 128],
}

impl ContactPotential {
    pub fn new(alphabet: Vec<char>, rows: Vec<Vec<f64>>) -> Result<Self, PotentialError> {
        let k = alphabet.len();
        let mut lookup = [None; 128];
        for (i, &c) in alphabet.iter().enumerate() {
            if !c.is_ascii_alphanumeric() {
                return Err(PotentialError::UnknownSymbol(c.to_string()));
            }
            let slot = &mut lookup[c as usize];
            if slot.is_some() {
                return Err(PotentialError::DuplicateSymbol(c));
            }
            *slot = Some(i as u8);
        }
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(PotentialError::Shape { expected: k, rows: rows.len() });
        }
        let mut table = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                let (ab, ba) = (rows[i][j], rows[j][i]);
                if (ab - ba).abs() > SYMMETRY_TOLERANCE {
                    return Err(PotentialError::Asymmetric { a: alphabet[i], b: alphabet[j], ab, ba });
                }
                table[i * k + j] = if ab == ba { ab } else { 0.5 * (ab + ba) };
            }
        }
        Ok(ContactPotential { alphabet, table, lookup })
    }

    /// The HP model: -1 for an H–H contact, 0 otherwise.
    pub fn hp() -> Self {
        ContactPotential::new(vec!['H', 'P'], vec![vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap()
    }

    pub fn zero(alphabet: impl IntoIterator<Item = char>) -> Self {
        let alphabet: Vec<char> = alphabet.into_iter().collect();
        let k = alphabet.len();
        ContactPotential::new(alphabet, vec![vec![0.0; k]; k]).expect("zero table is symmetric")
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn index_of(&self, symbol: char) -> Option<usize> {
        if symbol.is_ascii() {
            self.lookup[symbol as usize].map(usize::from)
        } else {
            None
        }
    }

    pub fn energy(&self, a: char, b: char) -> Option<f64> {
        Some(self.by_index(self.index_of(a)?, self.index_of(b)?))
    }

    #[inline]
    pub fn by_index(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.alphabet.len() + j]
    }

    /// Reads the whitespace-separated matrix format: a header line of
    /// symbols followed by one row per symbol. `#` lines are comments.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, PotentialError> {
        let mut header: Option<Vec<char>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            match &header {
                None => {
                    let mut symbols = Vec::new();
                    for tok in text.split_whitespace() {
                        let mut chars = tok.chars();
                        match (chars.next(), chars.next()) {
                            (Some(c), None) => symbols.push(c.to_ascii_uppercase()),
                            _ => return Err(PotentialError::UnknownSymbol(tok.to_string())),
                        }
                    }
                    header = Some(symbols);
                }
                Some(h) => {
                    if rows.len() == h.len() {
                        return Err(PotentialError::Parse {
                            line: lineno,
                            message: format!("unexpected extra row (alphabet has {} symbols)", h.len()),
                        });
                    }
                    let row = text
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| PotentialError::Parse { line: lineno, message: e.to_string() })?;
                    if row.len() != h.len() {
                        return Err(PotentialError::Parse {
                            line: lineno,
                            message: format!("expected {} values, found {}", h.len(), row.len()),
                        });
                    }
                    rows.push(row);
                }
            }
        }
        let header = header.ok_or(PotentialError::Parse { line: 0, message: "missing alphabet header".into() })?;
        ContactPotential::new(header, rows)
    }

    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        ContactPotential::from_reader(text.as_bytes())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.alphabet.iter().map(char::to_string).collect();
        out.push_str(&header.join(" "));
        out.push('\n');
        let k = self.alphabet.len();
        for i in 0..k {
            let row: Vec<String> = (0..k).map(|j| format!("{}", self.by_index(i, j))).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}
