//! Text formats: lattice structure files, H/P mapping files, and a minimal
//! PDB reader yielding per-residue Cα and side-chain centroid positions.
//!
//! Structure files are line oriented with `#` comments:
//!
//! ```text
//! lattice FCC
//! model sidechain
//! sequence HPPH
//! 1 0 0 0 1 1 0
//! 2 ...
//! ```
//!
//! Each record is `i bx by bz` (backbone model) or `i bx by bz sx sy sz`
//! (side-chain model) with 1-based `i` in order.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::lattice::{Coord, Lattice, LatticeError};
use crate::model::{
    BackboneStructure, HpMapping, ModelKind, Sequence, SequenceError, SideChainStructure, Structure, ValidationError,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("invalid structure: {0}")]
    Invalid(#[from] ValidationError),
    #[error("chain '{0}' not found")]
    ChainNotFound(char),
    #[error("no ATOM records")]
    NoAtoms,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(reader: impl BufRead) -> Result<Vec<(usize, String)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.split('#').next().unwrap_or("").trim();
        if !text.is_empty() {
            out.push((i + 1, text.to_string()));
        }
    }
    Ok(out)
}

pub fn format_structure(structure: &Structure, sequence: &Sequence) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lattice {}", structure.lattice().name());
    let _ = writeln!(out, "model {}", structure.kind());
    let _ = writeln!(out, "sequence {}", sequence);
    let bb = structure.backbone();
    for (i, b) in bb.iter().enumerate() {
        let _ = write!(out, "{} {} {} {}", i + 1, b.x, b.y, b.z);
        if let Some(sc) = structure.sidechain() {
            let s = sc[i];
            let _ = write!(out, " {} {} {}", s.x, s.y, s.z);
        }
        out.push('\n');
    }
    out
}

pub fn write_structure(mut w: impl Write, structure: &Structure, sequence: &Sequence) -> std::io::Result<()> {
    w.write_all(format_structure(structure, sequence).as_bytes())
}

fn header<'a>(lines: &'a [(usize, String)], idx: usize, key: &str) -> Result<(usize, &'a str), IoError> {
    let (no, text) = lines.get(idx).ok_or_else(|| parse_err(lines.last().map_or(0, |l| l.0), format!("missing '{key}' line")))?;
    let rest = text
        .strip_prefix(key)
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| parse_err(*no, format!("expected '{key} <value>'")))?;
    Ok((*no, rest.trim()))
}

/// Reads a structure file and validates the structure.
pub fn read_structure(reader: impl BufRead) -> Result<(Structure, Sequence), IoError> {
    let lines = content_lines(reader)?;
    let (_, lattice_name) = header(&lines, 0, "lattice")?;
    let lattice = Lattice::from_name(lattice_name)?;
    let (model_line, model_name) = header(&lines, 1, "model")?;
    let kind: ModelKind = model_name.parse().map_err(|_| parse_err(model_line, format!("unknown model '{model_name}'")))?;
    let (seq_line, seq_text) = header(&lines, 2, "sequence")?;
    let sequence = Sequence::infer(seq_text).map_err(|e| parse_err(seq_line, e.to_string()))?;
    let width = match kind {
        ModelKind::Backbone => 4,
        ModelKind::SideChain => 7,
    };
    let records = &lines[3..];
    let mut backbone = Vec::with_capacity(records.len());
    let mut sidechain = Vec::new();
    for (k, (no, text)) in records.iter().enumerate() {
        let fields = text.split_whitespace().map(str::parse::<i64>).collect::<Result<Vec<_>, _>>();
        let fields = fields.map_err(|e| parse_err(*no, format!("bad integer: {e}")))?;
        if fields.len() != width {
            return Err(parse_err(*no, format!("expected {width} fields, found {}", fields.len())));
        }
        if fields[0] != k as i64 + 1 {
            return Err(parse_err(*no, format!("expected residue index {}, found {}", k + 1, fields[0])));
        }
        let coord = |at: usize| -> Result<Coord, IoError> {
            let v = |x: i64| i32::try_from(x).map_err(|_| parse_err(*no, "coordinate out of range"));
            Ok(Coord::new(v(fields[at])?, v(fields[at + 1])?, v(fields[at + 2])?))
        };
        backbone.push(coord(1)?);
        if kind == ModelKind::SideChain {
            sidechain.push(coord(4)?);
        }
    }
    if backbone.len() != sequence.len() {
        let line = lines.last().map_or(seq_line, |l| l.0);
        return Err(parse_err(
            line,
            format!("sequence has {} residues but {} records follow", sequence.len(), backbone.len()),
        ));
    }
    let structure = match kind {
        ModelKind::Backbone => Structure::Backbone(BackboneStructure::new(lattice, backbone)?),
        ModelKind::SideChain => Structure::SideChain(SideChainStructure::new(lattice, backbone, sidechain)?),
    };
    Ok((structure, sequence))
}

pub fn parse_structure(text: &str) -> Result<(Structure, Sequence), IoError> {
    read_structure(text.as_bytes())
}

/// Reads an H/P mapping from `X = H` / `X = P` lines; the file must cover
/// all twenty amino acids.
pub fn read_hp_mapping(reader: impl BufRead) -> Result<HpMapping, IoError> {
    let mut classes = BTreeMap::new();
    for (no, text) in content_lines(reader)? {
        let (aa, class) = text.split_once('=').ok_or_else(|| parse_err(no, "expected '<amino acid> = H|P'"))?;
        let single = |s: &str| {
            let s = s.trim();
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => Ok(c.to_ascii_uppercase()),
                _ => Err(parse_err(no, format!("expected a single letter, found '{s}'"))),
            }
        };
        let (aa, class) = (single(aa)?, single(class)?);
        if classes.insert(aa, class).is_some() {
            return Err(parse_err(no, format!("amino acid '{aa}' mapped twice")));
        }
    }
    Ok(HpMapping::new(classes)?)
}

/// One residue of a PDB chain, coordinates in Å.
#[derive(Clone, Debug, PartialEq)]
pub struct PdbResiduePoints {
    pub code: char,
    pub ca: [f64; 3],
    pub centroid: [f64; 3],
}

/// Residues of one PDB chain plus counts of residues that were skipped or
/// incomplete.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PdbChain {
    pub residues: Vec<PdbResiduePoints>,
    /// Residues skipped because they carry no Cα.
    pub missing_ca: usize,
    /// Non-glycine residues without any side-chain heavy atom; their
    /// centroid falls back to the Cα.
    pub missing_sidechain: usize,
}

const BACKBONE_ATOMS: [&str; 5] = ["N", "CA", "C", "O", "OXT"];

fn three_to_one(name: &str) -> char {
    match name {
        "ALA" => 'A',
        "ARG" => 'R',
        "ASN" => 'N',
        "ASP" => 'D',
        "CYS" => 'C',
        "GLN" => 'Q',
        "GLU" => 'E',
        "GLY" => 'G',
        "HIS" => 'H',
        "ILE" => 'I',
        "LEU" => 'L',
        "LYS" => 'K',
        "MET" => 'M',
        "PHE" => 'F',
        "PRO" => 'P',
        "SER" => 'S',
        "THR" => 'T',
        "TRP" => 'W',
        "TYR" => 'Y',
        "VAL" => 'V',
        "MSE" => 'M',
        _ => 'X',
    }
}

fn column(line: &str, from: usize, to: usize) -> &str {
    line.get(from.min(line.len())..to.min(line.len())).unwrap_or("").trim()
}

fn is_hydrogen(name: &str, element: &str) -> bool {
    if !element.is_empty() {
        return element.eq_ignore_ascii_case("H") || element.eq_ignore_ascii_case("D");
    }
    name.trim_start_matches(|c: char| c.is_ascii_digit()).starts_with(['H', 'D'])
}

#[derive(Default)]
struct ResidueAtoms {
    name: String,
    ca: Option<[f64; 3]>,
    side: Vec<[f64; 3]>,
}

/// Extracts Cα and side-chain centroids of `chain` from the first model of
/// a PDB file. Only `ATOM` records with blank or `A` alternate location
/// and no insertion code are used.
pub fn read_pdb_points(reader: impl BufRead, chain: char) -> Result<PdbChain, IoError> {
    let mut any_atom = false;
    let mut chain_seen = false;
    let mut order: Vec<i32> = Vec::new();
    let mut atoms: HashMap<i32, ResidueAtoms> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") {
            continue;
        }
        any_atom = true;
        if line.chars().nth(21) != Some(chain) {
            continue;
        }
        chain_seen = true;
        let alt = column(&line, 16, 17);
        if !(alt.is_empty() || alt == "A") || !column(&line, 26, 27).is_empty() {
            continue;
        }
        let name = column(&line, 12, 16);
        let res_name = column(&line, 17, 20);
        let seq: i32 = column(&line, 22, 26).parse().map_err(|_| parse_err(no, "bad residue number"))?;
        let coord = |a: usize, b: usize| -> Result<f64, IoError> {
            column(&line, a, b).parse().map_err(|_| parse_err(no, "bad coordinate"))
        };
        let p = [coord(30, 38)?, coord(38, 46)?, coord(46, 54)?];
        let element = column(&line, 76, 78);
        let entry = atoms.entry(seq).or_insert_with(|| {
            order.push(seq);
            ResidueAtoms { name: res_name.to_string(), ..Default::default() }
        });
        if name == "CA" {
            entry.ca.get_or_insert(p);
        } else if !BACKBONE_ATOMS.contains(&name) && !is_hydrogen(name, element) {
            entry.side.push(p);
        }
    }
    if !any_atom {
        return Err(IoError::NoAtoms);
    }
    if !chain_seen {
        return Err(IoError::ChainNotFound(chain));
    }
    let mut out = PdbChain::default();
    for seq in order {
        let r = &atoms[&seq];
        let Some(ca) = r.ca else {
            out.missing_ca += 1;
            continue;
        };
        let code = three_to_one(&r.name);
        let centroid = if r.side.is_empty() {
            if r.name != "GLY" {
                out.missing_sidechain += 1;
            }
            ca
        } else {
            let k = r.side.len() as f64;
            let mut c = [0.0; 3];
            for p in &r.side {
                for d in 0..3 {
                    c[d] += p[d];
                }
            }
            c.map(|v| v / k)
        };
        out.residues.push(PdbResiduePoints { code, ca, centroid });
    }
    Ok(out)
}
