//! Integer lattices, their neighborhood relation and the physical (Å) scaling.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Distance between neighboring lattice nodes after scaling, the average
/// Cα–Cα distance of real proteins.
pub const NEIGHBOR_DISTANCE_ANGSTROM: f64 = 3.8;

/// A lattice node in integer lattice units.
///
/// The derived ordering is lexicographic on `(x, y, z)`, which every
/// enumeration in this crate relies on for reproducibility.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Coord {
    pub const ORIGIN: Coord = Coord { x: 0, y: 0, z: 0 };

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Coord { x, y, z }
    }

    pub fn squared_norm(self) -> i64 {
        let (x, y, z) = (self.x as i64, self.y as i64, self.z as i64);
        x * x + y * y + z * z
    }

    pub fn to_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[i32; 3]> for Coord {
    fn from(a: [i32; 3]) -> Self {
        Coord::new(a[0], a[1], a[2])
    }
}

impl From<(i32, i32, i32)> for Coord {
    fn from((x, y, z): (i32, i32, i32)) -> Self {
        Coord::new(x, y, z)
    }
}

impl Add for Coord {
    type Output = Coord;
    fn add(self, o: Coord) -> Coord {
        Coord::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Coord {
    type Output = Coord;
    fn sub(self, o: Coord) -> Coord {
        Coord::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Coord {
    type Output = Coord;
    fn neg(self) -> Coord {
        Coord::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("lattice '{0}' is not supported (valid: SQ, CUB, FCC)")]
    NotSupported(String),
    #[error("neighbor vector set is empty")]
    Empty,
    #[error("zero vector is not allowed as a neighbor vector")]
    ZeroVector,
    #[error("neighbor vectors are not closed under negation: -{0} missing")]
    NotSymmetric(Coord),
    #[error("neighbor vectors differ in length: {0} vs {1}")]
    UnequalLength(Coord, Coord),
}

/// The three lattices shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    /// 2D square lattice embedded at z = 0.
    Square,
    /// Simple cubic lattice.
    Cubic,
    /// Face-centered cubic lattice.
    FaceCenteredCubic,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "SQ",
            LatticeKind::Cubic => "CUB",
            LatticeKind::FaceCenteredCubic => "FCC",
        }
    }

    fn vectors(self) -> Vec<Coord> {
        let half: &[(i32, i32, i32)] = match self {
            LatticeKind::Square => &[(1, 0, 0), (0, 1, 0)],
            LatticeKind::Cubic => &[(1, 0, 0), (0, 1, 0), (0, 0, 1)],
            LatticeKind::FaceCenteredCubic => &[
                (1, 1, 0),
                (1, 0, 1),
                (0, 1, 1),
                (1, -1, 0),
                (1, 0, -1),
                (0, 1, -1),
            ],
        };
        half.iter()
            .flat_map(|&v| {
                let v = Coord::from(v);
                [v, -v]
            })
            .collect()
    }
}

impl FromStr for LatticeKind {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SQ" => Ok(LatticeKind::Square),
            "CUB" => Ok(LatticeKind::Cubic),
            "FCC" => Ok(LatticeKind::FaceCenteredCubic),
            _ => Err(LatticeError::NotSupported(s.trim().to_string())),
        }
    }
}

#[derive(Debug)]
struct LatticeInner {
    name: String,
    vectors: Vec<Coord>,
    unit_length: f64,
    angstrom_per_unit: f64,
    // dense membership table over [-reach, reach]^3
    reach: i32,
    table: Vec<bool>,
}

impl LatticeInner {
    fn slot(&self, d: Coord) -> Option<usize> {
        let r = self.reach;
        if d.x.abs() > r || d.y.abs() > r || d.z.abs() > r {
            return None;
        }
        let w = (2 * r + 1) as usize;
        Some((((d.x + r) as usize * w) + (d.y + r) as usize) * w + (d.z + r) as usize)
    }
}

/// A named integer lattice given by its set of neighbor vectors.
///
/// Cheap to clone; the vector table is shared.
#[derive(Clone, Debug)]
pub struct Lattice {
    inner: Arc<LatticeInner>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.name == other.inner.name && self.inner.vectors == other.inner.vectors)
    }
}

impl Eq for Lattice {}

impl std::hash::Hash for Lattice {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.inner.name.hash(state);
        self.inner.vectors.hash(state);
    }
}

impl Lattice {
    /// Builds a lattice from an arbitrary neighbor vector set, checking that
    /// the relation it induces is symmetric and that all steps have equal
    /// length.
    pub fn new(name: impl Into<String>, vectors: impl IntoIterator<Item = Coord>) -> Result<Self, LatticeError> {
        let set: BTreeSet<Coord> = vectors.into_iter().collect();
        let first = *set.iter().next().ok_or(LatticeError::Empty)?;
        for &v in &set {
            if v == Coord::ORIGIN {
                return Err(LatticeError::ZeroVector);
            }
            if !set.contains(&-v) {
                return Err(LatticeError::NotSymmetric(v));
            }
            if v.squared_norm() != first.squared_norm() {
                return Err(LatticeError::UnequalLength(first, v));
            }
        }
        let unit_length = (first.squared_norm() as f64).sqrt();
        let reach = set.iter().map(|v| v.x.abs().max(v.y.abs()).max(v.z.abs())).max().unwrap_or(0);
        let w = (2 * reach + 1) as usize;
        let mut inner = LatticeInner {
            name: name.into(),
            vectors: set.into_iter().collect(),
            unit_length,
            angstrom_per_unit: NEIGHBOR_DISTANCE_ANGSTROM / unit_length,
            reach,
            table: vec![false; w * w * w],
        };
        for v in inner.vectors.clone() {
            let slot = inner.slot(v).expect("within reach");
            inner.table[slot] = true;
        }
        Ok(Lattice { inner: Arc::new(inner) })
    }

    pub fn from_kind(kind: LatticeKind) -> Self {
        Lattice::new(kind.name(), kind.vectors()).expect("built-in lattice tables are well formed")
    }

    /// Looks up one of the built-in lattices by name (case-insensitive).
    pub fn from_name(name: &str) -> Result<Self, LatticeError> {
        Ok(Lattice::from_kind(name.parse()?))
    }

    pub fn square() -> Self {
        Lattice::from_kind(LatticeKind::Square)
    }

    pub fn cubic() -> Self {
        Lattice::from_kind(LatticeKind::Cubic)
    }

    pub fn fcc() -> Self {
        Lattice::from_kind(LatticeKind::FaceCenteredCubic)
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    /// Neighbor vectors in lexicographic order.
    pub fn neighbor_vectors(&self) -> &[Coord] {
        &self.inner.vectors
    }

    pub fn coordination(&self) -> usize {
        self.inner.vectors.len()
    }

    pub fn unit_length(&self) -> f64 {
        self.inner.unit_length
    }

    pub fn angstrom_per_unit(&self) -> f64 {
        self.inner.angstrom_per_unit
    }

    pub fn are_neighbors(&self, p: Coord, q: Coord) -> bool {
        self.inner.slot(q - p).is_some_and(|i| self.inner.table[i])
    }

    /// All lattice neighbors of `p`, lexicographically ordered.
    pub fn neighbors_of(&self, p: Coord) -> impl Iterator<Item = Coord> + '_ {
        // translation preserves lexicographic order
        self.inner.vectors.iter().map(move |&v| p + v)
    }

    pub fn to_angstrom(&self, p: Coord) -> [f64; 3] {
        let s = self.inner.angstrom_per_unit;
        [p.x as f64 * s, p.y as f64 * s, p.z as f64 * s]
    }

    /// Every node reachable from `center` in at most `radius` lattice steps,
    /// sorted.
    pub fn ball(&self, center: Coord, radius: usize) -> Vec<Coord> {
        self.ball_around(std::iter::once(center), radius)
    }

    /// Union of the step-balls of `radius` around each of `centers`, sorted.
    pub fn ball_around(&self, centers: impl IntoIterator<Item = Coord>, radius: usize) -> Vec<Coord> {
        let mut seen: BTreeSet<Coord> = BTreeSet::new();
        let mut queue = VecDeque::new();
        for c in centers {
            if seen.insert(c) {
                queue.push_back((c, 0usize));
            }
        }
        while let Some((p, d)) = queue.pop_front() {
            if d == radius {
                continue;
            }
            for q in self.neighbors_of(p) {
                if seen.insert(q) {
                    queue.push_back((q, d + 1));
                }
            }
        }
        seen.into_iter().collect()
    }

    /// The signed axis permutations that map the neighbor vector set onto
    /// itself. All 48 for CUB and FCC; the 16 that fix the z axis sign
    /// pattern for SQ are a subset.
    pub fn symmetries(&self) -> Vec<AxisTransform> {
        AxisTransform::all()
            .into_iter()
            .filter(|t| {
                self.inner
                    .vectors
                    .iter()
                    .all(|&v| self.inner.vectors.binary_search(&t.apply(v)).is_ok())
            })
            .collect()
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.inner.name)
    }
}

/// A signed permutation of the three axes: an element of the 48-element
/// cubic point group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AxisTransform {
    perm: [usize; 3],
    sign: [i32; 3],
}

impl AxisTransform {
    pub const IDENTITY: AxisTransform = AxisTransform { perm: [0, 1, 2], sign: [1, 1, 1] };

    pub fn all() -> Vec<AxisTransform> {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(48);
        for perm in PERMS {
            for bits in 0..8 {
                let sign = [
                    if bits & 1 == 0 { 1 } else { -1 },
                    if bits & 2 == 0 { 1 } else { -1 },
                    if bits & 4 == 0 { 1 } else { -1 },
                ];
                out.push(AxisTransform { perm, sign });
            }
        }
        out
    }

    pub fn apply(&self, c: Coord) -> Coord {
        let a = c.to_array();
        Coord::new(
            self.sign[0] * a[self.perm[0]],
            self.sign[1] * a[self.perm[1]],
            self.sign[2] * a[self.perm[2]],
        )
    }

    /// +1 for proper rotations, -1 for improper ones.
    pub fn determinant(&self) -> i32 {
        let parity = match self.perm {
            [0, 1, 2] | [1, 2, 0] | [2, 0, 1] => 1,
            _ => -1,
        };
        parity * self.sign.iter().product::<i32>()
    }
}
