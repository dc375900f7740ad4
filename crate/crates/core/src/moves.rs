//! Strict k-local moves: the neighborhood of a structure made of all valid
//! structures that differ from it only inside one run of at most k
//! consecutive residues.
//!
//! Each (interval length, start) pair is encoded as a constraint problem
//! whose solutions are exactly the replacement placements for that
//! interval. Strictness (both interval ends change) makes the interval of a
//! neighbor unique, so the union over intervals never repeats a structure.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::csp::{Assignment, Constraint, Domain, Problem, Solutions, VarId};
use crate::lattice::Coord;
use crate::model::{
    BackboneStructure, Conformation, ContactModel, SideChainResidue, SideChainStructure, ValidationError,
};

/// A run of `len` residues starting at 1-based position `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveInterval {
    pub start: usize,
    pub len: usize,
}

impl MoveInterval {
    pub fn new(start: usize, len: usize) -> Self {
        MoveInterval { start, len }
    }

    /// 0-based index of the first residue.
    pub fn first(&self) -> usize {
        self.start - 1
    }

    /// 0-based index one past the last residue.
    pub fn end(&self) -> usize {
        self.start - 1 + self.len
    }

    pub fn check(&self, n: usize) -> Result<(), MoveError> {
        if self.start >= 1 && self.len >= 1 && self.start + self.len - 1 <= n {
            Ok(())
        } else {
            Err(MoveError::IntervalOutOfRange { start: self.start, len: self.len, n })
        }
    }
}

impl fmt::Display for MoveInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k'={} s={}", self.len, self.start)
    }
}

/// Replacement placements for the residues of one interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MoveSolution<R> {
    pub interval: MoveInterval,
    pub residues: Vec<R>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("interval start {start} length {len} does not fit a chain of {n} residues")]
    IntervalOutOfRange { start: usize, len: usize, n: usize },
    #[error("move does not apply to this structure: {0}")]
    Stale(String),
    #[error("move length k must be at least 1")]
    InvalidK,
}

impl From<ValidationError> for MoveError {
    fn from(e: ValidationError) -> Self {
        MoveError::Stale(e.to_string())
    }
}

/// Structures for which strict k-local move problems can be built.
pub trait LocalMoves: ContactModel {
    /// Backbone node of a residue (the point chained to its neighbors).
    fn backbone_of(r: Self::Residue) -> Coord;

    /// The constraint problem whose solutions are the strict moves on `iv`.
    fn build_move_csp(&self, iv: MoveInterval) -> Result<Problem, MoveError>;

    /// Turns a solution of [`LocalMoves::build_move_csp`] into residues.
    fn decode(&self, iv: MoveInterval, a: &Assignment) -> Vec<Self::Residue>;
}

/// Finite stand-in for "the whole lattice minus the fixed monomers": nodes
/// within `len + 1` steps of each interval anchor (intersected when both
/// ends are anchored). A whole-chain interval has no anchor, so the union
/// of `len`-step balls around its current monomers is used instead.
pub fn candidate_domain<C: LocalMoves>(c: &C, iv: MoveInterval) -> Result<Domain, MoveError> {
    let n = c.len();
    iv.check(n)?;
    let lattice = c.lattice();
    let left = (iv.first() > 0).then(|| C::backbone_of(c.residue(iv.first() - 1)));
    let right = (iv.end() < n).then(|| C::backbone_of(c.residue(iv.end())));
    let radius = iv.len + 1;
    let mut ball = match (left, right) {
        (Some(l), Some(r)) => {
            let a = lattice.ball(l, radius);
            let b = lattice.ball(r, radius);
            a.into_iter().filter(|p| b.binary_search(p).is_ok()).collect()
        }
        (Some(a), None) | (None, Some(a)) => lattice.ball(a, radius),
        (None, None) => {
            let centers: Vec<Coord> = (iv.first()..iv.end()).flat_map(|i| C::residue_points(c.residue(i))).collect();
            lattice.ball_around(centers, iv.len)
        }
    };
    let mut fixed: Vec<Coord> = (0..iv.first())
        .chain(iv.end()..n)
        .flat_map(|i| C::residue_points(c.residue(i)))
        .collect();
    fixed.sort_unstable();
    ball.retain(|p| fixed.binary_search(p).is_err());
    Ok(Domain::from_sorted(ball))
}

impl LocalMoves for BackboneStructure {
    fn backbone_of(r: Coord) -> Coord {
        r
    }

    fn build_move_csp(&self, iv: MoveInterval) -> Result<Problem, MoveError> {
        let domain = candidate_domain(self, iv)?;
        let coords = self.coords();
        let mut p = Problem::new(self.lattice().clone());
        let xs: Vec<VarId> = (0..iv.len).map(|_| p.add_var(domain.clone())).collect();
        p.post(Constraint::AllDifferent(xs.clone()));
        for w in xs.windows(2) {
            p.post(Constraint::Neigh(w[0], w[1]));
        }
        let (first, last) = (xs[0], xs[iv.len - 1]);
        if iv.first() > 0 {
            p.post(Constraint::NeighAnchor(first, coords[iv.first() - 1]));
        }
        if iv.end() < coords.len() {
            p.post(Constraint::NeighAnchor(last, coords[iv.end()]));
        }
        p.post(Constraint::NotEqualAnchor(first, coords[iv.first()]));
        p.post(Constraint::NotEqualAnchor(last, coords[iv.end() - 1]));
        Ok(p)
    }

    fn decode(&self, _iv: MoveInterval, a: &Assignment) -> Vec<Coord> {
        a.values.clone()
    }
}

impl LocalMoves for SideChainStructure {
    fn backbone_of(r: SideChainResidue) -> Coord {
        r.backbone
    }

    /// Variables `0..len` are the backbone nodes, `len..2*len` the side
    /// chains of the interval residues.
    fn build_move_csp(&self, iv: MoveInterval) -> Result<Problem, MoveError> {
        let domain = candidate_domain(self, iv)?;
        let (bb, sc) = (self.backbone(), self.sidechain());
        let mut p = Problem::new(self.lattice().clone());
        let xb: Vec<VarId> = (0..iv.len).map(|_| p.add_var(domain.clone())).collect();
        let xs: Vec<VarId> = (0..iv.len).map(|_| p.add_var(domain.clone())).collect();
        p.post(Constraint::AllDifferent(xb.iter().chain(&xs).copied().collect()));
        for w in xb.windows(2) {
            p.post(Constraint::Neigh(w[0], w[1]));
        }
        for (&b, &s) in xb.iter().zip(&xs) {
            p.post(Constraint::Neigh(b, s));
        }
        let last = iv.len - 1;
        if iv.first() > 0 {
            p.post(Constraint::NeighAnchor(xb[0], bb[iv.first() - 1]));
        }
        if iv.end() < bb.len() {
            p.post(Constraint::NeighAnchor(xb[last], bb[iv.end()]));
        }
        let (f, e) = (iv.first(), iv.end() - 1);
        p.post(Constraint::OrNotEqualAnchors(vec![(xb[0], bb[f]), (xs[0], sc[f])]));
        p.post(Constraint::OrNotEqualAnchors(vec![(xb[last], bb[e]), (xs[last], sc[e])]));
        Ok(p)
    }

    fn decode(&self, iv: MoveInterval, a: &Assignment) -> Vec<SideChainResidue> {
        (0..iv.len)
            .map(|i| SideChainResidue { backbone: a.values[i], sidechain: a.values[iv.len + i] })
            .collect()
    }
}

pub fn build_backbone_move_csp(c: &BackboneStructure, iv: MoveInterval) -> Result<Problem, MoveError> {
    c.build_move_csp(iv)
}

pub fn build_sidechain_move_csp(c: &SideChainStructure, iv: MoveInterval) -> Result<Problem, MoveError> {
    c.build_move_csp(iv)
}

/// All (length, start) intervals for a chain of `n` residues and maximal
/// length `k`, length-major.
pub fn move_intervals(n: usize, k: usize) -> Vec<MoveInterval> {
    (1..=k.min(n)).flat_map(|len| (1..=n - len + 1).map(move |s| MoveInterval::new(s, len))).collect()
}

/// Streams the strict moves of a structure over a list of intervals.
pub struct MoveStream<'a, C: LocalMoves> {
    source: &'a C,
    intervals: Vec<MoveInterval>,
    next_interval: usize,
    current: Option<(MoveInterval, Solutions)>,
}

impl<'a, C: LocalMoves> MoveStream<'a, C> {
    /// Moves restricted to `intervals`, which must fit the structure. Used
    /// to split one neighborhood across workers.
    pub fn over(source: &'a C, intervals: Vec<MoveInterval>) -> Self {
        MoveStream { source, intervals, next_interval: 0, current: None }
    }

    pub fn new(source: &'a C, k: usize) -> Self {
        MoveStream::over(source, move_intervals(source.len(), k))
    }
}

impl<C: LocalMoves> Iterator for MoveStream<'_, C> {
    type Item = MoveSolution<C::Residue>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some((iv, sols)) = &mut self.current {
                if let Some(a) = sols.next() {
                    return Some(MoveSolution { interval: *iv, residues: self.source.decode(*iv, &a) });
                }
                self.current = None;
            }
            let iv = *self.intervals.get(self.next_interval)?;
            self.next_interval += 1;
            let problem = self.source.build_move_csp(iv).expect("intervals fit the structure");
            self.current = Some((iv, problem.solve_all()));
        }
    }
}

/// Every strict move with interval length at most `k`, length-major, then
/// by start, then in solver order.
pub fn neighbor_moves<C: LocalMoves>(c: &C, k: usize) -> MoveStream<'_, C> {
    MoveStream::new(c, k)
}

/// The neighborhood of `c` under strict moves of length at most `k`,
/// paired with the move that produces each neighbor. Never contains `c`.
pub fn enumerate_neighbors<C: LocalMoves>(
    c: &C,
    k: usize,
) -> impl Iterator<Item = (MoveSolution<C::Residue>, C)> + '_ {
    neighbor_moves(c, k).map(move |m| {
        let next = c.with_residues(m.interval.first(), &m.residues);
        (m, next)
    })
}

/// A random neighbor: intervals are tried in a seeded random order and the
/// first satisfiable one is solved with randomized search. The interval is
/// chosen uniformly, the neighbor is not.
pub fn random_move<C: LocalMoves>(c: &C, k: usize, seed: u64) -> Option<MoveSolution<C::Residue>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intervals = move_intervals(c.len(), k);
    intervals.shuffle(&mut rng);
    for iv in intervals {
        let problem = c.build_move_csp(iv).expect("intervals fit the structure");
        if let Some(a) = problem.solve_random(rng.next_u64()) {
            return Some(MoveSolution { interval: iv, residues: c.decode(iv, &a) });
        }
    }
    None
}

pub fn random_neighbor<C: LocalMoves>(c: &C, k: usize, seed: u64) -> Option<(MoveSolution<C::Residue>, C)> {
    let m = random_move(c, k, seed)?;
    let next = c.with_residues(m.interval.first(), &m.residues);
    Some((m, next))
}

/// True iff `m` changes both end residues of its interval relative to `c`.
pub fn is_strict<C: Conformation>(c: &C, m: &MoveSolution<C::Residue>) -> bool {
    let iv = m.interval;
    m.residues.len() == iv.len
        && m.residues[0] != c.residue(iv.first())
        && m.residues[iv.len - 1] != c.residue(iv.end() - 1)
}

/// Applies a move, re-checking that it is a strict move producing a valid
/// structure.
pub fn apply_move<C: Conformation>(c: &C, m: &MoveSolution<C::Residue>) -> Result<C, MoveError> {
    m.interval.check(c.len())?;
    if m.residues.len() != m.interval.len {
        return Err(MoveError::Stale(format!(
            "{} residues supplied for an interval of length {}",
            m.residues.len(),
            m.interval.len
        )));
    }
    if !is_strict(c, m) {
        return Err(MoveError::Stale("an interval end is unchanged".into()));
    }
    let next = c.with_residues(m.interval.first(), &m.residues);
    next.validate()?;
    Ok(next)
}

/// The move that turns `after` back into `before`, given that `after` was
/// produced from `before` by `m`.
pub fn reverse_move<C: Conformation>(before: &C, m: &MoveSolution<C::Residue>) -> MoveSolution<C::Residue> {
    let iv = m.interval;
    MoveSolution { interval: iv, residues: (iv.first()..iv.end()).map(|i| before.residue(i)).collect() }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::lattice::Lattice;

    fn c(x: i32, y: i32, z: i32) -> Coord {
        Coord::new(x, y, z)
    }

    fn straight3() -> BackboneStructure {
        BackboneStructure::new(Lattice::square(), vec![c(0, 0, 0), c(1, 0, 0), c(2, 0, 0)]).unwrap()
    }

    fn solutions(p: &Problem) -> Vec<Vec<Coord>> {
        p.solve_all().map(|a| a.values).collect()
    }

    #[test]
    fn end_residue_pivots() {
        let p = build_backbone_move_csp(&straight3(), MoveInterval::new(3, 1)).unwrap();
        let sols: HashSet<_> = solutions(&p).into_iter().collect();
        assert_eq!(sols, HashSet::from([vec![c(1, 1, 0)], vec![c(1, -1, 0)]]));
    }

    #[test]
    fn middle_residue_is_stuck() {
        let p = build_backbone_move_csp(&straight3(), MoveInterval::new(2, 1)).unwrap();
        assert!(solutions(&p).is_empty());
    }

    #[test]
    fn two_residue_tail() {
        let p = build_backbone_move_csp(&straight3(), MoveInterval::new(2, 2)).unwrap();
        assert_eq!(solutions(&p).len(), 9);
    }

    #[test]
    fn candidate_domain_keeps_current_end() {
        let s = straight3();
        let d = candidate_domain(&s, MoveInterval::new(3, 1)).unwrap();
        assert!(!d.contains(c(0, 0, 0)));
        assert!(!d.contains(c(1, 0, 0)));
        assert!(d.contains(c(2, 0, 0)));
        assert!(d.values().iter().all(|&p| Lattice::square().ball(c(1, 0, 0), 2).contains(&p)));
    }

    #[test]
    fn interval_range_is_checked() {
        let s = straight3();
        assert!(matches!(s.build_move_csp(MoveInterval::new(3, 2)), Err(MoveError::IntervalOutOfRange { .. })));
        assert!(matches!(s.build_move_csp(MoveInterval::new(0, 1)), Err(MoveError::IntervalOutOfRange { .. })));
    }

    #[test]
    fn sidechain_rotation() {
        let s = SideChainStructure::new(Lattice::cubic(), vec![c(0, 0, 0), c(1, 0, 0)], vec![c(0, 1, 0), c(1, 1, 0)])
            .unwrap();
        let p = build_sidechain_move_csp(&s, MoveInterval::new(1, 1)).unwrap();
        let sols = solutions(&p);
        assert!(sols.contains(&vec![c(0, 0, 0), c(0, -1, 0)]));
        assert!(!sols.contains(&vec![c(0, 0, 0), c(0, 1, 0)]));
    }

    #[test]
    fn single_residue_sidechain_protein() {
        let cub = Lattice::cubic();
        let s = SideChainStructure::new(cub.clone(), vec![c(0, 0, 0)], vec![c(1, 0, 0)]).unwrap();
        let p = build_sidechain_move_csp(&s, MoveInterval::new(1, 1)).unwrap();
        assert!(!p.constraints().iter().any(|k| matches!(k, Constraint::NeighAnchor(..))));
        let sols = solutions(&p);
        // every (b, s) pair in the radius-1 region around the current points
        let region = cub.ball_around([c(0, 0, 0), c(1, 0, 0)], 1);
        let expected = region
            .iter()
            .flat_map(|&b| region.iter().map(move |&s| (b, s)))
            .filter(|&(b, s)| cub.are_neighbors(b, s) && (b, s) != (c(0, 0, 0), c(1, 0, 0)))
            .count();
        assert_eq!(sols.len(), expected);
    }

    #[test]
    fn neighborhood_of_straight_chain() {
        // each end pivots to the two free neighbors of the middle residue
        let s = straight3();
        let got: Vec<_> = enumerate_neighbors(&s, 1).map(|(m, n)| (m.interval.start, n.coords()[m.interval.first()])).collect();
        assert_eq!(got, vec![(1, c(1, -1, 0)), (1, c(1, 1, 0)), (3, c(1, -1, 0)), (3, c(1, 1, 0))]);
    }

    #[test]
    fn random_neighbor_is_member() {
        let s = straight3();
        let all: HashSet<_> = enumerate_neighbors(&s, 2).map(|(_, n)| n).collect();
        for seed in 0..50 {
            let (m, n) = random_neighbor(&s, 2, seed).unwrap();
            assert!(all.contains(&n));
            assert_eq!(random_neighbor(&s, 2, seed).unwrap().0, m);
        }
    }

    #[test]
    fn apply_and_reverse() {
        let s = straight3();
        for (m, n) in enumerate_neighbors(&s, 2) {
            let applied = apply_move(&s, &m).unwrap();
            assert_eq!(applied, n);
            for i in 0..s.len() {
                let inside = (m.interval.first()..m.interval.end()).contains(&i);
                if !inside {
                    assert_eq!(s.residue(i), n.residue(i));
                }
            }
            let back = apply_move(&n, &reverse_move(&s, &m)).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn stale_move_rejected() {
        let s = straight3();
        let (m, _) = enumerate_neighbors(&s, 1).next().unwrap();
        let other = BackboneStructure::new(Lattice::square(), vec![c(0, 0, 0), c(0, 1, 0), c(0, 2, 0)]).unwrap();
        assert!(matches!(apply_move(&other, &m), Err(MoveError::Stale(_))));
    }

    #[test]
    fn blocked_structure_has_no_neighbors() {
        // on a one-dimensional lattice every residue of a chain is pinned
        let line = Lattice::new("LINE", [c(1, 0, 0), c(-1, 0, 0)]).unwrap();
        let s = BackboneStructure::new(line, vec![c(0, 0, 0), c(1, 0, 0), c(2, 0, 0)]).unwrap();
        assert_eq!(enumerate_neighbors(&s, 1).count(), 0);
        assert_eq!(random_neighbor(&s, 1, 3), None);
    }
}
