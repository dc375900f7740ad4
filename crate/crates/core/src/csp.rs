//! A small finite-domain constraint solver over coordinate-valued variables.
//!
//! Domains are sorted vectors of lattice nodes. Propagation runs a
//! constraint queue to a fixpoint; search is depth-first with
//! smallest-domain-first variable selection and interleaved propagation.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{Coord, Lattice};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// A finite set of candidate nodes, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Domain {
    values: Vec<Coord>,
}

impl Domain {
    pub fn new(values: impl IntoIterator<Item = Coord>) -> Self {
        let mut values: Vec<Coord> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        Domain { values }
    }

    /// `values` must already be sorted and free of duplicates.
    pub(crate) fn from_sorted(values: Vec<Coord>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] < w[1]));
        Domain { values }
    }

    pub fn values(&self) -> &[Coord] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.values.binary_search(&c).is_ok()
    }
}

impl FromIterator<Coord> for Domain {
    fn from_iter<I: IntoIterator<Item = Coord>>(iter: I) -> Self {
        Domain::new(iter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Pairwise distinct values.
    AllDifferent(Vec<VarId>),
    /// The two variables take lattice-adjacent values.
    Neigh(VarId, VarId),
    /// The variable is lattice-adjacent to a fixed node.
    NeighAnchor(VarId, Coord),
    NotEqualAnchor(VarId, Coord),
    /// At least one listed variable differs from its paired node.
    OrNotEqualAnchors(Vec<(VarId, Coord)>),
}

impl Constraint {
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            Constraint::AllDifferent(vs) => vs.clone(),
            Constraint::Neigh(a, b) => vec![*a, *b],
            Constraint::NeighAnchor(a, _) | Constraint::NotEqualAnchor(a, _) => vec![*a],
            Constraint::OrNotEqualAnchors(pairs) => pairs.iter().map(|p| p.0).collect(),
        }
    }

    /// Direct check against a total assignment, independent of propagation.
    pub fn is_satisfied(&self, lattice: &Lattice, values: &[Coord]) -> bool {
        match self {
            Constraint::AllDifferent(vs) => {
                vs.iter().enumerate().all(|(i, a)| vs[i + 1..].iter().all(|b| values[a.0] != values[b.0]))
            }
            Constraint::Neigh(a, b) => lattice.are_neighbors(values[a.0], values[b.0]),
            Constraint::NeighAnchor(a, c) => lattice.are_neighbors(values[a.0], *c),
            Constraint::NotEqualAnchor(a, c) => values[a.0] != *c,
            Constraint::OrNotEqualAnchors(pairs) => pairs.iter().any(|(v, c)| values[v.0] != *c),
        }
    }
}

/// A total assignment, indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub values: Vec<Coord>,
}

impl Assignment {
    pub fn get(&self, v: VarId) -> Coord {
        self.values[v.0]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    lattice: Lattice,
    domains: Vec<Domain>,
    constraints: Vec<Constraint>,
}

/// Outcome of [`Problem::propagate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Propagation {
    Consistent(Problem),
    Inconsistent,
}

impl Propagation {
    pub fn is_inconsistent(&self) -> bool {
        matches!(self, Propagation::Inconsistent)
    }

    pub fn problem(self) -> Option<Problem> {
        match self {
            Propagation::Consistent(p) => Some(p),
            Propagation::Inconsistent => None,
        }
    }
}

impl Problem {
    pub fn new(lattice: Lattice) -> Self {
        Problem { lattice, domains: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_var(&mut self, domain: Domain) -> VarId {
        self.domains.push(domain);
        VarId(self.domains.len() - 1)
    }

    /// # Panics
    /// If the constraint mentions a variable that does not exist.
    pub fn post(&mut self, c: Constraint) {
        for v in c.vars() {
            assert!(v.0 < self.domains.len(), "constraint refers to unknown variable {}", v.0);
        }
        self.constraints.push(c);
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn domain(&self, v: VarId) -> &Domain {
        &self.domains[v.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    /// True iff `a` assigns every variable a value from its domain and
    /// satisfies every constraint.
    pub fn is_solution(&self, a: &Assignment) -> bool {
        a.values.len() == self.domains.len()
            && a.values.iter().zip(&self.domains).all(|(&v, d)| d.contains(v))
            && self.constraints.iter().all(|c| c.is_satisfied(&self.lattice, &a.values))
    }

    pub fn propagate(&self) -> Propagation {
        let engine = Engine::new(self);
        let mut domains: Vec<Vec<Coord>> = self.domains.iter().map(|d| d.values.clone()).collect();
        if engine.fixpoint(&mut domains, None) {
            Propagation::Consistent(Problem {
                lattice: self.lattice.clone(),
                domains: domains.into_iter().map(Domain::from_sorted).collect(),
                constraints: self.constraints.clone(),
            })
        } else {
            Propagation::Inconsistent
        }
    }

    /// Every solution exactly once, in a deterministic order.
    pub fn solve_all(&self) -> Solutions {
        Solutions::new(self, None)
    }

    /// Some solution, found by the same complete search with seeded random
    /// variable tie-breaking and value ordering. Deterministic for a given
    /// seed; the distribution over solutions is not uniform.
    pub fn solve_random(&self, seed: u64) -> Option<Assignment> {
        Solutions::new(self, Some(ChaCha8Rng::seed_from_u64(seed))).next()
    }
}

/// Constraint store with per-variable watch lists.
struct Engine {
    lattice: Lattice,
    constraints: Vec<Constraint>,
    watches: Vec<Vec<usize>>,
}

impl Engine {
    fn new(problem: &Problem) -> Self {
        let mut watches = vec![Vec::new(); problem.domains.len()];
        for (ci, c) in problem.constraints.iter().enumerate() {
            for v in c.vars() {
                if !watches[v.0].contains(&ci) {
                    watches[v.0].push(ci);
                }
            }
        }
        Engine { lattice: problem.lattice.clone(), constraints: problem.constraints.clone(), watches }
    }

    /// Propagates to a fixpoint. With `changed = Some(v)` only constraints
    /// on `v` are scheduled initially. Returns false on a wipe-out.
    fn fixpoint(&self, domains: &mut [Vec<Coord>], changed: Option<usize>) -> bool {
        if domains.iter().any(Vec::is_empty) {
            return false;
        }
        let n = self.constraints.len();
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        let initial: Box<dyn Iterator<Item = usize>> = match changed {
            Some(v) => Box::new(self.watches[v].iter().copied()),
            None => Box::new(0..n),
        };
        for ci in initial {
            queued[ci] = true;
            queue.push_back(ci);
        }
        let mut touched = Vec::new();
        while let Some(ci) = queue.pop_front() {
            queued[ci] = false;
            touched.clear();
            if !self.revise(&self.constraints[ci], domains, &mut touched) {
                return false;
            }
            for &v in &touched {
                for &cj in &self.watches[v] {
                    if cj != ci && !queued[cj] {
                        queued[cj] = true;
                        queue.push_back(cj);
                    }
                }
            }
        }
        true
    }

    fn revise(&self, c: &Constraint, domains: &mut [Vec<Coord>], touched: &mut Vec<usize>) -> bool {
        let lattice = &self.lattice;
        let mut shrink = |v: usize, domains: &mut [Vec<Coord>], keep: &dyn Fn(Coord) -> bool| -> bool {
            let before = domains[v].len();
            domains[v].retain(|&x| keep(x));
            if domains[v].len() != before {
                touched.push(v);
            }
            !domains[v].is_empty()
        };
        match c {
            Constraint::NeighAnchor(a, anchor) => shrink(a.0, domains, &|x| lattice.are_neighbors(x, *anchor)),
            Constraint::NotEqualAnchor(a, anchor) => shrink(a.0, domains, &|x| x != *anchor),
            Constraint::Neigh(a, b) => {
                let (a, b) = (a.0, b.0);
                let other = domains[b].clone();
                if !shrink(a, domains, &|x| has_support(lattice, x, &other)) {
                    return false;
                }
                let other = domains[a].clone();
                shrink(b, domains, &|y| has_support(lattice, y, &other))
            }
            Constraint::AllDifferent(vars) => {
                // repeat while new singletons appear within this constraint
                let mut done = vec![false; vars.len()];
                loop {
                    let mut progress = false;
                    for i in 0..vars.len() {
                        if done[i] || domains[vars[i].0].len() != 1 {
                            continue;
                        }
                        done[i] = true;
                        progress = true;
                        let fixed = domains[vars[i].0][0];
                        for (j, w) in vars.iter().enumerate() {
                            if j != i && !shrink(w.0, domains, &|x| x != fixed) {
                                return false;
                            }
                        }
                    }
                    if !progress {
                        return true;
                    }
                }
            }
            Constraint::OrNotEqualAnchors(pairs) => {
                let mut open = None;
                let mut open_count = 0;
                for (i, (v, anchor)) in pairs.iter().enumerate() {
                    let d = &domains[v.0];
                    let falsified = d.len() == 1 && d[0] == *anchor;
                    if !falsified {
                        open_count += 1;
                        open = Some(i);
                    }
                }
                match (open_count, open) {
                    (0, _) => false,
                    (1, Some(i)) => {
                        let (v, anchor) = pairs[i];
                        shrink(v.0, domains, &|x| x != anchor)
                    }
                    _ => true,
                }
            }
        }
    }
}

fn has_support(lattice: &Lattice, x: Coord, others: &[Coord]) -> bool {
    if others.len() <= lattice.coordination() {
        others.iter().any(|&y| lattice.are_neighbors(x, y))
    } else {
        lattice.neighbors_of(x).any(|y| others.binary_search(&y).is_ok())
    }
}

struct Node {
    domains: Vec<Vec<Coord>>,
    var: usize,
    order: Vec<Coord>,
    next: usize,
    /// `var` is the only unfixed variable, so every value of its
    /// (propagated) domain completes a solution.
    last: bool,
}

/// Lazy depth-first enumeration of the solutions of a [`Problem`].
pub struct Solutions {
    engine: Engine,
    stack: Vec<Node>,
    pending: Option<Assignment>,
    rng: Option<ChaCha8Rng>,
}

impl Solutions {
    fn new(problem: &Problem, rng: Option<ChaCha8Rng>) -> Self {
        let engine = Engine::new(problem);
        let mut s = Solutions { engine, stack: Vec::new(), pending: None, rng };
        let mut domains: Vec<Vec<Coord>> = problem.domains.iter().map(|d| d.values.clone()).collect();
        if s.engine.fixpoint(&mut domains, None) {
            s.descend(domains);
        }
        s
    }

    /// Pushes a branching node for a consistent, propagated state, or stores
    /// the assignment if every variable is fixed.
    fn descend(&mut self, domains: Vec<Vec<Coord>>) {
        let open: Vec<usize> = (0..domains.len()).filter(|&v| domains[v].len() > 1).collect();
        let Some(min) = open.iter().map(|&v| domains[v].len()).min() else {
            self.pending = Some(Assignment { values: domains.iter().map(|d| d[0]).collect() });
            return;
        };
        let candidates: Vec<usize> = open.iter().copied().filter(|&v| domains[v].len() == min).collect();
        let var = match &mut self.rng {
            Some(rng) => candidates[rng.random_range(0..candidates.len())],
            None => candidates[0],
        };
        let mut order = domains[var].clone();
        if let Some(rng) = &mut self.rng {
            order.shuffle(rng);
        }
        let last = open.len() == 1;
        self.stack.push(Node { domains, var, order, next: 0, last });
    }
}

impl Iterator for Solutions {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if let Some(a) = self.pending.take() {
            return Some(a);
        }
        loop {
            let node = self.stack.last_mut()?;
            if node.next == node.order.len() {
                self.stack.pop();
                continue;
            }
            let value = node.order[node.next];
            node.next += 1;
            if node.last {
                let mut values: Vec<Coord> = node.domains.iter().map(|d| d[0]).collect();
                values[node.var] = value;
                return Some(Assignment { values });
            }
            let var = node.var;
            let mut child = node.domains.clone();
            child[var].clear();
            child[var].push(value);
            if self.engine.fixpoint(&mut child, Some(var)) {
                self.descend(child);
                if let Some(a) = self.pending.take() {
                    return Some(a);
                }
            }
        }
    }
}

pub fn propagate(p: &Problem) -> Propagation {
    p.propagate()
}

pub fn solve_all(p: &Problem) -> Solutions {
    p.solve_all()
}

pub fn solve_random(p: &Problem, seed: u64) -> Option<Assignment> {
    p.solve_random(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32, z: i32) -> Coord {
        Coord::new(x, y, z)
    }

    #[test]
    fn neigh_prunes_unsupported() {
        let mut p = Problem::new(Lattice::square());
        let x = p.add_var(Domain::new([c(0, 0, 0)]));
        let y = p.add_var(Domain::new([c(5, 5, 0), c(1, 0, 0)]));
        p.post(Constraint::Neigh(x, y));
        let r = p.propagate().problem().unwrap();
        assert_eq!(r.domain(y).values(), &[c(1, 0, 0)]);
    }

    #[test]
    fn not_equal_wipeout() {
        let mut p = Problem::new(Lattice::square());
        let x = p.add_var(Domain::new([c(0, 0, 0)]));
        p.post(Constraint::NotEqualAnchor(x, c(0, 0, 0)));
        assert!(p.propagate().is_inconsistent());
        assert_eq!(p.solve_all().count(), 0);
        assert_eq!(p.solve_random(7), None);
    }

    #[test]
    fn no_constraints_is_fixpoint() {
        let mut p = Problem::new(Lattice::cubic());
        p.add_var(Domain::new([c(2, 0, 0), c(0, 0, 0), c(1, 0, 0)]));
        assert_eq!(p.propagate(), Propagation::Consistent(p.clone()));
        let sols: Vec<_> = p.solve_all().map(|a| a.values[0]).collect();
        assert_eq!(sols, vec![c(0, 0, 0), c(1, 0, 0), c(2, 0, 0)]);
    }

    #[test]
    fn pairs_of_adjacent_origin_neighbors() {
        let sq = Lattice::square();
        let ring: Vec<_> = sq.neighbors_of(Coord::ORIGIN).collect();
        let mut p = Problem::new(sq.clone());
        let x = p.add_var(Domain::new(ring.clone()));
        let y = p.add_var(Domain::new(ring.clone()));
        p.post(Constraint::AllDifferent(vec![x, y]));
        p.post(Constraint::Neigh(x, y));
        let got: Vec<_> = p.solve_all().collect();
        // in SQ, the four neighbors of a node are pairwise non-adjacent
        let brute = ring
            .iter()
            .flat_map(|&a| ring.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a != b && sq.are_neighbors(a, b))
            .count();
        assert_eq!(got.len(), brute);
        assert_eq!(brute, 0);
    }

    #[test]
    fn pairs_of_adjacent_origin_neighbors_fcc() {
        let fcc = Lattice::fcc();
        let ring: Vec<_> = fcc.neighbors_of(Coord::ORIGIN).collect();
        let mut p = Problem::new(fcc.clone());
        let x = p.add_var(Domain::new(ring.clone()));
        let y = p.add_var(Domain::new(ring.clone()));
        p.post(Constraint::AllDifferent(vec![x, y]));
        p.post(Constraint::Neigh(x, y));
        let got: Vec<_> = p.solve_all().map(|a| (a.values[0], a.values[1])).collect();
        let brute: Vec<_> = ring
            .iter()
            .flat_map(|&a| ring.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a != b && fcc.are_neighbors(a, b))
            .collect();
        assert_eq!(got, brute);
        assert_eq!(got.len(), 48);
    }

    #[test]
    fn or_not_equal_unit_propagation() {
        let mut p = Problem::new(Lattice::cubic());
        let a = p.add_var(Domain::new([c(0, 0, 0)]));
        let b = p.add_var(Domain::new([c(1, 0, 0), c(2, 0, 0)]));
        p.post(Constraint::OrNotEqualAnchors(vec![(a, c(0, 0, 0)), (b, c(1, 0, 0))]));
        let r = p.propagate().problem().unwrap();
        assert_eq!(r.domain(b).values(), &[c(2, 0, 0)]);

        let mut q = Problem::new(Lattice::cubic());
        let a = q.add_var(Domain::new([c(0, 0, 0)]));
        let b = q.add_var(Domain::new([c(1, 0, 0)]));
        q.post(Constraint::OrNotEqualAnchors(vec![(a, c(0, 0, 0)), (b, c(1, 0, 0))]));
        assert!(q.propagate().is_inconsistent());
    }

    #[test]
    fn random_search_is_complete_and_deterministic() {
        let mut p = Problem::new(Lattice::square());
        let x = p.add_var(Domain::new(Lattice::square().ball(Coord::ORIGIN, 2)));
        let y = p.add_var(Domain::new(Lattice::square().ball(Coord::ORIGIN, 2)));
        p.post(Constraint::Neigh(x, y));
        p.post(Constraint::NeighAnchor(x, c(2, 0, 0)));
        let all: Vec<_> = p.solve_all().collect();
        for seed in 0..20 {
            let a = p.solve_random(seed).unwrap();
            assert!(all.contains(&a));
            assert_eq!(p.solve_random(seed), Some(a));
        }
    }

    #[test]
    fn unique_solution_found_by_every_seed() {
        let mut p = Problem::new(Lattice::square());
        let x = p.add_var(Domain::new([c(0, 0, 0), c(1, 0, 0)]));
        let y = p.add_var(Domain::new([c(1, 0, 0), c(3, 0, 0)]));
        p.post(Constraint::Neigh(x, y));
        for seed in [0, 1, u64::MAX] {
            assert_eq!(p.solve_random(seed).unwrap().values, vec![c(0, 0, 0), c(1, 0, 0)]);
        }
    }

    #[test]
    #[should_panic(expected = "unknown variable")]
    fn rejects_dangling_var() {
        let mut p = Problem::new(Lattice::square());
        p.post(Constraint::NeighAnchor(VarId(0), Coord::ORIGIN));
    }
}
