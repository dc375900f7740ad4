//! Energy-directed exploration on top of the move set: steepest-descent
//! gradient walks, Metropolis annealing, and a two-stage fold that first
//! collapses the H/P translation of a sequence and then refines under a
//! full contact potential.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{Coord, Lattice};
use crate::model::{
    BackboneStructure, Conformation, ContactPotential, EnergyError, EnergyFunction, HpMapping, ModelKind, Sequence,
    SequenceError, SideChainStructure, Structure,
};
use crate::model::IntervalScorer;
use crate::moves::{neighbor_moves, random_move, LocalMoves, MoveInterval};

/// Energy differences smaller than this are treated as zero.
pub const ENERGY_EPSILON: f64 = 1e-9;

/// Default maximal move interval length.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("invalid annealing schedule: {0}")]
    InvalidSchedule(String),
    #[error("move length k must be at least 1")]
    InvalidK,
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("could not grow a self-avoiding chain of {n} residues after {attempts} attempts")]
    GrowthFailure { n: usize, attempts: usize },
    #[error("potential covers neither the sequence nor its H/P translation")]
    PotentialAlphabet,
}

/// Geometric cooling: the temperature of sweep `i` is
/// `max(t_start * cooling^i, t_end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub cooling: f64,
    pub sweeps: usize,
    pub steps_per_sweep: usize,
}

impl AnnealSchedule {
    /// Defaults for a chain of `n` residues: 2.0 → 0.05 with factor 0.97
    /// over 150 sweeps of `10 n` steps.
    pub fn for_length(n: usize) -> Self {
        AnnealSchedule { t_start: 2.0, t_end: 0.05, cooling: 0.97, sweeps: 150, steps_per_sweep: 10 * n.max(1) }
    }

    /// Constant temperature `t` for `steps` steps.
    pub fn constant(t: f64, steps: usize) -> Self {
        AnnealSchedule { t_start: t, t_end: t, cooling: 0.5, sweeps: 1, steps_per_sweep: steps }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidSchedule(m.to_string()));
        if !(self.t_start > 0.0 && self.t_end > 0.0) {
            return bad("temperatures must be positive");
        }
        if self.t_end > self.t_start {
            return bad("t_end must not exceed t_start");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling factor must lie in (0, 1)");
        }
        if self.sweeps == 0 || self.steps_per_sweep == 0 {
            return bad("sweeps and steps_per_sweep must be positive");
        }
        Ok(())
    }

    pub fn temperature(&self, sweep: usize) -> f64 {
        (self.t_start * self.cooling.powi(sweep as i32)).max(self.t_end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    /// Energy of the proposed (for walks: the chosen) structure.
    pub energy: f64,
    pub delta: f64,
    pub accepted: bool,
    /// Temperature; 0 for gradient walks.
    pub temperature: f64,
}

/// Energy trajectory of a walk or annealing run with its best structure.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldTrace<C> {
    pub initial_energy: f64,
    pub steps: Vec<TraceStep>,
    pub best_structure: C,
    pub best_energy: f64,
    /// The run stopped early because the structure had no neighbors.
    pub frozen: bool,
}

impl<C> FoldTrace<C> {
    fn start(c: C, energy: f64) -> Self {
        FoldTrace { initial_energy: energy, steps: Vec::new(), best_structure: c, best_energy: energy, frozen: false }
    }

    pub fn accepted_count(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }

    /// Plain-text table `step energy accepted T` followed by a summary.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# step energy accepted T\n");
        for s in &self.steps {
            let _ = writeln!(out, "{} {:.6} {} {:.6}", s.step, s.energy, u8::from(s.accepted), s.temperature);
        }
        let _ = writeln!(out, "# initial_energy {:.6}", self.initial_energy);
        let _ = writeln!(out, "# best_energy {:.6}", self.best_energy);
        let _ = writeln!(out, "# steps {}", self.steps.len());
        let _ = writeln!(out, "# accepted {}", self.accepted_count());
        let _ = writeln!(out, "# frozen {}", self.frozen);
        out
    }

    pub fn map_structure<D>(self, f: impl FnOnce(C) -> D) -> FoldTrace<D> {
        FoldTrace {
            initial_energy: self.initial_energy,
            steps: self.steps,
            best_structure: f(self.best_structure),
            best_energy: self.best_energy,
            frozen: self.frozen,
        }
    }
}

fn check_inputs<C: Conformation>(c: &C, k: usize, f: &EnergyFunction) -> Result<(), SearchError> {
    if k == 0 {
        return Err(SearchError::InvalidK);
    }
    if f.len() != c.len() {
        return Err(EnergyError::LengthMismatch { sequence: f.len(), structure: c.len() }.into());
    }
    Ok(())
}

/// Steepest descent: move to the lowest-energy neighbor (first in
/// enumeration order among equals) while it is strictly lower, and return
/// the local minimum reached.
pub fn gradient_walk<C: LocalMoves>(c: &C, k: usize, f: &EnergyFunction) -> Result<(C, FoldTrace<C>), SearchError> {
    check_inputs(c, k, f)?;
    let mut current = c.clone();
    let mut energy = f.energy_of(&current);
    let mut trace = FoldTrace::start(current.clone(), energy);
    loop {
        let mut best: Option<(f64, crate::moves::MoveSolution<C::Residue>)> = None;
        let mut scorer: Option<(MoveInterval, IntervalScorer)> = None;
        for m in neighbor_moves(&current, k) {
            if scorer.as_ref().is_none_or(|(iv, _)| *iv != m.interval) {
                scorer = Some((m.interval, f.interval_scorer(&current, m.interval.first(), m.interval.len)));
            }
            let d = scorer.as_ref().expect("set above").1.delta::<C>(&m.residues);
            if d < -ENERGY_EPSILON && best.as_ref().is_none_or(|(bd, _)| d < *bd - ENERGY_EPSILON) {
                best = Some((d, m));
            }
        }
        let Some((d, m)) = best else { break };
        current = current.with_residues(m.interval.first(), &m.residues);
        energy = f.energy_of(&current);
        trace.steps.push(TraceStep { step: trace.steps.len() + 1, energy, delta: d, accepted: true, temperature: 0.0 });
    }
    trace.best_energy = energy;
    trace.best_structure = current.clone();
    Ok((current, trace))
}

/// Metropolis Monte Carlo with random strict moves. Deterministic for a
/// given seed.
pub fn metropolis_run<C: LocalMoves>(
    c: &C,
    k: usize,
    f: &EnergyFunction,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<FoldTrace<C>, SearchError> {
    check_inputs(c, k, f)?;
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = c.clone();
    let mut energy = f.energy_of(&current);
    let mut trace = FoldTrace::start(current.clone(), energy);
    let mut step = 0;
    'sweeps: for sweep in 0..schedule.sweeps {
        let t = schedule.temperature(sweep);
        for _ in 0..schedule.steps_per_sweep {
            let Some(m) = random_move(&current, k, rng.next_u64()) else {
                trace.frozen = true;
                break 'sweeps;
            };
            step += 1;
            let d = f.delta_of(&current, m.interval.first(), &m.residues);
            let accepted = d <= 0.0 || rng.random::<f64>() < (-d / t).exp();
            trace.steps.push(TraceStep { step, energy: energy + d, delta: d, accepted, temperature: t });
            if accepted {
                current = current.with_residues(m.interval.first(), &m.residues);
                energy = f.energy_of(&current);
                trace.steps.last_mut().expect("just pushed").energy = energy;
                if energy < trace.best_energy - ENERGY_EPSILON {
                    trace.best_energy = energy;
                    trace.best_structure = current.clone();
                }
            }
        }
    }
    Ok(trace)
}

/// Grows a self-avoiding chain (backbone node, then side chain, residue by
/// residue) by seeded random depth-first search with restarts.
pub fn random_conformation<C: Conformation>(n: usize, lattice: &Lattice, seed: u64) -> Result<C, SearchError> {
    if n == 0 {
        return Err(SearchError::EmptyChain);
    }
    const ATTEMPTS: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = C::POINTS_PER_RESIDUE;
    let total = n * per;
    // monomer m attaches to the backbone node of its own residue (side
    // chain) or of the previous residue (backbone)
    let parent = |m: usize| -> Option<usize> {
        if m == 0 {
            None
        } else if m.is_multiple_of(per) {
            Some(m - per)
        } else {
            Some(m - m % per)
        }
    };
    let budget = 2_000 * total;
    for _ in 0..ATTEMPTS {
        let mut placed: Vec<Coord> = vec![Coord::ORIGIN];
        let mut occupied: HashSet<Coord> = HashSet::from([Coord::ORIGIN]);
        let mut options: Vec<Vec<Coord>> = vec![Vec::new()];
        let mut work = 0;
        while placed.len() < total && work < budget {
            work += 1;
            let m = placed.len();
            if options.len() == m {
                let anchor = placed[parent(m).expect("m > 0")];
                let mut cand: Vec<Coord> = lattice.neighbors_of(anchor).filter(|p| !occupied.contains(p)).collect();
                cand.shuffle(&mut rng);
                options.push(cand);
            }
            match options[m].pop() {
                Some(p) => {
                    occupied.insert(p);
                    placed.push(p);
                }
                None => {
                    // dead end: drop the options of m and undo monomer m - 1
                    options.pop();
                    if m == 1 {
                        break;
                    }
                    let undone = placed.pop().expect("m > 1");
                    occupied.remove(&undone);
                }
            }
        }
        if placed.len() == total {
            let residues: Vec<C::Residue> = placed.chunks(per).map(C::residue_from_points).collect();
            let c = C::from_residues_unchecked(lattice.clone(), &residues);
            debug_assert!(c.validate().is_ok());
            return Ok(c);
        }
    }
    Err(SearchError::GrowthFailure { n, attempts: ATTEMPTS })
}

pub fn random_valid_structure(n: usize, lattice: &Lattice, kind: ModelKind, seed: u64) -> Result<Structure, SearchError> {
    Ok(match kind {
        ModelKind::Backbone => Structure::Backbone(random_conformation::<BackboneStructure>(n, lattice, seed)?),
        ModelKind::SideChain => Structure::SideChain(random_conformation::<SideChainStructure>(n, lattice, seed)?),
    })
}

/// Settings for [`two_stage_fold`].
#[derive(Clone, Debug)]
pub struct FoldSettings {
    pub k: usize,
    pub hp_schedule: AnnealSchedule,
    pub refine_schedule: AnnealSchedule,
    pub seed: u64,
}

impl FoldSettings {
    pub fn for_length(n: usize, seed: u64) -> Self {
        FoldSettings {
            k: DEFAULT_K,
            hp_schedule: AnnealSchedule::for_length(n),
            refine_schedule: AnnealSchedule::for_length(n),
            seed,
        }
    }
}

/// Everything produced by one two-stage folding run.
#[derive(Clone, Debug)]
pub struct FoldOutcome<C> {
    pub seed: u64,
    pub hp_sequence: Sequence,
    pub start: C,
    /// Stage 1: best structure of H/P annealing.
    pub hp_structure: C,
    pub hp_trace: FoldTrace<C>,
    /// Stage-2 energy of the stage-1 structure.
    pub hp_structure_energy: f64,
    /// Stage 2a: gradient walk from the stage-1 structure.
    pub gradient: C,
    pub gradient_trace: FoldTrace<C>,
    /// Stage 2b: annealing from the stage-1 structure, then a gradient walk.
    pub refined: C,
    pub refine_trace: FoldTrace<C>,
    pub refine_walk_trace: FoldTrace<C>,
}

impl<C> FoldOutcome<C> {
    pub fn gradient_energy(&self) -> f64 {
        self.gradient_trace.best_energy
    }

    pub fn refined_energy(&self) -> f64 {
        self.refine_walk_trace.best_energy
    }

    pub fn best_energy(&self) -> f64 {
        self.gradient_energy().min(self.refined_energy())
    }
}

/// Picks the sequence the stage-2 potential scores: the sequence itself if
/// the potential covers it, else its H/P translation.
fn stage_two_function(seq: &Sequence, hp: &Sequence, potential: &ContactPotential) -> Result<EnergyFunction, SearchError> {
    match EnergyFunction::new(seq, potential) {
        Ok(f) => Ok(f),
        Err(EnergyError::UnknownSymbol { .. }) => {
            EnergyFunction::new(hp, potential).map_err(|_| SearchError::PotentialAlphabet)
        }
        Err(e) => Err(e.into()),
    }
}

/// Two-stage folding: anneal the H/P translation under the HP potential,
/// then refine the best H/P structure under `potential` both by a plain
/// gradient walk and by annealing followed by a gradient walk.
pub fn two_stage_fold<C: LocalMoves>(
    seq: &Sequence,
    lattice: &Lattice,
    mapping: &HpMapping,
    potential: &ContactPotential,
    settings: &FoldSettings,
) -> Result<FoldOutcome<C>, SearchError> {
    if settings.k == 0 {
        return Err(SearchError::InvalidK);
    }
    settings.hp_schedule.validate()?;
    settings.refine_schedule.validate()?;
    let hp_sequence = match seq.alphabet() {
        crate::model::Alphabet::Hp => seq.clone(),
        crate::model::Alphabet::AminoAcid => mapping.translate(seq)?,
    };
    let hp_fn = EnergyFunction::new(&hp_sequence, &ContactPotential::hp())?;
    let fine_fn = stage_two_function(seq, &hp_sequence, potential)?;

    let mut seeds = ChaCha8Rng::seed_from_u64(settings.seed);
    let start: C = random_conformation(seq.len(), lattice, seeds.next_u64())?;
    let hp_trace = metropolis_run(&start, settings.k, &hp_fn, &settings.hp_schedule, seeds.next_u64())?;
    let hp_structure = hp_trace.best_structure.clone();
    let hp_structure_energy = fine_fn.energy_of(&hp_structure);

    let (gradient, gradient_trace) = gradient_walk(&hp_structure, settings.k, &fine_fn)?;
    let refine_trace = metropolis_run(&hp_structure, settings.k, &fine_fn, &settings.refine_schedule, seeds.next_u64())?;
    let (refined, refine_walk_trace) = gradient_walk(&refine_trace.best_structure, settings.k, &fine_fn)?;

    Ok(FoldOutcome {
        seed: settings.seed,
        hp_sequence,
        start,
        hp_structure,
        hp_trace,
        hp_structure_energy,
        gradient,
        gradient_trace,
        refined,
        refine_trace,
        refine_walk_trace,
    })
}

/// Runs `restarts` independent folds with seeds `seed, seed + 1, ...` on
/// separate threads and returns them in seed order together with the index
/// of the best (lowest best energy, earliest seed on ties).
pub fn fold_restarts<C: LocalMoves>(
    seq: &Sequence,
    lattice: &Lattice,
    mapping: &HpMapping,
    potential: &ContactPotential,
    settings: &FoldSettings,
    restarts: usize,
) -> Result<(Vec<FoldOutcome<C>>, usize), SearchError> {
    let restarts = restarts.max(1);
    let results: Vec<Result<FoldOutcome<C>, SearchError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..restarts)
            .map(|i| {
                let s = FoldSettings { seed: settings.seed.wrapping_add(i as u64), ..settings.clone() };
                scope.spawn(move || two_stage_fold::<C>(seq, lattice, mapping, potential, &s))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fold worker panicked")).collect()
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.best_energy() < outcomes[best].best_energy() - ENERGY_EPSILON {
            best = i;
        }
    }
    Ok((outcomes, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;
    use crate::moves::enumerate_neighbors;

    fn c(x: i32, y: i32, z: i32) -> Coord {
        Coord::new(x, y, z)
    }

    fn hp_fn(s: &str) -> EnergyFunction {
        EnergyFunction::new(&Sequence::new(s, Alphabet::Hp).unwrap(), &ContactPotential::hp()).unwrap()
    }

    #[test]
    fn walk_reaches_local_minimum() {
        let start = BackboneStructure::new(Lattice::square(), vec![c(0, 0, 0), c(1, 0, 0), c(2, 0, 0), c(3, 0, 0)])
            .unwrap();
        let f = hp_fn("HPPH");
        let (end, trace) = gradient_walk(&start, 3, &f).unwrap();
        let e = f.evaluate(&end).unwrap();
        assert!(e <= -1.0);
        assert!(enumerate_neighbors(&end, 3).all(|(_, n)| f.evaluate(&n).unwrap() >= e));
        let mut prev = trace.initial_energy;
        for s in &trace.steps {
            assert!(s.energy < prev);
            prev = s.energy;
        }
        // a local minimum is a fixpoint
        let (again, t2) = gradient_walk(&end, 3, &f).unwrap();
        assert_eq!(again, end);
        assert!(t2.steps.is_empty());
    }

    #[test]
    fn zero_potential_walk_is_immediate() {
        let start = random_conformation::<SideChainStructure>(6, &Lattice::fcc(), 3).unwrap();
        let seq = Sequence::new("HPHPHH", Alphabet::Hp).unwrap();
        let f = EnergyFunction::new(&seq, &ContactPotential::zero(['H', 'P'])).unwrap();
        let (end, trace) = gradient_walk(&start, 2, &f).unwrap();
        assert_eq!(end, start);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn random_structures() {
        for kind in [ModelKind::Backbone, ModelKind::SideChain] {
            for lattice in [Lattice::square(), Lattice::cubic(), Lattice::fcc()] {
                for seed in 0..5 {
                    let s = random_valid_structure(25, &lattice, kind, seed).unwrap();
                    s.validate().unwrap();
                    assert_eq!(s, random_valid_structure(25, &lattice, kind, seed).unwrap());
                }
            }
        }
        let one = random_conformation::<BackboneStructure>(1, &Lattice::fcc(), 9).unwrap();
        assert_eq!(one.coords(), &[Coord::ORIGIN]);
        assert_eq!(random_conformation::<BackboneStructure>(0, &Lattice::fcc(), 9), Err(SearchError::EmptyChain));
    }

    #[test]
    fn schedule_checks() {
        assert!(AnnealSchedule::for_length(10).validate().is_ok());
        assert!(AnnealSchedule { t_end: 3.0, ..AnnealSchedule::for_length(10) }.validate().is_err());
        assert!(AnnealSchedule { cooling: 1.0, ..AnnealSchedule::for_length(10) }.validate().is_err());
        assert!(AnnealSchedule { sweeps: 0, ..AnnealSchedule::for_length(10) }.validate().is_err());
        let s = AnnealSchedule::for_length(10);
        assert_eq!(s.temperature(0), 2.0);
        assert_eq!(s.temperature(10_000), 0.05);
    }

    #[test]
    fn metropolis_hot_run_accepts_almost_everything() {
        let start = random_conformation::<BackboneStructure>(12, &Lattice::fcc(), 1).unwrap();
        let f = hp_fn("HPHPPHHPHPPH");
        let trace = metropolis_run(&start, 3, &f, &AnnealSchedule::constant(1e9, 2_000), 5).unwrap();
        assert_eq!(trace.steps.len(), 2_000);
        assert!(trace.accepted_count() as f64 / 2_000.0 >= 0.999);
        assert!(trace.steps.iter().filter(|s| s.delta <= 0.0).all(|s| s.accepted));
        let again = metropolis_run(&start, 3, &f, &AnnealSchedule::constant(1e9, 2_000), 5).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn metropolis_freezes_without_neighbors() {
        let line = Lattice::new("LINE", [c(1, 0, 0), c(-1, 0, 0)]).unwrap();
        let s = BackboneStructure::new(line, vec![c(0, 0, 0), c(1, 0, 0), c(2, 0, 0)]).unwrap();
        let trace = metropolis_run(&s, 1, &hp_fn("HHH"), &AnnealSchedule::constant(1.0, 10), 0).unwrap();
        assert!(trace.frozen);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn two_stage_small() {
        let seq = Sequence::new("MKVLAAGIVALLLAAGCSSS", Alphabet::AminoAcid).unwrap();
        let mut settings = FoldSettings::for_length(seq.len(), 11);
        settings.hp_schedule.sweeps = 20;
        settings.refine_schedule.sweeps = 10;
        settings.k = 2;
        let hp = ContactPotential::hp();
        let out: FoldOutcome<BackboneStructure> =
            two_stage_fold(&seq, &Lattice::fcc(), &HpMapping::default(), &hp, &settings).unwrap();
        assert_eq!(out.hp_sequence.len(), seq.len());
        assert!(out.hp_trace.best_energy <= out.hp_trace.initial_energy);
        assert!(out.gradient_energy() <= out.hp_structure_energy);
        assert!(out.refined_energy() <= out.hp_structure_energy);
        for s in [&out.start, &out.hp_structure, &out.gradient, &out.refined] {
            s.validate().unwrap();
        }
    }

    #[test]
    fn table_export() {
        let start = BackboneStructure::new(Lattice::square(), vec![c(0, 0, 0), c(1, 0, 0), c(2, 0, 0), c(3, 0, 0)])
            .unwrap();
        let (_, trace) = gradient_walk(&start, 3, &hp_fn("HPPH")).unwrap();
        let table = trace.to_table();
        assert!(table.starts_with("# step energy accepted T\n1 -1.000000 1 0.000000\n"));
        assert!(table.contains("# best_energy -1.000000"));
    }
}
