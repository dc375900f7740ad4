//! Python bindings: lattices, structures, contact potentials, neighborhood
//! enumeration, energies, gradient walks, folding and structure metrics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use latmove::io::{format_structure, parse_structure};
use latmove::metrics;
use latmove::moves::{enumerate_neighbors, neighbor_moves, LocalMoves};
use latmove::search::{self, AnnealSchedule, FoldOutcome, FoldSettings};
use latmove::{
    BackboneStructure, ContactPotential, Coord, EnergyFunction, HpMapping, Lattice, ModelKind, Sequence,
    SideChainStructure, Structure,
};

type Triple = (i32, i32, i32);

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn coord(t: Triple) -> Coord {
    Coord::from(t)
}

fn triple(c: Coord) -> Triple {
    (c.x, c.y, c.z)
}

fn sequence(s: &str) -> PyResult<Sequence> {
    Sequence::infer(s).map_err(err)
}

#[pyclass(name = "Lattice", module = "pylatmove", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLattice {
    inner: Lattice,
}

#[pymethods]
impl PyLattice {
    /// Built-in lattice by name: "SQ", "CUB" or "FCC".
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(PyLattice { inner: Lattice::from_name(name).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn coordination(&self) -> usize {
        self.inner.coordination()
    }

    fn neighbor_vectors(&self) -> Vec<Triple> {
        self.inner.neighbor_vectors().iter().map(|&c| triple(c)).collect()
    }

    fn neighbors_of(&self, p: Triple) -> Vec<Triple> {
        self.inner.neighbors_of(coord(p)).map(triple).collect()
    }

    fn are_neighbors(&self, a: Triple, b: Triple) -> bool {
        self.inner.are_neighbors(coord(a), coord(b))
    }

    fn to_angstrom(&self, p: Triple) -> [f64; 3] {
        self.inner.to_angstrom(coord(p))
    }

    fn __repr__(&self) -> String {
        format!("Lattice('{}')", self.inner.name())
    }
}

#[pyclass(name = "Structure", module = "pylatmove", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStructure {
    inner: Structure,
}

#[pymethods]
impl PyStructure {
    /// Backbone-only structure; raises ValueError if invalid.
    #[staticmethod]
    fn backbone(lattice: &PyLattice, coords: Vec<Triple>) -> PyResult<Self> {
        let s = BackboneStructure::new(lattice.inner.clone(), coords.into_iter().map(coord).collect()).map_err(err)?;
        Ok(PyStructure { inner: s.into() })
    }

    /// Side-chain structure; raises ValueError if invalid.
    #[staticmethod]
    fn sidechain(lattice: &PyLattice, backbone: Vec<Triple>, sidechain: Vec<Triple>) -> PyResult<Self> {
        let s = SideChainStructure::new(
            lattice.inner.clone(),
            backbone.into_iter().map(coord).collect(),
            sidechain.into_iter().map(coord).collect(),
        )
        .map_err(err)?;
        Ok(PyStructure { inner: s.into() })
    }

    /// Parses a structure file, returning `(structure, sequence)`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<(PyStructure, String)> {
        let (s, seq) = parse_structure(text).map_err(err)?;
        Ok((PyStructure { inner: s }, seq.to_string()))
    }

    fn to_text(&self, sequence: &str) -> PyResult<String> {
        let seq = crate::sequence(sequence)?;
        if seq.len() != self.inner.len() {
            return Err(err(format!("sequence has {} residues, structure has {}", seq.len(), self.inner.len())));
        }
        Ok(format_structure(&self.inner, &seq))
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn lattice(&self) -> PyLattice {
        PyLattice { inner: self.inner.lattice().clone() }
    }

    fn backbone_coords(&self) -> Vec<Triple> {
        self.inner.backbone().iter().map(|&c| triple(c)).collect()
    }

    fn sidechain_coords(&self) -> Option<Vec<Triple>> {
        self.inner.sidechain().map(|s| s.iter().map(|&c| triple(c)).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &PyStructure) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Structure({}, {}, n={})", self.inner.lattice().name(), self.inner.kind(), self.inner.len())
    }
}

#[pyclass(name = "Potential", module = "pylatmove", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: ContactPotential,
}

#[pymethods]
impl PyPotential {
    /// The H/P potential: -1 for H-H contacts, 0 otherwise.
    #[staticmethod]
    fn hp() -> Self {
        PyPotential { inner: ContactPotential::hp() }
    }

    /// Parses a symmetric matrix: a header of symbols, then one row each.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyPotential { inner: ContactPotential::parse(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(err)?;
        Self::parse(&text)
    }

    #[getter]
    fn alphabet(&self) -> String {
        self.inner.alphabet().iter().collect()
    }

    fn energy(&self, a: char, b: char) -> Option<f64> {
        self.inner.energy(a, b)
    }
}

fn potential_or_hp(p: Option<&PyPotential>) -> ContactPotential {
    p.map_or_else(ContactPotential::hp, |p| p.inner.clone())
}

/// Energy function for `seq`, scoring through the default H/P translation
/// when the potential does not cover the sequence.
fn energy_function(seq: &str, potential: Option<&PyPotential>) -> PyResult<EnergyFunction> {
    let seq = sequence(seq)?;
    let pot = potential_or_hp(potential);
    match EnergyFunction::new(&seq, &pot) {
        Ok(f) => Ok(f),
        Err(latmove::model::EnergyError::UnknownSymbol { .. }) => {
            let hp = HpMapping::default().translate(&seq).map_err(err)?;
            EnergyFunction::new(&hp, &pot).map_err(err)
        }
        Err(e) => Err(err(e)),
    }
}

/// Contact energy of a structure for a sequence (default potential: H/P).
#[pyfunction]
#[pyo3(signature = (structure, sequence, potential = None, exclude_adjacent = false))]
fn energy(structure: &PyStructure, sequence: &str, potential: Option<&PyPotential>, exclude_adjacent: bool) -> PyResult<f64> {
    energy_function(sequence, potential)?.exclude_chain_adjacent(exclude_adjacent).evaluate_structure(&structure.inner).map_err(err)
}

fn collect_neighbors<C: LocalMoves>(c: &C, k: usize) -> Vec<(usize, usize, PyStructure)> {
    enumerate_neighbors(c, k)
        .map(|(m, next)| (m.interval.len, m.interval.start, PyStructure { inner: next.into_structure() }))
        .collect()
}

/// The strict k-local neighborhood as `(length, start, structure)` tuples
/// in enumeration order.
#[pyfunction]
#[pyo3(signature = (structure, k = 3))]
fn neighbors(py: Python<'_>, structure: &PyStructure, k: usize) -> PyResult<Vec<(usize, usize, PyStructure)>> {
    if k == 0 {
        return Err(err("k must be at least 1"));
    }
    let s = structure.inner.clone();
    Ok(py.detach(move || match &s {
        Structure::Backbone(b) => collect_neighbors(b, k),
        Structure::SideChain(sc) => collect_neighbors(sc, k),
    }))
}

#[pyfunction]
#[pyo3(signature = (structure, k = 3))]
fn count_neighbors(py: Python<'_>, structure: &PyStructure, k: usize) -> PyResult<usize> {
    if k == 0 {
        return Err(err("k must be at least 1"));
    }
    let s = structure.inner.clone();
    Ok(py.detach(move || match &s {
        Structure::Backbone(b) => neighbor_moves(b, k).count(),
        Structure::SideChain(sc) => neighbor_moves(sc, k).count(),
    }))
}

fn walk<C: LocalMoves>(c: &C, k: usize, f: &EnergyFunction) -> PyResult<(PyStructure, Vec<f64>)> {
    let (end, trace) = search::gradient_walk(c, k, f).map_err(err)?;
    let mut energies = vec![trace.initial_energy];
    energies.extend(trace.steps.iter().map(|s| s.energy));
    Ok((PyStructure { inner: end.into_structure() }, energies))
}

/// Steepest descent to a local minimum. Returns the final structure and
/// the energies along the way, starting with the initial energy.
#[pyfunction]
#[pyo3(signature = (structure, sequence, k = 3, potential = None))]
fn gradient_walk(
    py: Python<'_>,
    structure: &PyStructure,
    sequence: &str,
    k: usize,
    potential: Option<&PyPotential>,
) -> PyResult<(PyStructure, Vec<f64>)> {
    let f = energy_function(sequence, potential)?;
    let s = structure.inner.clone();
    py.detach(move || match &s {
        Structure::Backbone(b) => walk(b, k, &f),
        Structure::SideChain(sc) => walk(sc, k, &f),
    })
}

#[pyfunction]
#[pyo3(signature = (n, lattice, model = "sidechain", seed = 0))]
fn random_structure(n: usize, lattice: &PyLattice, model: &str, seed: u64) -> PyResult<PyStructure> {
    let kind: ModelKind = model.parse().map_err(err)?;
    Ok(PyStructure { inner: search::random_valid_structure(n, &lattice.inner, kind, seed).map_err(err)? })
}

#[pyfunction]
fn drmsd(a: &PyStructure, b: &PyStructure) -> PyResult<f64> {
    metrics::drmsd(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn crmsd(a: &PyStructure, b: &PyStructure) -> PyResult<f64> {
    metrics::crmsd(&a.inner, &b.inner).map_err(err)
}

/// Optimal proper rotation and translation taking `p` onto `q`.
#[pyfunction]
fn kabsch(p: Vec<[f64; 3]>, q: Vec<[f64; 3]>) -> PyResult<([[f64; 3]; 3], [f64; 3])> {
    let m = metrics::kabsch(&p, &q).map_err(err)?;
    let r = std::array::from_fn(|i| std::array::from_fn(|j| m.rotation[(i, j)]));
    Ok((r, [m.translation.x, m.translation.y, m.translation.z]))
}

#[pyfunction]
fn translate_to_hp(sequence: &str) -> PyResult<String> {
    Ok(HpMapping::default().translate(&crate::sequence(sequence)?).map_err(err)?.to_string())
}

fn fold_generic<C: LocalMoves>(
    seq: &Sequence,
    lattice: &Lattice,
    potential: &ContactPotential,
    settings: &FoldSettings,
) -> PyResult<Vec<(String, PyStructure, f64)>> {
    let o: FoldOutcome<C> = search::two_stage_fold(seq, lattice, &HpMapping::default(), potential, settings).map_err(err)?;
    let wrap = |c: &C| PyStructure { inner: c.clone().into_structure() };
    Ok(vec![
        ("hp".to_string(), wrap(&o.hp_structure), o.hp_trace.best_energy),
        ("g".to_string(), wrap(&o.gradient), o.gradient_energy()),
        ("r".to_string(), wrap(&o.refined), o.refined_energy()),
    ])
}

/// Two-stage folding. Returns `[(stage, structure, best_energy)]` for the
/// stages "hp", "g" and "r".
#[pyfunction]
#[pyo3(signature = (sequence, lattice, model = "sidechain", k = 3, seed = 0, potential = None, sweeps = None))]
#[allow(clippy::too_many_arguments)]
fn fold(
    py: Python<'_>,
    sequence: &str,
    lattice: &PyLattice,
    model: &str,
    k: usize,
    seed: u64,
    potential: Option<&PyPotential>,
    sweeps: Option<usize>,
) -> PyResult<Vec<(String, PyStructure, f64)>> {
    let seq = crate::sequence(sequence)?;
    let kind: ModelKind = model.parse().map_err(err)?;
    let mut schedule = AnnealSchedule::for_length(seq.len());
    if let Some(s) = sweeps {
        schedule.sweeps = s;
    }
    let settings = FoldSettings { k, hp_schedule: schedule, refine_schedule: schedule, seed };
    let pot = potential_or_hp(potential);
    let l = lattice.inner.clone();
    py.detach(move || match kind {
        ModelKind::Backbone => fold_generic::<BackboneStructure>(&seq, &l, &pot, &settings),
        ModelKind::SideChain => fold_generic::<SideChainStructure>(&seq, &l, &pot, &settings),
    })
}

#[pymodule]
fn pylatmove(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyStructure>()?;
    m.add_class::<PyPotential>()?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(count_neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_walk, m)?)?;
    m.add_function(wrap_pyfunction!(random_structure, m)?)?;
    m.add_function(wrap_pyfunction!(drmsd, m)?)?;
    m.add_function(wrap_pyfunction!(crmsd, m)?)?;
    m.add_function(wrap_pyfunction!(kabsch, m)?)?;
    m.add_function(wrap_pyfunction!(translate_to_hp, m)?)?;
    m.add_function(wrap_pyfunction!(fold, m)?)?;
    Ok(())
}
