//! `latmove`: enumerate strict k-local move neighborhoods, evaluate
//! energies, run gradient walks and two-stage folding, and compare
//! structures.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 internal invariant
//! violation.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latmove::io::{format_structure, read_hp_mapping, read_structure};
use latmove::metrics::{crmsd, drmsd};
use latmove::model::{EnergyError, SequenceError};
use latmove::moves::{enumerate_neighbors, LocalMoves};
use latmove::search::{
    fold_restarts, gradient_walk, random_valid_structure, AnnealSchedule, FoldOutcome, FoldSettings, FoldTrace,
    DEFAULT_K,
};
use latmove::{
    BackboneStructure, Conformation, ContactPotential, EnergyFunction, HpMapping, Lattice, ModelKind, Sequence,
    SideChainStructure, Structure,
};

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Invariant(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "latmove", version, about = "Strict k-local moves for lattice protein models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// `key = value` file with defaults for the options below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Lattice: SQ, CUB or FCC.
    #[arg(long, global = true)]
    lattice: Option<String>,
    /// Model: backbone or sidechain.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Maximal move interval length.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Contact potential file, or `hp` for the built-in H/P potential.
    #[arg(long, global = true)]
    potential: Option<String>,
    /// H/P mapping file with `X = H|P` lines.
    #[arg(long, global = true)]
    hpmap: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Independent folding runs with seeds seed, seed+1, ...
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true)]
    sweeps: Option<usize>,
    #[arg(long, global = true)]
    refine_sweeps: Option<usize>,
    #[arg(long, global = true)]
    steps_per_sweep: Option<usize>,
    #[arg(long, global = true)]
    t_start: Option<f64>,
    #[arg(long, global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    cooling: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the strict k-local neighborhood of a structure.
    Neighbors {
        structure: PathBuf,
        /// Print only the number of neighbors.
        #[arg(long)]
        count_only: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Energy of a structure.
    Energy {
        structure: PathBuf,
        /// Skip chain-adjacent pairs (backbone model).
        #[arg(long)]
        exclude_adjacent: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Gradient walk from a structure to a local minimum.
    Walk {
        structure: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Two-stage folding: H/P annealing, then refinement.
    Fold {
        sequence: String,
        #[command(flatten)]
        common: Common,
    },
    /// dRMSD and cRMSD between two structures.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Random valid structure for a sequence, written to stdout.
    Randstruct {
        sequence: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Options after merging command line, config file and defaults.
struct Resolved {
    lattice: Lattice,
    model: ModelKind,
    k: usize,
    potential: Option<String>,
    hpmap: Option<PathBuf>,
    seed: u64,
    out_dir: PathBuf,
    restarts: usize,
    sweeps: Option<usize>,
    refine_sweeps: Option<usize>,
    steps_per_sweep: Option<usize>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    cooling: Option<f64>,
}

impl Resolved {
    fn new(c: Common) -> CliResult<Self> {
        let file = match &c.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let lattice_name = file.pick(c.lattice, "lattice", "FCC".to_string())?;
        let model_name = file.pick(c.model, "model", "sidechain".to_string())?;
        let k = file.pick(c.k, "k", DEFAULT_K)?;
        if k == 0 {
            return Err(CliError::Input("k must be at least 1".into()));
        }
        Ok(Resolved {
            lattice: Lattice::from_name(&lattice_name).map_err(CliError::input)?,
            model: model_name.parse().map_err(CliError::input)?,
            k,
            potential: file.pick_opt(c.potential, "potential")?,
            hpmap: file.pick_opt(c.hpmap, "hpmap")?,
            seed: file.pick(c.seed, "seed", 0)?,
            out_dir: file.pick(c.out_dir, "out_dir", PathBuf::from("."))?,
            restarts: file.pick(c.restarts, "restarts", 1)?,
            sweeps: file.pick_opt(c.sweeps, "sweeps")?,
            refine_sweeps: file.pick_opt(c.refine_sweeps, "refine_sweeps")?,
            steps_per_sweep: file.pick_opt(c.steps_per_sweep, "steps_per_sweep")?,
            t_start: file.pick_opt(c.t_start, "t_start")?,
            t_end: file.pick_opt(c.t_end, "t_end")?,
            cooling: file.pick_opt(c.cooling, "cooling")?,
        })
    }

    fn potential(&self) -> CliResult<ContactPotential> {
        match self.potential.as_deref() {
            None => Ok(ContactPotential::hp()),
            Some(s) if s.eq_ignore_ascii_case("hp") => Ok(ContactPotential::hp()),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?;
                ContactPotential::parse(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
            }
        }
    }

    fn mapping(&self) -> CliResult<HpMapping> {
        match &self.hpmap {
            None => Ok(HpMapping::default()),
            Some(path) => {
                let f = fs::File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
                read_hp_mapping(io::BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
            }
        }
    }

    /// Energy function for `seq`; sequences the potential does not cover
    /// are scored through their H/P translation.
    fn energy_function(&self, seq: &Sequence) -> CliResult<EnergyFunction> {
        let potential = self.potential()?;
        match EnergyFunction::new(seq, &potential) {
            Err(EnergyError::UnknownSymbol { .. }) => {
                let hp = self.mapping()?.translate(seq).map_err(|e: SequenceError| CliError::input(e))?;
                EnergyFunction::new(&hp, &potential).map_err(CliError::input)
            }
            other => other.map_err(CliError::input),
        }
    }

    fn schedule(&self, n: usize, sweeps: Option<usize>) -> AnnealSchedule {
        let d = AnnealSchedule::for_length(n);
        AnnealSchedule {
            t_start: self.t_start.unwrap_or(d.t_start),
            t_end: self.t_end.unwrap_or(d.t_end),
            cooling: self.cooling.unwrap_or(d.cooling),
            sweeps: sweeps.unwrap_or(d.sweeps),
            steps_per_sweep: self.steps_per_sweep.unwrap_or(d.steps_per_sweep),
        }
    }
}

fn load_structure(path: &Path) -> CliResult<(Structure, Sequence)> {
    let f = fs::File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    read_structure(io::BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn checked<C: Conformation>(c: &C, what: &str) -> CliResult<()> {
    c.validate().map_err(|e| CliError::Invariant(format!("{what} failed validation: {e}")))
}

fn format_residue<C: Conformation>(r: C::Residue) -> String {
    C::residue_points(r).map(|p| p.to_string()).collect::<Vec<_>>().join("/")
}

fn list_neighbors<C: LocalMoves>(
    c: &C,
    k: usize,
    f: &EnergyFunction,
    count_only: bool,
    out: &mut impl Write,
) -> CliResult<()> {
    let io_err = |e: io::Error| CliError::Input(format!("write failed: {e}"));
    if count_only {
        writeln!(out, "{}", enumerate_neighbors(c, k).count()).map_err(io_err)?;
        return Ok(());
    }
    let mut line = String::new();
    for (m, next) in enumerate_neighbors(c, k) {
        let e = f.evaluate(&next).map_err(|e| CliError::Invariant(e.to_string()))?;
        line.clear();
        let _ = write!(line, "k'={} s={} E={:.4}", m.interval.len, m.interval.start, e);
        for r in &m.residues {
            line.push(' ');
            line.push_str(&format_residue::<C>(*r));
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}

fn cmd_neighbors(path: &Path, count_only: bool, opts: &Resolved) -> CliResult<()> {
    let (s, seq) = load_structure(path)?;
    let f = opts.energy_function(&seq)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match &s {
        Structure::Backbone(b) => list_neighbors(b, opts.k, &f, count_only, &mut out)?,
        Structure::SideChain(sc) => list_neighbors(sc, opts.k, &f, count_only, &mut out)?,
    }
    out.flush().map_err(|e| CliError::Input(format!("write failed: {e}")))
}

fn cmd_energy(path: &Path, exclude: bool, opts: &Resolved) -> CliResult<()> {
    let (s, seq) = load_structure(path)?;
    let f = opts.energy_function(&seq)?.exclude_chain_adjacent(exclude);
    let e = f.evaluate_structure(&s).map_err(CliError::input)?;
    println!("{e:.4}");
    Ok(())
}

fn summary_table(rows: &[(&str, f64, usize)]) -> String {
    let mut out = String::from("stage best_energy steps\n");
    for (stage, e, steps) in rows {
        let _ = writeln!(out, "{stage} {e:.4} {steps}");
    }
    out
}

fn walk_generic<C: LocalMoves>(c: &C, seq: &Sequence, opts: &Resolved) -> CliResult<String> {
    let f = opts.energy_function(seq)?;
    let (end, trace) = gradient_walk(c, opts.k, &f).map_err(CliError::input)?;
    checked(&end, "walk result")?;
    fs::create_dir_all(&opts.out_dir).map_err(CliError::input)?;
    write_file(&opts.out_dir.join("walk.struct"), &format_structure(&end.clone().into_structure(), seq))?;
    write_file(&opts.out_dir.join("walk.trace"), &trace.to_table())?;
    Ok(summary_table(&[("walk", trace.best_energy, trace.steps.len())]))
}

fn cmd_walk(path: &Path, opts: &Resolved) -> CliResult<()> {
    let (s, seq) = load_structure(path)?;
    let table = match &s {
        Structure::Backbone(b) => walk_generic(b, &seq, opts)?,
        Structure::SideChain(sc) => walk_generic(sc, &seq, opts)?,
    };
    print!("{table}");
    Ok(())
}

fn parse_sequence(s: &str) -> CliResult<Sequence> {
    Sequence::infer(s).map_err(CliError::input)
}

fn fold_generic<C: LocalMoves>(seq: &Sequence, opts: &Resolved) -> CliResult<String> {
    let potential = opts.potential()?;
    let mapping = opts.mapping()?;
    let settings = FoldSettings {
        k: opts.k,
        hp_schedule: opts.schedule(seq.len(), opts.sweeps),
        refine_schedule: opts.schedule(seq.len(), opts.refine_sweeps.or(opts.sweeps)),
        seed: opts.seed,
    };
    let (outcomes, best) = fold_restarts::<C>(seq, &opts.lattice, &mapping, &potential, &settings, opts.restarts)
        .map_err(CliError::input)?;
    let o: &FoldOutcome<C> = &outcomes[best];
    for (c, what) in [(&o.start, "start"), (&o.hp_structure, "C_HP"), (&o.gradient, "g(C_HP)"), (&o.refined, "r(C_HP)")] {
        checked(c, what)?;
    }
    let dir = &opts.out_dir;
    fs::create_dir_all(dir).map_err(CliError::input)?;
    let save = |name: &str, c: &C| write_file(&dir.join(name), &format_structure(&c.clone().into_structure(), seq));
    save("c_hp.struct", &o.hp_structure)?;
    save("g.struct", &o.gradient)?;
    save("r.struct", &o.refined)?;
    let traces: [(&str, &FoldTrace<C>); 4] = [
        ("hp.trace", &o.hp_trace),
        ("g.trace", &o.gradient_trace),
        ("r_anneal.trace", &o.refine_trace),
        ("r_walk.trace", &o.refine_walk_trace),
    ];
    for (name, t) in traces {
        write_file(&dir.join(name), &t.to_table())?;
    }
    let table = summary_table(&[
        ("hp", o.hp_trace.best_energy, o.hp_trace.steps.len()),
        ("g", o.gradient_energy(), o.gradient_trace.steps.len()),
        ("r", o.refined_energy(), o.refine_trace.steps.len() + o.refine_walk_trace.steps.len()),
    ]);
    let mut summary = format!("# seed {}\n# hp_sequence {}\n", o.seed, o.hp_sequence);
    summary.push_str(&table);
    write_file(&dir.join("summary.txt"), &summary)?;
    Ok(table)
}

fn cmd_fold(sequence: &str, opts: &Resolved) -> CliResult<()> {
    let seq = parse_sequence(sequence)?;
    let table = match opts.model {
        ModelKind::Backbone => fold_generic::<BackboneStructure>(&seq, opts)?,
        ModelKind::SideChain => fold_generic::<SideChainStructure>(&seq, opts)?,
    };
    print!("{table}");
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path) -> CliResult<()> {
    let (sa, _) = load_structure(a)?;
    let (sb, _) = load_structure(b)?;
    let d = drmsd(&sa, &sb).map_err(CliError::input)?;
    let c = crmsd(&sa, &sb).map_err(CliError::input)?;
    println!("dRMSD {d:.4} A");
    println!("cRMSD {c:.4} A");
    Ok(())
}

fn cmd_randstruct(sequence: &str, opts: &Resolved) -> CliResult<()> {
    let seq = parse_sequence(sequence)?;
    let s = random_valid_structure(seq.len(), &opts.lattice, opts.model, opts.seed).map_err(CliError::input)?;
    s.validate().map_err(|e| CliError::Invariant(format!("random structure failed validation: {e}")))?;
    print!("{}", format_structure(&s, &seq));
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Neighbors { structure, count_only, common } => {
            cmd_neighbors(&structure, count_only, &Resolved::new(common)?)
        }
        Command::Energy { structure, exclude_adjacent, common } => {
            cmd_energy(&structure, exclude_adjacent, &Resolved::new(common)?)
        }
        Command::Walk { structure, common } => cmd_walk(&structure, &Resolved::new(common)?),
        Command::Fold { sequence, common } => cmd_fold(&sequence, &Resolved::new(common)?),
        Command::Compare { first, second, common } => {
            Resolved::new(common)?;
            cmd_compare(&first, &second)
        }
        Command::Randstruct { sequence, common } => cmd_randstruct(&sequence, &Resolved::new(common)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
