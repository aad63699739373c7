//! Command-line front end for the entanglement toolkit.
//!
//! Every subcommand writes machine-readable CSV or JSON artifacts into
//! --out and prints a short summary. Runs are deterministic given --seed;
//! re-running with identical flags reproduces byte-identical file bodies.
//! Exit codes: 0 success, 2 argument error, 3 numerical-validation
//! failure (1 for plain I/O trouble).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use entangle_kit_core::bipartite;
use entangle_kit_core::dynamics::{
    ed_evolution, magnon_amplitudes, MagnonMode, MagnonSign,
};
use entangle_kit_core::fermions::{pfaffian, slater_normal_form, PairState};
use entangle_kit_core::free_fermion::{scaling_fit, FreeFermionChain};
use entangle_kit_core::itinerant::{
    extended_hubbard_scan, fermi_gas_entanglement_range, fermi_gas_two_spin_rdm,
};
use entangle_kit_core::linalg::{c, CMat};
use entangle_kit_core::multipartite::{
    bipartition_purities, ckw_residual, four_qubit_filters, geometric_measure, ghz_w_scan,
    n_tangle, pairwise_concurrence, three_tangle, GeometricOptions, RoofMode, RoofOptions,
};
use entangle_kit_core::spin_chain::{
    factorizing_field_formula, locate_factorizing_field, xy_factorizing_field, XyzChain,
};
use entangle_kit_core::state::{PureState, Subsystem};
use entangle_kit_core::Error as CoreError;

const STAMP: &str = concat!("# entangle-kit v", env!("CARGO_PKG_VERSION"));

// ---------------------------------------------------------------------------
// Failure → exit code
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Failure {
    Arg(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Arg(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Arg(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(m) | CoreError::Capacity(m) => Failure::Arg(m),
            CoreError::Validation(m) | CoreError::Numerical(m) => Failure::Numerical(m),
            CoreError::Io(e) => Failure::Io(e.to_string()),
            CoreError::Serde(e) => Failure::Numerical(format!("state file: {e}")),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn arg_err(msg: impl Into<String>) -> Failure {
    Failure::Arg(msg.into())
}

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "entangle-kit",
    version,
    about = "Entanglement measures, solvable spin chains, and itinerant-fermion scans"
)]
struct Cli {
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (fallback: ENTANGLE_KIT_THREADS, then logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Table format for scan outputs.
    #[arg(long, global = true, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate entanglement measures of a saved pure state.
    Measure(MeasureArgs),
    /// Ground-state concurrence scans of XY/XXZ rings.
    Groundstate(GroundstateArgs),
    /// Magnon wave-packet or full unitary evolution.
    Dynamics(DynamicsArgs),
    /// Finite-size scaling of the concurrence-derivative minimum.
    Scaling(ScalingArgs),
    /// Convex-roof scan over the GHZ/W mixture family.
    Roof(RoofArgs),
    /// Fermi-gas two-spin density matrix and entanglement range.
    Fermigas(FermigasArgs),
    /// Extended-Hubbard local entropy surface at half filling.
    Hubbard(HubbardArgs),
    /// Pfaffian and Slater-form analysis of antisymmetric pair states.
    Fermion(FermionArgs),
}

#[derive(Args)]
struct MeasureArgs {
    /// Pure-state JSON file.
    #[arg(long)]
    state: PathBuf,

    /// Include pairwise concurrences, bipartition cuts, and the geometric
    /// measure.
    #[arg(long)]
    all: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Xx,
    Xy,
    Ising,
    Xxz,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Model,

    /// Sites on the ring.
    #[arg(long = "N")]
    n: usize,

    /// Anisotropy γ (required for xy; fixed 0 for xx/xxz, 1 for ising).
    #[arg(long)]
    gamma: Option<f64>,

    /// Δ anisotropy of the z coupling (xxz only).
    #[arg(long)]
    delta: Option<f64>,

    /// Exchange coupling J.
    #[arg(long = "J", default_value_t = 1.0)]
    j: f64,

    /// Coupling range λ = J/(2h), as start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,

    /// Field range, as start:stop:step. Exactly one of --lambda/--h.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
}

impl ModelArgs {
    fn gamma(&self) -> CliResult<f64> {
        match self.model {
            Model::Xx | Model::Xxz => Ok(self.gamma.unwrap_or(0.0)),
            Model::Ising => Ok(self.gamma.unwrap_or(1.0)),
            Model::Xy => self
                .gamma
                .ok_or_else(|| arg_err("--model xy needs --gamma")),
        }
    }

    fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.0)
    }

    /// Field grid with the matching λ values.
    fn field_grid(&self) -> CliResult<Vec<(f64, f64)>> {
        match (&self.lambda, &self.h) {
            (Some(_), Some(_)) => Err(arg_err("pass either --lambda or --h, not both")),
            (None, None) => Err(arg_err("one of --lambda or --h is required")),
            (Some(r), None) => Ok(parse_range(r)?
                .into_iter()
                .map(|l| (self.j / (2.0 * l), l))
                .collect()),
            (None, Some(r)) => Ok(parse_range(r)?
                .into_iter()
                .map(|h| (h, self.j / (2.0 * h)))
                .collect()),
        }
    }
}

#[derive(Args)]
struct GroundstateArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Largest correlator distance for the concurrence profile.
    #[arg(long, default_value_t = 3)]
    rmax: usize,

    /// Force exact diagonalization (automatic for xxz).
    #[arg(long)]
    ed: bool,

    /// Also bisect for the field where the sector gap closes and report
    /// it against the closed forms.
    #[arg(long)]
    locate_factorizing: bool,
}

#[derive(Args)]
struct DynamicsArgs {
    #[command(subcommand)]
    engine: DynEngine,
}

#[derive(Subcommand)]
enum DynEngine {
    /// Single-magnon wave launched from a Bell pair of flips.
    Magnon(MagnonArgs),
    /// Full unitary evolution of a ring state.
    Ed(DynEdArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignFlag {
    Plus,
    Minus,
}

impl From<SignFlag> for MagnonSign {
    fn from(s: SignFlag) -> MagnonSign {
        match s {
            SignFlag::Plus => MagnonSign::Plus,
            SignFlag::Minus => MagnonSign::Minus,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeFlag {
    Finite,
    Bessel,
}

#[derive(Args)]
struct MagnonArgs {
    /// Sites on the ring.
    #[arg(long = "N")]
    n: usize,

    /// First source site.
    #[arg(long)]
    i: usize,

    /// Second source site.
    #[arg(long)]
    j: usize,

    #[arg(long, value_enum, default_value_t = SignFlag::Plus)]
    sign: SignFlag,

    /// Amplitude engine; bessel falls back to finite outside its window.
    #[arg(long, value_enum, default_value_t = ModeFlag::Finite)]
    mode: ModeFlag,

    /// Time grid in units of 1/J, as start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    t: String,

    /// Site pair to track, as n:m (repeatable; default: the source pair).
    #[arg(long = "pair")]
    pairs: Vec<String>,
}

#[derive(Args)]
struct DynEdArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Time grid, as start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    t: String,

    /// Initial state: "vacuum" or "magnon:I:J:plus|minus".
    #[arg(long, default_value = "vacuum")]
    initial: String,
}

#[derive(Args)]
struct ScalingArgs {
    /// Ring sizes, comma-separated.
    #[arg(long)]
    sizes: String,

    /// Model family (sizes beyond ED need the fermion engine; only ising
    /// is supported).
    #[arg(long, value_enum, default_value_t = Model::Ising)]
    model: Model,
}

#[derive(Args)]
struct RoofArgs {
    /// GHZ weight grid, as start:stop:step.
    #[arg(long, default_value = "0:1:0.05")]
    p: String,

    /// Proposal steps per restart.
    #[arg(long, default_value_t = 4000)]
    iterations: usize,

    /// Independent optimizer restarts.
    #[arg(long, default_value_t = 24)]
    restarts: usize,
}

#[derive(Args)]
struct FermigasArgs {
    /// Fermi momentum.
    #[arg(long, default_value_t = 1.0)]
    kf: f64,

    /// Space dimension, 2 or 3.
    #[arg(long)]
    d: u32,

    /// Distance grid, as start:stop:step (default spans 2π/kf).
    #[arg(long)]
    r: Option<String>,
}

#[derive(Args)]
struct HubbardArgs {
    /// Ring length (even, at most 6).
    #[arg(long = "L")]
    l: usize,

    /// Hopping amplitude.
    #[arg(long, default_value_t = 1.0)]
    t: f64,

    /// On-site coupling range, as start:stop:step.
    #[arg(long = "U", allow_hyphen_values = true)]
    u: String,

    /// Neighbour coupling range, as start:stop:step.
    #[arg(long = "V", default_value = "0", allow_hyphen_values = true)]
    v: String,
}

#[derive(Args)]
struct FermionArgs {
    /// Antisymmetric pair-state file: JSON {n_modes, entries:[{i,j,re,im}]}.
    #[arg(long)]
    omega: Option<PathBuf>,

    /// Analyze a random normalized pair state on this many modes instead.
    #[arg(long)]
    random: Option<usize>,
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

/// "start:stop:step" (inclusive) or a single number.
fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| -> CliResult<f64> {
        p.trim()
            .parse::<f64>()
            .map_err(|_| arg_err(format!("bad number '{p}' in range '{s}'")))
    };
    match parts.as_slice() {
        [one] => Ok(vec![num(one)?]),
        [start, stop, step] => {
            let (a, b, dt) = (num(start)?, num(stop)?, num(step)?);
            if dt <= 0.0 {
                return Err(arg_err(format!("range '{s}' needs a positive step")));
            }
            if b < a {
                return Err(arg_err(format!("range '{s}' runs backwards")));
            }
            let count = ((b - a) / dt + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| a + k as f64 * dt).collect())
        }
        _ => Err(arg_err(format!(
            "range '{s}' must be a number or start:stop:step"
        ))),
    }
}

fn parse_sizes(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| arg_err(format!("bad size '{p}'")))
        })
        .collect()
}

fn parse_pair(s: &str) -> CliResult<(usize, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if let [a, b] = parts.as_slice() {
        let pa = a
            .trim()
            .parse::<usize>()
            .map_err(|_| arg_err(format!("bad site '{a}'")))?;
        let pb = b
            .trim()
            .parse::<usize>()
            .map_err(|_| arg_err(format!("bad site '{b}'")))?;
        Ok((pa, pb))
    } else {
        Err(arg_err(format!("pair '{s}' must be n:m")))
    }
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{:.12e}", unsign_zero(*v)),
            Cell::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) => json!(unsign_zero(*v)),
            Cell::Text(v) => json!(v),
        }
    }
}

fn unsign_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path, stem: &str, format: TableFormat) -> CliResult<PathBuf> {
        match format {
            TableFormat::Csv => {
                let mut body = String::new();
                let _ = writeln!(body, "{STAMP}");
                let _ = writeln!(body, "{}", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(body, "{}", cells.join(","));
                }
                let path = dir.join(format!("{stem}.csv"));
                fs::write(&path, body)?;
                Ok(path)
            }
            TableFormat::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: serde_json::Map<String, serde_json::Value> = self
                            .columns
                            .iter()
                            .zip(row.iter())
                            .map(|(k, v)| (k.to_string(), v.json()))
                            .collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let doc = json!({ "version": env!("CARGO_PKG_VERSION"), "rows": rows });
                let path = dir.join(format!("{stem}.json"));
                fs::write(&path, serde_json::to_string_pretty(&doc).map_err(io_like)?)?;
                Ok(path)
            }
        }
    }
}

fn io_like(e: serde_json::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn write_json<T: Serialize>(dir: &Path, stem: &str, value: &T) -> CliResult<PathBuf> {
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(value).map_err(io_like)?)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("ENTANGLE_KIT_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // A failure here means a pool already exists; keep going with it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    fs::create_dir_all(&cli.out)?;
    match &cli.cmd {
        Cmd::Measure(a) => cmd_measure(cli, a),
        Cmd::Groundstate(a) => cmd_groundstate(cli, a),
        Cmd::Dynamics(a) => match &a.engine {
            DynEngine::Magnon(m) => cmd_dynamics_magnon(cli, m),
            DynEngine::Ed(e) => cmd_dynamics_ed(cli, e),
        },
        Cmd::Scaling(a) => cmd_scaling(cli, a),
        Cmd::Roof(a) => cmd_roof(cli, a),
        Cmd::Fermigas(a) => cmd_fermigas(cli, a),
        Cmd::Hubbard(a) => cmd_hubbard(cli, a),
        Cmd::Fermion(a) => cmd_fermion(cli, a),
    }
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MeasureReport {
    n_qubits: usize,
    site_entropy: Vec<f64>,
    tau1: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    three_tangle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ckw_residual: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filters: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    four_tangle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairwise_concurrence: Option<Vec<(usize, usize, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cut_tangles: Option<Vec<(String, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    geometric_measure: Option<f64>,
}

fn cmd_measure(cli: &Cli, args: &MeasureArgs) -> CliResult<()> {
    let state = PureState::load_json(&args.state)?;
    let n = state.n_qubits();

    let mut site_entropy = Vec::with_capacity(n);
    let mut tau1 = Vec::with_capacity(n);
    for q in 0..n {
        let rho = state.partial_trace(&Subsystem::new([q], n)?)?;
        site_entropy.push(bipartite::von_neumann_entropy(&rho));
        tau1.push(bipartite::one_tangle_of_site(&state, q)?);
    }

    let three = if n == 3 {
        Some(three_tangle(&state)?)
    } else {
        None
    };
    let ckw = if n == 3 {
        let mut v = Vec::new();
        for q in 0..3 {
            v.push(ckw_residual(&state, q)?);
        }
        Some(v)
    } else {
        None
    };
    let filters = if n == 4 {
        let f = four_qubit_filters(&state)?;
        Some([f.f1, f.f2, f.f3])
    } else {
        None
    };
    let four = if n == 4 { Some(n_tangle(&state)?) } else { None };

    let pairwise = if args.all && n >= 2 {
        let mut v = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                v.push((i, j, pairwise_concurrence(&state, i, j)?));
            }
        }
        Some(v)
    } else {
        None
    };
    let cuts = if args.all && n >= 2 {
        let purities = bipartition_purities(&state)?;
        Some(
            purities
                .into_iter()
                .map(|p| {
                    let label = p
                        .part
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join("+");
                    (label, p.tangle)
                })
                .collect(),
        )
    } else {
        None
    };
    let geometric = if args.all && n <= 10 {
        let opts = GeometricOptions {
            seed: cli.seed,
            ..GeometricOptions::default()
        };
        Some(geometric_measure(&state, &opts)?.value)
    } else {
        None
    };

    let report = MeasureReport {
        n_qubits: n,
        site_entropy,
        tau1,
        three_tangle: three,
        ckw_residual: ckw,
        filters,
        four_tangle: four,
        pairwise_concurrence: pairwise,
        cut_tangles: cuts,
        geometric_measure: geometric,
    };
    let path = write_json(&cli.out, "measure", &report)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// groundstate
// ---------------------------------------------------------------------------

fn cmd_groundstate(cli: &Cli, args: &GroundstateArgs) -> CliResult<()> {
    let gamma = args.model.gamma()?;
    let delta = args.model.delta();
    let grid = args.model.field_grid()?;
    let n = args.model.n;
    let j = args.model.j;
    let use_ed = args.ed || args.model.model == Model::Xxz || delta != 0.0;

    if use_ed {
        let rows: Vec<CliResult<Vec<Cell>>> = grid
            .par_iter()
            .map(|&(h, lambda)| {
                let chain = XyzChain::new(n, j, gamma, delta, h)?;
                let bundle = chain.ground_bundle()?;
                let mut c1 = 0.0f64;
                let mut cmax = 0.0f64;
                for a in 0..n {
                    for b in a + 1..n {
                        let rho = bundle.mixed_two_site(a, b)?;
                        let cab = bipartite::concurrence(&rho)?;
                        if (b + n - a) % n == 1 || (a + n - b) % n == 1 {
                            c1 = c1.max(cab);
                        }
                        cmax = cmax.max(cab);
                    }
                }
                Ok(vec![
                    Cell::Num(h),
                    Cell::Num(lambda),
                    Cell::Num(c1),
                    Cell::Num(cmax),
                    Cell::Num(bundle.energy_even),
                    Cell::Num(bundle.energy_odd),
                ])
            })
            .collect();
        let mut table = Table::new(vec![
            "h",
            "lambda",
            "c_nn",
            "c_max_all_pairs",
            "energy_even",
            "energy_odd",
        ]);
        for row in rows {
            table.push(row?);
        }
        let path = table.write(&cli.out, "groundstate_ed", cli.format)?;
        println!("wrote {}", path.display());

        if args.locate_factorizing {
            let lo = grid.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
            let hi = grid.iter().map(|g| g.0).fold(0.0f64, f64::max);
            let h_star = locate_factorizing_field(n, j, gamma, delta, lo, hi)?;
            let chain = XyzChain::new(n, j, gamma, delta, h_star)?;
            let (prod_a, _) = chain.ground_bundle()?.factorized_products()?;
            let mut max_c: f64 = 0.0;
            for a in 0..n {
                for b in a + 1..n {
                    let rho = prod_a.partial_trace(&Subsystem::new([a, b], n)?)?;
                    max_c = max_c.max(bipartite::concurrence(&rho)?);
                }
            }
            let doc = json!({
                "h_star": h_star,
                "closed_form_general": factorizing_field_formula(j, gamma, delta),
                "closed_form_xy": xy_factorizing_field(j, gamma),
                "product_max_pair_concurrence": max_c,
            });
            let path = write_json(&cli.out, "factorizing", &doc)?;
            println!("wrote {}", path.display());
            println!("h* = {h_star:.12}");
        }
        return Ok(());
    }

    if args.locate_factorizing {
        return Err(arg_err("--locate-factorizing needs the ED engine (--ed)"));
    }
    let rows: Vec<CliResult<Vec<Vec<Cell>>>> = grid
        .par_iter()
        .map(|&(h, lambda)| {
            let chain = FreeFermionChain::new(n, j, gamma, h)?;
            let profile = chain.concurrence_profile(args.rmax)?;
            Ok(profile
                .into_iter()
                .enumerate()
                .map(|(k, cval)| {
                    vec![
                        Cell::Num(lambda),
                        Cell::Num(h),
                        Cell::Int(k as i64 + 1),
                        Cell::Num(cval),
                    ]
                })
                .collect())
        })
        .collect();
    let mut table = Table::new(vec!["lambda", "h", "r", "concurrence"]);
    for group in rows {
        for row in group? {
            table.push(row);
        }
    }
    let path = table.write(&cli.out, "groundstate", cli.format)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------------

fn cmd_dynamics_magnon(cli: &Cli, args: &MagnonArgs) -> CliResult<()> {
    let times = parse_range(&args.t)?;
    let pairs: Vec<(usize, usize)> = if args.pairs.is_empty() {
        vec![(args.i, args.j)]
    } else {
        args.pairs
            .iter()
            .map(|p| parse_pair(p))
            .collect::<CliResult<_>>()?
    };
    let mode = match args.mode {
        ModeFlag::Finite => MagnonMode::Finite,
        ModeFlag::Bessel => MagnonMode::Bessel,
    };
    let mut table = Table::new(vec!["t", "n", "m", "concurrence", "entropy", "mode"]);
    let mut warned = false;
    for &t in &times {
        let amps = magnon_amplitudes(args.n, args.i, args.j, args.sign.into(), t, mode)?;
        if amps.mode_used != amps.mode_requested && !warned {
            eprintln!(
                "warning: t = {t} leaves the Bessel validity window; falling back to the finite sum"
            );
            warned = true;
        }
        let mode_name = match amps.mode_used {
            MagnonMode::Finite => "finite",
            MagnonMode::Bessel => "bessel",
        };
        for &(a, b) in &pairs {
            let pd = amps.pair(a, b)?;
            table.push(vec![
                Cell::Num(t),
                Cell::Int(a as i64),
                Cell::Int(b as i64),
                Cell::Num(pd.concurrence),
                Cell::Num(pd.two_site_entropy),
                Cell::Text(mode_name.to_string()),
            ]);
        }
    }
    let path = table.write(&cli.out, "dynamics_magnon", cli.format)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_dynamics_ed(cli: &Cli, args: &DynEdArgs) -> CliResult<()> {
    let gamma = args.model.gamma()?;
    let delta = args.model.delta();
    let grid = args.model.field_grid()?;
    if grid.len() != 1 {
        return Err(arg_err("evolution needs a single --lambda or --h value"));
    }
    let (h, _) = grid[0];
    let n = args.model.n;
    let chain = XyzChain::new(n, args.model.j, gamma, delta, h)?;
    let times = parse_range(&args.t)?;

    let state0 = if args.initial == "vacuum" {
        PureState::basis_state(n, 0)?
    } else if let Some(rest) = args.initial.strip_prefix("magnon:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(arg_err("--initial magnon:I:J:plus|minus"));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| arg_err("bad site in --initial"))?;
        let jj: usize = parts[1]
            .parse()
            .map_err(|_| arg_err("bad site in --initial"))?;
        let sign = match parts[2] {
            "plus" => MagnonSign::Plus,
            "minus" => MagnonSign::Minus,
            _ => return Err(arg_err("--initial sign must be plus or minus")),
        };
        magnon_amplitudes(n, i, jj, sign, 0.0, MagnonMode::Finite)?.to_state()?
    } else {
        return Err(arg_err("--initial must be 'vacuum' or 'magnon:I:J:SIGN'"));
    };

    let series = ed_evolution(&chain, &state0, &times)?;
    let mut pair_table = Table::new(vec!["t", "i", "j", "concurrence"]);
    let mut site_table = Table::new(vec!["t", "i", "tau1", "residual"]);
    let mut avg_residual = 0.0;
    let mut avg_pair_tangle = 0.0;
    for point in &series {
        for &(i, j, cv) in &point.pairs {
            pair_table.push(vec![
                Cell::Num(point.t),
                Cell::Int(i as i64),
                Cell::Int(j as i64),
                Cell::Num(cv),
            ]);
        }
        for i in 0..n {
            site_table.push(vec![
                Cell::Num(point.t),
                Cell::Int(i as i64),
                Cell::Num(point.tau1[i]),
                Cell::Num(point.residual[i]),
            ]);
        }
        avg_residual += point.total_residual();
        avg_pair_tangle += point.total_pair_tangle();
    }
    avg_residual /= series.len().max(1) as f64;
    avg_pair_tangle /= series.len().max(1) as f64;

    let p1 = pair_table.write(&cli.out, "dynamics_pairs", cli.format)?;
    let p2 = site_table.write(&cli.out, "dynamics_sites", cli.format)?;
    println!("wrote {}", p1.display());
    println!("wrote {}", p2.display());
    println!(
        "time-averaged residual tangle {avg_residual:.6e}, pairwise tangle {avg_pair_tangle:.6e}"
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// scaling
// ---------------------------------------------------------------------------

fn cmd_scaling(cli: &Cli, args: &ScalingArgs) -> CliResult<()> {
    if args.model != Model::Ising {
        return Err(arg_err("scaling supports --model ising"));
    }
    let sizes = parse_sizes(&args.sizes)?;
    let fit = scaling_fit(&sizes)?;
    let mut table = Table::new(vec!["n", "lambda_m", "depth"]);
    for &(n, lambda_m, depth) in &fit.points {
        table.push(vec![
            Cell::Int(n as i64),
            Cell::Num(lambda_m),
            Cell::Num(depth),
        ]);
    }
    let p1 = table.write(&cli.out, "scaling_points", cli.format)?;
    let doc = json!({
        "theta": fit.theta,
        "depth_slope": fit.depth_slope,
        "nu_assumed": fit.nu_assumed,
    });
    let p2 = write_json(&cli.out, "scaling_fit", &doc)?;
    println!("wrote {}", p1.display());
    println!("wrote {}", p2.display());
    println!(
        "theta = {:.4}, depth slope = {:.4} (nu assumed {:.1})",
        fit.theta, fit.depth_slope, fit.nu_assumed
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// roof
// ---------------------------------------------------------------------------

fn cmd_roof(cli: &Cli, args: &RoofArgs) -> CliResult<()> {
    let ps = parse_range(&args.p)?;
    let opts = RoofOptions {
        iterations: args.iterations,
        restarts: args.restarts,
        ensemble_size: 4,
        seed: cli.seed,
        mode: RoofMode::Minimize,
    };
    let points = ghz_w_scan(&ps, &opts)?;
    let mut table = Table::new(vec!["p", "tau1", "c_pair", "tau3_roof"]);
    for pt in &points {
        table.push(vec![
            Cell::Num(pt.p),
            Cell::Num(pt.tau1),
            Cell::Num(pt.pairwise_concurrence),
            Cell::Num(pt.tau3_roof),
        ]);
    }
    let path = table.write(&cli.out, "roof_ghzw", cli.format)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fermigas
// ---------------------------------------------------------------------------

fn cmd_fermigas(cli: &Cli, args: &FermigasArgs) -> CliResult<()> {
    if args.kf <= 0.0 {
        return Err(arg_err("--kf must be positive"));
    }
    let rs = match &args.r {
        Some(r) => parse_range(r)?,
        None => {
            let hi = 2.0 * std::f64::consts::PI / args.kf;
            (0..=240).map(|k| hi * k as f64 / 240.0).collect()
        }
    };
    let mut table = Table::new(vec!["r_kf_over_pi", "f_sq", "entangled"]);
    for &r in &rs {
        let rdm = fermi_gas_two_spin_rdm(r, args.kf, args.d)?;
        table.push(vec![
            Cell::Num(r * args.kf / std::f64::consts::PI),
            Cell::Num(rdm.f * rdm.f),
            Cell::Int(rdm.entangled as i64),
        ]);
    }
    let p1 = table.write(&cli.out, "fermigas", cli.format)?;
    let d0 = fermi_gas_entanglement_range(args.kf, args.d)?;
    let doc = json!({
        "d": args.d,
        "kf": args.kf,
        "d0": d0,
        "d0_kf_over_pi": d0 * args.kf / std::f64::consts::PI,
    });
    let p2 = write_json(&cli.out, "fermigas_range", &doc)?;
    println!("wrote {}", p1.display());
    println!("wrote {}", p2.display());
    println!(
        "entanglement range d0 = {:.8} ({:.4} in units of pi/kf)",
        d0,
        d0 * args.kf / std::f64::consts::PI
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// hubbard
// ---------------------------------------------------------------------------

fn cmd_hubbard(cli: &Cli, args: &HubbardArgs) -> CliResult<()> {
    let us = parse_range(&args.u)?;
    let vs = parse_range(&args.v)?;
    let points = extended_hubbard_scan(args.l, args.t, &us, &vs)?;
    let mut table = Table::new(vec!["u", "v", "entropy"]);
    for p in &points {
        table.push(vec![Cell::Num(p.u), Cell::Num(p.v), Cell::Num(p.entropy)]);
    }
    let path = table.write(&cli.out, "hubbard_entropy", cli.format)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fermion
// ---------------------------------------------------------------------------

#[derive(serde::Deserialize)]
struct OmegaFile {
    n_modes: usize,
    entries: Vec<OmegaEntry>,
}

#[derive(serde::Deserialize)]
struct OmegaEntry {
    i: usize,
    j: usize,
    re: f64,
    im: f64,
}

fn cmd_fermion(cli: &Cli, args: &FermionArgs) -> CliResult<()> {
    let omega: CMat = match (&args.omega, args.random) {
        (Some(_), Some(_)) => return Err(arg_err("pass either --omega or --random")),
        (None, None) => return Err(arg_err("one of --omega or --random is required")),
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            let file: OmegaFile =
                serde_json::from_str(&text).map_err(|e| arg_err(format!("omega file: {e}")))?;
            let m = file.n_modes;
            let mut omega = CMat::zeros(m, m);
            for e in &file.entries {
                if e.i >= m || e.j >= m || e.i == e.j {
                    return Err(arg_err("omega entries need distinct indices below n_modes"));
                }
                omega[(e.i, e.j)] = c(e.re, e.im);
                omega[(e.j, e.i)] = c(-e.re, -e.im);
            }
            omega
        }
        (None, Some(m)) => {
            if m < 2 || m % 2 != 0 {
                return Err(arg_err("--random needs an even mode count >= 2"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let normal = StandardNormal;
            let mut omega = CMat::zeros(m, m);
            for i in 0..m {
                for j in i + 1..m {
                    let v = c(normal.sample(&mut rng), normal.sample(&mut rng));
                    omega[(i, j)] = v;
                    omega[(j, i)] = -v;
                }
            }
            omega
        }
    };

    let state = PairState::normalized(omega)?;
    let omega = state.omega().clone();
    let pf = pfaffian(&omega)?;
    let form = slater_normal_form(&omega)?;
    let values: Vec<f64> = form.values.clone();
    let rank = form.rank(1e-10);
    let concurrence = if omega.nrows() == 4 {
        Some(state.concurrence()?)
    } else {
        None
    };
    let doc = json!({
        "n_modes": omega.nrows(),
        "pfaffian": [pf.re, pf.im],
        "slater_values": values,
        "slater_rank": rank,
        "concurrence": concurrence,
    });
    let path = write_json(&cli.out, "fermion_report", &doc)?;
    println!("wrote {}", path.display());
    if let Some(cval) = concurrence {
        println!("pair concurrence {cval:.8}");
    }
    println!("slater rank {rank}");
    Ok(())
}

// ---------------------------------------------------------------------------
// Unit tests for the argument and table helpers
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_single_value_and_grid() {
        assert_eq!(parse_range("0.5").unwrap(), vec![0.5]);
        let grid = parse_range("0:1:0.25").unwrap();
        assert_eq!(grid.len(), 5);
        assert!((grid[4] - 1.0).abs() < 1e-12);
        // Endpoint inclusion survives steps that do not divide evenly.
        assert_eq!(parse_range("0:1:0.3").unwrap().len(), 4);
        // Negative starts are a supported case (coupling scans cross zero).
        let signed = parse_range("-4:4:2").unwrap();
        assert_eq!(signed, vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
    }

    #[test]
    fn range_rejects_malformed_inputs() {
        for bad in ["", "1:2", "1:2:3:4", "a:1:1", "0:1:0", "0:1:-1", "2:1:1"] {
            assert!(parse_range(bad).is_err(), "expected rejection of '{bad}'");
        }
    }

    #[test]
    fn sizes_and_pairs_parse() {
        assert_eq!(parse_sizes("50, 100,150").unwrap(), vec![50, 100, 150]);
        assert!(parse_sizes("50,x").is_err());
        assert_eq!(parse_pair("30:33").unwrap(), (30, 33));
        assert!(parse_pair("30").is_err());
        assert!(parse_pair("30:33:36").is_err());
    }

    #[test]
    fn numeric_cells_never_print_negative_zero() {
        assert_eq!(Cell::Num(-0.0).csv(), Cell::Num(0.0).csv());
        assert!(!Cell::Num(-0.0).csv().starts_with('-'));
        assert_eq!(Cell::Num(-1.5).csv(), "-1.500000000000e0");
        assert_eq!(Cell::Int(-3).csv(), "-3");
    }

    #[test]
    fn failure_exit_codes_are_stable() {
        assert_eq!(Failure::Io("x".into()).code(), 1);
        assert_eq!(arg_err("x").code(), 2);
        assert_eq!(Failure::Numerical("x".into()).code(), 3);
    }
}
