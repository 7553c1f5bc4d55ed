//! `qudit-fold` command-line front end.

pub mod bench;
pub mod family;
pub mod plan;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{decode_mat2, decode_square, Circuit, CircuitError, Gate};
use crate::sim::{oracle, verify, OracleKind, SimError, VerifyOptions};
use crate::synth::{synth_cnu, synthesize, ControlledBlock, GateSpec, SynthError};
use crate::topology::{NodeId, Purpose, TopologyError, TopologyFile, TopologyFileError};
use family::{FamilyError, TopologyFamily};
use plan::PlannedTopology;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qudit-fold", version, about = "Topology-aware multi-controlled qudit gate synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spanning tree, root, addresses and dimensions for a topology.
    Plan(PlanArgs),
    /// Synthesize a multi-controlled gate and write the circuit.
    Synth(SynthArgs),
    /// Check a circuit file against a gate oracle.
    Verify(VerifyArgs),
    /// C^{N-1}Z count and depth sweep over topology families.
    Bench(BenchArgs),
    /// Apply lowering passes to a circuit file.
    Lower(LowerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GateKind {
    Cnz,
    Cnx,
    Cnztheta,
    Cnu,
    CnuMulti,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// Topology document (JSON with `nodes` and `edges`).
    #[arg(long, value_name = "FILE", conflicts_with = "family", required_unless_present = "family")]
    pub topology: Option<PathBuf>,
    /// Built-in family, e.g. `line(5)`, `grid(3,3)`, `honeycomb(2,4)`, `kary(2,3)`.
    #[arg(long, value_name = "NAME(params)")]
    pub family: Option<String>,
    /// Root node id; defaults to the tree center.
    #[arg(long, value_name = "ID")]
    pub root: Option<u32>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[arg(long, value_enum, default_value = "cnz")]
    pub gate: GateKind,
    /// Target node id for `cnx` and `cnu`.
    #[arg(long, value_name = "ID")]
    pub target: Option<u32>,
    /// Phase for `cnztheta`: a number, or `pi`, `pi/2`, `2pi/3`, ...
    #[arg(long, value_name = "FLOAT", allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// 2×2 unitary for `cnu`: four `[re, im]` pairs, row-major.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Block for `cnu-multi`: `{"target_dims", "matrix", "cost"}`.
    #[arg(long, value_name = "FILE")]
    pub block: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Dimension rule to plan for.
    #[arg(long, value_enum, default_value = "cnz")]
    pub gate: GateKind,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[command(flatten)]
    pub gate: GateArgs,
    /// Replace CX by H·CZ·H.
    #[arg(long)]
    pub lower_cx: bool,
    /// Replace CZ_θ by two CZ and single-qudit phases.
    #[arg(long = "lower-cztheta")]
    pub lower_cz_theta: bool,
    /// Circuit file to write; the gate list is printed when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Circuit file.
    pub circuit: PathBuf,
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long, default_value_t = 1e-10, value_name = "FLOAT")]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Families to sweep: `line`, `ring`, `star`, `grid(w)`, `honeycomb(rows)`,
    /// `kary(k)`, or a fully specified instance such as `grid(3,4)`.
    #[arg(long, value_name = "NAME", value_delimiter = ',')]
    pub family: Vec<String>,
    /// Node counts: `lo..hi` (inclusive) or a comma list.
    #[arg(long = "n", value_name = "RANGE", default_value = "2..12")]
    pub sizes: String,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LowerArgs {
    /// Circuit file.
    pub circuit: PathBuf,
    #[arg(long)]
    pub lower_cx: bool,
    #[arg(long = "lower-cztheta")]
    pub lower_cz_theta: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    TopologyFile(#[from] TopologyFileError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error("infeasible dimensions:\n  {}", .0.join("\n  "))]
    Infeasible(Vec<String>),
}

fn topology_exit(e: &TopologyError) -> i32 {
    match e {
        TopologyError::Disconnected { .. } | TopologyError::NotATree(_) => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Topology(e) => topology_exit(e),
            CliError::TopologyFile(TopologyFileError::Invalid { source, .. }) => topology_exit(source),
            CliError::Synth(
                SynthError::Infeasible { .. } | SynthError::TooFewNodes(_) | SynthError::MissingLevel { .. },
            ) => EXIT_INFEASIBLE,
            CliError::Synth(SynthError::Topology(e)) => topology_exit(e),
            CliError::Bench(bench::BenchError::Synth(SynthError::TooFewNodes(_))) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn file_error(path: &Path, message: impl ToString) -> CliError {
    CliError::File { path: path.to_path_buf(), message: message.to_string() }
}

/// `1.25`, `-0.5`, `pi`, `-pi/4`, `2pi/3`, `2*pi/3`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let bad = || CliError::Usage(format!("cannot parse angle `{s}`"));
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|_| bad())?),
        None => (t.clone(), 1.0),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
    let c = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(c * PI / den)
}

/// On-disk form of a [`ControlledBlock`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFile {
    pub target_dims: Vec<usize>,
    /// Row-major `[re, im]` pairs.
    pub matrix: Vec<[f64; 2]>,
    pub cost: usize,
}

impl BlockFile {
    pub fn into_block(self) -> std::result::Result<ControlledBlock, CircuitError> {
        let matrix = decode_square(&self.matrix)?;
        let total: usize = self.target_dims.iter().product();
        if self.target_dims.is_empty() || self.target_dims.iter().any(|&d| d < 2) || matrix.dim() != total {
            return Err(CircuitError::MatrixShape { expected: total * total, got: self.matrix.len() });
        }
        Ok(ControlledBlock { target_dims: self.target_dims, matrix, cost: self.cost })
    }
}

fn load_graph(args: &TopologyArgs, purpose: Purpose) -> Result<PlannedTopology> {
    let root = args.root.map(NodeId);
    match (&args.topology, &args.family) {
        (Some(path), _) => {
            let graph = TopologyFile::parse(&read(path)?)?;
            Ok(PlannedTopology::new(path.display().to_string(), graph, root, purpose)?)
        }
        (None, Some(spec)) => {
            let f: TopologyFamily = spec.parse()?;
            Ok(PlannedTopology::new(f.to_string(), f.graph()?, root, purpose)?)
        }
        (None, None) => Err(CliError::Usage("one of --topology or --family is required".into())),
    }
}

fn purpose_of(kind: GateKind) -> Purpose {
    match kind {
        GateKind::CnuMulti => Purpose::MultiTargetBlock,
        _ => Purpose::ControlledPhase,
    }
}

fn require<T>(v: Option<T>, flag: &str, kind: GateKind) -> Result<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for gate {kind:?}").to_lowercase()))
}

fn gate_spec(args: &GateArgs) -> Result<GateSpec> {
    let kind = args.gate;
    Ok(match kind {
        GateKind::Cnz => GateSpec::Cnz,
        GateKind::Cnx => GateSpec::Cnx { target: NodeId(require(args.target, "target", kind)?) },
        GateKind::Cnztheta => GateSpec::CnzTheta { theta: parse_angle(&require(args.theta.clone(), "theta", kind)?)? },
        GateKind::Cnu => {
            let path = require(args.matrix.as_ref(), "matrix", kind)?;
            let pairs: Vec<[f64; 2]> = serde_json::from_str(&read(path)?).map_err(|e| file_error(path, e))?;
            let matrix = decode_mat2(&pairs).map_err(|e| file_error(path, e))?;
            GateSpec::Cnu { matrix, target: NodeId(require(args.target, "target", kind)?) }
        }
        GateKind::CnuMulti => {
            let path = require(args.block.as_ref(), "block", kind)?;
            let file: BlockFile = serde_json::from_str(&read(path)?).map_err(|e| file_error(path, e))?;
            GateSpec::CnuMulti(file.into_block().map_err(|e| file_error(path, e))?)
        }
    })
}

fn emit(out: &mut dyn Write, text: &str) {
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn cmd_plan(args: &PlanArgs, out: &mut dyn Write) -> Result<i32> {
    let planned = load_graph(&args.topology, purpose_of(args.gate))?;
    let report = planned.report();
    match args.format {
        Format::Text => emit(out, &report.render_text()),
        Format::Structured => emit(out, &json(&report)),
    }
    Ok(if report.feasible() { EXIT_OK } else { EXIT_INFEASIBLE })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub gate: String,
    pub topology: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u32>,
    pub qudits: usize,
    pub dims: Vec<usize>,
    pub two_qudit_count: usize,
    pub depth: usize,
    pub histogram: BTreeMap<String, usize>,
    /// For `cnu`: two-qudit gates in the controlled-Z_θ part and in the phase correction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnu_split: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SynthReport {
    fn of(circuit: &Circuit, gate: String, topology: String, root: Option<u32>) -> Self {
        SynthReport {
            gate,
            topology,
            root,
            qudits: circuit.register().len(),
            dims: circuit.register().dims().to_vec(),
            two_qudit_count: circuit.two_qudit_count(),
            depth: circuit.depth(),
            histogram: circuit.histogram(),
            cnu_split: None,
            out: None,
            warnings: Vec::new(),
        }
    }

    pub fn render_text(&self) -> String {
        let hist: Vec<String> = self.histogram.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let root = self.root.map_or(String::new(), |r| format!(" (root {r})"));
        let mut s = format!(
            "gate: {}\ntopology: {}{}\nqudits: {} dims {:?}\ntwo-qudit count: {}\ndepth: {}\nhistogram: {}\n",
            self.gate,
            self.topology,
            root,
            self.qudits,
            self.dims,
            self.two_qudit_count,
            self.depth,
            hist.join(" ")
        );
        if let Some([main, phase]) = self.cnu_split {
            s.push_str(&format!("controlled-phase part: {main}  phase correction: {phase}\n"));
        }
        if let Some(out) = &self.out {
            s.push_str(&format!("written: {out}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = gate_spec(&args.gate)?;
    let planned = load_graph(&args.topology, spec.purpose())?;
    let violations = planned.violations();
    if !violations.is_empty() {
        return Err(CliError::Infeasible(violations.iter().map(ToString::to_string).collect()));
    }
    let plan = planned.synthesis_plan(args.lower_cx, args.lower_cz_theta);
    let (circuit, split) = match &spec {
        GateSpec::Cnu { matrix, target } => {
            let s = synth_cnu(&plan, matrix, *target)?;
            (s.circuit, Some([s.main_two_qudit, s.phase_two_qudit]))
        }
        _ => (synthesize(&plan, &spec)?, None),
    };
    let mut report =
        SynthReport::of(&circuit, spec.to_string(), planned.source.clone(), Some(planned.tree.root_id().0));
    report.cnu_split = split;
    if let Some(path) = &args.out {
        write_file(path, &circuit.to_json())?;
        report.out = Some(path.display().to_string());
    }
    match args.format {
        Format::Text => {
            emit(out, &report.render_text());
            if args.out.is_none() {
                emit(out, &circuit.render_text());
            }
        }
        Format::Structured => emit(out, &json(&report)),
    }
    Ok(EXIT_OK)
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    Circuit::from_json(&read(path)?).map_err(|e| file_error(path, e))
}

/// Qudit index of a node id, through the circuit's labels when it has them.
fn qudit_of(circuit: &Circuit, id: u32) -> Result<usize> {
    let labels = &circuit.metadata.labels;
    let found = if labels.is_empty() {
        (1..=circuit.register().len() as u32).contains(&id).then(|| id as usize - 1)
    } else {
        labels.iter().position(|&l| l == id)
    };
    found.ok_or_else(|| CliError::Usage(format!("node {id} is not a qudit of the circuit")))
}

fn oracle_kind(circuit: &Circuit, spec: GateSpec) -> Result<OracleKind> {
    Ok(match spec {
        GateSpec::Cnz => OracleKind::Cnz,
        GateSpec::Cnx { target } => OracleKind::Cnx { target: qudit_of(circuit, target.0)? },
        GateSpec::CnzTheta { theta } => OracleKind::CnzTheta { theta },
        GateSpec::Cnu { matrix, target } => OracleKind::Cnu { matrix, target: qudit_of(circuit, target.0)? },
        GateSpec::CnuMulti(block) => {
            let n = circuit.register().len();
            let m = block.target_dims.len();
            if m >= n || circuit.register().dims()[n - m..] != block.target_dims[..] {
                return Err(CliError::Usage("block target dimensions do not match the circuit's last qudits".into()));
            }
            OracleKind::CnuMulti { targets: (n - m..n).collect(), matrix: block.matrix }
        }
    })
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    if args.tolerance.is_nan() || args.tolerance <= 0.0 {
        return Err(CliError::Usage("--tolerance must be positive".into()));
    }
    let circuit = load_circuit(&args.circuit)?;
    let kind = oracle_kind(&circuit, gate_spec(&args.gate)?)?;
    let oracle = oracle(kind, circuit.register().dims())?;
    let report = verify(&circuit, &oracle, &VerifyOptions::with_tolerance(args.tolerance))?;
    match args.format {
        Format::Text => emit(out, &report.to_string()),
        Format::Structured => emit(out, &json(&report)),
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// `lo..hi` (inclusive) or `a,b,c`.
pub fn parse_sizes(s: &str) -> Result<Vec<u32>> {
    let bad = || CliError::Usage(format!("cannot parse node counts `{s}`"));
    let sizes: Vec<u32> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

/// Expands family names into concrete instances for each requested size.
pub fn bench_families(names: &[String], sizes: &[u32]) -> Result<Vec<TopologyFamily>> {
    let defaults = ["line".to_string(), "star".to_string(), "kary(2)".to_string()];
    let names = if names.is_empty() { &defaults[..] } else { names };
    let mut out = Vec::new();
    for name in names {
        let (base, params) = family::split_spec(name)?;
        if let Ok(full) = family::build(&base, &params, false) {
            out.push(full);
            continue;
        }
        let template = family::build(&base, &params, true)?;
        out.extend(sizes.iter().filter_map(|&n| TopologyFamily::with_nodes(&template, n)));
    }
    Ok(out)
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let sizes = parse_sizes(&args.sizes)?;
    let families = bench_families(&args.family, &sizes)?;
    let rows = bench::run_bench(&families)?;
    let text = match args.format {
        Format::Text => bench::render_table(&rows),
        Format::Structured => json(&rows),
    };
    if let Some(path) = &args.out {
        write_file(path, &json(&rows))?;
    }
    emit(out, &text);
    Ok(EXIT_OK)
}

fn root_tag(circuit: &Circuit) -> Option<u32> {
    circuit.metadata.tags.iter().find_map(|t| t.strip_prefix("root=")?.parse().ok())
}

fn cmd_lower(args: &LowerArgs, out: &mut dyn Write) -> Result<i32> {
    let mut circuit = load_circuit(&args.circuit)?;
    let before = circuit.two_qudit_count();
    let mut warnings = Vec::new();
    if args.lower_cz_theta {
        let dims = circuit.register().dims();
        for g in circuit.gates() {
            if let Gate::CzTheta { a, b, .. } = *g {
                if dims[a] > 2 && dims[b] > 2 {
                    warnings.push(format!(
                        "CZ_theta on q{a} q{b} has no qubit endpoint; its lowering is exact only on their qubit block"
                    ));
                }
            }
        }
        circuit = circuit.lower_cz_theta();
    }
    if args.lower_cx {
        circuit = circuit.lower_cx();
    }
    let mut report = SynthReport::of(
        &circuit,
        circuit.metadata.name.clone(),
        args.circuit.display().to_string(),
        root_tag(&circuit),
    );
    report.warnings = warnings;
    if let Some(path) = &args.out {
        write_file(path, &circuit.to_json())?;
        report.out = Some(path.display().to_string());
    }
    match args.format {
        Format::Text => {
            emit(out, &format!("two-qudit count before lowering: {before}"));
            emit(out, &report.render_text());
            if args.out.is_none() {
                emit(out, &circuit.render_text());
            }
        }
        Format::Structured => emit(out, &json(&report)),
    }
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Plan(a) => cmd_plan(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Lower(a) => cmd_lower(a, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
