//! Front end for the `qudit` binary.
//!
//! Every subcommand builds a JSON value; `--output table` renders that same
//! value, so the two views never disagree.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use qudit::bipartite::{
    classification_table, schmidt_forms, split_parameters, SchmidtForm, SplitParams,
};
use qudit::crypto::{run_protocol, Eavesdropper, ProtocolConfig};
use qudit::eigensolver::{analytic_eigensystem, check_label, CheckReport, EigenPair};
use qudit::optics::{
    detector_distribution, general_device, preset_device, reck_decompose, OpticalCircuit,
};
use qudit::random::{random_pure_state, random_unitary, substream};
use qudit::tomography::{
    commuting_families, reconstruct, simulate_counts, trace_distance, DensityMatrix, FrequencyFile,
};
use qudit::{pauli_matrix, ComplexMatrix, Error, PauliLabel};

pub mod table;

#[derive(Debug, Parser)]
#[command(
    name = "qudit",
    version,
    about = "Generalized Pauli operators on qudits"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub output: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub l: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic eigensystem of S_kl.
    Eigen {
        #[command(flatten)]
        label: LabelArgs,
        /// Order eigenpairs by eigenvalue phase instead of (a, g).
        #[arg(long)]
        sorted: bool,
    },
    /// Matrix of S_kl in the S_z basis.
    Matrix {
        #[command(flatten)]
        label: LabelArgs,
    },
    /// Analytic vs numeric eigensystem comparison.
    Check {
        #[arg(long)]
        d: usize,
        /// Restrict to one label (needs both --k and --l).
        #[arg(long, requires = "l")]
        k: Option<usize>,
        #[arg(long, requires = "k")]
        l: Option<usize>,
    },
    /// Schmidt forms of every eigenvector for the split d = d1·d0.
    Schmidt {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d0: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
    /// Measurement class of every S_kl for the split d = d1·d0.
    Classify {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d0: usize,
    },
    /// Commuting families of the non-identity labels.
    Families {
        #[arg(long)]
        d: usize,
    },
    /// Simulate tomography at several shot counts and report the error.
    TomoSim {
        #[arg(long)]
        d: usize,
        /// Shots per label; repeat for several runs.
        #[arg(long = "shots", default_values_t = [1000u64, 10000, 100000])]
        shots: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// State file (vector or density matrix); random pure state if absent.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Write the counts of the last run as a frequencies file.
        #[arg(long)]
        save_counts: Option<PathBuf>,
    },
    /// Reconstruct a state from a frequencies file.
    TomoRecon {
        #[arg(long)]
        input: PathBuf,
        /// Reference state for a trace-distance report.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Two-bases key distribution simulation.
    CryptoSim {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d0: usize,
        #[arg(long)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Eve::None)]
        eve: Eve,
    },
    /// Print or evaluate an optical device.
    Optics {
        #[arg(long, conflicts_with_all = ["circuit", "compile"])]
        preset: Option<String>,
        /// Netlist file.
        #[arg(long, conflicts_with = "compile")]
        circuit: Option<PathBuf>,
        /// Compile a detector network for S_kl on d1 paths (d = 2·d1).
        #[arg(long, requires_all = ["d1", "k", "l"])]
        compile: bool,
        #[arg(long)]
        d1: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        /// Input state file; prints detector probabilities.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Decompose a unitary into two-mode mixers.
    Reck {
        /// Matrix file.
        #[arg(long, conflicts_with = "random")]
        input: Option<PathBuf>,
        /// Decompose a seeded Haar-random unitary of this size.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Eve {
    None,
    InterceptResend,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or parameters: exit 2.
    Validation(String),
    /// Unexpected failure: exit 1.
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// State file: a vector `[[re, im], ...]` or a density matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateFile {
    Vector(Vec<[f64; 2]>),
    Matrix(ComplexMatrix),
}

impl StateFile {
    pub fn into_density(self) -> CliResult<DensityMatrix> {
        Ok(match self {
            StateFile::Vector(v) => {
                let psi: Vec<Complex64> = v
                    .into_iter()
                    .map(|[re, im]| Complex64::new(re, im))
                    .collect();
                DensityMatrix::from_pure(&psi)?
            }
            StateFile::Matrix(m) => DensityMatrix::new(m)?,
        })
    }

    pub fn into_vector(self) -> CliResult<Vec<Complex64>> {
        match self {
            StateFile::Vector(v) => Ok(v
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect()),
            StateFile::Matrix(_) => Err(CliError::Validation(
                "expected a state vector, got a matrix".into(),
            )),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("malformed JSON in {}: {e}", path.display())))
}

fn to_value<T: Serialize>(x: &T) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| CliError::Internal(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EigenOutput {
    pub label: PauliLabel,
    pub pairs: Vec<EigenPair>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SchmidtOutput {
    pub label: PauliLabel,
    pub params: SplitParams,
    pub forms: Vec<SchmidtForm>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TomoRun {
    pub shots: u64,
    pub seed: u64,
    pub trace_distance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TomoSimOutput {
    pub d: usize,
    pub seed: u64,
    pub state: ComplexMatrix,
    pub runs: Vec<TomoRun>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TomoReconOutput {
    pub state: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_distance: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetectorReading {
    pub mode: usize,
    pub outcome: usize,
    pub eigenvalue: [f64; 2],
    pub probability: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OpticsOutput {
    pub circuit: OpticalCircuit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readings: Option<Vec<DetectorReading>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReckOutput {
    pub decomposition: qudit::optics::ReckDecomposition,
    pub mixer_count: usize,
    pub reconstruction_error: f64,
}

fn label(d: usize, k: usize, l: usize) -> CliResult<PauliLabel> {
    Ok(PauliLabel::new(d, k, l)?)
}

/// Runs one subcommand and returns its JSON output.
pub fn execute(command: &Command) -> CliResult<Value> {
    match command {
        Command::Eigen { label: la, sorted } => {
            let lbl = label(la.d, la.k, la.l)?;
            let system = analytic_eigensystem(lbl);
            let pairs = if *sorted {
                system.phase_sorted().into_iter().cloned().collect()
            } else {
                system.pairs
            };
            to_value(&EigenOutput { label: lbl, pairs })
        }
        Command::Matrix { label: la } => to_value(&pauli_matrix(label(la.d, la.k, la.l)?)),
        Command::Check { d, k, l } => {
            let labels = match (k, l) {
                (Some(k), Some(l)) => vec![label(*d, *k, *l)?],
                _ => PauliLabel::all(*d)?,
            };
            let reports: Vec<CheckReport> = labels
                .par_iter()
                .map(|&lbl| check_label(lbl))
                .collect::<qudit::Result<_>>()?;
            to_value(&reports)
        }
        Command::Schmidt { d1, d0, k, l } => {
            let lbl = label(d1 * d0, *k, *l)?;
            to_value(&SchmidtOutput {
                label: lbl,
                params: split_parameters(*d1, *d0, lbl)?,
                forms: schmidt_forms(*d1, *d0, lbl)?,
            })
        }
        Command::Classify { d1, d0 } => to_value(&classification_table(*d1, *d0)?),
        Command::Families { d } => to_value(&commuting_families(*d)?),
        Command::TomoSim {
            d,
            shots,
            seed,
            state,
            save_counts,
        } => tomo_sim(*d, shots, *seed, state.as_deref(), save_counts.as_deref()),
        Command::TomoRecon { input, reference } => {
            let file: FrequencyFile = read_json(input)?;
            let est = reconstruct(&file.to_frequencies()?)?;
            let trace_distance = match reference {
                Some(path) => {
                    let truth = read_json::<StateFile>(path)?.into_density()?;
                    Some(trace_distance(est.matrix(), truth.matrix())?)
                }
                None => None,
            };
            to_value(&TomoReconOutput {
                state: est.into_matrix(),
                trace_distance,
            })
        }
        Command::CryptoSim {
            d1,
            d0,
            rounds,
            seed,
            eve,
        } => to_value(&run_protocol(&ProtocolConfig {
            rounds: *rounds,
            d1: *d1,
            d0: *d0,
            seed: *seed,
            eavesdropper: match eve {
                Eve::None => Eavesdropper::None,
                Eve::InterceptResend => Eavesdropper::InterceptResend,
            },
        })?),
        Command::Optics {
            preset,
            circuit,
            compile,
            d1,
            k,
            l,
            input,
        } => {
            let circ = match (preset, circuit, compile) {
                (Some(name), _, _) => preset_device(name)?,
                (None, Some(path), _) => read_json(path)?,
                (None, None, true) => {
                    let (d1, k, l) = (d1.unwrap_or(0), k.unwrap_or(0), l.unwrap_or(0));
                    general_device(d1, label(2 * d1, k, l)?)?
                }
                _ => {
                    return Err(CliError::Validation(
                        "optics needs one of --preset, --circuit or --compile".into(),
                    ))
                }
            };
            let readings = match input {
                Some(path) => {
                    let psi = read_json::<StateFile>(path)?.into_vector()?;
                    let p = detector_distribution(&circ, &psi)?;
                    Some(
                        circ.detectors()
                            .iter()
                            .zip(p)
                            .map(|(det, probability)| DetectorReading {
                                mode: det.mode,
                                outcome: det.outcome,
                                eigenvalue: [det.eigenvalue.re, det.eigenvalue.im],
                                probability,
                            })
                            .collect(),
                    )
                }
                None => None,
            };
            to_value(&OpticsOutput {
                circuit: circ,
                readings,
            })
        }
        Command::Reck {
            input,
            random,
            seed,
        } => {
            let u = match (input, random) {
                (Some(path), _) => read_json::<ComplexMatrix>(path)?,
                (None, Some(n)) => {
                    if *n == 0 || *n > qudit::optics::MAX_MODES {
                        return Err(CliError::Validation(format!(
                            "--random must be in 1..={}",
                            qudit::optics::MAX_MODES
                        )));
                    }
                    random_unitary(*n, &mut substream(*seed, 0))
                }
                (None, None) => {
                    return Err(CliError::Validation(
                        "reck needs --input or --random".into(),
                    ))
                }
            };
            let decomposition = reck_decompose(&u)?;
            let reconstruction_error = decomposition.reassemble().max_abs_diff(&u);
            to_value(&ReckOutput {
                mixer_count: decomposition.mixers.len(),
                decomposition,
                reconstruction_error,
            })
        }
    }
}

/// Stream 0 of `--seed` draws the random state; run `i` draws its own master
/// seed from stream `i + 1`.
fn tomo_sim(
    d: usize,
    shots: &[u64],
    seed: u64,
    state: Option<&Path>,
    save_counts: Option<&Path>,
) -> CliResult<Value> {
    use rand::RngCore;
    if d < 2 {
        return Err(CliError::Validation(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    if shots.is_empty() || shots.contains(&0) {
        return Err(CliError::Validation(
            "--shots values must be positive".into(),
        ));
    }
    let rho = match state {
        Some(path) => read_json::<StateFile>(path)?.into_density()?,
        None => DensityMatrix::from_pure(&random_pure_state(d, &mut substream(seed, 0)))?,
    };
    if rho.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.d(),
        }
        .into());
    }
    let mut runs = Vec::new();
    let mut last = None;
    for (i, &n) in shots.iter().enumerate() {
        let run_seed = substream(seed, i as u64 + 1).next_u64();
        let counts = simulate_counts(&rho, n, run_seed);
        let est = reconstruct(&counts.to_frequencies()?)?;
        runs.push(TomoRun {
            shots: n,
            seed: run_seed,
            trace_distance: trace_distance(est.matrix(), rho.matrix())?,
        });
        last = Some(counts);
    }
    if let (Some(path), Some(counts)) = (save_counts, last) {
        let text =
            serde_json::to_string_pretty(&counts).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    }
    to_value(&TomoSimOutput {
        d,
        seed,
        state: rho.into_matrix(),
        runs,
    })
}

/// Parses `args`, runs the subcommand, writes the result to `out` and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli.command).and_then(|value| {
        let text = match cli.output {
            Format::Json => serde_json::to_string_pretty(&value)
                .map_err(|e| CliError::Internal(e.to_string()))?,
            Format::Table => table::render(&value),
        };
        match writeln!(out, "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(CliError::Internal(e.to_string()))
            }
            _ => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            1
        }
    }
}
