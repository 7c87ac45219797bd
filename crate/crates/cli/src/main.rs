//! cswap: batch runner for controlled-SWAP interferometry estimators.
//!
//! Every subcommand reads JSON inputs, evaluates one estimator in exact or
//! sampled mode, and emits a canonical result document. Exit codes: 0 on
//! success, 2 for usage and input parse errors, 3 for domain validation
//! failures, 4 for numerical recovery failures.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use cswap_core::Error;

mod output;
mod run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Closed-form expectation values.
    Exact,
    /// Simulated measurement statistics with uncertainty intervals.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Via {
    /// Direct trace formula.
    Analytic,
    /// Explicit controlled-network simulation.
    Circuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumVia {
    /// Matrix powers for the trace vector.
    Matpow,
    /// Shift-network simulation for the trace vector.
    Circuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Dense Hermitian eigensolver.
    Eigh,
    /// Iterative extremal-eigenvalue search.
    Search,
}

#[derive(Parser)]
#[command(
    name = "cswap",
    version,
    about = "Controlled-SWAP interferometry estimators: overlaps, spectra, observables, tomography, and channel capacity checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Evaluation mode.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,

    /// Measurement shots per estimate (sampled mode only).
    #[arg(long, global = true, default_value_t = 10_000)]
    pub shots: u64,

    /// Master seed for sampled mode; exact mode ignores it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Confidence level of the reported intervals.
    #[arg(long, global = true, default_value_t = 0.95)]
    pub confidence: f64,

    /// Independent repetitions in sampled mode, seeded per rep index.
    #[arg(long, global = true, default_value_t = 1)]
    pub reps: u64,

    /// Worker threads for repetitions; the output bytes do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Output file; a relative path resolves under $CSWAP_OUT_DIR. Stdout
    /// when absent.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Subcommand)]
pub enum Command {
    /// Overlap Tr(AB) of two states via the swap network.
    Overlap {
        /// State file; give --in twice.
        #[arg(long = "in", value_name = "FILE", action = clap::ArgAction::Append, required = true)]
        inputs: Vec<PathBuf>,
        /// Exact evaluation route.
        #[arg(long, value_enum, default_value_t = Via::Analytic)]
        via: Via,
    },

    /// Purity Tr(A^2) of a state.
    Purity {
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Exact evaluation route.
        #[arg(long, value_enum, default_value_t = Via::Analytic)]
        via: Via,
    },

    /// Full eigenvalue spectrum from the power-trace vector.
    Spectrum {
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Exact evaluation route for the power traces.
        #[arg(long, value_enum, default_value_t = SpectrumVia::Matpow)]
        via: SpectrumVia,
    },

    /// Largest eigenvalue by iterative search.
    Eigmax {
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Number of random starting vectors.
        #[arg(long, default_value_t = 5)]
        inits: usize,
        /// Residual-norm convergence tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Iteration cap per start.
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },

    /// Smallest eigenvalue by iterative search.
    Eigmin {
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Number of random starting vectors.
        #[arg(long, default_value_t = 5)]
        inits: usize,
        /// Residual-norm convergence tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Iteration cap per start.
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },

    /// Observable expectation through the positive embedding.
    Expect {
        /// Hermitian observable file.
        #[arg(long, value_name = "FILE")]
        observable: PathBuf,
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Embedding offset above the spectral floor; the result is
        /// invariant to it.
        #[arg(long)]
        delta: Option<f64>,
    },

    /// State reconstruction from overlap probes.
    Tomo {
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Warn when the raw matrix falls this far outside the PSD cone.
        #[arg(long, default_value_t = 1e-8)]
        psd_tol: f64,
    },

    /// Dual state of a channel on the doubled space.
    Choi {
        /// Catalog descriptor, e.g. depolarizing:0.3.
        #[arg(long, value_name = "SPEC", conflicts_with = "input")]
        channel: Option<String>,
        /// Kraus channel file.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Dimension for catalog channels.
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },

    /// Two-way capacity verdict for a qubit channel.
    Capacity {
        /// Catalog descriptor, e.g. depolarizing:0.8.
        #[arg(long, value_name = "SPEC", conflicts_with = "input")]
        channel: Option<String>,
        /// Kraus channel file.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Dimension for catalog channels.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// How the dual state's top eigenvalue is obtained in exact mode.
        #[arg(long, value_enum, default_value_t = Method::Eigh)]
        method: Method,
        /// Starting vectors for the search method.
        #[arg(long, default_value_t = 5)]
        inits: usize,
        /// Search tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Search iteration cap.
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },

    /// Single-network interference: P0, visibility, and phase.
    Interfere {
        /// Unitary file: a network object or a bare matrix.
        #[arg(long, value_name = "FILE")]
        unitary: Option<PathBuf>,
        /// State file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Control-phase offset applied before measurement.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Scan the three Pauli networks instead of one unitary (qubits).
        #[arg(long)]
        basis_scan: bool,
    },
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NotSquare { .. } => "not_square",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::DimensionCap { .. } => "dimension_cap",
        Error::ZeroDimension => "zero_dimension",
        Error::NonFiniteEntry { .. } => "non_finite_entry",
        Error::EntryCount { .. } => "entry_count",
        Error::BadFactorization { .. } => "bad_factorization",
        Error::BadKeepSet => "bad_keep_set",
        Error::NotHermitian { .. } => "not_hermitian",
        Error::NotUnitary { .. } => "not_unitary",
        Error::InvalidDensity { .. } => "invalid_density",
        Error::NotNormalized { .. } => "not_normalized",
        Error::InvalidRank { .. } => "invalid_rank",
        Error::ParamRange { .. } => "param_range",
        Error::InvalidShotPlan { .. } => "invalid_shot_plan",
        Error::EmptyKraus => "empty_kraus",
        Error::KrausIncomplete { .. } => "kraus_incomplete",
        Error::ChoiMarginal { .. } => "choi_marginal",
        Error::CriterionScope { .. } => "criterion_scope",
        Error::MarginalNotMixed { .. } => "marginal_not_mixed",
        Error::DegenerateEmbedding => "degenerate_embedding",
        Error::SpectrumRecovery { .. } => "spectrum_recovery",
        Error::UnknownChannel { .. } => "unknown_channel",
        Error::InvalidPowerTraces { .. } => "invalid_power_traces",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Io { .. } => 2,
        Error::SpectrumRecovery { .. }
        | Error::InvalidPowerTraces { .. }
        | Error::DegenerateEmbedding => 4,
        _ => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run::dispatch(cli) {
        let code = exit_code(&e);
        let doc = serde_json::json!({
            "error": {
                "kind": error_kind(&e),
                "message": e.to_string(),
                "exit_code": code,
            }
        });
        eprintln!("{}", cswap_core::io::canonical_json(&doc));
        std::process::exit(code);
    }
}
