use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "algprob", version, about = "Finite-dimensional algebraic probability toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Numerical tolerance (default: ALGPROB_DEFAULT_TOL or the module default)
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Seed for every sampling step
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Number of measurement shots to sample
    #[arg(long, global = true)]
    pub shots: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Input JSON file
    #[arg(long = "in", global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Write output here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grover search on n qubits
    Grover {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        marked: usize,
        /// Number of Grover iterations (default: the optimal count)
        #[arg(long)]
        iters: Option<usize>,
    },
    /// One-qubit Hadamard code started in |0>
    HadamardDemo,
    /// Law of A = tI + xX + yY + zZ in the state with Bloch vector (u, v, w)
    #[command(allow_negative_numbers = true)]
    Bernoulli {
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
        #[arg(long, default_value_t = 0.0)]
        u: f64,
        #[arg(long, default_value_t = 0.0)]
        v: f64,
        #[arg(long, default_value_t = 0.0)]
        w: f64,
    },
    /// Linear maps given as Kraus or Choi JSON
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Positive operator valued measures
    #[command(subcommand)]
    Povm(PovmCmd),
    /// Lueders update of the state in --in by a projection
    Lueders {
        /// Projection matrix JSON
        #[arg(long)]
        proj: PathBuf,
    },
    /// Von Neumann instrument of the PVM in --in applied to a state
    Instrument {
        /// Density matrix JSON
        #[arg(long)]
        state: PathBuf,
    },
    /// Interacting Fock spaces and orthogonal polynomials
    #[command(subcommand)]
    Fock(FockCmd),
    /// Matrix *-algebras generated by the matrices in --in
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Kochen-Specker configuration
    #[command(subcommand)]
    Ks(KsCmd),
}

#[derive(Debug, Subcommand)]
pub enum ChannelCmd {
    /// Complete positivity, trace preservation, unitality
    Check,
    /// Choi matrix
    Choi {
        /// Divide by the input dimension
        #[arg(long)]
        normalized: bool,
    },
    /// Kraus operators extracted from the Choi matrix
    Kraus,
    /// The channel in --in followed by the channel in --then
    Compose {
        #[arg(long)]
        then: PathBuf,
    },
    /// Invariant state and spectral radius
    FixedPoint,
}

#[derive(Debug, Subcommand)]
pub enum PovmCmd {
    /// Validate effects, optionally computing outcome probabilities
    Check {
        /// Density matrix JSON
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Isometric dilation to a PVM
    Neumark,
}

#[derive(Debug, Subcommand)]
pub enum FockCmd {
    /// Vacuum moments of the q-deformed field
    #[command(allow_negative_numbers = true)]
    Moments {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 8)]
        max: usize,
    },
    /// Measure to Jacobi coefficients and back
    Favard {
        /// Number of recurrence steps (default: all)
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AlgebraCmd {
    /// Generated *-algebra
    Closure,
    /// Commutant of the generated algebra
    Commutant,
    /// Center and factor blocks (n, m, l)
    Decompose,
}

#[derive(Debug, Subcommand)]
pub enum KsCmd {
    /// Validate the configuration and run the valuation search
    Verify,
}
