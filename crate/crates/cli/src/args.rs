use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "energy-space", version, about = "Energy kernels, resistance and multiplication operators on weighted networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Generator spec: path:n, cycle:n, integer_segment:n, binary_tree:d,
    /// random:n:extra:seed.
    #[arg(long = "gen", group = "source")]
    pub generator: Option<String>,

    /// Network JSON file.
    #[arg(long, group = "source")]
    pub network: Option<PathBuf>,

    /// Edge-list CSV file with header x,y,c (needs --origin).
    #[arg(long, group = "source", requires = "origin")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    #[command(flatten)]
    pub source: Source,

    /// Conductances for --gen: unit, const:c, uniform:lo:hi:seed.
    #[arg(long, default_value = "unit")]
    pub weights: String,

    /// Origin vertex for --csv.
    #[arg(long)]
    pub origin: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a network in the canonical JSON (or CSV edge list) format.
    Generate {
        #[command(flatten)]
        net: NetworkArgs,
    },
    /// Energy kernel v_x, resistance R(x) and the bound sup|v_x| <= R(x).
    Kernel {
        #[command(flatten)]
        net: NetworkArgs,
        /// Vertex id; `o` names the origin.
        #[arg(long)]
        vertex: String,
    },
    /// Gram matrix V_F of energy kernels.
    Gram {
        #[command(flatten)]
        net: NetworkArgs,
        /// Comma-separated ids or an inclusive range a..b (default: all of X).
        #[arg(long)]
        vertices: Option<String>,
        /// Also print the psd square root and its round-trip residual.
        #[arg(long)]
        sqrt: bool,
    },
    /// Multiplication operator analysis.
    Mult {
        #[command(flatten)]
        net: NetworkArgs,
        /// delta:<v>, kernel:<v>, const:<re>[:<im>] or file:<path>.
        #[arg(long = "f")]
        symbol: String,
        /// Certify this bound (repeatable).
        #[arg(long = "bound")]
        bounds: Vec<f64>,
        /// Bisect for the smallest certified bound.
        #[arg(long)]
        estimate: bool,
        /// Trace restricted norms over every prefix of X unless --exhaust is given.
        #[arg(long)]
        trace: bool,
        /// Exhaustion sizes, e.g. 2,4,8, or `all`.
        #[arg(long)]
        exhaust: Option<String>,
        /// psd tolerance (default scales with the matrix norm).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Escape probability P[x -> o], exact and Monte Carlo.
    Walk {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        vertex: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-excursion step cap.
        #[arg(long, default_value_t = energy_space::randwalk::DEFAULT_STEP_CAP)]
        cap: u64,
    },
    /// Sup, energy and algebra norms; with --u2, the product estimate.
    Banach {
        #[command(flatten)]
        net: NetworkArgs,
        /// kernel:<v>, delta:<v>, const:<re>[:<im>] or file:<path>.
        #[arg(long)]
        u: String,
        #[arg(long)]
        u2: Option<String>,
    },
}
