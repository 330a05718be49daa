use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spfd",
    version,
    about = "Induced electric field dosimetry in voxel phantoms"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SPFD_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic phantom file.
    Phantom(PhantomArgs),
    /// Sample a synthetic source on a coarse lattice and write a field sample file.
    Field(FieldArgs),
    /// Run the pipeline once and write the report and field dump.
    Run(RunArgs),
    /// Repeat the pipeline and report per-step timing statistics.
    Bench(BenchArgs),
    /// Extract one plane of a field dump as a text matrix.
    ReportSlice(SliceArgs),
    /// Write the assembled Poisson matrix in Matrix Market format.
    MmExport(MmExportArgs),
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Registered phantom kind.
    #[arg(long)]
    pub kind: String,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], required = true)]
    pub dims: Vec<usize>,
    /// One isotropic value or three per-axis values.
    #[arg(long, num_args = 1..=3, required = true)]
    pub spacing_mm: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub radius_mm: f64,
    /// Conductivity in S/m; one per layer for layered-block.
    #[arg(long, num_args = 1.., required = true)]
    pub kappa: Vec<f64>,
    #[arg(long, default_value = "z")]
    pub axis: String,
    /// Shape center; defaults to the grid center.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    pub center_mm: Option<Vec<f64>>,
    #[arg(long)]
    pub half_length_mm: Option<f64>,
    #[arg(long, num_args = 3, value_names = ["HX", "HY", "HZ"])]
    pub half_extent_mm: Option<Vec<f64>>,
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    pub origin_mm: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "coil_args", multiple = true)]
pub struct CoilArgs {
    #[arg(long, default_value_t = 50.0)]
    pub coil_radius_mm: f64,
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    pub coil_center_mm: Option<Vec<f64>>,
    #[arg(long, num_args = 3, value_names = ["AX", "AY", "AZ"], allow_negative_numbers = true)]
    pub coil_axis: Option<Vec<f64>>,
    /// Current amplitude in A.
    #[arg(long, default_value_t = 1.0)]
    pub coil_current: f64,
    #[arg(long, default_value_t = 256)]
    pub coil_segments: usize,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceChoice {
    /// Field sample file.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Circular coil source (see --coil-* options).
    #[arg(long)]
    pub coil: bool,
    /// Uniform flux density in T: Bz, or Bx By Bz.
    #[arg(long, num_args = 1..=3, allow_negative_numbers = true)]
    pub uniform: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub coil: bool,
    #[arg(long, num_args = 1..=3, allow_negative_numbers = true, conflicts_with = "coil", required_unless_present = "coil")]
    pub uniform: Option<Vec<f64>>,
    #[command(flatten)]
    pub coil_args: CoilArgs,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], required = true)]
    pub lattice_dims: Vec<usize>,
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true, required = true)]
    pub lattice_origin_mm: Vec<f64>,
    #[arg(long, num_args = 1..=3, required = true)]
    pub lattice_spacing_mm: Vec<f64>,
    #[arg(long)]
    pub freq_hz: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    Comb,
    Bfs,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub phantom: PathBuf,
    #[command(flatten)]
    pub source: SourceChoice,
    #[command(flatten)]
    pub coil_args: CoilArgs,
    /// Operating frequency; required for --coil and --uniform.
    #[arg(long)]
    pub freq_hz: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value = "amg")]
    pub preconditioner: String,
    #[arg(long, value_enum, default_value_t = TreeKind::Comb)]
    pub tree: TreeKind,
    /// Skip divergence cleaning of the face fluxes.
    #[arg(long)]
    pub no_clean: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub clean_tol: f64,
    /// Log the residual of every solver iteration.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
    #[arg(long)]
    pub out_field: Option<PathBuf>,
    /// Report RMS values instead of amplitudes.
    #[arg(long)]
    pub rms: bool,
    /// Pass/fail threshold for the 99th percentile in V/m.
    #[arg(long)]
    pub limit_vpm: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub budget_s: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    pub runs: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plane {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// Field dump written by `run --out-field`.
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long, value_enum)]
    pub plane: Plane,
    #[arg(long)]
    pub index: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MmExportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub out_rhs: Option<PathBuf>,
}
