use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdr_core::hierarchy::Variant;
use hdr_core::solvers::Manufactured;

#[derive(Debug, Parser)]
#[command(name = "hdr", version, about = "Hierarchical B-spline de Rham meshes: refine, check, solve, plot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refine marked elements and write the new mesh document.
    Refine(RefineArgs),
    /// Report problematic pairs, cohomology, admissibility or support-union violations as JSON.
    Check(CheckArgs),
    /// Run the vector Laplace or Maxwell eigenvalue experiment and write CSV.
    Solve(SolveArgs),
    /// Draw the active elements as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Hb,
    Thb,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Hb => Variant::Hierarchical,
            VariantArg::Thb => Variant::Truncated,
        }
    }
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    pub input: PathBuf,
    /// JSON list of `[level, e1, e2]` elements; defaults to the document's own marking.
    #[arg(long)]
    pub marked: Option<PathBuf>,
    /// Add L-chains and parents so the complex stays exact.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub exact: Toggle,
    /// Also enforce HB admissibility of class m (at least 2).
    #[arg(long, value_parser = parse_admissible, default_value = "off")]
    pub admissible: Admissible,
    /// Grow the marking to the supports of all 0-forms touching a marked element.
    #[arg(long)]
    pub supports: bool,
    /// Output document; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

/// `--admissible m|off`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Admissible(pub Option<usize>);

fn parse_admissible(s: &str) -> Result<Admissible, String> {
    if s == "off" {
        return Ok(Admissible(None));
    }
    s.parse::<usize>().map(|m| Admissible(Some(m))).map_err(|_| format!("expected a class number or \"off\", got {s:?}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckWhat {
    Pairs,
    Cohomology,
    Admissibility,
    Assumption1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ArithmeticArg {
    Exact,
    Float,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub what: CheckWhat,
    #[arg(long, value_enum, default_value_t = VariantArg::Thb)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = ArithmeticArg::Exact)]
    pub arithmetic: ArithmeticArg,
    /// Admissibility: report a finding when any form class exceeds this.
    #[arg(long)]
    pub max_class: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Laplace,
    Maxwell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Polynomial,
    TanhRing,
    Zero,
}

impl From<FieldArg> for Manufactured {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Polynomial => Manufactured::Polynomial,
            FieldArg::TanhRing => Manufactured::TanhRing,
            FieldArg::Zero => Manufactured::Zero,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub problem: Problem,
    #[arg(long, value_enum, default_value_t = VariantArg::Thb)]
    pub variant: VariantArg,
    /// Side length of the square domain; π for Maxwell, 1 for Laplace by default.
    #[arg(long)]
    pub side: Option<f64>,
    /// Manufactured solution for Laplace.
    #[arg(long, value_enum, default_value_t = FieldArg::Polynomial)]
    pub field: FieldArg,
    /// Number of adaptive Laplace steps; 1 solves on the given mesh only.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Dörfler fraction for adaptive steps.
    #[arg(long, default_value_t = 0.06)]
    pub theta: f64,
    /// Repair adaptive refinements with L-chains.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub exact: Toggle,
    /// Finest level reachable by adaptive refinement.
    #[arg(long, default_value_t = 6)]
    pub max_level: usize,
    /// CSV output; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub input: PathBuf,
    /// Width and height of the drawing in pixels.
    #[arg(long, default_value_t = 512.0)]
    pub size: f64,
    /// SVG output; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}
