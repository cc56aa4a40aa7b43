//! Batch driver for hierarchical de Rham meshes: refinement, exactness and
//! admissibility checks, the Laplace and Maxwell experiments, and SVG plots.
//!
//! Exit codes: 0 clean, 1 finding, 2 usage or input error.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod args;
pub mod commands;
pub mod document;
pub mod plot;

pub use args::{Cli, Command};
pub use document::{Boundary, Degree, MeshDocument};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Write(#[from] io::Error),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    InFile { path: PathBuf, message: String },
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Hierarchy(#[from] hdr_core::hierarchy::HierarchyError),
    #[error(transparent)]
    Exactness(#[from] hdr_core::exactness::ExactnessError),
    #[error(transparent)]
    Derham(#[from] hdr_core::derham::DerhamError),
    #[error(transparent)]
    Admissibility(#[from] hdr_core::admissibility::AdmissibilityError),
    #[error(transparent)]
    Solver(#[from] hdr_core::solvers::SolverError),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Io { .. } | CliError::InFile { .. } => self,
            other => CliError::InFile { path: path.to_path_buf(), message: other.to_string() },
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Clean,
    Finding,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::Finding => 1,
        }
    }

    fn from_clean(clean: bool) -> Self {
        if clean {
            Status::Clean
        } else {
            Status::Finding
        }
    }
}

/// Runs one command; reports go to `out`, progress and warnings to `log`.
pub fn run(cli: &Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    match &cli.command {
        Command::Refine(a) => commands::refine(a, out, log),
        Command::Check(a) => commands::check(a, out, log),
        Command::Solve(a) => commands::solve(a, out, log),
        Command::Plot(a) => plot::plot(a, out, log),
    }
}

/// Writes `text` to `path`, or to `out` when no path is given.
pub(crate) fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

/// Loads a document and warns when its domains break the support-union
/// assumption.
pub(crate) fn load_checked(
    path: &Path,
    log: &mut dyn Write,
) -> Result<(MeshDocument, hdr_core::hierarchy::RefinementDomains), CliError> {
    let doc = MeshDocument::load(path)?;
    let domains = doc.domains().map_err(|e| e.in_file(path))?;
    for v in domains.check_assumption1() {
        writeln!(
            log,
            "warning: {}: level {} refinement is not a union of supports ({} uncovered, {} outside)",
            path.display(),
            v.level,
            v.uncovered.len(),
            v.not_nested.len()
        )?;
    }
    Ok((doc, domains))
}
