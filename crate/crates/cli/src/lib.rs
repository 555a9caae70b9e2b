//! Command-line front end for the flexible-link controller: configuration
//! files, run manifests, SVG figures and the subcommands themselves.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod manifest;
pub mod svg;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{compare, design_lqr, modes, simulate, sweep_epsilon, Invocation};
pub use config::{Config, ConfigError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("design failed: {0}")]
    Design(flexlink::Error),
    #[error("{0}")]
    Divergence(flexlink::Error),
    #[error("{0}")]
    Run(flexlink::Error),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 configuration, 3 design, 4 divergence, 1 other.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Design(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Run(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<flexlink::Error> for CliError {
    fn from(e: flexlink::Error) -> Self {
        use flexlink::Error as E;
        match e {
            E::Design(_) | E::Singular { .. } => CliError::Design(e),
            E::Divergence { .. } | E::Integration { .. } => CliError::Divergence(e),
            E::InvalidParameter { .. } | E::Dimension { .. } | E::RootNotConverged { .. } | E::Trace(_) => CliError::Run(e),
        }
    }
}
