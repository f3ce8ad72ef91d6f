//! File formats, parallel kernel computation, cross-validation and the
//! `toolrank` command line on top of [`toolrank_core`].

use std::io;
use std::path::{Path, PathBuf};

use toolrank_core::competition::CompetitionError;
use toolrank_core::frontend::FrontendError;
use toolrank_core::graph::GraphError;
use toolrank_core::ranking::RankingError;
use toolrank_core::svm::SvmError;
use toolrank_core::wl::KernelError;

pub mod cli;
pub mod dataset;
pub mod experiment;
pub mod graph_json;
pub mod kernel;
pub mod model;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    At { path: PathBuf, source: Box<Error> },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Competition(#[from] CompetitionError),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_owned(), source }
    }

    /// Attach the file the error came from.
    pub fn at(self, path: &Path) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::At { .. }) => e,
            e => Error::At { path: path.to_owned(), source: Box::new(e) },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
