use std::path::PathBuf;

/// Broad class of a failure, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Config,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file} line {line}: {message}")]
    MalformedRow { file: String, line: u64, message: String },

    #[error("{file}: header does not match schema, expected [{expected}]")]
    Header { file: String, expected: String },

    #[error("{entity} {id}: {message}")]
    Invalid {
        module: &'static str,
        op: &'static str,
        entity: &'static str,
        id: String,
        message: String,
    },

    #[error("individual {person_id} references missing household {household_id}")]
    DanglingHousehold { person_id: String, household_id: String },

    #[error("duplicate {entity} id {id}")]
    DuplicateId { entity: &'static str, id: String },

    #[error("population is empty")]
    EmptyPopulation,

    #[error("configuration: {0}")]
    Config(String),

    #[error("no sector mapping for sector {sector_code} (person {person_id})")]
    MissingSector { person_id: String, sector_code: String },

    #[error("raking did not converge after {iterations} iterations; worst margin {margin} off by {worst_error:.3e}")]
    NoConvergence { iterations: usize, margin: String, worst_error: f64 },

    #[error("margin {margin}: category {category} has no weight in the population")]
    AbsentCategory { margin: String, category: String },

    #[error("{op}: {message}")]
    Numerical { module: &'static str, op: &'static str, message: String },

    #[error("{what} is empty")]
    EmptyGroup { what: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::MalformedRow { .. }
            | Error::Header { .. }
            | Error::DanglingHousehold { .. }
            | Error::DuplicateId { .. }
            | Error::EmptyPopulation
            | Error::MissingSector { .. }
            | Error::EmptyGroup { .. } => ErrorClass::Input,
            Error::Invalid { module, .. } if *module == "population" => ErrorClass::Input,
            Error::Invalid { .. } | Error::Config(_) | Error::AbsentCategory { .. } => ErrorClass::Config,
            Error::NoConvergence { .. } | Error::Numerical { .. } => ErrorClass::Numerical,
        }
    }

    /// Module and operation the error originated from.
    pub fn origin(&self) -> (&'static str, &'static str) {
        match self {
            Error::Io { .. } => ("io", "read"),
            Error::MalformedRow { .. } | Error::Header { .. } => ("population", "load_population"),
            Error::DanglingHousehold { .. } | Error::DuplicateId { .. } | Error::EmptyPopulation => {
                ("population", "load_population")
            }
            Error::Invalid { module, op, .. } | Error::Numerical { module, op, .. } => (module, op),
            Error::Config(_) => ("config", "load"),
            Error::MissingSector { .. } => ("shock_engine", "apply_shock"),
            Error::NoConvergence { .. } | Error::AbsentCategory { .. } => ("population", "reweight"),
            Error::EmptyGroup { .. } => ("metrics", "group_metrics"),
        }
    }

    /// Offending record id, when there is one.
    pub fn record(&self) -> Option<String> {
        match self {
            Error::Io { path, .. } => Some(path.display().to_string()),
            Error::MalformedRow { file, line, .. } => Some(format!("{file}:{line}")),
            Error::Header { file, .. } => Some(file.clone()),
            Error::Invalid { id, .. } => Some(id.clone()),
            Error::DanglingHousehold { household_id, .. } => Some(household_id.clone()),
            Error::DuplicateId { id, .. } => Some(id.clone()),
            Error::MissingSector { person_id, .. } => Some(person_id.clone()),
            Error::NoConvergence { margin, .. } => Some(margin.clone()),
            Error::AbsentCategory { margin, category } => Some(format!("{margin}={category}")),
            Error::EmptyGroup { what } => Some(what.clone()),
            Error::EmptyPopulation | Error::Config(_) | Error::Numerical { .. } => None,
        }
    }

    pub(crate) fn numerical(module: &'static str, op: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical { module, op, message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
