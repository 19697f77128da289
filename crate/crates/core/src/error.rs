use thiserror::Error;

use crate::fock::Role;
use crate::lang::LangError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode index {0} is not part of the registry")]
    UnknownModeIndex(usize),
    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),
    #[error("states or circuits were built against different mode registries")]
    RegistryMismatch,
    #[error("creation list is empty")]
    EmptyCreationList,
    #[error("mode transform acts twice on mode `{0}`")]
    SameMode(String),
    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("registry has no mode with role `{0}`")]
    MissingRole(Role),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("sagnac phase is symbolic and no value for `phi` was supplied")]
    UnboundPhi,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("vector ({0}, {1}, {2}) is not unit norm")]
    NotUnitVector(f64, f64, f64),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("post-selected state is null (zero coincidence probability)")]
    NullProjection,
    #[error("mode `{0}` has no polarization suffix (.H or .V)")]
    NoPolarization(String),
    #[error("term is not an Alice/Bob coincidence")]
    NotCoincidence,
    #[error("invalid sweep range: {0}")]
    InvalidRange(String),
    #[error("simulation disagrees with closed form at phi = {phi}: {what} differs by {delta:e}")]
    ClosedFormMismatch {
        phi: f64,
        what: &'static str,
        delta: f64,
    },
    #[error(transparent)]
    Lang(#[from] LangError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
