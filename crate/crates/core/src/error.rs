use thiserror::Error;

/// A caller violated an operation's precondition (dimensions, empty boxes, unknown ids).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("contract violation: {message}")]
pub struct ContractError {
    pub message: String,
}

impl ContractError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(what: &str, got: usize, expected: usize) -> Result<(), ContractError> {
    if got == expected {
        Ok(())
    } else {
        Err(ContractError::new(format!(
            "{what} has dimension {got}, expected {expected}"
        )))
    }
}

/// Umbrella error for the planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Mapping(#[from] crate::mapping::MappingError),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("numeric failure: {0}")]
    Numeric(String),
}
