use thiserror::Error;

/// Errors raised while building or ingesting networks and covariate tables.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("node id {id} out of range for a network with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("self-loop edge at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("missing {family} covariate row for dyad ({i}, {j})")]
    MissingCovariate { family: &'static str, i: usize, j: usize },
    #[error("duplicate {family} covariate row for dyad ({i}, {j})")]
    DuplicateCovariate { family: &'static str, i: usize, j: usize },
    #[error("Z covariates differ between ({i}, {j}) and ({j}, {i})")]
    AsymmetricZ { i: usize, j: usize },
    #[error("non-finite {family} covariate value for dyad ({i}, {j})")]
    NonFinite { family: &'static str, i: usize, j: usize },
    #[error("{family} covariate row for dyad ({i}, {j}) has {got} values, expected {expected}")]
    RowLength {
        family: &'static str,
        i: usize,
        j: usize,
        got: usize,
        expected: usize,
    },
    #[error("node label table lists {got} labels for {n} nodes")]
    Labels { got: usize, n: usize },
    #[error("{0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Errors raised by likelihood, penalty and inference computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model specification invalid: {0}")]
    Spec(String),
    #[error("parameter vector has length {got}, expected {expected} ({what})")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite dyad index")]
    NonFiniteIndex,
    #[error("dyad ({0}, {1}) invalid")]
    BadDyad(usize, usize),
    #[error("penalty block of node {node} is not positive definite (det = {det:e})")]
    Boundary { node: usize, det: f64 },
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("unknown regressor {0:?}")]
    UnknownRegressor(String),
    #[error("regressor {0:?} is marked binary but takes values outside {{0, 1}}")]
    NotBinary(String),
    #[error("regressor {0:?} appears in both X and Z; qualify it as x.NAME or z.NAME")]
    AmbiguousRegressor(String),
}

/// Outcomes of a fit that did not produce a usable estimate.
#[derive(Debug, Error, Clone)]
pub enum FitError {
    /// The unpenalized likelihood has no finite maximiser on this network.
    #[error("maximum likelihood estimate does not exist (diverging nodes: {nodes:?})")]
    NonExistence { nodes: Vec<usize> },
    #[error("fit did not converge within {iterations} outer iterations")]
    NotConverged {
        iterations: usize,
        partial: Box<crate::solver::FitResult>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trimming removed every node")]
    EmptyAfterTrim,
}
