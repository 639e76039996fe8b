use thiserror::Error;

pub type Result<T, E = HdeError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HdeError {
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("empty class identifier")]
    EmptyIdentifier,

    #[error("self-loop on node {0}")]
    SelfLoop(String),

    #[error("duplicate edge {parent} -> {child}")]
    DuplicateEdge { parent: String, child: String },

    #[error("directed cycle: {}", .cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },

    #[error("synthetic root name {0} is already used by a non-root node")]
    RootNameCollision(String),

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("level map was not computed from this graph")]
    LevelMismatch,

    #[error("{context}: expected {expected} values, found {found}")]
    Alignment {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("missing class column {class} in {origin}")]
    MissingClass { class: String, origin: String },

    #[error("value {value} outside [0, 1] at {location}")]
    Range { location: String, value: f64 },

    #[error("weight {0} outside [0, 1]")]
    WeightRange(f64),

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{nodes} nodes exceeds the oracle cap of {cap}")]
    Size { nodes: usize, cap: usize },

    #[error("no convergence after {sweeps} sweeps (last change {last_change:e})")]
    Convergence { sweeps: usize, last_change: f64 },
}

impl HdeError {
    /// Stable machine-readable code used on the CLI diagnostic stream.
    pub fn code(&self) -> &'static str {
        match self {
            HdeError::Io { .. } => "E_IO",
            HdeError::Parse { .. } => "E_PARSE",
            HdeError::EmptyGraph => "E_EMPTY_GRAPH",
            HdeError::EmptyIdentifier => "E_EMPTY_ID",
            HdeError::SelfLoop(_) => "E_SELF_LOOP",
            HdeError::DuplicateEdge { .. } => "E_DUPLICATE_EDGE",
            HdeError::Cycle { .. } => "E_CYCLE",
            HdeError::RootNameCollision(_) => "E_ROOT_COLLISION",
            HdeError::UnknownNode(_) => "E_UNKNOWN_NODE",
            HdeError::LevelMismatch => "E_LEVELS",
            HdeError::Alignment { .. } => "E_ALIGNMENT",
            HdeError::MissingClass { .. } => "E_MISSING_CLASS",
            HdeError::Range { .. } => "E_RANGE",
            HdeError::WeightRange(_) => "E_WEIGHT_RANGE",
            HdeError::EmptyGrid => "E_EMPTY_GRID",
            HdeError::Parameter(_) => "E_PARAM",
            HdeError::Size { .. } => "E_SIZE",
            HdeError::Convergence { .. } => "E_CONVERGENCE",
        }
    }

    pub(crate) fn alignment(context: impl Into<String>, expected: usize, found: usize) -> Self {
        HdeError::Alignment {
            context: context.into(),
            expected,
            found,
        }
    }
}
