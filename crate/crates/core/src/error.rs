use thiserror::Error;

/// Errors produced while building, validating or transforming games and strategies.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown game '{0}' (expected one of rps, kuhn, leduc, leduc-abstract)")]
    UnknownGame(String),

    #[error("unsupported game '{0}' for this operation")]
    UnsupportedGame(String),

    #[error("zero-sum violation at leaf {history}: utilities sum to {sum}")]
    ZeroSum { history: String, sum: f64 },

    #[error("chance probabilities at {history} sum to {sum}")]
    ChanceDistribution { history: String, sum: f64 },

    #[error("perfect-recall violation in information set {label}: {first} and {second} have different own-action histories")]
    PerfectRecall {
        label: String,
        first: String,
        second: String,
    },

    #[error("information set {label} has inconsistent actions at {history}")]
    ActionMismatch { label: String, history: String },

    #[error("invalid label '{0}': labels must be non-empty and free of whitespace, ':' and '|'")]
    InvalidLabel(String),

    #[error("node {history} has no actions")]
    EmptyNode { history: String },

    #[error("frontier histories {ancestor} and {descendant} are nested")]
    NestedFrontier { ancestor: String, descendant: String },

    #[error("information set {key} of player {player} crosses the trunk/subgame boundary")]
    InfosetCrossesBoundary { player: u8, key: String },

    #[error("subgame {0} is unreachable: normalizer k is zero")]
    UnreachableSubgame(usize),

    #[error("subgame {0} has zero joint reach under the trunk strategy")]
    ZeroJointReach(usize),

    #[error("subgame index {0} out of range")]
    NoSuchSubgame(usize),

    #[error("missing counterfactual value for root information set {key} of player {player}")]
    MissingCfv { player: u8, key: String },

    #[error("strategy is missing information set {key} of player {player}")]
    MissingInfoset { player: u8, key: String },

    #[error("invalid distribution at {key}: {reason}")]
    InvalidDistribution { key: String, reason: String },

    #[error("fragment does not match subgame {subgame}: {reason}")]
    FragmentMismatch { subgame: usize, reason: String },

    #[error("iteration count must be at least 1")]
    ZeroIterations,

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
