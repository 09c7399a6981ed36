use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Evaluation failures (step budget, overflow) are distinguished from
/// search failures (work budget, missing modulus) so callers can decide
/// whether a result is wrong or merely uncertified.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("evaluation exceeded the step budget of {limit} steps (nontermination suspected)")]
    StepBudget { limit: u64 },

    #[error("natural-number overflow during evaluation")]
    Overflow,

    #[error("work budget exceeded: need {needed} units, {remaining} remaining")]
    WorkBudget { needed: u64, remaining: u64 },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("definition `{name}` cannot be used as {expected}: {reason}")]
    Shape {
        name: String,
        expected: &'static str,
        reason: String,
    },

    #[error("no definition named `{0}`")]
    UnknownDefinition(String),

    #[error("fan modulus not certified up to depth {depth}")]
    Uncertified { depth: u64 },

    #[error("no modulus found up to depth {depth}")]
    NoModulus { depth: u64 },

    #[error("tree is not closed downwards: {word} is in the tree but its parent is not")]
    NotDownwardClosed { word: String },

    #[error("associate undetermined along {word} up to depth {depth}")]
    AssociateMiss { word: String, depth: u64 },

    #[error("function is not grid-positive: value at grid point {index}/{size} is {value}")]
    NotGridPositive {
        index: u64,
        size: u64,
        value: String,
    },

    #[error("digit encoding needs a nonnegative value, got {value}")]
    NegativeDigit { value: String },

    #[error("real evaluation did not reach precision {precision}")]
    NoConvergence { precision: u32 },

    #[error("malformed partition: {0}")]
    MalformedPartition(String),

    #[error("no finite subcover found within cap {cap}: frontier {frontier} uncovered")]
    NoSubcover { cap: usize, frontier: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
