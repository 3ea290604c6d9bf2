use thiserror::Error;

/// Which side of the board a fault or verdict refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    Alice,
    Bob,
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Player::Alice => "alice",
            Player::Bob => "bob",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("numerically ambiguous: {0}")]
    NumericallyAmbiguous(String),

    #[error("split factor {0} is not in U")]
    NotInU(u64),
    #[error("scale factor must be positive")]
    NonPositiveScale,
    #[error("ball {0} belongs to a different playground")]
    WrongSpace(String),

    #[error("budget exceeded at (m={m}, n={n}) under {parent}: {count} removals, budget {budget}")]
    BudgetExceeded {
        m: usize,
        n: usize,
        parent: String,
        count: usize,
        budget: String,
    },
    #[error("{removed} is not a depth-{depth} descendant of {parent}")]
    NotADescendant {
        parent: String,
        removed: String,
        depth: usize,
    },
    #[error("depth {requested} not built (have {built})")]
    DepthNotBuilt { requested: usize, built: usize },
    #[error("construction is not local: removal at (m={m}, n={n})")]
    NotLocal { m: usize, n: usize },
    #[error("R={r} must exceed M={m}")]
    RNotAboveM { r: String, m: String },

    #[error("{player} strategy failed at turn {turn}: {reason}")]
    StrategyFault {
        player: Player,
        turn: usize,
        reason: String,
    },
    #[error("transcript has no Bob ball")]
    EmptyTranscript,
    #[error("real-line playground needs an explicit Bob move enumerator")]
    InfiniteBranching,

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("no dyadic eta below eps0 satisfies the eta condition")]
    NoEta,
    #[error("play reached depth {0} beyond the built construction")]
    DepthExhausted(usize),
    #[error("no scale index for ball radius {0}")]
    NoScaleIndex(String),
    #[error("parameter gate failed: {0}")]
    ParameterGateFailed(String),
    #[error("not a cover: {0} is uncovered")]
    NotACover(String),
    #[error("{count} bad children under {ball} exceed 10")]
    BadCountExceeded { ball: String, count: usize },
    #[error("sampled family does not certify a cover of {0}")]
    CoverSampleInsufficient(String),
    #[error("cover budget violated: {0}")]
    CoverBudgetViolated(String),
    #[error("budget violated: {0}")]
    BudgetViolated(String),
    #[error("gate failed: {0}")]
    GateFailed(String),
    #[error("target indices {0} and {1} are closer than the required gap {2}")]
    GapTooSmall(u32, u32, u32),
    #[error("first target index {0} is below the reachable minimum {1}")]
    FirstIndexTooSmall(u32, u32),

    #[error("need at least 3 scales, got {0}")]
    TooFewScales(usize),
    #[error("not regular at x={x}, r={r}")]
    NotRegularAtSample { x: String, r: String },
    #[error("no diffuseness witness for {0}")]
    WitnessNotFound(String),
    #[error("children collide: {0}")]
    ChildrenCollide(String),
    #[error("illegal probe: {0}")]
    IllegalProbe(String),
    #[error("no root of the similarity equation in [0,1]")]
    NoRootInUnitInterval,
}

pub type Result<T> = std::result::Result<T, Error>;
