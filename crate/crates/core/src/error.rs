use thiserror::Error;

/// Errors raised anywhere in the core library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),

    #[error("literal {value} exceeds vmax {vmax}")]
    LiteralTooLarge { value: u64, vmax: u32 },

    #[error("`{0}` is a Target-only construct and cannot appear in Source")]
    TargetOnly(&'static str),

    #[error("ill-formed term: {0}")]
    IllFormed(String),

    #[error("invalid universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid store: {0}")]
    InvalidStore(String),

    #[error("enumeration of {kind} would produce {count} items, above the cap of {cap}")]
    CapExceeded {
        kind: &'static str,
        count: u128,
        cap: usize,
    },

    #[error("values come from different universes")]
    CrossUniverse,

    #[error("concretisation needs a declared bounded trace universe")]
    MissingTraceBound,

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("a Source behaviour cannot contain `!`")]
    BangInSource,

    #[error("a trace ending in TIMEOUT has no finite replay")]
    TimeoutTrace,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },

    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
