use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("invalid base {0:?}")]
    InvalidBase(char),
    #[error("empty sequence")]
    Empty,
    #[error("histogram count {count} for {base} does not fit a 6-bit key field")]
    KeyOverflow { base: char, count: u32 },
    #[error("FASTA parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("record {0:?} contains non-ACGT symbols")]
    Ambiguous(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("length mismatch: expected {expected}, got {actual}")]
pub struct LengthError {
    pub expected: usize,
    pub actual: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error(transparent)]
    Length(#[from] LengthError),
    #[error("k = {0} is outside 1..=64")]
    UnsupportedK(usize),
    #[error("confidence table line {line}: {msg}")]
    Table { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("crossbar holds at most {capacity} k-mers, got {requested}")]
    Capacity { capacity: usize, requested: usize },
    #[error(transparent)]
    Length(#[from] LengthError),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("no k-mers loaded")]
    EmptyCrossbar,
    #[error("unsupported sense-amplifier count {0}")]
    SaCount(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilterError {
    #[error("tracing table build: {0}")]
    Build(String),
    #[error("tracing table load: {0}")]
    Load(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DbError {
    #[error("sequence of length {len} is shorter than k = {k}")]
    TooShort { len: usize, k: usize },
    #[error("layout load: {0}")]
    Load(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerfError {
    #[error("invalid performance configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("read of length {len} is shorter than k = {k}")]
    TooShort { len: usize, k: usize },
    #[error("configuration mismatch: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadGenError {
    #[error("genome of length {len} is shorter than the read length {read_len}")]
    TooShort { len: usize, read_len: usize },
    #[error("invalid error profile: {0}")]
    Profile(String),
    #[error("invalid generator configuration: {0}")]
    Config(String),
}
