use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("system is not observable (observability matrix condition number {condition:.3e})")]
    NotObservable { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("system order {0} exceeds the supported maximum of {max}", max = crate::lti::MAX_ORDER)]
    OrderTooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel is not a modulating function: no boundary has vanishing derivatives up to order {order}")]
    NotAModulatingFunction { order: usize },

    #[error("signal window not ready: {have} of {need} samples")]
    WindowNotReady { have: usize, need: usize },

    #[error("constraint matrix is rank deficient: rank {rank} of {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("information matrix is singular (condition number {condition:.3e})")]
    SingularGramian { condition: f64 },

    #[error("left modulating function matrix is singular (condition number {condition:.3e})")]
    SingularWl { condition: f64 },

    #[error("observer error dynamics are not Hurwitz (max real part {max_real_part:.3e})")]
    UnstableObserver { max_real_part: f64 },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("coefficients are not physically realizable: {0}")]
    Unphysical(String),

    #[error("unsupported generator: {0}")]
    UnsupportedGenerator(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("csv is missing required column `{0}`")]
    MissingColumn(String),

    #[error("non-uniform time grid at line {line}: expected t = {expected}, found {found}")]
    NonUniformGrid { line: usize, expected: f64, found: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}
