use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("too few vertices: need at least {needed}, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("zero-length link between vertices {index} and {next}")]
    ZeroLengthLink { index: usize, next: usize },
    #[error("all points are collinear")]
    AllCollinear,
    #[error("chain must be closed")]
    NotClosed,
    #[error("chain must be open")]
    NotOpen,
    #[error("chain is not planar (z = 0)")]
    NotPlanar,
    #[error("chain is not simple: edges {0} and {1} come too close")]
    NotSimple(usize, usize),
    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("four-bar closure unreachable at t = {t}: {angle}")]
    ClosureUnreachable { t: f64, angle: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("no regular projection found within budget")]
    NoRegularProjection,
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
