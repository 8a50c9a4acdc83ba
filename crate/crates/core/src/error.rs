use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("coordinate {value} outside grid extent [{lo}, {hi}]")]
    OutOfExtent { value: f64, lo: f64, hi: f64 },

    #[error("step rejected at t = {t}: non-positive or non-finite conformal factor at node {node}")]
    StepRejected { node: usize, t: f64 },

    #[error("trajectory does not cover window [{lo}, {hi}]")]
    WindowNotCovered { lo: f64, hi: f64 },

    #[error("degenerate pick: curvature functional vanishes on the window")]
    DegeneratePick,

    #[error("insufficient window: {0}")]
    InsufficientWindow(String),

    #[error("embedding obstruction at s = {s}: h' = {hprime} outside [0, 1]")]
    Obstruction { s: f64, hprime: f64 },

    #[error("value {value} outside range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
