//! Crate-wide error type. Every fallible public operation returns
//! [`Result`]; variants carry enough context to act on without a backtrace.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // Graphs and tables.
    #[error("graph needs at least 2 nodes, got {0}")]
    DegenerateGraph(usize),
    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge { i: u32, j: u32, reason: String },
    #[error("no column named {0:?}")]
    MissingColumn(String),
    #[error("column {column:?} has no level {level:?}")]
    UnknownLevel { column: String, level: String },
    #[error("column {column:?}: {reason}")]
    BadColumn { column: String, reason: String },
    #[error("table has {rows} rows but the graph has {nodes} nodes")]
    SizeMismatch { rows: usize, nodes: usize },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    // Models and fitting.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("sampler fault: {0}")]
    SamplerFault(String),
    #[error("fit did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("apparent separation: coefficient on {term:?} diverged to {value:.2}")]
    Separation { term: String, value: f64 },
    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    // Copula synthesis.
    #[error("invalid marginal {name:?}: {reason}")]
    InvalidMarginal { name: String, reason: String },
    #[error("invalid correlation target: {0}")]
    InvalidCorrelation(String),
    #[error(
        "target Spearman {target} for pair ({a:?}, {b:?}) lies outside the attainable range [{lo:.4}, {hi:.4}]"
    )]
    InfeasibleTarget {
        a: String,
        b: String,
        target: f64,
        lo: f64,
        hi: f64,
    },

    // Estimation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate arm: no observations with exposure z = {0}")]
    DegenerateArm(u8),
    #[error("fitted propensity {0:.3e} is at the boundary; inverse weights undefined")]
    PropensityBoundary(f64),

    // Study harness.
    #[error("invalid study config: {0}")]
    Config(String),
    #[error("{failed} of {total} replicates failed (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("no series recorded for estimator {method:?} under scenario {scenario:?}")]
    NoSuchSeries { method: String, scenario: String },
    #[error("no admissible school size after {0} draws")]
    SizeRedraw(usize),
    #[error("internal fault: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
