use std::fmt;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge {0}-{1} already present")]
    DuplicateEdge(NodeId, NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("choice set is empty")]
    EmptyChoiceSet,

    #[error("bad mixture weights: {0}")]
    BadWeights(String),
    #[error("component {0} appears more than once")]
    DuplicateComponent(String),
    #[error("cannot parse model spec `{input}`: {reason}")]
    SpecParse { input: String, reason: String },

    #[error("malformed event stream at event {index}: {reason}")]
    MalformedStream { index: usize, reason: String },
    #[error("reports are not comparable: {0}")]
    IncomparableReports(String),

    #[error("every candidate component assigns zero probability at event {index}")]
    AllZeroSteps { index: usize },
    #[error("invalid fit configuration: {0}")]
    Config(String),

    #[error("event stream is empty or has no new-node events")]
    EmptyStream,
    #[error("replay skeleton exhausted after {produced} edges, before reaching {target}")]
    Exhausted { produced: usize, target: usize },
    #[error("no legal internal edge exists ({nodes} nodes, complete graph)")]
    Stuck { nodes: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("self-loop record at line {line}")]
    SelfLoopRecord { line: usize },
    #[error("warm-up of {warm} events leaves nothing to score out of {total}")]
    WarmupTooLarge { warm: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn malformed(index: usize, reason: impl fmt::Display) -> Self {
        Error::MalformedStream { index, reason: reason.to_string() }
    }

    /// Whether the failure is numerical (as opposed to bad input or usage).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::EmptyChoiceSet | Error::AllZeroSteps { .. } | Error::Stuck { .. })
    }
}
