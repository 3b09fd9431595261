use thiserror::Error;

use crate::arch::Site;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid architecture dimensions: {0}")]
    InvalidDimension(String),

    #[error("site {0} is outside the {1}x{2} array")]
    SiteOutOfBounds(Site, usize, usize),

    #[error("interaction between {a} and {b} spans {distance:.3}, beyond the maximum {d_max}")]
    OutOfRangeInteraction {
        a: Site,
        b: Site,
        distance: f64,
        d_max: f64,
    },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid benchmark size: {0}")]
    InvalidSize(String),

    #[error("insufficient atoms: circuit needs {needed} qubits but only {available} usable sites remain")]
    InsufficientAtoms { needed: usize, available: usize },

    #[error("routing failure: no interaction path from {from} towards {to}")]
    RoutingFailure { from: Site, to: Site },

    #[error("circuit too large: {height}x{width} bounding box does not fit a {rows}x{cols} array")]
    CircuitTooLarge {
        height: usize,
        width: usize,
        rows: usize,
        cols: usize,
    },

    #[error("not enough disjoint tiles: requested {requested}, at most {available} fit")]
    NotEnoughDisjointTiles { requested: usize, available: usize },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("configuration can never complete its shot target: {0}")]
    NonterminatingConfig(String),

    #[error("no trial records to summarize")]
    EmptyInput,
}
