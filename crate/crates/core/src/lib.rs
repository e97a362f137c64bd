//! Monotonically coupled bond percolation on the square lattice.
//!
//! Every edge carries a uniform label; thresholding the same labels at two
//! parameters `p <= p'` gives a pair of configurations with `w_p <= w_p'`.
//! On top of that coupling the crate detects crossing, arm, pivotal and
//! switch events, computes their probabilities exactly on small regions by
//! enumeration, estimates them by Monte Carlo on large ones, and bundles a
//! set of numerical checks in [`harness`].

pub mod arms;
pub mod connectivity;
pub mod estimate;
pub mod events;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod unionfind;

pub use field::{Bonds, Configuration, CoupledField};
pub use geometry::{CrossDomain, DualEdge, DualSite, Edge, LatticeBox, Rect, Region, Site};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("region is empty")]
    EmptyRegion,
    #[error("cannot parse region `{0}`")]
    RegionSyntax(String),
    #[error("scale ratio too small: need 16n <= N, got n={n}, N={big_n}")]
    ScaleRatio { n: i32, big_n: i32 },
    #[error("region has {edges} edges, enumeration limit is {limit}")]
    TooLarge { edges: usize, limit: usize },
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Rejects parameters outside `[0, 1]` and pairs with `p > p'`.
pub fn check_params(p: f64, p_prime: f64) -> Result<(), Error> {
    for (name, v) in [("p", p), ("p'", p_prime)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    if p > p_prime {
        return Err(Error::InvalidParameter(format!("need p <= p', got p = {p}, p' = {p_prime}")));
    }
    Ok(())
}
