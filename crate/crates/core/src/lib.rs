//! Exact computation in a universal abelian category built from quiver
//! representations.
//!
//! The pipeline starts with dense exact linear algebra over the integers and
//! rationals ([`matrix`], [`module`]), presents diagram categories as path
//! algebras of labeled quivers ([`quiver`]), closes a representation under
//! kernels and cokernels via a free abelian category ([`freyd`]), and divides
//! out the objects invisible to the representation ([`quotient`]).  On top of
//! that sit finite simplicial complexes and their barycentric calculus
//! ([`simplicial`]), cellular sheaves ([`sheaf`]), the motive layer
//! ([`motive`]), and derived pushforwards along maps of pairs
//! ([`pushforward`]).

pub mod category;
pub mod fixtures;
pub mod freyd;
pub mod matrix;
pub mod module;
pub mod motive;
pub mod pushforward;
pub mod quiver;
pub mod quotient;
pub mod sheaf;
pub mod simplicial;

pub use matrix::{Matrix, Ring, Scalar};

/// Errors shared across the whole stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ring mismatch: {0}")]
    Ring(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cyclic quiver: {0}")]
    Cyclic(String),
    #[error("square does not commute: {0}")]
    SquareDoesNotCommute(String),
    #[error("no common stage: {0}")]
    NoCommonStage(String),
    #[error("flatness required: {0}")]
    FlatnessRequired(String),
    #[error("subcomplex chain not nested: {0}")]
    ChainNotNested(String),
    #[error("map is not over the base: {0}")]
    NotOverBase(String),
    #[error("base change certificate failed: {0}")]
    BaseChangeFailed(String),
    #[error("not cellular: {0}")]
    NotCellular(String),
    #[error("adaptedness violated: {0}")]
    AdaptednessViolated(String),
    #[error("unsupported map: {0}")]
    UnsupportedMap(String),
    #[error("not a refinement: {0}")]
    NotARefinement(String),
    #[error("no common adapted filtration: {0}")]
    NoCommonAdaptedFiltration(String),
    #[error("unknown suite: {0}")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
