//! Discrete incompressible flows on cube tilings of `[0,1]^ν`.
//!
//! A permutation of the `N^ν` cubes is connected to the identity by a
//! sequence of movements, each swapping disjoint couples of cubes. This crate
//! validates and costs such flows, builds explicit ones with bounded cost,
//! computes exact shortest-flow distances on tiny tilings, and integrates the
//! continuous divergence-free fields that swap two distant cubes of an array.
//!
//! - [`lattice`]: tilings, regions, permutations, colorings, the L² metric.
//! - [`movements`]: S- and E-movements, discrete flows, the flow text format.
//! - [`routing`]: bounded-duration routing and coloring flows.
//! - [`pipeline`]: the three-step construction and the exponent experiment.
//! - [`oracle`]: Dijkstra over the Cayley graph of movements.
//! - [`contflow`]: the piecewise affine swapping field in the plane.
//! - [`suites`]: the acceptance checks shared by tests and the CLI.

pub mod contflow;
pub mod error;
pub mod lattice;
pub mod movements;
pub mod oracle;
pub mod pipeline;
pub mod routing;
pub mod suites;

pub use error::{Error, Result};
pub use lattice::{Coloring, CubeId, Permutation, RegionKind, RegionSpec, Tiling};
pub use movements::{CoupleSequence, DiscreteFlow, EMovement, Movement, SMovement, Violation};
