//! Exact integer-lattice geometry toolkit.
//!
//! Everything in this crate is exact: points carry arbitrary-precision
//! integer coordinates, lines are canonical primitive-direction records,
//! densities and condition margins are rationals.  Floating point is never
//! used to decide anything.
//!
//! Module map:
//! - [`lattice`]: points, canonical lines, floor-of-segment enumeration.
//! - [`maps`]: tabulated Lipschitz maps on boxes, path/graph constructions,
//!   gluing of instance families.
//! - [`collinear`]: maximal-collinear-subset search (naive and hashed).
//! - [`density`]: window densities and sup-over-corners density profiles.
//! - [`cylinder`]: discrete cylinder neighborhoods of segments and the
//!   three witness conditions.
//! - [`covering`]: simultaneous Dirichlet approximation, rational
//!   projections, parallel line families, pigeonhole extraction, and the
//!   end-to-end pipeline.
//! - [`estimator`]: exhaustive/heuristic lower-bound search for the
//!   smallest window size forcing k collinear image points.

pub mod collinear;
pub mod covering;
pub mod cylinder;
pub mod density;
pub mod estimator;
pub mod exact;
pub mod io;
pub mod lattice;
pub mod maps;

pub use lattice::{
    canonical_line, collinear3, segment_points, CanonicalLine, GeneralizedSegment, LatticeError,
    LatticePoint, RationalPoint,
};
pub use maps::{LipschitzMap, MapError, Window};
