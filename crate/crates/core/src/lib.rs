//! Exact sampling and diagnostics for Galton-Watson trees conditioned on
//! both the number of vertices and the number of leaves.
//!
//! * [`offspring`]: offspring laws and the alpha-shifted law with leaf mass `alpha`.
//! * [`encodings`]: ordered trees, degree sequences, Lukasiewicz / contour /
//!   height paths and the cycle-lemma rotation.
//! * [`sampler`]: the exact sampler, a feasibility test and an exhaustive
//!   enumerator for small sizes.
//! * [`analysis`]: Monte Carlo statistics on batches of trees.
//! * [`llt`]: local limit theorem numerics for truncated lattice sums.
//! * [`verify`]: named end-to-end checks with JSON-serialisable reports.

pub mod analysis;
pub mod encodings;
pub mod llt;
pub mod offspring;
pub mod sampler;
pub mod verify;

pub use encodings::{cyclic_shift, Allocation, EncodingError, LatticePath, OrderedTree, PathRole};
pub use offspring::{AlphaShift, OffspringDistribution, OffspringError};
pub use sampler::{
    enumerate_exact, feasible, sample_tree, stream_rng, SampleConfig, SampledTree, SamplerError,
    TreeSampler,
};
