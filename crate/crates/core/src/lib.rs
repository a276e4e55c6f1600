//! Exact belief propagation for pairwise MRFs with truncated ("robust")
//! pairwise potentials.
//!
//! When a pairwise potential equals a constant `fbar` for all but `m` states
//! per column, each message update can be computed in `O(mM)` instead of
//! `O(M^2)` without changing the result, in both sum-product and max-sum BP.
//!
//! * [`mrf`]: model, potentials and the text model format
//! * [`bp`]: kernels, sweep engine, beliefs and label extraction
//! * [`oracle`]: brute-force exact inference for small models
//! * [`stereo`]: stereo matching model and synthetic stereograms
//! * [`imageio`]: PGM reading and writing
//! * [`bench`], [`verify`]: timing harness and fast-vs-standard checks used by the CLI

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bp;
pub mod cli;
pub mod imageio;
pub mod mrf;
pub mod oracle;
pub mod stereo;
pub mod verify;

pub use bp::{BpError, Domain, Engine, Kernel, MessageStore, SweepSchedule};
pub use mrf::{MrfModel, PairwiseTerm, SparseTruncatedPotential};
