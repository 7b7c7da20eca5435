//! Cavity-method analysis of random 3-SAT.
//!
//! * [`instance`]: random formulas, DIMACS I/O, simplification.
//! * [`bp`]: belief propagation with Bethe entropy and marginals.
//! * [`sp`]: survey propagation and the reduced complexity.
//! * [`popdyn`]: population dynamics on the random-tree ensemble and
//!   threshold estimation.
//! * [`decimate`]: survey-inspired decimation with a local-search finish.
//! * [`oracle`]: exact enumeration, clusters and backbones for small formulas.

pub mod error;
pub mod instance;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use instance::{generate_random, Assignment, Clause, Formula, Literal};
pub mod bp;
pub mod sp;
pub mod popdyn;
pub mod decimate;
pub mod stats;
mod schedule;

pub use schedule::UpdateOrder;
