//! Lebesgue–Stieltjes convolution powers of counting functions, branching
//! random walks generated by globally perturbed random walks, their limit
//! processes, and a harness that checks the limit theorems numerically.

mod conv;
pub mod error;
pub mod gridfun;
pub mod limits;
pub mod processes;
pub mod rng;
pub mod special;
pub mod stepfun;
pub mod verify;

pub use error::{Error, Result};
pub use gridfun::{GridFunction, PowerFunction};
pub use limits::{LimitKind, LimitPathSpec};
pub use processes::{DistributionSpec, MeanFunction, WalkSpec};
pub use rng::{ReplicaStreams, Substreams};
pub use stepfun::{ConvolveOptions, StepFunction};
pub use verify::{ExperimentConfig, ExperimentReport, Theorem};
