//! Data model for two-stage stochastic programs: a deterministic first
//! stage plus a finite set of scenarios, each a second-stage program in
//! the uncertain parameters (q, W, h, T).
//!
//! The crate also ships the CFLP and NDP instance generators, extensive
//! form construction (optionally restricted to an ordered scenario
//! selection), exact first-stage evaluation through the embedded solver,
//! and a line-oriented text format that round-trips instances bit-exact.
//!
//! Instances are immutable after construction; generators are pure
//! functions of their parameters and seed.

mod cflp;
mod ef;
mod error;
mod eval;
mod io;
mod model;
mod ndp;

pub use cflp::gen_cflp;
pub use ef::{build_extensive_form, cache_optimum, solve_ef, solve_ef_enumerated};
pub use error::CoreError;
pub use eval::evaluate_first_stage;
pub use io::{read_instance, read_instance_path, write_instance, write_instance_path};
pub use model::{
    augment_instance, CachedOptimum, FirstStage, InstanceMeta, ProblemFamily, ReducedSelection,
    Scenario, SpInstance, VarKind,
};
pub use ndp::gen_ndp;
