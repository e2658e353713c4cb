//! Planning and simulation toolkit for multiscale computing applications.
//!
//! A multiscale application is described in MMD, a small line-oriented text
//! format listing submodels (with their temporal and spatial scales), the
//! couplings between them, and an optional pattern hint. From that single
//! description the library can:
//!
//! * validate the model and compute its scale separation map ([`model`]),
//! * unfold the coupling structure into an acyclic task graph ([`taskgraph`]),
//! * classify the model as extreme scaling (ES), heterogeneous multiscale
//!   computing (HMC) or replica computing (RC) and assign roles ([`patterns`]),
//! * predict runtimes, pick processor splits and frequencies ([`perf`]),
//! * produce an execution plan and simulate it with fault injection and
//!   energy accounting ([`engine`]).
//!
//! The crate is library-first: each major capability has a runnable program
//! under `examples/` (try `cargo run --example split_optimizer`). A thin
//! `mcplan` binary exposes the same functionality as subcommands
//! (`validate`, `graph`, `plan`, `simulate`, `sweep`); see [`cli`].
//!
//! ```
//! let text = "\
//! model demo
//! submodel coarse dt=1s total=10s dx=1m extent=4m
//! submodel fine dt=1ms total=1s dx=1mm extent=4m role=primary
//! couple coarse -> fine kind=per_cycle
//! ";
//! let m = mcplan::model::parse_model(text).unwrap();
//! assert!(mcplan::model::validate_model(&m).is_empty());
//! let g = mcplan::taskgraph::unfold(&m, 3, &Default::default()).unwrap();
//! assert_eq!(g.nodes().len(), 7); // init(coarse) + 3 iterations of each
//! ```

pub mod cli;
pub mod engine;
pub mod model;
pub mod patterns;
pub mod perf;
pub mod taskgraph;

pub use engine::{plan, simulate, ExecutionPlan, MachineModel, SimReport};
pub use model::{parse_model, validate_model, MultiscaleModel};
pub use patterns::{classify, PatternKind};
pub use perf::{optimal_split, PerfModel};
pub use taskgraph::{unfold, TaskGraph};
