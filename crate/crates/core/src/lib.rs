//! Exact solver toolkit for the yard saturation problem and its periodic
//! variant.
//!
//! Given a transshipment-yard description (resources with capacities, an
//! operation catalog, train services with arrival/departure windows) the
//! toolkit answers: how many additional candidate services can be scheduled
//! on top of a fixed timetable without disrupting it, and what are the
//! operational schedules (plan, route, start time per operation) that
//! realize the maximum?
//!
//! The pipeline is:
//!
//! 1. [`instance`] — domain model, validation, derived quantities
//!    (makespan, replica count, minimum stays and occupations).
//! 2. [`graph`] — the disjunctive graph: strict precedence arcs per train,
//!    time-window arcs through the origin, conflict tuples with periodic
//!    offsets, unavailability arcs, per-node time bounds.
//! 3. [`solver`] — exact resolution via incremental cardinality floors and
//!    lazy capacity separation over per-resource interval graphs.
//! 4. [`milp`] / [`mps`] — the equivalent big-M mixed-integer model and its
//!    MPS export for cross-validation with general-purpose solvers.
//! 5. [`validator`] — an independent oracle implementing the feasibility
//!    definitions directly on the instance, plus a guarded brute-force
//!    optimizer for small instances.
//! 6. [`heuristic`] — the two-step warm-start procedure (utilization
//!    balancing, then saturation with tolerance-pinned schedules).
//!
//! All times are integer ticks (tenths of a minute); arithmetic is exact.

pub mod graph;
pub mod heuristic;
pub mod instance;
pub mod milp;
pub mod mps;
pub mod solver;
pub mod time;
pub mod validator;

pub use instance::{DerivedQuantities, Instance, InstanceError};
pub use time::Ticks;
