//! Solvers for the individuals/activities (IA) coalition-formation problem.
//!
//! An IA problem matches individuals to capacitated activities according to
//! their interests in the activities and their affinities for each other.
//! This crate provides:
//!
//! - [`model`]: problem instances, matchings, utilities and soundness;
//! - [`io`]: the JSON problem/matching file formats;
//! - [`generate`]: seeded random instance generation;
//! - [`criteria`]: individual rationality, stability, efficiency, welfare
//!   and social-cohesion checks for sound matchings;
//! - [`oracle`]: exhaustive enumeration of sound matchings at desk scale,
//!   exact welfare optima and a per-property census;
//! - [`engine`]: the centralized selective and inclusive clearing-house
//!   mechanisms plus a hill-climbing baseline;
//! - [`dist`]: the same mechanisms executed as asynchronous message-passing
//!   agents under a seeded scheduler.

pub mod criteria;
pub mod dist;
pub mod engine;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;

pub use criteria::{Check, PropertyReport, SocialRule};
pub use model::{
    activity_status, validate_matching, Activity, ActivityStatus, Coalition, IAProblem,
    Individual, Matching, Target,
};
