//! Constraint models, a budgeted solver and the model-splitting machinery
//! used to distribute a search across independent workers.

pub mod domain;
pub mod dominion;
pub mod engine;
pub mod eval;
pub mod model;
pub mod nogood;
pub mod oracle;
pub mod samples;

pub use domain::Domain;
pub use model::{Assignment, Constraint, Model, VarRef};
