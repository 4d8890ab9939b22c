//! Koopman operator learning from trajectory data, with discrete-symmetry
//! exploitation across disjoint invariant sets.
//!
//! The pieces: [`dynamics`] (benchmark vector fields and RK4 integration),
//! [`observables`] (lifting dictionaries), [`edmd`] (least-squares Koopman
//! fitting and prediction), [`basin`] (invariant-set indicator), [`symmetry`]
//! (group actions, data augmentation, and the symmetry-constrained global
//! predictor), and [`harness`] (the Duffing and Lorenz benchmark pipelines).

pub mod basin;
pub mod dynamics;
pub mod edmd;
pub mod error;
pub mod harness;
pub mod io;
pub mod observables;
pub mod symmetry;

pub use dynamics::{State, Trajectory};
pub use error::{Error, Result};
