//! Attack-aware cyber insurance.
//!
//! A user and an attacker play a constrained zero-sum game over protection
//! and attack levels; an insurer designs a linear contract `(s, T)` while
//! anticipating the saddle point that contract induces.
//!
//! * [`model`]: domain types, risk level, loss distribution, the game objective.
//! * [`game`]: closed-form and numerical saddle points.
//! * [`contract`]: participation constraints, the insurer's program and the
//!   bi-level equilibrium.
//! * [`montecarlo`]: seeded simulation of the loss model.
//! * [`scenario`]: scenario files, equilibrium reports and parameter sweeps.

pub mod contract;
pub mod error;
pub mod game;
pub mod model;
pub mod montecarlo;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{
    ActionPair, EquilibriumReport, InsurancePolicy, MarketParams, Outcome, UserRiskProfile,
};
