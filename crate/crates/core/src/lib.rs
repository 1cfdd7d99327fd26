//! N-player mean-variance portfolio games under relative performance
//! concerns, with drift uncertainty resolved by filtering.
//!
//! The crate provides the model parameters and equilibrium constants
//! ([`model`]), seeded path generation and SDE integrators ([`engine`]),
//! the observation filter ([`filtering`]), solvers for the two degenerate
//! Cauchy problems behind the partial-information equilibrium ([`cauchy`]),
//! the equilibrium strategies and value functions ([`equilibrium`]), the
//! multi-investor wealth simulation ([`game`]), configuration and artifact
//! handling ([`config`], [`artifacts`]), and self-check routines
//! ([`verify`]).

pub mod artifacts;
pub mod cauchy;
pub mod config;
pub mod engine;
pub mod equilibrium;
pub mod filtering;
pub mod game;
pub mod model;
pub mod verify;
