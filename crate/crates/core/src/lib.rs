//! Exact simulation of measurement-driven preparation of symmetric (Dicke)
//! states on bipartite and star spin-½ networks.
//!
//! A supplementary register of `N` spins couples to every spin of a target
//! register of `M` spins. Repeated z-measurements of the supplementary
//! register steer the target register through the symmetric states
//! `|S(M, k)⟩` until the requested `k` is found.

pub mod amalg;
pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolve;
pub mod hamiltonian;
pub mod measure;
pub mod rus;
pub mod search;
pub mod statespace;

pub use amalg::{cg, HalfInt};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use hamiltonian::{NetworkConfig, Topology};
pub use statespace::{CollectiveState, FullState, HybridState, StateVector, C64};
