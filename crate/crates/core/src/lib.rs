//! Static reasonableness checks for Hyperledger Fabric network
//! configurations.
//!
//! The pipeline is: discover files ([`cli::discover_files`]), parse each
//! into a fragment ([`loader`]), merge into a [`model::NetworkModel`], run
//! the pattern engine ([`patterns::run_all`]), render ([`report`]).

pub mod cli;
pub mod loader;
pub mod model;
pub mod patterns;
pub mod policy;
pub mod report;
pub mod script;
pub mod yaml;
