//! YAML frontend: syntax checking, the three YAML configuration files,
//! and `${VAR}` interpolation.

mod compose;
mod configtx;
mod crypto;
pub mod interp;
mod tree;
pub mod units;

pub use compose::{cross_service_findings, parse_compose};
pub use configtx::parse_configtx;
pub use crypto::parse_crypto_config;
pub use interp::HostEnv;
pub use tree::{parse_yaml, parse_yaml_bytes, DocumentTree, Node, NodeKind};
