//! Reads a network's files from disk and builds its model.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{merge_sources, FileRole, Fragment, NetworkModel};
use crate::script::parse_script;
use crate::yaml::{parse_compose, parse_configtx, parse_crypto_config, parse_yaml_bytes, HostEnv};

/// Files of one network by role, as paths on disk.
pub type NetworkFiles = BTreeMap<FileRole, Vec<PathBuf>>;

#[derive(Debug, Error)]
#[error("cannot read {path}: {source}")]
pub struct LoadError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// The name a file is reported under: relative to `root` when inside it,
/// with `/` separators.
pub fn display_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    let text = rel.to_string_lossy().replace('\\', "/");
    if text.is_empty() {
        path.to_string_lossy().into_owned()
    } else {
        text
    }
}

/// Parses one file's bytes according to its role.
pub fn parse_file(role: FileRole, name: &str, bytes: &[u8], host_env: &HostEnv) -> Fragment {
    if role.is_script() {
        return Fragment::Script(parse_script(&String::from_utf8_lossy(bytes), name, role));
    }
    let tree = match parse_yaml_bytes(bytes, name) {
        Ok(tree) => tree,
        Err(finding) => return Fragment::Unparsed { role, path: name.to_string(), findings: vec![finding] },
    };
    match role {
        FileRole::CryptoConfig => Fragment::CryptoConfig(parse_crypto_config(&tree)),
        FileRole::Configtx => Fragment::Configtx(parse_configtx(&tree)),
        _ => Fragment::Compose(parse_compose(&tree, host_env)),
    }
}

pub fn load_network(root: &Path, files: &NetworkFiles, host_env: &HostEnv) -> Result<NetworkModel, LoadError> {
    let mut fragments = Vec::new();
    for (role, paths) in files {
        for path in paths {
            let bytes = std::fs::read(path).map_err(|source| LoadError { path: path.clone(), source })?;
            fragments.push(parse_file(*role, &display_path(root, path), &bytes, host_env));
        }
    }
    Ok(merge_sources(fragments))
}
