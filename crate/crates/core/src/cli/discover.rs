use std::path::Path;

use walkdir::WalkDir;

use crate::loader::NetworkFiles;
use crate::model::FileRole;

/// How far below the network directory files are looked for:
/// `root/a/b/file` is found, `root/a/b/c/file` is not.
pub const MAX_DEPTH: usize = 3;

fn role_of(rel_components: &[String]) -> Option<FileRole> {
    let name = rel_components.last()?.as_str();
    let yaml = name.ends_with(".yaml") || name.ends_with(".yml");
    if yaml && name.starts_with("crypto-config") {
        Some(FileRole::CryptoConfig)
    } else if yaml && name.starts_with("configtx") {
        Some(FileRole::Configtx)
    } else if yaml && name.starts_with("docker-compose") {
        Some(FileRole::Compose)
    } else if name.ends_with(".sh") {
        match rel_components {
            [_] => Some(FileRole::StartScript),
            [.., dir, _] if dir == "scripts" => Some(FileRole::ChannelScript),
            _ => None,
        }
    } else {
        None
    }
}

/// Assigns files under `root` to roles by name.
///
/// Crypto-config and configtx take one file each: the shallowest, then the
/// lexicographically first. Compose files and scripts keep every match in
/// lexicographic order. Hidden directories are skipped.
pub fn discover_files(root: &Path) -> std::io::Result<NetworkFiles> {
    let mut found: Vec<(usize, String, FileRole, std::path::PathBuf)> = Vec::new();
    let walker = WalkDir::new(root)
        .min_depth(1)
        .max_depth(MAX_DEPTH)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(|e| {
            let kind = e.io_error().map_or(std::io::ErrorKind::Other, |io| io.kind());
            std::io::Error::new(kind, e.to_string())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let components: Vec<String> = rel.iter().map(|c| c.to_string_lossy().into_owned()).collect();
        if let Some(role) = role_of(&components) {
            found.push((components.len(), components.join("/"), role, entry.into_path()));
        }
    }
    found.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut files = NetworkFiles::new();
    for (_, _, role, path) in found {
        let paths = files.entry(role).or_default();
        let single = matches!(role, FileRole::CryptoConfig | FileRole::Configtx);
        if !(single && !paths.is_empty()) {
            paths.push(path);
        }
    }
    if let Some(compose) = files.get_mut(&FileRole::Compose) {
        compose.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then(a.cmp(b)));
    }
    Ok(files)
}
