use std::collections::BTreeSet;
use std::path::Path;

use crate::model::{PatternId, ThresholdConfig};
use crate::yaml::{parse_yaml, Node, NodeKind};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LintConfig {
    pub thresholds: ThresholdConfig,
    pub disabled: BTreeSet<PatternId>,
}

const THRESHOLD_KEYS: [&str; 6] = [
    "batch_timeout_min_ms",
    "batch_timeout_max_ms",
    "max_message_count_min",
    "max_message_count_max",
    "complex_min_signers",
    "complex_max_depth",
];

/// Reads a threshold/disable config. `None` gives the defaults. The error
/// text names the offending key.
pub fn load_threshold_config(path: Option<&Path>) -> Result<LintConfig, String> {
    let Some(path) = path else { return Ok(LintConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_threshold_config(&text, &path.to_string_lossy())
}

pub fn parse_threshold_config(text: &str, name: &str) -> Result<LintConfig, String> {
    let tree = parse_yaml(text, name).map_err(|f| format!("{}: {}", f.location, f.message))?;
    let mut config = LintConfig::default();
    let Some(root) = &tree.root else { return Ok(config) };
    let NodeKind::Mapping(_) = &root.kind else {
        return Err(format!("{name}: top level must be a mapping"));
    };
    for (key, value) in root.entries() {
        let key = key.as_str().unwrap_or_default();
        if key == "disable" {
            config.disabled = disabled_patterns(value)?;
            continue;
        }
        if !THRESHOLD_KEYS.contains(&key) {
            return Err(format!("unknown key `{key}` at line {}", value.line()));
        }
        let n = value.as_u64().ok_or_else(|| format!("`{key}` must be a non-negative integer"))?;
        let t = &mut config.thresholds;
        match key {
            "batch_timeout_min_ms" => t.batch_timeout_min_ms = n,
            "batch_timeout_max_ms" => t.batch_timeout_max_ms = n,
            "max_message_count_min" => t.max_message_count_min = n,
            "max_message_count_max" => t.max_message_count_max = n,
            "complex_min_signers" => t.complex_min_signers = n,
            _ => t.complex_max_depth = n,
        }
    }
    config.thresholds.validate()?;
    Ok(config)
}

fn disabled_patterns(value: &Node) -> Result<BTreeSet<PatternId>, String> {
    if value.is_null() {
        return Ok(BTreeSet::new());
    }
    let items = value.as_sequence().ok_or("`disable` must be a list of pattern ids")?;
    items
        .iter()
        .map(|item| {
            let id = item.as_str().ok_or("`disable` entries must be pattern ids")?;
            id.parse::<PatternId>().map_err(|e| format!("disable: {e}"))
        })
        .collect()
}
