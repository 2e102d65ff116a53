//! configtx.yaml: ordering-service parameters, organizations, profiles.

use crate::model::{
    ConfigtxFragment, ConsensusType, Finding, Level, MspDeclaration, OrdererConfig, PatternId,
    SourceLocation,
};

use super::tree::{DocumentTree, Node};
use super::units::{parse_bytes, parse_duration_ms};

/// Reads the top-level `Orderer` section (or the first profile's, when the
/// top level has none), every organization's `Name`/`ID`/`MSPDir`, and the
/// profile names. Unparsable durations and sizes leave the field absent and
/// add a syntax finding.
pub fn parse_configtx(tree: &DocumentTree) -> ConfigtxFragment {
    let mut fragment = ConfigtxFragment { path: tree.path.clone(), ..Default::default() };
    let Some(root) = tree.root.as_ref().filter(|r| r.is_mapping()) else {
        return fragment;
    };

    if let Some(profiles) = root.get("Profiles") {
        for (k, _) in profiles.entries() {
            if let Some(name) = k.as_str() {
                fragment.profiles.push((name.to_string(), k.location.line_only()));
            }
        }
    }

    let orderer = root.get_entry("Orderer").or_else(|| {
        root.get("Profiles")
            .into_iter()
            .flat_map(|p| p.entries())
            .find_map(|(_, profile)| profile.get_entry("Orderer"))
    });
    if let Some((key, section)) = orderer {
        fragment.orderer = read_orderer(key, section, &mut fragment.findings);
    }

    let mut orgs = root.get("Organizations").and_then(Node::as_sequence).unwrap_or_default().to_vec();
    if orgs.is_empty() {
        orgs = profile_orgs(root);
    }
    for org in &orgs {
        let Some(id) = org.get("ID").and_then(Node::as_str) else { continue };
        if fragment.orgs.iter().any(|o| o.id == id) {
            continue;
        }
        let location = org
            .get_entry("ID")
            .map_or_else(|| org.location.line_only(), |(k, _)| k.location.line_only());
        fragment.orgs.push(MspDeclaration {
            name: org.get("Name").and_then(Node::as_str).map(str::to_string),
            id: id.to_string(),
            msp_dir: org.get("MSPDir").and_then(Node::as_str).map(str::to_string),
            location,
        });
    }
    fragment
}

fn profile_orgs(root: &Node) -> Vec<Node> {
    let mut out = Vec::new();
    let Some(profiles) = root.get("Profiles") else { return out };
    for (_, profile) in profiles.entries() {
        let mut sections: Vec<&Node> = Vec::new();
        sections.extend(profile.get("Orderer"));
        sections.extend(profile.get("Application"));
        if let Some(consortiums) = profile.get("Consortiums") {
            sections.extend(consortiums.entries().into_iter().map(|(_, v)| v));
        }
        for s in sections {
            out.extend(s.get("Organizations").and_then(Node::as_sequence).unwrap_or_default().iter().cloned());
        }
    }
    out
}

fn read_orderer(key: &Node, section: &Node, findings: &mut Vec<Finding>) -> OrdererConfig {
    let mut cfg = OrdererConfig { location: Some(key.location.line_only()), ..Default::default() };
    let note = |cfg: &mut OrdererConfig, name: &str, node: &Node| {
        cfg.field_locations.insert(name.to_string(), node.location.line_only());
    };

    if let Some((k, v)) = section.get_entry("OrdererType") {
        note(&mut cfg, "OrdererType", k);
        cfg.consensus_type = v.as_str().map_or(ConsensusType::Unknown, ConsensusType::from_text);
    }
    if let Some((k, v)) = section.get_entry("BatchTimeout") {
        note(&mut cfg, "BatchTimeout", k);
        match v.as_str() {
            Some(text) => match parse_duration_ms(text) {
                Some(ms) => cfg.batch_timeout_ms = Some(ms),
                None => findings.push(unit_finding("BatchTimeout", text, "duration", &k.location)),
            },
            None if v.is_null() => {}
            None => findings.push(unit_finding("BatchTimeout", "<non-scalar>", "duration", &k.location)),
        }
    }
    if let Some(batch) = section.get("BatchSize") {
        if let Some((k, v)) = batch.get_entry("MaxMessageCount") {
            note(&mut cfg, "MaxMessageCount", k);
            match v.as_u64() {
                Some(n) => cfg.max_message_count = Some(n),
                None if v.is_null() => {}
                None => findings.push(unit_finding(
                    "MaxMessageCount",
                    v.as_str().unwrap_or("<non-scalar>"),
                    "integer",
                    &k.location,
                )),
            }
        }
        for (name, slot) in [
            ("AbsoluteMaxBytes", &mut cfg.absolute_max_bytes),
            ("PreferredMaxBytes", &mut cfg.preferred_max_bytes),
        ] {
            if let Some((k, v)) = batch.get_entry(name) {
                cfg.field_locations.insert(name.to_string(), k.location.line_only());
                match v.as_str().and_then(parse_bytes) {
                    Some(n) => *slot = Some(n),
                    None if v.is_null() => {}
                    None => findings.push(unit_finding(
                        name,
                        v.as_str().unwrap_or("<non-scalar>"),
                        "byte size",
                        &k.location,
                    )),
                }
            }
        }
    }

    if let Some((k, v)) = section.get_entry("Addresses") {
        note(&mut cfg, "Addresses", k);
        cfg.orderer_addresses = v
            .as_sequence()
            .unwrap_or_default()
            .iter()
            .filter_map(Node::as_str)
            .map(|s| s.trim().to_string())
            .collect();
    }
    if cfg.orderer_addresses.is_empty() {
        let consenters = section
            .get("EtcdRaft")
            .and_then(|r| r.get_entry("Consenters"));
        if let Some((k, list)) = consenters {
            note(&mut cfg, "Addresses", k);
            for c in list.as_sequence().unwrap_or_default() {
                if let Some(host) = c.get("Host").and_then(Node::as_str) {
                    cfg.orderer_addresses.push(match c.get("Port").and_then(Node::as_str) {
                        Some(port) => format!("{host}:{port}"),
                        None => host.to_string(),
                    });
                }
            }
        }
    }
    cfg
}

fn unit_finding(key: &str, text: &str, expected: &str, location: &SourceLocation) -> Finding {
    Finding::new(
        PatternId::YamlSyntax,
        Level::Error,
        "invalid value",
        format!("{key} value `{text}` is not a valid {expected}"),
        location.clone(),
        format!("Write {key} as a valid {expected} (for example `2s`, `10`, `99 MB`)."),
    )
}
