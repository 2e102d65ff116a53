//! crypto-config.yaml: organizations and their hosts.

use crate::model::{CryptoFragment, OrgKind, OrgSpec, StructuralNote};

use super::tree::{DocumentTree, Node};

/// Reads `PeerOrgs` and `OrdererOrgs`. A file whose top level is itself a
/// single org entry (`Name`/`Domain`/`Specs`) is read as one peer org.
pub fn parse_crypto_config(tree: &DocumentTree) -> CryptoFragment {
    let mut fragment = CryptoFragment { path: tree.path.clone(), ..Default::default() };
    let Some(root) = tree.root.as_ref().filter(|r| r.is_mapping()) else {
        if !tree.is_empty() {
            fragment.notes.push(StructuralNote {
                message: "crypto-config top level is not a mapping; no organizations declared".into(),
                location: tree.root.as_ref().map(|r| r.location.line_only()).unwrap(),
            });
        }
        return fragment;
    };

    let mut found_section = false;
    for (section, kind) in [("PeerOrgs", OrgKind::Peer), ("OrdererOrgs", OrgKind::Orderer)] {
        let Some(list) = root.get(section) else { continue };
        found_section = true;
        for entry in list.as_sequence().unwrap_or_default() {
            read_org(entry, kind, &mut fragment);
        }
    }
    if !found_section {
        if root.get("Domain").is_some() {
            read_org(root, OrgKind::Peer, &mut fragment);
        } else {
            fragment.notes.push(StructuralNote {
                message: "crypto-config declares neither PeerOrgs nor OrdererOrgs".into(),
                location: root.location.line_only(),
            });
        }
    }
    fragment
}

fn read_org(entry: &Node, kind: OrgKind, fragment: &mut CryptoFragment) {
    let name = entry.get("Name").and_then(Node::as_str).unwrap_or_default().to_string();
    let location = entry
        .get_entry("Name")
        .map_or_else(|| entry.location.line_only(), |(k, _)| k.location.line_only());
    let Some(domain) = entry.get("Domain").and_then(Node::as_str).filter(|d| !d.trim().is_empty()) else {
        fragment.notes.push(StructuralNote {
            message: format!("organization `{name}` has no Domain"),
            location,
        });
        return;
    };

    let mut hosts: Vec<String> = Vec::new();
    let push = |hosts: &mut Vec<String>, h: String| {
        if !h.is_empty() && !hosts.contains(&h) {
            hosts.push(h);
        }
    };
    for spec in entry.get("Specs").and_then(Node::as_sequence).unwrap_or_default() {
        if let Some(h) = spec.get("Hostname").and_then(Node::as_str) {
            push(&mut hosts, h.trim().to_string());
        }
    }
    let template = entry.get("Template");
    let template_count = template.and_then(|t| t.get("Count")).and_then(Node::as_u64);
    if let (Some(t), Some(count)) = (template, template_count) {
        let start = t.get("Start").and_then(Node::as_u64).unwrap_or(0);
        let pattern = t.get("Hostname").and_then(Node::as_str).unwrap_or("{{.Prefix}}{{.Index}}");
        let prefix = match kind {
            OrgKind::Peer => "peer",
            OrgKind::Orderer => "orderer",
        };
        for index in start..start + count {
            push(&mut hosts, render_template(pattern, prefix, index));
        }
    }
    if kind == OrgKind::Orderer && hosts.is_empty() {
        // cryptogen's default orderer host
        hosts.push("orderer".into());
    }

    fragment.orgs.push(OrgSpec {
        name,
        domain: domain.trim().to_string(),
        kind,
        msp_id: None,
        peer_hostnames: hosts,
        template_count,
        user_count: entry.get("Users").and_then(|u| u.get("Count")).and_then(Node::as_u64),
        location,
    });
}

fn render_template(pattern: &str, prefix: &str, index: u64) -> String {
    pattern
        .replace("{{.Prefix}}", prefix)
        .replace("{{ .Prefix }}", prefix)
        .replace("{{.Index}}", &index.to_string())
        .replace("{{ .Index }}", &index.to_string())
}
