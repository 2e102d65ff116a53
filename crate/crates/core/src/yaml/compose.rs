//! docker-compose files: services, their environment, and the handful of
//! schema rules the patterns depend on.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{ComposeFragment, ContainerSpec, EnvValue, Finding, Level, PatternId, SourceLocation};

use super::interp::{interpolate, HostEnv};
use super::tree::{DocumentTree, Node, NodeKind};

/// One `ContainerSpec` per entry under `services`, plus Error-level
/// `compose_syntax` findings for the per-file schema rules. Rules that
/// span services (duplicate names, `depends_on` targets) run after all
/// compose files are merged; see [`cross_service_findings`].
pub fn parse_compose(tree: &DocumentTree, host_env: &HostEnv) -> ComposeFragment {
    let path = tree.path.as_str();
    let mut fragment = ComposeFragment { path: path.to_string(), ..Default::default() };
    let top_location = tree
        .root
        .as_ref()
        .map_or_else(|| SourceLocation::at(path, 1), |r| r.location.line_only());

    let services = tree.root.as_ref().and_then(|r| r.get_entry("services"));
    let Some((services_key, services)) = services else {
        fragment.findings.push(schema_error(
            "missing services",
            format!("{path} has no top-level `services` mapping"),
            top_location,
            "Declare containers under a top-level `services:` mapping.",
        ));
        return fragment;
    };
    let NodeKind::Mapping(raw_entries) = &services.kind else {
        if !services.is_null() {
            fragment.findings.push(schema_error(
                "invalid services",
                "`services` must be a mapping of service names to definitions",
                services_key.location.clone(),
                "Declare each container as `name:` followed by its definition.",
            ));
        }
        return fragment;
    };

    let mut seen_keys: BTreeSet<&str> = BTreeSet::new();
    for (key, _) in raw_entries {
        if let Some(k) = key.as_str() {
            if !seen_keys.insert(k) {
                fragment.findings.push(schema_error(
                    "duplicate service",
                    format!("service `{k}` is defined more than once"),
                    key.location.clone(),
                    "Keep a single definition per service key.",
                ));
            }
        }
    }

    for (key, def) in services.entries() {
        let Some(service_key) = key.as_str() else { continue };
        let location = key.location.line_only();
        if !def.is_mapping() {
            fragment.findings.push(schema_error(
                "invalid service",
                format!("service `{service_key}` must be a mapping"),
                location,
                "Give the service a definition with at least an `image` or `build`.",
            ));
            continue;
        }
        if def.get("image").is_none() && def.get("build").is_none() && def.get("extends").is_none() {
            fragment.findings.push(schema_error(
                "missing image",
                format!("service `{service_key}` has neither `image` nor `build`"),
                location.clone(),
                "Add an `image` (or a `build` context) to the service.",
            ));
        }
        if let Some((k, ports)) = def.get_entry("ports") {
            if ports.as_sequence().is_none() && !ports.is_null() {
                fragment.findings.push(schema_error(
                    "invalid ports",
                    format!("`ports` of service `{service_key}` must be a list"),
                    k.location.clone(),
                    "Write ports as a list such as `- 7051:7051`.",
                ));
            }
        }
        fragment.containers.push(read_service(service_key, def, location, host_env, &mut fragment.findings));
    }
    fragment
}

fn read_service(
    service_key: &str,
    def: &Node,
    location: SourceLocation,
    host_env: &HostEnv,
    findings: &mut Vec<Finding>,
) -> ContainerSpec {
    let scalar = |k: &str| def.get(k).and_then(Node::as_str).map(str::to_string);
    let mut env: BTreeMap<String, EnvValue> = BTreeMap::new();
    if let Some((k, environment)) = def.get_entry("environment") {
        match &environment.kind {
            NodeKind::Sequence(items) => {
                for item in items {
                    let Some(text) = item.as_str() else { continue };
                    let (name, raw) = match text.split_once('=') {
                        Some((n, v)) => (n.trim(), v.to_string()),
                        None => (text.trim(), format!("${{{}}}", text.trim())),
                    };
                    env.insert(name.to_string(), env_value(raw, &item.location, host_env));
                }
            }
            NodeKind::Mapping(_) => {
                for (name, value) in environment.entries() {
                    let Some(name) = name.as_str() else { continue };
                    let raw = match &value.kind {
                        NodeKind::Scalar { text, .. } => text.clone(),
                        _ => format!("${{{name}}}"),
                    };
                    env.insert(name.to_string(), env_value(raw, &value.location, host_env));
                }
            }
            NodeKind::Null => {}
            NodeKind::Scalar { .. } => findings.push(schema_error(
                "invalid environment",
                format!("`environment` of service `{service_key}` must be a list or mapping"),
                k.location.clone(),
                "Write environment entries as `- KEY=VALUE` or `KEY: VALUE`.",
            )),
        }
    }

    let (command, command_location) = match def.get_entry("command") {
        Some((k, v)) => {
            let text = match &v.kind {
                NodeKind::Scalar { text, .. } => Some(text.clone()),
                NodeKind::Sequence(items) => {
                    Some(items.iter().filter_map(Node::as_str).collect::<Vec<_>>().join(" "))
                }
                _ => None,
            };
            (text, Some(k.location.line_only()))
        }
        None => (None, None),
    };

    let volumes = def
        .get("volumes")
        .and_then(Node::as_sequence)
        .unwrap_or_default()
        .iter()
        .filter_map(|v| match &v.kind {
            NodeKind::Scalar { text, .. } => Some(text.clone()),
            NodeKind::Mapping(_) => {
                let source = v.get("source").and_then(Node::as_str).unwrap_or_default();
                let target = v.get("target").and_then(Node::as_str).unwrap_or_default();
                Some(format!("{source}:{target}"))
            }
            _ => None,
        })
        .collect();

    let (depends_on, depends_on_location) = match def.get_entry("depends_on") {
        Some((k, v)) => {
            let names = match &v.kind {
                NodeKind::Sequence(items) => items.iter().filter_map(Node::as_str).map(str::to_string).collect(),
                NodeKind::Mapping(_) => {
                    v.entries().iter().filter_map(|(k, _)| k.as_str()).map(str::to_string).collect()
                }
                _ => Vec::new(),
            };
            (names, Some(k.location.line_only()))
        }
        None => (Vec::new(), None),
    };

    ContainerSpec {
        service_key: service_key.to_string(),
        container_name: scalar("container_name"),
        name_location: def.get_entry("container_name").map(|(k, _)| k.location.line_only()),
        image: scalar("image"),
        env,
        command,
        command_location,
        volumes,
        depends_on,
        depends_on_location,
        location,
    }
}

fn env_value(raw: String, location: &SourceLocation, host_env: &HostEnv) -> EnvValue {
    let i = interpolate(&raw, host_env);
    EnvValue { raw, resolved: i.resolved, is_literal: i.is_literal, location: location.line_only() }
}

/// Schema rules that need the merged service set: duplicate
/// `container_name` values and `depends_on` entries naming no service.
pub fn cross_service_findings(containers: &[ContainerSpec]) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut names: BTreeMap<&str, &ContainerSpec> = BTreeMap::new();
    for c in containers {
        let Some(name) = c.container_name.as_deref() else { continue };
        match names.get(name) {
            Some(first) => out.push(schema_error(
                "duplicate container_name",
                format!(
                    "container_name `{name}` is used by services `{}` and `{}`",
                    first.service_key, c.service_key
                ),
                c.location.clone(),
                "Give every service a unique container_name.",
            )),
            None => {
                names.insert(name, c);
            }
        }
    }
    let keys: BTreeSet<&str> = containers.iter().map(|c| c.service_key.as_str()).collect();
    for c in containers {
        for dep in &c.depends_on {
            if !keys.contains(dep.as_str()) {
                out.push(schema_error(
                    "undefined dependency",
                    format!("service `{}` depends on undefined service `{dep}`", c.service_key),
                    c.depends_on_location.clone().unwrap_or_else(|| c.location.clone()),
                    format!("Define service `{dep}` or remove it from depends_on."),
                ));
            }
        }
    }
    out
}

fn schema_error(
    kind: &str,
    message: impl Into<String>,
    location: SourceLocation,
    recommendation: impl Into<String>,
) -> Finding {
    Finding::new(PatternId::ComposeSyntax, Level::Error, kind, message, location, recommendation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::yaml::parse_yaml;

    fn parse(text: &str) -> ComposeFragment {
        parse_compose(&parse_yaml(text, "docker-compose.yaml").unwrap(), &HostEnv::new())
    }

    const LISTING_ONE: &str = "services:\n  company:\n    container_name: company:org.consortium.com\n    image: hyperledger/fabric-peer:$IMAGE_TAG\n    environment:\n      - CORE_PEER_ID=auditor.org.consortium.com\n";

    #[test]
    fn figure_three_listing() {
        let f = parse(LISTING_ONE);
        assert!(f.findings.is_empty());
        let c = &f.containers[0];
        assert_eq!(c.container_name.as_deref(), Some("company:org.consortium.com"));
        let id = &c.env["CORE_PEER_ID"];
        assert_eq!(id.raw, "auditor.org.consortium.com");
        assert!(id.is_literal);
        assert_eq!(id.location.line, Some(6));
    }

    #[test]
    fn missing_services_is_one_error() {
        let f = parse("version: '2'\nnetworks:\n  byfn:\n");
        assert_eq!(f.findings.len(), 1);
        assert_eq!(f.findings[0].pattern, PatternId::ComposeSyntax);
        assert_eq!(f.findings[0].level, Level::Error);
        assert!(f.containers.is_empty());
    }

    #[test]
    fn undefined_dependency_names_the_target() {
        let f = parse("services:\n  peer0:\n    image: hyperledger/fabric-peer\n    depends_on:\n      - couchdb0\n");
        assert!(f.findings.is_empty());
        let cross = cross_service_findings(&f.containers);
        assert_eq!(cross.len(), 1);
        assert!(cross[0].message.contains("couchdb0"));
        assert_eq!(cross[0].location.line, Some(4));
    }

    #[test]
    fn service_without_image_or_build() {
        let f = parse("services:\n  cli:\n    container_name: cli\n");
        assert_eq!(f.findings.len(), 1);
        assert_eq!(f.findings[0].kind, "missing image");
        assert_eq!(f.findings[0].location.line, Some(2));
    }

    #[test]
    fn mapping_environment_and_interpolation() {
        let mut host = HostEnv::new();
        host.insert("PW".into(), "secret".into());
        let tree = parse_yaml(
            "services:\n  couchdb0:\n    image: couchdb\n    environment:\n      COUCHDB_USER: admin\n      COUCHDB_PASSWORD: ${PW}\n      OTHER: ${MISSING}\n",
            "docker-compose-couch.yaml",
        )
        .unwrap();
        let f = parse_compose(&tree, &host);
        let env = &f.containers[0].env;
        assert_eq!(env["COUCHDB_USER"].resolved.as_deref(), Some("admin"));
        assert_eq!(env["COUCHDB_PASSWORD"].resolved.as_deref(), Some("secret"));
        assert!(!env["OTHER"].is_literal);
        assert_eq!(env["OTHER"].resolved, None);
    }

    #[test]
    fn list_command_and_mapping_depends_on() {
        let f = parse("services:\n  ca0:\n    image: hyperledger/fabric-ca\n    command: [sh, -c, 'fabric-ca-server start']\n    depends_on:\n      db:\n        condition: service_started\n  db:\n    image: couchdb\n");
        let ca = &f.containers[0];
        assert_eq!(ca.command.as_deref(), Some("sh -c fabric-ca-server start"));
        assert_eq!(ca.depends_on, vec!["db"]);
        assert!(cross_service_findings(&f.containers).is_empty());
    }

    #[test]
    fn duplicate_container_names() {
        let f = parse("services:\n  a:\n    image: x\n    container_name: same\n  b:\n    image: x\n    container_name: same\n");
        let cross = cross_service_findings(&f.containers);
        assert_eq!(cross.len(), 1);
        assert_eq!(cross[0].kind, "duplicate container_name");
    }

    #[test]
    fn merge_key_services_inherit_image() {
        let f = parse("x-base: &base\n  image: hyperledger/fabric-peer\nservices:\n  peer0:\n    <<: *base\n    container_name: peer0\n");
        assert!(f.findings.is_empty());
        assert_eq!(f.containers[0].image.as_deref(), Some("hyperledger/fabric-peer"));
    }
}
