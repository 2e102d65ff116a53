use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::model::{
    strip_port, ContainerSpec, FileRole, Finding, Level, NetworkModel, OrgKind, PatternId, SourceLocation,
    StateDbKind,
};

pub fn check_state_db_choice(model: &NetworkModel) -> Vec<Finding> {
    model
        .state_dbs
        .iter()
        .map(|db| match db.kind {
            StateDbKind::LevelDb => Finding::new(
                PatternId::StateDbChoice,
                Level::Info,
                "LevelDB selected",
                format!("LevelDB selected for {}: no rich query support", db.owning_peer),
                db.location.clone(),
                "Use CouchDB if chaincode needs rich queries",
            ),
            StateDbKind::CouchDb => Finding::new(
                PatternId::StateDbChoice,
                Level::Info,
                "CouchDB selected",
                format!("CouchDB selected for {}: lower data-processing efficiency", db.owning_peer),
                db.location.clone(),
                "Use LevelDB if chaincode does not need rich queries",
            ),
        })
        .collect()
}

fn first_path(model: &NetworkModel, role: FileRole) -> &str {
    model.sources.get(&role).and_then(|p| p.first()).map_or("", String::as_str)
}

/// The domain part of a node name: everything after the first `.` or `:`.
/// `None` for names without a dot or with unresolved references.
fn domain_part(name: &str) -> Option<&str> {
    if name.contains('$') || !name.contains('.') {
        return None;
    }
    let cut = name.find(['.', ':'])?;
    Some(strip_port(&name[cut + 1..])).filter(|d| !d.is_empty())
}

fn matches_domain(suffix: &str, domains: &BTreeSet<&str>) -> bool {
    domains.iter().any(|d| suffix == *d || suffix.ends_with(&format!(".{d}")))
}

pub fn check_inconsistent_params(model: &NetworkModel) -> Vec<Finding> {
    let mut out = Vec::new();
    let crypto_file = first_path(model, FileRole::CryptoConfig);
    let configtx_file = first_path(model, FileRole::Configtx);

    let domains: BTreeSet<&str> = model.orgs.iter().map(|o| o.domain.as_str()).collect();
    if !domains.is_empty() {
        for c in &model.containers {
            let mut bad: Vec<String> = Vec::new();
            let mut location = c.location.clone();
            let id = c.env_value("CORE_PEER_ID");
            let candidates = [
                (c.container_name.as_deref(), c.name_location.as_ref().unwrap_or(&c.location)),
                (id.and_then(|v| v.value()), id.map_or(&c.location, |v| &v.location)),
            ];
            for (name, at) in candidates {
                let Some(name) = name else { continue };
                if let Some(suffix) = domain_part(name) {
                    if !matches_domain(suffix, &domains) && !bad.iter().any(|b| b == name) {
                        if bad.is_empty() {
                            location = at.clone();
                        }
                        bad.push(name.to_string());
                    }
                }
            }
            if !bad.is_empty() {
                out.push(Finding::new(
                    PatternId::InconsistentParams,
                    Level::Error,
                    "domain mismatch",
                    format!(
                        "Domain of {} in {} matches no Domain in {}",
                        bad.join(", "),
                        location.file,
                        crypto_file
                    ),
                    location,
                    "Use the same DOMAIN in crypto-config.yaml and docker-compose.yaml",
                ));
            }
        }
    }

    let msp_ids: BTreeSet<&str> = model.msp_declarations.iter().map(|d| d.id.as_str()).collect();
    if !msp_ids.is_empty() {
        for c in &model.containers {
            let Some(v) = c.env_value("CORE_PEER_LOCALMSPID") else { continue };
            let Some(id) = v.value().filter(|id| !id.is_empty()) else { continue };
            if !msp_ids.contains(id) {
                out.push(Finding::new(
                    PatternId::InconsistentParams,
                    Level::Error,
                    "MSP ID mismatch",
                    format!(
                        "CORE_PEER_LOCALMSPID {id} of container {} matches no organization ID in {configtx_file}",
                        c.display_name()
                    ),
                    v.location.clone(),
                    "Use an MSP ID declared in configtx.yaml",
                ));
            }
        }
    }

    let declared: BTreeSet<&str> = model
        .channel_declarations
        .iter()
        .filter_map(|d| d.channel.as_deref())
        .filter(|c| !c.contains('$'))
        .collect();
    if !declared.is_empty() {
        for ch in model.channels.iter().filter(|c| !c.name.contains('$')) {
            if !declared.contains(ch.name.as_str()) {
                let location = ch.created_at.clone().unwrap_or_else(|| ch.location.clone());
                out.push(Finding::new(
                    PatternId::InconsistentParams,
                    Level::Error,
                    "channel mismatch",
                    format!("Channel {} is used in {} but no configtxgen call generates it", ch.name, location.file),
                    location,
                    "Use the channel name passed to configtxgen -channelID",
                ));
            }
        }
    }
    // an unparsable configtx declares nothing to compare against
    if model.orderer.is_some() {
        for d in &model.channel_declarations {
            let Some(profile) = d.profile.as_deref().filter(|p| !p.contains('$')) else { continue };
            if !model.profiles.iter().any(|p| p == profile) {
                out.push(Finding::new(
                    PatternId::InconsistentParams,
                    Level::Error,
                    "profile mismatch",
                    format!("Profile {profile} used in {} is not defined in {configtx_file}", d.location.file),
                    d.location.clone(),
                    "Use a profile declared under Profiles in configtx.yaml",
                ));
            }
        }
    }
    out
}

static PRIVATE_KEY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[0-9a-f]{8,}_sk\b").unwrap());
static DOTTED_QUAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})\b").unwrap());

fn private_key_in(text: &str) -> Option<&str> {
    text.split_whitespace()
        .filter(|token| !token.contains("${"))
        .find_map(|token| PRIVATE_KEY.find(token).map(|m| m.as_str()))
}

fn address_in(text: &str) -> Option<&str> {
    DOTTED_QUAD.captures_iter(text).find_map(|c| {
        let octets: Vec<u32> = (1..=4).filter_map(|i| c[i].parse().ok()).collect();
        let valid = octets.len() == 4 && octets.iter().all(|o| *o <= 255);
        let local = octets.iter().all(|o| *o == 0) || octets.first() == Some(&127);
        (valid && !local).then(|| c.get(0).unwrap().as_str())
    })
}

fn hardcoded_key(c: &ContainerSpec, key: &str, at: SourceLocation) -> Finding {
    Finding::new(
        PatternId::ParamHardcoded,
        Level::Warning,
        "hardcoded private key",
        format!("Private key file {key} hardcoded in container {}", c.display_name()),
        at,
        "Reference the key file through a variable such as ${PRIVATE_KEY_ORG1}",
    )
}

pub fn check_hardcoded(model: &NetworkModel) -> Vec<Finding> {
    let mut out = Vec::new();
    for c in &model.containers {
        if let Some(command) = &c.command {
            if let Some(key) = private_key_in(command) {
                let at = c.command_location.clone().unwrap_or_else(|| c.location.clone());
                out.push(hardcoded_key(c, key, at));
            }
        }
        for (name, v) in &c.env {
            if !v.is_literal {
                continue;
            }
            if let Some(key) = private_key_in(&v.raw) {
                out.push(hardcoded_key(c, key, v.location.clone()));
            } else if let Some(addr) = address_in(&v.raw) {
                out.push(Finding::new(
                    PatternId::ParamHardcoded,
                    Level::Warning,
                    "hardcoded address",
                    format!("IP address {addr} hardcoded in {name} of container {}", c.display_name()),
                    v.location.clone(),
                    "Address nodes by service name or a variable",
                ));
            }
        }
    }
    out
}

fn missing(message: String, location: SourceLocation, recommendation: &str) -> Finding {
    Finding::new(PatternId::ComponentMissing, Level::Error, "component missing", message, location, recommendation)
}

/// `:` typed for `.` between host and domain still identifies the node.
fn answers_loosely(model: &NetworkModel, host: &str) -> bool {
    model
        .containers
        .iter()
        .any(|c| c.names().any(|n| n == host || n.replace(':', ".") == host))
}

pub fn check_component_missing(model: &NetworkModel) -> Vec<Finding> {
    let mut out: Vec<Finding> = model
        .structural_notes
        .iter()
        .map(|n| missing(n.message.clone(), n.location.clone(), "Add the missing section"))
        .collect();
    let compose_file = first_path(model, FileRole::Compose);
    let has_compose = model.has_role(FileRole::Compose);

    for db in model.state_dbs.iter().filter(|d| d.kind == StateDbKind::CouchDb) {
        match db.couch_host() {
            None => out.push(missing(
                format!("Peer {} selects CouchDB without a CouchDB address", db.owning_peer),
                db.location.clone(),
                "Set CORE_LEDGER_STATE_COUCHDBCONFIG_COUCHDBADDRESS",
            )),
            Some(host) if !host.contains('$') && model.container_answering(host).is_none() => out.push(missing(
                format!("Peer {} selects CouchDB but no {host} container is defined", db.owning_peer),
                db.location.clone(),
                "Add the CouchDB service to docker-compose",
            )),
            Some(_) => {}
        }
    }

    if has_compose {
        for org in model.orgs.iter().filter(|o| o.kind == OrgKind::Peer) {
            for fqdn in org.fqdns() {
                if !answers_loosely(model, &fqdn) {
                    out.push(missing(
                        format!("Peer {fqdn} declared in {} has no container in {compose_file}", org.location.file),
                        org.location.clone(),
                        "Add a container for every peer in crypto-config.yaml",
                    ));
                }
            }
        }
        if let Some(orderer) = &model.orderer {
            let mut seen = BTreeSet::new();
            for addr in &orderer.orderer_addresses {
                let host = strip_port(addr);
                if host.contains('$') || !seen.insert(host) {
                    continue;
                }
                if !answers_loosely(model, host) {
                    let at = orderer.field_location("Addresses").cloned().unwrap_or_else(|| {
                        SourceLocation::file(first_path(model, FileRole::Configtx))
                    });
                    out.push(missing(
                        format!("Orderer {host} listed in {} has no container in {compose_file}", at.file),
                        at,
                        "Add an orderer container for every orderer address",
                    ));
                }
            }
        }
    }

    for ch in &model.channels {
        if let (Some(created), true) = (&ch.created_at, ch.anchor_orgs.is_empty()) {
            out.push(Finding::new(
                PatternId::ComponentMissing,
                Level::Warning,
                "anchor peer missing",
                format!("Channel {} is created without any anchor peer update", ch.name),
                created.clone(),
                "Update an anchor peer for every organization on the channel",
            ));
        }
    }

    for cc in &model.chaincodes {
        if let (Some(channel), true) = (&cc.channel, cc.install_targets.is_empty()) {
            out.push(missing(
                format!("Chaincode {} is instantiated on {channel} but never installed", cc.name),
                cc.location.clone(),
                "Install the chaincode on the endorsing peers before instantiating",
            ));
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{merge_sources, Fragment};
    use crate::yaml::{parse_compose, parse_crypto_config, parse_yaml, HostEnv};

    fn model(crypto: Option<&str>, compose: &str) -> NetworkModel {
        let mut fragments = Vec::new();
        if let Some(text) = crypto {
            let tree = parse_yaml(text, "crypto-config.yaml").unwrap();
            fragments.push(Fragment::CryptoConfig(parse_crypto_config(&tree)));
        }
        let tree = parse_yaml(compose, "docker-compose.yaml").unwrap();
        fragments.push(Fragment::Compose(parse_compose(&tree, &HostEnv::new())));
        merge_sources(fragments)
    }

    const PAIR_CRYPTO: &str = "Name: org\nDomain: org.consortium.com\nSpecs:\n  - Hostname: company\n";
    const PAIR_COMPOSE: &str = "services:\n  company:\n    container_name: company:org.consortium.com\n    image: hyperledger/fabric-peer:$IMAGE_TAG\n    environment:\n      - CORE_PEER_ID=auditor.org.consortium.com\n";

    #[test]
    fn domain_pair_is_consistent() {
        assert!(check_inconsistent_params(&model(Some(PAIR_CRYPTO), PAIR_COMPOSE)).is_empty());
    }

    #[test]
    fn altered_crypto_domain_gives_one_error_naming_both_files() {
        let crypto = PAIR_CRYPTO.replace("org.consortium.com", "org2.consortium.com");
        let out = check_inconsistent_params(&model(Some(&crypto), PAIR_COMPOSE));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].level, Level::Error);
        assert!(out[0].message.contains("docker-compose.yaml"));
        assert!(out[0].message.contains("crypto-config.yaml"));
        assert_eq!(out[0].location.line, Some(3));
    }

    #[test]
    fn no_crypto_means_nothing_to_compare() {
        assert!(check_inconsistent_params(&model(None, PAIR_COMPOSE)).is_empty());
    }

    #[test]
    fn domain_part_rules() {
        assert_eq!(domain_part("peer0.org1.example.com"), Some("org1.example.com"));
        assert_eq!(domain_part("company:org.consortium.com"), Some("org.consortium.com"));
        assert_eq!(domain_part("couchdb0"), None);
        assert_eq!(domain_part("peer0.${DOMAIN}"), None);
    }

    #[test]
    fn private_key_forms() {
        assert_eq!(private_key_in("sh -c 'fabric-ca-server start -b admin:adminpw -d ./3231ea0d_sk'"), Some("3231ea0d_sk"));
        assert_eq!(private_key_in("sh -c 'fabric-ca-server start ./${PRIVATE_KEY_ORG1}'"), None);
        assert_eq!(private_key_in("./abc_sk"), None);
    }

    #[test]
    fn address_forms() {
        assert_eq!(address_in("10.0.2.15:7051"), Some("10.0.2.15"));
        assert_eq!(address_in("couchdb0:5984"), None);
        assert_eq!(address_in("0.0.0.0:7051"), None);
        assert_eq!(address_in("127.0.0.1"), None);
        assert_eq!(address_in("999.1.1.1"), None);
    }

    #[test]
    fn couchdb_without_service_is_missing() {
        let compose = "services:\n  peer0.org1.example.com:\n    image: hyperledger/fabric-peer\n    environment:\n      - CORE_LEDGER_STATE_STATEDATABASE=CouchDB\n      - CORE_LEDGER_STATE_COUCHDBCONFIG_COUCHDBADDRESS=couchdb0:5984\n";
        let out = check_component_missing(&model(None, compose));
        assert_eq!(out.len(), 1);
        assert!(out[0].message.contains("couchdb0"));
    }

    #[test]
    fn crypto_peer_without_container_is_missing() {
        let crypto = "PeerOrgs:\n  - Name: Org1\n    Domain: org1.example.com\n    Template:\n      Count: 2\n";
        let compose = "services:\n  peer0.org1.example.com:\n    image: hyperledger/fabric-peer\n";
        let out = check_component_missing(&model(Some(crypto), compose));
        assert_eq!(out.len(), 1);
        assert!(out[0].message.contains("peer1.org1.example.com"));
    }
}
