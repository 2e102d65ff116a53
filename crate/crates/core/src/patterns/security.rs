use std::collections::BTreeSet;

use crate::model::{
    strip_port, ConsensusType, EnvValue, FileRole, Finding, Level, NetworkModel, NodeRole, PatternId, SourceLocation,
    StateDbKind,
};

/// A boolean env flag as written: `None` when unresolved.
fn flag(v: Option<&EnvValue>) -> Option<bool> {
    match v {
        None => Some(false),
        Some(v) => v.value().map(|s| !s.trim().eq_ignore_ascii_case("false") && !s.trim().is_empty()),
    }
}

pub fn check_tls(model: &NetworkModel) -> Vec<Finding> {
    let mut out = Vec::new();
    for c in &model.containers {
        let role = c.role();
        let (tls_key, auth_key) = match role {
            NodeRole::Peer | NodeRole::Cli => ("CORE_PEER_TLS_ENABLED", "CORE_PEER_TLS_CLIENTAUTHREQUIRED"),
            NodeRole::Orderer => ("ORDERER_GENERAL_TLS_ENABLED", "ORDERER_GENERAL_TLS_CLIENTAUTHREQUIRED"),
            _ => continue,
        };
        let tls = c.env_value(tls_key);
        let at = tls.map_or_else(|| c.location.clone(), |v| v.location.clone());
        match flag(tls) {
            Some(false) => out.push(Finding::new(
                PatternId::TlsOnoff,
                Level::Warning,
                "TLS off",
                format!("TLS disabled in container {}!", c.display_name()),
                at,
                "Enable TLS for security!",
            )),
            Some(true) if role != NodeRole::Cli => {
                let auth = c.env_value(auth_key);
                if flag(auth) == Some(false) {
                    out.push(Finding::new(
                        PatternId::TlsOnoff,
                        Level::Info,
                        "TLS client auth off",
                        format!("TLS client authentication disabled in container {}", c.display_name()),
                        auth.map_or(at, |v| v.location.clone()),
                        "Enable TLS client authentication!",
                    ));
                }
            }
            _ => {}
        }
    }
    out
}

enum Credential<'a> {
    Empty,
    Unknown,
    Known(&'a str),
}

fn credential(v: Option<&EnvValue>) -> Credential<'_> {
    match v {
        None => Credential::Empty,
        Some(v) => match v.value() {
            Some("") => Credential::Empty,
            Some(s) => Credential::Known(s),
            None => Credential::Unknown,
        },
    }
}

pub fn check_state_db_security(model: &NetworkModel) -> Vec<Finding> {
    let mut out = Vec::new();
    for db in model.state_dbs.iter().filter(|d| d.kind == StateDbKind::CouchDb) {
        let couch = db.couch_host().and_then(|h| model.container_answering(h));
        let mut sides: Vec<(&str, Credential)> = vec![
            ("peer username", credential(db.peer_username.as_ref())),
            ("peer password", credential(db.peer_password.as_ref())),
        ];
        if let Some(c) = couch {
            sides.push(("COUCHDB_USER", credential(c.env_value("COUCHDB_USER"))));
            sides.push(("COUCHDB_PASSWORD", credential(c.env_value("COUCHDB_PASSWORD"))));
        }
        let couch_name = couch.map_or("CouchDB", |c| c.display_name());
        let empty: Vec<&str> = sides.iter().filter(|(_, c)| matches!(c, Credential::Empty)).map(|(n, _)| *n).collect();
        if !empty.is_empty() {
            let at = couch
                .filter(|_| empty.iter().all(|n| n.starts_with("COUCHDB_")))
                .map_or_else(|| db.location.clone(), |c| c.location.clone());
            out.push(Finding::new(
                PatternId::StateDbSecurity,
                Level::Error,
                "state database credentials empty",
                format!(
                    "Empty {} for {couch_name} used by {}; everyone can access the state database",
                    empty.join(", "),
                    db.owning_peer
                ),
                at,
                "Set a CouchDB user name and password on both the peer and the CouchDB container",
            ));
            continue;
        }
        if sides.iter().any(|(_, c)| matches!(c, Credential::Unknown)) {
            out.push(Finding::new(
                PatternId::StateDbSecurity,
                Level::Info,
                "state database credentials unresolved",
                format!("Credentials for {couch_name} used by {} come from unset variables", db.owning_peer),
                db.location.clone(),
                "Make sure the credential variables are set and consistent",
            ));
            continue;
        }
        if let [(_, Credential::Known(pu)), (_, Credential::Known(pp)), (_, Credential::Known(cu)), (_, Credential::Known(cp))] =
            sides.as_slice()
        {
            if pu != cu || pp != cp {
                out.push(Finding::new(
                    PatternId::StateDbSecurity,
                    Level::Error,
                    "credential mismatch",
                    format!(
                        "Peer {} and {couch_name} use different CouchDB credentials",
                        db.owning_peer
                    ),
                    db.location.clone(),
                    "Use the same user name and password on the peer and the CouchDB container",
                ));
            }
        }
    }
    out
}

pub fn check_consensus(model: &NetworkModel) -> Vec<Finding> {
    let mut out = Vec::new();
    let configtx = || {
        let file = model.sources.get(&FileRole::Configtx).and_then(|p| p.first());
        SourceLocation::file(file.map_or("configtx.yaml", String::as_str))
    };
    if let Some(o) = &model.orderer {
        if o.consensus_type == ConsensusType::Solo {
            out.push(Finding::new(
                PatternId::ConsensusMechanism,
                Level::Info,
                "Solo consensus",
                "Solo is for test only and deprecated",
                o.field_location("OrdererType").cloned().unwrap_or_else(configtx),
                "Use etcdraft with several orderers",
            ));
        }
    }
    let addresses: BTreeSet<&str> = model
        .orderer
        .iter()
        .flat_map(|o| o.orderer_addresses.iter().map(|a| strip_port(a)))
        .collect();
    let containers: Vec<_> = model.containers_with_role(NodeRole::Orderer).collect();
    let single = if addresses.len() == 1 {
        let o = model.orderer.as_ref().unwrap();
        Some(o.field_location("Addresses").cloned().unwrap_or_else(configtx))
    } else if containers.len() == 1 {
        Some(containers[0].location.clone())
    } else {
        None
    };
    if let Some(at) = single {
        out.push(Finding::new(
            PatternId::ConsensusMechanism,
            Level::Warning,
            "single orderer",
            "single orderer: no crash fault tolerance",
            at,
            "Run several ordering nodes",
        ));
    }
    out
}
