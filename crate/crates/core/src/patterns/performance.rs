use crate::model::{FileRole, Finding, Level, NetworkModel, PatternId, SourceLocation, ThresholdConfig};
use crate::policy::{analyze, classify_metrics, PolicyClass};

fn block_warning(kind: &str, message: String, at: SourceLocation, recommendation: &str) -> Finding {
    Finding::new(PatternId::BlockParams, Level::Warning, kind, message, at, recommendation)
}

pub fn check_block_params(model: &NetworkModel, t: &ThresholdConfig) -> Vec<Finding> {
    let Some(o) = &model.orderer else { return Vec::new() };
    let at = |key: &str| {
        o.field_location(key).cloned().unwrap_or_else(|| {
            let file = model.sources.get(&FileRole::Configtx).and_then(|p| p.first());
            SourceLocation::file(file.map_or("configtx.yaml", String::as_str))
        })
    };
    let mut out = Vec::new();
    if let Some(ms) = o.batch_timeout_ms {
        if ms > t.batch_timeout_max_ms {
            out.push(block_warning(
                "BlockTime too big",
                format!("BatchTimeout of {ms} ms exceeds {} ms; clients wait long for blocks", t.batch_timeout_max_ms),
                at("BatchTimeout"),
                "Lower BatchTimeout",
            ));
        } else if ms < t.batch_timeout_min_ms {
            out.push(block_warning(
                "BlockTime too small",
                format!("BatchTimeout of {ms} ms is below {} ms; blocks are cut too often", t.batch_timeout_min_ms),
                at("BatchTimeout"),
                "Raise BatchTimeout",
            ));
        }
    }
    if let Some(n) = o.max_message_count {
        if n > t.max_message_count_max {
            out.push(block_warning(
                "BlockSize too big",
                format!("MaxMessageCount of {n} exceeds {}", t.max_message_count_max),
                at("MaxMessageCount"),
                "Lower MaxMessageCount",
            ));
        } else if n < t.max_message_count_min {
            out.push(block_warning(
                "BlockSize too small",
                format!("MaxMessageCount of {n} is below {}; transactions split into many small blocks", t.max_message_count_min),
                at("MaxMessageCount"),
                "Raise MaxMessageCount",
            ));
        }
    }
    if let (Some(preferred), Some(absolute)) = (o.preferred_max_bytes, o.absolute_max_bytes) {
        if preferred > absolute {
            out.push(block_warning(
                "BlockSize inconsistent",
                format!("PreferredMaxBytes ({preferred}) exceeds AbsoluteMaxBytes ({absolute})"),
                at("PreferredMaxBytes"),
                "Keep PreferredMaxBytes at or below AbsoluteMaxBytes",
            ));
        }
    }
    out
}

/// Simple and complex policy findings together; the engine splits them by
/// pattern.
pub fn check_policy_patterns(model: &NetworkModel, t: &ThresholdConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    for cc in &model.chaincodes {
        let on = cc.channel.as_deref().map_or(String::new(), |c| format!(" on channel {c}"));
        if let Some(err) = &cc.policy_error {
            out.push(Finding::new(
                PatternId::SimplePolicy,
                Level::Warning,
                "unparsable policy",
                format!("Endorsement policy of chaincode {}{on} cannot be parsed: {err}", cc.name),
                cc.location.clone(),
                "Write the policy with AND, OR, OutOf and quoted 'MSP.role' principals",
            ));
            continue;
        }
        let Some(ast) = &cc.policy else { continue };
        let m = analyze(ast);
        let estimate = if m.exhaustive { "" } else { " (structural estimate)" };
        match classify_metrics(&m, t) {
            PolicyClass::Simple => out.push(Finding::new(
                PatternId::SimplePolicy,
                Level::Warning,
                "simple policy",
                format!(
                    "Endorsement policy of chaincode {}{on} can be satisfied by a single organization{estimate}",
                    cc.name
                ),
                cc.location.clone(),
                "Require endorsements from more than one organization",
            )),
            PolicyClass::Complex => out.push(Finding::new(
                PatternId::ComplexPolicy,
                Level::Warning,
                "complex policy",
                format!(
                    "Endorsement policy of chaincode {}{on} needs {} signatures at nesting depth {}{estimate}",
                    cc.name, m.min_signers, m.depth
                ),
                cc.location.clone(),
                "Simplify the endorsement policy",
            )),
            PolicyClass::Moderate => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChaincodeDeployment, ConsensusType, OrdererConfig};
    use crate::policy::parse_policy;

    fn with_orderer(o: OrdererConfig) -> NetworkModel {
        NetworkModel { orderer: Some(o), ..Default::default() }
    }

    fn orderer(timeout: Option<u64>, count: Option<u64>) -> OrdererConfig {
        OrdererConfig {
            consensus_type: ConsensusType::Etcdraft,
            batch_timeout_ms: timeout,
            max_message_count: count,
            location: Some(SourceLocation::at("configtx.yaml", 1)),
            ..Default::default()
        }
    }

    #[test]
    fn two_seconds_is_fine() {
        assert!(check_block_params(&with_orderer(orderer(Some(2000), Some(10))), &ThresholdConfig::default()).is_empty());
    }

    #[test]
    fn sixty_seconds_is_too_big() {
        let out = check_block_params(&with_orderer(orderer(Some(60_000), None)), &ThresholdConfig::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, "BlockTime too big");
    }

    #[test]
    fn one_message_is_too_small() {
        let out = check_block_params(&with_orderer(orderer(None, Some(1))), &ThresholdConfig::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, "BlockSize too small");
    }

    #[test]
    fn custom_threshold_flags_six_seconds() {
        let t = ThresholdConfig { batch_timeout_max_ms: 5000, ..Default::default() };
        assert_eq!(check_block_params(&with_orderer(orderer(Some(6000), None)), &t).len(), 1);
    }

    #[test]
    fn preferred_over_absolute() {
        let mut o = orderer(None, None);
        o.absolute_max_bytes = Some(1024);
        o.preferred_max_bytes = Some(2048);
        assert_eq!(check_block_params(&with_orderer(o), &ThresholdConfig::default())[0].kind, "BlockSize inconsistent");
    }

    fn chaincode(policy: &str) -> NetworkModel {
        let parsed = parse_policy(policy);
        NetworkModel {
            chaincodes: vec![ChaincodeDeployment {
                name: "mycc".into(),
                channel: Some("mychannel".into()),
                policy_raw: Some(policy.into()),
                policy_error: parsed.as_ref().err().map(ToString::to_string),
                policy: parsed.ok(),
                install_targets: vec![],
                location: SourceLocation::at("scripts/script.sh", 9),
            }],
            ..Default::default()
        }
    }

    #[test]
    fn policy_classes_map_to_patterns() {
        let t = ThresholdConfig::default();
        let simple = check_policy_patterns(&chaincode("OR('Org1MSP.member','Org2MSP.member')"), &t);
        assert_eq!(simple.len(), 1);
        assert_eq!((simple[0].pattern, simple[0].level), (PatternId::SimplePolicy, Level::Warning));
        let complex = check_policy_patterns(
            &chaincode("AND('O1.member','O2.member','O3.member','O4.member','O5.member')"),
            &t,
        );
        assert_eq!(complex[0].pattern, PatternId::ComplexPolicy);
        assert!(check_policy_patterns(&chaincode("AND('Org1MSP.member','Org2MSP.member')"), &t).is_empty());
        let bad = check_policy_patterns(&chaincode("OR('Org1MSP.member'"), &t);
        assert_eq!(bad[0].kind, "unparsable policy");
        assert_eq!(bad[0].pattern, PatternId::SimplePolicy);
    }
}
