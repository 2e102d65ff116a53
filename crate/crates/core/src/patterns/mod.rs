//! The rule engine and its twelve check patterns.
//!
//! Each pattern is a pure function of the model and thresholds. The two
//! syntax patterns report what the frontends already found, so their check
//! functions only select from `parse_findings`.
//!
//! TLS rules read `CORE_PEER_TLS_ENABLED` / `CORE_PEER_TLS_CLIENTAUTHREQUIRED`
//! on peers and CLI containers and `ORDERER_GENERAL_TLS_ENABLED` /
//! `ORDERER_GENERAL_TLS_CLIENTAUTHREQUIRED` on orderers.

mod functionality;
mod performance;
mod security;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use crate::model::{Category, Finding, Level, NetworkModel, PatternId, SourceLocation, ThresholdConfig};

pub use functionality::{check_component_missing, check_hardcoded, check_inconsistent_params, check_state_db_choice};
pub use performance::{check_block_params, check_policy_patterns};
pub use security::{check_consensus, check_state_db_security, check_tls};

pub type CheckFn = fn(&NetworkModel, &ThresholdConfig) -> Vec<Finding>;

#[derive(Debug, Clone, Copy)]
pub struct PatternDescriptor {
    pub id: PatternId,
    pub category: Category,
    pub title: &'static str,
    pub default_level: Level,
    pub enabled: bool,
    pub check: CheckFn,
}

fn descriptor(id: PatternId, default_level: Level, check: CheckFn) -> PatternDescriptor {
    PatternDescriptor { id, category: id.category(), title: id.title(), default_level, enabled: true, check }
}

/// The registered patterns, in report-table order.
pub fn catalog() -> [PatternDescriptor; 12] {
    [
        descriptor(PatternId::StateDbChoice, Level::Info, |m, _| check_state_db_choice(m)),
        descriptor(PatternId::InconsistentParams, Level::Error, |m, _| check_inconsistent_params(m)),
        descriptor(PatternId::ParamHardcoded, Level::Warning, |m, _| check_hardcoded(m)),
        descriptor(PatternId::ComponentMissing, Level::Error, |m, _| check_component_missing(m)),
        descriptor(PatternId::YamlSyntax, Level::Error, |m, _| syntax_findings(m, PatternId::YamlSyntax)),
        descriptor(PatternId::ComposeSyntax, Level::Error, |m, _| syntax_findings(m, PatternId::ComposeSyntax)),
        descriptor(PatternId::BlockParams, Level::Warning, check_block_params),
        descriptor(PatternId::ComplexPolicy, Level::Warning, |m, t| only(check_policy_patterns(m, t), PatternId::ComplexPolicy)),
        descriptor(PatternId::SimplePolicy, Level::Warning, |m, t| only(check_policy_patterns(m, t), PatternId::SimplePolicy)),
        descriptor(PatternId::TlsOnoff, Level::Warning, |m, _| check_tls(m)),
        descriptor(PatternId::StateDbSecurity, Level::Error, |m, _| check_state_db_security(m)),
        descriptor(PatternId::ConsensusMechanism, Level::Warning, |m, _| check_consensus(m)),
    ]
}

fn only(findings: Vec<Finding>, pattern: PatternId) -> Vec<Finding> {
    findings.into_iter().filter(|f| f.pattern == pattern).collect()
}

/// Syntax findings are produced while parsing; the engine adds them through
/// `parse_findings`, so the check itself reports nothing new.
fn syntax_findings(_: &NetworkModel, _: PatternId) -> Vec<Finding> {
    Vec::new()
}

/// Runs every enabled pattern and returns the sorted findings, parse
/// findings included.
pub fn run_all(model: &NetworkModel, thresholds: &ThresholdConfig, enabled: &BTreeSet<PatternId>) -> Vec<Finding> {
    let mut findings: Vec<Finding> = model
        .parse_findings
        .iter()
        .filter(|f| enabled.contains(&f.pattern))
        .cloned()
        .collect();
    for d in catalog().iter().filter(|d| enabled.contains(&d.id)) {
        match catch_unwind(AssertUnwindSafe(|| (d.check)(model, thresholds))) {
            Ok(mut out) => {
                debug_assert!(out.iter().all(|f| f.pattern == d.id));
                findings.append(&mut out);
            }
            Err(payload) => findings.push(pattern_failure(model, d.id, &panic_text(&payload))),
        }
    }
    sort_findings(&mut findings);
    findings
}

pub fn all_patterns() -> BTreeSet<PatternId> {
    PatternId::ALL.into_iter().collect()
}

pub fn sort_findings(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    findings.dedup();
}

fn panic_text(payload: &Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// The Error that stands in for a pattern that crashed.
pub fn pattern_failure(model: &NetworkModel, pattern: PatternId, detail: &str) -> Finding {
    let file = model.source_paths().into_iter().next().unwrap_or(".").to_string();
    Finding::new(
        pattern,
        Level::Error,
        "pattern failure",
        format!("Check `{pattern}` failed internally: {detail}"),
        SourceLocation::file(file),
        "Report this configuration to the tool maintainers",
    )
}
