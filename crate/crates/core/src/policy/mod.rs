//! Endorsement-policy expressions and the signer metrics behind the
//! simple/complex policy patterns.

mod ast;
mod parser;

use std::collections::BTreeMap;

pub use ast::{PolicyAst, Principal, Role};
pub use parser::{parse_policy, PolicyParseError};

use crate::model::ThresholdConfig;

/// Above this many distinct principals (or MSPs) the exhaustive search is
/// skipped in favor of the structural formula.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyMetrics {
    pub min_signers: usize,
    pub min_orgs: usize,
    pub depth: usize,
    /// False when the structural estimate was used for at least one metric.
    pub exhaustive: bool,
}

pub fn analyze(ast: &PolicyAst) -> PolicyMetrics {
    let principals: Vec<&Principal> = ast.principals().into_iter().collect();
    let msps: Vec<&str> = ast.msp_ids().into_iter().collect();
    let (min_signers, signers_exact) = if principals.len() <= EXHAUSTIVE_LIMIT {
        (exhaustive_min_signers(ast, &principals), true)
    } else {
        (structural_min_signers(ast), false)
    };
    let (min_orgs, orgs_exact) = if msps.len() <= EXHAUSTIVE_LIMIT {
        (exhaustive_min_orgs(ast, &msps), true)
    } else {
        (structural_min_orgs(ast), false)
    };
    PolicyMetrics { min_signers, min_orgs, depth: ast.depth(), exhaustive: signers_exact && orgs_exact }
}

/// Size of the smallest set of principals whose signatures satisfy `ast`.
pub fn min_signers(ast: &PolicyAst) -> usize {
    analyze(ast).min_signers
}

/// Smallest number of distinct MSP ids among satisfying principal sets.
pub fn min_orgs(ast: &PolicyAst) -> usize {
    analyze(ast).min_orgs
}

fn exhaustive_min_signers(ast: &PolicyAst, principals: &[&Principal]) -> usize {
    let index: BTreeMap<&Principal, usize> = principals.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    smallest_satisfying_mask(principals.len(), |mask| {
        ast.is_satisfied_by(&|p: &Principal| mask & (1u32 << index[p]) != 0)
    })
}

/// Choosing an MSP admits every principal of that MSP; satisfaction is
/// monotone, so the smallest satisfying MSP set is the answer.
fn exhaustive_min_orgs(ast: &PolicyAst, msps: &[&str]) -> usize {
    let index: BTreeMap<&str, usize> = msps.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    smallest_satisfying_mask(msps.len(), |mask| {
        ast.is_satisfied_by(&|p: &Principal| mask & (1u32 << index[p.msp_id.as_str()]) != 0)
    })
}

fn smallest_satisfying_mask(n: usize, satisfied: impl Fn(u32) -> bool) -> usize {
    let mut best = n;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size < best && satisfied(mask) {
            best = size;
        }
    }
    best
}

/// And: sum of children; Or: minimum; OutOf(k): sum of the k smallest.
/// Exact when no principal repeats across branches, an over-estimate
/// otherwise.
pub fn structural_min_signers(ast: &PolicyAst) -> usize {
    structural(ast)
}

/// Same recurrence as [`structural_min_signers`]; exact when every leaf
/// names a different MSP.
pub fn structural_min_orgs(ast: &PolicyAst) -> usize {
    structural(ast)
}

fn structural(ast: &PolicyAst) -> usize {
    match ast.as_threshold() {
        None => 1,
        Some((k, children)) => {
            let mut costs: Vec<usize> = children.iter().map(structural).collect();
            costs.sort_unstable();
            costs.iter().take(k).sum()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyClass {
    Simple,
    Moderate,
    Complex,
}

/// Simple when one organization can satisfy the policy alone; Complex when
/// it needs at least `complex_min_signers` signatures or nests at least
/// `complex_max_depth` levels. Simple wins when both hold.
pub fn classify(ast: &PolicyAst, thresholds: &ThresholdConfig) -> PolicyClass {
    classify_metrics(&analyze(ast), thresholds)
}

pub fn classify_metrics(m: &PolicyMetrics, thresholds: &ThresholdConfig) -> PolicyClass {
    if m.min_orgs == 1 {
        PolicyClass::Simple
    } else if m.min_signers as u64 >= thresholds.complex_min_signers || m.depth as u64 >= thresholds.complex_max_depth {
        PolicyClass::Complex
    } else {
        PolicyClass::Moderate
    }
}
