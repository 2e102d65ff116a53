//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fabcheck::cli::{scan_network, LintConfig, Overrides};
use fabcheck::model::Finding;
use fabcheck::policy::{PolicyAst, Role};
use fabcheck::yaml::HostEnv;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn corpus_dir() -> PathBuf {
    fixture("corpus")
}

pub fn scan_dir(dir: &Path) -> Vec<Finding> {
    scan_network(dir, &Overrides::default(), &LintConfig::default(), &HostEnv::new()).unwrap().1
}

/// Writes `files` (relative path, contents) under a fresh temp directory.
pub fn write_network(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (rel, text) in files {
        let p = dir.path().join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, text).unwrap();
    }
    dir
}

/// Copies a fixture network into a temp directory so a test can edit it.
pub fn copy_fixture(rel: &str) -> tempfile::TempDir {
    let src = fixture(rel);
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&src, dir.path());
    dir
}

fn copy_tree(src: &Path, dst: &Path) {
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let target = dst.join(entry.file_name());
        if entry.path().is_dir() {
            std::fs::create_dir_all(&target).unwrap();
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

// Brute-force oracle. Deliberately shares nothing with the library's
// evaluator: policies are flattened into a small local tree first.

enum Gate {
    Leaf(String),
    Threshold(usize, Vec<Gate>),
}

fn lower(ast: &PolicyAst) -> Gate {
    match ast {
        PolicyAst::Signed(p) => Gate::Leaf(format!("{}.{}", p.msp_id, p.role.as_str())),
        PolicyAst::And(c) => Gate::Threshold(c.len(), c.iter().map(lower).collect()),
        PolicyAst::Or(c) => Gate::Threshold(1, c.iter().map(lower).collect()),
        PolicyAst::OutOf(k, c) => Gate::Threshold(*k, c.iter().map(lower).collect()),
    }
}

fn holds(g: &Gate, signed: &BTreeSet<&str>) -> bool {
    match g {
        Gate::Leaf(name) => signed.contains(name.as_str()),
        Gate::Threshold(k, children) => children.iter().filter(|c| holds(c, signed)).count() >= *k,
    }
}

fn leaves<'a>(g: &'a Gate, out: &mut BTreeSet<&'a str>) {
    match g {
        Gate::Leaf(name) => {
            out.insert(name);
        }
        Gate::Threshold(_, children) => children.iter().for_each(|c| leaves(c, out)),
    }
}

/// Smallest number of distinct principals whose signatures satisfy the
/// policy, by enumerating all 2^n subsets. `None` if unsatisfiable.
pub fn oracle_min_signers(ast: &PolicyAst) -> Option<usize> {
    let g = lower(ast);
    let mut names = BTreeSet::new();
    leaves(&g, &mut names);
    let names: Vec<&str> = names.into_iter().collect();
    (0u32..1 << names.len())
        .filter(|mask| {
            let signed = names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| *n).collect();
            holds(&g, &signed)
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

/// Smallest number of organizations whose members, signing in every role
/// the policy names, satisfy it.
pub fn oracle_min_orgs(ast: &PolicyAst) -> Option<usize> {
    let g = lower(ast);
    let mut names = BTreeSet::new();
    leaves(&g, &mut names);
    let orgs: Vec<&str> = names.iter().map(|n| n.rsplit_once('.').unwrap().0).collect::<BTreeSet<_>>().into_iter().collect();
    (0u32..1 << orgs.len())
        .filter(|mask| {
            let chosen: BTreeSet<&str> = orgs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, o)| *o).collect();
            let signed = names.iter().copied().filter(|n| chosen.contains(n.rsplit_once('.').unwrap().0)).collect();
            holds(&g, &signed)
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

const ROLES: [Role; 4] = [Role::Member, Role::Admin, Role::Peer, Role::Client];

/// A random policy with at most `max_principals` leaves, each from its own
/// organization, nested at most `max_depth` deep.
pub fn random_policy(rng: &mut ChaCha8Rng, max_principals: usize, max_depth: usize) -> PolicyAst {
    let n = rng.random_range(1..=max_principals);
    let leaves: Vec<PolicyAst> = (0..n)
        .map(|i| PolicyAst::signed(&format!("Org{}MSP", i + 1), ROLES[rng.random_range(0..ROLES.len())]))
        .collect();
    build(rng, leaves, max_depth)
}

fn build(rng: &mut ChaCha8Rng, mut leaves: Vec<PolicyAst>, depth_left: usize) -> PolicyAst {
    if leaves.len() == 1 && (depth_left == 0 || rng.random_bool(0.5)) {
        return leaves.pop().unwrap();
    }
    let groups = if depth_left == 1 { leaves.len() } else { rng.random_range(1..=leaves.len()) };
    let mut buckets: Vec<Vec<PolicyAst>> = (0..groups).map(|_| Vec::new()).collect();
    for (i, leaf) in leaves.into_iter().enumerate() {
        let b = if i < groups { i } else { rng.random_range(0..groups) };
        buckets[b].push(leaf);
    }
    let children: Vec<PolicyAst> = buckets.into_iter().map(|b| build(rng, b, depth_left - 1)).collect();
    match rng.random_range(0..3) {
        0 => PolicyAst::And(children),
        1 => PolicyAst::Or(children),
        _ => {
            let k = rng.random_range(1..=children.len());
            PolicyAst::OutOf(k, children)
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
