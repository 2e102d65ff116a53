mod common;

use common::{oracle_min_orgs, oracle_min_signers, random_policy, seeded_rng};
use fabcheck::policy::{analyze, parse_policy, structural_min_orgs, structural_min_signers, PolicyAst};

#[test]
fn oracle_agrees_on_hand_picked_policies() {
    let cases = [
        ("'Org1MSP.member'", 1, 1),
        ("AND('Org1MSP.peer','Org2MSP.peer')", 2, 2),
        ("OR('Org1MSP.peer','Org2MSP.peer')", 1, 1),
        ("OutOf(2, 'A.member', 'B.member', 'C.member')", 2, 2),
        ("AND('A.member', OR('B.member', 'C.member'))", 2, 2),
        ("OutOf(2, AND('A.peer','B.peer'), 'C.peer', OR('D.admin','E.admin'))", 2, 2),
    ];
    for (text, signers, orgs) in cases {
        let ast = parse_policy(text).unwrap();
        assert_eq!(oracle_min_signers(&ast), Some(signers), "{text}");
        assert_eq!(oracle_min_orgs(&ast), Some(orgs), "{text}");
        let m = analyze(&ast);
        assert_eq!((m.min_signers, m.min_orgs), (signers, orgs), "{text}");
    }
}

#[test]
fn same_org_roles_collapse_for_min_orgs() {
    let ast = parse_policy("AND('Org1MSP.peer','Org1MSP.admin')").unwrap();
    assert_eq!(oracle_min_signers(&ast), Some(2));
    assert_eq!(oracle_min_orgs(&ast), Some(1));
    assert_eq!(analyze(&ast).min_orgs, 1);
}

#[test]
fn exhaustive_metrics_match_oracle_with_repeated_orgs() {
    // Leaves may share organizations here, so only the exhaustive path is
    // expected to be exact.
    let mut rng = seeded_rng(7);
    for _ in 0..300 {
        let ast = random_policy(&mut rng, 6, 3);
        let text = ast.to_string().replace("Org5MSP", "Org1MSP").replace("Org6MSP", "Org2MSP");
        let ast: PolicyAst = parse_policy(&text).unwrap();
        let m = analyze(&ast);
        assert!(m.exhaustive);
        assert_eq!(Some(m.min_signers), oracle_min_signers(&ast), "{text}");
        assert_eq!(Some(m.min_orgs), oracle_min_orgs(&ast), "{text}");
    }
}

#[test]
fn structural_matches_oracle_on_distinct_orgs() {
    for seed in 0..200u64 {
        let mut rng = seeded_rng(seed);
        let ast = random_policy(&mut rng, 5, 3);
        assert!(ast.depth() <= 3);
        assert_eq!(Some(structural_min_signers(&ast)), oracle_min_signers(&ast), "{ast}");
        assert_eq!(Some(structural_min_orgs(&ast)), oracle_min_orgs(&ast), "{ast}");
    }
}
