mod common;

use common::{corpus_dir, fixture, scan_dir};
use fabcheck::cli::{scan_corpus, LintConfig};
use fabcheck::report::{aggregate, parse_json, render_corpus_table, render_json, render_text};
use fabcheck::yaml::HostEnv;

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture("golden").join(name)).unwrap()
}

#[test]
fn tls_cli_text() {
    assert_eq!(render_text(&scan_dir(&fixture("tls_cli"))), golden("tls_cli.txt"));
}

#[test]
fn tls_cli_json() {
    let findings = scan_dir(&fixture("tls_cli"));
    let json = render_json(&findings);
    assert_eq!(json, golden("tls_cli.json"));
    assert_eq!(parse_json(&json).unwrap(), findings);
}

#[test]
fn state_db_security_json() {
    assert_eq!(render_json(&scan_dir(&fixture("corpus/state_db_security"))), golden("state_db_security.json"));
}

#[test]
fn corpus_table() {
    let results = scan_corpus(&corpus_dir(), &LintConfig::default(), &HostEnv::new()).unwrap();
    let summary = aggregate(results.iter().map(|(n, f)| (n.as_str(), f.as_slice())));
    assert_eq!(render_corpus_table(&summary), golden("corpus.txt"));
}
