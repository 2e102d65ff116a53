//! Text and JSON reports, and per-pattern aggregation for corpus runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Category, Finding, Level, PatternId, SourceLocation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub error: usize,
    pub warning: usize,
    pub info: usize,
}

impl LevelCounts {
    pub fn of(findings: &[Finding]) -> Self {
        let mut c = Self::default();
        for f in findings {
            match f.level {
                Level::Error => c.error += 1,
                Level::Warning => c.warning += 1,
                Level::Info => c.info += 1,
            }
        }
        c
    }

    pub fn add(&mut self, other: &Self) {
        self.error += other.error;
        self.warning += other.warning;
        self.info += other.info;
    }
}

impl std::fmt::Display for LevelCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} Error, {} Warning, {} Info", self.error, self.warning, self.info)
    }
}

/// One block per finding, a blank line between blocks, then the level
/// summary.
pub fn render_text(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        let _ = writeln!(out, "{}", f.category);
        let _ = writeln!(out, "type: {}", f.kind);
        let _ = writeln!(out, "message: {}", f.message);
        let _ = writeln!(out, "file: {}", f.location.file);
        let _ = writeln!(out, "recommendation: {}", f.recommendation);
        let _ = writeln!(out, "pattern: {}", f.pattern.title());
        let _ = writeln!(out, "level: {}", f.level);
        out.push('\n');
    }
    let _ = writeln!(out, "{}", LevelCounts::of(findings));
    out
}

#[derive(Serialize, Deserialize)]
struct JsonFinding {
    category: Category,
    #[serde(rename = "type")]
    kind: String,
    message: String,
    file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<u32>,
    recommendation: String,
    pattern: PatternId,
    level: Level,
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    version: String,
    findings: Vec<JsonFinding>,
    summary: LevelCounts,
}

pub const JSON_VERSION: &str = "1";

pub fn render_json(findings: &[Finding]) -> String {
    let report = JsonReport {
        version: JSON_VERSION.into(),
        findings: findings
            .iter()
            .map(|f| JsonFinding {
                category: f.category,
                kind: f.kind.clone(),
                message: f.message.clone(),
                file: f.location.file.clone(),
                line: f.location.line,
                recommendation: f.recommendation.clone(),
                pattern: f.pattern,
                level: f.level,
            })
            .collect(),
        summary: LevelCounts::of(findings),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

/// Reads a report written by [`render_json`] back into findings.
pub fn parse_json(text: &str) -> Result<Vec<Finding>, serde_json::Error> {
    let report: JsonReport = serde_json::from_str(text)?;
    Ok(report
        .findings
        .into_iter()
        .map(|j| Finding {
            category: j.category,
            kind: j.kind,
            message: j.message,
            location: SourceLocation { file: j.file, line: j.line, column: None },
            recommendation: j.recommendation,
            pattern: j.pattern,
            level: j.level,
        })
        .collect())
}

fn zero_patterns() -> BTreeMap<PatternId, usize> {
    PatternId::ALL.into_iter().map(|p| (p, 0)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkCounts {
    pub findings: usize,
    pub levels: LevelCounts,
    pub per_pattern: BTreeMap<PatternId, usize>,
}

impl NetworkCounts {
    pub fn of(findings: &[Finding]) -> Self {
        let mut per_pattern = zero_patterns();
        for f in findings {
            *per_pattern.entry(f.pattern).or_default() += 1;
        }
        Self { findings: findings.len(), levels: LevelCounts::of(findings), per_pattern }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub per_pattern: BTreeMap<PatternId, usize>,
    pub per_network: BTreeMap<String, NetworkCounts>,
    pub total: usize,
}

impl Default for CorpusSummary {
    fn default() -> Self {
        Self { per_pattern: zero_patterns(), per_network: BTreeMap::new(), total: 0 }
    }
}

impl CorpusSummary {
    /// Adds a network's counts. A name already present is replaced.
    pub fn insert(&mut self, name: String, counts: NetworkCounts) {
        if let Some(old) = self.per_network.remove(&name) {
            for (p, n) in &old.per_pattern {
                *self.per_pattern.entry(*p).or_default() -= n;
            }
            self.total -= old.findings;
        }
        for (p, n) in &counts.per_pattern {
            *self.per_pattern.entry(*p).or_default() += n;
        }
        self.total += counts.findings;
        self.per_network.insert(name, counts);
    }

    /// Element-wise sum with a summary over a disjoint set of networks.
    pub fn merge(mut self, other: CorpusSummary) -> CorpusSummary {
        for (name, counts) in other.per_network {
            self.insert(name, counts);
        }
        self
    }

    pub fn levels(&self) -> LevelCounts {
        let mut total = LevelCounts::default();
        for n in self.per_network.values() {
            total.add(&n.levels);
        }
        total
    }
}

pub fn aggregate<'a>(networks: impl IntoIterator<Item = (&'a str, &'a [Finding])>) -> CorpusSummary {
    let mut summary = CorpusSummary::default();
    for (name, findings) in networks {
        summary.insert(name.to_string(), NetworkCounts::of(findings));
    }
    summary
}

/// Pattern/count table in report-table order, then per-network totals.
pub fn render_corpus_table(summary: &CorpusSummary) -> String {
    let width = PatternId::ALL.iter().map(|p| p.title().len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  Count", "Pattern");
    for p in PatternId::ALL {
        let _ = writeln!(out, "{:<width$}  {}", p.title(), summary.per_pattern.get(&p).copied().unwrap_or(0));
    }
    let _ = writeln!(out, "{:<width$}  {}", "Total", summary.total);
    out.push('\n');
    for (name, n) in &summary.per_network {
        let _ = writeln!(out, "{name}: {} findings ({})", n.findings, n.levels);
    }
    let _ = writeln!(out, "{} networks, {}", summary.per_network.len(), summary.levels());
    out
}

pub fn render_corpus_json(summary: &CorpusSummary) -> String {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tls_off() -> Finding {
        Finding::new(
            PatternId::TlsOnoff,
            Level::Warning,
            "TLS off",
            "TLS disabled in container CLI!",
            SourceLocation::at("docker-compose.yaml", 12),
            "Enable TLS for security!",
        )
    }

    #[test]
    fn tls_block_is_exact() {
        let text = render_text(&[tls_off()]);
        let expected = "Security\ntype: TLS off\nmessage: TLS disabled in container CLI!\nfile: docker-compose.yaml\nrecommendation: Enable TLS for security!\npattern: TLS on/off\nlevel: Warning\n\n0 Error, 1 Warning, 0 Info\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn empty_text_is_summary_only() {
        assert_eq!(render_text(&[]), "0 Error, 0 Warning, 0 Info\n");
    }

    #[test]
    fn json_has_fixed_key_order() {
        let text = render_json(&[tls_off()]);
        let keys = ["\"category\"", "\"type\"", "\"message\"", "\"file\"", "\"line\"", "\"recommendation\"", "\"pattern\"", "\"level\""];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("\"pattern\": \"tls_onoff\""));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["version"], "1");
        assert_eq!(value["summary"]["warning"], 1);
    }

    #[test]
    fn empty_json() {
        let value: serde_json::Value = serde_json::from_str(&render_json(&[])).unwrap();
        assert_eq!(value["findings"], serde_json::json!([]));
        assert_eq!(value["summary"], serde_json::json!({"error": 0, "warning": 0, "info": 0}));
    }

    #[test]
    fn absent_line_is_omitted() {
        let mut f = tls_off();
        f.location.line = None;
        assert!(!render_json(&[f]).contains("\"line\""));
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let s = aggregate(std::iter::empty());
        assert_eq!(s.total, 0);
        assert_eq!(s.per_pattern.len(), 12);
        assert!(s.per_pattern.values().all(|n| *n == 0));
        let table = render_corpus_table(&s);
        let rows: Vec<&str> = table.lines().skip(1).take(12).collect();
        for (row, p) in rows.iter().zip(PatternId::ALL) {
            assert!(row.starts_with(p.title()));
        }
    }

    fn finding() -> impl Strategy<Value = Finding> {
        (0..12usize, 0..3usize, "[a-z ]{1,12}", prop::option::of(1..500u32)).prop_map(|(p, l, msg, line)| {
            let mut f = Finding::new(
                PatternId::ALL[p],
                [Level::Info, Level::Warning, Level::Error][l],
                "kind",
                msg,
                SourceLocation::file("docker-compose.yaml"),
                "fix",
            );
            f.location.line = line;
            f
        })
    }

    fn networks() -> impl Strategy<Value = BTreeMap<String, Vec<Finding>>> {
        prop::collection::btree_map("[a-z]{1,6}", prop::collection::vec(finding(), 0..6), 0..6)
    }

    proptest! {
        #[test]
        fn json_round_trip(findings in prop::collection::vec(finding(), 0..8)) {
            prop_assert_eq!(parse_json(&render_json(&findings)).unwrap(), findings);
        }

        #[test]
        fn text_and_json_summaries_agree(findings in prop::collection::vec(finding(), 0..8)) {
            let text = render_text(&findings);
            let value: serde_json::Value = serde_json::from_str(&render_json(&findings)).unwrap();
            let s = &value["summary"];
            let line = format!("{} Error, {} Warning, {} Info", s["error"], s["warning"], s["info"]);
            prop_assert_eq!(text.lines().last().unwrap(), line.as_str());
        }

        #[test]
        fn aggregation_is_linear(a in networks(), b in networks()) {
            let b: BTreeMap<String, Vec<Finding>> = b.into_iter().map(|(k, v)| (format!("b-{k}"), v)).collect();
            let sa = aggregate(a.iter().map(|(k, v)| (k.as_str(), v.as_slice())));
            let sb = aggregate(b.iter().map(|(k, v)| (k.as_str(), v.as_slice())));
            let all = aggregate(a.iter().chain(b.iter()).map(|(k, v)| (k.as_str(), v.as_slice())));
            for p in PatternId::ALL {
                prop_assert_eq!(all.per_pattern[&p], sa.per_pattern[&p] + sb.per_pattern[&p]);
            }
            prop_assert_eq!(all.total, sa.total + sb.total);
            prop_assert_eq!(all.total, all.per_pattern.values().sum::<usize>());
            prop_assert_eq!(sa.merge(sb), all);
        }
    }
}
