//! A location-annotated YAML tree.
//!
//! Built from the event stream of `yaml-rust2` so that every node keeps the
//! line it was read from. Aliases are expanded at build time and `<<` merge
//! keys are honored on lookup.

use std::collections::HashMap;

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser};
use yaml_rust2::scanner::{Marker, TScalarStyle};

use crate::model::{Finding, Level, PatternId, SourceLocation};

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Null,
    Scalar { text: String, quoted: bool },
    Sequence(Vec<Node>),
    Mapping(Vec<(Node, Node)>),
}

/// A parsed document. `root` is `None` for an empty file.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTree {
    pub path: String,
    pub root: Option<Node>,
}

impl DocumentTree {
    pub fn is_empty(&self) -> bool {
        match &self.root {
            None => true,
            Some(n) => matches!(n.kind, NodeKind::Null),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Node> {
        self.root.as_ref().and_then(|r| r.get(key))
    }
}

impl Node {
    pub fn line(&self) -> u32 {
        self.location.line.unwrap_or(1)
    }

    pub fn is_null(&self) -> bool {
        matches!(self.kind, NodeKind::Null)
    }

    pub fn as_str(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Scalar { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        self.as_str().and_then(|s| s.trim().parse().ok())
    }

    pub fn as_sequence(&self) -> Option<&[Node]> {
        match &self.kind {
            NodeKind::Sequence(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_mapping(&self) -> bool {
        matches!(self.kind, NodeKind::Mapping(_))
    }

    /// Looks up `key` in a mapping, falling back to `<<` merge sources.
    pub fn get(&self, key: &str) -> Option<&Node> {
        self.get_entry(key).map(|(_, v)| v)
    }

    /// Like [`Node::get`] but also returns the key node, whose location is
    /// usually the more useful one to report.
    pub fn get_entry(&self, key: &str) -> Option<(&Node, &Node)> {
        let NodeKind::Mapping(entries) = &self.kind else { return None };
        if let Some((k, v)) = entries.iter().find(|(k, _)| k.as_str() == Some(key)) {
            return Some((k, v));
        }
        entries
            .iter()
            .filter(|(k, _)| k.as_str() == Some("<<"))
            .flat_map(|(_, v)| merge_sources(v))
            .find_map(|m| m.get_entry(key))
    }

    /// Mapping entries with merge keys expanded; direct keys shadow merged
    /// ones and earlier merge sources shadow later ones.
    pub fn entries(&self) -> Vec<(&Node, &Node)> {
        let NodeKind::Mapping(entries) = &self.kind else { return Vec::new() };
        let mut out: Vec<(&Node, &Node)> = Vec::new();
        let seen = |out: &Vec<(&Node, &Node)>, k: &Node| {
            out.iter().any(|(e, _)| e.as_str().is_some() && e.as_str() == k.as_str())
        };
        for (k, v) in entries {
            if k.as_str() != Some("<<") && !seen(&out, k) {
                out.push((k, v));
            }
        }
        for (k, v) in entries {
            if k.as_str() == Some("<<") {
                for source in merge_sources(v) {
                    for (mk, mv) in source.entries() {
                        if !seen(&out, mk) {
                            out.push((mk, mv));
                        }
                    }
                }
            }
        }
        out
    }

    /// Structural equality: same shape and scalar text, ignoring locations
    /// and quoting style.
    pub fn structurally_eq(&self, other: &Node) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Null, NodeKind::Null) => true,
            (NodeKind::Scalar { text: a, .. }, NodeKind::Scalar { text: b, .. }) => a == b,
            (NodeKind::Sequence(a), NodeKind::Sequence(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.structurally_eq(y))
            }
            (NodeKind::Mapping(a), NodeKind::Mapping(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((ka, va), (kb, vb))| ka.structurally_eq(kb) && va.structurally_eq(vb))
            }
            _ => false,
        }
    }
}

fn merge_sources(v: &Node) -> Vec<&Node> {
    match &v.kind {
        NodeKind::Mapping(_) => vec![v],
        NodeKind::Sequence(items) => items.iter().filter(|n| n.is_mapping()).collect(),
        _ => Vec::new(),
    }
}

/// Parses raw bytes; invalid UTF-8 is reported like any other syntax error.
pub fn parse_yaml_bytes(bytes: &[u8], path: &str) -> Result<DocumentTree, Finding> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_yaml(text, path),
        Err(e) => {
            let line = bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() as u32 + 1;
            Err(syntax_finding(
                path,
                line,
                format!("file is not valid UTF-8 (byte {})", e.valid_up_to()),
            ))
        }
    }
}

/// Parses the first YAML document of `text`.
///
/// On failure returns exactly one `yaml_syntax` Error located at the first
/// offending line.
pub fn parse_yaml(text: &str, path: &str) -> Result<DocumentTree, Finding> {
    let mut builder = TreeBuilder::new(path);
    let mut parser = Parser::new_from_str(text);
    if let Err(e) = parser.load(&mut builder, false) {
        let line = e.marker().line().max(1) as u32;
        return Err(syntax_finding(path, line, e.info().to_string()));
    }
    if let Some((line, message)) = builder.error {
        return Err(syntax_finding(path, line, message));
    }
    Ok(DocumentTree { path: path.to_string(), root: builder.root })
}

fn syntax_finding(path: &str, line: u32, detail: String) -> Finding {
    Finding::new(
        PatternId::YamlSyntax,
        Level::Error,
        "Yaml syntax error",
        format!("{path} is not valid YAML: {detail}"),
        SourceLocation::at(path, line),
        "Fix the YAML syntax; the file cannot be loaded as written.",
    )
}

enum Frame {
    Sequence { node: Vec<Node>, location: SourceLocation, anchor: usize },
    Mapping {
        entries: Vec<(Node, Node)>,
        pending_key: Option<Node>,
        location: Option<SourceLocation>,
        fallback: SourceLocation,
        anchor: usize,
    },
}

struct TreeBuilder {
    path: String,
    stack: Vec<Frame>,
    anchors: HashMap<usize, Node>,
    root: Option<Node>,
    documents: usize,
    error: Option<(u32, String)>,
}

impl TreeBuilder {
    fn new(path: &str) -> Self {
        Self {
            path: path.to_string(),
            stack: Vec::new(),
            anchors: HashMap::new(),
            root: None,
            documents: 0,
            error: None,
        }
    }

    fn location(&self, mark: &Marker) -> SourceLocation {
        SourceLocation::at_column(&self.path, mark.line().max(1) as u32, mark.col() as u32 + 1)
    }

    fn push_node(&mut self, node: Node, anchor: usize) {
        if anchor > 0 {
            self.anchors.insert(anchor, node.clone());
        }
        match self.stack.last_mut() {
            None => {
                if self.documents == 1 {
                    self.root = Some(node);
                }
            }
            Some(Frame::Sequence { node: items, .. }) => items.push(node),
            Some(Frame::Mapping { entries, pending_key, location, .. }) => match pending_key.take() {
                None => {
                    if location.is_none() {
                        *location = Some(node.location.clone());
                    }
                    *pending_key = Some(node);
                }
                Some(key) => entries.push((key, node)),
            },
        }
    }
}

impl MarkedEventReceiver for TreeBuilder {
    fn on_event(&mut self, ev: Event, mark: Marker) {
        if self.error.is_some() {
            return;
        }
        match ev {
            Event::DocumentStart => self.documents += 1,
            _ if self.documents != 1 => {}
            Event::Scalar(text, style, anchor, _tag) => {
                let quoted = !matches!(style, TScalarStyle::Plain);
                let kind = if !quoted && matches!(text.as_str(), "" | "~" | "null" | "Null" | "NULL") {
                    NodeKind::Null
                } else {
                    NodeKind::Scalar { text, quoted }
                };
                let node = Node { kind, location: self.location(&mark) };
                self.push_node(node, anchor);
            }
            Event::SequenceStart(anchor, _) => {
                let location = self.location(&mark);
                self.stack.push(Frame::Sequence { node: Vec::new(), location, anchor });
            }
            Event::MappingStart(anchor, _) => {
                let fallback = self.location(&mark);
                self.stack.push(Frame::Mapping {
                    entries: Vec::new(),
                    pending_key: None,
                    location: None,
                    fallback,
                    anchor,
                });
            }
            Event::SequenceEnd | Event::MappingEnd => {
                let (node, anchor) = match self.stack.pop() {
                    Some(Frame::Sequence { node, location, anchor }) => {
                        (Node { kind: NodeKind::Sequence(node), location }, anchor)
                    }
                    Some(Frame::Mapping { entries, location, fallback, anchor, .. }) => (
                        Node { kind: NodeKind::Mapping(entries), location: location.unwrap_or(fallback) },
                        anchor,
                    ),
                    None => return,
                };
                self.push_node(node, anchor);
            }
            Event::Alias(id) => match self.anchors.get(&id) {
                Some(node) => {
                    let node = node.clone();
                    self.push_node(node, 0);
                }
                None => {
                    self.error = Some((mark.line().max(1) as u32, format!("unknown alias #{id}")));
                }
            },
            _ => {}
        }
    }
}


#[cfg(test)]
mod tests {
    use super::testing::serialize;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_scalar_entries() {
        let tree = parse_yaml("Name: org\nDomain: org.consortium.com", "crypto-config.yaml").unwrap();
        let root = tree.root.as_ref().unwrap();
        assert_eq!(root.entries().len(), 2);
        assert_eq!(root.get("Domain").unwrap().as_str(), Some("org.consortium.com"));
        assert_eq!(root.get("Domain").unwrap().line(), 2);
    }

    #[test]
    fn empty_file_is_empty_tree() {
        let tree = parse_yaml("", "x.yaml").unwrap();
        assert!(tree.root.is_none());
        assert!(tree.is_empty());
    }

    #[test]
    fn tab_indentation_is_a_line_two_error() {
        let f = parse_yaml("a:\n\tb: 1", "configtx.yaml").unwrap_err();
        assert_eq!(f.pattern, PatternId::YamlSyntax);
        assert_eq!(f.level, Level::Error);
        assert_eq!(f.location.line, Some(2));
        assert_eq!(f.location.file, "configtx.yaml");
    }

    #[test]
    fn invalid_utf8_is_a_syntax_error() {
        let f = parse_yaml_bytes(b"a: 1\nb: \xff\n", "x.yaml").unwrap_err();
        assert_eq!(f.pattern, PatternId::YamlSyntax);
        assert_eq!(f.location.line, Some(2));
    }

    #[test]
    fn merge_keys_and_aliases() {
        let text = "defaults: &d\n  BatchTimeout: 2s\n  Type: solo\nOrderer:\n  <<: *d\n  Type: kafka\n";
        let tree = parse_yaml(text, "configtx.yaml").unwrap();
        let orderer = tree.get("Orderer").unwrap();
        assert_eq!(orderer.get("Type").unwrap().as_str(), Some("kafka"));
        assert_eq!(orderer.get("BatchTimeout").unwrap().as_str(), Some("2s"));
        let keys: Vec<_> = orderer.entries().iter().map(|(k, _)| k.as_str().unwrap()).collect();
        assert_eq!(keys, vec!["Type", "BatchTimeout"]);
    }

    #[test]
    fn quoted_null_stays_scalar() {
        let tree = parse_yaml("a: ''\nb:\nc: \"null\"", "x.yaml").unwrap();
        assert_eq!(tree.get("a").unwrap().as_str(), Some(""));
        assert!(tree.get("b").unwrap().is_null());
        assert_eq!(tree.get("c").unwrap().as_str(), Some("null"));
    }

    #[test]
    fn only_first_document_is_kept() {
        let tree = parse_yaml("a: 1\n---\nb: 2\n", "x.yaml").unwrap();
        assert!(tree.get("a").is_some());
        assert!(tree.get("b").is_none());
    }

    #[derive(Debug, Clone)]
    enum Shape {
        Null,
        Text(String),
        Seq(Vec<Shape>),
        Map(Vec<(String, Shape)>),
    }

    fn shape() -> impl Strategy<Value = Shape> {
        let leaf = prop_oneof![
            Just(Shape::Null),
            "[ -~]{0,12}".prop_map(Shape::Text),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Shape::Seq),
                prop::collection::btree_map("[a-zA-Z_][a-zA-Z0-9_]{0,6}", inner, 0..4)
                    .prop_map(|m| Shape::Map(m.into_iter().collect())),
            ]
        })
    }

    fn render(s: &Shape) -> String {
        match s {
            Shape::Null => "null".into(),
            Shape::Text(t) => serde_json::to_string(t).unwrap(),
            Shape::Seq(items) => format!("[{}]", items.iter().map(render).collect::<Vec<_>>().join(", ")),
            Shape::Map(entries) => format!(
                "{{{}}}",
                entries
                    .iter()
                    .map(|(k, v)| format!("{}: {}", serde_json::to_string(k).unwrap(), render(v)))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }

    proptest! {
        #[test]
        fn serialize_round_trip_is_stable(s in shape()) {
            let first = parse_yaml(&render(&s), "x.yaml").unwrap().root.unwrap();
            let second = parse_yaml(&serialize(&first), "x.yaml").unwrap().root.unwrap();
            prop_assert!(first.structurally_eq(&second));
        }
    }
}
