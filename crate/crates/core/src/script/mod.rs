//! Static extraction of network-structure commands from shell scripts.
//!
//! Nothing is executed. Every simple command whose program is one of the
//! Fabric tool families is returned, including commands inside function
//! bodies and untaken branches.

mod extract;
mod lexer;

use std::collections::BTreeMap;

pub use extract::{
    effective_peer_commands, extract_chaincode_deployments, extract_channel_declarations,
    extract_channel_ops, parse_script, PeerCommand,
};
use lexer::{lex, Token, Vars};

/// Programs whose invocations are extracted.
pub const COMMAND_FAMILIES: [&str; 5] = ["peer", "configtxgen", "cryptogen", "docker", "docker-compose"];

/// Variables whose straight-line value is attached to each command.
pub const CONTEXT_VARS: [&str; 2] = ["CORE_PEER_ADDRESS", "CORE_PEER_LOCALMSPID"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandInvocation {
    /// Words with quotes removed; `argv[0]` is the program.
    pub argv: Vec<String>,
    /// 1-based line where the program word starts.
    pub line: u32,
    pub raw: String,
    /// `KEY=VALUE` prefixes written on the command itself.
    pub env: Vec<(String, String)>,
    /// Values of [`CONTEXT_VARS`] in effect, prefixes applied.
    pub context: BTreeMap<String, String>,
}

impl CommandInvocation {
    pub fn program(&self) -> &str {
        basename(&self.argv[0])
    }
}

pub(crate) fn basename(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNote {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptScan {
    pub invocations: Vec<CommandInvocation>,
    pub notes: Vec<ParseNote>,
}

/// The recognized commands of `text`, in line order.
pub fn extract_commands(text: &str) -> Vec<CommandInvocation> {
    scan_script(text).invocations
}

/// Like [`extract_commands`] but also returns notes about lines that could
/// not be tokenized.
pub fn scan_script(text: &str) -> ScriptScan {
    scan_with_vars(text, &mut Vars::new())
}

pub(crate) fn scan_with_vars(text: &str, vars: &mut Vars) -> ScriptScan {
    let lines: Vec<&str> = text.lines().collect();
    let mut scan = ScriptScan::default();
    let mut i = 0;
    while i < lines.len() {
        // join continuation lines, remembering the source line of each char
        let mut chars: Vec<char> = Vec::new();
        let mut char_lines: Vec<u32> = Vec::new();
        loop {
            let line = lines[i];
            let continued = ends_with_continuation(line);
            let body = if continued { &line[..line.len() - 1] } else { line };
            chars.extend(body.chars());
            char_lines.extend(std::iter::repeat_n(i as u32 + 1, body.chars().count()));
            i += 1;
            if !continued || i >= lines.len() {
                break;
            }
        }

        let lexed = lex(&chars, vars);
        if let Some(at) = lexed.unbalanced_at {
            scan.notes.push(ParseNote {
                line: char_lines.get(at).copied().unwrap_or(i as u32),
                message: "unbalanced quote; rest of line skipped".into(),
            });
        }
        collect_commands(&chars, &char_lines, &lexed.tokens, lexed.unbalanced_at.is_some(), vars, &mut scan);

        for (delimiter, strip_tabs) in lexed.heredocs {
            while i < lines.len() {
                let l = if strip_tabs { lines[i].trim_start_matches('\t') } else { lines[i] };
                i += 1;
                if l == delimiter {
                    break;
                }
            }
        }
    }
    scan
}

fn ends_with_continuation(line: &str) -> bool {
    let trailing = line.chars().rev().take_while(|&c| c == '\\').count();
    trailing % 2 == 1
}

const RESERVED: [&str; 14] = [
    "if", "then", "else", "elif", "fi", "do", "done", "while", "until", "!", "{", "}", "time", "function",
];

fn is_assignment(word: &str) -> Option<(&str, &str)> {
    let (name, value) = word.split_once('=')?;
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    ok.then_some((name, value))
}

fn collect_commands(
    chars: &[char],
    char_lines: &[u32],
    tokens: &[Token],
    truncated: bool,
    vars: &mut Vars,
    scan: &mut ScriptScan,
) {
    let mut segments: Vec<&[Token]> = tokens.split(|t| matches!(t, Token::Op(_))).collect();
    if truncated {
        // the command cut off by the unbalanced quote is incomplete
        segments.pop();
    }
    for segment in segments {
        let words: Vec<_> = segment
            .iter()
            .filter_map(|t| match t {
                Token::Word(w) => Some(w),
                Token::Op(_) => None,
            })
            .collect();
        let mut idx = 0;
        while idx < words.len() && RESERVED.contains(&words[idx].text.as_str()) {
            idx += 1;
        }
        if idx < words.len() && matches!(words[idx].text.as_str(), "export" | "local" | "readonly" | "declare") {
            for w in &words[idx + 1..] {
                if let Some((name, value)) = is_assignment(&w.text) {
                    vars.insert(name.to_string(), value.to_string());
                }
            }
            continue;
        }
        let mut prefix: Vec<(String, String)> = Vec::new();
        while idx < words.len() {
            match is_assignment(&words[idx].text) {
                Some((n, v)) => prefix.push((n.to_string(), v.to_string())),
                None => break,
            }
            idx += 1;
        }
        if idx == words.len() {
            for (n, v) in prefix {
                vars.insert(n, v);
            }
            continue;
        }
        let argv: Vec<String> = words[idx..].iter().map(|w| w.text.clone()).collect();
        if !COMMAND_FAMILIES.contains(&basename(&argv[0])) {
            continue;
        }
        let first = words[idx];
        let last = words[words.len() - 1];
        let mut context: BTreeMap<String, String> = CONTEXT_VARS
            .iter()
            .filter_map(|k| vars.get(*k).map(|v| (k.to_string(), v.clone())))
            .collect();
        for (n, v) in &prefix {
            if CONTEXT_VARS.contains(&n.as_str()) {
                context.insert(n.clone(), v.clone());
            }
        }
        let raw_start = words.first().map_or(first.start, |w| w.start);
        scan.invocations.push(CommandInvocation {
            argv,
            line: char_lines.get(first.start).copied().unwrap_or(1),
            raw: chars[raw_start..last.end.min(chars.len())].iter().collect(),
            env: prefix,
            context,
        });
    }
}
