//! A small POSIX-flavored shell lexer.
//!
//! Splits one logical line (continuations already joined) into words and
//! control operators. Quotes are removed, adjacent quoted segments join
//! into one word, and `$VAR` / `${VAR}` / `${VAR:-x}` / `${VAR:=x}` expand
//! from the straight-line variable table when the value is known. Unknown
//! references are kept verbatim.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Word(Word),
    /// `;` `&&` `||` `|` `&` `(` `)` `;;` and the end of a line.
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub text: String,
    /// Index into the logical line's chars of the first and one-past-last
    /// character.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    /// Here-doc delimiters opened on this line: (word, strip_tabs).
    pub heredocs: Vec<(String, bool)>,
    /// Char index where an unbalanced quote began.
    pub unbalanced_at: Option<usize>,
}

pub type Vars = BTreeMap<String, String>;

pub fn lex(chars: &[char], vars: &mut Vars) -> Lexed {
    Lexer { chars, pos: 0, vars, out: Lexed::default(), word: None, word_start: 0, redirect_target: None }
        .run()
}

#[derive(PartialEq, Eq)]
enum RedirectTarget {
    Discard,
    HereDoc { strip_tabs: bool },
}

struct Lexer<'a> {
    chars: &'a [char],
    pos: usize,
    vars: &'a mut Vars,
    out: Lexed,
    word: Option<String>,
    word_start: usize,
    redirect_target: Option<RedirectTarget>,
}

impl Lexer<'_> {
    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn push_char(&mut self, c: char) {
        self.word_mut().push(c);
    }

    fn push_str(&mut self, s: &str) {
        self.word_mut().push_str(s);
    }

    fn word_mut(&mut self) -> &mut String {
        if self.word.is_none() {
            self.word_start = self.pos;
        }
        self.word.get_or_insert_with(String::new)
    }

    fn finish_word(&mut self) {
        let Some(text) = self.word.take() else { return };
        match self.redirect_target.take() {
            Some(RedirectTarget::Discard) => {}
            Some(RedirectTarget::HereDoc { strip_tabs }) => self.out.heredocs.push((text, strip_tabs)),
            None => self.out.tokens.push(Token::Word(Word { text, start: self.word_start, end: self.pos })),
        }
    }

    fn op(&mut self, op: &'static str) {
        self.finish_word();
        self.out.tokens.push(Token::Op(op));
    }

    fn run(mut self) -> Lexed {
        while let Some(c) = self.peek(0) {
            match c {
                c if c.is_whitespace() => {
                    self.finish_word();
                    self.pos += 1;
                }
                '#' if self.word.is_none() => break,
                '\\' => {
                    if let Some(next) = self.peek(1) {
                        self.push_char(next);
                    }
                    self.pos += 2;
                }
                '\'' => {
                    let start = self.pos;
                    self.word_mut();
                    let Some(len) = self.chars[start + 1..].iter().position(|&c| c == '\'') else {
                        return self.unbalanced(start);
                    };
                    let text: String = self.chars[start + 1..start + 1 + len].iter().collect();
                    self.push_str(&text);
                    self.pos = start + len + 2;
                }
                '"' => {
                    let start = self.pos;
                    self.word_mut();
                    self.pos += 1;
                    loop {
                        match self.peek(0) {
                            None => return self.unbalanced(start),
                            Some('"') => {
                                self.pos += 1;
                                break;
                            }
                            Some('\\') if matches!(self.peek(1), Some('"' | '\\' | '$' | '`')) => {
                                let next = self.peek(1).unwrap();
                                self.push_char(next);
                                self.pos += 2;
                            }
                            Some('$') => {
                                if !self.dollar() {
                                    return self.unbalanced(start);
                                }
                            }
                            Some('`') => {
                                if !self.backtick() {
                                    return self.unbalanced(start);
                                }
                            }
                            Some(c) => {
                                self.push_char(c);
                                self.pos += 1;
                            }
                        }
                    }
                }
                '$' => {
                    let start = self.pos;
                    if !self.dollar() {
                        return self.unbalanced(start);
                    }
                }
                '`' => {
                    let start = self.pos;
                    if !self.backtick() {
                        return self.unbalanced(start);
                    }
                }
                ';' => {
                    let two = self.peek(1) == Some(';');
                    self.op(if two { ";;" } else { ";" });
                    self.pos += if two { 2 } else { 1 };
                }
                '&' if self.peek(1) == Some('&') => {
                    self.op("&&");
                    self.pos += 2;
                }
                '&' if self.peek(1) == Some('>') => {
                    self.finish_word();
                    self.pos += 2;
                    if self.peek(0) == Some('>') {
                        self.pos += 1;
                    }
                    self.redirect_target = Some(RedirectTarget::Discard);
                }
                '&' => {
                    self.op("&");
                    self.pos += 1;
                }
                '|' => {
                    let two = self.peek(1) == Some('|');
                    self.op(if two { "||" } else { "|" });
                    self.pos += if two { 2 } else { 1 };
                }
                '(' => {
                    self.op("(");
                    self.pos += 1;
                }
                ')' => {
                    self.op(")");
                    self.pos += 1;
                }
                '<' | '>' => self.redirect(),
                c => {
                    self.push_char(c);
                    self.pos += 1;
                }
            }
        }
        self.finish_word();
        self.out
    }

    fn unbalanced(mut self, at: usize) -> Lexed {
        self.word = None;
        self.out.unbalanced_at = Some(at);
        self.out
    }

    fn redirect(&mut self) {
        // a pending all-digit word is a file descriptor (`2>`)
        if self.word.as_deref().is_some_and(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_digit())) {
            self.word = None;
        }
        self.finish_word();
        let c = self.peek(0).unwrap();
        self.pos += 1;
        if c == '<' && self.peek(0) == Some('<') {
            self.pos += 1;
            if self.peek(0) == Some('<') {
                self.pos += 1;
                self.redirect_target = Some(RedirectTarget::Discard);
                return;
            }
            let strip_tabs = self.peek(0) == Some('-');
            if strip_tabs {
                self.pos += 1;
            }
            self.redirect_target = Some(RedirectTarget::HereDoc { strip_tabs });
            return;
        }
        match self.peek(0) {
            Some('>') if c == '>' => self.pos += 1,
            Some('&') => {
                self.pos += 1;
                while matches!(self.peek(0), Some(d) if d.is_ascii_digit() || d == '-') {
                    self.pos += 1;
                }
                return;
            }
            _ => {}
        }
        self.redirect_target = Some(RedirectTarget::Discard);
    }

    fn backtick(&mut self) -> bool {
        let start = self.pos;
        let Some(len) = self.chars[start + 1..].iter().position(|&c| c == '`') else {
            return false;
        };
        let raw: String = self.chars[start..start + len + 2].iter().collect();
        self.push_str(&raw);
        self.pos = start + len + 2;
        true
    }

    /// Handles a `$` at `self.pos`. Returns false on an unterminated
    /// `$(` or `${`.
    fn dollar(&mut self) -> bool {
        let start = self.pos;
        match self.peek(1) {
            Some('(') => {
                let mut depth = 0usize;
                let mut i = start + 1;
                let mut quote: Option<char> = None;
                while i < self.chars.len() {
                    let c = self.chars[i];
                    match (quote, c) {
                        (Some(q), c) if c == q => quote = None,
                        (Some(_), _) => {}
                        (None, '\'' | '"') => quote = Some(c),
                        (None, '(') => depth += 1,
                        (None, ')') => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
                if i >= self.chars.len() {
                    return false;
                }
                let raw: String = self.chars[start..=i].iter().collect();
                self.push_str(&raw);
                self.pos = i + 1;
            }
            Some('{') => {
                let Some(len) = self.chars[start + 2..].iter().position(|&c| c == '}') else {
                    return false;
                };
                let inner: String = self.chars[start + 2..start + 2 + len].iter().collect();
                let expanded = self.expand_braced(&inner);
                self.push_str(&expanded);
                self.pos = start + len + 3;
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let len = self.chars[start + 1..]
                    .iter()
                    .position(|c| !(c.is_ascii_alphanumeric() || *c == '_'))
                    .unwrap_or(self.chars.len() - start - 1);
                let name: String = self.chars[start + 1..start + 1 + len].iter().collect();
                let text = match self.vars.get(&name) {
                    Some(v) => v.clone(),
                    None => format!("${name}"),
                };
                self.push_str(&text);
                self.pos = start + 1 + len;
            }
            Some(c) if c.is_ascii_digit() || "?@#$*!-".contains(c) => {
                self.push_char('$');
                self.push_char(c);
                self.pos += 2;
            }
            _ => {
                self.push_char('$');
                self.pos += 1;
            }
        }
        true
    }

    fn expand_braced(&mut self, inner: &str) -> String {
        let verbatim = format!("${{{inner}}}");
        let name_len = inner
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(inner.len());
        let (name, op) = inner.split_at(name_len);
        if name.is_empty() {
            return verbatim;
        }
        let current = self.vars.get(name).cloned();
        let default = |prefix: &str| op.strip_prefix(prefix).map(strip_quotes);
        if let Some(d) = default(":-") {
            return current.filter(|v| !v.is_empty()).unwrap_or(d);
        }
        if let Some(d) = default(":=") {
            return match current.filter(|v| !v.is_empty()) {
                Some(v) => v,
                None => {
                    self.vars.insert(name.to_string(), d.clone());
                    d
                }
            };
        }
        if let Some(d) = default("-") {
            return current.unwrap_or(d);
        }
        if op.is_empty() {
            return current.unwrap_or(verbatim);
        }
        verbatim
    }
}

fn strip_quotes(s: &str) -> String {
    let t = s.trim();
    for q in ['"', '\''] {
        if t.len() >= 2 && t.starts_with(q) && t.ends_with(q) {
            return t[1..t.len() - 1].to_string();
        }
    }
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(line: &str) -> Vec<String> {
        words_with(line, &mut Vars::new())
    }

    fn words_with(line: &str, vars: &mut Vars) -> Vec<String> {
        let chars: Vec<char> = line.chars().collect();
        lex(&chars, vars)
            .tokens
            .into_iter()
            .map(|t| match t {
                Token::Word(w) => w.text,
                Token::Op(o) => format!("<{o}>"),
            })
            .collect()
    }

    #[test]
    fn quotes_are_removed_and_joined() {
        assert_eq!(words(r#"peer -P "OR ('A.member','B.member')""#), vec!["peer", "-P", "OR ('A.member','B.member')"]);
        assert_eq!(words(r#"a'b'"c"d"#), vec!["abcd"]);
    }

    #[test]
    fn comments_and_operators() {
        assert_eq!(words("a && b || c; d # comment"), vec!["a", "<&&>", "b", "<||>", "c", "<;>", "d"]);
        assert_eq!(words("echo a#b"), vec!["echo", "a#b"]);
    }

    #[test]
    fn redirections_are_dropped() {
        assert_eq!(words("peer channel list >&log.txt 2>&1"), vec!["peer", "channel", "list", "log.txt"]);
        assert_eq!(words("peer channel list > log.txt 2> err"), vec!["peer", "channel", "list"]);
    }

    #[test]
    fn heredoc_delimiter_is_reported() {
        let chars: Vec<char> = "cat <<-'EOF' > x".chars().collect();
        let lexed = lex(&chars, &mut Vars::new());
        assert_eq!(lexed.heredocs, vec![("EOF".to_string(), true)]);
    }

    #[test]
    fn variables_expand_when_known() {
        let mut vars = Vars::new();
        vars.insert("CHANNEL_NAME".into(), "mychannel".into());
        assert_eq!(words_with("-c $CHANNEL_NAME -f ${CHANNEL_NAME}.tx $UNKNOWN", &mut vars), vec!["-c", "mychannel", "-f", "mychannel.tx", "$UNKNOWN"]);
    }

    #[test]
    fn single_quotes_do_not_expand() {
        let mut vars = Vars::new();
        vars.insert("X".into(), "1".into());
        assert_eq!(words_with("'$X' \"$X\"", &mut vars), vec!["$X", "1"]);
    }

    #[test]
    fn default_forms() {
        let mut vars = Vars::new();
        assert_eq!(words_with(": ${CHANNEL_NAME:=\"mychannel\"}", &mut vars), vec![":", "mychannel"]);
        assert_eq!(vars["CHANNEL_NAME"], "mychannel");
        assert_eq!(words_with("${DELAY:-3}", &mut vars), vec!["3"]);
    }

    #[test]
    fn command_substitution_stays_one_word() {
        assert_eq!(words("K=$(ls crypto/*_sk | head -1) x"), vec!["K=$(ls crypto/*_sk | head -1)", "x"]);
    }

    #[test]
    fn unbalanced_quote_stops_the_line() {
        let chars: Vec<char> = "a b; peer -P \"OR(".chars().collect();
        let lexed = lex(&chars, &mut Vars::new());
        assert_eq!(lexed.unbalanced_at, Some(13));
        assert_eq!(lexed.tokens.len(), 5);
    }
}
