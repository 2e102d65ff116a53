//! Recursive-descent parser for `-P` policy strings.
//!
//! ```text
//! expr      := FN '(' args ')' | principal
//! FN        := AND | OR | OutOf        (case-insensitive)
//! args      := expr (',' expr)*        (OutOf: integer ',' expr (',' expr)*)
//! principal := quoted 'MSP.role'       (single or double quotes)
//! ```

use thiserror::Error;

use super::ast::{PolicyAst, Principal, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unparsable policy at byte {offset}: {message}")]
pub struct PolicyParseError {
    pub offset: usize,
    pub message: String,
}

pub fn parse_policy(text: &str) -> Result<PolicyAst, PolicyParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error("empty policy"));
    }
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(ast)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> PolicyParseError {
        PolicyParseError { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8) -> Result<(), PolicyParseError> {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", byte as char)))
        }
    }

    fn expr(&mut self) -> Result<PolicyAst, PolicyParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'\'' | b'"') => self.principal(),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            Some(_) => Err(self.error("expected a policy function or quoted principal")),
            None => Err(self.error("unexpected end of policy")),
        }
    }

    fn call(&mut self) -> Result<PolicyAst, PolicyParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default().to_ascii_lowercase();
        if !matches!(name.as_str(), "and" | "or" | "outof") {
            self.pos = start;
            return Err(self.error(format!("unknown policy function `{name}`")));
        }
        self.expect(b'(')?;
        let threshold = if name == "outof" {
            self.skip_ws();
            let at = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let k: usize = std::str::from_utf8(&self.src[at..self.pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| PolicyParseError { offset: at, message: "OutOf needs an integer threshold".into() })?;
            self.expect(b',')?;
            Some((k, at))
        } else {
            None
        };
        let mut children = vec![self.expr()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    children.push(self.expr()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
        Ok(match (name.as_str(), threshold) {
            ("and", _) => PolicyAst::And(children),
            ("or", _) => PolicyAst::Or(children),
            (_, Some((k, at))) => {
                if k == 0 || k > children.len() {
                    return Err(PolicyParseError {
                        offset: at,
                        message: format!("OutOf threshold {k} outside 1..={}", children.len()),
                    });
                }
                PolicyAst::OutOf(k, children)
            }
            _ => unreachable!(),
        })
    }

    fn principal(&mut self) -> Result<PolicyAst, PolicyParseError> {
        let quote = self.peek().unwrap();
        let start = self.pos;
        self.pos += 1;
        let body_start = self.pos;
        while self.peek().is_some_and(|c| c != quote) {
            self.pos += 1;
        }
        if self.peek().is_none() {
            return Err(PolicyParseError { offset: start, message: "unterminated principal".into() });
        }
        let body = std::str::from_utf8(&self.src[body_start..self.pos]).unwrap_or_default();
        self.pos += 1;
        let Some((msp, role)) = body.trim().rsplit_once('.') else {
            return Err(PolicyParseError { offset: start, message: format!("principal `{body}` is not MSP.role") });
        };
        if msp.is_empty() {
            return Err(PolicyParseError { offset: start, message: "principal has an empty MSP id".into() });
        }
        Ok(PolicyAst::Signed(Principal::new(msp, Role::from_text(role))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn or_of_two_members() {
        let ast = parse_policy("OR('Org1MSP.member','Org2MSP.member')").unwrap();
        assert_eq!(
            ast,
            PolicyAst::Or(vec![PolicyAst::signed("Org1MSP", Role::Member), PolicyAst::signed("Org2MSP", Role::Member)])
        );
    }

    #[test]
    fn single_principal() {
        assert_eq!(parse_policy("'Org1MSP.member'").unwrap(), PolicyAst::signed("Org1MSP", Role::Member));
    }

    #[test]
    fn out_of_with_three() {
        let ast = parse_policy("OutOf(2,'A.member','B.member','C.member')").unwrap();
        assert!(matches!(ast, PolicyAst::OutOf(2, ref c) if c.len() == 3));
    }

    #[test]
    fn case_whitespace_and_double_quotes() {
        let ast = parse_policy("  and ( \"A.peer\" ,\n or('B.admin', 'C.client') ) ").unwrap();
        assert_eq!(ast.depth(), 2);
    }

    #[test]
    fn unknown_role_is_kept() {
        assert_eq!(parse_policy("'A.orderer'").unwrap(), PolicyAst::signed("A", Role::Unknown));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse_policy("OR('A.member'").unwrap_err().offset, 13);
        assert_eq!(parse_policy("XOR('A.member')").unwrap_err().offset, 0);
        assert_eq!(parse_policy("OR('A.member') x").unwrap_err().offset, 15);
        assert_eq!(parse_policy("OutOf(4,'A.member','B.member')").unwrap_err().offset, 6);
        assert_eq!(parse_policy("OutOf(0,'A.member')").unwrap_err().offset, 6);
        assert_eq!(parse_policy("OR()").unwrap_err().offset, 3);
        assert_eq!(parse_policy("'nodot'").unwrap_err().offset, 0);
        assert!(parse_policy("").is_err());
        assert!(parse_policy("   ").is_err());
    }
}
