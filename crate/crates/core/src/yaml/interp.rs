//! `${VAR}` and `${VAR:-default}` substitution, compose-compatible for
//! exactly those two forms.

use std::collections::BTreeMap;

/// Host variables available for substitution.
pub type HostEnv = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpolated {
    pub resolved: Option<String>,
    pub is_literal: bool,
}

/// True when `text` contains a `${` … `}` reference.
pub fn has_reference(text: &str) -> bool {
    text.find("${").is_some_and(|start| text[start + 2..].contains('}'))
}

/// Substitutes references from `env`. Any reference that cannot be
/// resolved leaves `resolved` absent; the raw text stays authoritative.
pub fn interpolate(raw: &str, env: &HostEnv) -> Interpolated {
    if !has_reference(raw) {
        return Interpolated { resolved: Some(raw.to_string()), is_literal: true };
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    let mut complete = true;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find('}') else {
            out.push_str(&rest[start..]);
            rest = "";
            break;
        };
        match resolve(&after[..end], env) {
            Some(v) => out.push_str(&v),
            None => complete = false,
        }
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Interpolated { resolved: complete.then_some(out), is_literal: false }
}

fn resolve(inner: &str, env: &HostEnv) -> Option<String> {
    match inner.split_once(":-") {
        Some((name, default)) if is_name(name) => Some(
            env.get(name)
                .filter(|v| !v.is_empty())
                .cloned()
                .unwrap_or_else(|| default.to_string()),
        ),
        Some(_) => None,
        None if is_name(inner) => env.get(inner).cloned(),
        None => None,
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Removes every `${…}` reference, leaving only literal text.
pub fn strip_references(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        match rest[start..].find('}') {
            Some(end) => {
                out.push(' ');
                rest = &rest[start + end + 1..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env(pairs: &[(&str, &str)]) -> HostEnv {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn literal_resolves_to_itself() {
        let i = interpolate("couchdb0:5984", &HostEnv::new());
        assert!(i.is_literal);
        assert_eq!(i.resolved.as_deref(), Some("couchdb0:5984"));
    }

    #[test]
    fn unresolved_reference_stays_symbolic() {
        let i = interpolate("./${PRIVATE_KEY_ORG1}", &HostEnv::new());
        assert!(!i.is_literal);
        assert_eq!(i.resolved, None);
    }

    #[test]
    fn resolved_reference() {
        let i = interpolate("./${KEY}_sk", &env(&[("KEY", "abc")]));
        assert_eq!(i.resolved.as_deref(), Some("./abc_sk"));
    }

    #[test]
    fn default_applies_when_unset_or_empty() {
        assert_eq!(interpolate("${TAG:-latest}", &HostEnv::new()).resolved.as_deref(), Some("latest"));
        assert_eq!(interpolate("${TAG:-latest}", &env(&[("TAG", "")])).resolved.as_deref(), Some("latest"));
        assert_eq!(interpolate("${TAG:-latest}", &env(&[("TAG", "1.4")])).resolved.as_deref(), Some("1.4"));
    }

    #[test]
    fn empty_variable_resolves_to_empty() {
        assert_eq!(interpolate("${PW}", &env(&[("PW", "")])).resolved.as_deref(), Some(""));
    }

    #[test]
    fn bare_dollar_is_literal() {
        let i = interpolate("fabric-peer:$IMAGE_TAG", &HostEnv::new());
        assert!(i.is_literal);
    }

    #[test]
    fn strip_leaves_literal_parts() {
        assert_eq!(strip_references("sh ./${K}_x"), "sh ./ _x");
    }

    proptest! {
        #[test]
        fn interpolating_a_literal_is_identity(s in "[^$]{0,40}") {
            let i = interpolate(&s, &HostEnv::new());
            prop_assert!(i.is_literal);
            prop_assert_eq!(i.resolved, Some(s));
        }

        #[test]
        fn resolved_output_is_idempotent(name in "[A-Z_]{1,8}", value in "[a-z0-9./]{0,10}") {
            let env = env(&[(&name, &value)]);
            let once = interpolate(&format!("x${{{name}}}y"), &env).resolved.unwrap();
            let twice = interpolate(&once, &env).resolved.unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
