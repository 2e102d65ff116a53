use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Member,
    Admin,
    Peer,
    Client,
    Unknown,
}

impl Role {
    pub fn from_text(text: &str) -> Self {
        match text.to_ascii_lowercase().as_str() {
            "member" => Role::Member,
            "admin" => Role::Admin,
            "peer" => Role::Peer,
            "client" => Role::Client,
            _ => Role::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Member => "member",
            Role::Admin => "admin",
            Role::Peer => "peer",
            Role::Client => "client",
            Role::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Principal {
    pub msp_id: String,
    pub role: Role,
}

impl Principal {
    pub fn new(msp_id: impl Into<String>, role: Role) -> Self {
        Self { msp_id: msp_id.into(), role }
    }
}

impl fmt::Display for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}.{}'", self.msp_id, self.role.as_str())
    }
}

/// An endorsement policy expression.
///
/// `And` behaves as `OutOf(n, …)` and `Or` as `OutOf(1, …)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyAst {
    Signed(Principal),
    And(Vec<PolicyAst>),
    Or(Vec<PolicyAst>),
    OutOf(usize, Vec<PolicyAst>),
}

impl PolicyAst {
    pub fn signed(msp_id: &str, role: Role) -> Self {
        PolicyAst::Signed(Principal::new(msp_id, role))
    }

    /// Threshold and children, with `And`/`Or` expressed as `OutOf`.
    pub fn as_threshold(&self) -> Option<(usize, &[PolicyAst])> {
        match self {
            PolicyAst::Signed(_) => None,
            PolicyAst::And(c) => Some((c.len(), c)),
            PolicyAst::Or(c) => Some((1, c)),
            PolicyAst::OutOf(k, c) => Some((*k, c)),
        }
    }

    /// Distinct principals, sorted.
    pub fn principals(&self) -> BTreeSet<&Principal> {
        let mut out = BTreeSet::new();
        self.collect_principals(&mut out);
        out
    }

    fn collect_principals<'a>(&'a self, out: &mut BTreeSet<&'a Principal>) {
        match self {
            PolicyAst::Signed(p) => {
                out.insert(p);
            }
            _ => {
                for c in self.as_threshold().unwrap().1 {
                    c.collect_principals(out);
                }
            }
        }
    }

    pub fn msp_ids(&self) -> BTreeSet<&str> {
        self.principals().into_iter().map(|p| p.msp_id.as_str()).collect()
    }

    /// Nesting depth; a lone principal is 0, `AND('A.member','B.member')`
    /// is 1.
    pub fn depth(&self) -> usize {
        match self.as_threshold() {
            None => 0,
            Some((_, children)) => 1 + children.iter().map(PolicyAst::depth).max().unwrap_or(0),
        }
    }

    /// Whether signatures from exactly `present` satisfy the policy.
    pub fn is_satisfied_by(&self, present: &dyn Fn(&Principal) -> bool) -> bool {
        match self.as_threshold() {
            None => match self {
                PolicyAst::Signed(p) => present(p),
                _ => unreachable!(),
            },
            Some((k, children)) => children.iter().filter(|c| c.is_satisfied_by(present)).count() >= k,
        }
    }
}

impl fmt::Display for PolicyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, children: &[PolicyAst]| -> fmt::Result {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            Ok(())
        };
        match self {
            PolicyAst::Signed(p) => write!(f, "{p}"),
            PolicyAst::And(c) => {
                f.write_str("AND(")?;
                list(f, c)?;
                f.write_str(")")
            }
            PolicyAst::Or(c) => {
                f.write_str("OR(")?;
                list(f, c)?;
                f.write_str(")")
            }
            PolicyAst::OutOf(k, c) => {
                write!(f, "OutOf({k}, ")?;
                list(f, c)?;
                f.write_str(")")
            }
        }
    }
}
