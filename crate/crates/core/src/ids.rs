//! Developer and project identifiers.
//!
//! Both compare case-insensitively (GitHub login semantics) while keeping
//! the original spelling for display.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("{field} contains whitespace: {value:?}")]
    Whitespace { field: &'static str, value: String },
    #[error("{field} contains '/': {value:?}")]
    Slash { field: &'static str, value: String },
    #[error("expected owner/name, got {0:?}")]
    NotFullName(String),
}

fn check(field: &'static str, value: &str) -> Result<(), IdError> {
    if value.is_empty() {
        return Err(IdError::Empty(field));
    }
    if value.chars().any(char::is_whitespace) {
        return Err(IdError::Whitespace {
            field,
            value: value.to_string(),
        });
    }
    Ok(())
}

/// A developer login.
#[derive(Debug, Clone)]
pub struct DeveloperId {
    login: String,
    key: String,
}

impl DeveloperId {
    pub fn new(login: impl Into<String>) -> Result<Self, IdError> {
        let login = login.into();
        check("developer", &login)?;
        let key = login.to_lowercase();
        Ok(DeveloperId { login, key })
    }

    pub fn login(&self) -> &str {
        &self.login
    }

    /// Lowercased comparison key.
    pub fn key(&self) -> &str {
        &self.key
    }
}

impl PartialEq for DeveloperId {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for DeveloperId {}

impl Hash for DeveloperId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl Ord for DeveloperId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl PartialOrd for DeveloperId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DeveloperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.login)
    }
}

impl std::str::FromStr for DeveloperId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DeveloperId::new(s)
    }
}

/// A repository, identified by `owner/name`.
#[derive(Debug, Clone)]
pub struct ProjectId {
    owner: String,
    name: String,
    key: String,
    owner_len: usize,
}

impl ProjectId {
    pub fn new(owner: impl Into<String>, name: impl Into<String>) -> Result<Self, IdError> {
        let owner = owner.into();
        let name = name.into();
        check("owner", &owner)?;
        check("repo", &name)?;
        for (field, value) in [("owner", &owner), ("repo", &name)] {
            if value.contains('/') {
                return Err(IdError::Slash {
                    field,
                    value: value.clone(),
                });
            }
        }
        let owner_key = owner.to_lowercase();
        let owner_len = owner_key.len();
        let key = format!("{}/{}", owner_key, name.to_lowercase());
        Ok(ProjectId {
            owner,
            name,
            key,
            owner_len,
        })
    }

    /// Parses `owner/name`.
    pub fn parse_full_name(full: &str) -> Result<Self, IdError> {
        match full.split_once('/') {
            Some((owner, name)) => ProjectId::new(owner, name),
            None => Err(IdError::NotFullName(full.to_string())),
        }
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn full_name(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }

    /// Lowercased `owner/name`.
    pub fn key(&self) -> &str {
        &self.key
    }

    /// Lowercased owner.
    pub fn owner_key(&self) -> &str {
        &self.key[..self.owner_len]
    }

    pub fn same_owner(&self, other: &ProjectId) -> bool {
        self.owner_key() == other.owner_key()
    }
}

impl PartialEq for ProjectId {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for ProjectId {}

impl Hash for ProjectId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl Ord for ProjectId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl PartialOrd for ProjectId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

impl std::str::FromStr for ProjectId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProjectId::parse_full_name(s)
    }
}

impl Serialize for DeveloperId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.login())
    }
}

impl Serialize for ProjectId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn developer_equality_ignores_case() {
        let a = DeveloperId::new("Alice").unwrap();
        let b = DeveloperId::new("alice").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.login(), "Alice");
        assert_eq!(a.to_string(), "Alice");
    }

    #[test]
    fn developer_rejects_empty_and_whitespace() {
        assert_eq!(DeveloperId::new(""), Err(IdError::Empty("developer")));
        assert!(matches!(
            DeveloperId::new("al ice"),
            Err(IdError::Whitespace { .. })
        ));
    }

    #[test]
    fn project_full_name_and_owner() {
        let p = ProjectId::new("FengMK2", "Emoji").unwrap();
        let q: ProjectId = "fengmk2/emoji".parse().unwrap();
        let r = ProjectId::new("fengmk2", "parameter").unwrap();
        assert_eq!(p, q);
        assert_eq!(p.full_name(), "FengMK2/Emoji");
        assert_eq!(p.owner_key(), "fengmk2");
        assert!(p.same_owner(&r));
        assert_ne!(p, r);
    }

    #[test]
    fn project_rejects_bad_parts() {
        assert_eq!(ProjectId::new("", "x"), Err(IdError::Empty("owner")));
        assert_eq!(ProjectId::new("x", ""), Err(IdError::Empty("repo")));
        assert!(matches!(
            ProjectId::new("a/b", "c"),
            Err(IdError::Slash { .. })
        ));
        assert!(matches!(
            ProjectId::parse_full_name("nope"),
            Err(IdError::NotFullName(_))
        ));
    }
}
