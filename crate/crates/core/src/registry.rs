//! Name-keyed constructor registry shared by the pluggable families.

use std::collections::BTreeMap;
use std::fmt;

/// A set of named constructors producing trait objects of type `T`.
///
/// Lookups are case-insensitive; names are stored lower-cased.
pub struct Registry<A, T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, fn(A) -> Box<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{name}` (known: {known})")]
pub struct UnknownName {
    pub kind: &'static str,
    pub name: String,
    pub known: String,
}

impl<A, T: ?Sized> Registry<A, T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `ctor` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &str, ctor: fn(A) -> Box<T>) -> &mut Self {
        self.entries.insert(name.to_ascii_lowercase(), ctor);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(&name.to_ascii_lowercase())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, args: A) -> Result<Box<T>, UnknownName> {
        match self.entries.get(&name.to_ascii_lowercase()) {
            Some(ctor) => Ok(ctor(args)),
            None => Err(UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl<A, T: ?Sized> fmt::Debug for Registry<A, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
