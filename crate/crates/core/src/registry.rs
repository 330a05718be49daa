//! Name-keyed registries of interchangeable strategies.
//!
//! Each strategy family (phantom shapes, field sources, spanning trees,
//! preconditioners, Poisson assembly paths) exposes a global registry of
//! factories. Callers select a variant at runtime by name, typically from a
//! CLI flag or config field.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub struct Registry<F> {
    family: &'static str,
    entries: BTreeMap<&'static str, RegistryEntry<F>>,
}

pub struct RegistryEntry<F> {
    pub description: &'static str,
    pub factory: F,
}

impl<F> Registry<F> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, description: &'static str, factory: F) {
        self.entries.insert(
            name,
            RegistryEntry {
                description,
                factory,
            },
        );
    }

    pub fn with(mut self, name: &'static str, description: &'static str, factory: F) -> Self {
        self.register(name, description, factory);
        self
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries
            .get(name)
            .map(|e| &e.factory)
            .ok_or_else(|| Error::UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, v.description))
    }
}
