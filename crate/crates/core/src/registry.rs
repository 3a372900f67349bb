//! Name-indexed registries for interchangeable strategies.
//!
//! Every family of swappable algorithms in the crate (wind models, depth
//! renderers, GP kernels, acquisition functions, stop rules, clustering
//! metrics) is exposed as a trait object. A [`Registry`] maps a config or
//! command-line name onto a constructor for one of those objects.

use crate::error::{Error, Result};

type Factory<T> = fn() -> Box<T>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Factory<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Adds a named constructor. A later registration under the same name
    /// replaces the earlier one.
    pub fn register(&mut self, name: &'static str, factory: Factory<T>) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = factory;
        } else {
            self.entries.push((name, factory));
        }
        self
    }

    pub fn with(mut self, name: &'static str, factory: Factory<T>) -> Self {
        self.register(name, factory);
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> &'static str;
    }
    struct Hello;
    struct Hi;
    impl Greeter for Hello {
        fn greet(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Hi {
        fn greet(&self) -> &'static str {
            "hi"
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("a", || Box::new(Hello));
        assert_eq!(reg.create("a").unwrap().greet(), "hello");
        reg.register("a", || Box::new(Hi));
        assert_eq!(reg.create("a").unwrap().greet(), "hi");
        assert_eq!(reg.names(), vec!["a"]);
    }

    #[test]
    fn unknown_name_lists_available() {
        let reg: Registry<dyn Greeter> = Registry::new("greeter").with("a", || Box::new(Hello));
        let err = reg.create("b").err().unwrap().to_string();
        assert!(err.contains("greeter") && err.contains("`b`") && err.contains("a"));
    }
}
