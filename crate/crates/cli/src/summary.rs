use std::fmt;

/// One-line `key=value` record printed on success. Values never contain
/// whitespace; spaces are replaced by `_`.
#[derive(Debug, Default)]
pub struct Summary {
    fields: Vec<(&'static str, String)>,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        Self::default().with("command", command)
    }

    pub fn with(mut self, key: &'static str, value: impl fmt::Display) -> Self {
        let v = value.to_string().replace(char::is_whitespace, "_");
        self.fields.push((key, v));
        self
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_one_line() {
        let s = Summary::new("train").with("epochs", 30).with("out", "a b");
        assert_eq!(s.to_string(), "command=train epochs=30 out=a_b\n");
    }
}
