//! Minimal flag parser: `--name value` pairs plus boolean switches.

use std::collections::BTreeMap;

#[derive(Debug, Default)]
pub struct Args {
    values: BTreeMap<String, Vec<String>>,
    switches: Vec<String>,
}

impl Args {
    /// Parses flags; `switch_names` take no value.
    pub fn parse(argv: &[String], switch_names: &[&str]) -> Result<Self, String> {
        let mut args = Args::default();
        let mut it = argv.iter();
        while let Some(token) = it.next() {
            let Some(name) = token.strip_prefix("--") else {
                return Err(format!("unexpected argument {token:?}"));
            };
            if switch_names.contains(&name) {
                args.switches.push(name.to_string());
                continue;
            }
            let value = it
                .next()
                .ok_or_else(|| format!("--{name} wants a value"))?;
            args.values
                .entry(name.to_string())
                .or_default()
                .push(value.clone());
        }
        Ok(args)
    }

    pub fn required(&self, name: &str) -> Result<&str, String> {
        self.get(name)
            .ok_or_else(|| format!("--{name} is required"))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values
            .get(name)
            .and_then(|v| v.last())
            .map(String::as_str)
    }

    pub fn get_all(&self, name: &str) -> &[String] {
        self.values.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn switch(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }

    pub fn f64(&self, name: &str, default: f64) -> Result<f64, String> {
        match self.get(name) {
            Some(raw) => raw
                .parse()
                .map_err(|_| format!("--{name}: bad number {raw:?}")),
            None => Ok(default),
        }
    }
}
