//! Flat key/value settings merged from a config file and command-line flags.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// One recognised key.
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    /// May be given more than once (values accumulate).
    pub multi: bool,
}

const fn key(name: &'static str, help: &'static str) -> Key {
    Key { name, help, multi: false }
}

const fn multi(name: &'static str, help: &'static str) -> Key {
    Key { name, help, multi: true }
}

pub const MODEL_KEYS: &[Key] = &[
    key("model", "builtin model: ishigami, gfunction, linear, product, constant"),
    multi("param", "builtin parameter as name=v1,v2,... (repeatable)"),
    key("model-cmd", "external model command line; speaks the p,n CSV protocol"),
    key("p", "number of inputs (required with --model-cmd)"),
    key("data", "given-data CSV: input columns then the response"),
    key("space", "input space JSON file"),
    key("seed", "root seed (default 0)"),
    key("out", "output directory (default $GSA_OUT_DIR or gsa-out)"),
];

pub const RUN_KEYS: &[Key] = &[
    key("method", "sobol | fast | morris | shapley | delta | ale | dgsm | dsd"),
    key("n", "sample size: base samples (sobol), points per curve (fast), draws (delta, ale, dgsm)"),
    key("resamples", "bootstrap resamples for sobol confidence intervals (default 500)"),
    key("bins", "bins for main-effect (sobol) or ALE curves"),
    key("m", "FAST interference order (default 4)"),
    key("r", "Morris trajectories (default 10)"),
    key("levels", "Morris grid levels k (default 4)"),
    key("steps", "Morris step in grid units, delta = steps/(k-1) (default k/2)"),
    key("n-perm", "Shapley permutations (default 300)"),
    key("n-outer", "Shapley outer samples per cost (default 100)"),
    key("n-inner", "Shapley inner samples per cost (default 3)"),
    key("n-var", "Shapley draws for the total variance (default 10000)"),
    key("shapley-mode", "auto | permutation | exact"),
    key("normalized", "report Shapley effects as variance shares (default true)"),
    key("partitions", "delta conditioning classes (default chosen from n)"),
    key("input", "1-based input for curve output (delta, ale); ale defaults to all"),
    key("slices", "conditional density slices for delta curves (default 4)"),
    key("fd-step", "DGSM finite-difference step in unit-cube coordinates (default 1e-4)"),
    key("fake", "DSD fake factors (default 2)"),
    key("alpha", "DSD main-effect significance level (default 0.001)"),
    key("alpha-even", "DSD second-order significance level (default 0.01)"),
];

pub const CONVERGE_KEYS: &[Key] = &[
    key("methods", "comma-separated: sobol, fast, delta, shapley"),
    key("n-grid", "comma-separated strictly increasing sizes"),
    key("replicates", "replicates per size (default 20)"),
    key("metric", "sum-abs-rounded | rmse (default sum-abs-rounded)"),
    key("reference", "reference CSV with columns input and S, ST, delta or Sh"),
];

pub struct Settings {
    values: BTreeMap<String, Vec<String>>,
    used: RefCell<BTreeSet<String>>,
}

impl Settings {
    pub fn new(values: BTreeMap<String, Vec<String>>) -> Self {
        Settings { values, used: RefCell::new(BTreeSet::new()) }
    }

    /// Config file values overlaid with flags; a flag replaces every value of its key.
    pub fn merge(file: BTreeMap<String, Vec<String>>, flags: BTreeMap<String, Vec<String>>) -> Self {
        let mut values = file;
        values.extend(flags);
        Settings::new(values)
    }

    pub fn values(&self) -> &BTreeMap<String, Vec<String>> {
        &self.values
    }

    pub fn all(&self, key: &str) -> &[String] {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn str(&self, key: &str) -> CliResult<Option<&str>> {
        match self.all(key) {
            [] => Ok(None),
            [v] => Ok(Some(v.as_str())),
            _ => Err(CliError::usage(format!("`{key}` given more than once"))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.str(key)? {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("cannot parse `{s}` for `{key}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.str(key)? {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| CliError::usage(format!("cannot parse `{v}` in `{key}`"))))
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fail on keys that were set but never read by the chosen method.
    pub fn finish(&self, context: &str) -> CliResult<()> {
        let used = self.used.borrow();
        let unused: Vec<&str> = self.values.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(CliError::usage(format!("setting(s) {} do not apply to {context}", unused.join(", "))))
        }
    }
}

/// Parse `key = value` lines; `#` starts a comment, repeated keys accumulate.
pub fn parse_config(text: &str, known: &[&[Key]]) -> CliResult<BTreeMap<String, Vec<String>>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", no + 1)))?;
        let k = k.trim().trim_start_matches("--");
        if !known.iter().flat_map(|ks| ks.iter()).any(|key| key.name == k) {
            return Err(CliError::usage(format!("config line {}: unknown key `{k}`", no + 1)));
        }
        out.entry(k.to_string()).or_default().push(v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path, known: &[&[Key]]) -> CliResult<BTreeMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, known)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_and_repeats_accumulate() {
        let file = parse_config("n = 10\nparam = a=1\nparam = b=2 # note\n\n", &[MODEL_KEYS, RUN_KEYS]).unwrap();
        assert_eq!(file["param"], vec!["a=1", "b=2"]);
        let flags = BTreeMap::from([("n".to_string(), vec!["20".to_string()])]);
        let s = Settings::merge(file, flags);
        assert_eq!(s.get::<usize>("n").unwrap(), Some(20));
        assert!(s.finish("test").is_err());
        s.all("param");
        assert!(s.finish("test").is_ok());
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(parse_config("bogus = 1", &[RUN_KEYS]).is_err());
        assert!(parse_config("just text", &[RUN_KEYS]).is_err());
    }
}
