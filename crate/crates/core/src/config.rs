//! Run configuration: a flat `key = value` text format with optional
//! `[section]` blocks for subcommand-specific options, full defaulting and
//! validation, and a stable hash that stamps every artifact.
//!
//! ```text
//! # target run
//! potential = "quartic"
//! eta = 0.05
//! delta = 0.05
//!
//! [oracle]
//! eps = "0.2,0.1,0.05"
//! ```
//!
//! Values are quoted strings, numbers, or `true`/`false`; newlines are not
//! significant, so `potential="quartic" eta=0.1` on one line parses too.

use crate::dynamics::Integrator;
use crate::potential::Potential;
use crate::schedule::PlannerConstants;
use crate::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Str(String),
    Bool(bool),
}

impl Value {
    fn as_num(&self, key: &str) -> Result<f64> {
        match self {
            Value::Num(v) => Ok(*v),
            _ => Err(Error::Config(format!("key {key:?} expects a number"))),
        }
    }

    fn as_str(&self, key: &str) -> Result<&str> {
        match self {
            Value::Str(s) => Ok(s),
            _ => Err(Error::Config(format!("key {key:?} expects a string"))),
        }
    }

    fn as_bool(&self, key: &str) -> Result<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            _ => Err(Error::Config(format!("key {key:?} expects true/false"))),
        }
    }
}

/// Fully-defaulted, validated run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub potential_id: String,
    pub potential_params: BTreeMap<String, f64>,
    pub eta: f64,
    pub eta1: f64,
    pub delta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub nu: f64,
    pub constants: PlannerConstants,
    pub dt: f64,
    pub integrator: Integrator,
    pub guard_radius: f64,
    pub budget_cap: u128,
    pub n_override: Option<usize>,
    pub m_override: Option<usize>,
    pub t_override: Option<f64>,
    /// Acknowledges overrides that violate the planner inequalities.
    pub allow_unsafe: bool,
    pub seed: u64,
    pub init: String,
    pub out_dir: Option<String>,
    /// `[oracle]` section: temperatures to build fixtures for.
    pub oracle_eps: Vec<f64>,
    /// `[verify]` section.
    pub verify_runs: usize,
    pub fixture_dir: String,
    /// `[bench]` section.
    pub bench_etas: Vec<f64>,
    pub bench_seeds: usize,
    /// `[calibrate]` section.
    pub calibrate_runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential_id: "quartic".into(),
            potential_params: BTreeMap::new(),
            eta: 0.1,
            eta1: 1.0,
            delta: 0.1,
            theta: 0.1,
            alpha: 1.0,
            nu: 1.0,
            constants: PlannerConstants::default(),
            dt: 0.01,
            integrator: Integrator::Ula,
            guard_radius: 1e6,
            budget_cap: 10_000_000_000,
            n_override: None,
            m_override: None,
            t_override: None,
            allow_unsafe: false,
            seed: 1,
            init: "uniform_cube".into(),
            out_dir: None,
            oracle_eps: vec![0.2, 0.1, 0.05],
            verify_runs: 50,
            fixture_dir: "fixtures".into(),
            bench_etas: vec![0.25, 0.125, 0.0625, 0.03125],
            bench_seeds: 20,
            calibrate_runs: 20,
        }
    }
}

const POTENTIAL_PARAM_KEYS: &[&str] = &["tilt", "omega", "sep", "sigma", "weight", "dim"];

/// Parses the documented key-value format into a validated config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let sections = tokenize(text)?;
    let mut config = RunConfig::default();

    for (section, entries) in &sections {
        match section.as_str() {
            "" => apply_root(&mut config, entries)?,
            "sample" => apply_root(&mut config, entries)?,
            "oracle" => {
                for (key, value) in entries {
                    match key.as_str() {
                        "eps" => config.oracle_eps = parse_list(value.as_str(key)?, key)?,
                        _ => return Err(unknown_key(section, key)),
                    }
                }
            }
            "verify" => {
                for (key, value) in entries {
                    match key.as_str() {
                        "n_runs" => config.verify_runs = value.as_num(key)? as usize,
                        "fixtures" => config.fixture_dir = value.as_str(key)?.to_string(),
                        _ => return Err(unknown_key(section, key)),
                    }
                }
            }
            "bench" => {
                for (key, value) in entries {
                    match key.as_str() {
                        "etas" => config.bench_etas = parse_list(value.as_str(key)?, key)?,
                        "seeds" => config.bench_seeds = value.as_num(key)? as usize,
                        _ => return Err(unknown_key(section, key)),
                    }
                }
            }
            "calibrate" => {
                for (key, value) in entries {
                    match key.as_str() {
                        "probe_runs" => config.calibrate_runs = value.as_num(key)? as usize,
                        _ => return Err(unknown_key(section, key)),
                    }
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown section [{other}]; valid: sample, oracle, verify, bench, calibrate"
                )))
            }
        }
    }

    config.validate()?;
    Ok(config)
}

fn unknown_key(section: &str, key: &str) -> Error {
    if section.is_empty() {
        Error::Config(format!("unknown key {key:?}"))
    } else {
        Error::Config(format!("unknown key {key:?} in section [{section}]"))
    }
}

fn parse_list(text: &str, key: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("key {key:?}: {part:?} is not a number")))
        })
        .collect()
}

fn apply_root(config: &mut RunConfig, entries: &[(String, Value)]) -> Result<()> {
    for (key, value) in entries {
        match key.as_str() {
            "potential" => config.potential_id = value.as_str(key)?.to_string(),
            "eta" => config.eta = value.as_num(key)?,
            "eta1" => config.eta1 = value.as_num(key)?,
            "delta" => config.delta = value.as_num(key)?,
            "theta" => config.theta = value.as_num(key)?,
            "alpha" => config.alpha = value.as_num(key)?,
            "nu" => config.nu = value.as_num(key)?,
            "c_n" => config.constants.c_n = value.as_num(key)?,
            "c_t" => config.constants.c_t = value.as_num(key)?,
            "c_tem" => config.constants.c_tem = value.as_num(key)?,
            "dt" => config.dt = value.as_num(key)?,
            "integrator" => {
                config.integrator = match value.as_str(key)? {
                    "ula" => Integrator::Ula,
                    "mala" => Integrator::Mala,
                    other => {
                        return Err(Error::Config(format!(
                            "integrator must be \"ula\" or \"mala\", got {other:?}"
                        )))
                    }
                }
            }
            "guard_radius" => config.guard_radius = value.as_num(key)?,
            "budget_cap" => config.budget_cap = value.as_num(key)? as u128,
            "n" => config.n_override = Some(value.as_num(key)? as usize),
            "m" => config.m_override = Some(value.as_num(key)? as usize),
            "t" => config.t_override = Some(value.as_num(key)?),
            "unsafe" => config.allow_unsafe = value.as_bool(key)?,
            "seed" => config.seed = value.as_num(key)? as u64,
            "init" => config.init = value.as_str(key)?.to_string(),
            "out_dir" => config.out_dir = Some(value.as_str(key)?.to_string()),
            k if POTENTIAL_PARAM_KEYS.contains(&k) => {
                config
                    .potential_params
                    .insert(k.to_string(), value.as_num(key)?);
            }
            _ => return Err(unknown_key("", key)),
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        // constructing the potential validates id and params
        let _ = self.potential()?;
        for (name, v, lo, hi) in [
            ("delta", self.delta, 0.0, 1.0),
            ("theta", self.theta, 0.0, 1.0),
        ] {
            if !(v > lo && v < hi) {
                return Err(Error::Config(format!("{name} = {v} must be in (0,1)")));
            }
        }
        if !(self.alpha > 0.0) || !(self.nu > 0.0) {
            return Err(Error::Config("alpha and nu must be positive".into()));
        }
        if !(self.eta > 0.0) || self.eta >= self.eta1 {
            return Err(Error::Config(format!(
                "eta = {} must lie in (0, eta1 = {})",
                self.eta, self.eta1
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        match self.init.as_str() {
            "uniform_cube" | "delta_origin" => {}
            other => {
                return Err(Error::Config(format!(
                    "init must be \"uniform_cube\" or \"delta_origin\", got {other:?}"
                )))
            }
        }
        self.check_overrides()?;
        Ok(())
    }

    /// Overrides must satisfy the planner inequalities unless explicitly
    /// acknowledged with `unsafe = true`.
    fn check_overrides(&self) -> Result<()> {
        if self.allow_unsafe {
            return Ok(());
        }
        if self.n_override.is_none() && self.m_override.is_none() && self.t_override.is_none() {
            return Ok(());
        }
        let m_min = (1.0 / (self.nu * self.eta)).ceil();
        let m = self.m_override.map(|m| m as f64).unwrap_or(m_min);
        if m < m_min {
            return Err(Error::Config(format!(
                "override m = {m} violates m >= {m_min}; set unsafe = true to acknowledge"
            )));
        }
        if let Some(n) = self.n_override {
            let n_min =
                self.constants.c_n * m * m / (self.delta * self.delta) * (m / self.theta).ln();
            if (n as f64) < n_min {
                return Err(Error::Config(format!(
                    "override n = {n} violates n >= {n_min:.0}; set unsafe = true to acknowledge"
                )));
            }
        }
        if let Some(t) = self.t_override {
            // Conservative check with barrier ratio 1 (the landscape is not
            // known at parse time; run commands re-check with the real γ̂_r).
            let n = self.n_override.map(|n| n as f64).unwrap_or(1.0);
            let t_min = self.constants.c_t
                * ((m * n / self.theta).powf(1.0 + self.alpha)
                    * (n.ln().max(0.0) + (m / self.theta).ln())
                    + (1.0 / self.delta).ln()
                    + 1.0 / self.eta);
            if t < t_min {
                return Err(Error::Config(format!(
                    "override t = {t} violates t >= {t_min:.3e}; set unsafe = true to acknowledge"
                )));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::from_id(&self.potential_id, &self.potential_params)
    }

    /// Stable hash of the full configuration (stamped into artifacts).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(canonical.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Lexes the flat format into `(section, entries)` groups. Section order
/// is preserved; the root section is keyed "".
fn tokenize(text: &str) -> Result<Vec<(String, Vec<(String, Value)>)>> {
    let mut sections: Vec<(String, Vec<(String, Value)>)> = vec![(String::new(), Vec::new())];
    let mut chars = text.chars().peekable();

    loop {
        skip_whitespace_and_comments(&mut chars);
        let Some(&c) = chars.peek() else { break };
        if c == '[' {
            chars.next();
            let mut name = String::new();
            for c in chars.by_ref() {
                if c == ']' {
                    break;
                }
                name.push(c);
            }
            sections.push((name.trim().to_string(), Vec::new()));
            continue;
        }
        // key
        let mut key = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_alphanumeric() || c == '_' {
                key.push(c);
                chars.next();
            } else {
                break;
            }
        }
        if key.is_empty() {
            return Err(Error::Config(format!("unexpected character {c:?}")));
        }
        skip_whitespace_and_comments(&mut chars);
        if chars.next() != Some('=') {
            return Err(Error::Config(format!("expected '=' after key {key:?}")));
        }
        skip_whitespace_and_comments(&mut chars);
        let value = lex_value(&mut chars, &key)?;
        sections.last_mut().unwrap().1.push((key, value));
    }
    Ok(sections)
}

fn skip_whitespace_and_comments(chars: &mut std::iter::Peekable<std::str::Chars>) {
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.peek() == Some(&'#') {
            for c in chars.by_ref() {
                if c == '\n' {
                    break;
                }
            }
        } else {
            return;
        }
    }
}

fn lex_value(chars: &mut std::iter::Peekable<std::str::Chars>, key: &str) -> Result<Value> {
    match chars.peek() {
        Some('"') => {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(c) => s.push(c),
                    None => {
                        return Err(Error::Config(format!(
                            "unterminated string for key {key:?}"
                        )))
                    }
                }
            }
            Ok(Value::Str(s))
        }
        Some(_) => {
            let mut token = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '#' || c == '[' {
                    break;
                }
                token.push(c);
                chars.next();
            }
            match token.as_str() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                t => t
                    .parse::<f64>()
                    .map(Value::Num)
                    .map_err(|_| Error::Config(format!("key {key:?}: cannot parse {t:?}"))),
            }
        }
        None => Err(Error::Config(format!("missing value for key {key:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_applies_documented_defaults() {
        let cfg = parse_config("potential=\"quartic\" eta=0.1").unwrap();
        assert_eq!(cfg.potential_id, "quartic");
        assert_eq!(cfg.eta, 0.1);
        assert_eq!(cfg.eta1, 1.0);
        assert_eq!(cfg.delta, 0.1);
        assert_eq!(cfg.theta, 0.1);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.nu, 1.0);
        assert_eq!(cfg.dt, 0.01);
    }

    #[test]
    fn sections_and_comments_parse() {
        let text = r#"
            # a run
            potential = "triple_well"
            eta = 0.05
            seed = 9

            [oracle]
            eps = "0.2, 0.1"

            [bench]
            etas = "0.25,0.125"
            seeds = 10
        "#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.potential_id, "triple_well");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.oracle_eps, vec![0.2, 0.1]);
        assert_eq!(cfg.bench_etas, vec![0.25, 0.125]);
        assert_eq!(cfg.bench_seeds, 10);
    }

    #[test]
    fn eta_out_of_range_is_rejected() {
        let err = parse_config("potential=\"quartic\" eta=1.5").unwrap_err();
        assert!(err.to_string().contains("eta"));
    }

    #[test]
    fn unknown_potential_names_valid_ids() {
        let err = parse_config("potential=\"unknown\" eta=0.1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown"), "{msg}");
        assert!(msg.contains("quartic"), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config("potential=\"quartic\" eta=0.1 bogus=3").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn potential_params_flow_through() {
        let cfg = parse_config("potential=\"quartic\" tilt=0.1 eta=0.1").unwrap();
        let pot = cfg.potential().unwrap();
        assert!(pot.minima()[1].energy > 0.1);
    }

    #[test]
    fn unsafe_overrides_are_gated() {
        // m below ⌈1/(νη)⌉ = 10 fails without the acknowledgment…
        let err = parse_config("potential=\"quartic\" eta=0.1 m=3").unwrap_err();
        assert!(err.to_string().contains("unsafe"));
        // …and passes with it.
        let cfg = parse_config("potential=\"quartic\" eta=0.1 m=3 unsafe=true").unwrap();
        assert_eq!(cfg.m_override, Some(3));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = parse_config("potential=\"quartic\" eta=0.1").unwrap();
        let b = parse_config("potential=\"quartic\" eta=0.1").unwrap();
        let c = parse_config("potential=\"quartic\" eta=0.2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
