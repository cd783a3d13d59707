//! Experiment configuration: one JSON document plus dotted-path overrides.

use std::path::{Path, PathBuf};

use precqaoa::problems::ProblemKind;
use precqaoa::CorrelationWeight;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bad override --{path}: {reason}")]
    Override { path: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PModeKind {
    Sweep,
    #[default]
    Optimal,
}

/// Layer selection: every `p` in `p_min..=p_max`, or the problem's optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PMode {
    #[serde(default)]
    pub kind: PModeKind,
    #[serde(default = "one")]
    pub p_min: usize,
    #[serde(default = "one")]
    pub p_max: usize,
}

impl Default for PMode {
    fn default() -> Self {
        Self {
            kind: PModeKind::Optimal,
            p_min: 1,
            p_max: 1,
        }
    }
}

/// How a noisy cell's mean is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Sample `realizations` multiplier sets.
    #[default]
    MonteCarlo,
    /// Average the Gaussian channel analytically; no sampling error.
    Exact,
}

fn one() -> usize {
    1
}

/// Cartesian grid of stochastic widths `σ = √Γ` and coherent offsets `η`.
/// Each pair applies the same `(η, σ²)` to cost and mixer sub-blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseGrid {
    #[serde(default = "zero_list")]
    pub sigma: Vec<f64>,
    #[serde(default = "zero_list")]
    pub eta: Vec<f64>,
}

impl Default for NoiseGrid {
    fn default() -> Self {
        Self {
            sigma: vec![0.0],
            eta: vec![0.0],
        }
    }
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitizationConfig {
    pub n_bits_gamma: Vec<usize>,
    /// Paired element-wise with `n_bits_gamma`; defaults to the same list.
    #[serde(default)]
    pub n_bits_beta: Option<Vec<usize>>,
}

impl DigitizationConfig {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let beta = self.n_bits_beta.as_ref().unwrap_or(&self.n_bits_gamma);
        self.n_bits_gamma.iter().copied().zip(beta.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub p_mode: PMode,
    #[serde(default)]
    pub noise: NoiseGrid,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Applies to `mean_HC` in `sweep`; distances are always sampled.
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub digitization: Option<DigitizationConfig>,
    /// Also sample `‖U − U₀‖` per cell.
    #[serde(default)]
    pub unitary_distance: bool,
    #[serde(default)]
    pub weight: CorrelationWeight,
    /// Thread cap; `0` uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn default_realizations() -> usize {
    1000
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// Top-level field names, used to recognize override flags.
pub const FIELDS: &[&str] = &[
    "problem",
    "n_list",
    "p_mode",
    "noise",
    "realizations",
    "averaging",
    "base_seed",
    "outputs",
    "digitization",
    "unitary_distance",
    "weight",
    "workers",
];

impl ExperimentConfig {
    pub fn from_json(text: &str, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut doc: Value = serde_json::from_str(text)?;
        for (path, value) in overrides {
            apply_override(&mut doc, path, value)?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.n_list.is_empty() {
            return bad("n_list is empty");
        }
        if self.n_list.contains(&0) {
            return bad("n_list entries must be positive");
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1");
        }
        if self.noise.sigma.is_empty() || self.noise.eta.is_empty() {
            return bad("noise grid is empty");
        }
        if self.noise.sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("noise.sigma entries must be finite and nonnegative");
        }
        if self.noise.eta.iter().any(|e| !e.is_finite()) {
            return bad("noise.eta entries must be finite");
        }
        if self.p_mode.kind == PModeKind::Sweep {
            if self.p_mode.p_min == 0 || self.p_mode.p_min > self.p_mode.p_max {
                return bad("p_mode needs 1 ≤ p_min ≤ p_max");
            }
            if self.problem == ProblemKind::IsingRing {
                return bad("ising-ring schedules exist only at the optimum; use p_mode.kind = optimal");
            }
        }
        if let Some(d) = &self.digitization {
            if d.n_bits_gamma.is_empty() {
                return bad("digitization.n_bits_gamma is empty");
            }
            if let Some(b) = &d.n_bits_beta {
                if b.len() != d.n_bits_gamma.len() {
                    return bad("digitization.n_bits_beta must match n_bits_gamma in length");
                }
            }
            if d.pairs().iter().any(|&(g, b)| g == 0 || b == 0 || g > 52 || b > 52) {
                return bad("digitization bit counts must lie in 1..=52");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }

    pub fn output_path(&self, file: &str) -> PathBuf {
        self.outputs.join(file)
    }
}

/// Sets `path` (dot separated) in `doc` to `raw`.
///
/// Arrays accept a comma list; scalars are parsed as JSON when possible and
/// kept as strings otherwise. Missing or null objects along the path are
/// created.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> Result<(), ConfigError> {
    let err = |reason: &str| ConfigError::Override {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err("empty path segment"));
    }
    if !FIELDS.contains(&parts[0]) {
        return Err(err("unknown field"));
    }
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur.as_object_mut().ok_or_else(|| err("path crosses a non-object"))?;
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    if cur.is_null() {
        *cur = Value::Object(Default::default());
    }
    let obj = cur.as_object_mut().ok_or_else(|| err("path crosses a non-object"))?;
    let last = parts[parts.len() - 1];
    let existing = obj.get(last);
    let wants_list = matches!(existing, Some(Value::Array(_))) || is_list_field(path);
    let value = if wants_list && !raw.trim_start().starts_with('[') {
        Value::Array(raw.split(',').map(|s| scalar(s.trim())).collect())
    } else {
        scalar(raw)
    };
    obj.insert(last.to_string(), value);
    Ok(())
}

fn is_list_field(path: &str) -> bool {
    matches!(
        path,
        "n_list" | "noise.sigma" | "noise.eta" | "digitization.n_bits_gamma" | "digitization.n_bits_beta"
    )
}

fn scalar(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

/// Splits `--field.path value` and `--field.path=value` pairs whose first
/// segment is a config field out of `args`; the rest is returned untouched.
pub fn extract_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        let head = name.split('.').next().unwrap_or("");
        if !FIELDS.contains(&head) {
            rest.push(a);
            continue;
        }
        match inline.or_else(|| it.next()) {
            Some(v) => overrides.push((name, v)),
            None => rest.push(a),
        }
    }
    (rest, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"problem": "grover", "n_list": [4, 6]}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(BASE, &[]).unwrap();
        assert_eq!(c.realizations, 1000);
        assert_eq!(c.noise, NoiseGrid::default());
        assert_eq!(c.p_mode.kind, PModeKind::Optimal);
    }

    #[test]
    fn overrides_set_nested_lists_and_scalars() {
        let ov = vec![
            ("noise.sigma".to_string(), "0.05,0.1".to_string()),
            ("realizations".to_string(), "7".to_string()),
            ("digitization.n_bits_gamma".to_string(), "3".to_string()),
            ("p_mode.kind".to_string(), "sweep".to_string()),
            ("p_mode.p_max".to_string(), "4".to_string()),
        ];
        let c = ExperimentConfig::from_json(BASE, &ov).unwrap();
        assert_eq!(c.noise.sigma, vec![0.05, 0.1]);
        assert_eq!(c.realizations, 7);
        assert_eq!(c.digitization.unwrap().n_bits_gamma, vec![3]);
        assert_eq!(c.p_mode.p_max, 4);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for (k, v) in [("realizations", "0"), ("n_list", "[]"), ("noise.sigma", "-1"), ("bogus", "1")] {
            assert!(ExperimentConfig::from_json(BASE, &[(k.into(), v.into())]).is_err(), "{k}");
        }
        assert!(ExperimentConfig::from_json(r#"{"problem": "ising-ring", "n_list": [4], "p_mode": {"kind": "sweep", "p_max": 3}}"#, &[]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_json(BASE, &[]).unwrap();
        let b = ExperimentConfig::from_json(BASE, &[("base_seed".into(), "9".into())]).unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn extraction_leaves_cli_flags() {
        let args = ["--config", "c.json", "--noise.sigma", "0.1", "--realizations=5", "--output", "x.csv"]
            .map(String::from)
            .to_vec();
        let (rest, ov) = extract_overrides(args);
        assert_eq!(rest, ["--config", "c.json", "--output", "x.csv"]);
        assert_eq!(ov, [("noise.sigma".to_string(), "0.1".to_string()), ("realizations".to_string(), "5".to_string())]);
    }
}
