//! CSV and metadata writers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Bumped whenever a CSV column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;
pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub software_version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub config: Option<ExperimentConfig>,
    pub conventions: BTreeMap<String, String>,
    pub rows: usize,
    pub skipped: usize,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl Metadata {
    pub fn new(subcommand: &str, config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            software_version: SOFTWARE_VERSION.to_string(),
            subcommand: subcommand.to_string(),
            config_hash: config.hash(),
            base_seed: config.base_seed,
            config: Some(config.clone()),
            conventions: conventions(config),
            rows: 0,
            skipped: 0,
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

pub fn conventions(config: &ExperimentConfig) -> BTreeMap<String, String> {
    let mut c = BTreeMap::new();
    let mut put = |k: &str, v: &str| {
        c.insert(k.to_string(), v.to_string());
    };
    put(
        "layer_counting",
        "p counts Grover W-layers; one W applies the cost twice with alternating sign, each followed by a mixer (4 sub-blocks)",
    );
    put(
        "noise_per_sub_block",
        "every sub-block draws its own multiplier, including the two cost applications inside one Grover W-layer",
    );
    put("multiplier", "angle -> angle * (1 + eta + sigma * z), z ~ N(0, 1), Gamma = sigma^2");
    put(
        "coherent_scaling",
        "grover coherent decay fitted as exp(-c (eta p*)^k); ising coherent decay fitted as exp(-c eta^2 p*)",
    );
    put(
        "correlation_weight",
        match config.weight {
            precqaoa::CorrelationWeight::QuasiStatic => "quasi-static: w_s = a_s^2",
            precqaoa::CorrelationWeight::White => "white: w_s = |a_s|",
        },
    );
    put(
        "averaging",
        match config.averaging {
            crate::config::Averaging::MonteCarlo => "mean_HC is a Monte Carlo mean over R realizations",
            crate::config::Averaging::Exact => "mean_HC is the exact channel average; stderr_HC is 0",
        },
    );
    put(
        "digitization_budget",
        "building blocks carry sigma_block = sigma / sqrt(N_bits) per generator kind; eta is unchanged",
    );
    put(
        "seeding",
        "cell seed = splitmix chain of (base_seed, n, p, sigma bits, eta bits); realization i uses splitmix64(splitmix64(cell seed) + i)",
    );
    put("p_star", "grover: first local maximum of noiseless <H_C> over p; ising-ring: p = n/2 with optimized angles");
    c
}

pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("schema mismatch in {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_meta(output: &Path, meta: &Metadata) -> Result<()> {
    write_json(&meta_path(output), meta)
}
