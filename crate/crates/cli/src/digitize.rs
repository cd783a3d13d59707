//! `digitize`: bit-count sweeps of the digitized circuit against the analog
//! one, ideal and noisy.

use precqaoa::noise::ensemble_expectation;
use precqaoa::problems::{digitized_depth_proxy, digitized_schedule};
use precqaoa::qaoa::{evolve, expectation};
use precqaoa::{EnsembleStats, NoiseModel, QaoaInstance, Schedule};
use serde::{Deserialize, Serialize};

use crate::cells::{cell_seed, model_for, noise_cells, size_setup};
use crate::config::{ConfigError, ExperimentConfig};
use crate::sweep::RunOutcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitizationRow {
    pub n: usize,
    pub p: usize,
    pub n_bits_gamma: usize,
    pub n_bits_beta: usize,
    pub sigma: f64,
    pub eta: f64,
    pub sigma_block_gamma: f64,
    pub sigma_block_beta: f64,
    #[serde(rename = "ideal_HC")]
    pub ideal_hc: Option<f64>,
    #[serde(rename = "digitized_ideal_HC")]
    pub digitized_ideal_hc: Option<f64>,
    pub gap: Option<f64>,
    #[serde(rename = "noisy_analog_HC")]
    pub noisy_analog_hc: Option<f64>,
    pub noisy_analog_stderr: Option<f64>,
    #[serde(rename = "noisy_digitized_HC")]
    pub noisy_digitized_hc: Option<f64>,
    pub noisy_digitized_stderr: Option<f64>,
    pub analog_error: Option<f64>,
    pub digitized_error: Option<f64>,
    /// Digitized error below analog error by more than the summed stderrs.
    pub mitigated: Option<bool>,
    pub sub_blocks: Option<usize>,
    pub depth: usize,
    #[serde(rename = "R")]
    pub realizations: usize,
    pub base_seed: u64,
    pub config_hash: String,
    pub skipped_reason: String,
}

impl DigitizationRow {
    pub fn is_skipped(&self) -> bool {
        !self.skipped_reason.is_empty()
    }
}

/// Per-kind building-block model `σ/√N` for a digitized circuit.
pub fn building_block_model(sigma: f64, eta: f64, n_bits_gamma: usize, n_bits_beta: usize) -> NoiseModel {
    let sg = sigma / (n_bits_gamma as f64).sqrt();
    let sb = sigma / (n_bits_beta as f64).sqrt();
    NoiseModel::new(eta, eta, sb * sb, sg * sg).expect("finite budget")
}

fn noisy(inst: &QaoaInstance, sched: &Schedule, model: &NoiseModel, r: usize, seed: u64) -> Result<EnsembleStats, String> {
    if model.is_noiseless() {
        let v = evolve(inst, sched, None)
            .and_then(|psi| expectation(&psi, inst.cost()))
            .map_err(|e| e.to_string())?;
        return Ok(EnsembleStats {
            mean: v,
            variance: 0.0,
            stderr: 0.0,
            count: r,
        });
    }
    ensemble_expectation(inst, sched, model, inst.cost(), r, seed).map_err(|e| e.to_string())
}

pub fn run_digitization(cfg: &ExperimentConfig) -> Result<RunOutcome<DigitizationRow>, ConfigError> {
    let spec = cfg
        .digitization
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("digitize needs a digitization block".into()))?;
    let hash = cfg.hash();
    let mut out = RunOutcome::default();
    for &n in &cfg.n_list {
        let setup = size_setup(cfg, n);
        let layers = match &setup {
            Ok(s) => s.layers.iter().map(|l| (l.p, Some(l))).collect::<Vec<_>>(),
            Err(_) => vec![(0, None)],
        };
        for (p, layer) in layers {
            for (sigma, eta) in noise_cells(cfg) {
                // One analog ensemble serves every bit count.
                let analog = match (&setup, layer) {
                    (Ok(s), Some(l)) => {
                        let seed = cell_seed(cfg.base_seed, n, p, sigma, eta);
                        Some(noisy(&s.instance, &l.schedule, &model_for(sigma, eta), cfg.realizations, seed))
                    }
                    _ => None,
                };
                for (ng, nb) in spec.pairs() {
                    let bm = building_block_model(sigma, eta, ng, nb);
                    let mut row = DigitizationRow {
                        n,
                        p,
                        n_bits_gamma: ng,
                        n_bits_beta: nb,
                        sigma,
                        eta,
                        sigma_block_gamma: bm.gamma_c.sqrt(),
                        sigma_block_beta: bm.gamma_m.sqrt(),
                        ideal_hc: None,
                        digitized_ideal_hc: None,
                        gap: None,
                        noisy_analog_hc: None,
                        noisy_analog_stderr: None,
                        noisy_digitized_hc: None,
                        noisy_digitized_stderr: None,
                        analog_error: None,
                        digitized_error: None,
                        mitigated: None,
                        sub_blocks: None,
                        depth: 0,
                        realizations: cfg.realizations,
                        base_seed: cfg.base_seed,
                        config_hash: hash.clone(),
                        skipped_reason: String::new(),
                    };
                    let result = match (&setup, layer, &analog) {
                        (Ok(s), Some(l), Some(a)) => fill_row(cfg, &s.instance, &l.schedule, &bm, a, &mut row),
                        (Err(reason), _, _) => Err(reason.clone()),
                        _ => Err("no schedule".into()),
                    };
                    if let Err(reason) = result {
                        row.skipped_reason = reason;
                    }
                    out.rows.push(row);
                }
            }
        }
    }
    out.rows.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.p.cmp(&b.p))
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.eta.total_cmp(&b.eta))
            .then(a.n_bits_gamma.cmp(&b.n_bits_gamma))
            .then(a.n_bits_beta.cmp(&b.n_bits_beta))
    });
    Ok(out)
}

fn fill_row(
    cfg: &ExperimentConfig,
    inst: &QaoaInstance,
    sched: &Schedule,
    bm: &NoiseModel,
    analog: &Result<EnsembleStats, String>,
    row: &mut DigitizationRow,
) -> Result<(), String> {
    let analog = analog.clone()?;
    let e = |err: precqaoa::Error| err.to_string();
    let dig = digitized_schedule(sched, row.n_bits_gamma, row.n_bits_beta).map_err(e)?;
    row.depth = digitized_depth_proxy(sched, row.n_bits_gamma, row.n_bits_beta);
    row.sub_blocks = Some(dig.len());
    let ideal = expectation(&evolve(inst, sched, None).map_err(e)?, inst.cost()).map_err(e)?;
    let dig_ideal = expectation(&evolve(inst, &dig, None).map_err(e)?, inst.cost()).map_err(e)?;
    // Distinct seed stream from the analog ensemble of the same cell.
    let seed = cell_seed(cfg.base_seed ^ 0xd161_7a11, row.n, row.p, row.sigma, row.eta)
        ^ ((row.n_bits_gamma as u64) << 32 | row.n_bits_beta as u64);
    let noisy_dig = noisy(inst, &dig, bm, cfg.realizations, seed)?;
    row.ideal_hc = Some(ideal);
    row.digitized_ideal_hc = Some(dig_ideal);
    row.gap = Some((dig_ideal - ideal).abs());
    row.noisy_analog_hc = Some(analog.mean);
    row.noisy_analog_stderr = Some(analog.stderr);
    row.noisy_digitized_hc = Some(noisy_dig.mean);
    row.noisy_digitized_stderr = Some(noisy_dig.stderr);
    let ae = (analog.mean - ideal).abs();
    let de = (noisy_dig.mean - ideal).abs();
    row.analog_error = Some(ae);
    row.digitized_error = Some(de);
    row.mitigated = Some(ae - de > analog.stderr + noisy_dig.stderr);
    Ok(())
}
