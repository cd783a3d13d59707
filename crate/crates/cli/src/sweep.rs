//! `sweep`: noise-averaged objective and propagator distance per grid cell.

use precqaoa::noise::{ensemble_expectation, ensemble_unitary_distance, exact_average_expectation};
use precqaoa::qaoa::{evolve, expectation};
use precqaoa::statevec::MAX_DENSE_QUBITS;
use serde::{Deserialize, Serialize};

use crate::cells::{cell_order, cell_seed, model_for, noise_cells, size_setup, LayerChoice, SizeSetup};
use crate::config::{Averaging, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: usize,
    pub p_star_flag: bool,
    pub sigma: f64,
    pub eta: f64,
    #[serde(rename = "mean_HC")]
    pub mean_hc: Option<f64>,
    #[serde(rename = "stderr_HC")]
    pub stderr_hc: Option<f64>,
    #[serde(rename = "noiseless_HC")]
    pub noiseless_hc: Option<f64>,
    #[serde(rename = "mean_dU_inf")]
    pub mean_du_inf: Option<f64>,
    #[serde(rename = "mean_dU_frob_sq")]
    pub mean_du_frob_sq: Option<f64>,
    #[serde(rename = "R")]
    pub realizations: usize,
    pub base_seed: u64,
    pub config_hash: String,
    pub skipped_reason: String,
}

impl SweepRow {
    fn empty(cfg: &ExperimentConfig, hash: &str, n: usize, p: usize, p_star: bool, sigma: f64, eta: f64) -> Self {
        Self {
            n,
            p,
            p_star_flag: p_star,
            sigma,
            eta,
            mean_hc: None,
            stderr_hc: None,
            noiseless_hc: None,
            mean_du_inf: None,
            mean_du_frob_sq: None,
            realizations: cfg.realizations,
            base_seed: cfg.base_seed,
            config_hash: hash.to_string(),
            skipped_reason: String::new(),
        }
    }

    pub fn is_skipped(&self) -> bool {
        !self.skipped_reason.is_empty()
    }

    /// `Γ p` with `Γ = σ²`.
    pub fn gamma_p(&self) -> f64 {
        self.sigma * self.sigma * self.p as f64
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<R> {
    pub rows: Vec<R>,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl<R> Default for RunOutcome<R> {
    fn default() -> Self {
        Self {
            rows: Vec::new(),
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> RunOutcome<SweepRow> {
    let hash = cfg.hash();
    let mut out = RunOutcome::default();
    for &n in &cfg.n_list {
        match size_setup(cfg, n) {
            Ok(setup) => {
                for layer in &setup.layers {
                    for (sigma, eta) in noise_cells(cfg) {
                        let row = sweep_cell(cfg, &hash, &setup, layer, sigma, eta);
                        check_row(&row, &mut out.violations);
                        out.rows.push(row);
                    }
                }
            }
            Err(reason) => {
                for (sigma, eta) in noise_cells(cfg) {
                    let mut row = SweepRow::empty(cfg, &hash, n, 0, false, sigma, eta);
                    row.skipped_reason = reason.clone();
                    out.rows.push(row);
                }
            }
        }
    }
    out.rows
        .sort_by(|a, b| cell_order((a.n, a.p, a.sigma, a.eta), (b.n, b.p, b.sigma, b.eta)));
    out
}

fn sweep_cell(cfg: &ExperimentConfig, hash: &str, setup: &SizeSetup, layer: &LayerChoice, sigma: f64, eta: f64) -> SweepRow {
    let mut row = SweepRow::empty(cfg, hash, setup.n, layer.p, layer.p_star, sigma, eta);
    if let Err(reason) = fill_sweep_cell(cfg, setup, layer, &mut row) {
        row.skipped_reason = reason;
    }
    row
}

fn fill_sweep_cell(cfg: &ExperimentConfig, setup: &SizeSetup, layer: &LayerChoice, row: &mut SweepRow) -> Result<(), String> {
    let inst = &setup.instance;
    let sched = &layer.schedule;
    let model = model_for(row.sigma, row.eta);
    let seed = cell_seed(cfg.base_seed, row.n, row.p, row.sigma, row.eta);
    let noiseless = evolve(inst, sched, None)
        .and_then(|psi| expectation(&psi, inst.cost()))
        .map_err(|e| e.to_string())?;
    row.noiseless_hc = Some(noiseless);
    if model.is_noiseless() {
        row.mean_hc = Some(noiseless);
        row.stderr_hc = Some(0.0);
    } else if cfg.averaging == Averaging::Exact {
        let v = exact_average_expectation(inst, sched, &model, inst.cost()).map_err(|e| e.to_string())?;
        row.mean_hc = Some(v);
        row.stderr_hc = Some(0.0);
    } else {
        let stats = ensemble_expectation(inst, sched, &model, inst.cost(), cfg.realizations, seed)
            .map_err(|e| e.to_string())?;
        row.mean_hc = Some(stats.mean);
        row.stderr_hc = Some(stats.stderr);
    }
    if cfg.unitary_distance {
        if model.is_noiseless() {
            row.mean_du_inf = Some(0.0);
            row.mean_du_frob_sq = Some(0.0);
        } else if !inst.cost().is_permutation_symmetric() && row.n > MAX_DENSE_QUBITS {
            return Err(format!(
                "unitary distance needs a dense propagator; n = {} exceeds {MAX_DENSE_QUBITS}",
                row.n
            ));
        } else {
            let d = ensemble_unitary_distance(inst, sched, &model, cfg.realizations, seed)
                .map_err(|e| e.to_string())?;
            row.mean_du_inf = Some(d.spectral.mean);
            row.mean_du_frob_sq = Some(d.frobenius_sq.mean);
        }
    }
    Ok(())
}

fn check_row(row: &SweepRow, violations: &mut Vec<String>) {
    if row.is_skipped() {
        return;
    }
    let tag = format!("n={} p={} sigma={} eta={}", row.n, row.p, row.sigma, row.eta);
    if row.sigma == 0.0 && row.eta == 0.0 && row.mean_hc != row.noiseless_hc {
        violations.push(format!("{tag}: zero-noise mean differs from noiseless value"));
    }
    if row.mean_hc.is_some_and(|v| !v.is_finite()) {
        violations.push(format!("{tag}: non-finite mean"));
    }
    if row.mean_du_inf.is_some_and(|d| d > 2.0 + 1e-9) {
        violations.push(format!("{tag}: spectral distance above 2"));
    }
}
