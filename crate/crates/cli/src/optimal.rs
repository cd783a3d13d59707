//! `optimal-angles`: the Ising-ring optimizer result per size.

use precqaoa::problems::{ising_optimal_schedule, ProblemKind};
use precqaoa::qaoa::BlockKind;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig};
use crate::sweep::RunOutcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalAngles {
    pub n: usize,
    pub p: usize,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub value: Option<f64>,
    pub fraction_of_max: Option<f64>,
    pub gradient_norm: Option<f64>,
    pub iterations: Option<usize>,
    pub start_index: Option<usize>,
    pub starts_evaluated: Option<usize>,
    pub skipped_reason: String,
}

pub fn run_optimal_angles(cfg: &ExperimentConfig) -> Result<RunOutcome<OptimalAngles>, ConfigError> {
    if cfg.problem != ProblemKind::IsingRing {
        return Err(ConfigError::Invalid("optimal-angles applies to ising-ring only".into()));
    }
    let mut out = RunOutcome::default();
    let mut ns = cfg.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    for n in ns {
        let row = match ising_optimal_schedule(n) {
            Ok(o) => {
                let pick = |k: BlockKind| -> Vec<f64> {
                    o.schedule.blocks().iter().filter(|b| b.kind == k).map(|b| b.signed_angle()).collect()
                };
                OptimalAngles {
                    n,
                    p: o.schedule.p(),
                    gammas: pick(BlockKind::Cost),
                    betas: pick(BlockKind::Mixer),
                    value: Some(o.value),
                    fraction_of_max: Some(o.value / n as f64),
                    gradient_norm: Some(o.gradient_norm),
                    iterations: Some(o.iterations),
                    start_index: Some(o.start_index),
                    starts_evaluated: Some(o.starts_evaluated),
                    skipped_reason: String::new(),
                }
            }
            Err(e) => {
                if matches!(e, precqaoa::Error::OptimizationFailure { .. }) {
                    out.violations.push(format!("n={n}: {e}"));
                }
                OptimalAngles {
                    n,
                    p: n / 2,
                    gammas: Vec::new(),
                    betas: Vec::new(),
                    value: None,
                    fraction_of_max: None,
                    gradient_norm: None,
                    iterations: None,
                    start_index: None,
                    starts_evaluated: None,
                    skipped_reason: e.to_string(),
                }
            }
        };
        out.rows.push(row);
    }
    Ok(out)
}
