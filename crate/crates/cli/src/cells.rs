//! Grid enumeration shared by the run subcommands.

use std::cmp::Ordering;

use precqaoa::noise::splitmix64;
use precqaoa::problems::{grover_p_star, grover_schedule, ising_optimal_schedule, ProblemKind};
use precqaoa::{NoiseModel, QaoaInstance, Schedule};

use crate::config::{ExperimentConfig, PModeKind};

#[derive(Debug, Clone)]
pub struct LayerChoice {
    pub p: usize,
    pub p_star: bool,
    pub schedule: Schedule,
}

/// Instance and schedules for one system size, or the reason it is skipped.
pub struct SizeSetup {
    pub n: usize,
    pub instance: QaoaInstance,
    pub layers: Vec<LayerChoice>,
}

pub fn size_setup(cfg: &ExperimentConfig, n: usize) -> Result<SizeSetup, String> {
    let instance = cfg.problem.instance(n).map_err(|e| e.to_string())?;
    let layers = match (cfg.problem, cfg.p_mode.kind) {
        (ProblemKind::Grover, mode) => {
            let p_star = grover_p_star(n).map_err(|e| e.to_string())?;
            let ps: Vec<usize> = match mode {
                PModeKind::Optimal => vec![p_star],
                PModeKind::Sweep => (cfg.p_mode.p_min..=cfg.p_mode.p_max).collect(),
            };
            ps.into_iter()
                .map(|p| {
                    Ok(LayerChoice {
                        p,
                        p_star: p == p_star,
                        schedule: grover_schedule(n, p).map_err(|e| e.to_string())?,
                    })
                })
                .collect::<Result<Vec<_>, String>>()?
        }
        (ProblemKind::IsingRing, _) => {
            let opt = ising_optimal_schedule(n).map_err(|e| e.to_string())?;
            vec![LayerChoice {
                p: opt.schedule.p(),
                p_star: true,
                schedule: opt.schedule,
            }]
        }
    };
    Ok(SizeSetup { n, instance, layers })
}

/// `(σ, η)` pairs in grid order.
pub fn noise_cells(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    cfg.noise
        .sigma
        .iter()
        .flat_map(|&s| cfg.noise.eta.iter().map(move |&e| (s, e)))
        .collect()
}

pub fn model_for(sigma: f64, eta: f64) -> NoiseModel {
    let g = sigma * sigma;
    NoiseModel::new(eta, eta, g, g).expect("validated grid")
}

pub fn cell_seed(base: u64, n: usize, p: usize, sigma: f64, eta: f64) -> u64 {
    [n as u64, p as u64, sigma.to_bits(), eta.to_bits()]
        .into_iter()
        .fold(splitmix64(base), |acc, x| splitmix64(acc ^ x))
}

/// Row order `(n, p, σ, η)`.
pub fn cell_order(a: (usize, usize, f64, f64), b: (usize, usize, f64, f64)) -> Ordering {
    a.0.cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .then(a.3.total_cmp(&b.3))
}
