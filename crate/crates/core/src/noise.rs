//! Multiplicative precision-error models and Monte Carlo ensembles.
//!
//! Every sub-block angle `a_s` is replaced by `a_s (1 + η_μ + √Γ_μ z_s)` with
//! `z_s` standard normal and `μ` the sub-block kind. Draws are independent
//! per sub-block and are not clipped.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qaoa::{
    binomial, block_range_propagator, evolve_with_multipliers, expectation, sector_generators,
    sector_propagators, BlockKind, QaoaInstance, Schedule,
};
use crate::statevec::{check_dense_qubits, spectral_norm, DenseOperator, DiagonalObservable, C64};

/// Default ensemble size for stochastic models.
pub const DEFAULT_STOCHASTIC_REALIZATIONS: usize = 1000;
/// Coherent models are deterministic, one realization suffices.
pub const DEFAULT_COHERENT_REALIZATIONS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eta_m: f64,
    pub eta_c: f64,
    pub gamma_m: f64,
    pub gamma_c: f64,
}

impl NoiseModel {
    pub fn new(eta_m: f64, eta_c: f64, gamma_m: f64, gamma_c: f64) -> Result<Self> {
        for v in [eta_m, eta_c, gamma_m, gamma_c] {
            if !v.is_finite() {
                return Err(Error::NonFinite("noise model"));
            }
        }
        if gamma_m < 0.0 || gamma_c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise variances must be nonnegative (Γ_M={gamma_m}, Γ_C={gamma_c})"
            )));
        }
        Ok(Self {
            eta_m,
            eta_c,
            gamma_m,
            gamma_c,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            eta_m: 0.0,
            eta_c: 0.0,
            gamma_m: 0.0,
            gamma_c: 0.0,
        }
    }

    /// Zero-mean noise with standard deviation `sigma` on both kinds.
    pub fn stochastic(sigma: f64) -> Result<Self> {
        Self::new(0.0, 0.0, sigma * sigma, sigma * sigma)
    }

    /// Constant offset `eta` on both kinds.
    pub fn coherent(eta: f64) -> Result<Self> {
        Self::new(eta, eta, 0.0, 0.0)
    }

    pub fn is_coherent(&self) -> bool {
        self.gamma_m == 0.0 && self.gamma_c == 0.0
    }

    pub fn is_stochastic(&self) -> bool {
        self.eta_m == 0.0 && self.eta_c == 0.0
    }

    pub fn is_noiseless(&self) -> bool {
        self.is_coherent() && self.is_stochastic()
    }

    pub fn mean(&self, kind: BlockKind) -> f64 {
        match kind {
            BlockKind::Cost => self.eta_c,
            BlockKind::Mixer => self.eta_m,
        }
    }

    pub fn variance(&self, kind: BlockKind) -> f64 {
        match kind {
            BlockKind::Cost => self.gamma_c,
            BlockKind::Mixer => self.gamma_m,
        }
    }

    pub fn default_realizations(&self) -> usize {
        if self.is_coherent() {
            DEFAULT_COHERENT_REALIZATIONS
        } else {
            DEFAULT_STOCHASTIC_REALIZATIONS
        }
    }
}

/// One sampled set of per-sub-block multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    multipliers: Vec<f64>,
    seed: u64,
}

impl NoiseRealization {
    pub fn new(multipliers: Vec<f64>, seed: u64) -> Self {
        Self { multipliers, seed }
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `index` within an ensemble rooted at `base_seed`.
pub fn realization_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed).wrapping_add(index))
}

pub fn sample_realization(model: &NoiseModel, schedule: &Schedule, seed: u64) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let multipliers = schedule
        .blocks()
        .iter()
        .map(|b| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let var = model.variance(b.kind);
            let eta = model.mean(b.kind);
            if var == 0.0 {
                1.0 + eta
            } else {
                1.0 + eta + var.sqrt() * z
            }
        })
        .collect();
    NoiseRealization { multipliers, seed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Unbiased sample variance; zero for a single realization.
    pub variance: f64,
    pub stderr: f64,
    pub count: usize,
}

impl EnsembleStats {
    /// Aggregates values in slice order, so the result does not depend on
    /// how they were produced.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { need: 1, got: 0 });
        }
        let r = values.len();
        let mean = values.iter().sum::<f64>() / r as f64;
        let variance = if r > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            mean,
            variance,
            stderr: (variance / r as f64).sqrt(),
            count: r,
        })
    }
}

fn check_realizations(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    Ok(())
}

/// Evaluates `f` on each realization of an ensemble, in parallel, returning
/// values in realization order.
pub fn ensemble_values<F>(
    model: &NoiseModel,
    schedule: &Schedule,
    realizations: usize,
    base_seed: u64,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&NoiseRealization) -> Result<f64> + Sync,
{
    check_realizations(realizations)?;
    (0..realizations as u64)
        .into_par_iter()
        .map(|i| f(&sample_realization(model, schedule, realization_seed(base_seed, i))))
        .collect()
}

/// Noise-averaged `⟨obs⟩` of the faulty circuit.
pub fn ensemble_expectation(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    obs: &DiagonalObservable,
    realizations: usize,
    base_seed: u64,
) -> Result<EnsembleStats> {
    if obs.n() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            got: obs.n(),
        });
    }
    let values = ensemble_values(model, schedule, realizations, base_seed, |r| {
        let psi = evolve_with_multipliers(instance, schedule, Some(r.multipliers()))?;
        expectation(&psi, obs)
    })?;
    EnsembleStats::from_values(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitaryDistanceStats {
    /// `‖U − U₀‖_∞`.
    pub spectral: EnsembleStats,
    /// `‖U − U₀‖_F²`.
    pub frobenius_sq: EnsembleStats,
}

/// Both distances between one faulty propagator and the ideal one.
pub fn unitary_distances(
    instance: &QaoaInstance,
    schedule: &Schedule,
    multipliers: &[f64],
) -> Result<(f64, f64)> {
    if instance.cost().is_permutation_symmetric() {
        let ideal = sector_propagators(instance, schedule, None)?;
        return sector_distances(&ideal, instance, schedule, multipliers);
    }
    let u0 = block_range_propagator(instance, schedule, 0..schedule.len(), None)?;
    dense_distances(&u0, instance, schedule, multipliers)
}

fn dense_distances(
    u0: &DenseOperator,
    instance: &QaoaInstance,
    schedule: &Schedule,
    multipliers: &[f64],
) -> Result<(f64, f64)> {
    let u = block_range_propagator(instance, schedule, 0..schedule.len(), Some(multipliers))?;
    let diff = &u - u0;
    let f2 = diff.matrix().iter().map(|z| z.norm_sqr()).sum();
    Ok((spectral_norm(&diff)?, f2))
}

fn sector_distances(
    ideal: &[crate::qaoa::SpinSector],
    instance: &QaoaInstance,
    schedule: &Schedule,
    multipliers: &[f64],
) -> Result<(f64, f64)> {
    let faulty = sector_propagators(instance, schedule, Some(multipliers))?;
    let mut inf = 0.0f64;
    let mut f2 = 0.0;
    for (a, b) in faulty.iter().zip(ideal) {
        let d = DenseOperator::from_matrix(&a.unitary - &b.unitary)?;
        inf = inf.max(spectral_norm(&d)?);
        f2 += a.multiplicity as f64 * d.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok((inf, f2))
}

/// Ensemble statistics of the distance between faulty and ideal propagators.
///
/// Permutation-symmetric costs use the spin-sector decomposition, which is
/// exact and avoids building the `2ⁿ × 2ⁿ` matrices.
pub fn ensemble_unitary_distance(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    realizations: usize,
    base_seed: u64,
) -> Result<UnitaryDistanceStats> {
    check_realizations(realizations)?;
    let symmetric = instance.cost().is_permutation_symmetric();
    let pairs: Vec<(f64, f64)> = if symmetric {
        let ideal = sector_propagators(instance, schedule, None)?;
        (0..realizations as u64)
            .into_par_iter()
            .map(|i| {
                let r = sample_realization(model, schedule, realization_seed(base_seed, i));
                sector_distances(&ideal, instance, schedule, r.multipliers())
            })
            .collect::<Result<_>>()?
    } else {
        let u0 = block_range_propagator(instance, schedule, 0..schedule.len(), None)?;
        (0..realizations as u64)
            .into_par_iter()
            .map(|i| {
                let r = sample_realization(model, schedule, realization_seed(base_seed, i));
                dense_distances(&u0, instance, schedule, r.multipliers())
            })
            .collect::<Result<_>>()?
    };
    let inf: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let f2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(UnitaryDistanceStats {
        spectral: EnsembleStats::from_values(&inf)?,
        frobenius_sq: EnsembleStats::from_values(&f2)?,
    })
}

/// Noise-averaged `⟨obs⟩` computed exactly, without sampling.
///
/// Each sub-block channel is the Gaussian average of `e^{-i a m H}`, which in
/// the eigenbasis of `H` multiplies `ρ_jk` by
/// `exp(-i a (1+η) Δ − a² Γ Δ² / 2)` with `Δ = h_j − h_k`. Permutation-symmetric
/// costs and observables stay in the `n+1`-dimensional symmetric sector;
/// anything else evolves the full density matrix.
pub fn exact_average_expectation(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    obs: &DiagonalObservable,
) -> Result<f64> {
    if obs.n() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            got: obs.n(),
        });
    }
    if instance.cost().is_permutation_symmetric() && obs.is_permutation_symmetric() {
        symmetric_average(instance, schedule, model, obs)
    } else {
        dense_average(instance, schedule, model, obs)
    }
}

fn channel_factor(a: f64, model: &NoiseModel, kind: BlockKind, delta: f64) -> C64 {
    let phase = -a * (1.0 + model.mean(kind)) * delta;
    let damp = -0.5 * a * a * model.variance(kind) * delta * delta;
    C64::from_polar(damp.exp(), phase)
}

fn symmetric_average(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    obs: &DiagonalObservable,
) -> Result<f64> {
    let n = instance.n();
    let d = n + 1;
    let gens = sector_generators(instance, n)?;
    let cost: Vec<f64> = (0..d).map(|k| gens.cost.matrix()[(k, k)].re).collect();
    let mixer = gens.mixer.matrix().map(|z| z.re);
    let eig = nalgebra::SymmetricEigen::new(mixer);
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let vt = v.transpose();
    let amp: Vec<f64> = (0..d).map(|k| (binomial(n, k) / (n as f64).exp2()).sqrt()).collect();
    let mut rho = nalgebra::DMatrix::<C64>::from_fn(d, d, |j, k| C64::new(amp[j] * amp[k], 0.0));
    for b in schedule.blocks() {
        let a = b.signed_angle();
        match b.kind {
            BlockKind::Cost => {
                for j in 0..d {
                    for k in 0..d {
                        rho[(j, k)] *= channel_factor(a, model, b.kind, cost[j] - cost[k]);
                    }
                }
            }
            BlockKind::Mixer => {
                let mut r = &vt * &rho * &v;
                for j in 0..d {
                    for k in 0..d {
                        let delta = eig.eigenvalues[j] - eig.eigenvalues[k];
                        r[(j, k)] *= channel_factor(a, model, b.kind, delta);
                    }
                }
                rho = &v * r * &vt;
            }
        }
    }
    Ok((0..d)
        .map(|k| rho[(k, k)].re * obs.diag()[(1usize << k) - 1])
        .sum())
}

fn fwht(row: &mut [C64]) {
    let mut h = 1;
    while h < row.len() {
        for i in (0..row.len()).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (row[j], row[j + h]);
                row[j] = x + y;
                row[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// `ρ → H^⊗n ρ H^⊗n` on a row-major matrix.
fn hadamard_conjugate(rho: &mut [C64], dim: usize) {
    let scale = 1.0 / dim as f64;
    rho.par_chunks_mut(dim).for_each(fwht);
    let mut t = vec![C64::new(0.0, 0.0); dim * dim];
    for j in 0..dim {
        for k in 0..dim {
            t[k * dim + j] = rho[j * dim + k];
        }
    }
    t.par_chunks_mut(dim).for_each(fwht);
    for j in 0..dim {
        for k in 0..dim {
            rho[j * dim + k] = t[k * dim + j] * scale;
        }
    }
}

fn dense_average(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    obs: &DiagonalObservable,
) -> Result<f64> {
    let n = instance.n();
    check_dense_qubits(n)?;
    let dim = instance.dim();
    let cost = instance.cost().diag();
    let field: Vec<f64> = (0..dim).map(|k| n as f64 - 2.0 * k.count_ones() as f64).collect();
    let mut rho = vec![C64::new(1.0 / dim as f64, 0.0); dim * dim];
    let dephase = |rho: &mut [C64], diag: &[f64], a: f64, kind: BlockKind| {
        rho.par_chunks_mut(dim).enumerate().for_each(|(j, row)| {
            for (k, z) in row.iter_mut().enumerate() {
                *z *= channel_factor(a, model, kind, diag[j] - diag[k]);
            }
        });
    };
    for b in schedule.blocks() {
        let a = b.signed_angle();
        match b.kind {
            BlockKind::Cost => dephase(&mut rho, cost, a, b.kind),
            BlockKind::Mixer => {
                hadamard_conjugate(&mut rho, dim);
                dephase(&mut rho, &field, a, b.kind);
                hadamard_conjugate(&mut rho, dim);
            }
        }
    }
    Ok((0..dim).map(|k| rho[k * dim + k].re * obs.diag()[k]).sum())
}
