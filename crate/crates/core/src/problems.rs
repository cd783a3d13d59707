//! Benchmark instances and angle digitization.
//!
//! * Grover search: `H_C = |0…0⟩⟨0…0|`, circuit of `2p` signed cost
//!   applications at angle π interleaved with mixers at π/n.
//! * Ising ring: `H_C = Σ Z_i Z_{i+1}` with periodic wrap, whose maximizers in
//!   the even-parity sector form the GHZ state.
//!
//! Digitization replaces each angle by its nearest `N`-bit dyadic multiple of
//! `2π` and expands it into one building-block sub-block per set bit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qaoa::{evolve, expectation, gradients, QaoaInstance, Schedule, SubBlock};
use crate::statevec::{check_dense_qubits, check_state_qubits, DiagonalObservable, StateVector};

/// Coefficients of the empirical optimal-layer law `p* ≈ a₁ 2^{n/2} + a₂`.
pub const GROVER_P_STAR_A1: f64 = 0.32;
pub const GROVER_P_STAR_A2: f64 = 0.24;
/// Half-width of the layer window searched around the law.
pub const GROVER_P_STAR_WINDOW: usize = 2;

pub const ISING_RANDOM_STARTS: usize = 20;
pub const ISING_ACCEPT_FRACTION: f64 = 0.999;
/// Starts within this much of the best value count as ties.
pub const ISING_TIE_TOL: f64 = 1e-6;
const ISING_OPTIMIZER_SEED: u64 = 0x1515_1515;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Grover,
    IsingRing,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Grover => "grover",
            ProblemKind::IsingRing => "ising-ring",
        }
    }

    pub fn instance(&self, n: usize) -> Result<QaoaInstance> {
        match self {
            ProblemKind::Grover => grover_instance(n),
            ProblemKind::IsingRing => ising_instance(n),
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grover" => Ok(ProblemKind::Grover),
            "ising-ring" | "ising" => Ok(ProblemKind::IsingRing),
            other => Err(Error::InvalidArgument(format!("unknown problem `{other}`"))),
        }
    }
}

pub fn grover_instance(n: usize) -> Result<QaoaInstance> {
    check_state_qubits(n)?;
    let mut diag = vec![0.0; 1 << n];
    diag[0] = 1.0;
    Ok(QaoaInstance::new(DiagonalObservable::new("grover", diag)?))
}

/// `2p` layers, layer `k` holding a cost block of angle π and sign
/// `(−1)^{k+1}` followed by a mixer of angle π/n. `p` counts W-layers.
pub fn grover_schedule(n: usize, p: usize) -> Result<Schedule> {
    check_state_qubits(n)?;
    let beta = PI / n as f64;
    let blocks = (1..=2 * p)
        .flat_map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            [SubBlock::cost(PI, k).with_sign(sign), SubBlock::mixer(beta, k)]
        })
        .collect();
    Schedule::from_blocks(blocks, p)
}

/// `round(a₁ 2^{n/2} + a₂)`.
pub fn grover_p_star_formula(n: usize) -> usize {
    (GROVER_P_STAR_A1 * 2f64.powf(n as f64 / 2.0) + GROVER_P_STAR_A2).round() as usize
}

/// Noiseless `⟨H_C⟩` of the Grover circuit.
pub fn grover_noiseless_value(n: usize, p: usize) -> Result<f64> {
    let inst = grover_instance(n)?;
    expectation(&evolve(&inst, &grover_schedule(n, p)?, None)?, inst.cost())
}

/// First local maximum of the noiseless objective over `p`, searched in a
/// window of ±2 around the empirical law. Falls back to the window's
/// largest value when no interior maximum exists.
pub fn grover_p_star(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grover_p_star needs n ≥ 2, got {n}")));
    }
    let centre = grover_p_star_formula(n);
    let lo = centre.saturating_sub(GROVER_P_STAR_WINDOW).max(1);
    let hi = centre + GROVER_P_STAR_WINDOW;
    let values: Vec<f64> = (lo - 1..=hi + 1)
        .map(|p| grover_noiseless_value(n, p))
        .collect::<Result<_>>()?;
    let at = |p: usize| values[p + 1 - lo];
    for p in lo..=hi {
        if at(p) > at(p - 1) && at(p) >= at(p + 1) {
            return Ok(p);
        }
    }
    Ok((lo..=hi)
        .max_by(|&a, &b| at(a).total_cmp(&at(b)).then(b.cmp(&a)))
        .unwrap_or(centre))
}

/// Ring Ising cost `Σ_i z_i z_{i+1}` with `z = 1 − 2·bit`.
pub fn ising_instance(n: usize) -> Result<QaoaInstance> {
    check_state_qubits(n)?;
    if n < 2 {
        return Err(Error::InvalidArgument("ring needs at least two qubits".into()));
    }
    let diag = (0..1usize << n)
        .map(|z| {
            (0..n)
                .map(|i| {
                    let a = 1 - 2 * ((z >> i) & 1) as i32;
                    let b = 1 - 2 * ((z >> ((i + 1) % n)) & 1) as i32;
                    (a * b) as f64
                })
                .sum()
        })
        .collect();
    Ok(QaoaInstance::new(DiagonalObservable::new("ising-ring", diag)?))
}

/// `Z_i Z_{i+1}` on an `n`-qubit ring.
pub fn ising_bond(n: usize, i: usize) -> Result<DiagonalObservable> {
    check_state_qubits(n)?;
    let j = (i + 1) % n;
    let diag = (0..1usize << n)
        .map(|z| {
            let a = 1 - 2 * ((z >> i) & 1) as i32;
            let b = 1 - 2 * ((z >> j) & 1) as i32;
            (a * b) as f64
        })
        .collect();
    DiagonalObservable::new(format!("Z{i}Z{j}"), diag)
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    check_state_qubits(n)?;
    let dim = 1usize << n;
    let mut amps = vec![crate::statevec::C64::new(0.0, 0.0); dim];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amps[0].re = h;
    amps[dim - 1].re = h;
    StateVector::from_amplitudes(amps)
}

/// Result of the multi-start optimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizedSchedule {
    pub schedule: Schedule,
    pub value: f64,
    pub start_index: usize,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub starts_evaluated: usize,
}

struct LocalResult {
    x: Vec<f64>,
    f: f64,
    grad_inf: f64,
    iterations: usize,
}

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and a
/// backtracking Armijo line search.
fn bfgs<F>(f: F, x0: Vec<f64>, gtol: f64, max_iter: usize) -> Result<LocalResult>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let d = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut h = vec![vec![0.0; d]; d];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut it = 0;
    while it < max_iter && inf_norm(&g) > gtol {
        it += 1;
        let mut dir: Vec<f64> = h.iter().map(|row| -row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()).collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let mut step = 1.0;
        let (x_new, f_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let (ft, gt) = f(&trial)?;
            if ft <= fx + 1e-4 * step * slope || step < 1e-12 {
                break (trial, ft, gt);
            }
            step *= 0.5;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let converged_step = s.iter().all(|v| v.abs() < 1e-15);
        x = x_new;
        fx = f_new;
        g = g_new;
        if converged_step {
            break;
        }
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    Ok(LocalResult {
        grad_inf: inf_norm(&g),
        x,
        f: fx,
        iterations: it,
    })
}

/// Representative of `a` modulo `period` in `[-period/2, period/2)`.
pub fn wrap_angle(a: f64, period: f64) -> f64 {
    a - period * (a / period + 0.5).floor()
}

/// Maximizes `⟨H_C⟩` at `p = n/2` from a linear ramp and 20 random starts.
///
/// Starts run in parallel. Angles are reduced to their shortest equivalent,
/// and among starts tied with the best value the one with the smallest total
/// angle wins, then the lowest start index, so the result is independent of
/// scheduling.
pub fn ising_optimal_schedule(n: usize) -> Result<OptimizedSchedule> {
    if n % 2 != 0 || !(4..=12).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "ising_optimal_schedule needs even n in 4..=12, got {n}"
        )));
    }
    check_dense_qubits(n)?;
    let inst = ising_instance(n)?;
    let p = n / 2;
    let template = Schedule::from_angles(&vec![0.0; p], &vec![0.0; p])?;

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(ISING_RANDOM_STARTS + 1);
    let ramp = |a: f64, b: f64, j: usize| if p == 1 { a } else { a + (b - a) * j as f64 / (p - 1) as f64 };
    starts.push((0..p).flat_map(|j| [ramp(0.1, 0.5, j), ramp(0.5, 0.1, j)]).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(ISING_OPTIMIZER_SEED);
    for _ in 0..ISING_RANDOM_STARTS {
        starts.push((0..2 * p).map(|_| rng.random_range(0.0..PI / 2.0)).collect());
    }

    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let s = template.with_angles(x)?;
        let psi = evolve(&inst, &s, None)?;
        let v = expectation(&psi, inst.cost())?;
        let g = gradients(&inst, &s, inst.cost())?;
        Ok((-v, g.into_iter().map(|v| -v).collect()))
    };

    let results: Vec<LocalResult> = starts
        .into_par_iter()
        .map(|x0| bfgs(objective, x0, 1e-9, 2000))
        .collect::<Result<_>>()?;

    // Ring-cost gaps are multiples of 4 and mixer gaps multiples of 2, so
    // the ideal circuit only sees γ mod π/2 and β mod π.
    let wrap = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &a)| wrap_angle(a, if i % 2 == 0 { PI / 2.0 } else { PI }))
            .collect()
    };
    let best_f = results.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    let length = |x: &[f64]| wrap(x).iter().map(|a| a.abs()).sum::<f64>();
    // Among starts that tie with the best value, keep the shortest schedule.
    let (start_index, best) = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.f <= best_f + ISING_TIE_TOL)
        .min_by(|(i, a), (j, b)| length(&a.x).total_cmp(&length(&b.x)).then(i.cmp(j)))
        .expect("at least one start");
    let schedule = template.with_angles(&wrap(&best.x))?;
    let value = expectation(&evolve(&inst, &schedule, None)?, inst.cost())?;
    let threshold = ISING_ACCEPT_FRACTION * n as f64;
    if value < threshold {
        return Err(Error::OptimizationFailure {
            best: value,
            threshold,
        });
    }
    Ok(OptimizedSchedule {
        schedule,
        value,
        start_index,
        gradient_norm: best.grad_inf,
        iterations: best.iterations,
        starts_evaluated: results.len(),
    })
}

/// Angle rounded to `n_bits` binary digits of a full turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitizedAngle {
    /// `bits[j]` is the coefficient of `2π·2^j / 2^N`.
    pub bits: Vec<u8>,
    pub reconstructed: f64,
    /// Reduced angle minus its reconstruction. Within ±π·2^{−N}.
    pub residual: f64,
}

impl DigitizedAngle {
    pub fn n_bits(&self) -> usize {
        self.bits.len()
    }

    pub fn set_bits(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(j, _)| j)
    }
}

/// Building-block angle `2π·2^j / 2^N`.
pub fn building_block_angle(j: usize, n_bits: usize) -> f64 {
    2.0 * PI * 2f64.powi(j as i32) / 2f64.powi(n_bits as i32)
}

/// Reduces `angle` into `[0, 2π)` and rounds to the nearest multiple of
/// `2π/2^N`. Reduction is exact for generators with integer spectrum, which
/// covers both benchmark costs and the transverse-field mixer.
pub fn digitize_angle(angle: f64, n_bits: usize) -> Result<DigitizedAngle> {
    if n_bits == 0 || n_bits > 52 {
        return Err(Error::InvalidArgument(format!("n_bits must be in 1..=52, got {n_bits}")));
    }
    if !angle.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    let turn = 2.0 * PI;
    let reduced = angle.rem_euclid(turn);
    let levels = 1u64 << n_bits;
    let k = (reduced * levels as f64 / turn).round() as u64;
    let (k, wrap) = if k >= levels { (0, turn) } else { (k, 0.0) };
    let bits: Vec<u8> = (0..n_bits).map(|j| ((k >> j) & 1) as u8).collect();
    let reconstructed = turn * k as f64 / levels as f64;
    Ok(DigitizedAngle {
        bits,
        reconstructed,
        residual: reduced - wrap - reconstructed,
    })
}

/// Expands every sub-block into its set-bit building blocks.
///
/// Cost sub-blocks use `n_bits_gamma` digits and mixers `n_bits_beta`. The
/// sign is folded into the angle before rounding, so all building blocks
/// carry sign +1.
pub fn digitized_schedule(schedule: &Schedule, n_bits_gamma: usize, n_bits_beta: usize) -> Result<Schedule> {
    let mut blocks = Vec::new();
    for b in schedule.blocks() {
        let bits = match b.kind {
            crate::qaoa::BlockKind::Cost => n_bits_gamma,
            crate::qaoa::BlockKind::Mixer => n_bits_beta,
        };
        let d = digitize_angle(b.signed_angle(), bits)?;
        for j in d.set_bits() {
            blocks.push(SubBlock {
                kind: b.kind,
                angle: building_block_angle(j, bits),
                sign: 1.0,
                layer: b.layer,
            });
        }
    }
    Schedule::from_blocks(blocks, schedule.p())
}

/// Schedule with every angle replaced by its rounded value, one sub-block
/// per original.
pub fn rounded_schedule(schedule: &Schedule, n_bits_gamma: usize, n_bits_beta: usize) -> Result<Schedule> {
    let blocks = schedule
        .blocks()
        .iter()
        .map(|b| {
            let bits = match b.kind {
                crate::qaoa::BlockKind::Cost => n_bits_gamma,
                crate::qaoa::BlockKind::Mixer => n_bits_beta,
            };
            Ok(SubBlock {
                angle: digitize_angle(b.signed_angle(), bits)?.reconstructed,
                sign: 1.0,
                ..*b
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::from_blocks(blocks, schedule.p())
}

/// Depth proxy `(#cost)·N_γ + (#mixer)·N_β`, the sub-block count when every
/// bit is set.
pub fn digitized_depth_proxy(schedule: &Schedule, n_bits_gamma: usize, n_bits_beta: usize) -> usize {
    schedule.count(crate::qaoa::BlockKind::Cost) * n_bits_gamma
        + schedule.count(crate::qaoa::BlockKind::Mixer) * n_bits_beta
}
