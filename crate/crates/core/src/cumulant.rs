//! Toggling-frame cumulant expansion of the noise-averaged error operator.
//!
//! With ideal sub-block propagators `B_s = exp(−i a_s H_s)` and the suffix
//! products `P_s = B_S ⋯ B_s`, the faulty circuit factorizes exactly as
//! `U = Ũ_E U₀` where `Ũ_E = Ẽ_S ⋯ Ẽ_1`,
//! `Ẽ_s = exp(−i ε_s a_s X_s)` and `X_s = P_{s+1} H_s P_{s+1}†`.
//!
//! For an invertible observable `O` the averaged error operator
//! `Λ = E[O⁻¹ Ũ_E† O Ũ_E]` satisfies `E⟨O⟩ = Tr[Λ ρ₀ O]`. Expanding to
//! second order in the multiplier fluctuations gives `Λ ≈ exp(−i C⁽¹⁾ − C⁽²⁾/2)`
//! with
//!
//! * `C⁽¹⁾ = Σ_s η_s a_s (X_s − X'_s)`, `X'_s = O⁻¹ X_s O`,
//! * `C⁽²⁾/2 = I₁ + I₂ − 2 I₃`, where `I₁ = Σ_s (Γ_s/2) w_s X_s²`,
//!   `I₂ = O⁻¹ I₁ O` and `I₃ = Σ_s (Γ_s/2) w_s X'_s X_s`.
//!
//! The weight `w_s` encodes the correlation model of one draw over the
//! duration of its sub-block; see [`CorrelationWeight`]. Following the
//! strong-control assumption all quantities are evaluated at ideal angles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseRealization};
use crate::problems::ising_instance;
use crate::qaoa::{block_range_propagator, evolve, BlockKind, QaoaInstance, Schedule, SubBlock};
use crate::statevec::{
    check_dense_qubits, complex_matmul, hermitian_propagator, matrix_exp, singular_values,
    spectral_norm, DenseOperator, DiagonalObservable, StateVector, C64,
};

/// Relative singular-value floor below which a term counts as singular.
pub const INVERTIBILITY_FLOOR: f64 = 1e-8;
/// Allowed ratio of imaginary to real part in a cumulant expectation.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-6;

/// How the variance of one multiplier enters the second cumulant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationWeight {
    /// One draw held for the whole sub-block, `w_s = a_s²`. This is the
    /// model the Monte Carlo engine samples.
    #[default]
    QuasiStatic,
    /// Delta-correlated in time, `w_s = |a_s|`.
    White,
}

impl CorrelationWeight {
    pub fn weight(&self, a: f64) -> f64 {
        match self {
            CorrelationWeight::QuasiStatic => a * a,
            CorrelationWeight::White => a.abs(),
        }
    }

    /// `|∂w/∂|a||`.
    pub fn weight_derivative(&self, a: f64) -> f64 {
        match self {
            CorrelationWeight::QuasiStatic => 2.0 * a.abs(),
            CorrelationWeight::White => 1.0,
        }
    }
}

/// One invertible diagonal term `O_i` with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTerm {
    pub label: String,
    diag: Vec<f64>,
    inverse: Vec<f64>,
}

impl ObservableTerm {
    pub fn new(label: impl Into<String>, diag: Vec<f64>, index: usize) -> Result<Self> {
        let max = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let min = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
        let threshold = INVERTIBILITY_FLOOR * max;
        if max == 0.0 || min <= threshold {
            return Err(Error::Decomposition {
                index,
                min_sv: min,
                threshold,
            });
        }
        let inverse = diag.iter().map(|d| 1.0 / d).collect();
        Ok(Self {
            label: label.into(),
            diag,
            inverse,
        })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn inverse_diag(&self) -> &[f64] {
        &self.inverse
    }

    pub fn dense(&self) -> DenseOperator {
        DenseOperator::from_real_diagonal(&self.diag)
    }

    pub fn inverse_dense(&self) -> DenseOperator {
        DenseOperator::from_real_diagonal(&self.inverse)
    }

    pub fn norm(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn inverse_norm(&self) -> f64 {
        self.inverse.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Condition number `‖O⁻¹‖ ‖O‖`.
    pub fn condition(&self) -> f64 {
        self.norm() * self.inverse_norm()
    }

    /// True when the term is a multiple of the identity.
    pub fn is_scalar(&self) -> bool {
        self.diag.iter().all(|&d| d == self.diag[0])
    }

    pub fn as_observable(&self) -> Result<DiagonalObservable> {
        DiagonalObservable::new(self.label.clone(), self.diag.clone())
    }

    /// `O⁻¹ A O`.
    pub fn conjugate(&self, a: &DenseOperator) -> DenseOperator {
        a.diag_mul_left(&self.inverse).diag_mul_right(&self.diag)
    }
}

/// Decomposition of an observable into invertible terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSum {
    pub terms: Vec<ObservableTerm>,
    pub target: DiagonalObservable,
}

impl ObservableSum {
    /// Largest entrywise deviation of `Σ O_i` from the target.
    pub fn reconstruction_error(&self) -> f64 {
        self.target
            .diag()
            .iter()
            .enumerate()
            .map(|(z, t)| (self.terms.iter().map(|o| o.diag[z]).sum::<f64>() - t).abs())
            .fold(0.0, f64::max)
    }
}

fn is_grover_projector(obs: &DiagonalObservable) -> bool {
    let d = obs.diag();
    d[0] == 1.0 && d[1..].iter().all(|&v| v == 0.0)
}

fn is_ising_ring(obs: &DiagonalObservable) -> bool {
    obs.n() >= 2 && ising_instance(obs.n()).is_ok_and(|i| i.cost().diag() == obs.diag())
}

/// Splits `obs` into invertible terms.
///
/// * invertible diagonals stay whole;
/// * the Grover projector becomes `I/N + (H_C − I/N)`;
/// * a singular ring-Ising cost becomes its bonds `Z_i Z_{i+1}`.
pub fn decompose_observable(obs: &DiagonalObservable) -> Result<ObservableSum> {
    let diag = obs.diag();
    let max = obs.norm_inf();
    let min = obs.min_abs();
    let terms = if max > 0.0 && min > INVERTIBILITY_FLOOR * max {
        vec![ObservableTerm::new(obs.label(), diag.to_vec(), 0)?]
    } else if is_grover_projector(obs) {
        let inv_n = 1.0 / diag.len() as f64;
        vec![
            ObservableTerm::new("I/N", vec![inv_n; diag.len()], 0)?,
            ObservableTerm::new("H_C - I/N", diag.iter().map(|d| d - inv_n).collect(), 1)?,
        ]
    } else if is_ising_ring(obs) {
        let n = obs.n();
        (0..n)
            .map(|i| {
                let bond = crate::problems::ising_bond(n, i)?;
                ObservableTerm::new(bond.label(), bond.diag().to_vec(), i)
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::Decomposition {
            index: 0,
            min_sv: min,
            threshold: INVERTIBILITY_FLOOR * max,
        });
    };
    Ok(ObservableSum {
        terms,
        target: obs.clone(),
    })
}

/// Toggling-frame generators `X_s` of every sub-block at ideal angles.
#[derive(Debug, Clone)]
pub struct TogglingFrame {
    blocks: Vec<SubBlock>,
    frame: Vec<DenseOperator>,
    generator_norms: Vec<f64>,
    cost_norm: f64,
    mixer_norm: f64,
}

/// `A · H_M` with `H_M = Σ_q X_q`, by column permutation sums.
fn right_mul_transverse_field(a: &DenseOperator, n: usize) -> DenseOperator {
    let m = a.matrix();
    let dim = m.ncols();
    let mut out = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for z in 0..dim {
        let mut col = out.column_mut(z);
        for q in 0..n {
            col += m.column(z ^ (1 << q));
        }
    }
    DenseOperator::from_matrix(out).expect("square")
}

impl TogglingFrame {
    pub fn new(instance: &QaoaInstance, schedule: &Schedule) -> Result<Self> {
        check_dense_qubits(instance.n())?;
        let s_len = schedule.len();
        let mut frame = vec![DenseOperator::zeros(0); s_len];
        // Suffix propagator P_{s+1}, grown leftwards one block at a time.
        let mut suffix = DenseOperator::identity(instance.dim());
        for s in (0..s_len).rev() {
            let block = schedule.blocks()[s];
            let ph = match block.kind {
                BlockKind::Cost => suffix.diag_mul_right(instance.cost().diag()),
                BlockKind::Mixer => right_mul_transverse_field(&suffix, instance.n()),
            };
            let x = complex_matmul(ph.matrix(), &suffix.matrix().adjoint());
            // Symmetrize to remove rounding asymmetry before flagging Hermitian.
            let x = (&x + &x.adjoint()) * C64::new(0.5, 0.0);
            frame[s] = DenseOperator::hermitian(x)?;
            let b = block_range_propagator(instance, schedule, s..s + 1, None)?;
            suffix = suffix.matmul(&b);
        }
        Ok(Self {
            blocks: schedule.blocks().to_vec(),
            generator_norms: schedule
                .blocks()
                .iter()
                .map(|b| instance.generator_norm(b.kind))
                .collect(),
            frame,
            cost_norm: instance.cost_norm(),
            mixer_norm: instance.mixer_norm(),
        })
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    /// `X_s`.
    pub fn generator(&self, s: usize) -> &DenseOperator {
        &self.frame[s]
    }

    pub fn blocks(&self) -> &[SubBlock] {
        &self.blocks
    }

    /// `‖H_s‖_∞`.
    pub fn generator_norm(&self, s: usize) -> f64 {
        self.generator_norms[s]
    }

    pub fn cost_norm(&self) -> f64 {
        self.cost_norm
    }

    pub fn mixer_norm(&self) -> f64 {
        self.mixer_norm
    }

    fn dim(&self) -> usize {
        self.frame.first().map_or(0, |x| x.dim())
    }
}

/// The truncated cumulant generator for one observable term (or for the
/// observable-free unitary series when `term_label` is `"U"`).
#[derive(Debug, Clone)]
pub struct CumulantSeries {
    pub term_label: String,
    pub c1: DenseOperator,
    pub c2: DenseOperator,
    /// `−i C⁽¹⁾ − C⁽²⁾/2`.
    pub generator: DenseOperator,
    pub generator_norm: f64,
    pub weight: CorrelationWeight,
}

impl CumulantSeries {
    fn assemble(label: String, c1: DenseOperator, c2: DenseOperator, weight: CorrelationWeight) -> Result<Self> {
        let generator = &c1.scale(C64::new(0.0, -1.0)) - &c2.scale(C64::new(0.5, 0.0));
        if !generator.is_finite() {
            return Err(Error::NonFinite("cumulant generator"));
        }
        let generator_norm = spectral_norm(&generator)?;
        Ok(Self {
            term_label: label,
            c1,
            c2,
            generator,
            generator_norm,
            weight,
        })
    }

    pub fn c1_norm(&self) -> Result<f64> {
        spectral_norm(&self.c1)
    }

    pub fn c2_norm(&self) -> Result<f64> {
        spectral_norm(&self.c2)
    }
}

/// I₁, I₂, I₃ of one term, exposed for verification.
#[derive(Debug, Clone)]
pub struct SecondCumulantParts {
    pub i1: DenseOperator,
    /// `Σ (Γ_s/2) w_s X'_s²`, computed directly.
    pub i2: DenseOperator,
    pub i3: DenseOperator,
}

impl SecondCumulantParts {
    /// `C⁽²⁾ = 2 (I₁ + I₂ − 2 I₃)`.
    pub fn c2(&self) -> DenseOperator {
        let sum = &(&self.i1 + &self.i2) - &self.i3.scale(C64::new(2.0, 0.0));
        sum.scale(C64::new(2.0, 0.0))
    }
}

pub fn first_cumulant_in_frame(frame: &TogglingFrame, term: Option<&ObservableTerm>, model: &NoiseModel) -> DenseOperator {
    let dim = frame.dim();
    let mut c1 = DenseOperator::zeros(dim);
    for (s, b) in frame.blocks.iter().enumerate() {
        let eta = model.mean(b.kind);
        if eta == 0.0 {
            continue;
        }
        let x = frame.generator(s);
        let piece = match term {
            Some(t) => x - &t.conjugate(x),
            None => x.clone(),
        };
        c1 = &c1 + &piece.scale(C64::new(eta * b.signed_angle(), 0.0));
    }
    c1
}

pub fn second_cumulant_parts_in_frame(
    frame: &TogglingFrame,
    term: Option<&ObservableTerm>,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> SecondCumulantParts {
    let dim = frame.dim();
    let mut i1 = DenseOperator::zeros(dim);
    let mut i2 = DenseOperator::zeros(dim);
    let mut i3 = DenseOperator::zeros(dim);
    for (s, b) in frame.blocks.iter().enumerate() {
        let gamma = model.variance(b.kind);
        if gamma == 0.0 {
            continue;
        }
        let c = C64::new(0.5 * gamma * weight.weight(b.signed_angle()), 0.0);
        let x = frame.generator(s);
        let x2 = x.matmul(x);
        i1 = &i1 + &x2.scale(c);
        match term {
            Some(t) => {
                let xp = t.conjugate(x);
                i2 = &i2 + &xp.matmul(&xp).scale(c);
                i3 = &i3 + &xp.matmul(x).scale(c);
            }
            None => {
                i2 = &i2 + &x2.scale(c);
                i3 = &i3 + &x2.scale(c);
            }
        }
    }
    SecondCumulantParts { i1, i2, i3 }
}

/// `C⁽¹⁾_O` for one invertible term.
pub fn first_cumulant(
    instance: &QaoaInstance,
    schedule: &Schedule,
    term: &ObservableTerm,
    eta_m: f64,
    eta_c: f64,
) -> Result<DenseOperator> {
    let frame = TogglingFrame::new(instance, schedule)?;
    let model = NoiseModel::new(eta_m, eta_c, 0.0, 0.0)?;
    Ok(first_cumulant_in_frame(&frame, Some(term), &model))
}

/// `C⁽²⁾_O` for one invertible term.
pub fn second_cumulant(
    instance: &QaoaInstance,
    schedule: &Schedule,
    term: &ObservableTerm,
    gamma_m: f64,
    gamma_c: f64,
    weight: CorrelationWeight,
) -> Result<DenseOperator> {
    let frame = TogglingFrame::new(instance, schedule)?;
    let model = NoiseModel::new(0.0, 0.0, gamma_m, gamma_c)?;
    Ok(second_cumulant_parts_in_frame(&frame, Some(term), &model, weight).c2())
}

/// Full series of one term in a precomputed frame.
pub fn term_series(
    frame: &TogglingFrame,
    term: &ObservableTerm,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> Result<CumulantSeries> {
    let c1 = first_cumulant_in_frame(frame, Some(term), model);
    let c2 = second_cumulant_parts_in_frame(frame, Some(term), model, weight).c2();
    CumulantSeries::assemble(term.label.clone(), c1, c2, weight)
}

/// Series for every term of a decomposition.
pub fn cumulant_series(
    instance: &QaoaInstance,
    schedule: &Schedule,
    obs_sum: &ObservableSum,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> Result<Vec<CumulantSeries>> {
    let frame = TogglingFrame::new(instance, schedule)?;
    obs_sum
        .terms
        .iter()
        .map(|t| term_series(&frame, t, model, weight))
        .collect()
}

/// Observable-free series of `E[Ũ_E] ≈ exp(−i C⁽¹⁾ − C⁽²⁾/2)` with
/// `C⁽¹⁾ = Σ η_s a_s X_s` and `C⁽²⁾ = 2 I₁`.
pub fn unitary_cumulant(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> Result<CumulantSeries> {
    let frame = TogglingFrame::new(instance, schedule)?;
    unitary_cumulant_in_frame(&frame, model, weight)
}

pub fn unitary_cumulant_in_frame(
    frame: &TogglingFrame,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> Result<CumulantSeries> {
    let c1 = first_cumulant_in_frame(frame, None, model);
    let parts = second_cumulant_parts_in_frame(frame, None, model, weight);
    CumulantSeries::assemble("U".into(), c1, parts.i1.scale(C64::new(2.0, 0.0)), weight)
}

/// `Λ = exp(generator)`.
pub fn error_operator(series: &CumulantSeries) -> Result<DenseOperator> {
    matrix_exp(&series.generator)
}

/// `Tr[Λ ρ₀ O] = ⟨ψ₀| O Λ |ψ₀⟩` together with its imaginary residue.
pub fn term_expectation(lambda: &DenseOperator, psi0: &StateVector, term: &ObservableTerm) -> Result<C64> {
    let lp = lambda.apply(psi0)?;
    Ok(psi0
        .amplitudes()
        .iter()
        .zip(lp.amplitudes())
        .zip(term.diag())
        .map(|((a, b), d)| a.conj() * b * *d)
        .sum())
}

/// Second-cumulant estimate of the noise-averaged `⟨O⟩`, summed over terms.
pub fn approx_expectation(
    instance: &QaoaInstance,
    schedule: &Schedule,
    obs_sum: &ObservableSum,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> Result<f64> {
    let psi0 = evolve(instance, schedule, None)?;
    let series = cumulant_series(instance, schedule, obs_sum, model, weight)?;
    let mut total = C64::new(0.0, 0.0);
    for (s, t) in series.iter().zip(&obs_sum.terms) {
        total += term_expectation(&error_operator(s)?, &psi0, t)?;
    }
    check_residue(total, obs_sum.target.norm_inf())?;
    Ok(total.re)
}

/// Rejects an imaginary part above `1e-6·|real|`, with an absolute floor
/// of `1e-12·‖O‖` so that vanishing expectations do not trip the check.
pub fn check_residue(value: C64, scale: f64) -> Result<()> {
    if value.im.abs() > IMAGINARY_RESIDUE_TOL * value.re.abs() + 1e-12 * scale.max(1.0) {
        return Err(Error::Truncation {
            real: value.re,
            imag: value.im,
        });
    }
    Ok(())
}

/// Reconstructs the faulty propagator from both toggling-frame
/// factorizations, `Ũ_E U₀` and `U₀ Ũ'_E`, and returns the larger of their
/// spectral distances to each other and to the direct product.
pub fn toggling_frame_equivalence_check(
    instance: &QaoaInstance,
    schedule: &Schedule,
    realization: &NoiseRealization,
) -> Result<f64> {
    if instance.n() > 8 {
        return Err(Error::Capacity {
            what: "toggling-frame check",
            got: instance.n(),
            min: 1,
            max: 8,
        });
    }
    let mults = realization.multipliers();
    if mults.len() != schedule.len() {
        return Err(Error::MultiplierCount {
            expected: schedule.len(),
            got: mults.len(),
        });
    }
    let dim = instance.dim();
    let direct = block_range_propagator(instance, schedule, 0..schedule.len(), Some(mults))?;
    let u0 = block_range_propagator(instance, schedule, 0..schedule.len(), None)?;

    // Left frame: X_s = P_{s+1} H_s P_{s+1}†, later factors on the left.
    let frame = TogglingFrame::new(instance, schedule)?;
    let mut left = DenseOperator::identity(dim);
    for s in 0..schedule.len() {
        let a = schedule.blocks()[s].signed_angle() * (mults[s] - 1.0);
        left = hermitian_propagator(frame.generator(s), a)?.matmul(&left);
    }

    // Right frame: Y_s = R_s† H_s R_s with prefix R_s = B_s ⋯ B_1.
    let mut right = DenseOperator::identity(dim);
    let mut prefix = DenseOperator::identity(dim);
    for s in 0..schedule.len() {
        let block = schedule.blocks()[s];
        prefix = block_range_propagator(instance, schedule, s..s + 1, None)?.matmul(&prefix);
        let h = instance.dense_generator(block.kind)?;
        let y = DenseOperator::hermitian(
            complex_matmul(&prefix.matrix().adjoint(), &complex_matmul(h.matrix(), prefix.matrix())),
        )
        .or_else(|_| {
            let m = complex_matmul(&prefix.matrix().adjoint(), &complex_matmul(h.matrix(), prefix.matrix()));
            DenseOperator::hermitian((&m + &m.adjoint()) * C64::new(0.5, 0.0))
        })?;
        let a = block.signed_angle() * (mults[s] - 1.0);
        right = hermitian_propagator(&y, a)?.matmul(&right);
    }

    let via_left = left.matmul(&u0);
    let via_right = u0.matmul(&right);
    let d_lr = spectral_norm(&(&via_left - &via_right))?;
    let d_ld = spectral_norm(&(&via_left - &direct))?;
    let d_rd = spectral_norm(&(&via_right - &direct))?;
    Ok(d_lr.max(d_ld).max(d_rd))
}

/// Smallest singular value of a dense operator, for invertibility checks.
pub fn min_singular_value(a: &DenseOperator) -> Result<f64> {
    Ok(singular_values(a)?.last().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{ensemble_expectation, sample_realization};
    use crate::problems::{grover_instance, grover_schedule, ising_bond};
    use crate::qaoa::expectation;

    fn ising2() -> (QaoaInstance, Schedule) {
        (ising_instance(2).unwrap(), Schedule::from_angles(&[0.5], &[0.3]).unwrap())
    }

    #[test]
    fn decomposition_cases() {
        let d = decompose_observable(ising_instance(10).unwrap().cost()).unwrap();
        assert_eq!(d.terms.len(), 1);

        let g = grover_instance(4).unwrap();
        let d = decompose_observable(g.cost()).unwrap();
        assert_eq!(d.terms.len(), 2);
        assert!(d.reconstruction_error() < 1e-15);

        let zz = ising_bond(2, 0).unwrap();
        let d = decompose_observable(&zz).unwrap();
        assert_eq!(d.terms.len(), 1);
        let t = &d.terms[0];
        assert_eq!(t.diag(), t.inverse_diag());

        let d = decompose_observable(ising_instance(8).unwrap().cost()).unwrap();
        assert_eq!(d.terms.len(), 8);
        assert!(d.reconstruction_error() < 1e-15);

        let singular = DiagonalObservable::new("s", vec![1.0, 0.0, 2.0, 0.0]).unwrap();
        assert!(matches!(decompose_observable(&singular), Err(Error::Decomposition { .. })));
    }

    #[test]
    fn inverse_times_term_is_identity() {
        let g = grover_instance(3).unwrap();
        for t in decompose_observable(g.cost()).unwrap().terms {
            let p = t.inverse_dense().matmul(&t.dense());
            assert!(p.max_abs_diff(&DenseOperator::identity(8)) < 1e-9);
            assert!(min_singular_value(&t.dense()).unwrap() > INVERTIBILITY_FLOOR * t.norm());
        }
    }

    #[test]
    fn zero_noise_gives_zero_cumulants() {
        let (inst, s) = ising2();
        let t = &decompose_observable(inst.cost()).unwrap().terms[0];
        let c1 = first_cumulant(&inst, &s, t, 0.0, 0.0).unwrap();
        assert!(c1.max_abs_diff(&DenseOperator::zeros(4)) == 0.0);
        let c2 = second_cumulant(&inst, &s, t, 0.0, 0.0, CorrelationWeight::QuasiStatic).unwrap();
        assert!(c2.max_abs_diff(&DenseOperator::zeros(4)) == 0.0);
    }

    #[test]
    fn identity_term_has_trivial_cumulants() {
        let inst = ising_instance(3).unwrap();
        let s = Schedule::from_angles(&[0.4], &[0.9]).unwrap();
        let t = ObservableTerm::new("I", vec![1.0; 8], 0).unwrap();
        let c1 = first_cumulant(&inst, &s, &t, 0.1, 0.2).unwrap();
        assert!(spectral_norm(&c1).unwrap() < 1e-14);
        let frame = TogglingFrame::new(&inst, &s).unwrap();
        let model = NoiseModel::stochastic(0.1).unwrap();
        let parts = second_cumulant_parts_in_frame(&frame, Some(&t), &model, CorrelationWeight::QuasiStatic);
        assert!(parts.i2.max_abs_diff(&parts.i1) < 1e-14);
        assert!(parts.i3.max_abs_diff(&parts.i1) < 1e-14);
        assert!(spectral_norm(&parts.c2()).unwrap() < 1e-13);
    }

    #[test]
    fn stochastic_model_has_exactly_zero_first_cumulant() {
        let inst = ising_instance(4).unwrap();
        let s = Schedule::from_angles(&[0.4, 0.2], &[0.9, 0.3]).unwrap();
        let sum = decompose_observable(inst.cost()).unwrap();
        let series = cumulant_series(&inst, &s, &sum, &NoiseModel::stochastic(0.1).unwrap(), CorrelationWeight::QuasiStatic).unwrap();
        for se in &series {
            assert!(se.c1.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn i2_equals_conjugated_i1() {
        let inst = ising_instance(2).unwrap();
        let s = Schedule::from_angles(&[0.5, 0.2], &[0.3, 0.7]).unwrap();
        let frame = TogglingFrame::new(&inst, &s).unwrap();
        let t = ObservableTerm::new("O", vec![1.0, -0.5, 2.0, 0.7], 0).unwrap();
        let parts = second_cumulant_parts_in_frame(&frame, Some(&t), &NoiseModel::stochastic(0.1).unwrap(), CorrelationWeight::QuasiStatic);
        assert!(t.conjugate(&parts.i1).max_abs_diff(&parts.i2) < 1e-9);
    }

    #[test]
    fn first_cumulant_predicts_linear_response() {
        let (inst, s) = ising2();
        let sum = decompose_observable(inst.cost()).unwrap();
        let psi0 = evolve(&inst, &s, None).unwrap();
        let ideal = expectation(&psi0, inst.cost()).unwrap();
        let eta = 0.05;
        let faulty = {
            let r = NoiseRealization::new(vec![1.0 + eta; s.len()], 0);
            expectation(&evolve(&inst, &s, Some(&r)).unwrap(), inst.cost()).unwrap()
        };
        let c1 = first_cumulant(&inst, &s, &sum.terms[0], eta, eta).unwrap();
        let lin = term_expectation(&c1.scale(C64::new(0.0, -1.0)), &psi0, &sum.terms[0]).unwrap();
        assert!(((faulty - ideal) - lin.re).abs() < 10.0 * eta * eta);
    }

    #[test]
    fn zero_noise_approx_equals_noiseless() {
        let inst = grover_instance(4).unwrap();
        let s = grover_schedule(4, 1).unwrap();
        let sum = decompose_observable(inst.cost()).unwrap();
        let ideal = expectation(&evolve(&inst, &s, None).unwrap(), inst.cost()).unwrap();
        let a = approx_expectation(&inst, &s, &sum, &NoiseModel::noiseless(), CorrelationWeight::QuasiStatic).unwrap();
        assert!((a - ideal).abs() < 1e-10);
    }

    #[test]
    fn approx_tracks_monte_carlo_for_ising2() {
        let (inst, s) = ising2();
        let sum = decompose_observable(inst.cost()).unwrap();
        let model = NoiseModel::stochastic(0.1).unwrap();
        let mc = ensemble_expectation(&inst, &s, &model, inst.cost(), 100_000, 1).unwrap();
        let a = approx_expectation(&inst, &s, &sum, &model, CorrelationWeight::QuasiStatic).unwrap();
        assert!((a - mc.mean).abs() < 3.0 * mc.stderr, "{a} vs {} ± {}", mc.mean, mc.stderr);
    }

    #[test]
    fn error_operator_cases() {
        let z = CumulantSeries::assemble("z".into(), DenseOperator::zeros(4), DenseOperator::zeros(4), CorrelationWeight::QuasiStatic).unwrap();
        assert!(error_operator(&z).unwrap().max_abs_diff(&DenseOperator::identity(4)) < 1e-15);

        let inst = ising_instance(3).unwrap();
        let s = Schedule::from_angles(&[0.4, 1.0], &[0.3, 0.6]).unwrap();
        let t = ObservableTerm::new("O", (0..8).map(|i| 1.0 + i as f64).collect(), 0).unwrap();
        let frame = TogglingFrame::new(&inst, &s).unwrap();
        // Coherent: anti-Hermitian generator up to the O-weighting; Λ bounded by e^{‖C‖}.
        for model in [NoiseModel::coherent(0.05).unwrap(), NoiseModel::stochastic(0.1).unwrap()] {
            let se = term_series(&frame, &t, &model, CorrelationWeight::QuasiStatic).unwrap();
            let l = error_operator(&se).unwrap();
            assert!(spectral_norm(&l).unwrap() <= se.generator_norm.exp() + 1e-12);
        }
        let u = unitary_cumulant_in_frame(&frame, &NoiseModel::coherent(0.05).unwrap(), CorrelationWeight::QuasiStatic).unwrap();
        assert!(error_operator(&u).unwrap().unitarity_defect() < 1e-9);
    }

    #[test]
    fn unitary_series_trivial_cases() {
        let inst = grover_instance(3).unwrap();
        let s = grover_schedule(3, 1).unwrap();
        let u = unitary_cumulant(&inst, &s, &NoiseModel::noiseless(), CorrelationWeight::QuasiStatic).unwrap();
        assert_eq!(u.generator_norm, 0.0);
        let u = unitary_cumulant(&inst, &s, &NoiseModel::stochastic(0.1).unwrap(), CorrelationWeight::QuasiStatic).unwrap();
        assert!(u.c1.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert!(u.generator_norm > 0.0);
    }

    #[test]
    fn toggling_frames_agree() {
        let inst = ising_instance(2).unwrap();
        let s = Schedule::from_angles(&[0.5, 1.1], &[0.3, 0.8]).unwrap();
        let r = NoiseRealization::new(vec![1.0; s.len()], 0);
        assert!(toggling_frame_equivalence_check(&inst, &s, &r).unwrap() < 1e-12);
        let r = sample_realization(&NoiseModel::stochastic(0.3).unwrap(), &s, 4);
        assert!(toggling_frame_equivalence_check(&inst, &s, &r).unwrap() < 1e-9);

        let inst = ising_instance(3).unwrap();
        let s = Schedule::from_angles(&[0.5, 1.1], &[0.3, 0.8]).unwrap();
        let r = sample_realization(&NoiseModel::coherent(0.2).unwrap(), &s, 0);
        assert!(toggling_frame_equivalence_check(&inst, &s, &r).unwrap() < 1e-9);
    }

    #[test]
    fn operator_weighted_lambda_gives_real_expectations() {
        let inst = grover_instance(3).unwrap();
        let s = grover_schedule(3, 2).unwrap();
        let sum = decompose_observable(inst.cost()).unwrap();
        let psi0 = evolve(&inst, &s, None).unwrap();
        for model in [NoiseModel::coherent(0.05).unwrap(), NoiseModel::stochastic(0.05).unwrap()] {
            for se in cumulant_series(&inst, &s, &sum, &model, CorrelationWeight::White).unwrap() {
                let t = sum.terms.iter().find(|t| t.label == se.term_label).unwrap();
                let v = term_expectation(&error_operator(&se).unwrap(), &psi0, t).unwrap();
                assert!(v.im.abs() < 1e-10);
            }
        }
    }
}
