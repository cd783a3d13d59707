//! Error bounds on expectation values, gradients, mean-squared errors and
//! propagator distances.
//!
//! Each bound comes in two flavors. The numerical flavor uses the dense
//! truncated error operators `Λ_i = exp(C_{O_i})`; the analytic flavor
//! replaces every norm of a cumulant by the closed-form estimate of
//! [`cumulant_norm_bounds`] and every state-dependent trace norm by an
//! operator norm, so it is never smaller.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cumulant::{
    cumulant_series, decompose_observable, error_operator, term_series, unitary_cumulant_in_frame,
    CorrelationWeight, CumulantSeries, ObservableSum, ObservableTerm, TogglingFrame,
};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::qaoa::{apply_blocks, evolve, BlockKind, QaoaInstance, Schedule};
use crate::statevec::{spectral_norm, DenseOperator, DiagonalObservable, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Numerical,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub value: f64,
    pub flavor: Flavor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
}

/// Named bound values for one configuration.
///
/// Entry names are `<bound>.<numerical|analytic>`; entries sharing a
/// `<bound>` prefix are compared by [`BoundReport::ordering_violations`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub config_id: String,
    pub entries: BTreeMap<String, BoundEntry>,
    pub measured: Option<Measured>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(config_id: impl Into<String>) -> Self {
        Self {
            config_id: config_id.into(),
            entries: BTreeMap::new(),
            measured: None,
            notes: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: &str, flavor: Flavor, value: f64) {
        let suffix = match flavor {
            Flavor::Numerical => "numerical",
            Flavor::Analytic => "analytic",
        };
        self.entries
            .insert(format!("{name}.{suffix}"), BoundEntry { value, flavor });
    }

    pub fn get(&self, name: &str, flavor: Flavor) -> Option<f64> {
        let suffix = match flavor {
            Flavor::Numerical => "numerical",
            Flavor::Analytic => "analytic",
        };
        self.entries.get(&format!("{name}.{suffix}")).map(|e| e.value)
    }

    /// Names whose analytic value falls below the numerical one by more
    /// than `tol`.
    pub fn ordering_violations(&self, tol: f64) -> Vec<String> {
        self.entries
            .iter()
            .filter_map(|(k, e)| {
                let base = k.strip_suffix(".numerical")?;
                let analytic = self.entries.get(&format!("{base}.analytic"))?;
                (analytic.value + tol < e.value).then(|| base.to_string())
            })
            .collect()
    }

    /// Whether `bound` dominates the measured comparator within `k·stderr`.
    pub fn dominates(&self, name: &str, flavor: Flavor, k: f64) -> Option<bool> {
        let m = self.measured?;
        let v = self.get(name, flavor)?;
        Some(m.value <= v + k * m.stderr)
    }
}

/// `‖A ψ‖` for a real diagonal `A`, the trace norm of `A |ψ⟩⟨ψ|`.
fn diag_state_trace_norm(diag: &[f64], psi: &StateVector) -> f64 {
    psi.amplitudes()
        .iter()
        .zip(diag)
        .map(|(a, d)| (a * d).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Everything the bounds share for one (instance, schedule, observable,
/// noise) configuration.
#[derive(Debug, Clone)]
pub struct BoundContext {
    pub instance: QaoaInstance,
    pub schedule: Schedule,
    pub obs_sum: ObservableSum,
    pub model: NoiseModel,
    pub weight: CorrelationWeight,
    pub psi0: StateVector,
    pub frame: TogglingFrame,
    pub series: Vec<CumulantSeries>,
    pub lambdas: Vec<DenseOperator>,
}

impl BoundContext {
    pub fn new(
        instance: &QaoaInstance,
        schedule: &Schedule,
        obs: &DiagonalObservable,
        model: &NoiseModel,
        weight: CorrelationWeight,
    ) -> Result<Self> {
        let obs_sum = decompose_observable(obs)?;
        let frame = TogglingFrame::new(instance, schedule)?;
        let series = obs_sum
            .terms
            .iter()
            .map(|t| term_series(&frame, t, model, weight))
            .collect::<Result<Vec<_>>>()?;
        let lambdas = series.iter().map(error_operator).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            instance: instance.clone(),
            schedule: schedule.clone(),
            psi0: evolve(instance, schedule, None)?,
            obs_sum,
            model: *model,
            weight,
            frame,
            series,
            lambdas,
        })
    }

    pub fn terms(&self) -> &[ObservableTerm] {
        &self.obs_sum.terms
    }

    /// Analytic `(‖C⁽¹⁾‖, ‖C⁽²⁾‖)` estimates for each term.
    pub fn analytic_norms(&self) -> Vec<(f64, f64)> {
        self.terms()
            .iter()
            .map(|t| cumulant_norm_bounds_in(&self.instance, &self.schedule, Some(t), &self.model, self.weight))
            .collect()
    }
}

/// `(‖C⁽¹⁾‖, ‖C⁽²⁾‖)` upper estimates.
///
/// With `κ = ‖O⁻¹‖‖O‖`:
/// `‖C⁽¹⁾‖ ≤ Σ_s |η_s||a_s| ‖H_s‖ (1 + κ)` and
/// `‖C⁽²⁾‖ ≤ Σ_s Γ_s w_s ‖H_s‖² (1 + 3κ)`.
/// Without an observable (`term = None`) the factors in κ drop to 1.
pub fn cumulant_norm_bounds(
    instance: &QaoaInstance,
    schedule: &Schedule,
    term: Option<&ObservableTerm>,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> (f64, f64) {
    cumulant_norm_bounds_in(instance, schedule, term, model, weight)
}

fn cumulant_norm_bounds_in(
    instance: &QaoaInstance,
    schedule: &Schedule,
    term: Option<&ObservableTerm>,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> (f64, f64) {
    if term.is_some_and(|t| t.is_scalar()) {
        return (0.0, 0.0);
    }
    let (f1, f2) = match term {
        Some(t) => (1.0 + t.condition(), 1.0 + 3.0 * t.condition()),
        None => (1.0, 1.0),
    };
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for b in schedule.blocks() {
        let h = instance.generator_norm(b.kind);
        let a = b.signed_angle();
        b1 += model.mean(b.kind).abs() * a.abs() * h * f1;
        b2 += model.variance(b.kind) * weight.weight(a) * h * h * f2;
    }
    (b1, b2)
}

/// The second-cumulant estimate in the form `Σ_s Γ_s |a_s| ‖H_s‖ (1 + 3κ)`,
/// linear in the generator norm. It is reported for comparison only and
/// is not a valid upper bound in general.
pub fn second_cumulant_estimate_linear(
    instance: &QaoaInstance,
    schedule: &Schedule,
    term: &ObservableTerm,
    model: &NoiseModel,
) -> f64 {
    let f2 = 1.0 + 3.0 * term.condition();
    schedule
        .blocks()
        .iter()
        .map(|b| model.variance(b.kind) * b.angle.abs() * instance.generator_norm(b.kind) * f2)
        .sum()
}

/// Absolute-error bounds on `|E⟨O⟩ − ⟨O⟩₀|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsErrorBound {
    /// `min(‖Σ_i O_i Λ_i − O‖_∞, max O − min O)`.
    pub numerical: f64,
    /// `Σ_i (e^{‖C_{O_i}‖} − 1) ‖O_i ρ₀‖₁`.
    pub numerical_trace: f64,
    /// `min(Σ_i ‖O_i‖ (e^{B_i} − 1), max O − min O)` with `B_i` the
    /// analytic generator-norm estimate. For the Grover projector the cap is
    /// `‖H_C‖ = 1`.
    pub analytic: f64,
    pub analytic_unclipped: f64,
}

pub fn abs_error_bound(ctx: &BoundContext) -> Result<AbsErrorBound> {
    let dim = ctx.instance.dim();
    let mut acc = DenseOperator::zeros(dim);
    let mut trace = 0.0;
    let mut analytic = 0.0;
    for ((t, l), (se, (b1, b2))) in ctx
        .terms()
        .iter()
        .zip(&ctx.lambdas)
        .zip(ctx.series.iter().zip(ctx.analytic_norms()))
    {
        acc = &acc + &l.diag_mul_left(t.diag());
        trace += se.generator_norm.exp_m1() * diag_state_trace_norm(t.diag(), &ctx.psi0);
        analytic += t.norm() * (b1 + 0.5 * b2).exp_m1();
    }
    let target = DenseOperator::from_real_diagonal(ctx.obs_sum.target.diag());
    // Both expectations lie in the spectrum, so the spread caps any deviation.
    let spread = ctx.obs_sum.target.max() - ctx.obs_sum.target.min();
    let numerical = spectral_norm(&(&acc - &target))?.min(spread);
    Ok(AbsErrorBound {
        numerical,
        numerical_trace: trace,
        analytic: analytic.min(spread),
        analytic_unclipped: analytic,
    })
}

/// Grover-specific estimate `min[2(e^{4π p* Γ} − 1), ‖H_C‖]`, from the
/// estimate `‖C⁽²⁾‖ ≤ 8π p* Γ`.
pub fn grover_abs_error_estimate(p_star: usize, gamma: f64, cost_norm: f64) -> f64 {
    (2.0 * (4.0 * std::f64::consts::PI * p_star as f64 * gamma).exp_m1()).min(cost_norm)
}

/// `|Δε*| ≤ (1/C_max) Σ_i (e^{‖C_{O_i}‖} − 1) ‖O_i ρ₀‖₁`.
pub fn approx_ratio_bound(ctx: &BoundContext) -> Result<f64> {
    let c_max = ctx.instance.c_max();
    if c_max == 0.0 {
        return Err(Error::InvalidArgument("c_max is zero".into()));
    }
    Ok(abs_error_bound(ctx)?.numerical_trace / c_max)
}

/// `h_E = |η_M| Σ|β| ‖H_M‖ + |η_C| Σ|γ| ‖H_C‖`.
pub fn coherent_error_strength(instance: &QaoaInstance, schedule: &Schedule, eta_m: f64, eta_c: f64) -> f64 {
    eta_m.abs() * schedule.kind_time(BlockKind::Mixer) * instance.mixer_norm()
        + eta_c.abs() * schedule.kind_time(BlockKind::Cost) * instance.cost_norm()
}

/// `(2‖O‖²(1 + 2h_E²), h_E)` for constant errors.
pub fn mse_bound_coherent(
    instance: &QaoaInstance,
    schedule: &Schedule,
    obs: &DiagonalObservable,
    model: &NoiseModel,
) -> Result<(f64, f64)> {
    if !model.is_coherent() {
        return Err(Error::ModelMismatch(
            "coherent MSE bound requires zero variances".into(),
        ));
    }
    let h = coherent_error_strength(instance, schedule, model.eta_m, model.eta_c);
    let o = obs.norm_inf();
    Ok((2.0 * o * o * (1.0 + 2.0 * h * h), h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseBound {
    pub variance: f64,
    pub bias: f64,
    pub total: f64,
}

/// Variance bound `L (L ‖Oρ₀‖₁² + ‖O²ρ₀‖₁)` plus bias bound
/// `(Σ_i ‖Λ_i − I‖ ‖O_i ρ₀‖₁)²`, with `L = max_i ‖Λ_i‖`. For a single term
/// this is the standard pair of expressions.
pub fn mse_bound_general(
    lambdas: &[DenseOperator],
    psi0: &StateVector,
    obs_sum: &ObservableSum,
) -> Result<MseBound> {
    let dim = psi0.dim();
    let id = DenseOperator::identity(dim);
    let mut l = 0.0f64;
    let mut bias_root = 0.0;
    for (lam, t) in lambdas.iter().zip(&obs_sum.terms) {
        l = l.max(spectral_norm(lam)?);
        bias_root += spectral_norm(&(lam - &id))? * diag_state_trace_norm(t.diag(), psi0);
    }
    let o = obs_sum.target.diag();
    let o2: Vec<f64> = o.iter().map(|d| d * d).collect();
    let o_rho = diag_state_trace_norm(o, psi0);
    let o2_rho = diag_state_trace_norm(&o2, psi0);
    let variance = l * (l * o_rho * o_rho + o2_rho);
    let bias = bias_root * bias_root;
    Ok(MseBound {
        variance,
        bias,
        total: variance + bias,
    })
}

/// Analytic counterpart of [`mse_bound_general`]: `‖Λ‖ ≤ e^B`,
/// `‖Λ − I‖ ≤ e^B − 1`, `‖Oρ₀‖₁ ≤ ‖O‖`.
pub fn mse_bound_general_analytic(ctx: &BoundContext) -> MseBound {
    let norms = ctx.analytic_norms();
    let mut l = 1.0f64;
    let mut bias_root = 0.0;
    for (t, (b1, b2)) in ctx.terms().iter().zip(norms) {
        let b = b1 + 0.5 * b2;
        l = l.max(b.exp());
        bias_root += b.exp_m1() * t.norm();
    }
    let o = ctx.obs_sum.target.norm_inf();
    let variance = l * (l * o * o + o * o);
    let bias = bias_root * bias_root;
    MseBound {
        variance,
        bias,
        total: variance + bias,
    }
}

/// `e^x (e^{2x} − 1)/(2x) · d`, continuous at `x = 0`.
pub fn lambda_prefactor(x: f64, d: f64) -> f64 {
    let ratio = if x.abs() < 1e-12 {
        1.0 + x
    } else {
        (2.0 * x).exp_m1() / (2.0 * x)
    };
    x.exp() * ratio * d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    pub numerical: f64,
    pub analytic: f64,
}

/// Trace norm of the rank-two operator `[H_k, ρ_k] Õ` with
/// `Õ = P_{k+1}† O P_{k+1}` and `ρ_k` the ideal state after block `k`.
fn commutator_trace_norm(ctx: &BoundContext, k: usize, diag: &[f64]) -> Result<f64> {
    let inst = &ctx.instance;
    let sched = &ctx.schedule;
    let s_len = sched.len();
    let mut phi = StateVector::plus(inst.n())?;
    apply_blocks(&mut phi, inst, sched, 0..k + 1, None);
    let h_phi = {
        let mut v = phi.clone();
        generator_mul(inst, sched.blocks()[k].kind, &phi, &mut v);
        v
    };
    // Õ y = P† O P y; apply P via the remaining blocks and P† by inverting them.
    let tilde_o = |y: &StateVector| -> StateVector {
        let mut w = y.clone();
        apply_blocks(&mut w, inst, sched, k + 1..s_len, None);
        for (a, d) in w.amplitudes_mut().iter_mut().zip(diag) {
            *a *= *d;
        }
        let inv = inverse_schedule(sched, k + 1..s_len);
        apply_blocks(&mut w, inst, &inv, 0..inv.len(), None);
        w
    };
    // [H, ρ] Õ = u v† − w x† with u = Hφ, v = Õφ, w = φ, x = Õ H φ.
    let cols_a = [h_phi.clone(), scale_state(&phi, -1.0)];
    let cols_b = [tilde_o(&phi), tilde_o(&h_phi)];
    Ok(rank_two_trace_norm(&cols_a, &cols_b))
}

fn scale_state(psi: &StateVector, s: f64) -> StateVector {
    let mut out = psi.clone();
    out.amplitudes_mut().iter_mut().for_each(|a| *a *= s);
    out
}

fn generator_mul(inst: &QaoaInstance, kind: BlockKind, src: &StateVector, dst: &mut StateVector) {
    match kind {
        BlockKind::Cost => {
            for ((o, a), d) in dst.amplitudes_mut().iter_mut().zip(src.amplitudes()).zip(inst.cost().diag()) {
                *o = a * d;
            }
        }
        BlockKind::Mixer => {
            let a = src.amplitudes();
            let n = src.n();
            for (z, o) in dst.amplitudes_mut().iter_mut().enumerate() {
                *o = (0..n).map(|q| a[z ^ (1 << q)]).sum();
            }
        }
    }
}

fn inverse_schedule(sched: &Schedule, range: std::ops::Range<usize>) -> Schedule {
    let blocks = sched.blocks()[range]
        .iter()
        .rev()
        .map(|b| crate::qaoa::SubBlock { sign: -b.sign, ..*b })
        .collect();
    Schedule::from_blocks(blocks, 0).expect("valid blocks")
}

/// `‖A B†‖₁` for `A`, `B` with two columns each.
fn rank_two_trace_norm(a: &[StateVector; 2], b: &[StateVector; 2]) -> f64 {
    let gram = |c: &[StateVector; 2]| {
        [
            [c[0].inner(&c[0]), c[0].inner(&c[1])],
            [c[1].inner(&c[0]), c[1].inner(&c[1])],
        ]
    };
    let ga = gram(a);
    let gb = gram(b);
    // Nonzero eigenvalues of (A B†)†(A B†) = B (A†A) B† are those of (A†A)(B†B).
    let m = [
        [ga[0][0] * gb[0][0] + ga[0][1] * gb[1][0], ga[0][0] * gb[0][1] + ga[0][1] * gb[1][1]],
        [ga[1][0] * gb[0][0] + ga[1][1] * gb[1][0], ga[1][0] * gb[0][1] + ga[1][1] * gb[1][1]],
    ];
    let tr = (m[0][0] + m[1][1]).re;
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = (0.5 * (tr + disc)).max(0.0);
    let l2 = (0.5 * (tr - disc)).max(0.0);
    l1.sqrt() + l2.sqrt()
}

/// Analytic `‖∂_k C_O‖` estimate for sub-block `k` of the generator
/// `−iC⁽¹⁾ − C⁽²⁾/2`, using `‖∂X_s‖ ≤ 2‖H_k‖‖H_s‖` for `s < k`.
pub fn cumulant_gradient_norm_bound(
    instance: &QaoaInstance,
    schedule: &Schedule,
    term: Option<&ObservableTerm>,
    model: &NoiseModel,
    weight: CorrelationWeight,
    k: usize,
) -> f64 {
    if term.is_some_and(|t| t.is_scalar()) {
        return 0.0;
    }
    let kappa = term.map_or(0.0, |t| t.condition());
    let blocks = schedule.blocks();
    let bk = blocks[k];
    let hk = instance.generator_norm(bk.kind);
    let f1 = if term.is_some() { 1.0 + kappa } else { 1.0 };
    let f2 = if term.is_some() { 1.0 + 3.0 * kappa } else { 1.0 };
    let f2d = if term.is_some() { 2.0 + 6.0 * kappa } else { 2.0 };
    let mut d1 = model.mean(bk.kind).abs() * hk * f1;
    let mut d2 = 0.5 * model.variance(bk.kind) * weight.weight_derivative(bk.angle) * hk * hk * f2;
    for b in &blocks[..k] {
        let hs = instance.generator_norm(b.kind);
        let a = b.signed_angle();
        let dx = 2.0 * hk * hs;
        d1 += model.mean(b.kind).abs() * a.abs() * dx * f1;
        d2 += 0.5 * model.variance(b.kind) * weight.weight(a) * f2d * hs * dx;
    }
    d1 + d2
}

/// Bound on `|∂_k (E⟨O⟩ − ⟨O⟩₀)|` for the angle of sub-block `k`:
/// `Σ_i [λ_i ‖O_i ρ₀‖₁ + ‖Λ_i − I‖ ‖[H_k, ρ_k] Õ_i‖₁]`.
///
/// The numerical flavor takes `‖∂C‖` from a central difference of the dense
/// generator; the analytic flavor uses [`cumulant_gradient_norm_bound`].
/// `Õ` is conjugated by the propagator following block `k`.
pub fn gradient_error_bound(ctx: &BoundContext, k: usize) -> Result<GradientBound> {
    if k >= ctx.schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "sub-block index {k} out of range for {} sub-blocks",
            ctx.schedule.len()
        )));
    }
    let h = 1e-6;
    let shifted = |delta: f64| -> Result<Vec<CumulantSeries>> {
        let mut angles = ctx.schedule.angles();
        angles[k] += delta;
        let s = ctx.schedule.with_angles(&angles)?;
        cumulant_series(&ctx.instance, &s, &ctx.obs_sum, &ctx.model, ctx.weight)
    };
    let noiseless = ctx.model.is_noiseless();
    let (up, down) = if noiseless {
        (Vec::new(), Vec::new())
    } else {
        (shifted(h)?, shifted(-h)?)
    };
    let id = DenseOperator::identity(ctx.instance.dim());
    let hk = ctx.instance.generator_norm(ctx.schedule.blocks()[k].kind);
    let mut numerical = 0.0;
    let mut analytic = 0.0;
    for (i, ((t, se), lam)) in ctx.terms().iter().zip(&ctx.series).zip(&ctx.lambdas).enumerate() {
        let d_c = if noiseless {
            0.0
        } else {
            let diff = &up[i].generator - &down[i].generator;
            spectral_norm(&diff.scale(C64::new(0.5 / h, 0.0)))?
        };
        let lam_minus = spectral_norm(&(lam - &id))?;
        let comm = if lam_minus == 0.0 {
            0.0
        } else {
            commutator_trace_norm(ctx, k, t.diag())?
        };
        numerical += lambda_prefactor(se.generator_norm, d_c) * diag_state_trace_norm(t.diag(), &ctx.psi0)
            + lam_minus * comm;

        let (b1, b2) = cumulant_norm_bounds_in(&ctx.instance, &ctx.schedule, Some(t), &ctx.model, ctx.weight);
        let b = b1 + 0.5 * b2;
        let db = cumulant_gradient_norm_bound(&ctx.instance, &ctx.schedule, Some(t), &ctx.model, ctx.weight, k);
        analytic += lambda_prefactor(b, db) * t.norm() + b.exp_m1() * 2.0 * hk * t.norm();
    }
    Ok(GradientBound { numerical, analytic })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitaryDistanceBound {
    /// `2(e^{‖C‖} − 1)`.
    pub normalized: f64,
    /// `2·2ⁿ·(e^{‖C‖} − 1)`, the bound on the unnormalized `E[(ΔU)²]`.
    pub full: f64,
    /// Cumulant prediction `Tr[2I − e^C − e^{C†}]`.
    pub cumulant_estimate: f64,
}

/// Bounds on the mean squared Frobenius distance `E‖U − U₀‖₂²`.
pub fn unitary_distance_bound(series: &CumulantSeries) -> Result<UnitaryDistanceBound> {
    let dim = series.generator.dim() as f64;
    let normalized = 2.0 * series.generator_norm.exp_m1();
    let e = error_operator(series)?;
    let estimate = 2.0 * dim - 2.0 * e.trace().re;
    Ok(UnitaryDistanceBound {
        normalized,
        full: dim * normalized,
        cumulant_estimate: estimate,
    })
}

/// The unitary series of a configuration.
pub fn unitary_series(
    instance: &QaoaInstance,
    schedule: &Schedule,
    model: &NoiseModel,
    weight: CorrelationWeight,
) -> Result<CumulantSeries> {
    let frame = TogglingFrame::new(instance, schedule)?;
    unitary_cumulant_in_frame(&frame, model, weight)
}

/// `κ(O) = ‖Λ‖ ‖O²ρ₀‖₁ + ‖Λ‖² ‖Oρ₀‖₁²` for a diagonal `O`.
pub fn sampling_kappa(lambda_norm: f64, diag: &[f64], psi0: &StateVector) -> f64 {
    let o2: Vec<f64> = diag.iter().map(|d| d * d).collect();
    let o_rho = diag_state_trace_norm(diag, psi0);
    lambda_norm * diag_state_trace_norm(&o2, psi0) + lambda_norm * lambda_norm * o_rho * o_rho
}

/// Shot-noise corrections `(√(κ(O)/N_s), MSE correction)` with the MSE
/// correction `κ(O)/N_s + [√κ(O²) + 2‖Λ‖‖Oρ₀‖₁√κ(O)]/√N_s`.
pub fn finite_sampling_corrections(
    lambda: &DenseOperator,
    psi0: &StateVector,
    obs: &DiagonalObservable,
    shots: usize,
) -> Result<(f64, f64)> {
    let l = spectral_norm(lambda)?;
    finite_sampling_corrections_from_norm(l, psi0, obs, shots)
}

pub fn finite_sampling_corrections_from_norm(
    lambda_norm: f64,
    psi0: &StateVector,
    obs: &DiagonalObservable,
    shots: usize,
) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let ns = shots as f64;
    let k1 = sampling_kappa(lambda_norm, obs.diag(), psi0);
    let o2: Vec<f64> = obs.diag().iter().map(|d| d * d).collect();
    let k2 = sampling_kappa(lambda_norm, &o2, psi0);
    let o_rho = diag_state_trace_norm(obs.diag(), psi0);
    let abs = (k1 / ns).sqrt();
    let mse = k1 / ns + (k2.sqrt() + 2.0 * lambda_norm * o_rho * k1.sqrt()) / ns.sqrt();
    Ok((abs, mse))
}

/// Collects every bound for a configuration into one report.
pub fn bound_report(ctx: &BoundContext, config_id: impl Into<String>) -> Result<BoundReport> {
    let mut rep = BoundReport::new(config_id);
    let abs = abs_error_bound(ctx)?;
    rep.insert("abs_error", Flavor::Numerical, abs.numerical);
    rep.insert("abs_error", Flavor::Analytic, abs.analytic);
    rep.insert("abs_error_trace", Flavor::Numerical, abs.numerical_trace);
    rep.insert("abs_error_trace", Flavor::Analytic, abs.analytic_unclipped);
    if ctx.instance.c_max() != 0.0 {
        rep.insert("approx_ratio", Flavor::Numerical, abs.numerical_trace / ctx.instance.c_max());
        rep.insert("approx_ratio", Flavor::Analytic, abs.analytic_unclipped / ctx.instance.c_max());
    }

    let norms = ctx.analytic_norms();
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    let mut b1 = 0.0f64;
    let mut b2 = 0.0f64;
    for (se, (a1, a2)) in ctx.series.iter().zip(&norms) {
        c1 = c1.max(se.c1_norm()?);
        c2 = c2.max(se.c2_norm()?);
        b1 = b1.max(*a1);
        b2 = b2.max(*a2);
    }
    rep.insert("c1_norm", Flavor::Numerical, c1);
    rep.insert("c1_norm", Flavor::Analytic, b1);
    rep.insert("c2_norm", Flavor::Numerical, c2);
    rep.insert("c2_norm", Flavor::Analytic, b2);

    let mse = mse_bound_general(&ctx.lambdas, &ctx.psi0, &ctx.obs_sum)?;
    rep.insert("mse_general", Flavor::Numerical, mse.total);
    rep.insert("mse_general", Flavor::Analytic, mse_bound_general_analytic(ctx).total);
    if ctx.model.is_coherent() {
        let (m, h) = mse_bound_coherent(&ctx.instance, &ctx.schedule, &ctx.obs_sum.target, &ctx.model)?;
        rep.insert("mse_coherent", Flavor::Analytic, m);
        rep.notes.push(format!("h_E = {h}"));
    }

    let us = unitary_cumulant_in_frame(&ctx.frame, &ctx.model, ctx.weight)?;
    let ub = unitary_distance_bound(&us)?;
    let (u1, u2) = cumulant_norm_bounds_in(&ctx.instance, &ctx.schedule, None, &ctx.model, ctx.weight);
    let dim = ctx.instance.dim() as f64;
    rep.insert("unitary_distance_sq", Flavor::Numerical, ub.full);
    rep.insert("unitary_distance_sq", Flavor::Analytic, 2.0 * dim * (u1 + 0.5 * u2).exp_m1());
    rep.notes.push("gradient bounds conjugate O by the propagator after the differentiated block".into());
    Ok(rep)
}
