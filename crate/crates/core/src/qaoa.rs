//! QAOA schedules, ideal and faulty evolution, expectation values and exact
//! gradients.
//!
//! A schedule is a flat list of sub-blocks. Sub-block `s` applies
//! `exp(-i * sign_s * m_s * angle_s * H_s)` where `H_s` is the cost diagonal
//! or the transverse-field mixer and `m_s` the noise multiplier (1 when
//! ideal). Sub-blocks are applied in list order, so the first entry acts
//! first on |+⟩^⊗n.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseRealization;
use crate::statevec::{
    check_dense_qubits, complex_matmul, hermitian_propagator, mixer_slice, phase_slice,
    DenseOperator, DiagonalObservable, StateVector, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    Cost,
    Mixer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubBlock {
    pub kind: BlockKind,
    /// Angle magnitude as handed to the hardware, in radians.
    pub angle: f64,
    /// ±1, folded into the exponent.
    pub sign: f64,
    /// 1-based layer index the sub-block belongs to.
    pub layer: usize,
}

impl SubBlock {
    pub fn cost(angle: f64, layer: usize) -> Self {
        Self {
            kind: BlockKind::Cost,
            angle,
            sign: 1.0,
            layer,
        }
    }

    pub fn mixer(angle: f64, layer: usize) -> Self {
        Self {
            kind: BlockKind::Mixer,
            angle,
            sign: 1.0,
            layer,
        }
    }

    pub fn with_sign(mut self, sign: f64) -> Self {
        self.sign = sign;
        self
    }

    /// Signed coefficient `a_s` in `exp(-i a_s H_s)`.
    pub fn signed_angle(&self) -> f64 {
        self.sign * self.angle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    blocks: Vec<SubBlock>,
    p: usize,
    total_time: f64,
}

impl Schedule {
    /// Standard layers `U_M(β_j) U_C(γ_j)` for j = 1..p.
    pub fn from_angles(gammas: &[f64], betas: &[f64]) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: gammas.len(),
                got: betas.len(),
            });
        }
        let blocks = gammas
            .iter()
            .zip(betas)
            .enumerate()
            .flat_map(|(j, (&g, &b))| [SubBlock::cost(g, j + 1), SubBlock::mixer(b, j + 1)])
            .collect();
        Self::from_blocks(blocks, gammas.len())
    }

    /// Arbitrary sub-block list. `p` is the layer count reported to callers,
    /// which need not equal the number of distinct layer indices.
    pub fn from_blocks(blocks: Vec<SubBlock>, p: usize) -> Result<Self> {
        for b in &blocks {
            if !b.angle.is_finite() {
                return Err(Error::NonFinite("schedule angle"));
            }
            if b.sign != 1.0 && b.sign != -1.0 {
                return Err(Error::InvalidArgument(format!(
                    "sub-block sign must be ±1, got {}",
                    b.sign
                )));
            }
        }
        let total_time = blocks.iter().map(|b| b.angle.abs()).sum();
        Ok(Self {
            blocks,
            p,
            total_time,
        })
    }

    pub fn empty() -> Self {
        Self {
            blocks: Vec::new(),
            p: 0,
            total_time: 0.0,
        }
    }

    pub fn blocks(&self) -> &[SubBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of distinct layers actually present (largest layer index).
    pub fn num_layers(&self) -> usize {
        self.blocks.iter().map(|b| b.layer).max().unwrap_or(0)
    }

    /// `T = Σ |angle|` as stored at construction.
    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn recompute_total_time(&self) -> f64 {
        self.blocks.iter().map(|b| b.angle.abs()).sum()
    }

    /// `Σ |angle|` restricted to one kind.
    pub fn kind_time(&self, kind: BlockKind) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.kind == kind)
            .map(|b| b.angle.abs())
            .sum()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.angle).collect()
    }

    /// Same structure with new angle magnitudes.
    pub fn with_angles(&self, angles: &[f64]) -> Result<Self> {
        if angles.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                got: angles.len(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(angles)
            .map(|(b, &a)| SubBlock { angle: a, ..*b })
            .collect();
        Self::from_blocks(blocks, self.p)
    }

    pub fn count(&self, kind: BlockKind) -> usize {
        self.blocks.iter().filter(|b| b.kind == kind).count()
    }
}

/// A cost Hamiltonian together with the constants the bounds need.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaInstance {
    n: usize,
    cost: DiagonalObservable,
    c_max: f64,
    mixer_norm: f64,
}

impl QaoaInstance {
    pub fn new(cost: DiagonalObservable) -> Self {
        let n = cost.n();
        Self {
            n,
            c_max: cost.max(),
            mixer_norm: n as f64,
            cost,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn cost(&self) -> &DiagonalObservable {
        &self.cost
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// `‖H_C‖_∞`.
    pub fn cost_norm(&self) -> f64 {
        self.cost.norm_inf()
    }

    /// `‖H_M‖_∞ = n`.
    pub fn mixer_norm(&self) -> f64 {
        self.mixer_norm
    }

    pub fn generator_norm(&self, kind: BlockKind) -> f64 {
        match kind {
            BlockKind::Cost => self.cost_norm(),
            BlockKind::Mixer => self.mixer_norm,
        }
    }

    /// Dense generator `H_s` of a sub-block kind.
    pub fn dense_generator(&self, kind: BlockKind) -> Result<DenseOperator> {
        match kind {
            BlockKind::Cost => self.cost.to_dense(),
            BlockKind::Mixer => DenseOperator::transverse_field(self.n),
        }
    }
}

fn resolve_multipliers<'a>(
    schedule: &Schedule,
    realization: Option<&'a NoiseRealization>,
) -> Result<Option<&'a [f64]>> {
    match realization {
        None => Ok(None),
        Some(r) => {
            if r.multipliers().len() != schedule.len() {
                return Err(Error::MultiplierCount {
                    expected: schedule.len(),
                    got: r.multipliers().len(),
                });
            }
            Ok(Some(r.multipliers()))
        }
    }
}

fn apply_block(amps: &mut [C64], instance: &QaoaInstance, block: &SubBlock, mult: f64) {
    let a = block.signed_angle() * mult;
    match block.kind {
        BlockKind::Cost => phase_slice(amps, instance.cost.diag(), a),
        BlockKind::Mixer => mixer_slice(amps, instance.n, a),
    }
}

fn apply_block_inverse(amps: &mut [C64], instance: &QaoaInstance, block: &SubBlock) {
    let a = -block.signed_angle();
    match block.kind {
        BlockKind::Cost => phase_slice(amps, instance.cost.diag(), a),
        BlockKind::Mixer => mixer_slice(amps, instance.n, a),
    }
}

/// Runs the blocks in `range` on `state` in place with the given multipliers.
pub fn apply_blocks(
    state: &mut StateVector,
    instance: &QaoaInstance,
    schedule: &Schedule,
    range: std::ops::Range<usize>,
    multipliers: Option<&[f64]>,
) {
    for s in range {
        let m = multipliers.map_or(1.0, |m| m[s]);
        apply_block(state.amplitudes_mut(), instance, &schedule.blocks[s], m);
    }
}

/// `U |+⟩^⊗n`, with sub-block angles scaled by the realization's multipliers.
pub fn evolve(
    instance: &QaoaInstance,
    schedule: &Schedule,
    realization: Option<&NoiseRealization>,
) -> Result<StateVector> {
    let mults = resolve_multipliers(schedule, realization)?;
    evolve_with_multipliers(instance, schedule, mults)
}

pub fn evolve_with_multipliers(
    instance: &QaoaInstance,
    schedule: &Schedule,
    multipliers: Option<&[f64]>,
) -> Result<StateVector> {
    if let Some(m) = multipliers {
        if m.len() != schedule.len() {
            return Err(Error::MultiplierCount {
                expected: schedule.len(),
                got: m.len(),
            });
        }
    }
    let mut state = StateVector::plus(instance.n)?;
    apply_blocks(&mut state, instance, schedule, 0..schedule.len(), multipliers);
    Ok(state)
}

/// `Σ_z diag[z] |ψ_z|²`.
pub fn expectation(state: &StateVector, obs: &DiagonalObservable) -> Result<f64> {
    if state.n() != obs.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            got: obs.n(),
        });
    }
    Ok(state
        .amplitudes()
        .iter()
        .zip(obs.diag())
        .map(|(a, d)| d * a.norm_sqr())
        .sum())
}

pub fn approximation_ratio(value: f64, instance: &QaoaInstance) -> Result<f64> {
    if instance.c_max == 0.0 {
        return Err(Error::InvalidArgument("c_max is zero".into()));
    }
    Ok(value / instance.c_max)
}

/// Derivatives of `⟨obs⟩` with respect to every sub-block angle, by one
/// forward and one backward sweep.
pub fn gradients(
    instance: &QaoaInstance,
    schedule: &Schedule,
    obs: &DiagonalObservable,
) -> Result<Vec<f64>> {
    if obs.n() != instance.n {
        return Err(Error::DimensionMismatch {
            expected: instance.n,
            got: obs.n(),
        });
    }
    let mut phi = evolve(instance, schedule, None)?;
    let mut lambda = phi.clone();
    phase_diag_mul(lambda.amplitudes_mut(), obs.diag());

    let mut out = vec![0.0; schedule.len()];
    let mut scratch = phi.clone();
    for s in (0..schedule.len()).rev() {
        let block = &schedule.blocks[s];
        // scratch = H_s φ_s
        scratch.amplitudes_mut().copy_from_slice(phi.amplitudes());
        match block.kind {
            BlockKind::Cost => phase_diag_mul(scratch.amplitudes_mut(), instance.cost.diag()),
            BlockKind::Mixer => transverse_field_mul(&phi, &mut scratch),
        }
        // d/da ⟨O⟩ = 2 Re ⟨λ_s| (-i σ H_s) |φ_s⟩ = 2 σ Im ⟨λ_s|H_s φ_s⟩
        let overlap = lambda.inner(&scratch);
        out[s] = 2.0 * block.sign * overlap.im;
        apply_block_inverse(phi.amplitudes_mut(), instance, block);
        apply_block_inverse(lambda.amplitudes_mut(), instance, block);
    }
    Ok(out)
}

/// Single component of [`gradients`].
pub fn gradient(
    instance: &QaoaInstance,
    schedule: &Schedule,
    obs: &DiagonalObservable,
    index: usize,
) -> Result<f64> {
    if index >= schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "sub-block index {index} out of range for {} sub-blocks",
            schedule.len()
        )));
    }
    Ok(gradients(instance, schedule, obs)?[index])
}

fn phase_diag_mul(amps: &mut [C64], diag: &[f64]) {
    for (a, &d) in amps.iter_mut().zip(diag) {
        *a *= d;
    }
}

fn transverse_field_mul(src: &StateVector, dst: &mut StateVector) {
    let a = src.amplitudes();
    let n = src.n();
    for (z, out) in dst.amplitudes_mut().iter_mut().enumerate() {
        *out = (0..n).map(|q| a[z ^ (1 << q)]).sum();
    }
}

/// Dense product of the sub-blocks in `range`, later blocks on the left.
pub fn block_range_propagator(
    instance: &QaoaInstance,
    schedule: &Schedule,
    range: std::ops::Range<usize>,
    multipliers: Option<&[f64]>,
) -> Result<DenseOperator> {
    check_dense_qubits(instance.n)?;
    if range.end > schedule.len() || range.start > range.end {
        return Err(Error::InvalidArgument(format!(
            "sub-block range {range:?} invalid for {} sub-blocks",
            schedule.len()
        )));
    }
    let dim = instance.dim();
    let mut mat = DMatrix::<C64>::identity(dim, dim);
    for col in mat.column_iter_mut() {
        let mut col = col;
        let slice = col.as_mut_slice();
        for s in range.clone() {
            let m = multipliers.map_or(1.0, |m| m[s]);
            apply_block(slice, instance, &schedule.blocks[s], m);
        }
    }
    DenseOperator::from_matrix(mat)
}

/// Full `U` as a dense matrix.
pub fn dense_propagator(
    instance: &QaoaInstance,
    schedule: &Schedule,
    realization: Option<&NoiseRealization>,
) -> Result<DenseOperator> {
    let mults = resolve_multipliers(schedule, realization)?;
    block_range_propagator(instance, schedule, 0..schedule.len(), mults)
}

/// `Q_{k:j}`: ideal product of layers `j..=k` (1-based); identity when `j > k`.
pub fn partial_propagator(
    instance: &QaoaInstance,
    schedule: &Schedule,
    from_layer: usize,
    to_layer: usize,
) -> Result<DenseOperator> {
    check_dense_qubits(instance.n)?;
    if from_layer > to_layer {
        return Ok(DenseOperator::identity(instance.dim()));
    }
    let layers = schedule.num_layers();
    if from_layer == 0 || to_layer > layers {
        return Err(Error::InvalidArgument(format!(
            "layer range {from_layer}..={to_layer} outside 1..={layers}"
        )));
    }
    let start = schedule
        .blocks
        .iter()
        .position(|b| b.layer >= from_layer)
        .unwrap_or(schedule.len());
    let end = schedule
        .blocks
        .iter()
        .rposition(|b| b.layer <= to_layer)
        .map_or(start, |i| i + 1);
    block_range_propagator(instance, schedule, start..end.max(start), None)
}

/// One irreducible block of the permutation-symmetric decomposition.
#[derive(Debug, Clone)]
pub struct SpinSector {
    /// Twice the total spin.
    pub two_j: usize,
    /// Number of copies of the block in the full space.
    pub multiplicity: usize,
    /// Propagator restricted to the `2J+1`-dimensional block.
    pub unitary: DMatrix<C64>,
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Generators of one spin-J sector in the basis |J, m⟩, m = J..-J, which
/// carry Hamming weight `n/2 - m`.
pub(crate) struct SectorGenerators {
    pub(crate) cost: DenseOperator,
    pub(crate) mixer: DenseOperator,
}

pub(crate) fn sector_generators(instance: &QaoaInstance, two_j: usize) -> Result<SectorGenerators> {
    let n = instance.n;
    let d = two_j + 1;
    let j = two_j as f64 / 2.0;
    let w0 = (n - two_j) / 2;
    let weight_value = |w: usize| instance.cost.diag()[(1usize << w) - 1];
    let cost_diag: Vec<f64> = (0..d).map(|k| weight_value(w0 + k)).collect();
    let mut mixer = DMatrix::<C64>::zeros(d, d);
    for k in 0..d - 1 {
        // m = j - k, coupling |m⟩ ↔ |m-1⟩ through 2 J_x.
        let m = j - k as f64;
        let c = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
        mixer[(k, k + 1)] = C64::new(c, 0.0);
        mixer[(k + 1, k)] = C64::new(c, 0.0);
    }
    Ok(SectorGenerators {
        cost: DenseOperator::from_real_diagonal(&cost_diag),
        mixer: DenseOperator::hermitian(mixer)?,
    })
}

/// Propagator per spin sector for a cost that depends only on Hamming weight.
///
/// The full unitary is `⊕_J (I_{d_J} ⊗ U_J)`, so spectral distances reduce to
/// the sector maximum and squared Frobenius distances to a weighted sum.
pub fn sector_propagators(
    instance: &QaoaInstance,
    schedule: &Schedule,
    multipliers: Option<&[f64]>,
) -> Result<Vec<SpinSector>> {
    if !instance.cost.is_permutation_symmetric() {
        return Err(Error::InvalidArgument(
            "sector decomposition needs a permutation-symmetric cost".into(),
        ));
    }
    if let Some(m) = multipliers {
        if m.len() != schedule.len() {
            return Err(Error::MultiplierCount {
                expected: schedule.len(),
                got: m.len(),
            });
        }
    }
    let n = instance.n;
    let mut out = Vec::new();
    let mut two_j = n;
    loop {
        let k = (n - two_j) / 2;
        let multiplicity =
            (binomial(n, k) - if k == 0 { 0.0 } else { binomial(n, k - 1) }).round() as usize;
        let gens = sector_generators(instance, two_j)?;
        let d = two_j + 1;
        let mut u = DMatrix::<C64>::identity(d, d);
        for (s, b) in schedule.blocks.iter().enumerate() {
            let a = b.signed_angle() * multipliers.map_or(1.0, |m| m[s]);
            let step = match b.kind {
                BlockKind::Cost => {
                    let mut m = DMatrix::<C64>::zeros(d, d);
                    for i in 0..d {
                        let (sn, c) = (a * gens.cost.matrix()[(i, i)].re).sin_cos();
                        m[(i, i)] = C64::new(c, -sn);
                    }
                    m
                }
                BlockKind::Mixer => hermitian_propagator(&gens.mixer, a)?.into_matrix(),
            };
            u = complex_matmul(&step, &u);
        }
        out.push(SpinSector {
            two_j,
            multiplicity,
            unitary: u,
        });
        if two_j < 2 {
            break;
        }
        two_j -= 2;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{matrix_exp, spectral_norm};
    use std::f64::consts::PI;

    fn ring_ising(n: usize) -> QaoaInstance {
        let diag = (0..1usize << n)
            .map(|z| {
                (0..n)
                    .map(|i| {
                        let a = 1.0 - 2.0 * ((z >> i) & 1) as f64;
                        let b = 1.0 - 2.0 * ((z >> ((i + 1) % n)) & 1) as f64;
                        a * b
                    })
                    .sum()
            })
            .collect();
        QaoaInstance::new(DiagonalObservable::new("ising", diag).unwrap())
    }

    fn projector0(n: usize) -> QaoaInstance {
        let mut d = vec![0.0; 1 << n];
        d[0] = 1.0;
        QaoaInstance::new(DiagonalObservable::new("grover", d).unwrap())
    }

    fn exp_minus_i(h: &DenseOperator, a: f64) -> DenseOperator {
        matrix_exp(&h.scale(C64::new(0.0, -a))).unwrap()
    }

    #[test]
    fn total_time_sums_angles() {
        let s = Schedule::from_angles(&[0.5, -0.2], &[0.3, 0.1]).unwrap();
        assert!((s.total_time() - 1.1).abs() < 1e-12);
        assert_eq!(s.total_time(), s.recompute_total_time());
        assert_eq!(s.len(), 4);
        assert_eq!(s.p(), 2);
        assert!(Schedule::from_angles(&[0.1], &[]).is_err());
    }

    #[test]
    fn p_zero_is_plus_state() {
        let inst = ring_ising(3);
        let psi = evolve(&inst, &Schedule::empty(), None).unwrap();
        assert_eq!(psi, StateVector::plus(3).unwrap());
    }

    #[test]
    fn unit_multipliers_match_ideal_bitwise() {
        let inst = ring_ising(4);
        let s = Schedule::from_angles(&[0.4, 0.9], &[0.7, 0.2]).unwrap();
        let ones = NoiseRealization::new(vec![1.0; s.len()], 0);
        assert_eq!(
            evolve(&inst, &s, Some(&ones)).unwrap(),
            evolve(&inst, &s, None).unwrap()
        );
        let short = NoiseRealization::new(vec![1.0; 3], 0);
        assert!(matches!(
            evolve(&inst, &s, Some(&short)),
            Err(Error::MultiplierCount { .. })
        ));
    }

    #[test]
    fn evolve_matches_dense_product_oracle() {
        let inst = ring_ising(2);
        let s = Schedule::from_angles(&[0.5], &[0.3]).unwrap();
        let hc = inst.cost().to_dense().unwrap();
        let hm = DenseOperator::transverse_field(2).unwrap();
        let u = exp_minus_i(&hm, 0.3).matmul(&exp_minus_i(&hc, 0.5));
        let oracle = u.apply(&StateVector::plus(2).unwrap()).unwrap();
        let got = evolve(&inst, &s, None).unwrap();
        for (a, b) in got.amplitudes().iter().zip(oracle.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn expectation_cases() {
        let g = projector0(5);
        let plus = StateVector::plus(5).unwrap();
        assert!((expectation(&plus, g.cost()).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        let zero = StateVector::basis(5, 0).unwrap();
        assert_eq!(expectation(&zero, g.cost()).unwrap(), 1.0);
        let is = ring_ising(6);
        assert!(expectation(&StateVector::plus(6).unwrap(), is.cost()).unwrap().abs() < 1e-12);
        assert!(expectation(&plus, is.cost()).is_err());
    }

    #[test]
    fn approximation_ratio_cases() {
        let inst = ring_ising(4);
        assert_eq!(approximation_ratio(4.0, &inst).unwrap(), 1.0);
        assert_eq!(approximation_ratio(0.0, &inst).unwrap(), 0.0);
        let zero = QaoaInstance::new(DiagonalObservable::new("z", vec![0.0; 4]).unwrap());
        assert!(approximation_ratio(1.0, &zero).is_err());
    }

    #[test]
    fn gradient_of_identity_vanishes() {
        let inst = ring_ising(3);
        let s = Schedule::from_angles(&[0.4, 1.1], &[0.2, 0.5]).unwrap();
        let id = DiagonalObservable::scaled_identity("I", 3, 1.0).unwrap();
        for g in gradients(&inst, &s, &id).unwrap() {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let inst = ring_ising(2);
        let s = Schedule::from_angles(&[0.5], &[0.3]).unwrap();
        let h = 1e-5;
        let g = gradients(&inst, &s, inst.cost()).unwrap();
        for (k, gk) in g.iter().enumerate() {
            let mut up = s.angles();
            up[k] += h;
            let mut dn = s.angles();
            dn[k] -= h;
            let f = |a: &[f64]| {
                let sc = s.with_angles(a).unwrap();
                expectation(&evolve(&inst, &sc, None).unwrap(), inst.cost()).unwrap()
            };
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!((gk - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{gk} vs {fd}");
        }
        assert!(gradient(&inst, &s, inst.cost(), 2).is_err());
    }

    #[test]
    fn gradient_respects_sign() {
        let inst = projector0(3);
        let blocks = vec![
            SubBlock::cost(0.7, 1).with_sign(-1.0),
            SubBlock::mixer(0.4, 1),
            SubBlock::cost(0.3, 2),
            SubBlock::mixer(0.9, 2),
        ];
        let s = Schedule::from_blocks(blocks, 2).unwrap();
        let g = gradients(&inst, &s, inst.cost()).unwrap();
        let h = 1e-6;
        let mut a = s.angles();
        a[0] += h;
        let up = expectation(&evolve(&inst, &s.with_angles(&a).unwrap(), None).unwrap(), inst.cost()).unwrap();
        a[0] -= 2.0 * h;
        let dn = expectation(&evolve(&inst, &s.with_angles(&a).unwrap(), None).unwrap(), inst.cost()).unwrap();
        assert!((g[0] - (up - dn) / (2.0 * h)).abs() < 1e-7);
    }

    #[test]
    fn dense_propagator_cases() {
        let inst = ring_ising(3);
        let id = dense_propagator(&inst, &Schedule::empty(), None).unwrap();
        assert!(id.max_abs_diff(&DenseOperator::identity(8)) < 1e-15);

        let s = Schedule::from_angles(&[0.4, 1.3], &[0.8, 0.25]).unwrap();
        let u = dense_propagator(&inst, &s, None).unwrap();
        assert!(u.unitarity_defect() < 1e-10);
        let via_u = u.apply(&StateVector::plus(3).unwrap()).unwrap();
        let direct = evolve(&inst, &s, None).unwrap();
        for (a, b) in via_u.amplitudes().iter().zip(direct.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_propagator_composition() {
        let inst = ring_ising(3);
        let s = Schedule::from_angles(&[0.4, 1.3, 0.2], &[0.8, 0.25, 0.6]).unwrap();
        let full = partial_propagator(&inst, &s, 1, 3).unwrap();
        assert!(full.max_abs_diff(&dense_propagator(&inst, &s, None).unwrap()) < 1e-12);
        assert!(partial_propagator(&inst, &s, 3, 2)
            .unwrap()
            .max_abs_diff(&DenseOperator::identity(8))
            < 1e-15);
        for j in 1..3 {
            let upper = partial_propagator(&inst, &s, j + 1, 3).unwrap();
            let lower = partial_propagator(&inst, &s, 1, j).unwrap();
            assert!(upper.matmul(&lower).max_abs_diff(&full) < 1e-10);
        }
        assert!(partial_propagator(&inst, &s, 0, 2).is_err());
        assert!(partial_propagator(&inst, &s, 1, 4).is_err());
    }

    #[test]
    fn sectors_reproduce_dense_distances() {
        let n = 4;
        let inst = projector0(n);
        let blocks = (0..4)
            .flat_map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                [SubBlock::cost(PI, k + 1).with_sign(sign), SubBlock::mixer(PI / n as f64, k + 1)]
            })
            .collect();
        let s = Schedule::from_blocks(blocks, 2).unwrap();
        let mults: Vec<f64> = (0..s.len()).map(|i| 1.0 + 0.03 * ((i * 7 % 5) as f64 - 2.0)).collect();

        let u0 = block_range_propagator(&inst, &s, 0..s.len(), None).unwrap();
        let u = block_range_propagator(&inst, &s, 0..s.len(), Some(&mults)).unwrap();
        let diff = &u - &u0;
        let dense_inf = spectral_norm(&diff).unwrap();
        let dense_f2: f64 = diff.matrix().iter().map(|z| z.norm_sqr()).sum();

        let s0 = sector_propagators(&inst, &s, None).unwrap();
        let s1 = sector_propagators(&inst, &s, Some(&mults)).unwrap();
        assert_eq!(s0.iter().map(|x| x.multiplicity * (x.two_j + 1)).sum::<usize>(), 16);
        let mut inf = 0.0f64;
        let mut f2 = 0.0;
        for (a, b) in s1.iter().zip(&s0) {
            let d = DenseOperator::from_matrix(&a.unitary - &b.unitary).unwrap();
            inf = inf.max(spectral_norm(&d).unwrap());
            f2 += a.multiplicity as f64 * d.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        assert!((inf - dense_inf).abs() < 1e-10, "{inf} vs {dense_inf}");
        assert!((f2 - dense_f2).abs() < 1e-10);
    }

    #[test]
    fn sectors_reject_asymmetric_cost() {
        let inst = QaoaInstance::new(DiagonalObservable::new("x", vec![0.0, 1.0, 2.0, 3.0]).unwrap());
        let s = Schedule::from_angles(&[0.1], &[0.2]).unwrap();
        assert!(sector_propagators(&inst, &s, None).is_err());
    }
}
