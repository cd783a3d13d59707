//! Dense statevector and operator primitives.
//!
//! States are plain amplitude vectors over the computational basis with
//! qubit `q` mapped to bit `q` of the basis index. Operators are dense
//! column-major complex matrices; they are only ever built for the small
//! systems (at most [`MAX_DENSE_QUBITS`] qubits) the cumulant and bound
//! paths need. Ensemble simulation works on states alone and goes up to
//! [`MAX_STATE_QUBITS`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest register a statevector may hold.
pub const MAX_STATE_QUBITS: usize = 20;
/// Largest register for which dense operators are materialized.
pub const MAX_DENSE_QUBITS: usize = 12;
/// Above this dimension norms switch from a full SVD to iterative methods.
pub const SVD_DIM_LIMIT: usize = 1024;

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 10_000;
const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn check_state_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_STATE_QUBITS {
        return Err(Error::Capacity {
            what: "statevector",
            got: n,
            min: 1,
            max: MAX_STATE_QUBITS,
        });
    }
    Ok(())
}

pub(crate) fn check_dense_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity {
            what: "dense operator",
            got: n,
            min: 1,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Multiplies every amplitude by `exp(-i * angle * diag[z])`.
pub fn phase_slice(amps: &mut [C64], diag: &[f64], angle: f64) {
    debug_assert_eq!(amps.len(), diag.len());
    for (a, &d) in amps.iter_mut().zip(diag) {
        let (s, c) = (angle * d).sin_cos();
        *a *= C64::new(c, -s);
    }
}

/// Applies `exp(-i * angle * X_q)` on every qubit of an `n`-qubit amplitude slice.
pub fn mixer_slice(amps: &mut [C64], n: usize, angle: f64) {
    debug_assert_eq!(amps.len(), 1 << n);
    let (s, c) = angle.sin_cos();
    let ms = C64::new(0.0, -s);
    for q in 0..n {
        let stride = 1usize << q;
        for base in (0..amps.len()).step_by(stride << 1) {
            let (lo, hi) = amps[base..base + (stride << 1)].split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let x0 = *a0;
                let x1 = *a1;
                *a0 = x0 * c + x1 * ms;
                *a1 = x0 * ms + x1 * c;
            }
        }
    }
}

/// Pure state of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// The uniform superposition |+⟩^⊗n.
    pub fn plus(n: usize) -> Result<Self> {
        check_state_qubits(n)?;
        let dim = 1usize << n;
        let a = (dim as f64).sqrt().recip();
        Ok(Self {
            n,
            amps: vec![C64::new(a, 0.0); dim],
        })
    }

    /// Computational basis state |z⟩.
    pub fn basis(n: usize, z: usize) -> Result<Self> {
        check_state_qubits(n)?;
        let dim = 1usize << n;
        if z >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {z} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[z] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        check_state_qubits(n)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_phase_in_place(&mut self, obs: &DiagonalObservable, angle: f64) -> Result<()> {
        if obs.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: obs.n(),
            });
        }
        phase_slice(&mut self.amps, obs.diag(), angle);
        Ok(())
    }

    pub fn apply_mixer_in_place(&mut self, angle: f64) {
        mixer_slice(&mut self.amps, self.n, angle);
    }

    /// Probability of each computational basis outcome.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps)
    }
}

/// |+⟩^⊗n.
pub fn plus_state(n: usize) -> Result<StateVector> {
    StateVector::plus(n)
}

/// `exp(-i * angle * H)` for a diagonal `H`.
pub fn apply_phase(state: &StateVector, obs: &DiagonalObservable, angle: f64) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_phase_in_place(obs, angle)?;
    Ok(out)
}

/// `exp(-i * angle * Σ_q X_q)`.
pub fn apply_mixer(state: &StateVector, angle: f64) -> StateVector {
    let mut out = state.clone();
    out.apply_mixer_in_place(angle);
    out
}

/// Real diagonal observable over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    n: usize,
    diag: Vec<f64>,
    label: String,
}

impl DiagonalObservable {
    pub fn new(label: impl Into<String>, diag: Vec<f64>) -> Result<Self> {
        let dim = diag.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "diagonal length {dim} is not a power of two"
            )));
        }
        if diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("observable diagonal"));
        }
        let n = dim.trailing_zeros() as usize;
        check_state_qubits(n)?;
        Ok(Self {
            n,
            diag,
            label: label.into(),
        })
    }

    /// Identity of the given size, scaled.
    pub fn scaled_identity(label: impl Into<String>, n: usize, scale: f64) -> Result<Self> {
        check_state_qubits(n)?;
        Self::new(label, vec![scale; 1 << n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max(&self) -> f64 {
        self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Operator norm, `max |diag|`.
    pub fn norm_inf(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Smallest singular value, `min |diag|`.
    pub fn min_abs(&self) -> f64 {
        self.diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()))
    }

    /// `H|z⟩ = diag[z]|z⟩`.
    pub fn act_on_basis(&self, z: usize) -> f64 {
        self.diag[z]
    }

    /// Entrywise square, the diagonal of `H²`.
    pub fn squared(&self) -> DiagonalObservable {
        Self {
            n: self.n,
            diag: self.diag.iter().map(|d| d * d).collect(),
            label: format!("({})^2", self.label),
        }
    }

    /// True when the diagonal only depends on the Hamming weight of the index.
    pub fn is_permutation_symmetric(&self) -> bool {
        let mut by_weight = vec![None; self.n + 1];
        for (z, &d) in self.diag.iter().enumerate() {
            let w = z.count_ones() as usize;
            match by_weight[w] {
                None => by_weight[w] = Some(d),
                Some(v) if v == d => {}
                Some(_) => return false,
            }
        }
        true
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        check_dense_qubits(self.n)?;
        Ok(DenseOperator::from_real_diagonal(&self.diag))
    }
}

/// Square complex matrix acting on a `2ⁿ`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: DMatrix<C64>,
    hermitian: bool,
}

impl DenseOperator {
    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        Ok(Self {
            mat,
            hermitian: false,
        })
    }

    /// Wraps a matrix that is known to be Hermitian, verifying the claim.
    pub fn hermitian(mat: DMatrix<C64>) -> Result<Self> {
        let op = Self::from_matrix(mat)?;
        let defect = op.hermitian_defect();
        if defect >= HERMITIAN_TOL * op.mat.camax().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (max |A - A†| = {defect:e})"
            )));
        }
        Ok(Self {
            hermitian: true,
            ..op
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut mat = DMatrix::zeros(dim, dim);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(d, 0.0);
        }
        Self {
            mat,
            hermitian: true,
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(state: &StateVector) -> Self {
        let v = state.to_dvector();
        Self {
            mat: &v * v.adjoint(),
            hermitian: true,
        }
    }

    /// Dense `Σ_q X_q` on `n` qubits.
    pub fn transverse_field(n: usize) -> Result<Self> {
        check_dense_qubits(n)?;
        let dim = 1usize << n;
        let mut mat = DMatrix::zeros(dim, dim);
        for z in 0..dim {
            for q in 0..n {
                mat[(z ^ (1 << q), z)] += C64::new(1.0, 0.0);
            }
        }
        Ok(Self {
            mat,
            hermitian: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// Whether the operator was constructed as Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `max |A - A†|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            mat: &self.mat * s,
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn matmul(&self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            mat: complex_matmul(&self.mat, &rhs.mat),
            hermitian: false,
        }
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &DenseOperator) -> DenseOperator {
        let ua = complex_matmul(&u.mat, &self.mat);
        DenseOperator {
            mat: complex_matmul(&ua, &u.mat.adjoint()),
            hermitian: self.hermitian,
        }
    }

    /// Left-multiplies by a real diagonal.
    pub fn diag_mul_left(&self, diag: &[f64]) -> DenseOperator {
        let mut mat = self.mat.clone();
        for (i, &d) in diag.iter().enumerate() {
            mat.row_mut(i).scale_mut(d);
        }
        DenseOperator {
            mat,
            hermitian: false,
        }
    }

    /// Right-multiplies by a real diagonal.
    pub fn diag_mul_right(&self, diag: &[f64]) -> DenseOperator {
        let mut mat = self.mat.clone();
        for (j, &d) in diag.iter().enumerate() {
            mat.column_mut(j).scale_mut(d);
        }
        DenseOperator {
            mat,
            hermitian: false,
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        let v = &self.mat * state.to_dvector();
        StateVector::from_amplitudes(v.as_slice().to_vec())
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max |U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = complex_matmul(&self.mat.adjoint(), &self.mat);
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        prod.iter()
            .zip(id.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            mat: &self.mat + &rhs.mat,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            mat: &self.mat - &rhs.mat,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.matmul(rhs)
    }
}

/// Complex product routed through real GEMM for all but small sizes.
pub fn complex_matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    if a.nrows() < 64 {
        return a * b;
    }
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

fn ensure_finite(a: &DenseOperator, what: &'static str) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// All singular values in descending order.
pub fn singular_values(a: &DenseOperator) -> Result<Vec<f64>> {
    ensure_finite(a, "operator")?;
    let mut sv: Vec<f64> = if a.dim() <= SVD_DIM_LIMIT {
        a.mat.clone().svd(false, false).singular_values.iter().copied().collect()
    } else {
        let gram = DenseOperator {
            mat: complex_matmul(&a.mat.adjoint(), &a.mat),
            hermitian: true,
        };
        gram.mat
            .symmetric_eigenvalues()
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .collect()
    };
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Largest singular value, `‖A‖_∞`.
pub fn spectral_norm(a: &DenseOperator) -> Result<f64> {
    ensure_finite(a, "operator")?;
    if a.dim() <= SVD_DIM_LIMIT {
        return Ok(a
            .mat
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0, |m: f64, &s| m.max(s)));
    }
    Ok(power_iteration_norm(&a.mat))
}

/// `sqrt(λ_max(A†A))` by power iteration.
pub fn power_iteration_norm(a: &DMatrix<C64>) -> f64 {
    let dim = a.ncols();
    let ah = a.adjoint();
    // Deterministic start with no special symmetry.
    let mut v = DVector::<C64>::from_fn(dim, |i, _| {
        C64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0)
    });
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let w = &ah * (a * &v);
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / C64::new(next, 0.0);
        if (next - lambda).abs() <= POWER_ITER_TOL * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Sum of singular values, `‖A‖_1`.
pub fn trace_norm(a: &DenseOperator) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// `sqrt(Tr[(A-B)†(A-B)])`.
pub fn frobenius_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(a.mat
        .iter()
        .zip(b.mat.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `‖A ψ⟩⟨ψ|‖_1 = ‖Aψ‖·‖ψ‖`, exact for the rank-one product.
pub fn trace_norm_with_pure_state(a: &DenseOperator, state: &StateVector) -> Result<f64> {
    let v = a.apply(state)?;
    Ok(v.norm_sqr().sqrt() * state.norm_sqr().sqrt())
}

const PADE_THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17_297_280.0,
            8_648_640.0,
            1_995_840.0,
            277_200.0,
            25_200.0,
            1_512.0,
            56.0,
            1.0,
        ],
        9 => &[
            17_643_225_600.0,
            8_821_612_800.0,
            2_075_673_600.0,
            302_702_400.0,
            30_270_240.0,
            2_162_160.0,
            110_880.0,
            3_960.0,
            90.0,
            1.0,
        ],
        _ => &[
            64_764_752_532_480_000.0,
            32_382_376_266_240_000.0,
            7_771_770_303_897_600.0,
            1_187_353_796_428_800.0,
            129_060_195_264_000.0,
            10_559_470_521_600.0,
            670_442_572_800.0,
            33_522_128_640.0,
            1_323_241_920.0,
            40_840_800.0,
            960_960.0,
            16_380.0,
            182.0,
            1.0,
        ],
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn real_scaled(a: &DMatrix<C64>, s: f64) -> DMatrix<C64> {
    a * C64::new(s, 0.0)
}

/// `exp(A)` for a general complex matrix by scaling and squaring with a
/// diagonal Padé approximant of degree 3, 5, 7, 9 or 13.
pub fn matrix_exp(a: &DenseOperator) -> Result<DenseOperator> {
    ensure_finite(a, "matrix_exp input")?;
    let dim = a.dim();
    if dim == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(&a.mat);
    let id = DMatrix::<C64>::identity(dim, dim);
    if norm == 0.0 {
        return Ok(DenseOperator::identity(dim));
    }

    let (u, v, squarings) = if let Some(&(m, _)) = PADE_THETA[..4].iter().find(|(_, t)| norm <= *t) {
        let b = pade_coefficients(m);
        let a2 = complex_matmul(&a.mat, &a.mat);
        let mut powers = vec![id.clone(), a2.clone()];
        for k in 2..=m / 2 {
            let next = complex_matmul(&powers[k - 1], &a2);
            powers.push(next);
        }
        let mut u_inner = DMatrix::<C64>::zeros(dim, dim);
        let mut v = DMatrix::<C64>::zeros(dim, dim);
        for (k, p) in powers.iter().enumerate() {
            u_inner += real_scaled(p, b[2 * k + 1]);
            v += real_scaled(p, b[2 * k]);
        }
        (complex_matmul(&a.mat, &u_inner), v, 0u32)
    } else {
        let theta13 = PADE_THETA[4].1;
        let s = (norm / theta13).log2().ceil().max(0.0) as u32;
        let scaled = real_scaled(&a.mat, 0.5f64.powi(s as i32));
        let b = pade_coefficients(13);
        let a2 = complex_matmul(&scaled, &scaled);
        let a4 = complex_matmul(&a2, &a2);
        let a6 = complex_matmul(&a4, &a2);
        let u_hi = real_scaled(&a6, b[13]) + real_scaled(&a4, b[11]) + real_scaled(&a2, b[9]);
        let u_inner = complex_matmul(&a6, &u_hi)
            + real_scaled(&a6, b[7])
            + real_scaled(&a4, b[5])
            + real_scaled(&a2, b[3])
            + real_scaled(&id, b[1]);
        let u = complex_matmul(&scaled, &u_inner);
        let v_hi = real_scaled(&a6, b[12]) + real_scaled(&a4, b[10]) + real_scaled(&a2, b[8]);
        let v = complex_matmul(&a6, &v_hi)
            + real_scaled(&a6, b[6])
            + real_scaled(&a4, b[4])
            + real_scaled(&a2, b[2])
            + real_scaled(&id, b[0]);
        (u, v, s)
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidArgument("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = complex_matmul(&r, &r);
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix_exp result"));
    }
    Ok(DenseOperator {
        mat: r,
        hermitian: false,
    })
}

/// `exp(-i t H)` for Hermitian `H` via its eigendecomposition.
pub fn hermitian_propagator(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    ensure_finite(h, "hermitian_propagator input")?;
    if !h.is_hermitian() {
        return Err(Error::InvalidArgument(
            "hermitian_propagator requires an operator flagged Hermitian".into(),
        ));
    }
    let eig = h.mat.clone().symmetric_eigen();
    let phases = DMatrix::<C64>::from_diagonal(&eig.eigenvalues.map(|l| {
        let (s, c) = (t * l).sin_cos();
        C64::new(c, -s)
    }));
    let v = &eig.eigenvectors;
    let mat = complex_matmul(&complex_matmul(v, &phases), &v.adjoint());
    Ok(DenseOperator {
        mat,
        hermitian: false,
    })
}
