//! Scaling-law fits by ordinary least squares on log-transformed data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default weak-noise window bound on `Γp*`.
pub const WEAK_WINDOW_MAX: f64 = 0.5;
/// Default strong-noise window bound on `Γp*`.
pub const STRONG_WINDOW_MIN: f64 = 1.0;
/// Default coherent window bound on `ηp*`.
pub const COHERENT_WINDOW_MAX: f64 = 1.0;
pub const VALID_R_SQUARED: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    ExpDecay,
    SquaredExpDecay,
    PowerLaw,
    Saturation,
    LayerGrowth,
}

/// Which points enter a fit, selected on `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSpec {
    All,
    /// `x < bound`.
    Below(f64),
    /// `x > bound`.
    Above(f64),
    /// `lo ≤ x ≤ hi`.
    Between(f64, f64),
}

impl WindowSpec {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            WindowSpec::All => true,
            WindowSpec::Below(b) => x < b,
            WindowSpec::Above(b) => x > b,
            WindowSpec::Between(lo, hi) => lo <= x && x <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: BTreeMap<String, f64>,
    pub r_squared: f64,
    /// Smallest and largest `x` that entered the fit; refitting with
    /// `WindowSpec::Between(window.0, window.1)` selects the same points.
    pub window: (f64, f64),
    pub points: usize,
    pub valid: bool,
}

impl FitResult {
    fn new(model: FitModel, params: Vec<(&str, f64)>, r_squared: f64, xs: &[f64]) -> Result<Self> {
        if params.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("fit parameter"));
        }
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            model,
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            r_squared,
            window: (lo, hi),
            points: xs.len(),
            valid: r_squared >= VALID_R_SQUARED,
        })
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec::Between(self.window.0, self.window.1)
    }
}

/// Straight-line OLS. Returns `(intercept, slope, r²)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Window("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok((intercept, slope, r_squared(x, y, |v| intercept + slope * v)))
}

fn r_squared(x: &[f64], y: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - f(*a)).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

fn select(x: &[f64], y: &[f64], window: WindowSpec, need: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, _)| window.contains(**a))
        .map(|(a, b)| (*a, *b))
        .unzip();
    if xs.is_empty() {
        return Err(Error::Window(format!("no points in window {window:?}")));
    }
    if xs.len() < need {
        return Err(Error::InsufficientData { need, got: xs.len() });
    }
    Ok((xs, ys))
}

fn require_positive(v: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = v.iter().find(|&&a| a <= 0.0) {
        return Err(Error::Window(format!("nonpositive {what} {bad} in window")));
    }
    Ok(())
}

/// `y ≈ A e^{−r x}` from `ln y` against `x`.
///
/// Also reports `rate_unit_amplitude`, the least-squares rate with `A = 1`.
pub fn fit_exp_decay(x: &[f64], y: &[f64], window: WindowSpec) -> Result<FitResult> {
    let (xs, ys) = select(x, y, window, 4)?;
    require_positive(&ys, "y")?;
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (c, m, r2) = linear_regression(&xs, &ly)?;
    let sxx: f64 = xs.iter().map(|v| v * v).sum();
    let constrained = -xs.iter().zip(&ly).map(|(a, b)| a * b).sum::<f64>() / sxx;
    FitResult::new(
        FitModel::ExpDecay,
        vec![("amplitude", c.exp()), ("rate", -m), ("rate_unit_amplitude", constrained)],
        r2,
        &xs,
    )
}

/// `y ≈ exp(−c x^k)` from `ln(−ln y)` against `ln x`.
pub fn fit_squared_exp(x: &[f64], y: &[f64], window: WindowSpec) -> Result<FitResult> {
    let (xs, ys) = select(x, y, window, 4)?;
    require_positive(&xs, "x")?;
    if let Some(bad) = ys.iter().find(|&&v| v <= 0.0 || v >= 1.0) {
        return Err(Error::Window(format!("y = {bad} outside (0, 1) in window")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let lly: Vec<f64> = ys.iter().map(|v| (-v.ln()).ln()).collect();
    let (c, k, r2) = linear_regression(&lx, &lly)?;
    FitResult::new(
        FitModel::SquaredExpDecay,
        vec![("prefactor", c.exp()), ("exponent", k)],
        r2,
        &xs,
    )
}

/// `y ≈ A x^{−α}` from `ln y` against `ln x`.
pub fn fit_power_law(x: &[f64], y: &[f64], window: WindowSpec) -> Result<FitResult> {
    let (xs, ys) = select(x, y, window, 4)?;
    require_positive(&xs, "x")?;
    require_positive(&ys, "y")?;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (c, m, r2) = linear_regression(&lx, &ly)?;
    FitResult::new(FitModel::PowerLaw, vec![("prefactor", c.exp()), ("alpha", -m)], r2, &xs)
}

/// `y ≈ A·2^{−ξ n}` from `log₂ y` against `n`.
pub fn fit_saturation(n: &[f64], y: &[f64]) -> Result<FitResult> {
    let (xs, ys) = select(n, y, WindowSpec::All, 3)?;
    require_positive(&ys, "saturated value")?;
    let ly: Vec<f64> = ys.iter().map(|v| v.log2()).collect();
    let (c, m, r2) = linear_regression(&xs, &ly)?;
    FitResult::new(FitModel::Saturation, vec![("prefactor", c.exp2()), ("xi", -m)], r2, &xs)
}

/// `p* ≈ a₁ 2^{n/2} + a₂`.
pub fn fit_layer_growth(n: &[f64], p_star: &[f64]) -> Result<FitResult> {
    let (xs, ys) = select(n, p_star, WindowSpec::All, 3)?;
    let sq: Vec<f64> = xs.iter().map(|v| (0.5 * v).exp2()).collect();
    let (a2, a1, r2) = linear_regression(&sq, &ys)?;
    FitResult::new(FitModel::LayerGrowth, vec![("a1", a1), ("a2", a2)], r2, &xs)
}

/// `y ≈ A x^k` over the pre-saturation points `y < y_max`.
pub fn fit_unitary_distance(x: &[f64], y: &[f64], y_max: f64) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **b < y_max && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if xs.is_empty() {
        return Err(Error::Window(format!("no points with 0 < y < {y_max}")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (c, k, r2) = linear_regression(&lx, &ly)?;
    FitResult::new(FitModel::PowerLaw, vec![("prefactor", c.exp()), ("exponent", k)], r2, &xs)
}

/// `𝒮 = (v − v_sat)/(v₀ − v_sat)`.
pub fn decay_function(values: &[f64], saturated: f64, noiseless: f64) -> Result<Vec<f64>> {
    let d = noiseless - saturated;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::InvalidArgument(
            "noiseless and saturated values coincide".into(),
        ));
    }
    Ok(values.iter().map(|v| (v - saturated) / d).collect())
}

/// Indices of the points up to and including the first local minimum of
/// `y`, in increasing `x`. Ties in `x` keep input order.
pub fn initial_decay(x: &[f64], y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len().min(y.len())).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut keep = Vec::with_capacity(idx.len());
    for &i in &idx {
        if let Some(&prev) = keep.last() {
            if y[i] >= y[prev] {
                break;
            }
        }
        keep.push(i);
    }
    keep
}
