//! `fit`: scaling-law fits over sweep and digitization CSV files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};
use precqaoa::fitting::{
    decay_function, fit_exp_decay, initial_decay, fit_layer_growth, fit_power_law, fit_saturation, fit_squared_exp,
    fit_unitary_distance, COHERENT_WINDOW_MAX, STRONG_WINDOW_MIN, WEAK_WINDOW_MAX,
};
use precqaoa::{FitResult, WindowSpec};
use serde::{Deserialize, Serialize};

use crate::digitize::DigitizationRow;
use crate::output::read_csv;
use crate::sweep::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    ExpDecay,
    SquaredExp,
    PowerLaw,
    Saturation,
    LayerGrowth,
    UnitaryDistance,
    DigitizationGap,
}

/// Abscissa built from a sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum XVariable {
    /// `σ² p`; uses rows with `η = 0`.
    GammaP,
    /// `|η| p`; uses rows with `σ = 0`.
    EtaP,
    /// `η² p`; uses rows with `σ = 0`.
    Eta2P,
}

impl XVariable {
    fn value(&self, r: &SweepRow) -> f64 {
        let p = r.p as f64;
        match self {
            XVariable::GammaP => r.sigma * r.sigma * p,
            XVariable::EtaP => r.eta.abs() * p,
            XVariable::Eta2P => r.eta * r.eta * p,
        }
    }

    fn admits(&self, r: &SweepRow) -> bool {
        match self {
            XVariable::GammaP => r.eta == 0.0,
            XVariable::EtaP | XVariable::Eta2P => r.sigma == 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub x: Option<XVariable>,
    pub window_min: Option<f64>,
    pub window_max: Option<f64>,
    /// Constant saturation subtracted before decay or power-law fits.
    pub saturation: Option<f64>,
    /// Take per-size saturation from the rows at this σ, through the fitted
    /// `A·2^{−ξn}` law when three or more sizes are present.
    pub saturation_sigma: Option<f64>,
    pub n: Vec<usize>,
    /// Only rows with `p_star_flag`; defaults to true except for
    /// unitary-distance fits.
    pub p_star_only: Option<bool>,
    /// Upper `y` bound for unitary-distance fits.
    pub y_max: Option<f64>,
    /// Per size, keep only points up to the first minimum of the decay.
    #[serde(default)]
    pub initial_decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: FitKind,
    pub source: String,
    pub x_variable: Option<XVariable>,
    pub options: FitOptions,
    pub saturation_law: Option<FitResult>,
    pub fit: Option<FitResult>,
    pub valid: bool,
    pub warning: Option<String>,
    pub config_hash: Option<String>,
}

fn window(opts: &FitOptions, default: WindowSpec) -> WindowSpec {
    match (opts.window_min, opts.window_max) {
        (Some(lo), Some(hi)) => WindowSpec::Between(lo, hi),
        (None, Some(hi)) => WindowSpec::Below(hi),
        (Some(lo), None) => WindowSpec::Above(lo),
        (None, None) => default,
    }
}

/// Per-size saturation values, optionally through the fitted law.
fn saturation_map(rows: &[SweepRow], sigma: f64) -> Result<(BTreeMap<usize, f64>, Option<FitResult>)> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.sigma == sigma && r.eta == 0.0 && r.p_star_flag) {
        if let Some(m) = r.mean_hc {
            by_n.entry(r.n).or_default().push(m);
        }
    }
    if by_n.is_empty() {
        bail!("no p* rows at sigma = {sigma} for the saturation level");
    }
    let direct: BTreeMap<usize, f64> = by_n
        .iter()
        .map(|(n, v)| (*n, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    if direct.len() < 3 {
        return Ok((direct, None));
    }
    let ns: Vec<f64> = direct.keys().map(|&n| n as f64).collect();
    let ys: Vec<f64> = direct.values().copied().collect();
    let law = fit_saturation(&ns, &ys)?;
    let a = law.param("prefactor").unwrap_or(0.0);
    let xi = law.param("xi").unwrap_or(0.0);
    let fitted = direct.keys().map(|&n| (n, a * (-xi * n as f64).exp2())).collect();
    Ok((fitted, Some(law)))
}

pub fn run_fit(path: &Path, kind: FitKind, opts: &FitOptions) -> Result<FitReport> {
    let mut report = FitReport {
        kind,
        source: path.display().to_string(),
        x_variable: None,
        options: opts.clone(),
        saturation_law: None,
        fit: None,
        valid: false,
        warning: None,
        config_hash: None,
    };
    let outcome = match kind {
        FitKind::DigitizationGap => {
            let rows: Vec<DigitizationRow> = read_csv(path)?;
            report.config_hash = rows.first().map(|r| r.config_hash.clone());
            let usable: Vec<&DigitizationRow> = rows
                .iter()
                .filter(|r| !r.is_skipped() && (opts.n.is_empty() || opts.n.contains(&r.n)))
                .filter(|r| r.sigma == 0.0 && r.eta == 0.0 && r.gap.is_some_and(|g| g > 0.0))
                .collect();
            let x: Vec<f64> = usable.iter().map(|r| r.n_bits_gamma as f64).collect();
            let y: Vec<f64> = usable.iter().filter_map(|r| r.gap).collect();
            fit_exp_decay(&x, &y, window(opts, WindowSpec::All))
        }
        _ => {
            let rows: Vec<SweepRow> = read_csv(path)?;
            report.config_hash = rows.first().map(|r| r.config_hash.clone());
            sweep_fit(&rows, kind, opts, &mut report)?
        }
    };
    match outcome {
        Ok(fit) => {
            report.valid = fit.valid;
            if !fit.valid {
                report.warning = Some(format!("r² = {} below the validity threshold", fit.r_squared));
            }
            report.fit = Some(fit);
        }
        Err(e) => report.warning = Some(e.to_string()),
    }
    Ok(report)
}

fn sweep_fit(
    rows: &[SweepRow],
    kind: FitKind,
    opts: &FitOptions,
    report: &mut FitReport,
) -> Result<precqaoa::Result<FitResult>> {
    let p_star_only = opts.p_star_only.unwrap_or(kind != FitKind::UnitaryDistance);
    let base: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| !r.is_skipped() && r.mean_hc.is_some())
        .filter(|r| opts.n.is_empty() || opts.n.contains(&r.n))
        .filter(|r| !p_star_only || r.p_star_flag)
        .collect();

    let wants_sat = matches!(kind, FitKind::ExpDecay | FitKind::SquaredExp | FitKind::PowerLaw);
    let (sat, law) = match (opts.saturation, opts.saturation_sigma.filter(|_| wants_sat)) {
        (Some(_), Some(_)) => bail!("give either a constant saturation or a saturation sigma, not both"),
        (Some(v), None) => (Some(Sat::Constant(v)), None),
        (None, Some(s)) => {
            let (m, law) = saturation_map(rows, s)?;
            (Some(Sat::PerSize(m, s)), law)
        }
        (None, None) => (None, None),
    };
    report.saturation_law = law;
    let sat_of = |r: &SweepRow| -> Option<f64> {
        match &sat {
            Some(Sat::Constant(v)) => Some(*v),
            Some(Sat::PerSize(m, _)) => m.get(&r.n).copied(),
            None => None,
        }
    };
    let is_sat_row = |r: &SweepRow| matches!(&sat, Some(Sat::PerSize(_, s)) if r.sigma == *s);

    let default_x = match kind {
        FitKind::SquaredExp => XVariable::EtaP,
        FitKind::UnitaryDistance if base.iter().all(|r| r.sigma == 0.0) => XVariable::EtaP,
        _ => XVariable::GammaP,
    };
    let xv = opts.x.unwrap_or(default_x);

    Ok(match kind {
        FitKind::ExpDecay | FitKind::SquaredExp | FitKind::PowerLaw => {
            report.x_variable = Some(xv);
            let mut pts: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for r in base.iter().filter(|r| xv.admits(r) && !is_sat_row(r)) {
                let (m, v0) = (r.mean_hc.unwrap_or(f64::NAN), r.noiseless_hc.unwrap_or(f64::NAN));
                let yv = match (kind, sat_of(r)) {
                    (FitKind::PowerLaw, Some(s)) => m - s,
                    (FitKind::PowerLaw, None) => bail!("power-law fits need a saturation level"),
                    (_, Some(s)) => match decay_function(&[m], s, v0) {
                        Ok(v) => v[0],
                        Err(e) => return Ok(Err(e)),
                    },
                    (_, None) => m / v0,
                };
                let e = pts.entry(r.n).or_default();
                e.0.push(xv.value(r));
                e.1.push(yv);
            }
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (xs, ys) in pts.values() {
                let keep: Vec<usize> = if opts.initial_decay {
                    initial_decay(xs, ys)
                } else {
                    (0..xs.len()).collect()
                };
                x.extend(keep.iter().map(|&i| xs[i]));
                y.extend(keep.iter().map(|&i| ys[i]));
            }
            match kind {
                FitKind::ExpDecay => {
                    let d = if xv == XVariable::GammaP { WEAK_WINDOW_MAX } else { f64::INFINITY };
                    let w = if d.is_finite() { WindowSpec::Below(d) } else { WindowSpec::All };
                    fit_exp_decay(&x, &y, window(opts, w))
                }
                FitKind::SquaredExp => fit_squared_exp(&x, &y, window(opts, WindowSpec::Between(0.0, COHERENT_WINDOW_MAX))),
                _ => fit_power_law(&x, &y, window(opts, WindowSpec::Above(STRONG_WINDOW_MIN))),
            }
        }
        FitKind::Saturation => {
            let s = opts.saturation_sigma.unwrap_or(1.0);
            let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for r in base.iter().filter(|r| r.sigma == s && r.eta == 0.0) {
                by_n.entry(r.n).or_default().extend(r.mean_hc);
            }
            let ns: Vec<f64> = by_n.keys().map(|&n| n as f64).collect();
            let ys: Vec<f64> = by_n.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
            fit_saturation(&ns, &ys)
        }
        FitKind::LayerGrowth => {
            let mut seen = BTreeMap::new();
            for r in base.iter().filter(|r| r.p_star_flag) {
                seen.entry(r.n).or_insert(r.p);
            }
            let ns: Vec<f64> = seen.keys().map(|&n| n as f64).collect();
            let ps: Vec<f64> = seen.values().map(|&p| p as f64).collect();
            fit_layer_growth(&ns, &ps)
        }
        FitKind::UnitaryDistance => {
            report.x_variable = Some(xv);
            let pts: Vec<(f64, f64)> = base
                .iter()
                .filter(|r| xv.admits(r))
                .filter_map(|r| r.mean_du_inf.map(|d| (xv.value(r), d)))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            fit_unitary_distance(&x, &y, opts.y_max.unwrap_or(1.0))
        }
        FitKind::DigitizationGap => unreachable!("handled by the caller"),
    })
}

enum Sat {
    Constant(f64),
    PerSize(BTreeMap<usize, f64>, f64),
}
