//! Executable form of the discrete integral equation for `S_k` (and `a_k ∼ S_k`),
//! the `T_k` transform, and exponent fitting.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bracket_root, least_squares};

/// Largest supported run length.
pub const K_LIMIT: usize = 10_000_000;
/// Smallest index entering the exponent fits.
pub const FIT_START: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sub,
    Crit,
    Sup,
}

impl Regime {
    pub fn of(gamma: f64) -> Result<Regime> {
        if !gamma.is_finite() {
            return Err(Error::domain("gamma must be finite"));
        }
        if gamma <= 1.0 {
            return Err(Error::GammaNotAboveOne(gamma));
        }
        Ok(if gamma < 2.0 {
            Regime::Sub
        } else if gamma == 2.0 {
            Regime::Crit
        } else {
            Regime::Sup
        })
    }

    /// Growth exponent of `S_k` in `k`, and the power of `ln k` in the law.
    pub fn law(self, gamma: f64) -> (f64, f64) {
        match self {
            Regime::Sub => (1.0 / (1.0 + gamma), 0.0),
            Regime::Crit => (1.0 / 3.0, 1.0 / 3.0),
            Regime::Sup => ((gamma - 1.0) / (1.0 + gamma), 0.0),
        }
    }

    /// Canonical starting value `S_1`.
    pub fn default_start(self) -> f64 {
        match self {
            Regime::Crit => E,
            _ => 1.0,
        }
    }
}

/// Increment nonlinearity `g(s)`.
pub fn increment(regime: Regime, gamma: f64, s: f64) -> f64 {
    match regime {
        Regime::Sub => s.powf(-gamma),
        Regime::Crit => s.ln() / (s * s),
        Regime::Sup => s.powf(2.0 / (1.0 - gamma)),
    }
}

fn increment_derivative(regime: Regime, gamma: f64, s: f64) -> f64 {
    match regime {
        Regime::Sub => -gamma * s.powf(-gamma - 1.0),
        Regime::Crit => (1.0 - 2.0 * s.ln()) / (s * s * s),
        Regime::Sup => 2.0 / (1.0 - gamma) * s.powf(2.0 / (1.0 - gamma) - 1.0),
    }
}

/// `S_k − S_{k−1} = c g(S_k)` with `a_k` identified with `S_k`.
#[derive(Debug, Clone, Serialize)]
pub struct RecursionModel {
    pub gamma: f64,
    pub regime: Regime,
    pub c: f64,
    /// `S_1, S_2, …` (the implicit `S_0 = 0` is not stored).
    pub s: Vec<f64>,
}

impl RecursionModel {
    pub fn new(gamma: f64, c: f64, s1: f64) -> Result<Self> {
        let regime = Regime::of(gamma)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        if !(s1 > 0.0) || !s1.is_finite() {
            return Err(Error::domain(format!("S_1 must be positive, got {s1}")));
        }
        if regime == Regime::Crit && s1 <= 1.0 {
            return Err(Error::domain("the critical regime needs S_1 > 1 so that ln S_1 > 0"));
        }
        Ok(RecursionModel { gamma, regime, c, s: vec![s1] })
    }

    pub fn last(&self) -> f64 {
        *self.s.last().expect("S_1 always present")
    }

    /// `a_k`, identified with `S_k`.
    pub fn a(&self) -> &[f64] {
        &self.s
    }

    /// Appends the next term using the model's constant `c`.
    pub fn step(&mut self) -> Result<f64> {
        let c = self.c;
        self.step_with(c)
    }

    /// Appends the next term with an explicit constant for this step.
    pub fn step_with(&mut self, c: f64) -> Result<f64> {
        let prev = self.last();
        let (regime, gamma) = (self.regime, self.gamma);
        let f = |s: f64| s - prev - c * increment(regime, gamma, s);
        // g is decreasing past S_{k−1}, so the root lies below S_{k−1} + c g(S_{k−1})
        let hi = prev + c * increment(regime, gamma, prev);
        let mut s = if f(hi) == 0.0 {
            hi
        } else {
            bracket_root(f, prev, hi, 1e-9)?
        };
        for _ in 0..4 {
            let df = 1.0 - c * increment_derivative(regime, gamma, s);
            let next = s - f(s) / df;
            if !(next > prev && next <= hi) {
                break;
            }
            let done = (next - s).abs() <= 1e-13 * s;
            s = next;
            if done {
                break;
            }
        }
        if !(s > prev) {
            return Err(Error::Internal(format!("non-increasing step at k = {}", self.s.len() + 1)));
        }
        self.s.push(s);
        Ok(s)
    }

    /// `T_k` for the stored series.
    pub fn t_values(&self) -> Vec<f64> {
        self.s.iter().map(|&s| transform(self.regime, self.gamma, s)).collect()
    }
}

/// `T = S^{γ+1} | S³/ln S | S^{(γ+1)/(γ−1)}`.
pub fn transform(regime: Regime, gamma: f64, s: f64) -> f64 {
    match regime {
        Regime::Sub => s.powf(gamma + 1.0),
        Regime::Crit => s.powi(3) / s.ln(),
        Regime::Sup => s.powf((gamma + 1.0) / (gamma - 1.0)),
    }
}

/// `(k, value)` samples with fitted growth law.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthSeries {
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
    /// Exponent of `k` (pure power fit for sub/sup, joint fit for crit).
    pub fit_exponent: f64,
    /// Coefficient of `ln ln k` in the joint fit.
    pub fit_logpower: f64,
    /// RMS residual of the fit that produced `fit_exponent`.
    pub residual: f64,
    pub regime: Option<Regime>,
}

/// Fits over `k ≥ FIT_START` (or all samples when fewer are available).
///
/// Two least squares problems on `ln v`: the pure power law `(1, ln k)` and the
/// joint law `(1, ln k, ln ln k)`. Sub and sup regimes report the pure-power
/// exponent; the critical regime reports the joint fit.
pub fn fit_growth(ks: &[usize], values: &[f64], regime: Option<Regime>) -> Result<(f64, f64, f64)> {
    let start = if ks.iter().filter(|&&k| k >= FIT_START).count() >= 8 { FIT_START } else { 1 };
    let mut pure = Vec::new();
    let mut joint = Vec::new();
    let mut y = Vec::new();
    // geometric thinning keeps the fit balanced across decades
    let mut next = start as f64;
    for (&k, &v) in ks.iter().zip(values) {
        if (k as f64) < next {
            continue;
        }
        next = (k as f64 * 1.01).max(k as f64 + 1.0);
        let lk = (k as f64).ln();
        pure.push(vec![1.0, lk]);
        joint.push(vec![1.0, lk, lk.ln()]);
        y.push(v.ln());
    }
    if y.len() < 4 {
        return Err(Error::domain("too few samples to fit a growth law"));
    }
    let (cp, rp) = least_squares(&pure, &y)?;
    let (cj, rj) = least_squares(&joint, &y)?;
    Ok(match regime {
        Some(Regime::Crit) => (cj[1], cj[2], rj),
        _ => (cp[1], cj[2], rp),
    })
}

impl GrowthSeries {
    pub fn new(ks: Vec<usize>, values: Vec<f64>, regime: Option<Regime>) -> Result<Self> {
        let (fit_exponent, fit_logpower, residual) = fit_growth(&ks, &values, regime)?;
        Ok(GrowthSeries { ks, values, fit_exponent, fit_logpower, residual, regime })
    }

    /// Value at index `k`, if sampled.
    pub fn at(&self, k: usize) -> Option<f64> {
        self.ks.binary_search(&k).ok().map(|i| self.values[i])
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("K must be at least 2, got {k}")));
    }
    if k > K_LIMIT {
        return Err(Error::Capacity(format!("K = {k} exceeds {K_LIMIT}")));
    }
    Ok(())
}

/// Runs the recursion to `K` and fits the growth law.
pub fn run(gamma: f64, c: f64, s1: f64, k: usize) -> Result<GrowthSeries> {
    run_with_schedule(gamma, s1, k, |_| c)
}

/// Runs with a step-dependent constant `c_k` (applied at the step producing `S_k`).
pub fn run_with_schedule<F: Fn(usize) -> f64>(gamma: f64, s1: f64, k: usize, schedule: F) -> Result<GrowthSeries> {
    check_k(k)?;
    let c2 = schedule(2);
    let mut model = RecursionModel::new(gamma, c2, s1)?;
    for j in 2..=k {
        let cj = schedule(j);
        if !(cj > 0.0) || !cj.is_finite() {
            return Err(Error::domain(format!("c_{j} must be positive")));
        }
        model.step_with(cj)?;
    }
    let regime = model.regime;
    GrowthSeries::new((1..=k).collect(), model.s, Some(regime))
}

/// `T_k` series with its fitted exponent (1 for every regime).
#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    pub series: GrowthSeries,
    /// `T_K / K`.
    pub t_over_k: f64,
    pub increasing: bool,
}

pub fn transform_t(series: &GrowthSeries, gamma: f64) -> Result<TransformReport> {
    let regime = Regime::of(gamma)?;
    let t: Vec<f64> = series.values.iter().map(|&s| transform(regime, gamma, s)).collect();
    let increasing = t.windows(2).all(|w| w[1] > w[0]);
    let last = *series.ks.last().ok_or_else(|| Error::domain("empty series"))?;
    let t_over_k = t.last().copied().unwrap_or(0.0) / last as f64;
    let series = GrowthSeries::new(series.ks.clone(), t, None)?;
    Ok(TransformReport { series, t_over_k, increasing })
}

/// `T_{k+1} − T_k` at index `k`.
pub fn t_increment(report: &TransformReport, k: usize) -> Option<f64> {
    let a = report.series.at(k)?;
    let b = report.series.at(k + 1)?;
    Some(b - a)
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityEntry {
    pub c: f64,
    pub fit_exponent: f64,
    pub fit_logpower: f64,
    pub prefactor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub gamma: f64,
    pub entries: Vec<SensitivityEntry>,
    pub exponent_spread: f64,
    pub invariant: bool,
}

/// Exponent of the fit for each `c`; invariant when the spread is below 0.02.
pub fn c_sensitivity(gamma: f64, cs: &[f64], k: usize) -> Result<SensitivityReport> {
    if cs.is_empty() {
        return Err(Error::domain("empty list of constants"));
    }
    let regime = Regime::of(gamma)?;
    let (b, l) = regime.law(gamma);
    let mut entries = Vec::new();
    for &c in cs {
        if !(c > 0.0) {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        let s = run(gamma, c, regime.default_start(), k)?;
        let kf = k as f64;
        let prefactor = s.values[k - 1] / (kf.powf(b) * kf.ln().powf(l));
        entries.push(SensitivityEntry { c, fit_exponent: s.fit_exponent, fit_logpower: s.fit_logpower, prefactor });
    }
    let lo = entries.iter().map(|e| e.fit_exponent).fold(f64::INFINITY, f64::min);
    let hi = entries.iter().map(|e| e.fit_exponent).fold(f64::NEG_INFINITY, f64::max);
    Ok(SensitivityReport { gamma, exponent_spread: hi - lo, invariant: hi - lo < 0.02, entries })
}
