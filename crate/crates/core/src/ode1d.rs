//! One-dimensional profiles: translation-invariant solutions by inverting the
//! first integral, rotation-invariant solutions by a two-point BVP solve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bracket_root, integrate};

const QUAD_ABS_TOL: f64 = 1e-15;
const QUAD_REL_TOL: f64 = 1e-14;
const ROOT_REL_TOL: f64 = 1e-14;

/// Smallest admissible `R` for the rotation-invariant problem.
pub const R_MIN: f64 = 10.0;

fn check_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() {
        return Err(Error::domain("gamma must be finite"));
    }
    if gamma <= 1.0 {
        return Err(Error::GammaNotAboveOne(gamma));
    }
    Ok(())
}

/// Time of flight `∫_0^s dz / sqrt(κ z^{1-γ} + E)` with `κ = 2/(γ-1)`.
///
/// `energy` may be negative as long as the integrand stays real on `[0, s]`.
fn flight_time(gamma: f64, energy: f64, s: f64) -> Result<f64> {
    if s < 0.0 || !s.is_finite() {
        return Err(Error::domain(format!("height must be finite and non-negative, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let kappa = 2.0 / (gamma - 1.0);
    let phi = 2.0 / (1.0 + gamma);
    let q = phi * (gamma - 1.0);
    if kappa * s.powf(1.0 - gamma) + energy < 0.0 {
        return Err(Error::domain("height beyond the turning point"));
    }
    // z = w^φ removes the z^{(γ-1)/2} endpoint behaviour
    let lower = |w: f64| phi / (kappa + energy * w.powf(q)).sqrt();
    if energy < 0.0 {
        // z = s − v² on the upper half absorbs a possible turning point at s
        let half = 0.5 * s;
        let a = integrate(lower, 0.0, half.powf(1.0 / phi), QUAD_ABS_TOL, QUAD_REL_TOL)?;
        let cap = kappa * s.powf(1.0 - gamma);
        let gap = (cap + energy).max(0.0);
        let top = |v: f64| {
            let rise = cap * ((1.0 - gamma) * (-v * v / s).ln_1p()).exp_m1();
            2.0 * v / (rise + gap).sqrt()
        };
        let b = integrate(top, 0.0, half.sqrt(), QUAD_ABS_TOL, QUAD_REL_TOL)?;
        return Ok(a + b);
    }
    let split = if energy > 0.0 { (kappa / energy).powf(1.0 / (gamma - 1.0)) } else { f64::INFINITY };
    if s <= split {
        return integrate(lower, 0.0, s.powf(1.0 / phi), QUAD_ABS_TOL, QUAD_REL_TOL);
    }
    let a = integrate(lower, 0.0, split.powf(1.0 / phi), QUAD_ABS_TOL, QUAD_REL_TOL)?;
    // subtract the asymptotic slope; with z = split·e^u the tail is smooth over many decades
    let root_e = energy.sqrt();
    let tail = |u: f64| {
        let z = split * u.exp();
        let k = kappa * z.powf(1.0 - gamma);
        let x = (k + energy).sqrt();
        -k * z / (root_e * x * (root_e + x))
    };
    let linear = (s - split) / root_e;
    let tol = QUAD_REL_TOL * (a + linear);
    let b = integrate(tail, 0.0, (s / split).ln(), tol.max(QUAD_ABS_TOL), QUAD_REL_TOL)?;
    Ok(a + b + linear)
}

/// `F(s) = ∫_0^s dz / sqrt((2/(γ-1)) z^{1-γ} + slope²)`.
pub fn quad_f(gamma: f64, slope: f64, s: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(Error::domain(format!("slope must be positive, got {slope}")));
    }
    flight_time(gamma, slope * slope, s)
}

/// Invert the flight time for the height reached at time `t`.
fn invert_flight(gamma: f64, energy: f64, t: f64, cap: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::domain(format!("time must be finite and non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let kappa = 2.0 / (gamma - 1.0);
    let phi = 2.0 / (1.0 + gamma);
    // the integrand is at most 1/sqrt(E) and at most z^{(γ-1)/2}/sqrt(κ)
    let mut lo = (t * kappa.sqrt() / phi).powf(phi);
    if energy > 0.0 {
        lo = lo.max(energy.sqrt() * t);
    }
    lo = lo.min(cap);
    let mut hi = lo;
    let mut f_hi = flight_time(gamma, energy, hi)? - t;
    let mut guard = 0;
    while f_hi < 0.0 {
        lo = hi;
        hi = (10.0 * hi).min(cap);
        f_hi = flight_time(gamma, energy, hi)? - t;
        guard += 1;
        if guard > 60 || (hi == cap && f_hi < 0.0) {
            return Err(Error::Internal(format!("failed to bracket the height at t = {t}")));
        }
    }
    if lo == hi {
        lo = 0.0;
    }
    let mut err = None;
    let root = bracket_root(
        |s| match flight_time(gamma, energy, s) {
            Ok(v) => v - t,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
        ROOT_REL_TOL,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

/// The translation-invariant profile `V_λ` with `V(0) = 0`, `V' → λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationSolution {
    pub gamma: f64,
    pub slope: f64,
    /// `t* = λ^{(1+γ)/(1-γ)}`, the regime boundary.
    pub crossover: f64,
}

impl TranslationSolution {
    pub fn new(gamma: f64, slope: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(Error::domain(format!("slope must be positive, got {slope}")));
        }
        Ok(TranslationSolution { gamma, slope, crossover: slope.powf((1.0 + gamma) / (1.0 - gamma)) })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        invert_flight(self.gamma, self.slope * self.slope, t, f64::MAX / 4.0)
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("V' is only defined for t > 0, got {t}")));
        }
        let v = self.value(t)?;
        Ok(self.derivative_at_height(v))
    }

    /// `V'` from the first integral at height `v`.
    pub fn derivative_at_height(&self, v: f64) -> f64 {
        let kappa = 2.0 / (self.gamma - 1.0);
        (kappa * v.powf(1.0 - self.gamma) + self.slope * self.slope).sqrt()
    }

    /// Relative first-integral residual `|V'² − κ V^{1−γ} − λ²| / V'²` at height `v`
    /// with derivative `dv`.
    pub fn first_integral_residual(&self, v: f64, dv: f64) -> f64 {
        let kappa = 2.0 / (self.gamma - 1.0);
        (dv * dv - kappa * v.powf(1.0 - self.gamma) - self.slope * self.slope).abs() / (dv * dv)
    }
}

/// Solution of `W'' + W^{-γ} = 0`, `W(0) = 0`, `W(length) = height`.
///
/// This is the `R → ∞` limit of the rotation-invariant problem. The energy
/// `E = W'² − κ W^{1−γ}` may be negative when `height` is small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedProfile {
    pub gamma: f64,
    pub energy: f64,
}

impl MatchedProfile {
    pub fn new(gamma: f64, height: f64, length: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(height > 0.0 && length > 0.0) {
            return Err(Error::domain("height and length must be positive"));
        }
        let kappa = 2.0 / (gamma - 1.0);
        // E must keep the integrand real up to `height`
        let e_min = -kappa * height.powf(1.0 - gamma) * (1.0 - 1e-15);
        let time = |e: f64| flight_time(gamma, e, height).map(|v| v - length).unwrap_or(f64::NAN);
        if time(e_min) < 0.0 {
            return Err(Error::domain("no monotone profile reaches the requested height"));
        }
        let mut hi = 1.0;
        while time(hi) > 0.0 {
            hi *= 4.0;
            if hi > 1e300 {
                return Err(Error::Internal("energy bracket failed".into()));
            }
        }
        let energy = bracket_root(time, e_min, hi, ROOT_REL_TOL)?;
        Ok(MatchedProfile { gamma, energy })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        let cap = if self.energy < 0.0 {
            let kappa = 2.0 / (self.gamma - 1.0);
            (-kappa / self.energy).powf(1.0 / (self.gamma - 1.0))
        } else {
            f64::MAX / 4.0
        };
        invert_flight(self.gamma, self.energy, t, cap)
    }
}

/// Sign of the `1/(t ± R)` drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Curvature {
    Plus,
    Minus,
}

impl Curvature {
    pub fn sign(self) -> f64 {
        match self {
            Curvature::Plus => 1.0,
            Curvature::Minus => -1.0,
        }
    }
}

/// Numerical controls for [`solve_w`].
#[derive(Debug, Clone, Copy)]
pub struct BvpOptions {
    pub intervals: usize,
    pub max_newton: usize,
    pub residual_tol: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions { intervals: 4000, max_newton: 60, residual_tol: 1e-13 }
    }
}

/// The rotation-invariant profile `W_{λ,±R}` sampled on `[0, 3]`.
#[derive(Debug, Clone, Serialize)]
pub struct RotationSolution {
    pub gamma: f64,
    pub slope: f64,
    pub radius: f64,
    pub sign: Curvature,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub newton_iterations: usize,
    /// Max relative residual of the discrete equations.
    pub residual: f64,
}

/// Barrier sandwich `V/M + q ≤ W ≤ M V − q` with `q = (λ/M²)[(t − t*)₊]²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BarrierReport {
    pub m: f64,
    pub holds: bool,
    pub min_upper_gap: f64,
    pub min_lower_gap: f64,
}

/// Constants of the three-regime estimate `W ∼ t^φ | λt | λ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeBand {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `C` such that every ratio lies in `[1/C, C]`.
    pub constant: f64,
}

pub fn solve_w(gamma: f64, slope: f64, radius: f64, sign: Curvature, opts: BvpOptions) -> Result<RotationSolution> {
    check_gamma(gamma)?;
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(Error::domain(format!("slope must be positive, got {slope}")));
    }
    if !(radius >= R_MIN) {
        return Err(Error::domain(format!("R must be at least {R_MIN}, got {radius}")));
    }
    let n = opts.intervals.max(16);
    let phi = 2.0 / (1.0 + gamma);
    let t: Vec<f64> = (0..=n).map(|i| 3.0 * (i as f64 / n as f64).powf(1.0 / phi)).collect();
    let v = TranslationSolution::new(gamma, slope)?;
    let v3 = v.value(3.0)?;
    let mut w: Vec<f64> = Vec::with_capacity(n + 1);
    w.push(0.0);
    for &ti in &t[1..n] {
        w.push(slope * v.value(ti)? / v3);
    }
    w.push(slope);

    let shift = sign.sign() * radius;
    let stencil: Vec<[f64; 3]> = (1..n)
        .map(|i| {
            let hm = t[i] - t[i - 1];
            let hp = t[i + 1] - t[i];
            let s = hm + hp;
            let drift = 1.0 / (t[i] + shift);
            // second and first derivative weights for (w[i-1], w[i], w[i+1])
            let d2 = [2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s)];
            let d1 = [-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s)];
            [d2[0] + drift * d1[0], d2[1] + drift * d1[1], d2[2] + drift * d1[2]]
        })
        .collect();

    let residual = |w: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for i in 1..n {
            let c = &stencil[i - 1];
            out.push(c[0] * w[i - 1] + c[1] * w[i] + c[2] * w[i + 1] + w[i].powf(-gamma));
        }
    };
    // residual relative to the size of the terms it balances
    let scaled_norm = |w: &[f64], r: &[f64]| -> f64 {
        r.iter()
            .enumerate()
            .map(|(k, ri)| {
                let c = &stencil[k];
                let size = (c[0] * w[k]).abs() + (c[1] * w[k + 1]).abs() + (c[2] * w[k + 2]).abs() + w[k + 1].powf(-gamma);
                (ri / size).abs()
            })
            .fold(0.0, f64::max)
    };

    let mut r = Vec::with_capacity(n);
    residual(&w, &mut r);
    let mut norm = scaled_norm(&w, &r);
    let mut iterations = 0;
    let m = n - 1;
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    while norm > opts.residual_tol {
        if iterations >= opts.max_newton {
            return Err(Error::Solver(format!(
                "BVP Newton did not converge in {iterations} iterations (scaled residual {norm:e})"
            )));
        }
        iterations += 1;
        for k in 0..m {
            let c = &stencil[k];
            lower[k] = if k > 0 { c[0] } else { 0.0 };
            upper[k] = if k + 1 < m { c[2] } else { 0.0 };
            diag[k] = c[1] - gamma * w[k + 1].powf(-gamma - 1.0);
            rhs[k] = -r[k];
        }
        let delta = thomas(&lower, &diag, &upper, &rhs)?;
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(i, &wi)| if i == 0 || i == n { wi } else { wi + step * delta[i - 1] })
                .collect();
            if trial[1..n].iter().all(|&x| x > 0.0) {
                let mut rt = Vec::with_capacity(n);
                residual(&trial, &mut rt);
                let nt = scaled_norm(&trial, &rt);
                if nt < norm || step < 1e-3 {
                    w = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(Error::Solver(format!("BVP line search stalled (scaled residual {norm:e})")));
            }
        }
    }
    Ok(RotationSolution { gamma, slope, radius, sign, t, w, newton_iterations: iterations, residual: norm })
}

/// Tridiagonal solve; `lower[0]` and `upper[m-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Solver("singular tridiagonal system".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for k in 1..m {
        denom = diag[k] - lower[k] * c[k - 1];
        if denom == 0.0 {
            return Err(Error::Solver("singular tridiagonal system".into()));
        }
        c[k] = upper[k] / denom;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / denom;
    }
    for k in (0..m - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}

impl RotationSolution {
    /// Piecewise-linear interpolation of the sampled profile.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=3.0).contains(&t) {
            return Err(Error::domain(format!("t = {t} outside [0, 3]")));
        }
        let i = self.t.partition_point(|&x| x < t).clamp(1, self.t.len() - 1);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let s = (t - t0) / (t1 - t0);
        Ok(self.w[i - 1] * (1.0 - s) + self.w[i] * s)
    }

    /// Calibrates `M` by growing it until the barrier ordering holds on the mesh.
    pub fn barrier_check(&self) -> Result<BarrierReport> {
        let v = TranslationSolution::new(self.gamma, self.slope)?;
        let vs: Vec<f64> = self.t.iter().map(|&t| v.value(t)).collect::<Result<_>>()?;
        let tstar = v.crossover;
        let mut m = 2.0;
        for _ in 0..200 {
            let q = self.slope / (m * m);
            let mut up = f64::INFINITY;
            let mut lo = f64::INFINITY;
            for ((&t, &w), &vt) in self.t.iter().zip(&self.w).zip(&vs) {
                let bump = q * (t - tstar).max(0.0).powi(2);
                up = up.min(m * vt - bump - w);
                lo = lo.min(w - (vt / m + bump));
            }
            let tol = 1e-12 * self.slope;
            if up >= -tol && lo >= -tol {
                return Ok(BarrierReport { m, holds: true, min_upper_gap: up, min_lower_gap: lo });
            }
            m *= 1.25;
        }
        Err(Error::Internal("barrier calibration failed".into()))
    }

    /// Ratio of `W` to the three-regime prediction over the interior mesh.
    pub fn regime_band(&self) -> RegimeBand {
        let phi = 2.0 / (1.0 + self.gamma);
        let tstar = self.slope.powf((1.0 + self.gamma) / (1.0 - self.gamma));
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (&t, &w) in self.t.iter().zip(&self.w).skip(1) {
            let pred = if t <= tstar {
                t.powf(phi)
            } else if t <= 1.0 {
                self.slope * t
            } else {
                self.slope
            };
            let ratio = w / pred;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        RegimeBand { min_ratio: lo, max_ratio: hi, constant: hi.max(1.0 / lo) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_f_closed_form_gamma3() {
        for &s in &[0.01, 0.5, 3f64.sqrt(), 10.0, 1e3] {
            let want = (1.0 + s * s).sqrt() - 1.0;
            let got = quad_f(3.0, 1.0, s).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn quad_f_rejects_negative_height() {
        assert!(matches!(quad_f(2.0, 1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(quad_f(1.0, 1.0, 1.0), Err(Error::GammaNotAboveOne(_))));
    }

    #[test]
    fn matched_profile_reduces_to_translation_solution() {
        let v = TranslationSolution::new(3.0, 1.0).unwrap();
        let p = MatchedProfile::new(3.0, v.value(3.0).unwrap(), 3.0).unwrap();
        assert!((p.energy - 1.0).abs() < 1e-10);
    }

    #[test]
    fn thomas_solves_small_system() {
        let x = thomas(&[0.0, 1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0, 0.0], &[5.0, 6.0, 5.0]).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }
}
