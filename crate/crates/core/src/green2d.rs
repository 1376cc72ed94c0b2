//! Exact Dirichlet Green function of the sector ∩ unit disk.
//!
//! The sector is rotated to `0 < ψ < 2β`, opened to the upper half-disk by
//! `ζ = z^p` with `p = π/(2β)`, sent to the upper half-plane by
//! `ξ = −(ζ + 1/ζ)/2`, and to the unit disk by the Cayley map `(ξ − i)/(ξ + i)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{Polar, SectorDomain};
use crate::error::{Error, Result};
use crate::numeric::least_squares;

/// `e^w − 1` without cancellation for small `|w|`.
pub fn cexpm1(w: Complex64) -> Complex64 {
    let (s, c) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * c - 2.0 * half * half, w.re.exp() * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEvaluator {
    pub domain: SectorDomain,
    /// Opening exponent `p = π/(2β)`, equal to φ.
    pub exponent: f64,
}

/// Upper half-plane image with its imaginary part kept separately accurate.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    xi: Complex64,
    im: f64,
    zeta: Complex64,
    log_r: f64,
    psi: f64,
}

impl GreenEvaluator {
    pub fn new(domain: SectorDomain) -> Self {
        GreenEvaluator { domain, exponent: PI / (2.0 * domain.half_angle) }
    }

    fn check(&self, p: Polar) -> Result<()> {
        if !self.domain.contains(p) {
            return Err(Error::domain(format!("point (r={}, θ={}) not inside the sector", p.r, p.theta)));
        }
        Ok(())
    }

    fn half_plane(&self, q: Polar) -> HalfPlane {
        let p = self.exponent;
        let psi = q.theta + self.domain.half_angle;
        let log_r = q.r.ln();
        let a = p * log_r;
        let zeta = Complex64::from_polar(q.r.powf(p), p * psi);
        // Re ξ = −cosh(p ln r) cos(pψ), Im ξ = −sinh(p ln r) η
        let im = -a.sinh() * self.domain.eta_unchecked(q.theta);
        let re = -a.cosh() * (p * psi).cos();
        HalfPlane { xi: Complex64::new(re, im), im, zeta, log_r, psi }
    }

    /// `ξ(x) − ξ(y)` through chained divided differences.
    fn xi_difference(&self, x: &HalfPlane, y: &HalfPlane) -> Complex64 {
        let w = Complex64::new(x.log_r - y.log_r, x.psi - y.psi) * self.exponent;
        if w.norm() > 0.5 {
            return x.xi - y.xi;
        }
        let dzeta = y.zeta * cexpm1(w);
        -dzeta * (1.0 - 1.0 / (x.zeta * y.zeta)) * 0.5
    }

    /// `G(x, y)` for distinct interior points.
    pub fn green(&self, x: Polar, y: Polar) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        let (hx, hy) = (self.half_plane(x), self.half_plane(y));
        let d = self.xi_difference(&hx, &hy).norm_sqr();
        if d == 0.0 {
            return Err(Error::Pole);
        }
        // |ξx − conj ξy|² = |ξx − ξy|² + 4 Im ξx Im ξy
        Ok((4.0 * hx.im * hy.im / d).ln_1p() / (4.0 * PI))
    }

    /// The composed map onto the unit disk.
    pub fn map(&self, q: Polar) -> Result<Complex64> {
        self.check(q)?;
        let xi = self.half_plane(q).xi;
        let i = Complex64::i();
        Ok((xi - i) / (xi + i))
    }

    /// Direct disk-kernel evaluation `ln|(1 − Φx conj Φy)/(Φx − Φy)|/2π`.
    ///
    /// Loses accuracy near the pole; [`GreenEvaluator::green`] is the production path.
    pub fn green_via_disk(&self, x: Polar, y: Polar) -> Result<f64> {
        let (a, b) = (self.map(x)?, self.map(y)?);
        if a == b {
            return Err(Error::Pole);
        }
        Ok(((1.0 - a * b.conj()) / (a - b)).norm().ln() / (2.0 * PI))
    }
}

/// Band of a comparability ratio over a sample, with the points achieving it.
#[derive(Debug, Clone, Serialize)]
pub struct ComparabilityReport {
    pub h: f64,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub width: f64,
    pub witness_min: Polar,
    pub witness_max: Polar,
}

impl ComparabilityReport {
    fn from_samples(h: f64, items: &[(Polar, f64)]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::domain("empty sample set"));
        }
        let mut lo = items[0];
        let mut hi = items[0];
        for &it in items {
            if it.1 < lo.1 {
                lo = it;
            }
            if it.1 > hi.1 {
                hi = it;
            }
        }
        Ok(ComparabilityReport {
            h,
            samples: items.len(),
            min_ratio: lo.1,
            max_ratio: hi.1,
            width: hi.1 / lo.1,
            witness_min: lo.0,
            witness_max: hi.0,
        })
    }
}

fn interior_angle(rng: &mut ChaCha8Rng, beta: f64) -> f64 {
    beta * (2.0 * rng.gen::<f64>() - 1.0) * (1.0 - 1e-9)
}

/// Samples `G(h e_n, y) / [ln(8h/|x−y|) (r/h)^φ η(y)]` over `|y| ≤ 2h`.
///
/// Radii are drawn log-uniformly from `[1e-6 h, 2h]` so the corner is probed;
/// points within `1e-9 h` of the pole are skipped.
pub fn check_small_y(ev: &GreenEvaluator, h: f64, samples: usize, seed: u64) -> Result<ComparabilityReport> {
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::domain(format!("h must lie in (0, 1/4], got {h}")));
    }
    let d = ev.domain;
    let x = Polar::new(h, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(samples);
    for _ in 0..samples {
        let r = h * 1e-6 * (2e6f64).powf(rng.gen::<f64>());
        let y = Polar::new(r, interior_angle(&mut rng, d.half_angle));
        let dist = x.dist(y);
        if dist < 1e-9 * h {
            continue;
        }
        let pred = (8.0 * h / dist).ln() * (r / h).powf(d.phi) * d.eta_unchecked(y.theta);
        items.push((y, ev.green(x, y)? / pred));
    }
    ComparabilityReport::from_samples(h, &items)
}

/// Samples `G(h e_n, y) / [(h/r)^φ (1 − r) η(y)]` over `2h ≤ |y| < 1`.
///
/// Half the radii are uniform on `[2h, 1)`, the other half on `[0.9, 0.99]`.
pub fn check_large_y(ev: &GreenEvaluator, h: f64, samples: usize, seed: u64) -> Result<ComparabilityReport> {
    if !(h > 0.0 && h <= 0.125) {
        return Err(Error::domain(format!("h must lie in (0, 1/8], got {h}")));
    }
    let d = ev.domain;
    let x = Polar::new(h, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = if i % 2 == 0 {
            2.0 * h + (1.0 - 2.0 * h) * rng.gen::<f64>() * (1.0 - 1e-9)
        } else {
            0.9 + 0.09 * rng.gen::<f64>()
        };
        let y = Polar::new(r, interior_angle(&mut rng, d.half_angle));
        let pred = (h / r).powf(d.phi) * (1.0 - r) * d.eta_unchecked(y.theta);
        items.push((y, ev.green(x, y)? / pred));
    }
    ComparabilityReport::from_samples(h, &items)
}

/// Slope of `ln G(h e_n, y)` against `ln h` over a geometric sweep of `h`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub target: f64,
    /// Plain least-squares slope of the log-log data.
    pub plain: f64,
    /// Slope with the next-order term `(variable)^{2φ}` included in the basis.
    pub corrected: f64,
    pub points: usize,
}

impl SlopeReport {
    pub fn rel_err_plain(&self) -> f64 {
        (self.plain / self.target - 1.0).abs()
    }
    pub fn rel_err_corrected(&self) -> f64 {
        (self.corrected / self.target - 1.0).abs()
    }
}

fn log_slopes(xs: &[f64], gs: &[f64], correction: &[f64], target: f64) -> Result<SlopeReport> {
    let y: Vec<f64> = gs.iter().map(|g| g.ln()).collect();
    let plain_rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v.ln()]).collect();
    let corr_rows: Vec<Vec<f64>> = xs.iter().zip(correction).map(|(&v, &c)| vec![1.0, v.ln(), c]).collect();
    let (plain, _) = least_squares(&plain_rows, &y)?;
    let (corr, _) = least_squares(&corr_rows, &y)?;
    Ok(SlopeReport { target, plain: plain[1], corrected: corr[1], points: xs.len() })
}

/// `h`-slope at fixed `y` for `h` geometric in `[h_min, h_max]`.
pub fn h_slope(ev: &GreenEvaluator, y: Polar, h_min: f64, h_max: f64, points: usize) -> Result<SlopeReport> {
    let hs = geometric(h_min, h_max, points);
    let gs: Vec<f64> = hs.iter().map(|&h| ev.green(Polar::new(h, 0.0), y)).collect::<Result<_>>()?;
    let phi = ev.domain.phi;
    let corr: Vec<f64> = hs.iter().map(|h| h.powf(2.0 * phi)).collect();
    log_slopes(&hs, &gs, &corr, phi)
}

/// `r`-slope along the ray `θ` at fixed small `h`, for `r` geometric in `[r_min, r_max]`.
pub fn r_slope(ev: &GreenEvaluator, h: f64, theta: f64, r_min: f64, r_max: f64, points: usize) -> Result<SlopeReport> {
    let rs = geometric(r_min, r_max, points);
    let x = Polar::new(h, 0.0);
    let gs: Vec<f64> = rs.iter().map(|&r| ev.green(x, Polar::new(r, theta))).collect::<Result<_>>()?;
    let phi = ev.domain.phi;
    // the outer arc bends the leading mode r^{−φ} by a factor 1 − r^{2φ}
    let corr: Vec<f64> = rs.iter().map(|r| r.powf(2.0 * phi)).collect();
    let rep = log_slopes(&rs, &gs, &corr, -phi)?;
    Ok(rep)
}

/// Coefficient of `ln(1/|x−y|)` in `G` as `y → x = h e_n`, fitted over
/// `|x − y| ∈ [1e-8 h, 1e-3 h]` along a fixed direction.
pub fn near_pole_log_coefficient(ev: &GreenEvaluator, h: f64, direction: f64) -> Result<f64> {
    let x = Polar::new(h, 0.0);
    let [x0, x1] = x.to_cartesian();
    let ds = geometric(1e-8 * h, 1e-3 * h, 24);
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    for &d in &ds {
        let y = Polar::from_cartesian([x0 + d * direction.sin(), x1 + d * direction.cos()]);
        rows.push(vec![1.0, (1.0 / d).ln()]);
        vals.push(ev.green(x, y)?);
    }
    Ok(least_squares(&rows, &vals)?.0[1])
}

pub(crate) fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_expm1_matches_direct_formula() {
        let w = Complex64::new(0.3, -1.2);
        assert!((cexpm1(w) - (w.exp() - 1.0)).norm() < 1e-15);
        let tiny = Complex64::new(1e-12, 2e-12);
        assert!((cexpm1(tiny) - tiny).norm() < 1e-23);
    }

    #[test]
    fn disk_route_agrees_with_half_plane_route() {
        let ev = GreenEvaluator::new(SectorDomain::new(1.5).unwrap());
        let x = Polar::new(0.3, 0.2);
        let y = Polar::new(0.7, -0.9);
        let a = ev.green(x, y).unwrap();
        let b = ev.green_via_disk(x, y).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn pole_and_boundary_errors() {
        let ev = GreenEvaluator::new(SectorDomain::new(2.0).unwrap());
        let x = Polar::new(0.5, 0.1);
        assert!(matches!(ev.green(x, x), Err(Error::Pole)));
        assert!(matches!(ev.green(x, Polar::new(1.0, 0.0)), Err(Error::Domain(_))));
    }
}
