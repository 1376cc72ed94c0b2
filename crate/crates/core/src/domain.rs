//! Critical sector geometry: frequency, defining function, reference ladder.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest ladder level; 16^-18 keeps squared lengths far from underflow.
pub const K_MAX: usize = 18;

/// A point in polar form. `theta` is measured from the bisector `e_n = (0, 1)`,
/// so the Cartesian image is `(r sin θ, r cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polar {
    pub r: f64,
    pub theta: f64,
}

impl Polar {
    pub const fn new(r: f64, theta: f64) -> Self {
        Polar { r, theta }
    }

    pub fn to_cartesian(self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.r * s, self.r * c]
    }

    pub fn from_cartesian(p: [f64; 2]) -> Self {
        Polar {
            r: p[0].hypot(p[1]),
            theta: p[0].atan2(p[1]),
        }
    }

    pub fn dist(self, other: Polar) -> f64 {
        let a = self.to_cartesian();
        let b = other.to_cartesian();
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// The unit-radius sector `{0 < r < 1, |θ| < β}` whose opening is critical for γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorDomain {
    pub gamma: f64,
    pub phi: f64,
    pub half_angle: f64,
    pub eigenvalue: f64,
}

impl SectorDomain {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::domain(format!("gamma must be finite and positive, got {gamma}")));
        }
        let phi = 2.0 / (1.0 + gamma);
        Ok(SectorDomain {
            gamma,
            phi,
            half_angle: (1.0 + gamma) * PI / 4.0,
            eigenvalue: phi * phi,
        })
    }

    /// Constructor for the growth-rate machinery, which needs γ > 1.
    pub fn with_growth(gamma: f64) -> Result<Self> {
        let d = Self::new(gamma)?;
        if gamma <= 1.0 {
            return Err(Error::GammaNotAboveOne(gamma));
        }
        Ok(d)
    }

    pub fn eta(&self, theta: f64) -> Result<f64> {
        if !(theta.abs() <= self.half_angle) {
            return Err(Error::domain(format!("theta {theta} outside the sector")));
        }
        Ok(self.eta_unchecked(theta))
    }

    #[inline]
    pub fn eta_unchecked(&self, theta: f64) -> f64 {
        if theta.abs() >= self.half_angle {
            0.0
        } else {
            // sin form is exact at the edges, where cos(φβ) rounds to ~1e-17
            (self.phi * (self.half_angle - theta.abs())).sin()
        }
    }

    pub fn harmonic_h(&self, p: Polar) -> Result<f64> {
        if !(p.r >= 0.0) || !p.r.is_finite() {
            return Err(Error::domain(format!("radius {} invalid", p.r)));
        }
        Ok(p.r.powf(self.phi) * self.eta(p.theta)?)
    }

    /// Open-sector membership (radius strictly below 1).
    pub fn contains(&self, p: Polar) -> bool {
        p.r > 0.0 && p.r < 1.0 && p.theta.abs() < self.half_angle
    }

    /// Euclidean distance to the two edges and the outer arc.
    pub fn dist_to_boundary(&self, p: Polar) -> f64 {
        let edges = dist_to_segment(p, self.half_angle, 0.0, 1.0)
            .min(dist_to_segment(p, -self.half_angle, 0.0, 1.0));
        edges.min((1.0 - p.r).abs())
    }

    /// Distance to the two radial edges only.
    pub fn dist_to_edges(&self, p: Polar) -> f64 {
        dist_to_segment(p, self.half_angle, 0.0, 1.0)
            .min(dist_to_segment(p, -self.half_angle, 0.0, 1.0))
    }
}

/// Distance from `p` to the radial segment `{t e(alpha) : a ≤ t ≤ b}`.
fn dist_to_segment(p: Polar, alpha: f64, a: f64, b: f64) -> f64 {
    let d = p.theta - alpha;
    let t = (p.r * d.cos()).clamp(a, b);
    let along = p.r * d.cos() - t;
    let across = p.r * d.sin();
    along.hypot(across)
}

/// Reference points `p_k = (16^{1-k}/2) e_n` and radii `r_k = 16^{1-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLadder {
    pub domain: SectorDomain,
    pub points: Vec<Polar>,
    pub radii: Vec<f64>,
    pub depth: usize,
}

impl ReferenceLadder {
    pub fn new(domain: SectorDomain, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::domain("ladder depth must be at least 1"));
        }
        if depth > K_MAX {
            return Err(Error::Capacity(format!("ladder depth {depth} exceeds K_max = {K_MAX}")));
        }
        let radii: Vec<f64> = (1..=depth).map(radius).collect();
        let points = radii.iter().map(|&r| Polar::new(0.5 * r, 0.0)).collect();
        let ladder = ReferenceLadder { domain, points, radii, depth };
        for k in 1..=depth {
            if !ladder.in_annulus(k, ladder.point(k)) {
                return Err(Error::Internal(format!("p_{k} not inside A_{k}")));
            }
        }
        Ok(ladder)
    }

    /// `p_k`, 1-based.
    pub fn point(&self, k: usize) -> Polar {
        self.points[k - 1]
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.radii[k - 1]
    }

    /// Membership in `A_k = Ω ∩ (B_{r_k} \ B_{r_{k+1}})`.
    pub fn in_annulus(&self, k: usize, p: Polar) -> bool {
        p.r < radius(k) && p.r >= radius(k + 1) && p.theta.abs() < self.domain.half_angle
    }

    /// Distance from `p` to `∂A_k`.
    pub fn dist_to_annulus_boundary(&self, k: usize, p: Polar) -> f64 {
        let (outer, inner) = (radius(k), radius(k + 1));
        let beta = self.domain.half_angle;
        let arcs = (outer - p.r).abs().min((p.r - inner).abs());
        arcs.min(dist_to_segment(p, beta, inner, outer))
            .min(dist_to_segment(p, -beta, inner, outer))
    }

    /// Min and max of `dist(p_k, ∂A_k) 16^k` over the ladder.
    pub fn boundary_distance_band(&self) -> (f64, f64) {
        (1..=self.depth)
            .map(|k| self.dist_to_annulus_boundary(k, self.point(k)) * 16f64.powi(k as i32))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// `r_k = 16^{1-k}`.
pub fn radius(k: usize) -> f64 {
    16f64.powi(1 - k as i32)
}
