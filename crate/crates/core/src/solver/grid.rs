use serde::{Deserialize, Serialize};

use crate::domain::{Polar, SectorDomain};
use crate::error::{Error, Result};

/// Radial nodes required inside every annulus `A_k`.
pub const MIN_NODES_PER_ANNULUS: f64 = 8.0;
/// Reference points must sit this factor above `r_min` to count as resolved.
pub const DEPTH_BUFFER: f64 = 256.0;

/// Graded polar grid: `r_i = q^i` for `i = 0..=n_r` (so `r_0 = 1`, `r_{n_r} = r_min`)
/// and `θ_j = −β + j Δθ` for `j = 0..=n_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub domain: SectorDomain,
    pub n_r: usize,
    pub n_theta: usize,
    pub r_min: f64,
    /// Uniform step in `−ln r`.
    pub ds: f64,
    pub dtheta: f64,
}

impl PolarGrid {
    pub fn new(domain: SectorDomain, n_r: usize, n_theta: usize, r_min: f64) -> Result<Self> {
        if n_r < 4 || n_theta < 4 {
            return Err(Error::domain("grid needs at least 4 intervals in each direction"));
        }
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::domain(format!("r_min must lie in (0, 1), got {r_min}")));
        }
        let ds = -r_min.ln() / n_r as f64;
        if 16f64.ln() / ds < MIN_NODES_PER_ANNULUS - 1e-9 {
            return Err(Error::Capacity(format!(
                "{:.2} radial nodes per annulus; at least {MIN_NODES_PER_ANNULUS} required",
                16f64.ln() / ds
            )));
        }
        Ok(PolarGrid { domain, n_r, n_theta, r_min, ds, dtheta: 2.0 * domain.half_angle / n_theta as f64 })
    }

    /// Grid reaching `16^{-annuli}` with the given nodes per annulus.
    pub fn with_depth(domain: SectorDomain, annuli: usize, nodes_per_annulus: usize, n_theta: usize) -> Result<Self> {
        Self::new(domain, annuli * nodes_per_annulus, n_theta, 16f64.powi(-(annuli as i32)))
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i == self.n_r {
            self.r_min
        } else {
            (-(i as f64) * self.ds).exp()
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        if j == self.n_theta {
            self.domain.half_angle
        } else {
            -self.domain.half_angle + j as f64 * self.dtheta
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Polar {
        Polar::new(self.radius(i), self.angle(j))
    }

    pub fn len(&self) -> usize {
        (self.n_r + 1) * (self.n_theta + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index over all nodes, radial index outermost.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.n_theta + 1) + j
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || i == self.n_r || j == 0 || j == self.n_theta
    }

    pub fn nodes_per_annulus(&self) -> f64 {
        16f64.ln() / self.ds
    }

    /// Deepest `k` whose reference point `p_k` sits `DEPTH_BUFFER` above `r_min`.
    pub fn resolvable_depth(&self) -> usize {
        (1..=crate::domain::K_MAX)
            .take_while(|&k| 0.5 * crate::domain::radius(k) >= DEPTH_BUFFER * self.r_min * (1.0 - 1e-12))
            .last()
            .unwrap_or(0)
    }

    pub fn check_depth(&self, k: usize) -> Result<()> {
        let depth = self.resolvable_depth();
        if k == 0 || k > depth {
            return Err(Error::Capacity(format!("level {k} not resolved (grid resolves 1..={depth})")));
        }
        Ok(())
    }

    /// `η` at the first interior angular node.
    pub fn first_eta(&self) -> f64 {
        self.domain.eta_unchecked(self.angle(1))
    }

    /// Whether the first angular node lies below an `η`-threshold.
    pub fn resolves_threshold(&self, threshold: f64) -> bool {
        self.first_eta() < threshold
    }

    /// Same domain and extent with both spacings halved.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.domain, 2 * self.n_r, 2 * self.n_theta, self.r_min)
    }
}
