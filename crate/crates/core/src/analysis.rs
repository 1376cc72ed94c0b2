//! Post-processing of fields and recursion output into verdicts. Every function
//! here reads serialized-equivalent data only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{radius, Polar, ReferenceLadder, SectorDomain};
use crate::error::{Error, Result};
use crate::numeric::least_squares;
use crate::recursion::{GrowthSeries, Regime};
use crate::solver::{PolarGrid, SolutionField};

/// Band of a ratio with the points achieving its extremes.
#[derive(Debug, Clone, Serialize)]
pub struct Band {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub width: f64,
    pub witness_min: Polar,
    pub witness_max: Polar,
}

#[derive(Default)]
struct BandBuilder {
    count: usize,
    lo: Option<(f64, Polar)>,
    hi: Option<(f64, Polar)>,
}

impl BandBuilder {
    fn push(&mut self, v: f64, p: Polar) {
        self.count += 1;
        if self.lo.map_or(true, |(x, _)| v < x) {
            self.lo = Some((v, p));
        }
        if self.hi.map_or(true, |(x, _)| v > x) {
            self.hi = Some((v, p));
        }
    }

    fn finish(self) -> Option<Band> {
        let (lo, hi) = (self.lo?, self.hi?);
        Some(Band { count: self.count, min: lo.0, max: hi.0, width: hi.0 / lo.0, witness_min: lo.1, witness_max: hi.1 })
    }
}

/// Boundary-layer log factor `L(|x|)` of the bulk law `|x|^φ L(|x|) η(x)`.
pub fn bulk_log_factor(regime: Regime, gamma: f64, r: f64) -> f64 {
    let l = (1.0 / r).ln();
    match regime {
        Regime::Sub => l.powf(1.0 / (1.0 + gamma)),
        Regime::Crit => (l * l.ln().max(f64::MIN_POSITIVE)).powf(1.0 / 3.0),
        Regime::Sup => l.powf((gamma - 1.0) / (1.0 + gamma)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub k: usize,
    pub a_k: f64,
    /// `a_k^{(1+γ)/(1−γ)}`: nodes with `η` below it form the near-edge region.
    pub threshold: f64,
    /// `U / (16^{−kφ} η^φ)` over near-edge nodes.
    pub near_edge: Option<Band>,
    /// `U / (16^{−kφ} a_k η)` over bulk nodes.
    pub bulk: Option<Band>,
    /// `U / (|x|^φ η^φ)` over near-edge nodes (pointwise law).
    pub law_near_edge: Option<Band>,
    /// `U / (|x|^φ L(|x|) η)` over bulk nodes (pointwise law).
    pub law_bulk: Option<Band>,
    /// Relative mismatch of the two piecewise predictions at `η = threshold`.
    pub threshold_mismatch: f64,
    /// Whether the first angular node lies below the threshold.
    pub edge_region_resolved: bool,
    /// `U / dist(x, ∂Ω)^φ` over `A_1`; the only band reported for `k = 1`.
    pub outer: Option<Band>,
}

/// Classifies the nodes of `A_k` by the regime threshold on `η` and reports
/// the ratio of `U` to each piecewise prediction.
pub fn regime_partition(field: &SolutionField, k: usize) -> Result<RegimeReport> {
    let grid = &field.grid;
    grid.check_depth(k)?;
    let d = grid.domain;
    let regime = Regime::of(d.gamma)?;
    let ladder = ReferenceLadder::new(d, k)?;
    let a_k = 16f64.powf(k as f64 * d.phi) * field.interpolate(ladder.point(k))?;
    let threshold = a_k.powf((1.0 + d.gamma) / (1.0 - d.gamma));
    let scale = 16f64.powf(-(k as f64) * d.phi);
    let (mut near, mut bulk, mut law_near, mut law_bulk) =
        (BandBuilder::default(), BandBuilder::default(), BandBuilder::default(), BandBuilder::default());
    let (outer, inner) = (radius(k), radius(k + 1));
    let mut outer_band = BandBuilder::default();
    for i in 1..grid.n_r {
        let r = grid.radius(i);
        if !(r < outer && r >= inner) {
            continue;
        }
        for j in 1..grid.n_theta {
            let p = grid.node(i, j);
            let u = field.at(i, j);
            if k == 1 {
                outer_band.push(u / d.dist_to_boundary(p).powf(d.phi), p);
                continue;
            }
            let eta = d.eta_unchecked(p.theta);
            if eta <= threshold {
                near.push(u / (scale * eta.powf(d.phi)), p);
                law_near.push(u / (r.powf(d.phi) * eta.powf(d.phi)), p);
            } else {
                bulk.push(u / (scale * a_k * eta), p);
                law_bulk.push(u / (r.powf(d.phi) * bulk_log_factor(regime, d.gamma, r) * eta), p);
            }
        }
    }
    let (p1, p2) = (threshold.powf(d.phi), a_k * threshold);
    Ok(RegimeReport {
        k,
        a_k,
        threshold,
        near_edge: near.finish(),
        bulk: bulk.finish(),
        law_near_edge: law_near.finish(),
        law_bulk: law_bulk.finish(),
        threshold_mismatch: if threshold < 1.0 { (p1 - p2).abs() / p1 } else { 0.0 },
        edge_region_resolved: grid.resolves_threshold(threshold),
        outer: outer_band.finish(),
    })
}

/// The modulus of continuity `σ(t)` by regime.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModulusSpec {
    pub gamma: f64,
    pub regime: Regime,
}

impl ModulusSpec {
    pub fn new(gamma: f64) -> Result<Self> {
        Ok(ModulusSpec { gamma, regime: Regime::of(gamma)? })
    }

    /// `σ(t)` for `0 < t ≤ 1/8`.
    pub fn sigma(&self, t: f64) -> f64 {
        let g = self.gamma;
        let l = (1.0 / t).ln();
        match self.regime {
            Regime::Sub => t.powf(2.0 / (1.0 + g)) * l.powf(1.0 / (1.0 + g)),
            Regime::Crit => t.powf(2.0 / 3.0) * l.powf(1.0 / 3.0) * l.ln().powf(1.0 / 3.0),
            Regime::Sup => t.powf(2.0 / (1.0 + g)) * l.powf((g - 1.0) / (1.0 + g)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub pairs: usize,
    pub max_ratio: f64,
    pub witness: (Polar, Polar),
    /// `U(p_k)/σ(|p_k|)` for resolved `k ≥ 2` (pairs with the vertex).
    pub vertex_ratios: Vec<(usize, f64)>,
    pub vertex_min: f64,
}

/// Samples pairs in `Ω ∩ B_{1/16}` above the resolved floor and reports
/// `max |U(x) − U(y)| / σ(|x − y|)`.
pub fn modulus_check(field: &SolutionField, spec: &ModulusSpec, pairs: usize, seed: u64) -> Result<ModulusReport> {
    let grid = &field.grid;
    let d = grid.domain;
    let depth = grid.resolvable_depth();
    if depth < 2 {
        return Err(Error::Capacity("grid does not resolve Ω ∩ B_{1/16}".into()));
    }
    let r_lo = 0.5 * radius(depth);
    let r_hi = 1.0 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_point = |rng: &mut ChaCha8Rng| {
        let r = r_lo * (r_hi / r_lo).powf(rng.gen::<f64>()) * (1.0 - 1e-12);
        Polar::new(r, d.half_angle * (2.0 * rng.gen::<f64>() - 1.0) * (1.0 - 1e-12))
    };
    let mut best = (0.0, (Polar::new(0.0, 0.0), Polar::new(0.0, 0.0)));
    let mut done = 0;
    let mut attempts = 0;
    while done < pairs {
        attempts += 1;
        if attempts > 20 * pairs + 100 {
            return Err(Error::Internal("pair sampling kept leaving the disk".into()));
        }
        let x = sample_point(&mut rng);
        let y = if done % 2 == 0 {
            sample_point(&mut rng)
        } else {
            // close pairs probe small separations
            let [x0, x1] = x.to_cartesian();
            let delta = x.r * 10f64.powf(-3.0 * rng.gen::<f64>());
            let w = std::f64::consts::TAU * rng.gen::<f64>();
            Polar::from_cartesian([x0 + delta * w.sin(), x1 + delta * w.cos()])
        };
        if !(y.r >= r_lo && y.r < r_hi && y.theta.abs() < d.half_angle) {
            continue;
        }
        let t = x.dist(y);
        if t == 0.0 || t > 0.125 {
            continue;
        }
        done += 1;
        let ratio = (field.interpolate(x)? - field.interpolate(y)?).abs() / spec.sigma(t);
        if ratio > best.0 {
            best = (ratio, (x, y));
        }
    }
    let ladder = ReferenceLadder::new(d, depth)?;
    let mut vertex_ratios = Vec::new();
    for k in 2..=depth {
        let p = ladder.point(k);
        vertex_ratios.push((k, field.interpolate(p)? / spec.sigma(p.r)));
    }
    let vertex_min = vertex_ratios.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    Ok(ModulusReport { pairs, max_ratio: best.0, witness: best.1, vertex_ratios, vertex_min })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub gamma: f64,
    pub epsilon: f64,
    pub nodes: usize,
    pub min_ratio: f64,
    pub witness: Polar,
    /// Continuum lower bound `ε(1−ε)φ²` of the same ratio.
    pub continuum_bound: f64,
}

/// Discrete `−Δ(H^ε) / H^{−γ}` with `ε = 1 − γ/2` over interior grid nodes.
pub fn barrier_heps(domain: &SectorDomain, grid: &PolarGrid) -> Result<BarrierReport> {
    let gamma = domain.gamma;
    if gamma >= 2.0 {
        return Err(Error::domain(format!("the H^ε barrier needs γ < 2 (got {gamma})")));
    }
    if grid.domain != *domain {
        return Err(Error::domain("grid belongs to a different sector"));
    }
    let eps = 1.0 - 0.5 * gamma;
    let w = |i: usize, j: usize| -> f64 {
        if grid.is_boundary(i, j) && (j == 0 || j == grid.n_theta) {
            return 0.0;
        }
        let p = grid.node(i, j);
        (p.r.powf(domain.phi) * domain.eta_unchecked(p.theta)).powf(eps)
    };
    let (ids2, idt2) = (1.0 / (grid.ds * grid.ds), 1.0 / (grid.dtheta * grid.dtheta));
    let mut best = (f64::INFINITY, Polar::new(0.0, 0.0));
    let mut nodes = 0;
    for i in 1..grid.n_r {
        let r = grid.radius(i);
        for j in 1..grid.n_theta {
            let c = w(i, j);
            let lap = ((2.0 * c - w(i - 1, j) - w(i + 1, j)) * ids2 + (2.0 * c - w(i, j - 1) - w(i, j + 1)) * idt2) / (r * r);
            let h = c.powf(1.0 / eps);
            let ratio = lap * h.powf(gamma);
            nodes += 1;
            if ratio < best.0 {
                best = (ratio, grid.node(i, j));
            }
        }
    }
    Ok(BarrierReport {
        gamma,
        epsilon: eps,
        nodes,
        min_ratio: best.0,
        witness: best.1,
        continuum_bound: eps * (1.0 - eps) * domain.phi * domain.phi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioTrendReport {
    /// `(k, u(p_k)/v(p_k))`.
    pub ratios: Vec<(usize, f64)>,
    pub global_min: f64,
    pub global_max: f64,
    pub witness_min: Polar,
    pub witness_max: Polar,
    /// `|u/v − 1|` at `p_k` is non-increasing over the resolved range.
    pub monotone_trend: bool,
    pub improves: bool,
}

/// `u/v` at the ladder points and over all interior nodes.
pub fn ratio_trend(u: &SolutionField, v: &SolutionField, ladder: &ReferenceLadder) -> Result<RatioTrendReport> {
    if u.grid != v.grid {
        return Err(Error::domain("fields must share a grid"));
    }
    let grid = &u.grid;
    grid.check_depth(ladder.depth)?;
    let mut ratios = Vec::with_capacity(ladder.depth);
    for k in 1..=ladder.depth {
        let p = ladder.point(k);
        ratios.push((k, u.interpolate(p)? / v.interpolate(p)?));
    }
    let floor = 0.5 * radius(grid.resolvable_depth());
    let mut band = BandBuilder::default();
    for i in 1..grid.n_r {
        if grid.radius(i) < floor {
            break;
        }
        for j in 1..grid.n_theta {
            band.push(u.at(i, j) / v.at(i, j), grid.node(i, j));
        }
    }
    let band = band.finish().ok_or_else(|| Error::Capacity("no resolved interior nodes".into()))?;
    let dev: Vec<f64> = ratios.iter().map(|r| (r.1 - 1.0).abs()).collect();
    let monotone_trend = dev.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let improves = dev.len() >= 2 && dev[dev.len() - 1] < dev[0];
    Ok(RatioTrendReport {
        ratios,
        global_min: band.min,
        global_max: band.max,
        witness_min: band.witness_min,
        witness_max: band.witness_max,
        monotone_trend,
        improves,
    })
}

/// `u/U` over resolved interior nodes: `C^{-1} ≤ u/U ≤ C ‖u‖_∞`.
#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub u_sup: f64,
    /// Smallest `C` with `C^{-1} ≤ u/U` and `u/U ≤ C ‖u‖_∞`.
    pub constant: f64,
}

pub fn harnack_bands(u: &SolutionField, reference: &SolutionField) -> Result<HarnackReport> {
    if u.grid != reference.grid {
        return Err(Error::domain("fields must share a grid"));
    }
    let grid = &u.grid;
    let floor = 0.5 * radius(grid.resolvable_depth());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 1..grid.n_r {
        if grid.radius(i) < floor {
            break;
        }
        for j in 1..grid.n_theta {
            let q = u.at(i, j) / reference.at(i, j);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    let u_sup = u.values.iter().copied().fold(0.0, f64::max);
    Ok(HarnackReport { min_ratio: lo, max_ratio: hi, u_sup, constant: (1.0 / lo).max(hi / u_sup) })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrichotomyVerdict {
    pub gamma: f64,
    /// `a_k / k^{φ/2}` extremes over `k ∈ [10, K]`.
    pub band: (f64, f64),
    /// `ln(q_K / q_{K/10})` for `q_k = a_k / k^{φ/2}`.
    pub last_decade_drift: f64,
    /// Coefficient of `ln ln k` when `ln q_k` is fitted against `(1, ln ln k)`.
    pub excess_logpower: f64,
    /// `max_{B_r} U ∼ r^φ (ln 1/r)^{φ/2}` holds.
    pub matches_log_law: bool,
    pub expected_match: bool,
}

/// Decides whether `a_k` follows `k^{φ/2}` (so `max_{B_r} U ∼ r^φ (ln 1/r)^{φ/2}`).
pub fn trichotomy_verdict(gamma: f64, series: &GrowthSeries) -> Result<TrichotomyVerdict> {
    let d = SectorDomain::with_growth(gamma)?;
    let k_max = *series.ks.last().ok_or_else(|| Error::domain("empty series"))?;
    if k_max < 1000 {
        return Err(Error::domain("trichotomy verdict needs at least 1000 terms"));
    }
    let q = |k: usize| series.values[k - 1] / (k as f64).powf(0.5 * d.phi);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut next = 10.0;
    for k in 10..=k_max {
        let v = q(k);
        lo = lo.min(v);
        hi = hi.max(v);
        if k as f64 >= next {
            next *= 1.05;
            rows.push(vec![1.0, (k as f64).ln().ln()]);
            ys.push(v.ln());
        }
    }
    let (coef, _) = least_squares(&rows, &ys)?;
    let drift = (q(k_max) / q(k_max / 10)).ln();
    Ok(TrichotomyVerdict {
        gamma,
        band: (lo, hi),
        last_decade_drift: drift,
        excess_logpower: coef[1],
        matches_log_law: drift.abs() < 0.02,
        expected_match: gamma < 2.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub min_ratio: f64,
    pub witness_t: f64,
    pub samples: usize,
}

/// `U(t e_n) / (t^φ (ln 1/t)^{φ/2})` for `t` geometric over the resolved range below `1/2`.
pub fn lower_bound_check(field: &SolutionField, samples: usize) -> Result<LowerBoundReport> {
    let grid = &field.grid;
    let phi = grid.domain.phi;
    let depth = grid.resolvable_depth();
    if depth == 0 {
        return Err(Error::Capacity("no resolved levels".into()));
    }
    let (t_lo, t_hi) = (0.5 * radius(depth), 0.5);
    let n = samples.max(2);
    let mut best = (f64::INFINITY, 0.0);
    for s in 0..n {
        let t = t_lo * (t_hi / t_lo).powf(s as f64 / (n - 1) as f64);
        let u = field.interpolate(Polar::new(t, 0.0))?;
        let ratio = u / (t.powf(phi) * (1.0 / t).ln().powf(0.5 * phi));
        if ratio < best.0 {
            best = (ratio, t);
        }
    }
    Ok(LowerBoundReport { min_ratio: best.0, witness_t: best.1, samples: n })
}

/// Local boundary rate of `U` along a ray toward the outer arc.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRateReport {
    pub target: f64,
    /// Least-squares slope of `ln U` against `ln d` over the window.
    pub plain: f64,
    /// Slope with the next-order terms `d^{κ'}` and `d` included, `κ' = 2(γ−1)/(1+γ)`.
    pub corrected: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Fits `ln U(r, θ)` against `ln(1 − r)` at radial nodes with `1 − r ∈ [d_lo, d_hi]`.
pub fn boundary_rate(field: &SolutionField, theta: f64, d_lo: f64, d_hi: f64) -> Result<BoundaryRateReport> {
    let grid = &field.grid;
    let gamma = grid.domain.gamma;
    if gamma <= 1.0 {
        return Err(Error::GammaNotAboveOne(gamma));
    }
    let kappa = 2.0 * (gamma - 1.0) / (1.0 + gamma);
    let (mut plain_rows, mut corr_rows, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for i in 1..grid.n_r {
        let r = grid.radius(i);
        let dist = 1.0 - r;
        if dist < d_lo || dist > d_hi {
            continue;
        }
        let u = field.interpolate(Polar::new(r, theta))?;
        plain_rows.push(vec![1.0, dist.ln()]);
        let mut row = vec![1.0, dist.ln(), dist.powf(kappa)];
        if (kappa - 1.0).abs() > 1e-9 {
            row.push(dist);
        }
        corr_rows.push(row);
        ys.push(u.ln());
    }
    if ys.len() < 6 {
        return Err(Error::Capacity(format!("only {} radial nodes in the fitting window", ys.len())));
    }
    let (p, _) = least_squares(&plain_rows, &ys)?;
    let (c, _) = least_squares(&corr_rows, &ys)?;
    Ok(BoundaryRateReport {
        target: grid.domain.phi,
        plain: p[1],
        corrected: c[1],
        window: (d_lo, d_hi),
        points: ys.len(),
    })
}
