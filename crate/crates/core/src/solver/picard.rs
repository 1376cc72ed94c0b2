//! Damped fixed-point iteration `U ← (1−ω) U + ω K[μ U^{−γ}]`.

use serde::Serialize;

use super::field::{SolutionField, SolverKind};
use super::grid::PolarGrid;
use super::kernel::KernelOperator;
use crate::error::{Error, Result};
use crate::green2d::GreenEvaluator;

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    /// Damping; `None` picks `2/(2 + ρ)` with `ρ = 8γ(γ−1)/(1+γ)²`.
    pub omega: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub source_scale: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { omega: None, tol: 1e-9, max_iter: 400, source_scale: 1.0 }
    }
}

/// Damping balancing the spectrum `[−ρ, 0]` of the linearised map, where `ρ`
/// is the Hardy bound for `γ K[U^{−γ−1} ·]`.
pub fn default_omega(gamma: f64) -> f64 {
    let rho = (8.0 * gamma * (gamma - 1.0) / (1.0 + gamma).powi(2)).max(0.0);
    2.0 / (2.0 + rho)
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardOutcome {
    #[serde(skip)]
    pub field: SolutionField,
    pub omega: f64,
    pub iterations: usize,
    /// Last relative sup-norm change between iterates.
    pub last_change: f64,
    /// `‖U − K[μ U^{−γ}]‖_∞ / ‖U‖_∞` at the returned iterate.
    pub fixed_point_residual: f64,
    pub history: Vec<f64>,
}

/// Picard solve on `grid`, started from `start` (typically the FD field) or from
/// the paraboloid supersolution when `start` is `None`.
pub fn solve_picard(
    ev: &GreenEvaluator,
    grid: &PolarGrid,
    start: Option<&SolutionField>,
    opts: &PicardOptions,
) -> Result<PicardOutcome> {
    if ev.domain != grid.domain {
        return Err(Error::domain("evaluator and grid describe different sectors"));
    }
    let op = KernelOperator::new(grid)?;
    solve_picard_with(&op, start, opts)
}

/// As [`solve_picard`] with a prebuilt operator.
pub fn solve_picard_with(op: &KernelOperator, start: Option<&SolutionField>, opts: &PicardOptions) -> Result<PicardOutcome> {
    let grid = op.grid;
    let gamma = grid.domain.gamma;
    let mu = opts.source_scale;
    let omega = opts.omega.unwrap_or_else(|| default_omega(gamma));
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::domain(format!("omega must lie in (0, 1], got {omega}")));
    }
    let interior: Vec<usize> = (1..grid.n_r)
        .flat_map(|i| (1..grid.n_theta).map(move |j| (i, j)))
        .map(|(i, j)| grid.index(i, j))
        .collect();
    let mut u = match start {
        Some(f) => {
            if f.grid != grid {
                return Err(Error::domain("start field lives on a different grid"));
            }
            f.values.clone()
        }
        None => {
            let lift = 1.0 + (mu / 4.0).powf(1.0 / gamma);
            let mut v = vec![0.0; grid.len()];
            for &k in &interior {
                let i = k / (grid.n_theta + 1);
                v[k] = lift - grid.radius(i).powi(2);
            }
            v
        }
    };
    if interior.iter().any(|&k| !(u[k] > 0.0)) {
        return Err(Error::domain("start field must be positive at interior nodes"));
    }
    let density = |u: &[f64]| -> Vec<f64> { u.iter().map(|&x| if x > 0.0 { mu * x.powf(-gamma) } else { 0.0 }).collect() };
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    let mut growth_streak = 0;
    while change > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::Solver(format!(
                "Picard iteration did not converge in {iterations} steps (change {change:e}); try a smaller omega"
            )));
        }
        iterations += 1;
        let ku = op.apply(&density(&u));
        let norm = sup(&u);
        let mut diff = 0.0f64;
        for &k in &interior {
            let next = (1.0 - omega) * u[k] + omega * ku[k];
            diff = diff.max((next - u[k]).abs());
            u[k] = next;
        }
        let prev = change;
        change = diff / norm;
        history.push(change);
        if !change.is_finite() {
            return Err(Error::Solver(format!("Picard iteration diverged; try omega below {omega}")));
        }
        growth_streak = if change > prev { growth_streak + 1 } else { 0 };
        if growth_streak >= 12 || (history.len() > 3 && change > 1e3 * history[0]) {
            return Err(Error::Solver(format!(
                "Picard iteration oscillates without contracting at omega = {omega}; try a smaller omega"
            )));
        }
    }
    let ku = op.apply(&density(&u));
    let res = interior.iter().map(|&k| (u[k] - ku[k]).abs()).fold(0.0, f64::max) / sup(&u);
    let field = SolutionField {
        grid,
        values: u,
        solver: SolverKind::Picard,
        iterations,
        residual: res,
        source_scale: mu,
    };
    Ok(PicardOutcome { field, omega, iterations, last_change: change, fixed_point_residual: res, history })
}
