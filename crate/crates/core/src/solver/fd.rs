//! Finite differences on the graded polar grid with two-sided monotone iteration.
//!
//! In `(s, θ) = (ln r, θ)` the equation reads `−(U_ss + U_θθ) = r² μ f_ε(U)` with
//! `f_ε(u) = max(u, ε)^{−γ}`. Each sweep solves
//! `(−Δ_h + c) U_{n+1} = μ f_ε(U_n) + c U_n` for both the upper and the lower
//! iterate, with `c = μ γ max(L_n, ε)^{−γ−1}` taken from the current lower
//! iterate. Since `|f_ε'| ≤ c` on `[L_n, ∞)` and `f_ε` lies above its chords there,
//! both sequences are monotone and stay ordered.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::Serialize;

use super::field::{SolutionField, SolverKind};
use super::grid::PolarGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FdOptions {
    /// Strictly decreasing positive floors.
    pub eps_schedule: Vec<f64>,
    /// Append a last stage without any floor.
    pub floor_free_stage: bool,
    /// Stage ends when `max (U − L)/U` over interior nodes drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Constant multiple `μ` of the right side.
    pub source_scale: f64,
    /// Dirichlet data on the outer arc, one value per angular node.
    pub outer_data: Option<Vec<f64>>,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            eps_schedule: default_eps_schedule(),
            floor_free_stage: true,
            tol: 1e-10,
            max_iter: 300,
            source_scale: 1.0,
            outer_data: None,
        }
    }
}

/// `{1e-2, 1e-3, …, 1e-8}`.
pub fn default_eps_schedule() -> Vec<f64> {
    (2..=8).map(|e| 10f64.powi(-e)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub eps: f64,
    pub iterations: usize,
    pub factorizations: usize,
    pub gap: f64,
    /// Upper iterates never increased at any node.
    pub upper_monotone: bool,
    /// Lower iterates never decreased at any node.
    pub lower_monotone: bool,
    /// Lower iterate stayed below the upper iterate at every sweep.
    pub ordered: bool,
    /// Most negative `U − L` seen, relative to `max U`.
    pub worst_order: f64,
}

#[derive(Debug, Clone)]
pub struct FdOutcome {
    pub field: SolutionField,
    pub lower: Vec<f64>,
    pub stages: Vec<StageReport>,
}

impl FdOutcome {
    pub fn bracket_ok(&self) -> bool {
        self.stages.iter().all(|s| s.upper_monotone && s.lower_monotone && s.ordered)
    }
}

struct System {
    nt: usize,
    m: usize,
    matrix: SparseColMat<usize, f64>,
    diag_pos: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
    base_diag: f64,
}

impl System {
    fn new(grid: &PolarGrid) -> Result<Self> {
        let nt = grid.n_theta - 1;
        let m = (grid.n_r - 1) * nt;
        let (ids2, idt2) = (1.0 / (grid.ds * grid.ds), 1.0 / (grid.dtheta * grid.dtheta));
        let base_diag = 2.0 * ids2 + 2.0 * idt2;
        let mut trip = Vec::with_capacity(3 * m);
        for i in 0..grid.n_r - 1 {
            for j in 0..nt {
                let k = i * nt + j;
                trip.push(Triplet::new(k, k, base_diag));
                if j + 1 < nt {
                    trip.push(Triplet::new(k, k + 1, -idt2));
                }
                if i + 2 < grid.n_r {
                    trip.push(Triplet::new(k, k + nt, -ids2));
                }
            }
        }
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &trip)
            .map_err(|e| Error::Solver(format!("matrix assembly failed: {e:?}")))?;
        let sym = matrix.symbolic();
        let mut diag_pos = vec![0; m];
        for (col, pos) in diag_pos.iter_mut().enumerate() {
            let start = sym.col_ptr()[col];
            let rows = &sym.row_idx()[start..sym.col_ptr()[col + 1]];
            let off = rows.iter().position(|&r| r == col).ok_or_else(|| Error::Internal("missing diagonal".into()))?;
            *pos = start + off;
        }
        let symbolic = SymbolicLlt::try_new(matrix.symbolic(), Side::Upper)
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        Ok(System { nt, m, matrix, diag_pos, symbolic, base_diag })
    }

    fn factor(&mut self, shift: &[f64]) -> Result<Llt<usize, f64>> {
        let vals = self.matrix.val_mut();
        for (k, &pos) in self.diag_pos.iter().enumerate() {
            vals[pos] = self.base_diag + shift[k];
        }
        Llt::try_new_with_symbolic(self.symbolic.clone(), self.matrix.as_ref(), Side::Upper)
            .map_err(|e| Error::Solver(format!("Cholesky breakdown: {e:?}")))
    }
}

pub fn solve_fd(grid: &PolarGrid, opts: &FdOptions) -> Result<FdOutcome> {
    let gamma = grid.domain.gamma;
    let mu = opts.source_scale;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain("source scale must be positive"));
    }
    if opts.eps_schedule.iter().any(|&e| !(e > 0.0))
        || opts.eps_schedule.windows(2).any(|w| w[1] >= w[0])
        || (opts.eps_schedule.is_empty() && !opts.floor_free_stage)
    {
        return Err(Error::domain("eps schedule must be positive and strictly decreasing"));
    }
    let outer = match &opts.outer_data {
        Some(g) if g.len() != grid.n_theta + 1 => {
            return Err(Error::domain(format!("outer data needs {} values", grid.n_theta + 1)))
        }
        Some(g) if g.iter().any(|&v| !(v >= 0.0)) => return Err(Error::domain("outer data must be non-negative")),
        Some(g) => g.clone(),
        None => vec![0.0; grid.n_theta + 1],
    };

    let mut sys = System::new(grid)?;
    let (nt, m) = (sys.nt, sys.m);
    let ids2 = 1.0 / (grid.ds * grid.ds);
    let r2: Vec<f64> = (1..grid.n_r).map(|i| grid.radius(i).powi(2)).collect();
    let row = |k: usize| k / nt;
    // boundary contribution from the outer arc, which only touches the first radial row
    let mut bc = vec![0.0; m];
    for j in 0..nt {
        bc[j] = outer[j + 1] * ids2;
    }

    let g_max = outer.iter().copied().fold(0.0, f64::max);
    let lift = 1.0 + g_max + (mu / 4.0).powf(1.0 / gamma);
    let paraboloid: Vec<f64> = (0..m).map(|k| lift - r2[row(k)]).collect();
    let eps0 = opts.eps_schedule.first().copied().unwrap_or(0.0);
    let mut lower = bump_subsolution(grid, mu, eps0, &outer, &r2)?;

    let mut stages = Vec::new();
    let mut floors: Vec<f64> = opts.eps_schedule.clone();
    if opts.floor_free_stage {
        floors.push(0.0);
    }
    let mut upper = paraboloid.clone();
    let mut total_iters = 0;
    let mut last_gap = f64::INFINITY;
    for &eps in &floors {
        upper.clone_from(&paraboloid);
        let f = |u: f64| mu * u.max(eps).powf(-gamma);
        if eps == 0.0 && lower.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Solver("lower iterate not positive before the floor-free stage".into()));
        }
        let mut report = StageReport {
            eps,
            iterations: 0,
            factorizations: 0,
            gap: f64::INFINITY,
            upper_monotone: true,
            lower_monotone: true,
            ordered: true,
            worst_order: 0.0,
        };
        let mut shift = vec![0.0; m];
        let mut rhs = Mat::<f64>::zeros(m, 2);
        let mut factor: Option<Llt<usize, f64>> = None;
        let mut prev_gap = f64::INFINITY;
        loop {
            if report.iterations >= opts.max_iter {
                return Err(Error::Solver(format!(
                    "stage eps = {eps:e} did not converge in {} sweeps (gap {:e})",
                    opts.max_iter, report.gap
                )));
            }
            report.iterations += 1;
            // a shift taken from an older (smaller) lower iterate still dominates |f'|,
            // so the factorization is kept while the gap keeps shrinking fast
            let refresh = factor.is_none() || report.gap > 0.25 * prev_gap;
            if refresh {
                for k in 0..m {
                    shift[k] = r2[row(k)] * mu * gamma * lower[k].max(eps).powf(-gamma - 1.0);
                }
                factor = Some(sys.factor(&shift)?);
                report.factorizations += 1;
            }
            for k in 0..m {
                let w = r2[row(k)];
                let c = shift[k] / w;
                rhs[(k, 0)] = w * (f(upper[k]) + c * upper[k]) + bc[k];
                rhs[(k, 1)] = w * (f(lower[k]) + c * lower[k]) + bc[k];
            }
            factor.as_ref().expect("factor set above").solve_in_place(rhs.as_mut());
            prev_gap = report.gap;
            let scale = upper.iter().copied().fold(0.0, f64::max);
            let slack = 1e-12 * scale;
            let mut gap = 0.0f64;
            for k in 0..m {
                let (u, l) = (rhs[(k, 0)], rhs[(k, 1)]);
                if !(u.is_finite() && l.is_finite()) {
                    return Err(Error::Solver("non-finite iterate".into()));
                }
                if u > upper[k] * (1.0 + 1e-10) + slack {
                    report.upper_monotone = false;
                }
                if l < lower[k] * (1.0 - 1e-10) - slack {
                    report.lower_monotone = false;
                }
                if l > u * (1.0 + 1e-10) + slack {
                    report.ordered = false;
                    report.worst_order = report.worst_order.min((u - l) / scale);
                }
                upper[k] = u;
                lower[k] = l;
                gap = gap.max((u - l) / u);
            }
            report.gap = gap;
            if !(report.upper_monotone && report.lower_monotone && report.ordered) {
                return Err(Error::Internal(format!(
                    "monotone iteration broke at eps = {eps:e}, sweep {}: {report:?}",
                    report.iterations
                )));
            }
            if gap <= opts.tol {
                break;
            }
        }
        total_iters += report.iterations;
        last_gap = report.gap;
        stages.push(report);
    }

    let mut values = vec![0.0; grid.len()];
    for j in 0..=grid.n_theta {
        values[grid.index(0, j)] = outer[j];
    }
    for k in 0..m {
        let (i, j) = (k / nt + 1, k % nt + 1);
        values[grid.index(i, j)] = upper[k];
    }
    let mut lower_full = vec![0.0; grid.len()];
    for j in 0..=grid.n_theta {
        lower_full[grid.index(0, j)] = outer[j];
    }
    for k in 0..m {
        lower_full[grid.index(k / nt + 1, k % nt + 1)] = lower[k];
    }
    let field = SolutionField {
        grid: *grid,
        values,
        solver: SolverKind::Fd,
        iterations: total_iters,
        residual: last_gap,
        source_scale: mu,
    };
    Ok(FdOutcome { field, lower: lower_full, stages })
}

/// Scaled interior barrier `κ μ^{1/(1+γ)} ρ^φ (4^{−1/γ} − |x − x_0|²/ρ²)₊` centred
/// at `p_1`; `κ` is halved until the discrete subsolution inequality holds.
fn bump_subsolution(grid: &PolarGrid, mu: f64, eps0: f64, outer: &[f64], r2: &[f64]) -> Result<Vec<f64>> {
    let (gamma, phi) = (grid.domain.gamma, grid.domain.phi);
    let nt = grid.n_theta - 1;
    let m = (grid.n_r - 1) * nt;
    let (rho, x0) = (0.45, [0.0, 0.5]);
    let top = 4f64.powf(-1.0 / gamma);
    let shape: Vec<f64> = (0..m)
        .map(|k| {
            let p = grid.node(k / nt + 1, k % nt + 1).to_cartesian();
            let d2 = ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)) / (rho * rho);
            rho.powf(phi) * (top - d2).max(0.0)
        })
        .collect();
    let (ids2, idt2) = (1.0 / (grid.ds * grid.ds), 1.0 / (grid.dtheta * grid.dtheta));
    let mut kappa = 0.5 * mu.powf(1.0 / (1.0 + gamma));
    for _ in 0..60 {
        let v: Vec<f64> = shape.iter().map(|s| kappa * s).collect();
        let at = |i: usize, j: usize| -> f64 {
            if i == 0 {
                outer[j]
            } else if i == grid.n_r || j == 0 || j == grid.n_theta {
                0.0
            } else {
                v[(i - 1) * nt + (j - 1)]
            }
        };
        let ok = (0..m).all(|k| {
            let (i, j) = (k / nt + 1, k % nt + 1);
            let u = v[k];
            if u == 0.0 {
                return true;
            }
            let lap = (2.0 * u - at(i - 1, j) - at(i + 1, j)) * ids2 + (2.0 * u - at(i, j - 1) - at(i, j + 1)) * idt2;
            lap <= r2[i - 1] * mu * u.max(eps0).powf(-gamma)
        });
        if ok {
            return Ok(v);
        }
        kappa *= 0.5;
    }
    Err(Error::Internal("no discrete subsolution found for the lower start".into()))
}
