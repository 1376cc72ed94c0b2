//! Two cross-validating solvers for `−ΔU = U^{−γ}` in the sector with zero data.

pub mod fd;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod picard;

pub use fd::{solve_fd, FdOptions, FdOutcome, StageReport};
pub use field::{FieldMeta, SolutionField, SolverKind};
pub use grid::PolarGrid;
pub use picard::{solve_picard, PicardOptions, PicardOutcome};

use crate::domain::ReferenceLadder;
use crate::error::Result;
use crate::recursion::GrowthSeries;

/// `a_k = 16^{kφ} U(p_k)` for every ladder level.
pub fn extract_ak(field: &SolutionField, ladder: &ReferenceLadder) -> Result<GrowthSeries> {
    field.grid.check_depth(ladder.depth)?;
    let phi = field.grid.domain.phi;
    let mut ks = Vec::with_capacity(ladder.depth);
    let mut values = Vec::with_capacity(ladder.depth);
    for k in 1..=ladder.depth {
        let u = field.interpolate(ladder.point(k))?;
        ks.push(k);
        values.push(16f64.powf(k as f64 * phi) * u);
    }
    let (fit_exponent, fit_logpower, residual) =
        crate::recursion::fit_growth(&ks, &values, None).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    Ok(GrowthSeries { ks, values, fit_exponent, fit_logpower, residual, regime: None })
}
