use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::grid::PolarGrid;
use crate::domain::Polar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Fd,
    Picard,
}

/// Sidecar metadata for a serialized field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub gamma: f64,
    pub solver: SolverKind,
    pub n_r: usize,
    pub n_theta: usize,
    pub r_min: f64,
    pub iterations: usize,
    pub residual: f64,
    pub source_scale: f64,
}

/// Nodal values of `U` on a [`PolarGrid`]; zero on boundary nodes unless the
/// outer arc carries data.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: PolarGrid,
    pub values: Vec<f64>,
    pub solver: SolverKind,
    pub iterations: usize,
    /// Solver-specific convergence measure (bracket gap or fixed-point change).
    pub residual: f64,
    pub source_scale: f64,
}

impl SolutionField {
    pub fn gamma(&self) -> f64 {
        self.grid.domain.gamma
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Bilinear interpolation in `(ln r, θ)`.
    pub fn interpolate(&self, p: Polar) -> Result<f64> {
        let g = &self.grid;
        let beta = g.domain.half_angle;
        if !(p.r <= 1.0 && p.theta.abs() <= beta) {
            return Err(Error::domain(format!("point (r={}, θ={}) outside the sector", p.r, p.theta)));
        }
        if p.r < g.r_min {
            return Err(Error::Capacity(format!("radius {} below grid floor {}", p.r, g.r_min)));
        }
        let fi = (-p.r.ln() / g.ds).clamp(0.0, g.n_r as f64);
        let fj = ((p.theta + beta) / g.dtheta).clamp(0.0, g.n_theta as f64);
        let i0 = (fi.floor() as usize).min(g.n_r - 1);
        let j0 = (fj.floor() as usize).min(g.n_theta - 1);
        let (a, b) = (fi - i0 as f64, fj - j0 as f64);
        Ok((1.0 - a) * ((1.0 - b) * self.at(i0, j0) + b * self.at(i0, j0 + 1))
            + a * ((1.0 - b) * self.at(i0 + 1, j0) + b * self.at(i0 + 1, j0 + 1)))
    }

    /// Max over interior nodes at least `margin` nodes from the boundary of
    /// `|(−Δ_h U) / (μ U^{−γ}) − 1|`, the residual relative to the singular right side.
    pub fn relative_residual(&self, margin: usize) -> f64 {
        let g = &self.grid;
        let gamma = self.gamma();
        let (ids2, idt2) = (1.0 / (g.ds * g.ds), 1.0 / (g.dtheta * g.dtheta));
        let mut worst = 0.0f64;
        let m = margin.max(1);
        for i in m..=g.n_r.saturating_sub(m) {
            let r2 = g.radius(i).powi(2);
            for j in m..=g.n_theta.saturating_sub(m) {
                let u = self.at(i, j);
                let lap = (2.0 * u - self.at(i - 1, j) - self.at(i + 1, j)) * ids2
                    + (2.0 * u - self.at(i, j - 1) - self.at(i, j + 1)) * idt2;
                let rhs = r2 * self.source_scale * u.powf(-gamma);
                worst = worst.max((lap / rhs - 1.0).abs());
            }
        }
        worst
    }

    pub fn meta(&self) -> FieldMeta {
        FieldMeta {
            gamma: self.gamma(),
            solver: self.solver,
            n_r: self.grid.n_r,
            n_theta: self.grid.n_theta,
            r_min: self.grid.r_min,
            iterations: self.iterations,
            residual: self.residual,
            source_scale: self.source_scale,
        }
    }

    /// Writes `r,theta,u` rows (radial index outermost), preceded by optional `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "theta", "u"])?;
        for i in 0..=self.grid.n_r {
            for j in 0..=self.grid.n_theta {
                let p = self.grid.node(i, j);
                w.write_record(&[p.r.to_string(), p.theta.to_string(), self.at(i, j).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds a field from its CSV and sidecar metadata.
    pub fn read_csv<R: Read>(input: R, meta: &FieldMeta) -> Result<Self> {
        let domain = crate::domain::SectorDomain::new(meta.gamma)?;
        let grid = PolarGrid::new(domain, meta.n_r, meta.n_theta, meta.r_min)?;
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut values = Vec::with_capacity(grid.len());
        for rec in rdr.records() {
            let rec = rec?;
            let u: f64 = rec
                .get(2)
                .ok_or_else(|| Error::Format("missing u column".into()))?
                .parse()
                .map_err(|e| Error::Format(format!("bad value: {e}")))?;
            values.push(u);
        }
        if values.len() != grid.len() {
            return Err(Error::Format(format!("expected {} rows, found {}", grid.len(), values.len())));
        }
        Ok(SolutionField {
            grid,
            values,
            solver: meta.solver,
            iterations: meta.iterations,
            residual: meta.residual,
            source_scale: meta.source_scale,
        })
    }
}
