//! Green-kernel integral operator on the polar grid, applied by FFT.
//!
//! With `s = ln r`, `ψ = θ + β` and `h(u, v) = ln|1 − e^{p(u + iv)}|`, the sector
//! Green function is
//!
//! `2π G = h(s₂−s₁, ψ₁+ψ₂) − h(s₂−s₁, ψ₂−ψ₁) + h(s₁+s₂, ψ₂−ψ₁) − h(s₁+s₂, ψ₁+ψ₂)`.
//!
//! On the uniform `(s, ψ)` grid each term is Toeplitz or Hankel in each index,
//! so `K[f]` is four circular convolutions sharing one forward transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::PolarGrid;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, riemann_zeta};

/// Offsets (in cells) from a kernel singularity that get cell-averaged entries.
const NEAR: i64 = 2;
const GL_POINTS: usize = 8;

/// `ln|1 − e^{p(u+iv)}|`, computed without cancellation.
pub fn log_kernel(p: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (p * u, p * v);
    let s = (0.5 * y).sin();
    if x <= 0.0 {
        0.5 * (x.exp_m1().powi(2) + 4.0 * x.exp() * s * s).ln()
    } else {
        // |1 − e^z| = e^x |e^{−z} − 1|
        x + 0.5 * ((-x).exp_m1().powi(2) + 4.0 * (-x).exp() * s * s).ln()
    }
}

/// `∫∫ ln sqrt(x² + y²) dx dy` antiderivative.
fn log_radius_primitive(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    let mut v = 0.0;
    if x != 0.0 && y != 0.0 {
        v += x * y * (r2.ln() - 3.0);
    }
    if x != 0.0 {
        v += x * x * (y / x).atan();
    }
    if y != 0.0 {
        v += y * y * (x / y).atan();
    }
    0.5 * v
}

/// Mean of `ln|w|` over the rectangle `[x1, x2] × [y1, y2]`.
pub fn mean_log_radius(x1: f64, x2: f64, y1: f64, y2: f64) -> f64 {
    let f = log_radius_primitive;
    (f(x2, y2) - f(x1, y2) - f(x2, y1) + f(x1, y1)) / ((x2 - x1) * (y2 - y1))
}

/// `ln|(e^z − 1)/z|`, smooth near `z = 0`.
fn log_abs_expm1_ratio(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 < 1e-16 {
        return 0.5 * x;
    }
    let s = (0.5 * y).sin();
    0.5 * ((x.exp_m1().powi(2) + 4.0 * x.exp() * s * s) / r2).ln()
}

/// Cell average of `h(u_c + δu, v_c + δv) e^{2δu}` over `|δu| ≤ du/2`, `|δv| ≤ dv/2`,
/// with the logarithmic singularity at `(0, v0)` integrated in closed form.
fn cell_average(p: f64, uc: f64, vc: f64, v0: f64, du: f64, dv: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (x1, x2) = (uc - 0.5 * du, uc + 0.5 * du);
    let (y1, y2) = (vc - v0 - 0.5 * dv, vc - v0 + 0.5 * dv);
    let singular = mean_log_radius(x1, x2, y1, y2);
    let (nodes, weights) = gl;
    let mut smooth = 0.0;
    for (a, wa) in nodes.iter().zip(weights) {
        let du_ = 0.5 * du * a;
        let x = uc + du_;
        let jac = (2.0 * du_).exp();
        for (b, wb) in nodes.iter().zip(weights) {
            let y = vc - v0 + 0.5 * dv * b;
            let lr = 0.5 * (x * x + y * y).ln();
            let regular = p.ln() + log_abs_expm1_ratio(p * x, p * y);
            smooth += wa * wb * (regular * jac + lr * (jac - 1.0));
        }
    }
    singular + 0.25 * smooth
}

/// Quadrature weights per interior node: `r² Δs Δθ` with the first interior
/// node next to each edge and the outer arc weighted by `1 − ζ(−α)`,
/// `α = (1−γ)/(1+γ)`, for the `d^α` behaviour of `G U^{−γ}` there.
pub fn node_weights(grid: &PolarGrid) -> Vec<f64> {
    let gamma = grid.domain.gamma;
    let alpha = (1.0 - gamma) / (1.0 + gamma);
    let edge = 1.0 - riemann_zeta(-alpha);
    let mut w = vec![0.0; grid.len()];
    for i in 1..grid.n_r {
        let ws = grid.ds * if i == 1 { edge } else { 1.0 };
        let r2 = grid.radius(i).powi(2);
        for j in 1..grid.n_theta {
            let wt = grid.dtheta * if j == 1 || j == grid.n_theta - 1 { edge } else { 1.0 };
            w[grid.index(i, j)] = r2 * ws * wt;
        }
    }
    w
}

fn smooth_length(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        let mut k = m;
        for f in [2, 3, 5] {
            while k % f == 0 {
                k /= f;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// The operator `f ↦ ∫ G(·, y) f(y) dy` on interior nodes.
pub struct KernelOperator {
    pub grid: PolarGrid,
    li: usize,
    lj: usize,
    /// Sum-weighted spectra of the four kernel tables, stored transposed `[k2][k1]`.
    spectra: [Vec<Complex64>; 4],
    weights: Vec<f64>,
    fwd_i: Arc<dyn Fft<f64>>,
    fwd_j: Arc<dyn Fft<f64>>,
    inv_i: Arc<dyn Fft<f64>>,
    inv_j: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelOperator").field("li", &self.li).field("lj", &self.lj).finish()
    }
}

impl KernelOperator {
    pub fn new(grid: &PolarGrid) -> Result<Self> {
        let (nr, nth) = (grid.n_r, grid.n_theta);
        let li = smooth_length(2 * nr);
        let lj = smooth_length(2 * nth);
        let bytes = 6 * li * lj * std::mem::size_of::<Complex64>();
        if bytes > 3usize << 30 {
            return Err(Error::Capacity(format!("kernel tables need {} MiB", bytes >> 20)));
        }
        let mut planner = FftPlanner::new();
        let fwd_i = planner.plan_fft_forward(li);
        let fwd_j = planner.plan_fft_forward(lj);
        let inv_i = planner.plan_fft_inverse(li);
        let inv_j = planner.plan_fft_inverse(lj);
        let mut op = KernelOperator {
            grid: *grid,
            li,
            lj,
            spectra: [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
            weights: node_weights(grid),
            fwd_i,
            fwd_j,
            inv_i,
            inv_j,
        };
        let p = PI / (2.0 * grid.domain.half_angle);
        let (ds, dt) = (grid.ds, grid.dtheta);
        let v_top = 2.0 * nth as f64 * dt;
        let gl = gauss_legendre(GL_POINTS);
        let c = 1.0 / (2.0 * PI);
        // table entry for a (u, v) offset; near entries are cell averages
        let entry = |u_idx: i64, v_idx: i64, u_is_sum: bool| -> f64 {
            let u = if u_is_sum { -(u_idx as f64) * ds } else { u_idx as f64 * ds };
            let v = v_idx as f64 * dt;
            let near_u = u_idx.abs() <= NEAR;
            let near0 = v_idx.abs() <= NEAR;
            let near_top = (2 * nth as i64 - v_idx).abs() <= NEAR;
            if near_u && (near0 || near_top) {
                let v0 = if near0 { 0.0 } else { v_top };
                cell_average(p, u, v, v0, ds, dt, &gl)
            } else {
                log_kernel(p, u, v)
            }
        };
        let (nr_i, nth_i) = (nr as i64, nth as i64);
        let wrap = |x: i64, l: usize| x.rem_euclid(l as i64) as usize;
        // TT: −h(Δs, Δψ); TH: +h(Δs, Σψ); HT: +h(Σs, Δψ); HH: −h(Σs, Σψ)
        let specs: [(bool, bool, f64); 4] = [(false, false, -c), (false, true, c), (true, false, c), (true, true, -c)];
        for (slot, &(u_sum, v_sum, sign)) in specs.iter().enumerate() {
            let mut table = vec![Complex64::new(0.0, 0.0); li * lj];
            // interior indices run over 1..n-1, so sums lie in 2..=2n-2 and |differences| ≤ n-2
            let u_range: Vec<i64> = if u_sum { (2..=2 * nr_i - 2).collect() } else { (2 - nr_i..=nr_i - 2).collect() };
            let v_range: Vec<i64> = if v_sum { (2..=2 * nth_i - 2).collect() } else { (2 - nth_i..=nth_i - 2).collect() };
            for &a in &u_range {
                let ia = wrap(a, li);
                for &b in &v_range {
                    let jb = wrap(b, lj);
                    table[ia * lj + jb] = Complex64::new(sign * entry(a, b, u_sum), 0.0);
                }
            }
            op.forward(&mut table);
            op.spectra[slot] = table;
        }
        Ok(op)
    }

    /// 2D forward FFT; output stored transposed (`[k2][k1]`).
    fn forward(&self, data: &mut Vec<Complex64>) {
        let (li, lj) = (self.li, self.lj);
        for row in data.chunks_exact_mut(lj) {
            self.fwd_j.process(row);
        }
        let mut t = transpose(data, li, lj);
        for row in t.chunks_exact_mut(li) {
            self.fwd_i.process(row);
        }
        *data = t;
    }

    /// Inverse of [`Self::forward`] including the `1/(li lj)` normalisation.
    fn inverse(&self, data: &mut Vec<Complex64>) {
        let (li, lj) = (self.li, self.lj);
        for row in data.chunks_exact_mut(li) {
            self.inv_i.process(row);
        }
        let mut t = transpose(data, lj, li);
        for row in t.chunks_exact_mut(lj) {
            self.inv_j.process(row);
        }
        let scale = 1.0 / (li * lj) as f64;
        for z in &mut t {
            *z *= scale;
        }
        *data = t;
    }

    /// `K[f]` at every node (zero on the boundary), given nodal density `f`.
    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (li, lj) = (self.li, self.lj);
        let mut buf = vec![Complex64::new(0.0, 0.0); li * lj];
        for i in 1..g.n_r {
            for j in 1..g.n_theta {
                let k = g.index(i, j);
                buf[i * lj + j] = Complex64::new(density[k] * self.weights[k], 0.0);
            }
        }
        self.forward(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); li * lj];
        for k2 in 0..lj {
            let n2 = (lj - k2) % lj;
            for k1 in 0..li {
                let n1 = (li - k1) % li;
                let idx = k2 * li + k1;
                out[idx] = self.spectra[0][idx] * buf[idx]
                    + self.spectra[1][idx] * buf[n2 * li + k1]
                    + self.spectra[2][idx] * buf[k2 * li + n1]
                    + self.spectra[3][idx] * buf[n2 * li + n1];
            }
        }
        self.inverse(&mut out);
        let mut res = vec![0.0; g.len()];
        for i in 1..g.n_r {
            for j in 1..g.n_theta {
                res[g.index(i, j)] = out[i * lj + j].re;
            }
        }
        res
    }

    /// Point value `G` between nodes `(i1, j1)` and `(i2, j2)` from the log-kernel
    /// factorisation, without cell averaging.
    pub fn table_value(&self, i1: usize, j1: usize, i2: usize, j2: usize) -> f64 {
        let g = &self.grid;
        let p = PI / (2.0 * g.domain.half_angle);
        let (ds, dt) = (g.ds, g.dtheta);
        let (a, m) = (i1 as f64 - i2 as f64, (i1 + i2) as f64);
        let (b, mj) = (j1 as f64 - j2 as f64, (j1 + j2) as f64);
        (log_kernel(p, a * ds, mj * dt) - log_kernel(p, a * ds, b * dt) + log_kernel(p, -m * ds, b * dt)
            - log_kernel(p, -m * ds, mj * dt))
            / (2.0 * PI)
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); rows * cols];
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    t[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_matches_numerical_mean() {
        let gl = gauss_legendre(40);
        let (x1, x2, y1, y2) = (0.3, 0.9, -0.4, 0.5);
        let mut s = 0.0;
        for (a, wa) in gl.0.iter().zip(&gl.1) {
            for (b, wb) in gl.0.iter().zip(&gl.1) {
                let x = 0.5 * (x1 + x2) + 0.5 * (x2 - x1) * a;
                let y = 0.5 * (y1 + y2) + 0.5 * (y2 - y1) * b;
                s += wa * wb * 0.5 * (x * x + y * y).ln();
            }
        }
        assert!((s / 4.0 - mean_log_radius(x1, x2, y1, y2)).abs() < 1e-12);
    }

    #[test]
    fn mean_log_over_centred_square() {
        // mean of ln r over [-1,1]^2 equals that over [0,1]^2: (ln 2)/2 − 3/2 + π/4
        let want = 0.5 * 2f64.ln() - 1.5 + PI / 4.0;
        assert!((mean_log_radius(-1.0, 1.0, -1.0, 1.0) - want).abs() < 1e-14);
    }

    #[test]
    fn log_kernel_large_argument_is_stable() {
        let v = log_kernel(1.0, 30.0, 0.3);
        assert!((v - 30.0).abs() < 1e-12);
        let w = log_kernel(1.0, -30.0, 0.3);
        assert!(w.abs() < 1e-12);
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_length(2048), 2048);
        assert_eq!(smooth_length(2049), 2160);
        assert_eq!(smooth_length(7), 8);
    }
}
