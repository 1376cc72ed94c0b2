//! Quadrature, root finding, Riemann zeta and least squares helpers.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7, 15) on `[a, b]`.
///
/// Stops when the summed error estimate drops below `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..4000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Internal("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let m = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, m);
        let (v2, e2) = gk15(&f, m, pb);
        panels.push((pa, m, v1, e1));
        panels.push((m, pb, v2, e2));
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(Error::Internal(format!("quadrature did not converge (error estimate {err:e})")))
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Root of `f` in `[a, b]` with `f(a) f(b) ≤ 0`: bisection while the bracket is
/// wide, then Illinois-style secant steps kept inside the bracket.
pub fn bracket_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Internal(format!("root not bracketed on [{a}, {b}]")));
    }
    let mut side = 0i8;
    for _ in 0..400 {
        let width = (b - a).abs();
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if width <= rel_tol * scale {
            break;
        }
        let mut x = if width < 1e-2 * scale { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(Error::Internal(format!("non-finite function value at {x}")));
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Riemann zeta on the real axis for `0 < s < 1` and beyond (s ≠ 1), through the
/// alternating eta series accelerated by Borwein's algorithm.
pub fn riemann_zeta(s: f64) -> f64 {
    const N: usize = 40;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / N as f64;
    let mut sum = term;
    d[0] = N as f64 * term;
    for i in 1..=N {
        term *= ((N + i - 1) as f64 * 4.0 * (N - i + 1) as f64) / ((2 * i - 1) as f64 * 2.0 * i as f64);
        sum += term;
        d[i] = N as f64 * sum;
    }
    let mut eta = 0.0;
    for k in 0..N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        eta += sign * (d[N] - d[k]) / ((k + 1) as f64).powf(s);
    }
    eta /= d[N];
    eta / (1.0 - 2f64.powf(1.0 - s))
}

/// Dense least squares via normal equations with Gaussian elimination.
/// Returns the coefficients and the RMS residual.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.first().map_or(0, Vec::len);
    if m == 0 || rows.len() < m {
        return Err(Error::domain("least squares needs at least as many samples as unknowns"));
    }
    // column scaling keeps the normal matrix well conditioned
    let mut scale = vec![0.0f64; m];
    for r in rows {
        for j in 0..m {
            scale[j] = scale[j].max(r[j].abs());
        }
    }
    for s in &mut scale {
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let mut a = vec![vec![0.0; m + 1]; m];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..m {
            let ri = r[i] / scale[i];
            for j in 0..m {
                a[i][j] += ri * r[j] / scale[j];
            }
            a[i][m] += ri * yi;
        }
    }
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).expect("rows");
        a.swap(c, p);
        if a[c][c].abs() < 1e-300 {
            return Err(Error::Internal("singular least squares system".into()));
        }
        for i in 0..m {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..=m {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i] / scale[i]).collect();
    let ss: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| {
            let fit: f64 = r.iter().zip(&coef).map(|(x, c)| x * c).sum();
            (yi - fit).powi(2)
        })
        .sum();
    Ok((coef, (ss / rows.len() as f64).sqrt()))
}
