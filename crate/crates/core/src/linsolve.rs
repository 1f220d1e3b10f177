//! Solvers for (a − bΔ⁰)x = y with homogeneous Neumann data at r = R_Ω.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::par;

/// Exact solver: FFT in θ, one symmetric tridiagonal system in r per mode.
pub struct SpectralSolver {
    grid: Arc<PolarGrid>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // Thomas factorisation per mode: modified super-diagonal and inverse pivots
    cprime: Vec<f64>,
    inv_piv: Vec<f64>,
    lower: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl SpectralSolver {
    pub fn new(grid: Arc<PolarGrid>, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !(b >= 0.0) {
            return Err(Error::Config("spectral solver needs a > 0, b >= 0".into()));
        }
        let (nr, nt) = (grid.n_r, grid.n_theta);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nt);
        let inv = planner.plan_fft_inverse(nt);
        let mut cprime = vec![0.0; nt * nr];
        let mut inv_piv = vec![0.0; nt * nr];
        let lower: Vec<f64> = (0..nr)
            .map(|j| if j > 0 { -b * grid.wr[j - 1] } else { 0.0 })
            .collect();
        for m in 0..nt {
            let lam = 4.0 * (std::f64::consts::PI * m as f64 / nt as f64).sin().powi(2);
            let mut prev_c = 0.0;
            for j in 0..nr {
                let wp = if j + 1 < nr { grid.wr[j] } else { 0.0 };
                let wm = if j > 0 { grid.wr[j - 1] } else { 0.0 };
                let diag = a * grid.measure(j) + b * (wp + wm + grid.wt[j] * lam);
                let upper = -b * wp;
                let piv = diag - lower[j] * prev_c;
                let ip = 1.0 / piv;
                inv_piv[m * nr + j] = ip;
                prev_c = upper * ip;
                cprime[m * nr + j] = prev_c;
            }
        }
        Ok(SpectralSolver {
            grid,
            fwd,
            inv,
            cprime,
            inv_piv,
            lower,
            a,
            b,
        })
    }

    /// Solve (a − bΔ⁰)x = y componentwise.
    pub fn solve(&self, y: &DiskField) -> DiskField {
        let g = &self.grid;
        let (nr, nt, k) = (g.n_r, g.n_theta, y.k);
        let mut hat = vec![Complex::new(0.0, 0.0); nr * k * nt];
        par::for_each_chunk(&mut hat, k * nt, |j, chunk| {
            let row = y.row(j);
            let m = g.measure(j);
            let mut scratch = vec![Complex::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
            for c in 0..k {
                let buf = &mut chunk[c * nt..(c + 1) * nt];
                for i in 0..nt {
                    buf[i] = Complex::new(m * row[i * k + c], 0.0);
                }
                self.fwd.process_with_scratch(buf, &mut scratch);
            }
        });
        let cols: Vec<Vec<Complex<f64>>> = par::map_range(k * nt, |cm| {
            let (c, m) = (cm / nt, cm % nt);
            let cp = &self.cprime[m * nr..(m + 1) * nr];
            let ip = &self.inv_piv[m * nr..(m + 1) * nr];
            let mut x = vec![Complex::new(0.0, 0.0); nr];
            let mut prev = Complex::new(0.0, 0.0);
            for j in 0..nr {
                let d = hat[j * k * nt + c * nt + m];
                prev = (d - prev * self.lower[j]) * ip[j];
                x[j] = prev;
            }
            for j in (0..nr - 1).rev() {
                let nx = x[j + 1];
                x[j] -= nx * cp[j];
            }
            x
        });
        let mut out = DiskField::zeros(y.grid.clone(), k);
        let scale = 1.0 / nt as f64;
        par::for_each_chunk(&mut out.values, k * nt, |j, row| {
            let mut buf = vec![Complex::new(0.0, 0.0); nt];
            let mut scratch = vec![Complex::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
            for c in 0..k {
                for m in 0..nt {
                    buf[m] = cols[c * nt + m][j];
                }
                self.inv.process_with_scratch(&mut buf, &mut scratch);
                for i in 0..nt {
                    row[i * k + c] = buf[i].re * scale;
                }
            }
        });
        out
    }
}

/// Apply (a − bΔ⁰) to `x`.
pub fn apply_operator(grid: &PolarGrid, a: f64, b: f64, x: &DiskField) -> DiskField {
    let mut out = DiskField::zeros(x.grid.clone(), x.k);
    grid.laplacian0_into(x, &mut out.values);
    for (o, xi) in out.values.iter_mut().zip(&x.values) {
        *o = a * xi - b * *o;
    }
    out
}

/// Jacobi-preconditioned conjugate gradients in the mass inner product.
/// Returns the solution and the iteration count.
pub fn pcg(
    grid: &PolarGrid,
    a: f64,
    b: f64,
    y: &DiskField,
    x0: &DiskField,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(DiskField, usize)> {
    let k = y.k;
    let nt = grid.n_theta;
    // diagonal of (a − bΔ⁰) per cell
    let diag: Vec<f64> = (0..grid.n_r)
        .flat_map(|j| {
            let wp = if j + 1 < grid.n_r { grid.wr[j] } else { 0.0 };
            let wm = if j > 0 { grid.wr[j - 1] } else { 0.0 };
            let d = a + b * (wp + wm + 2.0 * grid.wt[j]) / grid.measure(j);
            std::iter::repeat(d).take(nt * k)
        })
        .collect();
    let mut x = x0.clone();
    let ax = apply_operator(grid, a, b, &x);
    let mut r = y.clone();
    for (ri, ai) in r.values.iter_mut().zip(&ax.values) {
        *ri -= ai;
    }
    let ynorm = y.l2_norm().max(f64::MIN_POSITIVE);
    let mut z = r.clone();
    for (zi, di) in z.values.iter_mut().zip(&diag) {
        *zi /= di;
    }
    let mut p = z.clone();
    let mut rz = r.l2_dot(&z);
    for it in 0..max_iter {
        if r.l2_norm() <= rel_tol * ynorm {
            return Ok((x, it));
        }
        let ap = apply_operator(grid, a, b, &p);
        let pap = p.l2_dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolveDiverged(it));
        }
        let alpha = rz / pap;
        for i in 0..x.values.len() {
            x.values[i] += alpha * p.values[i];
            r.values[i] -= alpha * ap.values[i];
            z.values[i] = r.values[i] / diag[i];
        }
        let rz_new = r.l2_dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.values.len() {
            p.values[i] = z.values[i] + beta * p.values[i];
        }
    }
    if r.l2_norm() <= rel_tol * ynorm {
        Ok((x, max_iter))
    } else {
        Err(Error::LinearSolveDiverged(max_iter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    #[test]
    fn spectral_inverts_operator() {
        let g = Arc::new(PolarGrid::new(1.0, 12, 32).unwrap());
        let y = DiskField::from_fn(g.clone(), 2, |p| {
            smallvec![(2.0 * p[0]).sin() + p[1], (p[0] * p[1]).cos()]
        });
        let s = SpectralSolver::new(g.clone(), 1.0, 0.37).unwrap();
        let x = s.solve(&y);
        let back = apply_operator(&g, 1.0, 0.37, &x);
        let err = back
            .values
            .iter()
            .zip(&y.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn pcg_agrees_with_spectral() {
        let g = Arc::new(PolarGrid::new(1.0, 16, 32).unwrap());
        let y = DiskField::from_fn(g.clone(), 1, |p| smallvec![p[0].exp() - p[1]]);
        let s = SpectralSolver::new(g.clone(), 1.0, 0.01).unwrap();
        let xs = s.solve(&y);
        let (xp, _) = pcg(&g, 1.0, 0.01, &y, &y, 1e-12, 5000).unwrap();
        assert!(xs.l2_distance(&xp) < 1e-9 * xs.l2_norm());
    }
}
