//! Cell-centred polar finite-volume grid on the disk of radius R_Ω.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::VecK;
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub r_omega: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub dr: f64,
    pub dtheta: f64,
    /// Cell-centre radii r_j = (j + ½)Δr.
    pub rc: Vec<f64>,
    pub cos_t: Vec<f64>,
    pub sin_t: Vec<f64>,
    /// Radial face weight between rings j and j+1 (r_{j+½}Δθ/Δr).
    pub wr: Vec<f64>,
    /// Angular face weight on ring j.
    pub wt: Vec<f64>,
    meas: Vec<f64>,
    sin_dt: f64,
}

impl PolarGrid {
    pub fn new(r_omega: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_omega > 0.0) || n_r < 8 || n_theta < 16 || n_theta % 2 != 0 {
            return Err(Error::Config(format!(
                "invalid grid R={r_omega} N_r={n_r} N_theta={n_theta} (need N_r>=8, even N_theta>=16)"
            )));
        }
        let dr = r_omega / n_r as f64;
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        let rc: Vec<f64> = (0..n_r).map(|j| (j as f64 + 0.5) * dr).collect();
        let th: Vec<f64> = (0..n_theta).map(|i| i as f64 * dtheta).collect();
        let s2 = (0.5 * dtheta).sin().powi(2);
        Ok(PolarGrid {
            r_omega,
            n_r,
            n_theta,
            dr,
            dtheta,
            cos_t: th.iter().map(|t| t.cos()).collect(),
            sin_t: th.iter().map(|t| t.sin()).collect(),
            wr: (0..n_r - 1).map(|j| (j + 1) as f64 * dr * dtheta / dr).collect(),
            wt: rc.iter().map(|r| dr * dtheta / (4.0 * r * s2)).collect(),
            meas: rc.iter().map(|r| r * dr * dtheta).collect(),
            rc,
            sin_dt: dtheta.sin(),
        })
    }

    pub fn cells(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn measure(&self, j: usize) -> f64 {
        self.meas[j]
    }

    pub fn boundary_weight(&self) -> f64 {
        self.r_omega * self.dtheta
    }

    pub fn center(&self, j: usize, i: usize) -> [f64; 2] {
        [self.rc[j] * self.cos_t[i], self.rc[j] * self.sin_t[i]]
    }

    /// Point on ∂Ω at the angle of boundary cell `i`.
    pub fn boundary_point(&self, i: usize) -> [f64; 2] {
        [self.r_omega * self.cos_t[i], self.r_omega * self.sin_t[i]]
    }

    /// Midpoint rule with cell measures; `v` holds one scalar per cell.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        let nt = self.n_theta;
        par::sum_rows(self.n_r, |j| v[j * nt..(j + 1) * nt].iter().sum::<f64>() * self.meas[j])
    }

    /// Boundary rule R_Ω Δθ per boundary cell.
    pub fn integrate_boundary(&self, v: &[f64]) -> f64 {
        v.iter().sum::<f64>() * self.boundary_weight()
    }

    /// ½ Σ_faces w (Δu)², summed over components.
    pub fn dirichlet(&self, u: &DiskField) -> f64 {
        let (nt, k) = (self.n_theta, u.k);
        par::sum_rows(self.n_r, |j| {
            let row = u.row(j);
            let mut s = 0.0;
            for i in 0..nt {
                let ip = (i + 1) % nt;
                for c in 0..k {
                    let d = row[ip * k + c] - row[i * k + c];
                    s += self.wt[j] * d * d;
                }
            }
            if j + 1 < self.n_r {
                let up = u.row(j + 1);
                for (a, b) in up.iter().zip(row) {
                    s += self.wr[j] * (a - b) * (a - b);
                }
            }
            0.5 * s
        })
    }

    /// Δ⁰u with homogeneous Neumann data at r = R_Ω, written into `out`.
    pub fn laplacian0_into(&self, u: &DiskField, out: &mut [f64]) {
        let (nt, k, nr) = (self.n_theta, u.k, self.n_r);
        par::for_each_chunk(out, nt * k, |j, orow| {
            let row = u.row(j);
            let inv_m = 1.0 / self.meas[j];
            for i in 0..nt {
                let ip = (i + 1) % nt;
                let im = (i + nt - 1) % nt;
                for c in 0..k {
                    let x = row[i * k + c];
                    let mut s = self.wt[j] * (row[ip * k + c] - 2.0 * x + row[im * k + c]);
                    if j + 1 < nr {
                        s += self.wr[j] * (u.row(j + 1)[i * k + c] - x);
                    }
                    if j > 0 {
                        s += self.wr[j - 1] * (u.row(j - 1)[i * k + c] - x);
                    }
                    orow[i * k + c] = s * inv_m;
                }
            }
        });
    }

    /// Δ_h u with Robin closure: the outward radial derivative at r = R_Ω is
    /// −g, with `g` holding k values per boundary cell.
    pub fn laplacian_robin(&self, u: &DiskField, g: &[f64]) -> DiskField {
        let mut out = DiskField::zeros(u.grid.clone(), u.k);
        self.laplacian0_into(u, &mut out.values);
        self.add_robin(&mut out.values, g, -1.0);
        out
    }

    /// out_b += scale · (R_Ω Δθ / m_b) g on the boundary ring.
    pub fn add_robin(&self, out: &mut [f64], g: &[f64], scale: f64) {
        let j = self.n_r - 1;
        let base = j * self.n_theta * (g.len() / self.n_theta);
        let f = scale * self.boundary_weight() / self.meas[j];
        for (o, gi) in out[base..].iter_mut().zip(g) {
            *o += f * gi;
        }
    }

    /// Cartesian gradient per cell, laid out [cell][component][x|y].
    /// `robin` gives the Robin data g (outward radial derivative −g) used for
    /// the outer ghost; without it a one-sided second-order difference is used.
    pub fn gradient(&self, u: &DiskField, robin: Option<&[f64]>) -> Vec<[f64; 2]> {
        let (nt, k, nr) = (self.n_theta, u.k, self.n_r);
        let mut out = vec![[0.0; 2]; nr * nt * k];
        let half = nt / 2;
        par::for_each_chunk(&mut out, nt * k, |j, orow| {
            let row = u.row(j);
            for i in 0..nt {
                let ip = (i + 1) % nt;
                let im = (i + nt - 1) % nt;
                let (ct, st) = (self.cos_t[i], self.sin_t[i]);
                for c in 0..k {
                    let dth = (row[ip * k + c] - row[im * k + c]) / (2.0 * self.sin_dt);
                    let dr = if j == 0 {
                        let opp = row[((i + half) % nt) * k + c];
                        (u.row(1)[i * k + c] - opp) / (2.0 * self.dr)
                    } else if j + 1 < nr {
                        (u.row(j + 1)[i * k + c] - u.row(j - 1)[i * k + c]) / (2.0 * self.dr)
                    } else {
                        match robin {
                            Some(g) => {
                                let ghost = row[i * k + c] - self.dr * g[i * k + c];
                                (ghost - u.row(j - 1)[i * k + c]) / (2.0 * self.dr)
                            }
                            None => {
                                (3.0 * row[i * k + c] - 4.0 * u.row(j - 1)[i * k + c]
                                    + u.row(j - 2)[i * k + c])
                                    / (2.0 * self.dr)
                            }
                        }
                    };
                    let r = self.rc[j];
                    orow[i * k + c] = [ct * dr - st / r * dth, st * dr + ct / r * dth];
                }
            }
        });
        out
    }

    /// Cell containing the point (nearest centre in (r, θ)).
    pub fn locate(&self, p: [f64; 2]) -> (usize, usize) {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let j = ((r / self.dr) as usize).min(self.n_r - 1);
        let th = p[1].atan2(p[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let i = ((th / self.dtheta).round() as usize) % self.n_theta;
        (j, i)
    }

    /// Bilinear interpolation in (r, θ); the ring below r_0 is the
    /// diametrically opposite ring 0, beyond the last centre values are held.
    pub fn sample(&self, u: &DiskField, p: [f64; 2]) -> VecK {
        let k = u.k;
        let nt = self.n_theta;
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let th = p[1].atan2(p[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let t = th / self.dtheta;
        let i0 = (t.floor() as usize) % nt;
        let i1 = (i0 + 1) % nt;
        let wt = t - t.floor();
        let s = (r / self.dr - 0.5).min((self.n_r - 1) as f64);
        let ring = |j: isize, i: usize, c: usize| -> f64 {
            if j < 0 {
                u.values[((i + nt / 2) % nt) * k + c]
            } else {
                u.values[(j as usize * nt + i) * k + c]
            }
        };
        let j0 = s.floor() as isize;
        let ws = s - s.floor();
        let j1 = (j0 + 1).min(self.n_r as isize - 1);
        (0..k)
            .map(|c| {
                let a = (1.0 - wt) * ring(j0, i0, c) + wt * ring(j0, i1, c);
                let b = (1.0 - wt) * ring(j1, i0, c) + wt * ring(j1, i1, c);
                (1.0 - ws) * a + ws * b
            })
            .collect()
    }
}

/// k-component grid function, stored cell-major: values[(j·N_θ + i)·k + c].
#[derive(Debug, Clone, PartialEq)]
pub struct DiskField {
    pub grid: Arc<PolarGrid>,
    pub k: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub k: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "N_theta")]
    pub n_theta: usize,
    #[serde(rename = "R_omega")]
    pub r_omega: f64,
    pub time: f64,
    pub epsilon: f64,
}

impl DiskField {
    pub fn zeros(grid: Arc<PolarGrid>, k: usize) -> Self {
        let n = grid.cells() * k;
        DiskField {
            grid,
            k,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: Arc<PolarGrid>, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() * k {
            return Err(Error::Config("field size does not match grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field ingest"));
        }
        Ok(DiskField { grid, k, values })
    }

    pub fn from_fn<F>(grid: Arc<PolarGrid>, k: usize, f: F) -> Self
    where
        F: Fn([f64; 2]) -> VecK + Sync + Send,
    {
        let mut u = DiskField::zeros(grid.clone(), k);
        let nt = grid.n_theta;
        par::for_each_chunk(&mut u.values, nt * k, |j, row| {
            for i in 0..nt {
                let v = f(grid.center(j, i));
                row[i * k..(i + 1) * k].copy_from_slice(&v[..k]);
            }
        });
        u
    }

    pub fn constant(grid: Arc<PolarGrid>, p: &[f64]) -> Self {
        let k = p.len();
        let mut u = DiskField::zeros(grid, k);
        for cell in u.values.chunks_mut(k) {
            cell.copy_from_slice(p);
        }
        u
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.grid.n_theta * self.k;
        &self.values[j * w..(j + 1) * w]
    }

    pub fn cell(&self, j: usize, i: usize) -> &[f64] {
        let o = (j * self.grid.n_theta + i) * self.k;
        &self.values[o..o + self.k]
    }

    pub fn boundary_row(&self) -> &[f64] {
        self.row(self.grid.n_r - 1)
    }

    /// max over cells of the Euclidean norm |u(x)|.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.k)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Mass-weighted L² norm.
    pub fn l2_norm(&self) -> f64 {
        self.l2_dot(self).sqrt()
    }

    pub fn l2_dot(&self, other: &DiskField) -> f64 {
        let w = self.grid.n_theta * self.k;
        par::sum_rows(self.grid.n_r, |j| {
            let a = &self.values[j * w..(j + 1) * w];
            let b = &other.values[j * w..(j + 1) * w];
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.grid.measure(j)
        })
    }

    pub fn l2_distance(&self, other: &DiskField) -> f64 {
        let w = self.grid.n_theta * self.k;
        par::sum_rows(self.grid.n_r, |j| {
            let a = &self.values[j * w..(j + 1) * w];
            let b = &other.values[j * w..(j + 1) * w];
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * self.grid.measure(j)
        })
        .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Write `<stem>.bin` (little-endian f64 in (k, r, θ) order) and `<stem>.json`.
    pub fn write_snapshot(&self, stem: &Path, time: f64, epsilon: f64) -> Result<()> {
        let g = &self.grid;
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for c in 0..self.k {
            for j in 0..g.n_r {
                for i in 0..g.n_theta {
                    bytes.extend_from_slice(&self.cell(j, i)[c].to_le_bytes());
                }
            }
        }
        std::fs::write(stem.with_extension("bin"), bytes)?;
        let meta = SnapshotMeta {
            k: self.k,
            n_r: g.n_r,
            n_theta: g.n_theta,
            r_omega: g.r_omega,
            time,
            epsilon,
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_snapshot(stem: &Path) -> Result<(DiskField, SnapshotMeta)> {
        let meta: SnapshotMeta =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        let grid = Arc::new(PolarGrid::new(meta.r_omega, meta.n_r, meta.n_theta)?);
        let n = grid.cells();
        if bytes.len() != n * meta.k * 8 {
            return Err(Error::Io("snapshot size does not match sidecar".into()));
        }
        let mut values = vec![0.0; n * meta.k];
        for (idx, chunk) in bytes.chunks_exact(8).enumerate() {
            let c = idx / n;
            let cell = idx % n;
            values[cell * meta.k + c] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok((DiskField::from_values(grid, meta.k, values)?, meta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    fn grid(nr: usize, nt: usize) -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(1.0, nr, nt).unwrap())
    }

    #[test]
    fn quadrature() {
        let g = grid(32, 64);
        let one = vec![1.0; g.cells()];
        assert!((g.integrate(&one) - std::f64::consts::PI).abs() < 1e-12);
        assert!((g.integrate_boundary(&vec![1.0; 64]) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        let x = DiskField::from_fn(g.clone(), 1, |p| smallvec![p[0]]);
        assert!(g.integrate(&x.values).abs() < 1e-14);
    }

    #[test]
    fn quadrature_order() {
        // ∫ exp(x) over the unit disk = 2π I_1(1)
        let exact = 2.0 * std::f64::consts::PI * 0.565_159_103_992_485_1;
        let err = |n: usize| {
            let g = grid(n, 4 * n);
            let v = DiskField::from_fn(g.clone(), 1, |p| smallvec![p[0].exp()]);
            (g.integrate(&v.values) - exact).abs()
        };
        let order = (err(16) / err(32)).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn gradient_linear_exact() {
        let g = grid(16, 32);
        let u = DiskField::from_fn(g.clone(), 2, |p| smallvec![p[0], 2.0 * p[0] - 3.0 * p[1] + 1.0]);
        let gr = g.gradient(&u, None);
        for cell in gr.chunks(2) {
            assert!((cell[0][0] - 1.0).abs() < 1e-10 && cell[0][1].abs() < 1e-10);
            assert!((cell[1][0] - 2.0).abs() < 1e-10 && (cell[1][1] + 3.0).abs() < 1e-10);
        }
        let c = DiskField::constant(g.clone(), &[0.3, -2.0]);
        assert!(g.gradient(&c, None).iter().all(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12));
    }

    #[test]
    fn gradient_r2_second_order() {
        let err = |n: usize| {
            let g = grid(n, 2 * n);
            let u = DiskField::from_fn(g.clone(), 1, |p| smallvec![p[0] * p[0] + p[1] * p[1]]);
            let gr = g.gradient(&u, None);
            let mut e: f64 = 0.0;
            for j in 0..g.n_r {
                for i in 0..g.n_theta {
                    let v = gr[j * g.n_theta + i];
                    e = e.max(((v[0] * v[0] + v[1] * v[1]).sqrt() - 2.0 * g.rc[j]).abs());
                }
            }
            e
        };
        let (a, b) = (err(16), err(32));
        assert!((a / b).log2() >= 1.9 || b < 1e-12, "{a} {b}");
    }

    #[test]
    fn laplacian_exact_cases() {
        let g = grid(16, 32);
        let c = DiskField::constant(g.clone(), &[1.5]);
        let l = g.laplacian_robin(&c, &vec![0.0; 32]);
        assert!(l.values.iter().all(|v| v.abs() < 1e-12));
        // u = x: outward derivative cos θ, so g = −cos θ
        let u = DiskField::from_fn(g.clone(), 1, |p| smallvec![p[0]]);
        let gb: Vec<f64> = g.cos_t.iter().map(|c| -c).collect();
        let l = g.laplacian_robin(&u, &gb);
        assert!(l.values.iter().all(|v| v.abs() < 1e-10));
        // u = r²: Δu = 4 on the interior rings
        let u = DiskField::from_fn(g.clone(), 1, |p| smallvec![p[0] * p[0] + p[1] * p[1]]);
        let l = g.laplacian_robin(&u, &vec![0.0; 32]);
        for j in 0..g.n_r - 1 {
            assert!(l.row(j).iter().all(|v| (v - 4.0).abs() < 1e-9));
        }
        // with matching flux data the last ring is exact as well
        let l = g.laplacian_robin(&u, &vec![-2.0; 32]);
        assert!(l.values.iter().all(|v| (v - 4.0).abs() < 1e-9));
    }

    #[test]
    fn divergence_theorem() {
        let g = grid(12, 24);
        let u = DiskField::from_fn(g.clone(), 1, |p| smallvec![(3.0 * p[0]).sin() + p[1] * p[1]]);
        let gb: Vec<f64> = (0..24).map(|i| 0.3 + (i as f64).cos()).collect();
        let l = g.laplacian_robin(&u, &gb);
        let lhs = g.integrate(&l.values);
        let rhs = -g.integrate_boundary(&gb);
        assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn dirichlet_matches_laplacian() {
        // D(u) = −½ Σ m u Δ⁰u
        let g = grid(10, 20);
        let u = DiskField::from_fn(g.clone(), 2, |p| smallvec![p[0].cos() * p[1], p[0] * p[0]]);
        let mut l = vec![0.0; u.values.len()];
        g.laplacian0_into(&u, &mut l);
        let lf = DiskField::from_values(g.clone(), 2, l).unwrap();
        let d = -0.5 * u.l2_dot(&lf);
        assert!((d - g.dirichlet(&u)).abs() < 1e-12);
    }

    #[test]
    fn sample_reproduces_linears_inside() {
        let g = grid(16, 64);
        let u = DiskField::from_fn(g.clone(), 1, |p| smallvec![1.0 + 0.5 * p[0]]);
        let v = g.sample(&u, [0.3, 0.2]);
        assert!((v[0] - 1.15).abs() < 1e-3);
        let v = g.sample(&u, [0.01, 0.0]);
        assert!((v[0] - 1.005).abs() < 1e-3);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = grid(8, 16);
        let u = DiskField::from_fn(g.clone(), 2, |p| smallvec![p[0].sin() / 3.0, p[1].exp()]);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("u_000001");
        u.write_snapshot(&stem, 0.25, 0.05).unwrap();
        let (v, meta) = DiskField::read_snapshot(&stem).unwrap();
        assert_eq!(v.values, u.values);
        assert_eq!(meta.time, 0.25);
        assert_eq!(meta.n_theta, 16);
        // file order is (k, r, θ)
        let bytes = std::fs::read(stem.with_extension("bin")).unwrap();
        let first = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        assert_eq!(first, u.cell(0, 1)[0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PolarGrid::new(1.0, 4, 32).is_err());
        assert!(PolarGrid::new(1.0, 8, 17).is_err());
        let g = grid(8, 16);
        let mut v = vec![0.0; g.cells()];
        v[3] = f64::NAN;
        assert!(DiskField::from_values(g, 1, v).is_err());
    }
}
