//! Smoothing f, potential F, quasi-distance d_F with surface tension c_F,
//! the projection Π_u and the boundary density σ.

use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::manifolds::{ManifoldPair, VecK};
use crate::quad;

/// f(s) = s below δ², 2δ² above 2δ², quintic Hermite in between.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingF {
    pub delta_n: f64,
}

impl SmoothingF {
    pub fn new(delta_n: f64) -> Result<Self> {
        let f = SmoothingF { delta_n };
        let d2 = delta_n * delta_n;
        for i in 0..=4000 {
            let s = d2 + d2 * i as f64 / 4000.0;
            if f.deriv(s) < -1e-14 {
                return Err(Error::Config("smoothing f is not monotone".into()));
            }
        }
        Ok(f)
    }

    pub fn value(&self, s: f64) -> f64 {
        let d2 = self.delta_n * self.delta_n;
        if s <= d2 {
            s
        } else if s >= 2.0 * d2 {
            2.0 * d2
        } else {
            let x = (s - d2) / d2;
            d2 + d2 * x * (1.0 + x * x * (4.0 + x * (-7.0 + 3.0 * x)))
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let d2 = self.delta_n * self.delta_n;
        if s <= d2 {
            1.0
        } else if s >= 2.0 * d2 {
            0.0
        } else {
            let x = (s - d2) / d2;
            1.0 + x * x * (12.0 + x * (-28.0 + 15.0 * x))
        }
    }

    pub fn second_deriv(&self, s: f64) -> f64 {
        let d2 = self.delta_n * self.delta_n;
        if s <= d2 || s >= 2.0 * d2 {
            0.0
        } else {
            let x = (s - d2) / d2;
            12.0 * x * (5.0 * x - 2.0) * (x - 1.0) / d2
        }
    }
}

/// G(t) = ∫₀ᵗ √(2 f(λ²)) dλ. Closed form outside [δ, √2 δ], cubic Hermite
/// table inside.
#[derive(Debug, Clone)]
struct GTable {
    f: SmoothingF,
    lo: f64,
    hi: f64,
    h: f64,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

const G_KNOTS: usize = 4096;

impl GTable {
    fn new(f: SmoothingF) -> Self {
        let d = f.delta_n;
        let lo = d;
        let hi = std::f64::consts::SQRT_2 * d;
        let h = (hi - lo) / G_KNOTS as f64;
        let integrand = |l: f64| (2.0 * f.value(l * l)).sqrt();
        let mut vals = Vec::with_capacity(G_KNOTS + 1);
        let mut ders = Vec::with_capacity(G_KNOTS + 1);
        let mut acc = lo * lo / std::f64::consts::SQRT_2;
        for i in 0..=G_KNOTS {
            let t = lo + i as f64 * h;
            if i > 0 {
                acc += quad::adaptive_simpson(&integrand, t - h, t, 1e-17);
            }
            vals.push(acc);
            ders.push(integrand(t));
        }
        GTable {
            f,
            lo,
            hi,
            h,
            vals,
            ders,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= self.lo {
            return t * t / std::f64::consts::SQRT_2;
        }
        if t >= self.hi {
            return self.vals[G_KNOTS] + 2.0 * self.f.delta_n * (t - self.hi);
        }
        let x = (t - self.lo) / self.h;
        let i = (x.floor() as usize).min(G_KNOTS - 1);
        let s = x - i as f64;
        let (y0, y1) = (self.vals[i], self.vals[i + 1]);
        let (m0, m1) = (self.ders[i] * self.h, self.ders[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }

    fn deriv(&self, t: f64) -> f64 {
        (2.0 * self.f.value(t * t)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergeticsConfig {
    /// Contact angle in degrees, in (0, 90].
    pub alpha_deg: f64,
    /// Overshoot amplitude of the boundary density shape.
    pub lambda_b: f64,
    pub tail_stiffness: f64,
}

impl Default for EnergeticsConfig {
    fn default() -> Self {
        EnergeticsConfig {
            alpha_deg: 90.0,
            lambda_b: 0.5,
            tail_stiffness: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergeticsContext {
    pub mp: ManifoldPair,
    pub f: SmoothingF,
    pub r1: f64,
    pub r2: f64,
    pub c1: f64,
    pub alpha: f64,
    pub cos_alpha: f64,
    pub c_f: f64,
    pub tail_stiffness: f64,
    pub lambda_b: f64,
    gtab: GTable,
}

impl EnergeticsContext {
    pub fn new(mp: ManifoldPair, cfg: &EnergeticsConfig) -> Result<Self> {
        if !(cfg.alpha_deg > 0.0 && cfg.alpha_deg <= 90.0) {
            return Err(Error::Config(format!("alpha = {} outside (0, 90]", cfg.alpha_deg)));
        }
        if !(cfg.lambda_b >= 0.0) || !(cfg.tail_stiffness > 0.0) {
            return Err(Error::Config("lambda_b must be >= 0, tail_stiffness > 0".into()));
        }
        let f = SmoothingF::new(mp.delta_n)?;
        let gtab = GTable::new(f);
        let alpha = cfg.alpha_deg.to_radians();
        let cos_alpha = if cfg.alpha_deg == 90.0 { 0.0 } else { alpha.cos() };
        let c_f = 2.0 * gtab.eval(mp.dist_n / 2.0);
        let r1 = mp.r_n + 1.0;
        let r2 = 2.0 * r1;
        let c1 = cfg.tail_stiffness * r2 * r2 / 16.0;
        let ctx = EnergeticsContext {
            mp,
            f,
            r1,
            r2,
            c1,
            alpha,
            cos_alpha,
            c_f,
            tail_stiffness: cfg.tail_stiffness,
            lambda_b: cfg.lambda_b,
            gtab,
        };
        for i in 0..=10000 {
            if ctx.shape_b(i as f64 / 10000.0).1 < 0.0 {
                return Err(Error::Config(format!(
                    "lambda_b = {} makes the boundary density non-monotone",
                    cfg.lambda_b
                )));
            }
        }
        Ok(ctx)
    }

    pub fn k(&self) -> usize {
        self.mp.k
    }

    /// Surface tension by adaptive quadrature, independent of the table.
    pub fn c_f_adaptive(&self, tol: f64) -> f64 {
        let f = self.f;
        let g = |l: f64| (2.0 * f.value(l * l)).sqrt();
        let d = f.delta_n;
        let a = std::f64::consts::SQRT_2 * d;
        let half = self.mp.dist_n / 2.0;
        let mid = quad::adaptive_simpson(&g, d, a.min(half), tol);
        2.0 * (d.min(half).powi(2) / std::f64::consts::SQRT_2 + mid + 2.0 * d * (half - a).max(0.0))
    }

    /// G(t) = ∫₀ᵗ √(2f(λ²)) dλ.
    pub fn g_of(&self, t: f64) -> f64 {
        self.gtab.eval(t)
    }

    /// F(u) and ∇F(u).
    pub fn potential(&self, u: &[f64]) -> (f64, VecK) {
        let nu = crate::manifolds::norm(u);
        if nu > self.r1 {
            let s = nu - self.r1;
            let val = 2.0 * self.f.delta_n.powi(2) + self.tail_stiffness * s.powi(4);
            let g = 4.0 * self.tail_stiffness * s.powi(3) / nu;
            return (val, u.iter().map(|x| g * x).collect());
        }
        let (dm, dp, dn) = self.mp.dist_to_wells(u);
        let d2 = dn * dn;
        let val = self.f.value(d2);
        let fp = self.f.deriv(d2);
        if fp == 0.0 {
            return (val, smallvec![0.0; u.len()]);
        }
        let p = if dm < dp {
            self.mp.minus.project(u)
        } else {
            self.mp.plus.project(u)
        };
        match p {
            Ok(p) => (
                val,
                u.iter().zip(p.iter()).map(|(a, b)| 2.0 * fp * (a - b)).collect(),
            ),
            Err(_) => (val, smallvec![0.0; u.len()]),
        }
    }

    pub fn potential_value(&self, u: &[f64]) -> f64 {
        let nu = crate::manifolds::norm(u);
        if nu > self.r1 {
            return 2.0 * self.f.delta_n.powi(2) + self.tail_stiffness * (nu - self.r1).powi(4);
        }
        let (_, _, dn) = self.mp.dist_to_wells(u);
        self.f.value(dn * dn)
    }

    /// ψ = d_F(u).
    pub fn quasi_distance(&self, u: &[f64]) -> f64 {
        let half = self.mp.dist_n / 2.0;
        let dm = self.mp.minus.distance(u);
        if dm <= half {
            return self.gtab.eval(dm);
        }
        let dp = self.mp.plus.distance(u);
        if dp <= half {
            return self.c_f - self.gtab.eval(dp);
        }
        self.c_f / 2.0
    }

    /// Dd_F(u).
    pub fn quasi_distance_grad(&self, u: &[f64]) -> VecK {
        self.quasi_distance_with_grad(u).1
    }

    /// (d_F(u), Dd_F(u)) in one pass.
    pub fn quasi_distance_with_grad(&self, u: &[f64]) -> (f64, VecK) {
        let half = self.mp.dist_n / 2.0;
        let zero = || smallvec![0.0; u.len()];
        let dm = self.mp.minus.distance(u);
        let (well, d, sign, val) = if dm <= half {
            (&self.mp.minus, dm, 1.0, self.gtab.eval(dm))
        } else {
            let dp = self.mp.plus.distance(u);
            if dp <= half {
                (&self.mp.plus, dp, -1.0, self.c_f - self.gtab.eval(dp))
            } else {
                return (self.quasi_distance(u), zero());
            }
        };
        let factor = if d * d <= self.f.delta_n * self.f.delta_n {
            std::f64::consts::SQRT_2
        } else {
            self.gtab.deriv(d) / d
        };
        match well.project(u) {
            Ok(p) => (
                val,
                u.iter()
                    .zip(p.iter())
                    .map(|(a, b)| sign * factor * (a - b))
                    .collect(),
            ),
            Err(_) => (val, zero()),
        }
    }

    /// Π_u g, columnwise projection of the k×2 Jacobian `g` (row c = ∇u_c)
    /// onto the direction of Dd_F(u).
    pub fn pi_projection(&self, u: &[f64], g: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let dd = self.quasi_distance_grad(u);
        pi_with(&dd, g)
    }

    /// S(s) = c_F·B(s/c_F) and S'(s).
    pub fn shape_s(&self, s: f64) -> (f64, f64) {
        let (b, bp) = self.shape_b(s / self.c_f);
        (self.c_f * b, bp)
    }

    fn shape_b(&self, x: f64) -> (f64, f64) {
        let x = x.clamp(0.0, 1.0);
        let pi = std::f64::consts::PI;
        let sn = (pi * x).sin();
        let l = self.lambda_b;
        let b = x + l * x * (1.0 - x) * sn * sn;
        let bp = 1.0 + l * ((1.0 - 2.0 * x) * sn * sn + x * (1.0 - x) * pi * (2.0 * pi * x).sin());
        (b, bp)
    }

    /// σ(u) and ∇σ(u).
    pub fn sigma(&self, u: &[f64]) -> (f64, VecK) {
        if self.cos_alpha == 0.0 {
            return (0.0, smallvec![0.0; u.len()]);
        }
        let (psi, dd) = self.quasi_distance_with_grad(u);
        let (s, sp) = self.shape_s(psi);
        let c = self.cos_alpha;
        (c * s, dd.iter().map(|x| c * sp * x).collect())
    }

    pub fn sigma_value(&self, u: &[f64]) -> f64 {
        if self.cos_alpha == 0.0 {
            return 0.0;
        }
        self.cos_alpha * self.shape_s(self.quasi_distance(u)).0
    }
}

/// Columnwise projection onto the line spanned by `dd` (zero if `dd` = 0).
pub fn pi_with(dd: &[f64], g: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = crate::manifolds::norm(dd);
    if n == 0.0 {
        return vec![[0.0; 2]; g.len()];
    }
    let mut col = [0.0; 2];
    for (c, row) in g.iter().enumerate() {
        let e = dd[c] / n;
        col[0] += row[0] * e;
        col[1] += row[1] * e;
    }
    (0..g.len())
        .map(|c| {
            let e = dd[c] / n;
            [col[0] * e, col[1] * e]
        })
        .collect()
}

/// Ginzburg–Landau energy split into (bulk, boundary).
///
/// The Dirichlet part is the face-based discrete form, so the semi-discrete
/// flow is the exact gradient flow of this energy.
pub fn gl_energy(ctx: &EnergeticsContext, u: &DiskField, grid: &PolarGrid, eps: f64) -> (f64, f64) {
    let k = u.k;
    let nt = grid.n_theta;
    let dir = grid.dirichlet(u);
    let pot = crate::par::sum_rows(grid.n_r, |j| {
        let row = u.row(j);
        let mut s = 0.0;
        for i in 0..nt {
            s += ctx.potential_value(&row[i * k..(i + 1) * k]);
        }
        s * grid.measure(j)
    });
    let bulk = eps * dir + pot / eps;
    let boundary = if ctx.cos_alpha == 0.0 {
        0.0
    } else {
        let row = u.row(grid.n_r - 1);
        let mut s = 0.0;
        for i in 0..nt {
            s += ctx.sigma_value(&row[i * k..(i + 1) * k]);
        }
        s * grid.boundary_weight()
    };
    (bulk, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::ManifoldConfig;

    fn ctx(alpha: f64) -> EnergeticsContext {
        let mp = ManifoldConfig::mp().build().unwrap();
        EnergeticsContext::new(
            mp,
            &EnergeticsConfig {
                alpha_deg: alpha,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn gradient_continuous_through_midpoint() {
        let c = ctx(90.0);
        let at = |x: f64| c.quasi_distance_grad(&[x, 0.0]);
        let g0 = at(0.0);
        for x in [-1e-16, 1e-16, -1e-9, 1e-9] {
            let g = at(x);
            assert!((g[0] - g0[0]).abs() < 1e-8 && g[1].abs() < 1e-12, "{x}: {g:?}");
        }
        assert!((g0[0] - 0.5).abs() < 1e-8, "{g0:?}");
    }

    #[test]
    fn smoothing_knots() {
        let f = SmoothingF::new(0.25).unwrap();
        let d2 = 0.0625;
        assert_eq!(f.value(d2), d2);
        assert!((f.value(2.0 * d2) - 2.0 * d2).abs() < 1e-16);
        let h = 1e-7;
        assert!((f.deriv(d2 + h) - 1.0).abs() < 1e-10);
        assert!(f.deriv(2.0 * d2 - h).abs() < 1e-10);
        assert!(f.second_deriv(d2 + h).abs() < 1e-3);
        assert!(f.second_deriv(2.0 * d2 - h).abs() < 1e-3);
        for i in 0..3000 {
            let s = 3.0 * d2 * i as f64 / 3000.0;
            assert!(f.deriv(s) >= 0.0);
            // derivative consistent with value
            let fd = (f.value(s + 1e-7) - f.value(s - 1e-7)) / 2e-7;
            if s > 1e-6 {
                assert!((fd - f.deriv(s)).abs() < 1e-6, "s={s}");
            }
        }
    }

    #[test]
    fn potential_examples() {
        let c = ctx(90.0);
        let (v, g) = c.potential(&[1.0, 0.0]);
        assert_eq!((v, g.as_slice()), (0.0, &[0.0, 0.0][..]));
        let (v, g) = c.potential(&[0.9, 0.0]);
        assert!((v - 0.01).abs() < 1e-15);
        assert!((g[0] + 0.2).abs() < 1e-15 && g[1] == 0.0);
        let (v, g) = c.potential(&[0.0, 0.0]);
        assert_eq!(v, 0.125);
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn tail_growth() {
        let c = ctx(90.0);
        for r in [c.r2, 1.5 * c.r2, 3.0 * c.r2] {
            let u = [r * 0.6, r * 0.8];
            assert!(c.potential_value(&u) >= c.c1 * r * r);
        }
        // continuity across R_1
        let a = c.potential_value(&[c.r1 - 1e-9, 0.0]);
        let b = c.potential_value(&[c.r1 + 1e-9, 0.0]);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn surface_tension() {
        let c = ctx(90.0);
        let adaptive = c.c_f_adaptive(1e-13);
        assert!((c.c_f - adaptive).abs() < 1e-11, "{} {}", c.c_f, adaptive);
        // independent oracle: composite Gauss-Legendre, doubling panels
        let f = c.f;
        let g = |l: f64| (2.0 * f.value(l * l)).sqrt();
        let q = |n| 2.0 * quad::gauss_legendre(&g, 0.0, 1.0, n);
        // kinks at delta and sqrt2*delta: integrate piecewise
        let pw = |n: usize| {
            let d = 0.25;
            let a = std::f64::consts::SQRT_2 * d;
            2.0 * (quad::gauss_legendre(&g, 0.0, d, n)
                + quad::gauss_legendre(&g, d, a, n)
                + quad::gauss_legendre(&g, a, 1.0, n))
        };
        assert!((pw(64) - pw(128)).abs() < 1e-10);
        assert!((pw(128) - c.c_f).abs() < 1e-11);
        assert!((q(4096) - c.c_f).abs() < 1e-6);
    }

    #[test]
    fn quasi_distance_values() {
        let c = ctx(90.0);
        assert_eq!(c.quasi_distance(&[-1.0, 0.0]), 0.0);
        assert!((c.quasi_distance(&[1.0, 0.0]) - c.c_f).abs() < 1e-15);
        assert!((c.quasi_distance(&[0.0, 0.0]) - c.c_f / 2.0).abs() < 1e-15);
    }

    #[test]
    fn quasi_distance_grad_vs_fd() {
        let c = ctx(90.0);
        let g = c.quasi_distance_grad(&[0.5, 0.0]);
        assert!((g[0] - 0.5).abs() < 1e-14 && g[1].abs() < 1e-14);
        let h = 1e-6;
        for u in [[0.5, 0.0], [0.3, 0.2], [-0.7, -0.1], [-0.95, 0.02], [0.8, -0.3]] {
            let g = c.quasi_distance_grad(&u);
            for a in 0..2 {
                let mut up = u;
                let mut um = u;
                up[a] += h;
                um[a] -= h;
                let fd = (c.quasi_distance(&up) - c.quasi_distance(&um)) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-8, "{u:?} {a} {fd} {}", g[a]);
            }
        }
        assert_eq!(c.quasi_distance_grad(&[1.0, 0.0]).as_slice(), &[0.0, 0.0]);
        let cc = EnergeticsContext::new(
            ManifoldConfig::cc().build().unwrap(),
            &EnergeticsConfig::default(),
        )
        .unwrap();
        assert_eq!(cc.quasi_distance_grad(&[0.0, 5.0]).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn projection_examples() {
        let p = pi_with(&[3.0, 0.0], &[[2.0, 0.0], [3.0, 0.0]]);
        assert_eq!(p, vec![[2.0, 0.0], [0.0, 0.0]]);
        let p = pi_with(&[0.0, 0.0], &[[2.0, 1.0], [3.0, 4.0]]);
        assert_eq!(p, vec![[0.0; 2]; 2]);
    }

    #[test]
    fn sigma_examples() {
        let c = ctx(60.0);
        assert_eq!(c.sigma(&[-1.0, 0.0]).0, 0.0);
        let (s, g) = c.sigma(&[1.0, 0.0]);
        assert!((s - c.c_f * 0.5).abs() < 1e-15);
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
        let c90 = ctx(90.0);
        assert_eq!(c90.sigma(&[0.2, 0.4]).0, 0.0);
        // sigma >= d_F cos alpha
        for i in 0..200 {
            let x = -1.5 + 3.0 * i as f64 / 199.0;
            let u = [x, 0.1];
            assert!(c.sigma_value(&u) >= c.quasi_distance(&u) * c.cos_alpha - 1e-15);
        }
    }

    #[test]
    fn sigma_grad_vs_fd() {
        let c = ctx(60.0);
        let h = 1e-6;
        for u in [[0.5, 0.1], [-0.4, 0.2], [0.1, -0.05]] {
            let (_, g) = c.sigma(&u);
            for a in 0..2 {
                let mut up = u;
                let mut um = u;
                up[a] += h;
                um[a] -= h;
                let fd = (c.sigma_value(&up) - c.sigma_value(&um)) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let mp = ManifoldConfig::mp().build().unwrap();
        for a in [0.0, 91.0, -5.0] {
            let cfg = EnergeticsConfig {
                alpha_deg: a,
                ..Default::default()
            };
            assert!(EnergeticsContext::new(mp.clone(), &cfg).is_err());
        }
    }

    proptest::proptest! {
        #[test]
        fn prop_quasi_distance_bounds(x in -4.5f64..4.5, y in -4.5f64..4.5, alpha in 1.0f64..90.0, circles: bool) {
            let mc = if circles { ManifoldConfig::cc() } else { ManifoldConfig::mp() };
            let c = EnergeticsContext::new(
                mc.build().unwrap(),
                &EnergeticsConfig { alpha_deg: alpha, ..Default::default() },
            )
            .unwrap();
            let u = [x, y];
            let (d, g) = c.quasi_distance_with_grad(&u);
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            proptest::prop_assert!(gn <= (2.0 * c.potential_value(&u)).sqrt() + 1e-10);
            proptest::prop_assert!((0.0..=c.c_f).contains(&d));
            let s = c.sigma_value(&u);
            proptest::prop_assert!(s.is_finite());
        }
    }
}
