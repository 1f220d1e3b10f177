//! Heteroclinic profile α(t) of the one-dimensional potential F̃, its
//! truncation α_{2L}, and well-prepared initial data.

use std::sync::Arc;

use smallvec::smallvec;

use crate::curve::SignedDistance;
use crate::energetics::EnergeticsContext;
use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::manifolds::{VecK, WellShape};
use crate::quad;

/// F̃(λ) = f((dist_N/2 − |λ|)²).
pub fn f_tilde(ctx: &EnergeticsContext, lambda: f64) -> f64 {
    let h = ctx.mp.dist_n / 2.0;
    let d = (h - lambda.abs()).max(0.0);
    ctx.f.value(d * d)
}

#[derive(Debug, Clone)]
pub struct Profile {
    pub half: f64,
    pub t_box: f64,
    pub h: f64,
    /// Samples on t ≥ 0 (the profile is odd).
    pub alpha: Vec<f64>,
    pub dalpha: Vec<f64>,
    delta: f64,
}

/// Integrate α' = √(2F̃(α)), α(0) = 0, on [0, T_box] with RK4 and step
/// T_box/n_steps, switching to the exponential closed form once α enters the
/// identity branch of f.
pub fn solve_profile(ctx: &EnergeticsContext, t_box: f64, n_steps: usize) -> Result<Profile> {
    if !(t_box > 0.0) || n_steps < 2 {
        return Err(Error::Config("profile box and step count must be positive".into()));
    }
    let half = ctx.mp.dist_n / 2.0;
    let delta = ctx.f.delta_n;
    let h = t_box / n_steps as f64;
    let rhs = |a: f64| (2.0 * f_tilde(ctx, a)).sqrt();
    let mut alpha = Vec::with_capacity(n_steps + 1);
    let mut dalpha = Vec::with_capacity(n_steps + 1);
    let mut a = 0.0;
    let mut tail: Option<(usize, f64)> = None;
    for n in 0..=n_steps {
        if let Some((n0, gap0)) = tail {
            let gap = gap0 * (-std::f64::consts::SQRT_2 * (n - n0) as f64 * h).exp();
            a = half - gap;
            alpha.push(a);
            dalpha.push(std::f64::consts::SQRT_2 * gap);
            continue;
        }
        alpha.push(a);
        dalpha.push(rhs(a));
        let gap = half - a;
        if gap <= delta {
            tail = Some((n, gap));
            continue;
        }
        let k1 = rhs(a);
        if k1 < 1e-300 {
            return Err(Error::StalledProfile(n as f64 * h));
        }
        let k2 = rhs(a + 0.5 * h * k1);
        let k3 = rhs(a + 0.5 * h * k2);
        let k4 = rhs(a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        a = a.min(half);
    }
    let p = Profile {
        half,
        t_box,
        h,
        alpha,
        dalpha,
        delta,
    };
    let end_gap = half - p.alpha[n_steps];
    if end_gap > 1e-8 {
        return Err(Error::Config(format!(
            "profile box {t_box} too short: alpha(T) misses the well by {end_gap:e}"
        )));
    }
    Ok(p)
}

impl Profile {
    /// Default resolution used by the run pipeline.
    pub fn standard(ctx: &EnergeticsContext) -> Result<Self> {
        solve_profile(ctx, 24.0, 24_000)
    }

    fn eval_pos(&self, t: f64) -> (f64, f64) {
        let n = self.alpha.len() - 1;
        if t >= self.t_box {
            let gap0 = self.half - self.alpha[n];
            let gap = gap0 * (-std::f64::consts::SQRT_2 * (t - self.t_box)).exp();
            return (self.half - gap, std::f64::consts::SQRT_2 * gap);
        }
        let x = t / self.h;
        let i = (x.floor() as usize).min(n - 1);
        let s = x - i as f64;
        let (y0, y1) = (self.alpha[i], self.alpha[i + 1]);
        let (m0, m1) = (self.dalpha[i] * self.h, self.dalpha[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let d = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / self.h;
        (v, d)
    }

    /// (α(t), α'(t)) from the cubic Hermite interpolant.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if t >= 0.0 {
            self.eval_pos(t)
        } else {
            let (v, d) = self.eval_pos(-t);
            (-v, d)
        }
    }

    /// End of the linear plateau segment (f saturated).
    pub fn plateau_end(&self) -> f64 {
        (self.half - std::f64::consts::SQRT_2 * self.delta).max(0.0) / (2.0 * self.delta)
    }

    pub fn truncate(&self, l: f64) -> Result<TruncatedProfile> {
        truncate_profile(self, l)
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedProfile {
    pub base: Profile,
    pub l: f64,
    a_l: f64,
}

pub fn truncate_profile(p: &Profile, l: f64) -> Result<TruncatedProfile> {
    if !(l > 0.0) {
        return Err(Error::Config("truncation length must be positive".into()));
    }
    Ok(TruncatedProfile {
        base: p.clone(),
        l,
        a_l: p.eval(l).0,
    })
}

impl TruncatedProfile {
    /// (α_{2L}(t), α_{2L}'(t)).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (l, h) = (self.l, self.base.half);
        let s = t.abs();
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        if s <= l {
            return self.base.eval(t);
        }
        if s >= 2.0 * l {
            return (sign * h, 0.0);
        }
        let v = (2.0 * l - s) / l * self.a_l + (s - l) / l * h;
        (sign * v, (h - self.a_l) / l)
    }

    /// ∫_{−2L}^{2L} (½|α'_{2L}|² + F̃(α_{2L})) dt.
    pub fn energy(&self, ctx: &EnergeticsContext) -> f64 {
        let g = |t: f64| {
            let (a, d) = self.eval(t);
            0.5 * d * d + f_tilde(ctx, a)
        };
        let l = self.l;
        let mut knots = vec![0.0, l, 2.0 * l];
        let pe = self.base.plateau_end();
        if pe < l {
            knots.push(pe);
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s = 0.0;
        for w in knots.windows(2) {
            let panels = ((w[1] - w[0]) / 0.01).ceil().max(1.0) as usize;
            s += quad::gauss_legendre(&g, w[0], w[1], panels);
        }
        2.0 * s
    }

    /// sup_t ||α'_{2L}| − √(2F̃(α_{2L}))| over the blended region.
    pub fn defect(&self, ctx: &EnergeticsContext) -> f64 {
        let n = 2000;
        (0..=n)
            .map(|i| {
                let t = self.l + self.l * i as f64 / n as f64;
                let (a, d) = self.eval(t);
                (d.abs() - (2.0 * f_tilde(ctx, a)).sqrt()).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The pair of well points joined by the initial profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Phases {
    /// Fixed minimal pair p⁻, p⁺.
    Pair(VecK, VecK),
    /// Concentric circle wells in the plane: the pair sits on the ray at
    /// angle φ_mid(x) ∓ mismatch/2, φ_mid(x) = offset + gradient·x.
    Angular {
        offset: f64,
        gradient: [f64; 2],
        mismatch: f64,
    },
}

/// Default minimal pair: the wells for points, radially aligned on the x-axis ray for spheres.
pub fn default_pair(ctx: &EnergeticsContext) -> Result<(VecK, VecK)> {
    let k = ctx.k();
    let mut dir: VecK = smallvec![0.0; k];
    dir[0] = 1.0;
    let pick = |w: &WellShape| -> VecK {
        match w {
            WellShape::Point { center } => center.iter().copied().collect(),
            WellShape::Sphere { center, radius, .. } => center
                .iter()
                .zip(dir.iter())
                .map(|(c, d)| c + radius * d)
                .collect(),
        }
    };
    let pm = pick(&ctx.mp.minus);
    let pp = pick(&ctx.mp.plus);
    let gap = crate::manifolds::norm_diff(&pm, &pp);
    if (gap - ctx.mp.dist_n).abs() > 1e-10 {
        return Err(Error::Config(format!(
            "default pair is not minimal: |p+ - p-| = {gap}, dist_N = {}",
            ctx.mp.dist_n
        )));
    }
    Ok((pm, pp))
}

/// u_{ε,0}(x) = (p⁺+p⁻)/2 + α_{2L}(d(x)/ε)(p⁺−p⁻)/|p⁺−p⁻| with 2L = ε^{−β}.
pub fn initial_data(
    ctx: &EnergeticsContext,
    grid: &Arc<PolarGrid>,
    sd: &SignedDistance,
    profile: &Profile,
    eps: f64,
    beta: f64,
    phases: &Phases,
) -> Result<DiskField> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!("beta = {beta} outside (0, 1)")));
    }
    let l = 0.5 * eps.powf(-beta);
    let tube = 2.0 * l * eps;
    let limit = sd.regular_radius();
    if tube > limit {
        return Err(Error::ProfileTooWide { tube, limit });
    }
    let tp = profile.truncate(l)?;
    let k = ctx.k();
    let half = ctx.mp.dist_n / 2.0;
    match phases {
        Phases::Pair(pm, pp) => {
            let gap = crate::manifolds::norm_diff(pm, pp);
            if (gap - ctx.mp.dist_n).abs() > 1e-10 {
                return Err(Error::Config("p+ and p- do not form a minimal pair".into()));
            }
            let e: VecK = pp.iter().zip(pm.iter()).map(|(a, b)| (a - b) / gap).collect();
            let mid: VecK = pp.iter().zip(pm.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
            Ok(DiskField::from_fn(grid.clone(), k, |x| {
                let d = sd.value(x);
                let (a, _) = tp.eval(d / eps);
                if a >= half {
                    return pp.clone();
                }
                if a <= -half {
                    return pm.clone();
                }
                mid.iter().zip(e.iter()).map(|(m, ei)| m + a * ei).collect()
            }))
        }
        Phases::Angular {
            offset,
            gradient,
            mismatch,
        } => {
            let (c, rm, rp) = match (&ctx.mp.minus, &ctx.mp.plus) {
                (
                    WellShape::Sphere {
                        center: c1,
                        radius: r1,
                        intrinsic_dim: 1,
                    },
                    WellShape::Sphere {
                        center: c2,
                        radius: r2,
                        intrinsic_dim: 1,
                    },
                ) if k == 2 && c1 == c2 => (c1.clone(), *r1, *r2),
                _ => {
                    return Err(Error::Config(
                        "angular phases need concentric circle wells in the plane".into(),
                    ))
                }
            };
            let (offset, gradient, mismatch) = (*offset, *gradient, *mismatch);
            Ok(DiskField::from_fn(grid.clone(), k, move |x| {
                let d = sd.value(x);
                let (a, _) = tp.eval(d / eps);
                let w = (a + half) / (2.0 * half);
                let phi_mid = offset + gradient[0] * x[0] + gradient[1] * x[1];
                let phi = phi_mid + (w - 0.5) * mismatch;
                let rad = rm + w * (rp - rm);
                smallvec![c[0] + rad * phi.cos(), c[1] + rad * phi.sin()]
            }))
        }
    }
}
