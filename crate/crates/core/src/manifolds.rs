//! The well pair N = N⁺ ∪ N⁻ ⊂ R^k: points and round spheres with exact
//! distance, projection, normal and second fundamental form.

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

pub type VecK = SmallVec<[f64; 4]>;

const TANGENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WellShape {
    Point {
        center: Vec<f64>,
    },
    /// Round sphere of dimension `intrinsic_dim` lying in the span of the first
    /// `intrinsic_dim + 1` coordinate axes, translated by `center`.
    Sphere {
        center: Vec<f64>,
        radius: f64,
        intrinsic_dim: usize,
    },
}

impl WellShape {
    pub fn center(&self) -> &[f64] {
        match self {
            WellShape::Point { center } | WellShape::Sphere { center, .. } => center,
        }
    }

    fn radius(&self) -> f64 {
        match self {
            WellShape::Point { .. } => 0.0,
            WellShape::Sphere { radius, .. } => *radius,
        }
    }

    fn span_dim(&self) -> usize {
        match self {
            WellShape::Point { .. } => 0,
            WellShape::Sphere { intrinsic_dim, .. } => intrinsic_dim + 1,
        }
    }

    /// Euclidean distance from `u` to the well.
    pub fn distance(&self, u: &[f64]) -> f64 {
        match self {
            WellShape::Point { center } => norm_diff(u, center),
            WellShape::Sphere {
                center,
                radius,
                intrinsic_dim,
            } => {
                let (par, perp) = split_norms(u, center, intrinsic_dim + 1);
                ((par - radius).powi(2) + perp * perp).sqrt()
            }
        }
    }

    /// Nearest point on the well.
    pub fn project(&self, u: &[f64]) -> Result<VecK> {
        match self {
            WellShape::Point { center } => Ok(center.iter().copied().collect()),
            WellShape::Sphere {
                center,
                radius,
                intrinsic_dim,
            } => {
                let m = intrinsic_dim + 1;
                let (par, _) = split_norms(u, center, m);
                if par < 1e-14 {
                    return Err(Error::AmbiguousProjection);
                }
                let mut p: VecK = center.iter().copied().collect();
                for i in 0..m {
                    p[i] += radius * (u[i] - center[i]) / par;
                }
                Ok(p)
            }
        }
    }

    /// Orthogonal projection of `v` onto the tangent space at `p` (assumed on the well).
    pub fn tangent_part(&self, p: &[f64], v: &[f64]) -> VecK {
        match self {
            WellShape::Point { .. } => smallvec![0.0; v.len()],
            WellShape::Sphere {
                center,
                radius,
                intrinsic_dim,
            } => {
                let m = intrinsic_dim + 1;
                let mut t: VecK = smallvec![0.0; v.len()];
                let mut dot = 0.0;
                for i in 0..m {
                    dot += v[i] * (p[i] - center[i]) / radius;
                }
                for i in 0..m {
                    t[i] = v[i] - dot * (p[i] - center[i]) / radius;
                }
                t
            }
        }
    }

    fn is_tangent(&self, p: &[f64], v: &[f64]) -> bool {
        let t = self.tangent_part(p, v);
        let scale = 1.0 + norm(v);
        norm_diff(&t, v) <= TANGENT_TOL * scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

/// JSON form of the manifold part of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConfig {
    pub minus: WellShape,
    pub plus: WellShape,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_n: Option<f64>,
    /// Admit k = 1 (scalar) configurations. Not used by acceptance runs.
    #[serde(default)]
    pub allow_scalar: bool,
}

impl ManifoldConfig {
    /// Two points (−1, 0) and (1, 0) in the plane.
    pub fn mp() -> Self {
        ManifoldConfig {
            minus: WellShape::Point {
                center: vec![-1.0, 0.0],
            },
            plus: WellShape::Point {
                center: vec![1.0, 0.0],
            },
            k: 2,
            delta_n: None,
            allow_scalar: false,
        }
    }

    /// Concentric circles of radius 1 (minus) and 3 (plus) about the origin.
    pub fn cc() -> Self {
        ManifoldConfig {
            minus: WellShape::Sphere {
                center: vec![0.0, 0.0],
                radius: 1.0,
                intrinsic_dim: 1,
            },
            plus: WellShape::Sphere {
                center: vec![0.0, 0.0],
                radius: 3.0,
                intrinsic_dim: 1,
            },
            k: 2,
            delta_n: None,
            allow_scalar: false,
        }
    }

    pub fn build(&self) -> Result<ManifoldPair> {
        ManifoldPair::new(self.clone())
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldPair {
    pub minus: WellShape,
    pub plus: WellShape,
    pub k: usize,
    pub dist_n: f64,
    pub delta_n: f64,
    pub r_n: f64,
    config: ManifoldConfig,
}

impl ManifoldPair {
    pub fn new(cfg: ManifoldConfig) -> Result<Self> {
        let k = cfg.k;
        if k < 2 && !(k == 1 && cfg.allow_scalar) {
            return Err(Error::Config(format!("ambient dimension k = {k} < 2")));
        }
        for w in [&cfg.minus, &cfg.plus] {
            if w.center().len() != k {
                return Err(Error::Config("well center has wrong dimension".into()));
            }
            if let WellShape::Sphere {
                radius,
                intrinsic_dim,
                ..
            } = w
            {
                if !(*radius > 0.0) {
                    return Err(Error::Config("sphere radius must be positive".into()));
                }
                if *intrinsic_dim < 1 || *intrinsic_dim > k - 1 {
                    return Err(Error::Config("sphere intrinsic_dim out of range".into()));
                }
            }
        }
        let dist_n = pair_distance(&cfg.minus, &cfg.plus)?;
        if !(dist_n > 0.0) {
            return Err(Error::UnsupportedGeometry("wells intersect".into()));
        }
        let min_radius = [&cfg.minus, &cfg.plus]
            .iter()
            .filter_map(|w| match w {
                WellShape::Sphere { radius, .. } => Some(*radius),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        let delta_n = match cfg.delta_n {
            Some(d) => {
                if !(d > 0.0 && d < dist_n / 4.0) {
                    return Err(Error::Config(format!("delta_N = {d} outside (0, dist_N/4)")));
                }
                d
            }
            None => (dist_n / 8.0).min(min_radius / 2.0),
        };
        let reach = [&cfg.minus, &cfg.plus]
            .iter()
            .map(|w| norm(w.center()) + w.radius())
            .fold(0.0, f64::max);
        let r_n = reach + dist_n / 2.0 + 1.0;
        Ok(ManifoldPair {
            minus: cfg.minus.clone(),
            plus: cfg.plus.clone(),
            k,
            dist_n,
            delta_n,
            r_n,
            config: cfg,
        })
    }

    pub fn config(&self) -> &ManifoldConfig {
        &self.config
    }

    pub fn well(&self, side: Side) -> &WellShape {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    /// (d_{N−}, d_{N+}, d_N).
    pub fn dist_to_wells(&self, u: &[f64]) -> (f64, f64, f64) {
        let dm = self.minus.distance(u);
        let dp = self.plus.distance(u);
        (dm, dp, dm.min(dp))
    }

    /// Nearest point on N and the well it lies on.
    pub fn project(&self, u: &[f64]) -> Result<(VecK, Side)> {
        let (dm, dp, _) = self.dist_to_wells(u);
        if (dm - dp).abs() <= 1e-14 * (1.0 + dm) {
            return Err(Error::AmbiguousProjection);
        }
        if dm < dp {
            Ok((self.minus.project(u)?, Side::Minus))
        } else {
            Ok((self.plus.project(u)?, Side::Plus))
        }
    }

    /// ν_N(u) = (u − P_N u)/|u − P_N u|. Errors with `OnManifold` on N.
    pub fn unit_normal(&self, u: &[f64]) -> Result<VecK> {
        let (p, _) = self.project(u)?;
        let d = norm_diff(u, &p);
        if d == 0.0 {
            return Err(Error::OnManifold);
        }
        Ok(u.iter().zip(p.iter()).map(|(a, b)| (a - b) / d).collect())
    }

    /// Like [`unit_normal`](Self::unit_normal) but returns the zero vector on N.
    pub fn unit_normal_or_zero(&self, u: &[f64]) -> Result<VecK> {
        match self.unit_normal(u) {
            Err(Error::OnManifold) => Ok(smallvec![0.0; u.len()]),
            r => r,
        }
    }

    /// Second fundamental form A(v, w) at `p` on the well `side`.
    pub fn second_fundamental_form(
        &self,
        side: Side,
        p: &[f64],
        v: &[f64],
        w: &[f64],
    ) -> Result<VecK> {
        let well = self.well(side);
        if well.distance(p) > TANGENT_TOL {
            return Err(Error::NotTangent);
        }
        if !well.is_tangent(p, v) || !well.is_tangent(p, w) {
            return Err(Error::NotTangent);
        }
        match well {
            WellShape::Point { .. } => Ok(smallvec![0.0; p.len()]),
            WellShape::Sphere { center, radius, .. } => {
                let vw: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                Ok(p.iter()
                    .zip(center)
                    .map(|(pi, ci)| -vw / (radius * radius) * (pi - ci))
                    .collect())
            }
        }
    }
}

fn pair_distance(a: &WellShape, b: &WellShape) -> Result<f64> {
    use WellShape::*;
    match (a, b) {
        (Point { center: c1 }, Point { center: c2 }) => Ok(norm_diff(c1, c2)),
        (Point { center }, s @ Sphere { .. }) | (s @ Sphere { .. }, Point { center }) => {
            Ok(s.distance(center))
        }
        (
            Sphere {
                center: c1,
                radius: r1,
                intrinsic_dim: m1,
            },
            Sphere {
                center: c2,
                radius: r2,
                intrinsic_dim: m2,
            },
        ) => {
            let shift = norm_diff(c1, c2);
            let span = (*m1).max(*m2) + 1;
            let offset_in_span = c1
                .iter()
                .zip(c2)
                .skip(span)
                .all(|(x, y)| (x - y).abs() < 1e-14);
            if shift < 1e-14 {
                // concentric: the smaller span lies inside the larger one
                return Ok((r1 - r2).abs());
            }
            if m1 == m2 && offset_in_span && *m1 + 1 == a.span_dim() {
                let (rs, rl) = if r1 < r2 { (*r1, *r2) } else { (*r2, *r1) };
                if shift >= r1 + r2 {
                    return Ok(shift - r1 - r2);
                }
                if shift + rs <= rl {
                    return Ok(rl - rs - shift);
                }
                return Ok(0.0);
            }
            Err(Error::UnsupportedGeometry(
                "non-concentric spheres in different spans".into(),
            ))
        }
    }
}

fn split_norms(u: &[f64], c: &[f64], m: usize) -> (f64, f64) {
    let mut par = 0.0;
    let mut perp = 0.0;
    for (i, (a, b)) in u.iter().zip(c).enumerate() {
        let d = a - b;
        if i < m {
            par += d * d;
        } else {
            perp += d * d;
        }
    }
    (par.sqrt(), perp.sqrt())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp() -> ManifoldPair {
        ManifoldConfig::mp().build().unwrap()
    }
    fn cc() -> ManifoldPair {
        ManifoldConfig::cc().build().unwrap()
    }

    #[test]
    fn derived_constants() {
        let m = mp();
        assert_eq!(m.dist_n, 2.0);
        assert_eq!(m.delta_n, 0.25);
        assert_eq!(m.r_n, 3.0);
        let c = cc();
        assert_eq!(c.dist_n, 2.0);
        assert_eq!(c.delta_n, 0.25);
        assert_eq!(c.r_n, 5.0);
    }

    #[test]
    fn distances() {
        assert_eq!(mp().dist_to_wells(&[-1.0, 0.0]), (0.0, 2.0, 0.0));
        assert_eq!(mp().dist_to_wells(&[0.0, 0.0]), (1.0, 1.0, 1.0));
        assert_eq!(cc().dist_to_wells(&[2.0, 0.0]), (1.0, 1.0, 1.0));
    }

    #[test]
    fn projections() {
        let (p, s) = mp().project(&[0.9, 0.1]).unwrap();
        assert_eq!((p.as_slice(), s), (&[1.0, 0.0][..], Side::Plus));
        let (p, s) = cc().project(&[1.1, 0.0]).unwrap();
        assert_eq!((p.as_slice(), s), (&[1.0, 0.0][..], Side::Minus));
        assert_eq!(cc().project(&[0.0, 0.0]), Err(Error::AmbiguousProjection));
    }

    #[test]
    fn normals() {
        let n = mp().unit_normal(&[0.5, 0.0]).unwrap();
        assert_eq!(n.as_slice(), &[-1.0, 0.0]);
        let n = cc().unit_normal(&[1.2, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1].abs() < 1e-15);
        assert_eq!(mp().unit_normal(&[1.0, 0.0]), Err(Error::OnManifold));
        assert_eq!(
            mp().unit_normal_or_zero(&[1.0, 0.0]).unwrap().as_slice(),
            &[0.0, 0.0]
        );
    }

    /// Oracle: A(v,v) = d²/ds² of the unit-speed curve through p with velocity v,
    /// projected on the normal; for a circle this is the centripetal acceleration.
    fn circle_acceleration(r: f64, p: [f64; 2]) -> [f64; 2] {
        let phi = p[1].atan2(p[0]);
        let h = 1e-4;
        let g = |s: f64| {
            let a = phi + s / r;
            [r * a.cos(), r * a.sin()]
        };
        let (a, b, c) = (g(-h), g(0.0), g(h));
        [
            (a[0] - 2.0 * b[0] + c[0]) / (h * h),
            (a[1] - 2.0 * b[1] + c[1]) / (h * h),
        ]
    }

    #[test]
    fn second_fundamental_form_circles() {
        let c = cc();
        let a = c
            .second_fundamental_form(Side::Minus, &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0])
            .unwrap();
        let o = circle_acceleration(1.0, [1.0, 0.0]);
        assert!((a[0] - o[0]).abs() < 1e-6 && (a[1] - o[1]).abs() < 1e-6);
        assert!((a[0] + 1.0).abs() < 1e-15);
        let a = c
            .second_fundamental_form(Side::Plus, &[3.0, 0.0], &[0.0, 1.0], &[0.0, 1.0])
            .unwrap();
        let o = circle_acceleration(3.0, [3.0, 0.0]);
        assert!((a[0] - o[0]).abs() < 1e-6 && (a[0] + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            c.second_fundamental_form(Side::Plus, &[3.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::NotTangent)
        );
        let m = mp();
        let a = m
            .second_fundamental_form(Side::Plus, &[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0])
            .unwrap();
        assert_eq!(a.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn sphere_in_higher_dimension() {
        let cfg = ManifoldConfig {
            minus: WellShape::Point {
                center: vec![0.0, 0.0, 0.0],
            },
            plus: WellShape::Sphere {
                center: vec![0.0, 0.0, 0.0],
                radius: 2.0,
                intrinsic_dim: 1,
            },
            k: 3,
            delta_n: None,
            allow_scalar: false,
        };
        let m = cfg.build().unwrap();
        assert_eq!(m.dist_n, 2.0);
        let d = m.plus.distance(&[2.0, 0.0, 1.0]);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ManifoldConfig::mp();
        c.k = 1;
        c.minus = WellShape::Point { center: vec![-1.0] };
        c.plus = WellShape::Point { center: vec![1.0] };
        assert!(matches!(c.build(), Err(Error::Config(_))));
        c.allow_scalar = true;
        assert!(c.build().is_ok());
        let mut c = ManifoldConfig::mp();
        c.delta_n = Some(0.6);
        assert!(c.build().is_err());
    }
}
