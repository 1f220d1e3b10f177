//! Front tracking for curve-shortening flow with a fixed contact angle on the
//! disk, plus spline-based signed distance.
//!
//! Orientation: Ω⁺ lies to the left of the direction of travel, and the
//! interface normal n_Γ is the left normal (pointing into Ω⁺).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::par;

pub type P2 = [f64; 2];

#[inline]
fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}
#[inline]
fn add(a: P2, b: P2) -> P2 {
    [a[0] + b[0], a[1] + b[1]]
}
#[inline]
fn scale(a: P2, s: f64) -> P2 {
    [a[0] * s, a[1] * s]
}
#[inline]
fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
#[inline]
fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
#[inline]
fn len(a: P2) -> f64 {
    dot(a, a).sqrt()
}
#[inline]
fn unit(a: P2) -> P2 {
    scale(a, 1.0 / len(a))
}
#[inline]
pub fn left_normal(t: P2) -> P2 {
    [-t[1], t[0]]
}
#[inline]
fn rot(v: P2, a: f64) -> P2 {
    let (s, c) = a.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCurve {
    pub nodes: Vec<P2>,
    pub closed: bool,
    pub r_omega: f64,
    pub time: f64,
    /// Target node spacing for redistribution.
    pub spacing: f64,
}

/// Initial curve families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CurveSpec {
    /// Vertical diameter traversed upwards; Ω⁺ is the left half-disk.
    Diameter,
    /// Vertical chord x = offset, traversed upwards.
    Chord { offset: f64 },
    /// Arc of the circle (center, radius) inside the disk; Ω⁺ is the side of the center.
    Arc { center: P2, radius: f64 },
    /// Closed circle (validation mode, no boundary contact).
    Circle { center: P2, radius: f64 },
}

impl CurveSpec {
    /// The 60° arc: center (√3 R, 0), radius 2R, meeting ∂Ω at (0, ±R).
    pub fn arc60(r_omega: f64) -> Self {
        CurveSpec::Arc {
            center: [3f64.sqrt() * r_omega, 0.0],
            radius: 2.0 * r_omega,
        }
    }

    pub fn build(&self, r_omega: f64, segments: usize) -> Result<InterfaceCurve> {
        let n = segments.max(4);
        let nodes: Vec<P2> = match *self {
            CurveSpec::Diameter => (0..=n)
                .map(|i| [0.0, -r_omega + 2.0 * r_omega * i as f64 / n as f64])
                .collect(),
            CurveSpec::Chord { offset } => {
                if offset.abs() >= r_omega {
                    return Err(Error::DegenerateCurve("chord misses the disk".into()));
                }
                let h = (r_omega * r_omega - offset * offset).sqrt();
                (0..=n)
                    .map(|i| [offset, -h + 2.0 * h * i as f64 / n as f64])
                    .collect()
            }
            CurveSpec::Arc { center, radius } => {
                let dc = len(center);
                // intersection of |x| = R and |x − c| = ρ
                let a = (r_omega * r_omega - radius * radius + dc * dc) / (2.0 * dc);
                let hh = r_omega * r_omega - a * a;
                if dc == 0.0 || hh <= 0.0 {
                    return Err(Error::DegenerateCurve("arc does not cross the boundary".into()));
                }
                let e = scale(center, 1.0 / dc);
                let base = scale(e, a);
                let off = scale(left_normal(e), hh.sqrt());
                let q1 = add(base, off);
                let q2 = sub(base, off);
                let a1 = (q1[1] - center[1]).atan2(q1[0] - center[0]);
                let mut a2 = (q2[1] - center[1]).atan2(q2[0] - center[0]);
                // counterclockwise about the center through the part inside the disk
                while a2 <= a1 {
                    a2 += 2.0 * std::f64::consts::PI;
                }
                let am = 0.5 * (a1 + a2);
                let mid = [center[0] + radius * am.cos(), center[1] + radius * am.sin()];
                let (s, e2) = if len(mid) < r_omega {
                    (a1, a2)
                } else {
                    (a2 - 2.0 * std::f64::consts::PI, a1)
                };
                let mut v: Vec<P2> = (0..=n)
                    .map(|i| {
                        let t = s + (e2 - s) * i as f64 / n as f64;
                        [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect();
                let k = v.len() - 1;
                v[0] = project_to_circle(v[0], r_omega);
                v[k] = project_to_circle(v[k], r_omega);
                v
            }
            CurveSpec::Circle { center, radius } => (0..n)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
        };
        let closed = matches!(self, CurveSpec::Circle { .. });
        let mut c = InterfaceCurve {
            nodes,
            closed,
            r_omega,
            time: 0.0,
            spacing: 0.0,
        };
        c.spacing = c.length() / c.segments() as f64;
        c.validate()?;
        Ok(c)
    }
}

fn project_to_circle(p: P2, r: f64) -> P2 {
    scale(p, r / len(p))
}

impl InterfaceCurve {
    pub fn segments(&self) -> usize {
        if self.closed {
            self.nodes.len()
        } else {
            self.nodes.len() - 1
        }
    }

    fn seg(&self, i: usize) -> (P2, P2) {
        let n = self.nodes.len();
        (self.nodes[i], self.nodes[(i + 1) % n])
    }

    pub fn length(&self) -> f64 {
        (0..self.segments())
            .map(|i| {
                let (a, b) = self.seg(i);
                len(sub(b, a))
            })
            .sum()
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.segments())
            .map(|i| {
                let (a, b) = self.seg(i);
                len(sub(b, a))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Endpoints on ∂Ω, simplicity, spacing contract.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < 3 {
            return Err(Error::DegenerateCurve("fewer than three nodes".into()));
        }
        if !self.closed {
            let n = self.nodes.len() - 1;
            for p in [self.nodes[0], self.nodes[n]] {
                if (len(p) - self.r_omega).abs() > 1e-10 {
                    return Err(Error::DegenerateCurve("endpoint off the boundary".into()));
                }
            }
            for p in &self.nodes[1..n] {
                if len(*p) >= self.r_omega {
                    return Err(Error::DegenerateCurve("interior node outside the disk".into()));
                }
            }
        }
        if !self.is_simple() {
            return Err(Error::DegenerateCurve("self-intersection".into()));
        }
        Ok(())
    }

    pub fn is_simple(&self) -> bool {
        let m = self.segments();
        let n = self.nodes.len();
        for i in 0..m {
            let (a, b) = self.seg(i);
            for j in i + 2..m {
                if self.closed && i == 0 && j == m - 1 {
                    continue;
                }
                let (c, d) = self.seg(j % n);
                if segments_cross(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    pub fn spacing_ratio(&self) -> (f64, f64) {
        let mean = self.length() / self.segments() as f64;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.segments() {
            let (a, b) = self.seg(i);
            let l = len(sub(b, a));
            lo = lo.min(l / mean);
            hi = hi.max(l / mean);
        }
        (lo, hi)
    }

    /// Largest stable explicit time step.
    pub fn stable_dt(&self) -> f64 {
        0.2 * self.min_spacing().powi(2)
    }

    /// Curvature vector at interior node i (circumscribed circle).
    fn curvature_at(&self, i: usize) -> P2 {
        let n = self.nodes.len();
        let a = self.nodes[(i + n - 1) % n];
        let b = self.nodes[i];
        let c = self.nodes[(i + 1) % n];
        circum_curvature(a, b, c)
    }

    /// Desired inward tangent at an endpoint for contact angle `alpha`.
    fn desired_tangent(&self, start: bool, alpha: f64) -> P2 {
        let p = if start {
            self.nodes[0]
        } else {
            self.nodes[self.nodes.len() - 1]
        };
        let n_in = scale(p, -1.0 / len(p));
        let half_pi = std::f64::consts::FRAC_PI_2;
        if start {
            rot(n_in, alpha - half_pi)
        } else {
            rot(n_in, half_pi - alpha)
        }
    }

    /// Velocity of every node for one explicit step.
    fn velocities(&self, alpha: f64) -> Vec<P2> {
        let n = self.nodes.len();
        let mut v: Vec<P2> = (0..n)
            .map(|i| {
                if !self.closed && (i == 0 || i == n - 1) {
                    [0.0, 0.0]
                } else {
                    self.curvature_at(i)
                }
            })
            .collect();
        if !self.closed {
            for &(start, idx, nb) in &[(true, 0usize, 1usize), (false, n - 1, n - 2)] {
                let p = self.nodes[idx];
                let q = self.nodes[nb];
                let td = self.desired_tangent(start, alpha);
                let nd = left_normal(td);
                let qp = sub(q, p);
                let kappa = scale(nd, 2.0 * dot(qp, nd) / dot(qp, qp));
                let travel = if start { td } else { scale(td, -1.0) };
                let ng = left_normal(travel);
                let tb = left_normal(scale(p, 1.0 / len(p)));
                let denom = dot(tb, ng);
                let s = if denom.abs() > 1e-12 {
                    dot(kappa, ng) / denom
                } else {
                    0.0
                };
                v[idx] = scale(tb, s);
            }
        }
        v
    }

    /// Resample to uniform arclength with cubic Hermite in the chord parameter.
    pub fn redistribute(&mut self) {
        let segs = self.segments();
        let total = self.length();
        let mut target = segs;
        if total / (segs as f64) < 0.5 * self.spacing {
            target = ((total / self.spacing).round() as usize).max(4);
        }
        let sp = ChordSpline::new(&self.nodes, self.closed);
        let new: Vec<P2> = if self.closed {
            (0..target)
                .map(|i| sp.eval(sp.total * i as f64 / target as f64).0)
                .collect()
        } else {
            let mut v: Vec<P2> = (0..=target)
                .map(|i| sp.eval(sp.total * i as f64 / target as f64).0)
                .collect();
            let l = v.len() - 1;
            v[0] = self.nodes[0];
            v[l] = *self.nodes.last().unwrap();
            v
        };
        self.nodes = new;
    }

    pub fn total_curvature_scale(&self) -> f64 {
        let n = self.nodes.len();
        let lo = if self.closed { 0 } else { 1 };
        let hi = if self.closed { n } else { n - 1 };
        (lo..hi).map(|i| len(self.curvature_at(i))).fold(0.0, f64::max)
    }

    /// Signed area enclosed with the boundary arc (Ω⁺ measure), by the shoelace formula.
    pub fn plus_area(&self) -> f64 {
        let poly = self.plus_polygon(2048);
        let mut a = 0.0;
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            a += cross(p, q);
        }
        0.5 * a
    }

    /// Closed polygon bounding Ω⁺: the curve followed by the counterclockwise
    /// boundary arc from its end back to its start.
    pub fn plus_polygon(&self, arc_samples: usize) -> Vec<P2> {
        if self.closed {
            return self.nodes.clone();
        }
        let mut poly = self.nodes.clone();
        let e = *self.nodes.last().unwrap();
        let s = self.nodes[0];
        let a0 = e[1].atan2(e[0]);
        let mut a1 = s[1].atan2(s[0]);
        while a1 <= a0 {
            a1 += 2.0 * std::f64::consts::PI;
        }
        let m = ((a1 - a0) / (2.0 * std::f64::consts::PI) * arc_samples as f64).ceil() as usize;
        for i in 1..m.max(2) {
            let t = a0 + (a1 - a0) * i as f64 / m.max(2) as f64;
            poly.push([self.r_omega * t.cos(), self.r_omega * t.sin()]);
        }
        poly
    }
}

fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Curvature vector of the circle through a, b, c evaluated at b.
pub fn circum_curvature(a: P2, b: P2, c: P2) -> P2 {
    let u = sub(a, b);
    let v = sub(c, b);
    let uu = dot(u, u);
    let vv = dot(v, v);
    let w = sub(u, v);
    let ww = dot(w, w);
    let d = 2.0 * cross(u, v);
    let denom = uu * vv * ww;
    if denom == 0.0 {
        return [0.0, 0.0];
    }
    scale([v[1] * uu - u[1] * vv, u[0] * vv - v[0] * uu], d / denom)
}

/// One explicit curve-shortening step with the contact condition at both ends.
pub fn evolve_mcf(curve: &InterfaceCurve, dt: f64, alpha: f64) -> Result<InterfaceCurve> {
    if dt > 1.0001 * curve.stable_dt() {
        return Err(Error::Config(format!(
            "front step {dt:e} exceeds the stable limit {:e}",
            curve.stable_dt()
        )));
    }
    let v = curve.velocities(alpha);
    let mut next = curve.clone();
    for (p, vi) in next.nodes.iter_mut().zip(&v) {
        *p = add(*p, scale(*vi, dt));
    }
    if !next.closed {
        let n = next.nodes.len() - 1;
        next.nodes[0] = project_to_circle(next.nodes[0], next.r_omega);
        next.nodes[n] = project_to_circle(next.nodes[n], next.r_omega);
    }
    next.time += dt;
    let (lo, hi) = next.spacing_ratio();
    let mean = next.length() / next.segments() as f64;
    if lo < 0.67 || hi > 1.5 || mean < 0.5 * next.spacing {
        next.redistribute();
    }
    if next.length() < 4.0 * next.spacing {
        return Err(Error::CurveCollapse(next.length()));
    }
    Ok(next)
}

/// Tangent direction of the circle through three points, evaluated at the first.
fn three_point_tangent(p: P2, q: P2, r: P2) -> P2 {
    let k = circum_curvature(p, q, r);
    let t = unit(sub(q, p));
    // circle through p and q with curvature vector k at q: rotate the chord by the half-angle
    let kappa = len(k);
    if kappa < 1e-14 {
        return unit(sub(r, p));
    }
    let chord = len(sub(q, p));
    let half = (0.5 * chord * kappa).min(1.0).asin();
    // side of the bend: k points toward the center
    let s = cross(t, k).signum();
    rot(t, -s * half)
}

/// (p⁻, p⁺, angles): endpoints and measured contact angles in radians, as
/// acos(n_Γ · n_in) at the start and end node.
pub fn contact_points(curve: &InterfaceCurve) -> (P2, P2, (f64, f64)) {
    let n = curve.nodes.len() - 1;
    let ang = |p: P2, q: P2, r: P2, start: bool| -> f64 {
        let t = three_point_tangent(p, q, r);
        let travel = if start { t } else { scale(t, -1.0) };
        let ng = left_normal(travel);
        let n_in = scale(p, -1.0 / len(p));
        dot(ng, n_in).clamp(-1.0, 1.0).acos()
    };
    let c = &curve.nodes;
    let a0 = ang(c[0], c[1], c[2], true);
    let a1 = ang(c[n], c[n - 1], c[n - 2], false);
    (c[0], c[n], (a0, a1))
}

/// Advances a curve to requested times with stable substeps.
#[derive(Debug, Clone)]
pub struct FrontTracker {
    pub curve: InterfaceCurve,
    pub alpha: f64,
    pub static_eps: f64,
}

impl FrontTracker {
    pub fn new(curve: InterfaceCurve, alpha: f64) -> Self {
        FrontTracker {
            curve,
            alpha,
            static_eps: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.curve.time
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while self.curve.time < t - 1e-14 {
            let dt = self.curve.stable_dt().min(t - self.curve.time);
            self.curve = evolve_mcf(&self.curve, dt, self.alpha)?;
        }
        self.curve.time = self.curve.time.max(t);
        Ok(())
    }
}

/// C² cubic spline through the nodes in the chord-length parameter.
#[derive(Debug, Clone)]
pub struct ChordSpline {
    pub s: Vec<f64>,
    pub pts: Vec<P2>,
    /// Second derivatives at knots.
    pub m: Vec<P2>,
    pub total: f64,
    closed: bool,
}

impl ChordSpline {
    pub fn new(nodes: &[P2], closed: bool) -> Self {
        let mut pts = nodes.to_vec();
        if closed {
            pts.push(nodes[0]);
        }
        let n = pts.len();
        let mut s = vec![0.0; n];
        for i in 1..n {
            s[i] = s[i - 1] + len(sub(pts[i], pts[i - 1]));
        }
        let total = s[n - 1];
        let m = if closed {
            periodic_second_derivs(&s, &pts)
        } else {
            runout_second_derivs(&s, &pts)
        };
        ChordSpline {
            s,
            pts,
            m,
            total,
            closed,
        }
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.s.len();
        match self.s.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// (point, first derivative, second derivative) at parameter t.
    pub fn eval(&self, t: f64) -> (P2, P2, P2) {
        let t = if self.closed {
            t.rem_euclid(self.total)
        } else {
            t.clamp(0.0, self.total)
        };
        self.eval_seg(self.locate(t), t)
    }

    pub fn eval_seg(&self, i: usize, t: f64) -> (P2, P2, P2) {
        let h = self.s[i + 1] - self.s[i];
        let a = (self.s[i + 1] - t) / h;
        let b = (t - self.s[i]) / h;
        let (p0, p1, m0, m1) = (self.pts[i], self.pts[i + 1], self.m[i], self.m[i + 1]);
        let mut p = [0.0; 2];
        let mut d = [0.0; 2];
        let mut dd = [0.0; 2];
        for c in 0..2 {
            p[c] = a * p0[c]
                + b * p1[c]
                + ((a * a * a - a) * m0[c] + (b * b * b - b) * m1[c]) * h * h / 6.0;
            d[c] = (p1[c] - p0[c]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0[c]
                + (3.0 * b * b - 1.0) / 6.0 * h * m1[c];
            dd[c] = a * m0[c] + b * m1[c];
        }
        (p, d, dd)
    }

    pub fn segments(&self) -> usize {
        self.s.len() - 1
    }

    /// Signed curvature (positive when bending to the left).
    pub fn curvature(&self, t: f64) -> f64 {
        let (_, d, dd) = self.eval(t);
        cross(d, dd) / len(d).powi(3)
    }
}

fn solve_tridiag(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut bp = b[0];
    cp[0] = c[0] / bp;
    d[0] /= bp;
    for i in 1..n {
        bp = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / bp;
        d[i] = (d[i] - a[i] * d[i - 1]) / bp;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Parabolic run-out ends: M_0 = M_1, M_n = M_{n−1}.
fn runout_second_derivs(s: &[f64], p: &[P2]) -> Vec<P2> {
    let n = s.len();
    if n < 3 {
        return vec![[0.0; 2]; n];
    }
    let mut out = vec![[0.0; 2]; n];
    let m = n - 2;
    for c in 0..2 {
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        let mut cc = vec![0.0; m];
        let mut d = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            let h0 = s[i] - s[i - 1];
            let h1 = s[i + 1] - s[i];
            a[k] = h0 / 6.0;
            b[k] = (h0 + h1) / 3.0;
            cc[k] = h1 / 6.0;
            d[k] = (p[i + 1][c] - p[i][c]) / h1 - (p[i][c] - p[i - 1][c]) / h0;
        }
        b[0] += a[0];
        b[m - 1] += cc[m - 1];
        a[0] = 0.0;
        cc[m - 1] = 0.0;
        solve_tridiag(&a, &b, &cc, &mut d);
        for k in 0..m {
            out[k + 1][c] = d[k];
        }
        out[0][c] = out[1][c];
        out[n - 1][c] = out[n - 2][c];
    }
    out
}

/// Periodic spline (pts[n−1] == pts[0]), solved by dense cyclic reduction via
/// Sherman–Morrison.
fn periodic_second_derivs(s: &[f64], p: &[P2]) -> Vec<P2> {
    let n = s.len() - 1;
    let h = |i: usize| s[(i % n) + 1] - s[i % n];
    let mut out = vec![[0.0; 2]; n + 1];
    for c in 0..2 {
        let y = |i: usize| p[i % n][c];
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut cc = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let h0 = h(i + n - 1);
            let h1 = h(i);
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            cc[i] = h1 / 6.0;
            d[i] = (y(i + 1) - y(i)) / h1 - (y(i) - y(i + n - 1)) / h0;
        }
        let alpha = cc[n - 1];
        let beta = a[0];
        let gamma = -b[0];
        let mut bb = b.clone();
        bb[0] -= gamma;
        bb[n - 1] -= alpha * beta / gamma;
        let mut x = d.clone();
        let mut aa = a.clone();
        aa[0] = 0.0;
        let mut c2 = cc.clone();
        c2[n - 1] = 0.0;
        solve_tridiag(&aa, &bb, &c2, &mut x);
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        solve_tridiag(&aa, &bb, &c2, &mut u);
        let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
        for i in 0..n {
            out[i][c] = x[i] - fact * u[i];
        }
        out[n][c] = out[0][c];
    }
    out
}

/// Nearest-point data for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub d: f64,
    pub point: P2,
    /// Unit normal at the nearest point (left normal of the travel direction).
    pub normal: P2,
    /// Arclength parameter; negative before the start, beyond total past the end.
    pub s: f64,
}

/// Continuation of the curve past one endpoint whose curvature decays from the
/// end value to zero over `decay`, then a straight ray.
#[derive(Debug, Clone)]
struct Extension {
    phi0: f64,
    rate0: f64,
    decay: f64,
    length: f64,
    h: f64,
    knots: Vec<P2>,
    /// +1 if the curve travels along the extension direction, −1 otherwise.
    travel: f64,
}

impl Extension {
    const KNOTS: usize = 256;

    fn new(p: P2, dir: P2, rate0: f64, decay: f64, length: f64, travel: f64) -> Self {
        let phi0 = dir[1].atan2(dir[0]);
        let h = decay / Self::KNOTS as f64;
        let mut ext = Extension {
            phi0,
            rate0,
            decay,
            length,
            h,
            knots: Vec::with_capacity(Self::KNOTS + 1),
            travel,
        };
        // 4-point Gauss–Legendre per knot interval
        let gx = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        let gw = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let mut c = p;
        ext.knots.push(c);
        for i in 0..Self::KNOTS {
            let a = i as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                let s = a + 0.5 * h * (1.0 + x);
                let (sn, cs) = ext.phi(s).sin_cos();
                c = add(c, [0.5 * h * w * cs, 0.5 * h * w * sn]);
            }
            ext.knots.push(c);
        }
        ext
    }

    fn phi(&self, s: f64) -> f64 {
        let u = (s / self.decay).min(1.0);
        let int_smooth = u.powi(4) * (2.5 - 3.0 * u + u * u);
        let j = if u >= 1.0 { 0.5 * self.decay } else { s - self.decay * int_smooth };
        self.phi0 + self.rate0 * j
    }

    fn phi_rate(&self, s: f64) -> f64 {
        let u = (s / self.decay).min(1.0);
        self.rate0 * (1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u))
    }

    fn dir(&self, s: f64) -> P2 {
        let (sn, cs) = self.phi(s).sin_cos();
        [cs, sn]
    }

    fn point(&self, s: f64) -> P2 {
        if s >= self.decay {
            let pl = *self.knots.last().unwrap();
            return add(pl, scale(self.dir(self.decay), s - self.decay));
        }
        let i = ((s / self.h) as usize).min(Self::KNOTS - 1);
        let a = i as f64 * self.h;
        let t = (s - a) / self.h;
        let (p0, p1) = (self.knots[i], self.knots[i + 1]);
        let (m0, m1) = (scale(self.dir(a), self.h), scale(self.dir(a + self.h), self.h));
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        [
            h00 * p0[0] + h10 * m0[0] + h01 * p1[0] + h11 * m1[0],
            h00 * p0[1] + h10 * m0[1] + h01 * p1[1] + h11 * m1[1],
        ]
    }

    /// (parameter, squared distance, nearest point, unit direction)
    fn nearest(&self, x: P2) -> (f64, f64, P2, P2) {
        let mut best = (f64::INFINITY, 0.0);
        let mut consider = |a: P2, b: P2, s0: f64, s1: f64| {
            let ab = sub(b, a);
            let t = (dot(sub(x, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
            let q = add(a, scale(ab, t));
            let dd = dot(sub(x, q), sub(x, q));
            if dd < best.0 {
                best = (dd, s0 + t * (s1 - s0));
            }
        };
        for i in 0..Self::KNOTS {
            consider(self.knots[i], self.knots[i + 1], i as f64 * self.h, (i + 1) as f64 * self.h);
        }
        let pl = *self.knots.last().unwrap();
        consider(pl, self.point(self.length), self.decay, self.length);
        let mut s = best.1;
        for _ in 0..12 {
            let r = sub(self.point(s), x);
            let e = self.dir(s);
            let g = dot(r, e);
            let hess = 1.0 + self.phi_rate(s) * dot(r, left_normal(e));
            if hess <= 0.0 {
                break;
            }
            let ns = (s - g / hess).clamp(0.0, self.length);
            let done = (ns - s).abs() < 1e-15 * (1.0 + s);
            s = ns;
            if done {
                break;
            }
        }
        let q = self.point(s);
        (s, dot(sub(x, q), sub(x, q)), q, self.dir(s))
    }
}

/// Signed distance to a splined open curve, continued past both ends with
/// curvature fading to zero and then straight rays.
#[derive(Debug, Clone)]
pub struct SignedDistance {
    pub spline: ChordSpline,
    head: Extension,
    tail: Extension,
}

impl SignedDistance {
    pub fn new(curve: &InterfaceCurve) -> Result<Self> {
        if curve.closed {
            return Err(Error::DegenerateCurve("signed distance needs an open curve".into()));
        }
        if !curve.is_simple() {
            return Err(Error::DegenerateCurve("self-intersection".into()));
        }
        let spline = ChordSpline::new(&curve.nodes, false);
        let t0 = unit(spline.eval(0.0).1);
        let t1 = unit(spline.eval(spline.total).1);
        let k0 = spline.curvature(0.0);
        let k1 = spline.curvature(spline.total);
        let length = 2.0 * curve.r_omega;
        let decay = 0.5 * curve.r_omega;
        let head = Extension::new(spline.pts[0], scale(t0, -1.0), -k0, decay, length, -1.0);
        let tail = Extension::new(*spline.pts.last().unwrap(), t1, k1, decay, length, 1.0);
        Ok(SignedDistance { spline, head, tail })
    }

    /// Largest tube half-width on which the distance is regular.
    pub fn regular_radius(&self) -> f64 {
        let n = 400;
        let kmax = (0..=n)
            .map(|i| self.spline.curvature(self.spline.total * i as f64 / n as f64).abs())
            .fold(0.0, f64::max);
        if kmax < 1e-12 {
            f64::INFINITY
        } else {
            0.5 / kmax
        }
    }

    pub fn value(&self, x: P2) -> f64 {
        self.nearest(x).d
    }

    pub fn nearest(&self, x: P2) -> Nearest {
        let sp = &self.spline;
        // coarse search over the control polygon
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..sp.segments() {
            let a = sp.pts[i];
            let b = sp.pts[i + 1];
            let ab = sub(b, a);
            let t = (dot(sub(x, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
            let q = add(a, scale(ab, t));
            let dd = dot(sub(x, q), sub(x, q));
            if dd < best.0 {
                best = (dd, i);
            }
        }
        let mut cand: Option<(f64, f64, usize)> = None;
        let lo = best.1.saturating_sub(1);
        let hi = (best.1 + 1).min(sp.segments() - 1);
        for i in lo..=hi {
            let (t, dd) = self.newton_on_segment(i, x);
            if cand.map_or(true, |c| dd < c.0) {
                cand = Some((dd, t, i));
            }
        }
        let (mut dd, mut t, mut seg) = cand.unwrap();
        let mut on_ext: Option<(P2, P2, f64)> = None;
        let p0 = sp.pts[0];
        if dot(sub(x, p0), self.head.dir(0.0)) > 0.0 {
            let (s, e, q, dir) = self.head.nearest(x);
            if e < dd && s > 0.0 {
                dd = e;
                on_ext = Some((q, scale(dir, self.head.travel), -s));
            }
        }
        let pn = *sp.pts.last().unwrap();
        if dot(sub(x, pn), self.tail.dir(0.0)) > 0.0 {
            let (s, e, q, dir) = self.tail.nearest(x);
            if e < dd && s > 0.0 {
                dd = e;
                on_ext = Some((q, scale(dir, self.tail.travel), sp.total + s));
            }
        }
        let (point, tangent, s) = match on_ext {
            Some(v) => v,
            None => {
                if t <= sp.s[0] {
                    t = sp.s[0];
                    seg = 0;
                }
                let (p, d, _) = sp.eval_seg(seg, t);
                (p, unit(d), t)
            }
        };
        let normal = left_normal(tangent);
        let sign = if dot(sub(x, point), normal) >= 0.0 { 1.0 } else { -1.0 };
        Nearest {
            d: sign * dd.sqrt(),
            point,
            normal,
            s,
        }
    }

    fn newton_on_segment(&self, i: usize, x: P2) -> (f64, f64) {
        let sp = &self.spline;
        let (a, b) = (sp.s[i], sp.s[i + 1]);
        // seed from the chord projection
        let pa = sp.pts[i];
        let ab = sub(sp.pts[i + 1], pa);
        let mut t = a + (b - a) * (dot(sub(x, pa), ab) / dot(ab, ab)).clamp(0.0, 1.0);
        for _ in 0..8 {
            let (p, d, dd) = sp.eval_seg(i, t);
            let r = sub(p, x);
            let g = dot(r, d);
            let h = dot(d, d) + dot(r, dd);
            if h <= 0.0 {
                break;
            }
            let nt = (t - g / h).clamp(a, b);
            if (nt - t).abs() < 1e-15 * (1.0 + t.abs()) {
                t = nt;
                break;
            }
            t = nt;
        }
        let (p, _, _) = sp.eval_seg(i, t);
        (t, dot(sub(p, x), sub(p, x)))
    }

    /// Signed distance and nearest-point map over the grid cell centres.
    pub fn on_grid(&self, grid: &PolarGrid) -> Vec<Nearest> {
        let nt = grid.n_theta;
        let rows = par::map_range(grid.n_r, |j| {
            (0..nt).map(|i| self.nearest(grid.center(j, i))).collect::<Vec<_>>()
        });
        rows.into_iter().flatten().collect()
    }
}

/// Signed distance as a 1-component field, with the nearest-point map.
pub fn signed_distance_to_curve(
    grid: &Arc<PolarGrid>,
    curve: &InterfaceCurve,
) -> Result<(DiskField, Vec<Nearest>)> {
    let sd = SignedDistance::new(curve)?;
    let near = sd.on_grid(grid);
    let vals = near.iter().map(|n| n.d).collect();
    Ok((DiskField::from_values(grid.clone(), 1, vals)?, near))
}

/// χ_{Ω⁺} at cell centres: winding test against the closed loop (curve plus
/// boundary arc); cells within half a cell of Γ use the sign of the signed
/// distance (d ≥ 0 counts as Ω⁺).
pub fn region_indicator(grid: &Arc<PolarGrid>, curve: &InterfaceCurve) -> Result<DiskField> {
    curve.validate()?;
    let sd = SignedDistance::new(curve)?;
    let poly = curve.plus_polygon(4 * grid.n_theta);
    let nt = grid.n_theta;
    let mut out = DiskField::zeros(grid.clone(), 1);
    par::for_each_chunk(&mut out.values, nt, |j, row| {
        let half_cell = 0.5 * grid.dr.max(grid.rc[j] * grid.dtheta);
        for i in 0..nt {
            let x = grid.center(j, i);
            let near = sd.nearest(x);
            let inside = if near.d.abs() < half_cell {
                near.d >= 0.0
            } else {
                winding(&poly, x) != 0
            };
            row[i] = if inside { 1.0 } else { 0.0 };
        }
    });
    Ok(out)
}

fn winding(poly: &[P2], x: P2) -> i32 {
    let mut w = 0;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a[1] <= x[1] {
            if b[1] > x[1] && cross(sub(b, a), sub(x, a)) > 0.0 {
                w += 1;
            }
        } else if b[1] <= x[1] && cross(sub(b, a), sub(x, a)) < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Point-to-polyline distance.
pub fn polyline_distance(poly: &[P2], x: P2) -> f64 {
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        let ab = sub(w[1], w[0]);
        let l2 = dot(ab, ab);
        let t = if l2 > 0.0 {
            (dot(sub(x, w[0]), ab) / l2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = add(w[0], scale(ab, t));
        best = best.min(len(sub(x, q)));
    }
    if poly.len() == 1 {
        best = len(sub(x, poly[0]));
    }
    best
}

/// Symmetric Hausdorff distance between two polylines (nodes and midpoints sampled).
pub fn hausdorff(a: &[P2], b: &[P2]) -> f64 {
    let one = |p: &[P2], q: &[P2]| -> f64 {
        let mut m: f64 = 0.0;
        for (i, x) in p.iter().enumerate() {
            m = m.max(polyline_distance(q, *x));
            if i + 1 < p.len() {
                m = m.max(polyline_distance(q, scale(add(*x, p[i + 1]), 0.5)));
            }
        }
        m
    };
    one(a, b).max(one(b, a))
}

/// Unit vector helper for other modules.
pub fn normalize(v: P2) -> P2 {
    let l = len(v);
    if l == 0.0 {
        [0.0, 0.0]
    } else {
        scale(v, 1.0 / l)
    }
}

pub fn indicator_from_distance(near: &[Nearest]) -> Vec<f64> {
    near.iter().map(|n| if n.d >= 0.0 { 1.0 } else { 0.0 }).collect()
}
