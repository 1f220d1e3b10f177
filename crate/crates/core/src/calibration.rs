//! Gradient-flow calibration (ξ, H, θ) built from a front-tracked curve, and
//! a verifier that measures every calibration inequality on the grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{left_normal, InterfaceCurve, Nearest, SignedDistance, P2};
use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationParams {
    pub alpha_deg: f64,
    pub c_decay: f64,
    pub blend_radius: f64,
    /// Defaults to 0.2 R_Ω.
    pub delta_theta: Option<f64>,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        CalibrationParams {
            alpha_deg: 90.0,
            c_decay: 0.25,
            blend_radius: 0.4,
            delta_theta: None,
        }
    }
}

/// Quintic smoothstep on [0, 1].
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

fn ramp_q(x: f64) -> f64 {
    x * (2.0 - x)
}

fn wrap(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = a.rem_euclid(two_pi);
    if x > std::f64::consts::PI {
        x -= two_pi;
    }
    x
}

#[inline]
fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Angle correction near one contact point, tabulated against the signed
/// distance of boundary points.
#[derive(Debug, Clone)]
struct ContactTable {
    p: P2,
    sign: f64,
    a: Vec<f64>,
    theta: Vec<f64>,
}

/// Field evaluator shared by cell centres and boundary traces.
struct Builder<'a> {
    sd: &'a SignedDistance,
    r: f64,
    alpha: f64,
    cos_a: f64,
    c: f64,
    br: f64,
    collar: f64,
    delta_theta: f64,
    contacts: Vec<ContactTable>,
}

impl<'a> Builder<'a> {
    fn new(sd: &'a SignedDistance, curve: &InterfaceCurve, p: &CalibrationParams) -> Result<Self> {
        let r = curve.r_omega;
        let alpha = p.alpha_deg.to_radians();
        let cos_a = if p.alpha_deg == 90.0 { 0.0 } else { alpha.cos() };
        let n = curve.nodes.len() - 1;
        let (p0, p1) = (curve.nodes[0], curve.nodes[n]);
        let sep = ((p0[0] - p1[0]).powi(2) + (p0[1] - p1[1]).powi(2)).sqrt();
        if p.blend_radius > 0.5 * sep {
            return Err(Error::BlendOverlap);
        }
        if !(p.blend_radius > 0.0) || !(p.c_decay > 0.0 && p.c_decay < 1.0) {
            return Err(Error::Config("blend_radius > 0 and c_decay in (0,1) required".into()));
        }
        let mut b = Builder {
            sd,
            r,
            alpha,
            cos_a,
            c: p.c_decay,
            br: p.blend_radius,
            collar: 0.4 * p.blend_radius * alpha.sin(),
            delta_theta: p.delta_theta.unwrap_or(0.2 * r),
            contacts: vec![],
        };
        b.contacts = vec![b.table(p0), b.table(p1)];
        Ok(b)
    }

    fn frame(&self, x: P2) -> (P2, P2) {
        let l = (x[0] * x[0] + x[1] * x[1]).sqrt().max(1e-300);
        let e = [x[0] / l, x[1] / l];
        ([-e[0], -e[1]], left_normal(e))
    }

    fn table(&self, p: P2) -> ContactTable {
        let ng = self.sd.nearest(p).normal;
        let (n_in, _) = self.frame(p);
        let sign = if n_in[0] * ng[1] - n_in[1] * ng[0] >= 0.0 { 1.0 } else { -1.0 };
        let tp = p[1].atan2(p[0]);
        let span = (1.5 * self.br / (self.r * self.alpha.sin())).min(0.45 * std::f64::consts::PI);
        let m = 4000;
        let mut pts: Vec<(f64, f64)> = (0..=m)
            .map(|i| {
                let t = tp - span + 2.0 * span * i as f64 / m as f64;
                let y = [self.r * t.cos(), self.r * t.sin()];
                let near = self.sd.nearest(y);
                (near.d, self.boundary_defect(y, &near, sign))
            })
            .collect();
        // keep the monotone run through the contact point
        let mid = m / 2;
        let inc = pts[mid + 1].0 > pts[mid].0;
        let mono = |a: f64, b: f64| if inc { b > a } else { b < a };
        let mut lo = mid;
        while lo > 0 && mono(pts[lo - 1].0, pts[lo].0) {
            lo -= 1;
        }
        let mut hi = mid;
        while hi < m && mono(pts[hi].0, pts[hi + 1].0) {
            hi += 1;
        }
        pts = pts[lo..=hi].to_vec();
        if !inc {
            pts.reverse();
        }
        ContactTable {
            p,
            sign,
            a: pts.iter().map(|x| x.0).collect(),
            theta: pts.iter().map(|x| x.1).collect(),
        }
    }

    /// Angle by which ∇d must be rotated at boundary point y to meet the angle condition.
    fn boundary_defect(&self, y: P2, near: &Nearest, sign: f64) -> f64 {
        let (n_in, _) = self.frame(y);
        let ang = (self.cos_a / self.cap(near.d)).min(1.0).acos();
        let req = n_in[1].atan2(n_in[0]) + sign * ang;
        let cur = near.normal[1].atan2(near.normal[0]);
        wrap(req - cur)
    }

    fn lookup(t: &ContactTable, a: f64) -> f64 {
        let n = t.a.len();
        if a <= t.a[0] {
            return t.theta[0];
        }
        if a >= t.a[n - 1] {
            return t.theta[n - 1];
        }
        let i = t.a.partition_point(|x| *x <= a).min(n - 1);
        let (a0, a1) = (t.a[i - 1], t.a[i]);
        let w = (a - a0) / (a1 - a0);
        (1.0 - w) * t.theta[i - 1] + w * t.theta[i]
    }

    fn cap(&self, d: f64) -> f64 {
        1.0 - self.c * d.abs().min(1.0).powi(2)
    }

    fn collar_weight(&self, b: f64) -> f64 {
        1.0 - smoothstep(b / self.collar)
    }

    fn xi(&self, x: P2, near: &Nearest) -> P2 {
        let d = near.d;
        let n = near.normal;
        let cap = self.cap(d);
        let b = (self.r - (x[0] * x[0] + x[1] * x[1]).sqrt()).max(0.0);
        let chi = self.collar_weight(b);
        let xi_i = [cap * n[0], cap * n[1]];
        // collar field away from contact points
        let (n_in, t_b) = self.frame(x);
        let lim = (cap * cap - self.cos_a * self.cos_a).max(0.0).sqrt();
        let tc = dot(xi_i, t_b).clamp(-lim, lim);
        let xi_b = [
            self.cos_a * n_in[0] + tc * t_b[0],
            self.cos_a * n_in[1] + tc * t_b[1],
        ];
        let far = [(1.0 - chi) * xi_i[0] + chi * xi_b[0], (1.0 - chi) * xi_i[1] + chi * xi_b[1]];
        for t in &self.contacts {
            let dp = ((x[0] - t.p[0]).powi(2) + (x[1] - t.p[1]).powi(2)).sqrt();
            let mu = 1.0 - smoothstep((dp / self.br - 0.5) / 0.5);
            if mu <= 0.0 {
                continue;
            }
            let delta = if b < 1e-12 {
                self.boundary_defect(x, near, t.sign)
            } else {
                Self::lookup(t, d)
            };
            let phi = n[1].atan2(n[0]) + chi * delta;
            let near_xi = [cap * phi.cos(), cap * phi.sin()];
            return [mu * near_xi[0] + (1.0 - mu) * far[0], mu * near_xi[1] + (1.0 - mu) * far[1]];
        }
        far
    }

    fn eta(&self, d: f64) -> f64 {
        let a = d.abs();
        if a <= self.delta_theta {
            1.0
        } else {
            1.0 - smoothstep((a - self.delta_theta) / self.delta_theta)
        }
    }

    fn h(&self, x: P2, near: &Nearest, v: f64) -> P2 {
        let s = self.eta(near.d) * v;
        if s == 0.0 {
            return [0.0, 0.0];
        }
        let n = near.normal;
        let base = [s * n[0], s * n[1]];
        let b = (self.r - (x[0] * x[0] + x[1] * x[1]).sqrt()).max(0.0);
        let chi = self.collar_weight(b);
        if chi == 0.0 {
            return base;
        }
        let (n_in, _) = self.frame(x);
        let c = chi * dot(base, n_in);
        let tau = [n[1], -n[0]];
        let tn = dot(tau, n_in);
        if tn.abs() >= 0.2 {
            [base[0] - c / tn * tau[0], base[1] - c / tn * tau[1]]
        } else {
            [base[0] - c * n_in[0], base[1] - c * n_in[1]]
        }
    }

    fn theta(&self, d: f64) -> f64 {
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        -s * ramp_q((d.abs() / self.delta_theta).min(1.0))
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub xi: DiskField,
    pub hvel: DiskField,
    pub theta: DiskField,
    pub time: f64,
    pub params: CalibrationParams,
    /// Signed distance and ∇d per cell.
    pub dist: Vec<f64>,
    pub normal: Vec<P2>,
    /// ξ and H at the boundary points (R_Ω, θ_i).
    pub xi_trace: Vec<P2>,
    pub h_trace: Vec<P2>,
    pub contact: (P2, P2),
    pub has_velocity: bool,
    pub cos_alpha: f64,
    pub delta_theta: f64,
}

/// Build (ξ, H, θ) for `curve`. With `history` = (curve at t − Δ, curve at
/// t + Δ), the velocity is the central difference of the signed distance;
/// without it H = 0.
pub fn build_calibration(
    curve: &InterfaceCurve,
    history: Option<(&InterfaceCurve, &InterfaceCurve)>,
    grid: &Arc<PolarGrid>,
    params: &CalibrationParams,
) -> Result<Calibration> {
    curve.validate()?;
    let sd = SignedDistance::new(curve)?;
    let b = Builder::new(&sd, curve, params)?;
    let hist = match history {
        Some((m, p)) => {
            let dt = p.time - m.time;
            if !(dt > 0.0) {
                return Err(Error::Config("curve history must be increasing in time".into()));
            }
            Some((SignedDistance::new(m)?, SignedDistance::new(p)?, dt))
        }
        None => None,
    };
    let vel = |q: P2| -> f64 {
        match &hist {
            Some((m, p, dt)) => -(p.value(q) - m.value(q)) / dt,
            None => 0.0,
        }
    };
    let nt = grid.n_theta;
    let rows = par::map_range(grid.n_r, |j| {
        (0..nt)
            .map(|i| {
                let x = grid.center(j, i);
                let near = sd.nearest(x);
                let v = if hist.is_some() { vel(near.point) } else { 0.0 };
                (near, b.xi(x, &near), b.h(x, &near, v), b.theta(near.d))
            })
            .collect::<Vec<_>>()
    });
    let cells: Vec<_> = rows.into_iter().flatten().collect();
    let mut xi = DiskField::zeros(grid.clone(), 2);
    let mut hv = DiskField::zeros(grid.clone(), 2);
    let mut th = DiskField::zeros(grid.clone(), 1);
    let mut dist = Vec::with_capacity(cells.len());
    let mut normal = Vec::with_capacity(cells.len());
    for (idx, (near, x, h, t)) in cells.iter().enumerate() {
        xi.values[2 * idx..2 * idx + 2].copy_from_slice(x);
        hv.values[2 * idx..2 * idx + 2].copy_from_slice(h);
        th.values[idx] = *t;
        dist.push(near.d);
        normal.push(near.normal);
    }
    let mut xi_trace = Vec::with_capacity(nt);
    let mut h_trace = Vec::with_capacity(nt);
    for i in 0..nt {
        let y = grid.boundary_point(i);
        let near = sd.nearest(y);
        xi_trace.push(b.xi(y, &near));
        let v = if hist.is_some() { vel(near.point) } else { 0.0 };
        h_trace.push(b.h(y, &near, v));
    }
    let n = curve.nodes.len() - 1;
    Ok(Calibration {
        xi,
        hvel: hv,
        theta: th,
        time: curve.time,
        params: params.clone(),
        dist,
        normal,
        xi_trace,
        h_trace,
        contact: (curve.nodes[0], curve.nodes[n]),
        has_velocity: hist.is_some(),
        cos_alpha: b.cos_a,
        delta_theta: b.delta_theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub max_violation: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub time: f64,
    pub conditions: BTreeMap<String, Condition>,
    /// c with c|θ| ≤ min(d, 1).
    pub weight_lower_c: f64,
    /// C with min(d_∂, d, 1) ≤ C|θ|.
    pub weight_upper_c: f64,
    /// max |ξ| / (1 − c_decay min(1, d²)).
    pub cap_ratio: f64,
    pub h: f64,
}

pub const CONDITIONS: [&str; 7] = [
    "transport_full",
    "transport_length",
    "mcf_compatibility",
    "velocity_gradient",
    "boundary_xi",
    "boundary_velocity",
    "weight_transport",
];

/// Check the calibration inequalities at the time of `cal`, with `prev` and
/// `next` built at t ∓ Δ for the time derivatives.
pub fn verify_calibration(cal: &Calibration, prev: &Calibration, next: &Calibration) -> CalibrationReport {
    let grid = cal.xi.grid.clone();
    let dt = next.time - prev.time;
    let h = grid.dr.max(grid.r_omega * grid.dtheta);
    let floor = 2.0 * h;
    let gxi = grid.gradient(&cal.xi, None);
    let gh = grid.gradient(&cal.hvel, None);
    let gth = grid.gradient(&cal.theta, None);
    let cells = grid.cells();
    let per_cell = par::map_range(cells, |idx| {
        let xi = [cal.xi.values[2 * idx], cal.xi.values[2 * idx + 1]];
        let hv = [cal.hvel.values[2 * idx], cal.hvel.values[2 * idx + 1]];
        let dxi = [gxi[2 * idx], gxi[2 * idx + 1]];
        let dh = [gh[2 * idx], gh[2 * idx + 1]];
        let dtxi = [
            (next.xi.values[2 * idx] - prev.xi.values[2 * idx]) / dt,
            (next.xi.values[2 * idx + 1] - prev.xi.values[2 * idx + 1]) / dt,
        ];
        let d = cal.dist[idx].abs();
        let m1 = d.min(1.0).max(floor);
        let m2 = d.min(1.0).powi(2).max(floor * floor);
        // ∂_t ξ + (H·∇)ξ
        let adv = [dtxi[0] + dot(hv, dxi[0]), dtxi[1] + dot(hv, dxi[1])];
        // (∇H)ᵀξ, component i = Σ_j ∂_i H_j ξ_j
        let gt = [
            dh[0][0] * xi[0] + dh[1][0] * xi[1],
            dh[0][1] * xi[0] + dh[1][1] * xi[1],
        ];
        let full = ((adv[0] + gt[0]).powi(2) + (adv[1] + gt[1]).powi(2)).sqrt();
        let len = dot(xi, adv).abs();
        let div = dxi[0][0] + dxi[1][1];
        let mcf = (dot(xi, hv) + div).abs();
        let vg = (xi[0] * dot(xi, dh[0]) + xi[1] * dot(xi, dh[1])).abs();
        let th = cal.theta.values[idx];
        let dtth = (next.theta.values[idx] - prev.theta.values[idx]) / dt;
        let wt = (dtth + dot(hv, gth[idx])).abs();
        let wq = wt / th.abs().max(floor / cal.delta_theta);
        // weight comparability
        let (j, _) = (idx / grid.n_theta, idx % grid.n_theta);
        let db = grid.r_omega - grid.rc[j];
        let lower = if th != 0.0 { d.min(1.0) / th.abs() } else { f64::INFINITY };
        let upper = if th != 0.0 {
            db.min(d).min(1.0) / th.abs()
        } else {
            0.0
        };
        let cap = 1.0 - cal.params.c_decay * d.min(1.0).powi(2);
        let capr = dot(xi, xi).sqrt() / cap;
        [
            full,
            full / m1,
            len,
            len / m2,
            mcf,
            mcf / m1,
            vg,
            vg / m1,
            wt,
            wq,
            lower,
            upper,
            capr,
        ]
    });
    let fold_max = |k: usize| per_cell.iter().map(|v| v[k]).fold(0.0, f64::max);
    let mut conditions = BTreeMap::new();
    let mut put = |name: &str, v: f64, c: f64| {
        conditions.insert(
            name.to_string(),
            Condition {
                max_violation: v,
                constant: c,
            },
        );
    };
    put("transport_full", fold_max(0), fold_max(1));
    put("transport_length", fold_max(2), fold_max(3));
    put("mcf_compatibility", fold_max(4), fold_max(5));
    put("velocity_gradient", fold_max(6), fold_max(7));
    put("weight_transport", fold_max(8), fold_max(9));
    let bx = (0..grid.n_theta)
        .map(|i| {
            let y = grid.boundary_point(i);
            let n_in = [-y[0] / grid.r_omega, -y[1] / grid.r_omega];
            (dot(cal.xi_trace[i], n_in) - cal.cos_alpha).abs()
        })
        .fold(0.0, f64::max);
    let bh = (0..grid.n_theta)
        .map(|i| {
            let y = grid.boundary_point(i);
            let n_in = [-y[0] / grid.r_omega, -y[1] / grid.r_omega];
            dot(cal.h_trace[i], n_in).abs()
        })
        .fold(0.0, f64::max);
    put("boundary_xi", bx, bx);
    put("boundary_velocity", bh, bh);
    CalibrationReport {
        time: cal.time,
        conditions,
        weight_lower_c: per_cell.iter().map(|v| v[10]).fold(f64::INFINITY, f64::min),
        weight_upper_c: fold_max(11),
        cap_ratio: fold_max(12),
        h,
    }
}

/// Curves at t − 2Δ, t − Δ, t, t + Δ, t + 2Δ → calibration at t with velocity,
/// plus the two neighbours needed by [`verify_calibration`].
pub fn calibration_triplet(
    curves: [&InterfaceCurve; 5],
    grid: &Arc<PolarGrid>,
    params: &CalibrationParams,
) -> Result<(Calibration, Calibration, Calibration)> {
    let prev = build_calibration(curves[1], Some((curves[0], curves[2])), grid, params)?;
    let cur = build_calibration(curves[2], Some((curves[1], curves[3])), grid, params)?;
    let next = build_calibration(curves[3], Some((curves[2], curves[4])), grid, params)?;
    Ok((prev, cur, next))
}
