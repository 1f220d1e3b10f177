//! Relative entropy, bulk error, diffuse curvature, interface extraction and
//! the bulk-limit checks (minimal pair, harmonic map flow).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::curve::{hausdorff, left_normal, normalize, InterfaceCurve, SignedDistance, P2};
use crate::energetics::{pi_with, EnergeticsContext};
use crate::error::{Error, Result};
use crate::grid::{DiskField, PolarGrid};
use crate::manifolds::{norm, ManifoldPair, Side};
use crate::par;
use crate::solver::robin_data;

/// Pointwise pieces of the entropy density at one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellEntropy {
    /// ε/2|∇u|² + F/ε − ξ·∇ψ
    pub integrand: f64,
    /// ε/2|∇u − Π∇u|², |∇ψ|(1 − ξ·n_ε), ½(√ε|Π∇u| − |Dd_F|/√ε)², (F − |Dd_F|²/2)/ε
    pub split: [f64; 4],
    pub energy_density: f64,
    pub grad_psi: f64,
    pub pi_grad: f64,
    pub dd_norm: f64,
    /// 1 − ξ·n_ε
    pub tilt: f64,
    pub psi: f64,
}

impl CellEntropy {
    pub fn split_sum(&self) -> f64 {
        self.split.iter().sum()
    }
}

/// Entropy pieces per cell; ∇ψ by the chain rule (∇u)ᵀDd_F(u).
pub fn entropy_density(u: &DiskField, cal: &Calibration, ctx: &EnergeticsContext, eps: f64) -> Vec<CellEntropy> {
    let grid = &u.grid;
    let k = u.k;
    let g = robin_data(ctx, u, eps);
    let grad = grid.gradient(u, Some(&g));
    par::map_range(grid.cells(), |idx| {
        let uc = &u.values[idx * k..(idx + 1) * k];
        let jac = &grad[idx * k..(idx + 1) * k];
        let (psi, dd) = ctx.quasi_distance_with_grad(uc);
        let f = ctx.potential_value(uc);
        let pj = pi_with(&dd, jac);
        let mut gpsi = [0.0; 2];
        let mut full = 0.0;
        let mut perp = 0.0;
        let mut par_sq = 0.0;
        for c in 0..k {
            gpsi[0] += dd[c] * jac[c][0];
            gpsi[1] += dd[c] * jac[c][1];
            for a in 0..2 {
                full += jac[c][a] * jac[c][a];
                perp += (jac[c][a] - pj[c][a]).powi(2);
                par_sq += pj[c][a] * pj[c][a];
            }
        }
        let xi = [cal.xi.values[2 * idx], cal.xi.values[2 * idx + 1]];
        let gp = (gpsi[0] * gpsi[0] + gpsi[1] * gpsi[1]).sqrt();
        let xi_n = if gp > 0.0 { (xi[0] * gpsi[0] + xi[1] * gpsi[1]) / gp } else { 0.0 };
        let ddn = norm(&dd);
        let pin = par_sq.sqrt();
        let dens = 0.5 * eps * full + f / eps;
        CellEntropy {
            integrand: dens - (xi[0] * gpsi[0] + xi[1] * gpsi[1]),
            split: [
                0.5 * eps * perp,
                gp * (1.0 - xi_n),
                0.5 * (eps.sqrt() * pin - ddn / eps.sqrt()).powi(2),
                (f - 0.5 * ddn * ddn) / eps,
            ],
            energy_density: dens,
            grad_psi: gp,
            pi_grad: pin,
            dd_norm: ddn,
            tilt: 1.0 - xi_n,
            psi,
        }
    })
}

/// ∫_∂Ω (σ(u) − ψ cos α), on the outer ring.
pub fn boundary_excess(u: &DiskField, ctx: &EnergeticsContext) -> f64 {
    let k = u.k;
    let v: Vec<f64> = u
        .boundary_row()
        .chunks(k)
        .map(|c| ctx.sigma_value(c) - ctx.quasi_distance(c) * ctx.cos_alpha)
        .collect();
    u.grid.integrate_boundary(&v)
}

pub fn relative_entropy(u: &DiskField, cal: &Calibration, ctx: &EnergeticsContext, eps: f64) -> f64 {
    let cells = entropy_density(u, cal, ctx, eps);
    let v: Vec<f64> = cells.iter().map(|c| c.integrand).collect();
    u.grid.integrate(&v) + boundary_excess(u, ctx)
}

/// Left-hand sides of the six coercivity estimates (a)–(f).
pub fn coercivity_terms(u: &DiskField, cal: &Calibration, ctx: &EnergeticsContext, eps: f64) -> [f64; 6] {
    let cells = entropy_density(u, cal, ctx, eps);
    coercivity_from(&cells, cal, &u.grid, boundary_excess(u, ctx))
}

fn coercivity_from(cells: &[CellEntropy], cal: &Calibration, grid: &PolarGrid, bdry: f64) -> [f64; 6] {
    let col = |f: &dyn Fn(usize, &CellEntropy) -> f64| -> f64 {
        let v: Vec<f64> = cells.iter().enumerate().map(|(i, c)| f(i, c)).collect();
        grid.integrate(&v)
    };
    [
        bdry,
        col(&|_, c| c.energy_density - c.grad_psi),
        col(&|_, c| 2.0 * c.split[0]),
        col(&|_, c| 2.0 * c.split[2]),
        col(&|_, c| (c.energy_density + c.grad_psi) * c.tilt),
        col(&|i, c| (c.energy_density + c.grad_psi) * cal.dist[i].abs().min(1.0).powi(2)),
    ]
}

/// Multipliers m with term ≤ m·E_rel; the last uses C = 4/c_decay.
pub fn coercivity_multipliers(c_decay: f64) -> [f64; 6] {
    [1.0, 1.0, 2.0, 2.0, 4.0, 4.0 / c_decay]
}

/// (B_rel, ∫|ψ − c_F χ|) with B_rel = ∫(ψ − c_F χ)θ ≥ 0 for θ < 0 on Ω⁺.
pub fn bulk_error(u: &DiskField, chi: &[f64], theta: &[f64], ctx: &EnergeticsContext) -> (f64, f64) {
    let k = u.k;
    let grid = &u.grid;
    let gap: Vec<f64> = (0..grid.cells())
        .map(|i| ctx.quasi_distance(&u.values[i * k..(i + 1) * k]) - ctx.c_f * chi[i])
        .collect();
    let w: Vec<f64> = gap.iter().zip(theta).map(|(g, t)| g * t).collect();
    let a: Vec<f64> = gap.iter().map(|g| g.abs()).collect();
    (grid.integrate(&w), grid.integrate(&a))
}

/// ∫_∂Ω |ψ − c_F χ| with χ taken on the outer ring.
pub fn boundary_l1(u: &DiskField, chi: &[f64], ctx: &EnergeticsContext) -> f64 {
    let grid = &u.grid;
    let k = u.k;
    let off = (grid.n_r - 1) * grid.n_theta;
    let v: Vec<f64> = u
        .boundary_row()
        .chunks(k)
        .enumerate()
        .map(|(i, c)| (ctx.quasi_distance(c) - ctx.c_f * chi[off + i]).abs())
        .collect();
    grid.integrate_boundary(&v)
}

/// H_ε = −(εΔu − ∇F(u)/ε)·∇u/|∇u|, zero where ∇u = 0.
pub fn approximate_curvature(u: &DiskField, ctx: &EnergeticsContext, eps: f64) -> DiskField {
    let grid = &u.grid;
    let k = u.k;
    let g = robin_data(ctx, u, eps);
    let lap = grid.laplacian_robin(u, &g);
    let grad = grid.gradient(u, Some(&g));
    let mut out = DiskField::zeros(u.grid.clone(), 2);
    par::for_each_chunk(&mut out.values, 2 * grid.n_theta, |j, row| {
        for i in 0..grid.n_theta {
            let idx = j * grid.n_theta + i;
            let uc = &u.values[idx * k..(idx + 1) * k];
            let (_, df) = ctx.potential(uc);
            let jac = &grad[idx * k..(idx + 1) * k];
            let gn = jac.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<f64>().sqrt();
            if gn == 0.0 {
                continue;
            }
            let mut h = [0.0; 2];
            for c in 0..k {
                let w = eps * lap.values[idx * k + c] - df[c] / eps;
                h[0] -= w * jac[c][0];
                h[1] -= w * jac[c][1];
            }
            row[2 * i] = h[0] / gn;
            row[2 * i + 1] = h[1] / gn;
        }
    });
    out
}

/// Curvature estimate ∫ H_ε·n |∇u| / ∫ ε|∇u|² over cells with |d| < tube
/// and at least `edge` away from ∂Ω.
pub fn tube_curvature(
    u: &DiskField,
    h: &DiskField,
    dist: &[f64],
    normal: &[P2],
    eps: f64,
    tube: f64,
    edge: f64,
) -> f64 {
    let grid = &u.grid;
    let k = u.k;
    let grad = grid.gradient(u, None);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..grid.n_r {
        if grid.rc[j] > grid.r_omega - edge {
            break;
        }
        let m = grid.measure(j);
        for i in 0..grid.n_theta {
            let idx = j * grid.n_theta + i;
            if dist[idx].abs() >= tube {
                continue;
            }
            let jac = &grad[idx * k..(idx + 1) * k];
            let g2: f64 = jac.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum();
            let hn = h.values[2 * idx] * normal[idx][0] + h.values[2 * idx + 1] * normal[idx][1];
            num += hn * g2.sqrt() * m;
            den += eps * g2 * m;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Piecewise-linear level curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<P2>,
    pub closed: bool,
}

impl Contour {
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    }
}

/// Vertex lattice for contouring: cell centres, an extrapolated ring at
/// r = R_Ω, and the origin.
struct Lattice<'a> {
    grid: &'a PolarGrid,
    vals: Vec<f64>,
    centre: f64,
}

impl<'a> Lattice<'a> {
    fn new(grid: &'a PolarGrid, psi: &[f64]) -> Self {
        let nt = grid.n_theta;
        let nr = grid.n_r;
        let mut vals = psi.to_vec();
        for i in 0..nt {
            let a = psi[(nr - 1) * nt + i];
            let b = psi[(nr - 2) * nt + i];
            vals.push(1.5 * a - 0.5 * b);
        }
        let centre = psi[..nt].iter().sum::<f64>() / nt as f64;
        Lattice { grid, vals, centre }
    }

    fn centre_id(&self) -> usize {
        self.vals.len()
    }

    fn value(&self, v: usize) -> f64 {
        if v == self.centre_id() {
            self.centre
        } else {
            self.vals[v]
        }
    }

    fn pos(&self, v: usize) -> P2 {
        if v == self.centre_id() {
            return [0.0, 0.0];
        }
        let nt = self.grid.n_theta;
        let (j, i) = (v / nt, v % nt);
        let r = if j < self.grid.n_r { self.grid.rc[j] } else { self.grid.r_omega };
        [r * self.grid.cos_t[i], r * self.grid.sin_t[i]]
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        let nt = self.grid.n_theta;
        let mut tris = Vec::with_capacity(2 * nt * (self.grid.n_r + 1));
        let c = self.centre_id();
        for i in 0..nt {
            tris.push([c, i, (i + 1) % nt]);
        }
        for j in 0..self.grid.n_r {
            for i in 0..nt {
                let ip = (i + 1) % nt;
                let a = j * nt + i;
                let b = j * nt + ip;
                let cc = (j + 1) * nt + ip;
                let d = (j + 1) * nt + i;
                tris.push([a, cc, b]);
                tris.push([a, d, cc]);
            }
        }
        tris
    }
}

type EdgeKey = (usize, usize);

fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Level curves {ψ = level} by marching triangles, oriented with larger ψ on
/// the left.
pub fn level_contours(grid: &PolarGrid, psi: &[f64], level: f64) -> Vec<Contour> {
    let lat = Lattice::new(grid, psi);
    let above = |v: usize| lat.value(v) >= level;
    let cross = |a: usize, b: usize| -> P2 {
        let (va, vb) = (lat.value(a), lat.value(b));
        let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
        let (pa, pb) = (lat.pos(a), lat.pos(b));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };
    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut points: HashMap<EdgeKey, P2> = HashMap::new();
    for t in lat.triangles() {
        let up: Vec<bool> = t.iter().map(|&v| above(v)).collect();
        let n_up = up.iter().filter(|&&x| x).count();
        if n_up == 0 || n_up == 3 {
            continue;
        }
        // counter-clockwise triangles: the level line runs from the edge
        // leaving the upper set to the edge entering it
        let mut start = None;
        let mut end = None;
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if up[e] != up[(e + 1) % 3] {
                let key = edge_key(a, b);
                points.entry(key).or_insert_with(|| cross(a, b));
                if up[e] {
                    start = Some(key);
                } else {
                    end = Some(key);
                }
            }
        }
        segs.push((start.unwrap(), end.unwrap()));
    }
    chain(&segs, &points)
}

fn chain(segs: &[(EdgeKey, EdgeKey)], points: &HashMap<EdgeKey, P2>) -> Vec<Contour> {
    let mut by_start: HashMap<EdgeKey, usize> = HashMap::with_capacity(segs.len());
    let mut has_pred: HashMap<EdgeKey, bool> = HashMap::with_capacity(segs.len());
    for (i, s) in segs.iter().enumerate() {
        by_start.insert(s.0, i);
        has_pred.insert(s.1, true);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let follow = |start: usize, used: &mut Vec<bool>| -> Contour {
        let mut pts = vec![points[&segs[start].0]];
        let mut cur = start;
        let mut closed = false;
        loop {
            used[cur] = true;
            let end = segs[cur].1;
            pts.push(points[&end]);
            match by_start.get(&end) {
                Some(&nx) if !used[nx] => cur = nx,
                Some(&nx) if nx == start => {
                    closed = true;
                    break;
                }
                _ => break,
            }
        }
        Contour { points: pts, closed }
    };
    // deterministic order: open chains first, by segment index
    for i in 0..segs.len() {
        if !used[i] && !has_pred.contains_key(&segs[i].0) {
            out.push(follow(i, &mut used));
        }
    }
    for i in 0..segs.len() {
        if !used[i] {
            out.push(follow(i, &mut used));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterRow {
    pub level: f64,
    pub perimeter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceEstimate {
    pub polyline: Vec<P2>,
    /// Contact angles (radians) at the start and end of the polyline.
    pub contact_angles: Option<(f64, f64)>,
    pub hausdorff: Option<f64>,
    pub perimeters: Vec<PerimeterRow>,
    /// |perimeter at the selected low level − |Γ||, when a reference is given.
    pub perimeter_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Arclength window for the contact-angle fit.
    pub angle_window: f64,
    /// Base threshold δ; the table uses δ, 4δ, c_F − 4δ, c_F − δ.
    pub delta: f64,
    /// Levels scanned in (δ, 4δ) when selecting the perimeter level.
    pub scan_levels: usize,
}

impl ExtractOptions {
    pub fn for_eps(eps: f64, c_f: f64) -> Self {
        ExtractOptions {
            angle_window: 0.1,
            delta: c_f * eps.powf(1.0 / 6.0) / 8.0,
            scan_levels: 16,
        }
    }
}

pub fn psi_field(u: &DiskField, ctx: &EnergeticsContext) -> Vec<f64> {
    let k = u.k;
    par::map_range(u.grid.cells(), |i| ctx.quasi_distance(&u.values[i * k..(i + 1) * k]))
}

/// Extract {ψ = c_F/2} and compare against an optional reference curve.
pub fn extract_interface(
    u: &DiskField,
    ctx: &EnergeticsContext,
    reference: Option<&InterfaceCurve>,
    opts: &ExtractOptions,
) -> Result<InterfaceEstimate> {
    let grid = &u.grid;
    let psi = psi_field(u, ctx);
    let contours = level_contours(grid, &psi, 0.5 * ctx.c_f);
    let main = contours
        .iter()
        .max_by(|a, b| a.length().partial_cmp(&b.length()).unwrap())
        .ok_or(Error::NoInterface)?;
    if main.points.len() < 2 {
        return Err(Error::NoInterface);
    }
    let poly = main.points.clone();
    let contact_angles = if main.closed || poly.len() < 3 {
        None
    } else {
        Some(contour_contact_angles(&poly, opts.angle_window))
    };
    let hd = reference.map(|c| hausdorff(&poly, &c.nodes));
    let d = opts.delta;
    let perim = |a: f64| level_contours(grid, &psi, a).iter().map(Contour::length).sum::<f64>();
    let perimeters: Vec<PerimeterRow> = [d, 4.0 * d, ctx.c_f - 4.0 * d, ctx.c_f - d]
        .iter()
        .map(|&a| PerimeterRow {
            level: a,
            perimeter: perim(a),
        })
        .collect();
    let perimeter_gap = reference.map(|c| {
        let n = opts.scan_levels.max(1);
        let best = (1..=n)
            .map(|m| perim(d + 3.0 * d * m as f64 / (n + 1) as f64))
            .fold(f64::INFINITY, f64::min);
        (best - c.length()).abs()
    });
    Ok(InterfaceEstimate {
        polyline: poly,
        contact_angles,
        hausdorff: hd,
        perimeters,
        perimeter_gap,
    })
}

/// Angles between the ψ-increasing normal and the inner boundary normal at
/// both ends, from quadratic least-squares fits in arclength.
pub fn contour_contact_angles(poly: &[P2], window: f64) -> (f64, f64) {
    let fwd = fit_tangent(poly, window);
    let rev: Vec<P2> = poly.iter().rev().copied().collect();
    let back = fit_tangent(&rev, window);
    let ang = |p: P2, travel: P2| {
        let ng = left_normal(travel);
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let n_in = [-p[0] / r, -p[1] / r];
        (ng[0] * n_in[0] + ng[1] * n_in[1]).clamp(-1.0, 1.0).acos()
    };
    let n = poly.len() - 1;
    (ang(poly[0], fwd), ang(poly[n], [-back[0], -back[1]]))
}

/// Unit tangent at poly[0] from x(s), y(s) quadratic fits over s ≤ window.
fn fit_tangent(poly: &[P2], window: f64) -> P2 {
    let mut s = vec![0.0];
    for w in poly.windows(2) {
        let l = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        s.push(s.last().unwrap() + l);
    }
    let mut m = s.iter().take_while(|&&x| x <= window).count();
    m = m.max(4).min(poly.len());
    if m < 3 {
        return normalize([poly[1][0] - poly[0][0], poly[1][1] - poly[0][1]]);
    }
    // normal equations for [1, s, s²]
    let mut a = [[0.0; 3]; 3];
    let mut bx = [0.0; 3];
    let mut by = [0.0; 3];
    for q in 0..m {
        let b = [1.0, s[q], s[q] * s[q]];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += b[r] * b[c];
            }
            bx[r] += b[r] * poly[q][0];
            by[r] += b[r] * poly[q][1];
        }
    }
    let cx = solve3(a, bx);
    let cy = solve3(a, by);
    normalize([cx[1], cy[1]])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut v = b[r];
        for k in r + 1..3 {
            v -= a[r][k] * x[k];
        }
        x[r] = v / a[r][r];
    }
    x
}

/// |P_{N⁺}u(x + δn) − P_{N⁻}u(x − δn)| − dist_N at each interior node; None
/// where a probe leaves the disk or a projection is ambiguous.
pub fn minimal_pair_check(
    u: &DiskField,
    curve: &InterfaceCurve,
    mp: &ManifoldPair,
    probe: f64,
) -> Result<Vec<Option<f64>>> {
    let grid = &u.grid;
    let sd = SignedDistance::new(curve)?;
    let n = curve.nodes.len();
    Ok((0..n)
        .map(|q| {
            if q == 0 || q + 1 == n {
                return None;
            }
            let x = curve.nodes[q];
            let nr = sd.nearest(x).normal;
            let yp = [x[0] + probe * nr[0], x[1] + probe * nr[1]];
            let ym = [x[0] - probe * nr[0], x[1] - probe * nr[1]];
            let inside = |y: P2| (y[0] * y[0] + y[1] * y[1]).sqrt() < grid.r_omega - 0.5 * grid.dr;
            if !inside(yp) || !inside(ym) {
                return None;
            }
            let pp = mp.well(Side::Plus).project(&grid.sample(u, yp)).ok()?;
            let pm = mp.well(Side::Minus).project(&grid.sample(u, ym)).ok()?;
            Some(crate::manifolds::norm_diff(&pp, &pm) - mp.dist_n)
        })
        .collect())
}

/// Cells with |d| > margin.
pub fn harmonic_region(dist: &[f64], margin: f64) -> Vec<bool> {
    dist.iter().map(|d| d.abs() > margin).collect()
}

/// L² norm over `region` of the tangential part of ∂_t u − Δu, with ∂_t u the
/// difference quotient of (u0, u1) and Δu taken at their midpoint.
pub fn harmonic_flow_residual(
    u0: &DiskField,
    u1: &DiskField,
    dt: f64,
    ctx: &EnergeticsContext,
    eps: f64,
    region: &[bool],
) -> f64 {
    let grid = &u0.grid;
    let k = u0.k;
    let mut mid = u0.clone();
    for (m, b) in mid.values.iter_mut().zip(&u1.values) {
        *m = 0.5 * (*m + b);
    }
    let g = robin_data(ctx, &mid, eps);
    let lap = grid.laplacian_robin(&mid, &g);
    let mp = &ctx.mp;
    let nt = grid.n_theta;
    let s = par::sum_rows(grid.n_r, |j| {
        let mut acc = 0.0;
        for i in 0..nt {
            let idx = j * nt + i;
            if !region[idx] {
                continue;
            }
            let um = &mid.values[idx * k..(idx + 1) * k];
            let (p, side) = match mp.project(um) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let r: Vec<f64> = (0..k)
                .map(|c| (u1.values[idx * k + c] - u0.values[idx * k + c]) / dt - lap.values[idx * k + c])
                .collect();
            let t = mp.well(side).tangent_part(&p, &r);
            acc += t.iter().map(|x| x * x).sum::<f64>();
        }
        acc * grid.measure(j)
    });
    s.sqrt()
}

/// Everything reported at one diagnostic time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub time: f64,
    pub eps: f64,
    pub e_rel: f64,
    pub b_rel: f64,
    pub bulk_l1: f64,
    pub boundary_l1: f64,
    pub coercivity: [f64; 6],
    /// max over cells of |integrand − split sum|.
    pub split_residual: f64,
    /// max over cells of ||∇ψ| − |Π∇u||Dd_F||.
    pub chain_residual: f64,
    /// min over cells with ∇ψ ≠ 0 of (1 − ξ·n_ε) − c min(d², 1), and max of 1 − ξ·n_ε.
    pub tilt_margin: f64,
    pub tilt_max: f64,
}

pub fn entropy_report(
    u: &DiskField,
    cal: &Calibration,
    chi: &[f64],
    ctx: &EnergeticsContext,
    eps: f64,
    time: f64,
) -> EntropyReport {
    let grid = &u.grid;
    let cells = entropy_density(u, cal, ctx, eps);
    let bdry = boundary_excess(u, ctx);
    let integrand: Vec<f64> = cells.iter().map(|c| c.integrand).collect();
    let e_rel = grid.integrate(&integrand) + bdry;
    let (b_rel, bulk_l1) = bulk_error(u, chi, &cal.theta.values, ctx);
    let mut split_residual: f64 = 0.0;
    let mut chain_residual: f64 = 0.0;
    let mut tilt_margin = f64::INFINITY;
    let mut tilt_max: f64 = 0.0;
    for (i, c) in cells.iter().enumerate() {
        split_residual = split_residual.max((c.integrand - c.split_sum()).abs());
        chain_residual = chain_residual.max((c.grad_psi - c.pi_grad * c.dd_norm).abs());
        if c.grad_psi > 0.0 {
            tilt_max = tilt_max.max(c.tilt);
            let w = cal.dist[i].abs().min(1.0).powi(2);
            tilt_margin = tilt_margin.min(c.tilt - cal.params.c_decay * w);
        }
    }
    EntropyReport {
        time,
        eps,
        e_rel,
        b_rel,
        bulk_l1,
        boundary_l1: boundary_l1(u, chi, ctx),
        coercivity: coercivity_from(&cells, cal, grid, bdry),
        split_residual,
        chain_residual,
        tilt_margin,
        tilt_max,
    }
}
