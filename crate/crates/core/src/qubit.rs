//! Two-angle effective potential of the coupled rings, its minima and
//! barriers, and the bath objects of the reduced phase action.
//!
//! `E_J = t⟨n⟩` and `E_J′ = g⟨n⟩` enter directly; the mean site occupation
//! `⟨n⟩` is left to the caller. Matsubara frequencies are bosonic,
//! `ω_l = 2πl/β`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    #[serde(rename = "E_J")]
    pub e_j: f64,
    #[serde(rename = "E_Jp")]
    pub e_jp: f64,
    #[serde(rename = "Phi_a")]
    pub phi_a: f64,
    #[serde(rename = "Phi_b")]
    pub phi_b: f64,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "U_int")]
    pub u_int: f64,
    pub beta: f64,
    pub l_max: usize,
}

impl QubitParams {
    /// Symmetric flux split `Φa = −Φb = phi_diff/2` with `phi_diff = Φa − Φb`.
    pub fn symmetric(e_j: f64, ratio: f64, phi_diff: f64, n: u32) -> Self {
        QubitParams {
            e_j,
            e_jp: ratio * e_j,
            phi_a: 0.5 * phi_diff,
            phi_b: -0.5 * phi_diff,
            n,
            u_int: 1.0,
            beta: 10.0,
            l_max: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_j.is_finite() && self.e_j > 0.0) {
            return Err(domain("E_J", self.e_j, "finite and > 0"));
        }
        if !self.e_jp.is_finite() {
            return Err(domain("E_Jp", self.e_jp, "finite"));
        }
        if !(self.phi_a.is_finite() && self.phi_b.is_finite()) {
            return Err(domain("Phi", self.phi_a + self.phi_b, "finite"));
        }
        if self.n < 4 || self.n % 2 != 0 {
            return Err(domain("N", self.n as f64, "even and >= 4"));
        }
        if !(self.u_int.is_finite() && self.u_int >= 0.0) {
            return Err(domain("U_int", self.u_int, "finite and >= 0"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(domain("beta", self.beta, "finite and > 0"));
        }
        if self.l_max < 1 {
            return Err(domain("l_max", self.l_max as f64, ">= 1"));
        }
        Ok(())
    }

    fn confinement(&self) -> f64 {
        1.0 / (self.n as f64 - 1.0)
    }

    /// Offset in the coupling cosine, `((N−2)/N)(Φa − Φb)`.
    pub fn coupling_offset(&self) -> f64 {
        (self.n as f64 - 2.0) / self.n as f64 * (self.phi_a - self.phi_b)
    }
}

pub fn effective_potential(theta_a: f64, theta_b: f64, q: &QubitParams) -> f64 {
    let c = q.confinement();
    let ring = |t: f64, phi: f64| q.e_j * (0.5 * c * (t - phi).powi(2) - t.cos());
    ring(theta_a, q.phi_a) + ring(theta_b, q.phi_b)
        - q.e_jp * (theta_a - theta_b - q.coupling_offset()).cos()
}

/// `U` without the quadratic confinement; 2π-periodic in each angle.
pub fn periodic_part(theta_a: f64, theta_b: f64, q: &QubitParams) -> f64 {
    -q.e_j * (theta_a.cos() + theta_b.cos())
        - q.e_jp * (theta_a - theta_b - q.coupling_offset()).cos()
}

pub fn gradient(theta_a: f64, theta_b: f64, q: &QubitParams) -> [f64; 2] {
    let c = q.confinement();
    let s = q.e_jp * (theta_a - theta_b - q.coupling_offset()).sin();
    [
        q.e_j * (c * (theta_a - q.phi_a) + theta_a.sin()) + s,
        q.e_j * (c * (theta_b - q.phi_b) + theta_b.sin()) - s,
    ]
}

pub fn hessian(theta_a: f64, theta_b: f64, q: &QubitParams) -> [[f64; 2]; 2] {
    let c = q.confinement();
    let x = q.e_jp * (theta_a - theta_b - q.coupling_offset()).cos();
    [
        [q.e_j * (c + theta_a.cos()) + x, -x],
        [-x, q.e_j * (c + theta_b.cos()) + x],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub theta_a: f64,
    pub theta_b: f64,
    #[serde(rename = "U")]
    pub u: f64,
    /// Hessian eigenvalues, ascending.
    pub curvature: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Barrier {
    pub from: usize,
    pub to: usize,
    pub saddle_theta_a: f64,
    pub saddle_theta_b: f64,
    pub saddle_u: f64,
    /// Saddle height above the higher of the two minima.
    pub height: f64,
    pub string_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    pub params: QubitParams,
    pub resolution: usize,
    /// Axis samples shared by `θa` and `θb`.
    #[serde(skip)]
    pub axis: Vec<f64>,
    /// `U` on the grid, `θa`-major.
    #[serde(skip)]
    pub grid: Vec<f64>,
    pub minima: Vec<Minimum>,
    pub barriers: Vec<Barrier>,
    /// Lowest barrier between distinct minima of the cell.
    pub intra_cell_barrier: Option<f64>,
    /// Barrier from the lowest minimum to its neighbour shifted by (2π, 2π).
    pub inter_cell_barrier: Option<f64>,
    pub barrier_ratio: Option<f64>,
}

impl Landscape {
    /// CSV with header `theta_a,theta_b,U`.
    pub fn grid_csv(&self) -> String {
        let n = self.axis.len();
        let mut out = String::from("theta_a,theta_b,U\n");
        for i in 0..n {
            for j in 0..n {
                let _ = writeln!(out, "{:?},{:?},{:?}", self.axis[i], self.axis[j], self.grid[i * n + j]);
            }
        }
        out
    }

    /// `|U(min1) − U(min2)|` for the two lowest minima.
    pub fn splitting(&self) -> Option<f64> {
        match self.minima.as_slice() {
            [a, b, ..] => Some((a.u - b.u).abs()),
            _ => None,
        }
    }
}

pub const MIN_RESOLUTION: usize = 64;
const STRING_IMAGES: usize = 32;

pub fn find_minima(q: &QubitParams, resolution: usize) -> Result<Landscape> {
    q.validate()?;
    if resolution < MIN_RESOLUTION {
        return Err(domain("grid_resolution", resolution as f64, ">= 64"));
    }
    let n = resolution;
    let h = 2.0 * PI / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -PI + h * i as f64).collect();
    let mut grid = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            grid[i * n + j] = effective_potential(axis[i], axis[j], q);
        }
    }

    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = grid[i * n + j];
            let mut lowest = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                        continue;
                    }
                    // Exact ties (symmetric grids) go to the lower index.
                    let k = a as usize * n + b as usize;
                    let w = grid[k];
                    if w < v || (w == v && k < i * n + j) {
                        lowest = false;
                    }
                }
            }
            if lowest {
                seeds.push((i, j));
            }
        }
    }
    // Narrow wells can fall between grid nodes; a coarse lattice of extra
    // Newton seeds catches them.
    let stride = (n / 16).max(1);
    for i in (stride / 2..n).step_by(stride) {
        for j in (stride / 2..n).step_by(stride) {
            seeds.push((i, j));
        }
    }
    let mut minima: Vec<Minimum> = Vec::new();
    for (i, j) in seeds {
        let Some(m) = polish_minimum(q, axis[i], axis[j]) else {
            continue;
        };
        let inside = m.theta_a.abs() <= PI + 1e-9 && m.theta_b.abs() <= PI + 1e-9;
        let fresh = minima
            .iter()
            .all(|o| (o.theta_a - m.theta_a).hypot(o.theta_b - m.theta_b) > 1e-6);
        if inside && fresh {
            minima.push(m);
        }
    }
    if minima.is_empty() {
        return Err(Error::DegenerateLandscape);
    }
    minima.sort_by(|a, b| a.u.total_cmp(&b.u));

    let mut barriers = Vec::new();
    for i in 0..minima.len() {
        for j in i + 1..minima.len() {
            barriers.push(barrier_between(q, &minima, i, j));
        }
    }
    let intra = barriers
        .iter()
        .map(|b| b.height)
        .min_by(f64::total_cmp);
    let inter = {
        let m = minima[0];
        polish_minimum(q, m.theta_a + 2.0 * PI, m.theta_b + 2.0 * PI).map(|image| {
            let pair = [m, image];
            barrier_between(q, &pair, 0, 1).height
        })
    };
    let ratio = match (intra, inter) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(Landscape {
        params: *q,
        resolution,
        axis,
        grid,
        minima,
        barriers,
        intra_cell_barrier: intra,
        inter_cell_barrier: inter,
        barrier_ratio: ratio,
    })
}

fn curvature(q: &QubitParams, a: f64, b: f64) -> [f64; 2] {
    let h = hessian(a, b, q);
    let eig = SymmetricEigen::new(Matrix2::new(h[0][0], h[0][1], h[1][0], h[1][1]));
    let (x, y) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    [x.min(y), x.max(y)]
}

/// Damped Newton from a grid seed, falling back to gradient steps where the
/// Hessian is not positive definite. `None` unless it lands on a minimum.
pub fn polish_minimum(q: &QubitParams, a0: f64, b0: f64) -> Option<Minimum> {
    let mut x = Vector2::new(a0, b0);
    let mut u = effective_potential(x[0], x[1], q);
    let tol = 1e-13 * q.e_j;
    for _ in 0..200 {
        let g = gradient(x[0], x[1], q);
        let g = Vector2::new(g[0], g[1]);
        if g.norm() <= tol {
            break;
        }
        let hm = hessian(x[0], x[1], q);
        let hm = Matrix2::new(hm[0][0], hm[0][1], hm[1][0], hm[1][1]);
        let newton = hm
            .cholesky()
            .map(|c| -c.solve(&g))
            .unwrap_or_else(|| -g / q.e_j.max(q.e_jp.abs()));
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let y = x + newton * t;
            let uy = effective_potential(y[0], y[1], q);
            if uy <= u + 1e-4 * t * g.dot(&newton) || (uy <= u && t < 1e-6) {
                x = y;
                u = uy;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // Energy changes below rounding: finish with plain Newton steps.
            let y = x + newton;
            let gy = gradient(y[0], y[1], q);
            if gy[0].hypot(gy[1]) < g.norm() {
                x = y;
                u = effective_potential(x[0], x[1], q);
            } else {
                break;
            }
        }
    }
    let g = gradient(x[0], x[1], q);
    let k = curvature(q, x[0], x[1]);
    (g[0].hypot(g[1]) <= 1e-9 * q.e_j && k[0] > 0.0).then_some(Minimum {
        theta_a: x[0],
        theta_b: x[1],
        u,
        curvature: k,
    })
}

/// Minimum-energy path by the simplified string method, then a Newton
/// refinement of the highest image onto the saddle.
fn barrier_between(q: &QubitParams, minima: &[Minimum], i: usize, j: usize) -> Barrier {
    let (ma, mb) = (minima[i], minima[j]);
    let n = STRING_IMAGES;
    let mut path: Vec<Vector2<f64>> = (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            Vector2::new(
                ma.theta_a + t * (mb.theta_a - ma.theta_a),
                ma.theta_b + t * (mb.theta_b - ma.theta_b),
            )
        })
        .collect();
    let scale = q.e_j + q.e_jp.abs();
    let dt = 0.2 / scale;
    let force_tol = 1e-8 * q.e_j;
    let mut converged = false;
    for _ in 0..20_000 {
        let mut max_force: f64 = 0.0;
        for k in 1..n - 1 {
            let g = gradient(path[k][0], path[k][1], q);
            let g = Vector2::new(g[0], g[1]);
            let tangent = (path[k + 1] - path[k - 1]).normalize();
            let perp = g - tangent * g.dot(&tangent);
            max_force = max_force.max(perp.norm());
            path[k] -= g * dt;
        }
        reparametrize(&mut path);
        if max_force < force_tol {
            converged = true;
            break;
        }
    }
    let top = (1..n - 1)
        .max_by(|&a, &b| {
            effective_potential(path[a][0], path[a][1], q)
                .total_cmp(&effective_potential(path[b][0], path[b][1], q))
        })
        .unwrap_or(n / 2);
    let mut s = path[top];
    for _ in 0..50 {
        let g = gradient(s[0], s[1], q);
        let g = Vector2::new(g[0], g[1]);
        if g.norm() < 1e-13 * q.e_j {
            break;
        }
        let hm = hessian(s[0], s[1], q);
        let hm = Matrix2::new(hm[0][0], hm[0][1], hm[1][0], hm[1][1]);
        match hm.try_inverse() {
            Some(inv) => {
                let step = inv * g;
                if step.norm() > 0.1 {
                    break;
                }
                s -= step;
            }
            None => break,
        }
    }
    let g = gradient(s[0], s[1], q);
    let k = curvature(q, s[0], s[1]);
    if !(g[0].hypot(g[1]) < 1e-8 * q.e_j && k[0] < 0.0 && k[1] > 0.0) {
        s = path[top];
    }
    let saddle_u = effective_potential(s[0], s[1], q);
    Barrier {
        from: i,
        to: j,
        saddle_theta_a: s[0],
        saddle_theta_b: s[1],
        saddle_u,
        height: saddle_u - ma.u.max(mb.u),
        string_converged: converged,
    }
}

/// Redistributes images to equal arc length by linear interpolation.
fn reparametrize(path: &mut [Vector2<f64>]) {
    let n = path.len();
    let mut arc = vec![0.0; n];
    for k in 1..n {
        arc[k] = arc[k - 1] + (path[k] - path[k - 1]).norm();
    }
    let total = arc[n - 1];
    if total == 0.0 {
        return;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (k, p) in path.iter_mut().enumerate().take(n - 1).skip(1) {
        let target = total * k as f64 / (n - 1) as f64;
        while seg < n - 2 && arc[seg + 1] < target {
            seg += 1;
        }
        let w = (arc[seg + 1] - arc[seg]).max(f64::MIN_POSITIVE);
        let t = ((target - arc[seg]) / w).clamp(0.0, 1.0);
        *p = old[seg] + (old[seg + 1] - old[seg]) * t;
    }
}

/// Barrier along the slice `θa = −θb`: saddle between the two lowest slice
/// minima above the higher of them; 0 when the slice has a single well.
pub fn slice_barrier(q: &QubitParams, samples: usize) -> f64 {
    let n = samples.max(16);
    let xs: Vec<f64> = (0..=n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect();
    let v: Vec<f64> = xs.iter().map(|&x| effective_potential(x, -x, q)).collect();
    let mut wells: Vec<usize> = (1..n).filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1]).collect();
    if wells.len() < 2 {
        return 0.0;
    }
    wells.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let (a, b) = (wells[0].min(wells[1]), wells[0].max(wells[1]));
    let top = v[a..=b].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top - v[a].max(v[b])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BathMode {
    pub k: u32,
    pub omega: f64,
    pub zeta: f64,
}

/// Modes `k = 1..(N−2)/2`.
pub fn bath_spectrum(q: &QubitParams) -> Result<Vec<BathMode>> {
    q.validate()?;
    let nm1 = q.n as f64 - 1.0;
    Ok((1..=(q.n - 2) / 2)
        .map(|k| {
            let x = 2.0 * PI * k as f64 / nm1;
            BathMode {
                k,
                omega: (2.0 * q.e_j * q.u_int * (1.0 - x.cos())).sqrt(),
                zeta: 4.0 / nm1.sqrt() * x.sin(),
            }
        })
        .collect())
}

/// Bosonic Matsubara frequency `2πl/β`.
pub fn matsubara(q: &QubitParams, l: usize) -> f64 {
    2.0 * PI * l as f64 / q.beta
}

pub fn admittance(q: &QubitParams, omega_l: f64) -> Result<f64> {
    Ok(bath_spectrum(q)?
        .iter()
        .map(|m| m.zeta * m.zeta / (m.omega * m.omega + omega_l * omega_l))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub re: f64,
    pub im: f64,
    /// Same sum truncated at `2·l_max`.
    pub re_doubled: f64,
    pub im_doubled: f64,
    /// `|G(2·l_max) − G(l_max)| / |G(2·l_max)|`.
    pub ratio: f64,
    pub warning: bool,
}

fn kernel_sum(q: &QubitParams, tau: f64, l_max: usize) -> (f64, f64) {
    let nm1 = q.n as f64 - 1.0;
    let cosines: Vec<f64> = (1..=(q.n - 2) / 2)
        .map(|k| (2.0 * PI * k as f64 / nm1).cos())
        .collect();
    let (mut re, mut im) = (0.0, 0.0);
    // l = 0 carries ω_l² = 0 and contributes nothing.
    for l in 1..=l_max {
        let w = matsubara(q, l);
        let w2 = w * w;
        let weight: f64 = cosines
            .iter()
            .map(|&c| w2 * (1.0 + c) / (2.0 * q.e_j * q.u_int * (1.0 - c) + w2))
            .sum();
        re += weight * (w * tau).cos();
        im += weight * (w * tau).sin();
    }
    (re, im)
}

/// Truncated kernel `G(τ)` with the `l_max` versus `2·l_max` diagnostic;
/// ratios above 0.01 set `warning`.
pub fn kernel_g(q: &QubitParams, tau: f64) -> Result<KernelValue> {
    q.validate()?;
    if !(0.0..=q.beta).contains(&tau) {
        return Err(domain("tau", tau, "0 <= tau <= beta"));
    }
    let (re, im) = kernel_sum(q, tau, q.l_max);
    let (re2, im2) = kernel_sum(q, tau, 2 * q.l_max);
    let diff = (re2 - re).hypot(im2 - im);
    let size = re2.hypot(im2);
    let ratio = if size > 0.0 { diff / size } else if diff > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(KernelValue {
        re,
        im,
        re_doubled: re2,
        im_doubled: im2,
        ratio,
        warning: ratio > 0.01,
    })
}
