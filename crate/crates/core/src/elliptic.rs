//! Elliptic integrals, Jacobi elliptic functions and the Weierstrass ℘ function.
//!
//! Everything here uses the *parameter* convention: the integrand factor is
//! `(1 - m sin²θ)^(-1/2)`. The "k" that appears in the two-ring literature is
//! this `m`, not the modulus `√m`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{domain, Error, Result};

const AGM_TOL: f64 = 1e-15;
const AGM_MAX_ITER: usize = 32;

/// Distance from `m = 1` below which the Jacobi functions take their
/// hyperbolic limits.
pub const HYPERBOLIC_SWITCH: f64 = 1e-12;

/// Relative discriminant below which `g2³ - 27 g3²` counts as zero.
pub const DEGENERATE_REL_TOL: f64 = 1e-10;

/// Complete elliptic integral of the first kind, `K(m) = F(π/2 | m)`.
///
/// Evaluated with the arithmetic-geometric mean, `K = π / (2 AGM(1, √(1-m)))`.
pub fn ellint_k(m: f64) -> Result<f64> {
    if m.is_nan() || m < 0.0 {
        return Err(domain("m", m, "0 <= m < 1"));
    }
    if m >= 1.0 {
        return Err(Error::Divergent("K(m)"));
    }
    Ok(FRAC_PI_2 / agm(1.0, (1.0 - m).sqrt()))
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
pub(crate) fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0025;
    let (mut x, mut y, mut z) = (x, y, z);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = (x + y + z) / 3.0;
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt();
        }
    }
}

/// Incomplete elliptic integral of the first kind `F(φ | m)`.
///
/// Valid for any finite `φ` (quasi-periodic continuation `F(φ + π) = F(φ) + 2K`)
/// and `0 <= m <= 1`. At `m = 1` the integral diverges once `|φ| >= π/2`.
pub fn ellint_f(phi: f64, m: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(domain("phi", phi, "finite"));
    }
    if m.is_nan() || !(0.0..=1.0).contains(&m) {
        return Err(domain("m", m, "0 <= m <= 1"));
    }
    let n = (phi / PI).round();
    let r = phi - n * PI;
    if m == 1.0 && (n != 0.0 || r.abs() >= FRAC_PI_2) {
        return Err(Error::Divergent("F(phi | 1)"));
    }
    let (s, c) = r.sin_cos();
    let reduced = s * carlson_rf(c * c, 1.0 - m * s * s, 1.0);
    if n == 0.0 {
        Ok(reduced)
    } else {
        Ok(2.0 * n * ellint_k(m)? + reduced)
    }
}

/// Jacobi elliptic functions `(sn, cn, dn)` of argument `u` and parameter `m`.
///
/// Descending Landen/AGM scheme; within [`HYPERBOLIC_SWITCH`] of `m = 1` the
/// hyperbolic limits `(tanh u, sech u, sech u)` are returned.
pub fn jacobi_sn_cn_dn(u: f64, m: f64) -> Result<(f64, f64, f64)> {
    if !u.is_finite() {
        return Err(domain("u", u, "finite"));
    }
    if m.is_nan() || !(0.0..=1.0).contains(&m) {
        return Err(domain("m", m, "0 <= m <= 1"));
    }
    if m == 0.0 {
        let (s, c) = u.sin_cos();
        return Ok((s, c, 1.0));
    }
    if 1.0 - m < HYPERBOLIC_SWITCH {
        let sech = 1.0 / u.cosh();
        return Ok((u.tanh(), sech, sech));
    }

    let mut a = [0.0_f64; AGM_MAX_ITER + 1];
    let mut c = [0.0_f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = m.sqrt();
    let mut b = (1.0 - m).sqrt();
    let mut n = 0;
    while n < AGM_MAX_ITER && c[n].abs() > AGM_TOL {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }

    // Reduce by the real period 4K = 2π/a_n.
    let period = 2.0 * PI / a[n];
    let u = u - period * (u / period).round();
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] * phi.sin() / a[i]).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // cn / cos(φ1 − φ0) is ill-conditioned where cn vanishes.
    let dn = (1.0 - m * sn * sn).sqrt();
    Ok((sn, cn, dn))
}

/// Roots of the depressed cubic `4y³ - g2 y - g3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CubicRoots {
    /// All roots real, `e1 >= e2 >= e3`.
    Real { e1: f64, e2: f64, e3: f64 },
    /// One real root `e2` and the pair `re ± i·im`.
    Complex { e2: f64, re: f64, im: f64 },
}

/// Sign class of the discriminant `g2³ - 27 g3²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminantSign {
    Positive,
    Zero,
    Negative,
}

/// Invariants, discriminant and root structure of a Weierstrass ℘ function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeierstrassInvariants {
    pub g2: f64,
    pub g3: f64,
    pub delta: f64,
    pub roots: CubicRoots,
}

impl WeierstrassInvariants {
    pub fn new(g2: f64, g3: f64) -> Self {
        depressed_cubic_roots(g2, g3)
    }

    /// `delta / max(|g2|³, 27 g3²)`, zero when both invariants vanish.
    pub fn relative_delta(&self) -> f64 {
        let scale = self.g2.abs().powi(3).max(27.0 * self.g3 * self.g3);
        if scale == 0.0 {
            0.0
        } else {
            self.delta / scale
        }
    }

    pub fn sign(&self, rel_tol: f64) -> DiscriminantSign {
        let rel = self.relative_delta();
        if rel.abs() <= rel_tol {
            DiscriminantSign::Zero
        } else if rel > 0.0 {
            DiscriminantSign::Positive
        } else {
            DiscriminantSign::Negative
        }
    }

    /// `c = √(g2/12)`, the scale of the degenerate closed forms.
    pub fn degenerate_scale(&self) -> f64 {
        (self.g2.max(0.0) / 12.0).sqrt()
    }

    /// Residual `4e³ - g2 e - g3`.
    pub fn cubic(&self, y: f64) -> f64 {
        4.0 * y * y * y - self.g2 * y - self.g3
    }
}

fn polish_cubic_root(g2: f64, g3: f64, mut y: f64) -> f64 {
    for _ in 0..3 {
        let h = 4.0 * y * y * y - g2 * y - g3;
        let dh = 12.0 * y * y - g2;
        if dh == 0.0 || h == 0.0 {
            break;
        }
        let next = y - h / dh;
        let h_next = 4.0 * next * next * next - g2 * next - g3;
        if h_next.abs() >= h.abs() {
            break;
        }
        y = next;
    }
    y
}

/// Solves `4y³ - g2 y - g3 = 0`; real roots come back sorted descending.
pub fn depressed_cubic_roots(g2: f64, g3: f64) -> WeierstrassInvariants {
    let delta = g2 * g2 * g2 - 27.0 * g3 * g3;
    let roots = if g2 == 0.0 && g3 == 0.0 {
        CubicRoots::Real {
            e1: 0.0,
            e2: 0.0,
            e3: 0.0,
        }
    } else if delta > 0.0 {
        let s = (g2 / 12.0).sqrt();
        let theta = ((g3 / (8.0 * s * s * s)).clamp(-1.0, 1.0)).acos() / 3.0;
        let third = 2.0 * PI / 3.0;
        let mut r = [
            2.0 * s * theta.cos(),
            2.0 * s * (theta - third).cos(),
            2.0 * s * (theta + third).cos(),
        ];
        for y in r.iter_mut() {
            *y = polish_cubic_root(g2, g3, *y);
        }
        r.sort_by(|a, b| b.total_cmp(a));
        CubicRoots::Real {
            e1: r[0],
            e2: r[1],
            e3: r[2],
        }
    } else if delta < 0.0 {
        // y³ + p y + q = 0 with p = -g2/4, q = -g3/4.
        let p = -g2 / 4.0;
        let q = -g3 / 4.0;
        let disc = q * q / 4.0 + p * p * p / 27.0;
        let a = -q.signum() * (q.abs() / 2.0 + disc.max(0.0).sqrt()).cbrt();
        let b = if a != 0.0 { -p / (3.0 * a) } else { 0.0 };
        let e = polish_cubic_root(g2, g3, a + b);
        CubicRoots::Complex {
            e2: e,
            re: -0.5 * e,
            im: 0.5 * (3.0 * e * e - g2).max(0.0).sqrt(),
        }
    } else {
        let single = 3.0 * g3 / g2;
        let double = -1.5 * g3 / g2;
        let (e1, e3) = if single >= double {
            (single, double)
        } else {
            (double, single)
        };
        let e2 = double;
        CubicRoots::Real { e1, e2, e3 }
    };
    WeierstrassInvariants {
        g2,
        g3,
        delta,
        roots,
    }
}

/// Weierstrass `℘(u; g2, g3)` for real `u`, reduced to Jacobi functions of the
/// cubic's roots. Degenerate invariants (see [`DEGENERATE_REL_TOL`]) use the
/// trigonometric/hyperbolic closed forms.
pub fn weierstrass_p(u: f64, inv: &WeierstrassInvariants) -> Result<f64> {
    if u == 0.0 {
        return Err(Error::Pole(u));
    }
    let r = weierstrass_reciprocal(u, inv, 0.0, inv.sign(DEGENERATE_REL_TOL))?;
    let value = 1.0 / r;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Pole(u))
    }
}

/// `1 / (℘(u) − shift)`, finite at the lattice poles where it vanishes.
///
/// `sign` selects the reduction explicitly so callers can classify the
/// discriminant with their own tolerance.
pub fn weierstrass_reciprocal(
    u: f64,
    inv: &WeierstrassInvariants,
    shift: f64,
    sign: DiscriminantSign,
) -> Result<f64> {
    if !u.is_finite() || !inv.g2.is_finite() || !inv.g3.is_finite() {
        return Err(domain("u", u, "finite, with finite invariants"));
    }
    let r = match (sign, inv.roots) {
        (DiscriminantSign::Zero, _) => {
            let c = inv.degenerate_scale();
            if c == 0.0 {
                u * u / (1.0 - shift * u * u)
            } else {
                let w = (3.0 * c).sqrt() * u;
                if inv.g3 > 0.0 {
                    let s2 = w.sin().powi(2);
                    s2 / ((-c - shift) * s2 + 3.0 * c)
                } else if w.abs() < 20.0 {
                    let s2 = w.sinh().powi(2);
                    s2 / ((c - shift) * s2 + 3.0 * c)
                } else {
                    // 1/sinh² underflows gracefully here; sinh² itself would overflow.
                    1.0 / ((c - shift) + 3.0 * c / w.sinh().powi(2))
                }
            }
        }
        (_, CubicRoots::Real { e1, e2, e3 }) => {
            let spread = e1 - e3;
            let m = ((e2 - e3) / spread).clamp(0.0, 1.0);
            let (sn, _, _) = jacobi_sn_cn_dn(u * spread.sqrt(), m)?;
            let s2 = sn * sn;
            s2 / ((e3 - shift) * s2 + spread)
        }
        (_, CubicRoots::Complex { e2, .. }) => {
            let h2 = (3.0 * e2 * e2 - inv.g2 / 4.0).sqrt();
            let m = (0.5 - 0.75 * e2 / h2).clamp(0.0, 1.0);
            let (sn, cn, _) = jacobi_sn_cn_dn(2.0 * h2.sqrt() * u, m)?;
            // 1 − cn = sn²/(1 + cn) avoids cancellation near the pole.
            let one_minus = if cn > 0.0 { sn * sn / (1.0 + cn) } else { 1.0 - cn };
            one_minus / ((e2 - shift) * one_minus + h2 * (1.0 + cn))
        }
    };
    Ok(r)
}
