//! Oracles shared by the integration tests.
#![allow(dead_code)]

use ring_ladder::elliptic::{weierstrass_p, WeierstrassInvariants};

/// Adaptive Simpson, kept apart from the library's Gauss-Kronrod rule.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Relative residual of `℘′² = 4℘³ − g2℘ − g3` with `℘′` from a five-point
/// stencil.
pub fn ode_residual(u: f64, inv: &WeierstrassInvariants) -> f64 {
    let h = 1e-3 * u.abs().max(1e-2);
    let p = |x: f64| weierstrass_p(x, inv).unwrap();
    let dp = (p(u - 2.0 * h) - 8.0 * p(u - h) + 8.0 * p(u + h) - p(u + 2.0 * h)) / (12.0 * h);
    let v = p(u);
    let rhs = 4.0 * v.powi(3) - inv.g2 * v - inv.g3;
    let scale = (dp * dp).max((4.0 * v.powi(3)).abs()).max((inv.g2 * v).abs()).max(inv.g3.abs());
    (dp * dp - rhs).abs() / scale
}

