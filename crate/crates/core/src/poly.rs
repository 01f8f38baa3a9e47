//! Real polynomial roots via companion-matrix eigenvalues.

use nalgebra::DMatrix;

/// Evaluates a polynomial given highest-degree coefficient first.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Eigenvalues with imaginary part below this (relative) are taken as real;
/// near-double roots often come back as a slightly complex pair.
const IMAG_TOL: f64 = 1e-7;
const MERGE_TOL: f64 = 1e-9;

/// All real roots, ascending, each polished by Newton steps that are kept
/// only while they shrink the residual. Leading zeros are stripped.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let start = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    let c = &coeffs[start..];
    if c.len() < 2 {
        return Vec::new();
    }
    let n = c.len() - 1;
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= IMAG_TOL * z.re.abs().max(1.0))
        .map(|z| polish(c, z.re))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL * b.abs().max(1.0));
    roots
}

fn polish(c: &[f64], mut x: f64) -> f64 {
    let (mut p, _) = horner_with_derivative(c, x);
    for _ in 0..8 {
        let (_, dp) = horner_with_derivative(c, x);
        if dp == 0.0 || p == 0.0 {
            break;
        }
        let next = x - p / dp;
        let (pn, _) = horner_with_derivative(c, next);
        if pn.abs() >= p.abs() {
            break;
        }
        x = next;
        p = pn;
    }
    x
}

/// Divides `coeffs` by `(x - r)`, returning the quotient.
pub fn deflate(coeffs: &[f64], r: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(coeffs.len().saturating_sub(1));
    let mut acc = 0.0;
    for &c in &coeffs[..coeffs.len() - 1] {
        acc = acc * r + c;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_cubic() {
        let r = real_roots(&[1.0, -3.0, 2.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
        let r = real_roots(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn quartic_with_double_root() {
        // (x - 0.6)(x + 0.6) x²
        let r = real_roots(&[1.0, 0.0, -0.36, 0.0, 0.0]);
        assert_eq!(r.len(), 3, "{r:?}");
        assert!(r[1].abs() < 1e-7);
    }

    #[test]
    fn leading_zeros_and_constants() {
        assert!(real_roots(&[0.0, 0.0, 5.0]).is_empty());
        let r = real_roots(&[0.0, 2.0, -1.0]);
        assert_eq!(r, vec![0.5]);
    }

    #[test]
    fn deflation() {
        let q = deflate(&[1.0, -6.0, 11.0, -6.0], 1.0);
        assert_eq!(q, vec![1.0, -5.0, 6.0]);
        assert_eq!(horner(&q, 2.0), 0.0);
    }
}
