use proptest::prelude::*;
use ring_ladder::elliptic::*;

mod common;
use common::{ode_residual, simpson};

fn k_oracle(m: f64) -> f64 {
    simpson(&|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, std::f64::consts::FRAC_PI_2, 1e-14)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn jacobi_identities(u in -60.0f64..60.0, m in 0.0f64..=1.0) {
        let (sn, cn, dn) = jacobi_sn_cn_dn(u, m).unwrap();
        prop_assert!((sn * sn + cn * cn - 1.0).abs() <= 1e-12);
        prop_assert!((dn * dn + m * sn * sn - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn jacobi_parity(u in -20.0f64..20.0, m in 0.0f64..1.0) {
        let (s1, c1, d1) = jacobi_sn_cn_dn(u, m).unwrap();
        let (s2, c2, d2) = jacobi_sn_cn_dn(-u, m).unwrap();
        prop_assert!((s1 + s2).abs() <= 1e-12);
        prop_assert!((c1 - c2).abs() <= 1e-12 && (d1 - d2).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_matches_simpson(m in 0.0f64..0.999) {
        let k = ellint_k(m).unwrap();
        prop_assert!((k - k_oracle(m)).abs() <= 1e-10, "m={} K={} oracle={}", m, k, k_oracle(m));
    }

    #[test]
    fn incomplete_integral_matches_simpson(phi in -4.0f64..4.0, m in 0.0f64..0.99) {
        let f = ellint_f(phi, m).unwrap();
        let oracle = simpson(&|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, 1e-13);
        prop_assert!((f - oracle).abs() <= 1e-10);
    }
}

#[test]
fn weierstrass_ode_residual_all_discriminant_signs() {
    let cases = [
        (3.0, 0.5),   // three real roots
        (1.0, 2.0),   // complex pair
        (-2.0, 1.0),  // complex pair, g2 < 0
        (12.0, 8.0),  // degenerate, g3 > 0
        (12.0, -8.0), // degenerate, g3 < 0
    ];
    for (g2, g3) in cases {
        let inv = depressed_cubic_roots(g2, g3);
        for i in 1..40 {
            let u = 0.037 * i as f64;
            let p = weierstrass_p(u, &inv).unwrap();
            if !p.is_finite() || p.abs() > 1e6 {
                continue;
            }
            let r = ode_residual(u, &inv);
            assert!(r <= 1e-8, "g2={g2} g3={g3} u={u}: residual {r:e}");
        }
    }
}

#[test]
fn weierstrass_second_order_equation() {
    let inv = depressed_cubic_roots(3.0, 0.5);
    let p = |x: f64| weierstrass_p(x, &inv).unwrap();
    for i in 1..20 {
        let u = 0.09 * i as f64;
        let h = 1e-3;
        let d2 = (-p(u + 2.0 * h) + 16.0 * p(u + h) - 30.0 * p(u) + 16.0 * p(u - h) - p(u - 2.0 * h))
            / (12.0 * h * h);
        let rhs = 6.0 * p(u).powi(2) - 0.5 * inv.g2;
        assert!((d2 - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "u={u}");
    }
}

/// Symmetric lattice sum; the odd `2u/ω³` terms cancel pairwise, leaving an
/// `O(M⁻²)` truncation error.
fn lattice_sum(u: f64, w1: f64, w3: f64, m: i64) -> f64 {
    let mut total = 1.0 / (u * u);
    for a in -m..=m {
        for b in -m..=m {
            if a == 0 && b == 0 {
                continue;
            }
            let (wr, wi) = (2.0 * a as f64 * w1, 2.0 * b as f64 * w3);
            let (dr, di) = (u - wr, -wi);
            let d2 = dr * dr + di * di;
            let w2 = wr * wr + wi * wi;
            // Re 1/(u−ω)² − Re 1/ω² for ω = wr + i·wi.
            total += (dr * dr - di * di) / (d2 * d2) - (wr * wr - wi * wi) / (w2 * w2);
        }
    }
    total
}

#[test]
fn weierstrass_matches_lattice_sum() {
    let inv = depressed_cubic_roots(3.0, 0.5);
    let CubicRoots::Real { e1, e2, e3 } = inv.roots else {
        panic!("expected real roots");
    };
    let m = (e2 - e3) / (e1 - e3);
    let root = (e1 - e3).sqrt();
    let w1 = ellint_k(m).unwrap() / root;
    let w3 = ellint_k(1.0 - m).unwrap() / root;
    for u in [0.2, 0.5, 0.8, 1.1] {
        let oracle = lattice_sum(u, w1, w3, 300);
        let p = weierstrass_p(u, &inv).unwrap();
        assert!((p - oracle).abs() <= 1e-4 * p.abs().max(1.0), "u={u}: {p} vs {oracle}");
    }
    // Half-period values are the cubic's roots.
    assert!((weierstrass_p(w1, &inv).unwrap() - e1).abs() < 1e-10);
}

#[test]
fn cubic_roots_satisfy_cubic() {
    for (g2, g3) in [(3.0, 0.5), (1.0, 2.0), (-2.0, 1.0), (12.0, 8.0), (0.0, 1.0)] {
        let inv = depressed_cubic_roots(g2, g3);
        match inv.roots {
            CubicRoots::Real { e1, e2, e3 } => {
                for e in [e1, e2, e3] {
                    assert!(inv.cubic(e).abs() < 1e-12 * (1.0 + g2.abs() + g3.abs()));
                }
                assert!((e1 + e2 + e3).abs() < 1e-12);
            }
            CubicRoots::Complex { e2, re, .. } => {
                assert!(inv.cubic(e2).abs() < 1e-12 * (1.0 + g2.abs() + g3.abs()));
                assert!((e2 + 2.0 * re).abs() < 1e-12);
            }
        }
    }
}
