//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use ring_ladder::analytic::{classify, ClassifyOptions, ModulusForm};
use ring_ladder::elliptic::{depressed_cubic_roots, ellint_k, jacobi_sn_cn_dn, weierstrass_p};
use ring_ladder::meanfield::{integrate, IntegrateOptions};
use ring_ladder::mqst::{critical_imbalance, mqst_threshold_bisection};
use ring_ladder::qubit::{find_minima, QubitParams};
use ring_ladder::setup::{spacing, SystemParams};
use ring_ladder::verify::{branch_matrix, compare_case, modulus_cases, extra_cases, CompareOptions};

mod common;
use common::{ode_residual, simpson};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let opts = CompareOptions::default();
    let mut worst = (0.0_f64, "");
    let mut failed = Vec::new();
    for c in branch_matrix().iter().chain(extra_cases().iter()) {
        match compare_case(c, &opts) {
            Ok(r) => {
                if r.max_abs_error > worst.0 {
                    worst = (r.max_abs_error, c.name);
                }
                if !(r.max_abs_error <= 1e-6) {
                    failed.push(format!("{} ({:.2e})", c.name, r.max_abs_error));
                }
            }
            Err(e) => failed.push(format!("{}: {e}", c.name)),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failed.is_empty() && secs < 10.0;
    let detail = if failed.is_empty() {
        format!("max |Z_an - Z_ode| = {:.2e} ({}) over s in [0, 20]; {secs:.2} s", worst.0, worst.1)
    } else {
        format!("over 1e-6: {}; {secs:.2} s", failed.join(", "))
    };
    outcome(pass, detail)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let zc = critical_imbalance(10.0, 0.0).ok().flatten();
    let exact = zc == Some(0.6);
    let p = SystemParams::new(10.0, 0.0);
    let bracket = mqst_threshold_bisection(&p, 0.4, 0.8, 2e-4, 60.0, &IntegrateOptions::default());
    let secs = start.elapsed().as_secs_f64();
    match bracket {
        Ok((lo, hi)) => {
            let within = (lo - 0.6).abs() <= 1e-3 && (hi - 0.6).abs() <= 1e-3;
            outcome(
                exact && within && secs < 30.0,
                format!("Zc = {zc:?}; ODE bisection bracket [{lo:.5}, {hi:.5}]; {secs:.2} s"),
            )
        }
        Err(e) => outcome(false, format!("Zc = {zc:?}; bisection failed: {e}")),
    }
}

fn criterion_3() -> Outcome {
    let p = SystemParams::new(10.0, 0.0);
    let opts = ClassifyOptions::default();
    let period = |z0: f64| classify(&p, z0, 0.0, &opts).ok().and_then(|r| r.period);
    let (Some(t04), Some(t08)) = (period(0.4), period(0.8)) else {
        return outcome(false, "no period at Z0 = 0.4 or 0.8".into());
    };
    let (Some(below), Some(above)) = (period(0.6 - 1e-4), period(0.6 + 1e-4)) else {
        return outcome(false, "no period next to the separatrix".into());
    };
    let growing = [1e-2, 1e-4, 1e-6, 1e-8].windows(2).all(|w| {
        let ok = |z: f64, zz: f64| matches!((period(z), period(zz)), (Some(a), Some(b)) if b > a);
        ok(0.6 - w[0], 0.6 - w[1]) && ok(0.6 + w[0], 0.6 + w[1])
    });
    let (r_lo, r_hi) = (below / t04, above / t08);
    outcome(
        growing && r_lo > 5.0 && r_hi > 5.0,
        format!(
            "T(0.6-1e-4)/T(0.4) = {r_lo:.3}, T(0.6+1e-4)/T(0.8) = {r_hi:.3} (need > 5); monotone growth towards 0.6: {growing}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let opts = CompareOptions::default();
    let mut worst = (0.0_f64, "");
    let mut checked = 0;
    let mut failed = Vec::new();
    for c in branch_matrix().iter().chain(extra_cases().iter()) {
        let Ok(r) = compare_case(c, &opts) else {
            failed.push(c.name.to_string());
            continue;
        };
        if r.period_predicted.is_none() {
            continue;
        }
        checked += 1;
        match r.period_rel_error {
            Some(e) if e <= 1e-4 => {
                if e > worst.0 {
                    worst = (e, c.name);
                }
            }
            Some(e) => failed.push(format!("{} ({e:.2e})", c.name)),
            None => failed.push(format!("{} (no crossings)", c.name)),
        }
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{checked} periodic cases, worst relative error {:.2e} ({})", worst.0, worst.1)
        } else {
            format!("failing: {}", failed.join(", "))
        },
    )
}

fn criterion_5() -> Outcome {
    let opts = IntegrateOptions::default();
    let mut worst = (0.0_f64, "");
    let mut failed = Vec::new();
    for c in branch_matrix().iter().chain(extra_cases().iter()) {
        match integrate(&c.params(), c.z0, c.theta0, 100.0, &opts) {
            Ok(t) => {
                if t.meta.max_drift > worst.0 {
                    worst = (t.meta.max_drift, c.name);
                }
                if !(t.meta.max_drift <= 1e-8) {
                    failed.push(format!("{} ({:.2e})", c.name, t.meta.max_drift));
                }
            }
            Err(e) => failed.push(format!("{}: {e}", c.name)),
        }
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("max |H - H0| = {:.2e} ({}) at rel_tol 1e-10 over [0, 100]", worst.0, worst.1)
        } else {
            format!("drift over 1e-8: {}", failed.join(", "))
        },
    )
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20_240_601);
    let mut worst_id: f64 = 0.0;
    for _ in 0..1000 {
        let u = rng.gen_range(-50.0..50.0);
        let m = rng.gen_range(0.0..=1.0);
        let Ok((sn, cn, dn)) = jacobi_sn_cn_dn(u, m) else {
            return outcome(false, format!("sn/cn/dn failed at u={u}, m={m}"));
        };
        worst_id = worst_id
            .max((sn * sn + cn * cn - 1.0).abs())
            .max((dn * dn + m * sn * sn - 1.0).abs());
    }
    let mut worst_k: f64 = 0.0;
    for i in 0..100 {
        let m = 0.99 * i as f64 / 99.0;
        let oracle = simpson(&|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-14);
        let k = ellint_k(m).unwrap_or(f64::NAN);
        worst_k = worst_k.max((k - oracle).abs());
    }
    let mut worst_p: f64 = 0.0;
    for (g2, g3) in [(3.0, 0.5), (1.0, 2.0), (-2.0, 1.0), (12.0, 8.0), (12.0, -8.0)] {
        let inv = depressed_cubic_roots(g2, g3);
        for i in 1..40 {
            let u = 0.037 * i as f64;
            match weierstrass_p(u, &inv) {
                Ok(p) if p.abs() <= 1e6 => worst_p = worst_p.max(ode_residual(u, &inv)),
                _ => {}
            }
        }
    }
    outcome(
        worst_id <= 1e-12 && worst_k <= 1e-10 && worst_p <= 1e-8,
        format!(
            "identities {worst_id:.1e} (1000 points), K vs Simpson {worst_k:.1e}, P ODE residual {worst_p:.1e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let base = QubitParams::symmetric(1.0, 0.8, PI, 20);
    let land = match find_minima(&base, 128) {
        Ok(l) => l,
        Err(e) => return outcome(false, format!("landscape failed: {e}")),
    };
    let count = land.minima.len();
    let split = land.splitting();
    let mut splits = Vec::new();
    for i in 1..=5 {
        let q = QubitParams::symmetric(1.0, 0.8, PI + 0.02 * i as f64, 20);
        splits.push(find_minima(&q, 128).ok().and_then(|l| l.splitting()));
    }
    let monotone = splits.iter().all(Option::is_some)
        && splits.windows(2).all(|w| w[1].unwrap() > w[0].unwrap());
    let degenerate = matches!(split, Some(s) if s <= 1e-10);
    let where_min: Vec<String> = land
        .minima
        .iter()
        .map(|m| format!("({:.3}, {:.3}) U={:.6}", m.theta_a, m.theta_b, m.u))
        .collect();
    outcome(
        count == 2 && degenerate && monotone,
        format!(
            "N=20: {count} minimum(s) in the cell [{}]; splitting {split:?}; detuned splitting monotone: {monotone}",
            where_min.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let (lambda, f) = (830e-9, 40e-3);
    let d = |big_d: f64| spacing(lambda, f, big_d).unwrap_or(f64::NAN);
    let (d_far, d_near) = (d(19.6e-3), d(5.5e-3));
    let ok_far = (d_far / 1.7e-6 - 1.0).abs() <= 0.02;
    let ok_near = (d_near / 6e-6 - 1.0).abs() <= 0.02;
    let inside = (0..=20).all(|i| {
        let v = d(5.5e-3 + (19.6e-3 - 5.5e-3) * i as f64 / 20.0);
        v >= 1.7e-6 * 0.98 && v <= 6e-6 * 1.02
    });
    outcome(
        ok_far && ok_near && inside,
        format!(
            "d(19.6 mm) = {:.3} um, d(5.5 mm) = {:.3} um",
            d_far * 1e6,
            d_near * 1e6
        ),
    )
}

fn criterion_9() -> Outcome {
    let corrected = CompareOptions::default();
    let printed = CompareOptions::default().with_modulus(ModulusForm::Printed);
    let mut lines = Vec::new();
    let mut pass = true;
    for c in modulus_cases() {
        let good = compare_case(&c, &corrected).map(|r| r.max_abs_error);
        let bad = compare_case(&c, &printed).map(|r| r.max_abs_error);
        let (Ok(good), Ok(bad)) = (good, bad) else {
            return outcome(false, format!("{}: comparison failed", c.name));
        };
        lines.push(format!("{} {:.1e} -> {:.1e}", c.name, good, bad));
        if c.name != "delta0-k-eq1" {
            pass &= good <= 1e-6 && bad > 1e-6;
        }
    }
    outcome(pass, format!("corrected -> printed max error: {}", lines.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence matrix", criterion_1),
        ("critical imbalance", criterion_2),
        ("separatrix period divergence", criterion_3),
        ("period formulas", criterion_4),
        ("energy conservation", criterion_5),
        ("special functions", criterion_6),
        ("qubit landscape", criterion_7),
        ("setup numbers", criterion_8),
        ("printed-modulus negative control", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} - {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
