//! Analytic solutions checked against the numerical integrator.

use serde::Serialize;

use crate::analytic::{solve, Branch, ClassifyOptions, ModulusForm};
use crate::error::Result;
use crate::meanfield::{integrate, IntegrateOptions, Trajectory};
use crate::mqst::{detect_mqst, time_integral};
use crate::setup::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Case {
    pub name: &'static str,
    pub lambda_rho: f64,
    pub delta: f64,
    pub z0: f64,
    pub theta0: f64,
}

impl Case {
    pub const fn new(name: &'static str, lambda_rho: f64, delta: f64, z0: f64, theta0: f64) -> Self {
        Case {
            name,
            lambda_rho,
            delta,
            z0,
            theta0,
        }
    }

    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.lambda_rho, self.delta)
    }
}

/// Imbalance of the `Θ = 0` fixed point at `λρ = 10`, `Δ = 1`.
pub fn fixed_point_z() -> f64 {
    let g = |z: f64| 1.0 + 10.0 * z + z / (1.0 - z * z).sqrt();
    let (mut lo, mut hi) = (-0.5, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One representative per branch, in [`Branch::ALL`] order.
pub fn branch_matrix() -> Vec<Case> {
    vec![
        Case::new("linear-d0", 0.0, 2.0, -2.0 / 5f64.sqrt(), 0.0),
        Case::new("linear-dpos", 0.0, 2.0, 0.5, 0.0),
        Case::new("small-lr", 0.1, 0.0, 0.5, 0.0),
        Case::new("delta0-k-lt1", 10.0, 0.0, 0.4, 0.0),
        Case::new("delta0-k-eq1", 10.0, 0.0, 0.6, 0.0),
        Case::new("delta0-k-gt1", 10.0, 0.0, 0.8, 0.0),
        Case::new("gen-delta-neg", 10.0, 1.0, -0.5, 0.0),
        Case::new("gen-delta-zero-osc", 10.0, 1.0, 0.8606968821211488, 0.0),
        Case::new("gen-delta-zero-decay", 2.0, 0.42, 0.93372542751544274, 0.0),
        Case::new("gen-delta-pos", 10.0, 1.0, 0.6, 0.0),
        Case::new("frozen-inf", 10.0, 1.0, fixed_point_z(), 0.0),
    ]
}

/// Extra trajectories not already in the matrix: linear, small λρ, near-degenerate and moving starts.
pub fn extra_cases() -> Vec<Case> {
    vec![
        Case::new("rabi-linear", 0.0, 0.0, 0.5, 0.0),
        Case::new("small-lr-delta-neg", 0.1, 1.0, 0.5, 0.0),
        Case::new("small-lr-near-fixed-point", 0.1, 1.0, -0.6, 0.0),
        Case::new("six-digit-delta-zero", 10.0, 1.0, 0.509117, 0.0),
        Case::new("moving-start", 10.0, 1.0, 0.3, 1.0),
        Case::new("moving-start-dn", 10.0, 0.0, 0.7, -0.4),
    ]
}

/// The `Δ = 0`, `λρ = 10` cases used for the modulus negative control.
pub fn modulus_cases() -> Vec<Case> {
    branch_matrix()
        .into_iter()
        .filter(|c| c.name.starts_with("delta0-"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub max_abs: f64,
    pub constant_abs: f64,
    pub period_rel: f64,
    pub mean_abs: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_abs: 1e-6,
            constant_abs: 1e-12,
            period_rel: 1e-4,
            mean_abs: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareOptions {
    pub s_max: f64,
    /// Periods covered by the run used for period and mean checks.
    pub periods: f64,
    pub classify: ClassifyOptions,
    pub integrate: IntegrateOptions,
    pub thresholds: Thresholds,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            s_max: 20.0,
            periods: 12.0,
            classify: ClassifyOptions::default(),
            integrate: IntegrateOptions {
                rel_tol: 1e-12,
                abs_tol: 1e-12,
                sample_ds: 0.01,
                ..IntegrateOptions::default()
            },
            thresholds: Thresholds::default(),
        }
    }
}

impl CompareOptions {
    pub fn with_modulus(mut self, modulus: ModulusForm) -> Self {
        self.classify.modulus = modulus;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub case: Case,
    pub branch: Branch,
    pub max_abs_error: f64,
    pub period_predicted: Option<f64>,
    pub period_measured: Option<f64>,
    pub period_rel_error: Option<f64>,
    pub mean_predicted: f64,
    pub mean_measured: Option<f64>,
    pub mean_error: Option<f64>,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn measured_period(traj: &Trajectory) -> Option<f64> {
    let (lo, hi) = traj
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.z), b.max(s.z)));
    let ups = traj.upcrossings(0.5 * (lo + hi));
    (ups.len() >= 2).then(|| (ups[ups.len() - 1] - ups[0]) / (ups.len() - 1) as f64)
}

pub fn compare_case(case: &Case, opts: &CompareOptions) -> Result<Comparison> {
    let p = case.params();
    let sol = solve(&p, case.z0, case.theta0, &opts.classify)?;
    let report = &sol.report;
    let traj = integrate(&p, case.z0, case.theta0, opts.s_max, &opts.integrate)?;
    let mut max_err: f64 = 0.0;
    for smp in &traj.samples {
        let err = (sol.eval(smp.s)? - smp.z).abs();
        max_err = max_err.max(if err.is_nan() { f64::INFINITY } else { err });
    }

    let t = opts.thresholds;
    let mut failures = Vec::new();
    let constant = report.branch.is_constant();
    let limit = if constant { t.constant_abs } else { t.max_abs };
    if !(max_err <= limit) {
        failures.push(format!("max |dZ| {max_err:e} > {limit:e}"));
    }

    let (mut period_measured, mut period_rel, mut mean_measured, mut mean_err) = (None, None, None, None);
    if constant {
        let s_end = traj.span();
        let m = time_integral(&traj, 0.0, s_end) / s_end;
        mean_measured = Some(m);
        mean_err = Some((m - report.mean_z).abs());
    } else if let Some(period) = report.period {
        let long = integrate(
            &p,
            case.z0,
            case.theta0,
            (opts.periods * period).max(opts.s_max),
            &opts.integrate,
        )?;
        period_measured = measured_period(&long);
        period_rel = period_measured.map(|m| (m - period).abs() / period);
        if let Ok(d) = detect_mqst(&long) {
            mean_measured = Some(d.mean_z);
            mean_err = Some((d.mean_z - report.mean_z).abs());
        }
        match period_rel {
            Some(e) if e <= t.period_rel => {}
            Some(e) => failures.push(format!("period rel error {e:e} > {:e}", t.period_rel)),
            None => failures.push("no period measured".into()),
        }
    }
    if let Some(e) = mean_err {
        if !(e <= t.mean_abs) {
            failures.push(format!("mean error {e:e} > {:e}", t.mean_abs));
        }
    }

    Ok(Comparison {
        case: *case,
        branch: report.branch,
        max_abs_error: max_err,
        period_predicted: report.period,
        period_measured,
        period_rel_error: period_rel,
        mean_predicted: report.mean_z,
        mean_measured,
        mean_error: mean_err,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_covers_every_branch() {
        let opts = ClassifyOptions::default();
        let got: Vec<Branch> = branch_matrix()
            .iter()
            .map(|c| crate::analytic::classify(&c.params(), c.z0, c.theta0, &opts).unwrap().branch)
            .collect();
        assert_eq!(got, Branch::ALL.to_vec());
    }

    #[test]
    fn oscillating_case_passes() {
        let c = compare_case(&branch_matrix()[3], &CompareOptions::default()).unwrap();
        assert!(c.passed, "{:?}", c.failures);
    }

    #[test]
    fn printed_modulus_fails() {
        let opts = CompareOptions::default().with_modulus(ModulusForm::Printed);
        let c = compare_case(&branch_matrix()[3], &opts).unwrap();
        assert!(!c.passed && c.max_abs_error > 1e-3);
    }
}
