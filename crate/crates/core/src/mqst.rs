//! Self-trapping analysis: critical imbalance, the classical-particle picture,
//! allowed regions, phase reconstruction and phase portraits.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::analytic::{classify, Branch, ClassifyOptions, Quartic};
use crate::error::{domain, Error, Result};
use crate::meanfield::{deriv, energy, integrate, IntegrateOptions, Trajectory};
use crate::setup::SystemParams;

/// Critical imbalance above which the motion self-traps.
///
/// Returns the positive root (the threshold is symmetric, `±Zc`), or `None`
/// when no threshold exists (`λρ < 1` with `sin Θ0 = 0`, or a negative
/// radicand).
pub fn critical_imbalance(lambda_rho: f64, theta0: f64) -> Result<Option<f64>> {
    if !(lambda_rho.is_finite() && lambda_rho > 0.0) {
        return Err(domain("lambda_rho", lambda_rho, "finite and > 0"));
    }
    if !theta0.is_finite() {
        return Err(domain("theta0", theta0, "finite"));
    }
    let l = lambda_rho;
    if theta0.sin() == 0.0 {
        if l < 1.0 {
            return Ok(None);
        }
        return Ok(Some(2.0 * (l - 1.0).sqrt() / l));
    }
    let c2 = (2.0 * theta0).cos();
    let inner = (1.0 + c2) * (c2 + 2.0 * (l - 1.0).powi(2) - 1.0);
    if inner < 0.0 {
        return Ok(None);
    }
    let zc2 = 2.0 / l - (1.0 + c2) / (l * l) + inner.sqrt() / (l * l);
    if !(0.0..=1.0).contains(&zc2) {
        return Ok(None);
    }
    Ok(Some(zc2.sqrt()))
}

/// General critical-imbalance expression evaluated without the `sin Θ0 = 0`
/// shortcut; used to cross-check the reduced form.
pub fn critical_imbalance_general(lambda_rho: f64, theta0: f64) -> f64 {
    let l = lambda_rho;
    let c2 = (2.0 * theta0).cos();
    let inner = (1.0 + c2) * (c2 + 2.0 * (l - 1.0).powi(2) - 1.0);
    (2.0 / l - (1.0 + c2) / (l * l) + inner.max(0.0).sqrt() / (l * l)).sqrt()
}

/// Potential `U(Z)` and total energy `E = 1 − H0²` of the equivalent particle
/// with `(dZ/ds̃)² + U(Z) = E`.
pub fn classical_potential(z: f64, p: &SystemParams, h0: f64) -> (f64, f64) {
    let (l, d) = (p.lambda_rho, p.delta);
    let u = z * z * (l * l * z * z / 4.0 + 1.0 + d * d - h0 * l) + z * (l * d * z * z - 2.0 * h0 * d);
    (u, 1.0 - h0 * h0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllowedRegions {
    pub intervals: Vec<[f64; 2]>,
    pub turning_points: Vec<f64>,
}

impl AllowedRegions {
    pub fn containing(&self, z: f64) -> Option<[f64; 2]> {
        self.intervals
            .iter()
            .copied()
            .find(|&[a, b]| z >= a - 1e-9 && z <= b + 1e-9)
    }
}

/// Sub-intervals of `[−1, 1]` with `f(Z) ≥ 0`.
pub fn allowed_regions(p: &SystemParams, h0: f64) -> Result<AllowedRegions> {
    let q = Quartic::new(p, h0)?;
    let intervals: Vec<[f64; 2]> = q.allowed_intervals().into_iter().map(|(a, b)| [a, b]).collect();
    let mut turning_points: Vec<f64> = intervals.iter().flat_map(|&[a, b]| [a, b]).collect();
    turning_points.dedup();
    Ok(AllowedRegions {
        intervals,
        turning_points,
    })
}

/// `cos Θ` on the energy shell `H(Z, Θ) = H0`.
pub fn phase_cosine(z: f64, p: &SystemParams, h0: f64) -> f64 {
    (0.5 * p.lambda_rho * z * z + p.delta * z - h0) / (1.0 - z * z).sqrt()
}

/// Principal `Θ ∈ [0, π]` on the energy shell; `−Θ` is the other branch.
pub fn phase_of_z(z: f64, p: &SystemParams, h0: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(domain("Z", z, "|Z| < 1"));
    }
    let c = phase_cosine(z, p, h0);
    if !(c.abs() <= 1.0 + 1e-12) {
        return Err(Error::OutsideAllowedRegion(z));
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Topology {
    Closed,
    Open,
    Separatrix,
}

impl Topology {
    pub fn tag(self) -> &'static str {
        match self {
            Topology::Closed => "CLOSED",
            Topology::Open => "OPEN",
            Topology::Separatrix => "SEPARATRIX",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitCurve {
    pub z0: f64,
    pub theta0: f64,
    /// `(Θ/π, Z)` pairs.
    pub points: Vec<[f64; 2]>,
    pub topology: Topology,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortraitOptions {
    /// Points per half of a closed curve.
    pub points: usize,
    /// Phase excursion kept for open curves.
    pub theta_window: f64,
    pub integrate: IntegrateOptions,
}

impl Default for PortraitOptions {
    fn default() -> Self {
        PortraitOptions {
            points: 400,
            theta_window: 6.0 * PI,
            integrate: IntegrateOptions {
                sample_ds: 0.005,
                ..IntegrateOptions::default()
            },
        }
    }
}

/// One curve per initial imbalance at common `Θ0`.
pub fn portrait(
    p: &SystemParams,
    z0_list: &[f64],
    theta0: f64,
    opts: &PortraitOptions,
) -> Result<Vec<PortraitCurve>> {
    z0_list
        .iter()
        .map(|&z0| portrait_curve(p, z0, theta0, opts))
        .collect()
}

pub fn portrait_curve(
    p: &SystemParams,
    z0: f64,
    theta0: f64,
    opts: &PortraitOptions,
) -> Result<PortraitCurve> {
    let report = classify(p, z0, theta0, &ClassifyOptions::default())?;
    let h0 = report.h0;
    let (lo, hi) = (report.z_min, report.z_max);
    let separatrix = matches!(report.branch, Branch::Delta0KEq1 | Branch::GenDeltaZeroDecay);
    let at = |z: f64| phase_cosine(z.clamp(-1.0 + 1e-15, 1.0 - 1e-15), p, h0);
    let (c_lo, c_hi) = (at(lo), at(hi));
    let topology = if separatrix {
        Topology::Separatrix
    } else if report.branch.is_constant() || (c_lo > 0.0) == (c_hi > 0.0) {
        Topology::Closed
    } else {
        Topology::Open
    };

    let points = match topology {
        Topology::Open => open_curve(p, z0, theta0, report.period, opts)?,
        _ => closed_curve(p, h0, lo, hi, c_lo + c_hi < 0.0, opts.points),
    };
    Ok(PortraitCurve {
        z0,
        theta0,
        points,
        topology,
    })
}

/// Shell curve over `[lo, hi]`, centred on `Θ = 0` or on `Θ = π`.
fn closed_curve(
    p: &SystemParams,
    h0: f64,
    lo: f64,
    hi: f64,
    around_pi: bool,
    n: usize,
) -> Vec<[f64; 2]> {
    let n = n.max(2);
    let theta = |z: f64| {
        phase_cosine(z.clamp(-1.0 + 1e-15, 1.0 - 1e-15), p, h0)
            .clamp(-1.0, 1.0)
            .acos()
    };
    // Cosine spacing resolves the square-root behaviour at the turning points.
    let zs: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * 0.5 * (1.0 - (PI * i as f64 / n as f64).cos()))
        .collect();
    let mut out = Vec::with_capacity(2 * n + 1);
    for &z in &zs {
        let t = theta(z);
        let t = if around_pi { t } else { t };
        out.push([t / PI, z]);
    }
    for &z in zs.iter().rev().skip(1) {
        let t = theta(z);
        let t = if around_pi { 2.0 * PI - t } else { -t };
        out.push([t / PI, z]);
    }
    if let Some(&first) = out.first() {
        out.push(first);
    }
    out
}

fn open_curve(
    p: &SystemParams,
    z0: f64,
    theta0: f64,
    period: Option<f64>,
    opts: &PortraitOptions,
) -> Result<Vec<[f64; 2]>> {
    // Θ advances by 2π per oscillation of Z on running-phase orbits.
    let turns = opts.theta_window / (2.0 * PI);
    let s_max = period.map_or(200.0, |t| (t * (turns + 1.0)).max(1.0));
    let traj = integrate(p, z0, theta0, s_max, &opts.integrate)?;
    let mut out = Vec::new();
    for smp in &traj.samples {
        if (smp.theta - theta0).abs() > opts.theta_window {
            break;
        }
        out.push([smp.theta / PI, smp.z]);
    }
    Ok(out)
}

/// CSV with header `Theta_over_pi,Z,curve_id,topology`.
pub fn portrait_csv(curves: &[PortraitCurve]) -> String {
    let mut out = String::from("Theta_over_pi,Z,curve_id,topology\n");
    for (id, c) in curves.iter().enumerate() {
        for &[t, z] in &c.points {
            let _ = writeln!(out, "{t:?},{z:?},{id},{}", c.topology.tag());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MqstDetection {
    pub mean_z: f64,
    pub mqst: bool,
    /// Whole periods averaged over; 0 for the aperiodic fallback.
    pub periods: usize,
    pub period: Option<f64>,
}

/// Minimum span for trajectories without detectable oscillation.
pub const APERIODIC_SPAN: f64 = 50.0;

pub fn detect_mqst(traj: &Trajectory) -> Result<MqstDetection> {
    detect_mqst_with(traj, 1e-3)
}

/// Time average of `Z` over an integer number of detected periods (upward
/// crossings of the mid-level), flagged when `|⟨Z⟩| > threshold`.
pub fn detect_mqst_with(traj: &Trajectory, threshold: f64) -> Result<MqstDetection> {
    if traj.samples.len() < 2 {
        return Err(Error::InsufficientData("fewer than two samples".into()));
    }
    let (zmin, zmax) = traj
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.z), b.max(s.z)));
    let crossings = if zmax - zmin > 1e-9 {
        traj.upcrossings(0.5 * (zmin + zmax))
    } else {
        Vec::new()
    };
    let (mean, periods, period) = if crossings.len() >= 4 {
        let (a, b) = (crossings[0], crossings[crossings.len() - 1]);
        let n = crossings.len() - 1;
        (time_integral(traj, a, b) / (b - a), n, Some((b - a) / n as f64))
    } else if traj.span() >= APERIODIC_SPAN {
        let (a, b) = (traj.samples[0].s, traj.samples[traj.samples.len() - 1].s);
        (time_integral(traj, a, b) / (b - a), 0, None)
    } else {
        return Err(Error::InsufficientData(format!(
            "{} crossings over span {}; need 3 periods or span >= {APERIODIC_SPAN}",
            crossings.len().saturating_sub(1),
            traj.span()
        )));
    };
    Ok(MqstDetection {
        mean_z: mean,
        mqst: mean.abs() > threshold,
        periods,
        period,
    })
}

/// `∫ Z ds̃` over `[a, b]` on the cubic Hermite interpolant of the samples.
pub fn time_integral(traj: &Trajectory, a: f64, b: f64) -> f64 {
    let p = &traj.meta.params;
    let mut total = 0.0;
    for w in traj.samples.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let lo = a.max(s0.s);
        let hi = b.min(s1.s);
        if hi <= lo {
            continue;
        }
        let h = s1.s - s0.s;
        let d0 = deriv(s0.z, s0.theta, p).0 * h;
        let d1 = deriv(s1.z, s1.theta, p).0 * h;
        // Antiderivative of the Hermite basis in t ∈ [0, 1].
        let prim = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            s0.z * (t4 / 2.0 - t3 + t)
                + d0 * (t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0)
                + s1.z * (-t4 / 2.0 + t3)
                + d1 * (t4 / 4.0 - t3 / 3.0)
        };
        total += h * (prim((hi - s0.s) / h) - prim((lo - s0.s) / h));
    }
    total
}

/// Bisection on `z0` (at `Θ0 = 0`, `Δ` from `p`) for the onset of
/// self-trapping as seen by [`detect_mqst`] on integrated trajectories.
pub fn mqst_threshold_bisection(
    p: &SystemParams,
    mut below: f64,
    mut above: f64,
    tol: f64,
    s_max: f64,
    opts: &IntegrateOptions,
) -> Result<(f64, f64)> {
    let trapped = |z0: f64| -> Result<bool> {
        let traj = integrate(p, z0, 0.0, s_max, opts)?;
        Ok(detect_mqst(&traj)?.mqst)
    };
    if trapped(below)? || !trapped(above)? {
        return Err(Error::InsufficientData(
            "bisection bracket does not straddle the transition".into(),
        ));
    }
    while above - below > tol {
        let mid = 0.5 * (below + above);
        if trapped(mid)? {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok((below, above))
}

/// Energy at the initial condition, for callers that only hold `(z0, Θ0)`.
pub fn initial_energy(p: &SystemParams, z0: f64, theta0: f64) -> f64 {
    energy(z0, theta0, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lr: f64, d: f64) -> SystemParams {
        SystemParams::new(lr, d)
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_imbalance(10.0, 0.0).unwrap(), Some(0.6));
        assert_eq!(critical_imbalance(1.0, 0.0).unwrap(), Some(0.0));
        let z = critical_imbalance(4.0, 0.0).unwrap().unwrap();
        assert!((z - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(critical_imbalance(0.5, 0.0).unwrap(), None);
        assert!(critical_imbalance(0.0, 0.0).is_err());
    }

    #[test]
    fn general_formula_reduces() {
        for l in [2.0, 4.0, 10.0, 100.0] {
            let a = critical_imbalance_general(l, 0.0);
            let b = 2.0 * (l - 1.0f64).sqrt() / l;
            assert!((a - b).abs() < 1e-12, "{l}");
        }
    }

    #[test]
    fn separatrix_energy_is_one() {
        for l in [2.0, 3.0, 10.0, 100.0] {
            let zc = critical_imbalance(l, 0.0).unwrap().unwrap();
            let h = energy(zc, 0.0, &params(l, 0.0));
            assert!((h - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_identity() {
        let p = params(10.0, 1.0);
        let h0 = energy(0.6, 0.3, &p);
        let q = Quartic::new(&p, h0).unwrap();
        assert_eq!(classical_potential(0.0, &p, h0).0, 0.0);
        for i in 0..=100 {
            let z = -1.0 + 0.02 * i as f64;
            let (u, e) = classical_potential(z, &p, h0);
            assert!((e - u - 25.0 * q.f(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn potential_changes_shape() {
        let p = params(10.0, 0.0);
        let curvature = |z0: f64| {
            let h0 = energy(z0, 0.0, &p);
            let u = |z| classical_potential(z, &p, h0).0;
            let h = 1e-4;
            (u(h) - 2.0 * u(0.0) + u(-h)) / (h * h)
        };
        assert!(curvature(0.4) > 0.0);
        assert!(curvature(0.8) < 0.0);
    }

    #[test]
    fn portrait_regions() {
        let p = params(10.0, 0.0);
        let r = allowed_regions(&p, energy(0.8, 0.0, &p)).unwrap();
        assert_eq!(r.intervals.len(), 2);
        assert!((r.intervals[0][0] + r.intervals[1][1]).abs() < 1e-10);
        assert!(r.containing(0.8).unwrap()[0] > 0.0);
        let r = allowed_regions(&p, energy(0.4, 0.0, &p)).unwrap();
        assert_eq!(r.intervals.len(), 1);
        assert!(r.intervals[0][0] < 0.0 && r.intervals[0][1] > 0.0);
        let q = Quartic::new(&p, energy(0.4, 0.0, &p)).unwrap();
        for t in &r.turning_points {
            assert!(q.f(*t).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_reconstruction() {
        let p = params(10.0, 1.0);
        let h0 = energy(0.3, 0.0, &p);
        assert!(phase_of_z(0.3, &p, h0).unwrap().abs() < 1e-7);
        let q = Quartic::new(&p, h0).unwrap();
        let (lo, hi) = q.interval_containing(0.3);
        for i in 1..50 {
            let z = lo + (hi - lo) * i as f64 / 50.0;
            let th = phase_of_z(z, &p, h0).unwrap();
            assert!((energy(z, th, &p) - h0).abs() < 1e-12);
            assert!((energy(z, -th, &p) - h0).abs() < 1e-12);
        }
        assert!(matches!(
            phase_of_z(hi + 0.05, &p, h0),
            Err(Error::OutsideAllowedRegion(_))
        ));
    }

    #[test]
    fn portrait_topologies() {
        let p = params(10.0, 0.0);
        let curves = portrait(&p, &[0.4, 0.6, 0.8], 0.0, &PortraitOptions::default()).unwrap();
        assert_eq!(curves[0].topology, Topology::Closed);
        assert_eq!(curves[1].topology, Topology::Separatrix);
        assert_eq!(curves[2].topology, Topology::Open);
        let c = &curves[0].points;
        let (a, b) = (c[0], c[c.len() - 1]);
        assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
        let span = curves[2]
            .points
            .iter()
            .fold(0.0_f64, |m, q| m.max(q[0].abs()));
        assert!(span > 5.0);
    }

    #[test]
    fn drive_breaks_reflection_symmetry() {
        let p = params(10.0, 1.0);
        let c = portrait_curve(&p, -0.5, 0.0, &PortraitOptions::default()).unwrap();
        let (lo, hi) = c
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q[1]), b.max(q[1])));
        assert!((lo + hi).abs() > 1e-3);
    }

    #[test]
    fn detect_on_delta0_cases() {
        let p = params(10.0, 0.0);
        let o = IntegrateOptions::default();
        let d = detect_mqst(&integrate(&p, 0.4, 0.0, 30.0, &o).unwrap()).unwrap();
        assert!(!d.mqst && d.mean_z.abs() < 1e-3);
        let d = detect_mqst(&integrate(&p, 0.8, 0.0, 30.0, &o).unwrap()).unwrap();
        assert!(d.mqst);
        let d = detect_mqst(&integrate(&params(10.0, 1.0), -0.5, 0.0, 30.0, &o).unwrap()).unwrap();
        assert!(d.mqst);
    }

    #[test]
    fn short_trajectories_are_rejected() {
        let p = params(10.0, 0.0);
        let traj = integrate(&p, 0.4, 0.0, 3.0, &IntegrateOptions::default()).unwrap();
        assert!(matches!(detect_mqst(&traj), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn csv_layout() {
        let p = params(10.0, 0.0);
        let curves = portrait(&p, &[0.4], 0.0, &PortraitOptions { points: 4, ..Default::default() })
            .unwrap();
        let csv = portrait_csv(&curves);
        assert!(csv.starts_with("Theta_over_pi,Z,curve_id,topology\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",0,CLOSED"));
    }
}
