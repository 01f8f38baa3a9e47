//! Two-mode mean-field equations for the population imbalance `Z` and the
//! phase difference `Θ = θa − θb`, in dimensionless time `s̃`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::setup::SystemParams;

/// Integration stops, flagged, once `|Z|` reaches `1 - SINGULAR_MARGIN`.
pub const SINGULAR_MARGIN: f64 = 1e-12;

/// Lower bound on the local tolerance. Local control runs at
/// `tol / (2·max(1, s_max))` so that `|H − H0| ≤ 100·rel_tol` holds over the
/// whole span; below this floor round-off dominates and very long spans lose
/// that guarantee.
pub const LOCAL_TOL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub z: f64,
    pub theta: f64,
}

impl State {
    pub fn new(z: f64, theta: f64) -> Self {
        State { z, theta }
    }
}

/// `H = λρZ²/2 + ΔZ − √(1−Z²) cos Θ`.
pub fn hamiltonian(state: State, p: &SystemParams) -> Result<f64> {
    let z = state.z;
    if !(z.abs() <= 1.0) {
        return Err(domain("Z", z, "|Z| <= 1"));
    }
    Ok(energy(z, state.theta, p))
}

pub(crate) fn energy(z: f64, theta: f64, p: &SystemParams) -> f64 {
    0.5 * p.lambda_rho * z * z + p.delta * z - (1.0 - z * z).max(0.0).sqrt() * theta.cos()
}

/// `(dZ/ds̃, dΘ/ds̃)`. Fails with [`Error::Singular`] at `|Z| = 1`.
pub fn rhs(state: State, p: &SystemParams) -> Result<(f64, f64)> {
    if !(state.z.abs() < 1.0) {
        return Err(Error::Singular(state.z));
    }
    Ok(deriv(state.z, state.theta, p))
}

#[inline]
pub(crate) fn deriv(z: f64, theta: f64, p: &SystemParams) -> (f64, f64) {
    let w = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = theta.sin_cos();
    (-w * s, p.delta + p.lambda_rho * z + z * c / w)
}

/// Inter-ring current `I0·√(1−Z²)·sin Θ` with `I0 = g·N_T` (ħ = 1).
pub fn josephson_current(state: State, n_t: f64, g: f64) -> f64 {
    g * n_t * josephson_current_ratio(state)
}

/// `I/I0 = √(1−Z²) sin Θ`, which equals `−dZ/ds̃`.
pub fn josephson_current_ratio(state: State) -> f64 {
    (1.0 - state.z * state.z).max(0.0).sqrt() * state.theta.sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Spacing of the dense-output samples.
    pub sample_ds: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            sample_ds: 0.01,
            max_steps: 10_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(domain(name, v, "0 < tol <= 1e-3"));
            }
        }
        if !(self.sample_ds > 0.0 && self.sample_ds.is_finite()) {
            return Err(domain("sample_ds", self.sample_ds, "finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub s: f64,
    pub z: f64,
    pub theta: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub params: SystemParams,
    pub options: IntegrateOptions,
    pub h0: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub max_drift: f64,
    /// Relative and absolute tolerance used for local error control.
    pub local_tol: (f64, f64),
    /// Set when the run stopped early because `|Z|` reached 1.
    pub singular: bool,
    pub s_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s_tilde,Z,Theta,H,H_drift\n");
        for smp in &self.samples {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?}",
                smp.s,
                smp.z,
                smp.theta,
                smp.h,
                smp.h - self.meta.h0
            );
        }
        out
    }

    pub fn span(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        }
    }

    /// Times at which `Z` crosses `level` upwards, located on the cubic
    /// Hermite interpolant built from samples and the exact `dZ/ds̃`.
    pub fn upcrossings(&self, level: f64) -> Vec<f64> {
        let p = &self.meta.params;
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(a.z < level && b.z >= level) {
                continue;
            }
            let h = b.s - a.s;
            let da = deriv(a.z, a.theta, p).0 * h;
            let db = deriv(b.z, b.theta, p).0 * h;
            let hermite = |t: f64| {
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * a.z
                    + (t3 - 2.0 * t2 + t) * da
                    + (-2.0 * t3 + 3.0 * t2) * b.z
                    + (t3 - t2) * db
                    - level
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(a.s + 0.5 * (lo + hi) * h);
        }
        out
    }
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes c_i are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer-Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type V2 = [f64; 2];

#[inline]
fn f(y: V2, p: &SystemParams) -> V2 {
    let (a, b) = deriv(y[0], y[1], p);
    [a, b]
}

#[inline]
fn comb(y: V2, h: f64, terms: &[(f64, V2)]) -> V2 {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Adaptive Dormand-Prince 5(4) integration of the two-mode equations with
/// dense output every `opts.sample_ds`, plus a final sample at `s_max`.
pub fn integrate(
    p: &SystemParams,
    z0: f64,
    theta0: f64,
    s_max: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    p.validate()?;
    opts.validate()?;
    if !(z0.abs() <= 1.0) {
        return Err(domain("z0", z0, "|z0| <= 1"));
    }
    if !theta0.is_finite() {
        return Err(domain("theta0", theta0, "finite"));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(domain("s_max", s_max, "finite and > 0"));
    }

    let h0 = energy(z0, theta0, p);
    let mut samples = vec![Sample {
        s: 0.0,
        z: z0,
        theta: theta0,
        h: h0,
    }];
    // The options bound the accumulated error; local control runs tighter in
    // proportion to the span (see `LOCAL_TOL_FLOOR`).
    let shrink = 0.5 / s_max.max(1.0);
    let rtol = (opts.rel_tol * shrink).max(LOCAL_TOL_FLOOR);
    let atol = (opts.abs_tol * shrink).max(LOCAL_TOL_FLOOR);
    let mut meta = TrajectoryMeta {
        params: *p,
        options: *opts,
        local_tol: (rtol, atol),
        h0,
        accepted_steps: 0,
        rejected_steps: 0,
        min_step: f64::INFINITY,
        max_step: 0.0,
        max_drift: 0.0,
        singular: false,
        s_end: 0.0,
    };
    if z0.abs() >= 1.0 - SINGULAR_MARGIN {
        meta.singular = true;
        return Ok(Trajectory { samples, meta });
    }

    let n_samples = (s_max / opts.sample_ds + 1e-9).floor() as usize;
    let mut next_index = 1usize;
    let sample_time = |i: usize| -> f64 {
        if i > n_samples {
            s_max
        } else {
            (i as f64 * opts.sample_ds).min(s_max)
        }
    };
    let push = |samples: &mut Vec<Sample>, meta: &mut TrajectoryMeta, s: f64, y: V2| {
        let h = energy(y[0], y[1], p);
        meta.max_drift = meta.max_drift.max((h - h0).abs());
        if samples.last().map_or(true, |last| s > last.s) {
            samples.push(Sample {
                s,
                z: y[0],
                theta: y[1],
                h,
            });
        }
    };

    let mut s = 0.0;
    let mut y: V2 = [z0, theta0];
    let mut k1 = f(y, p);
    let scale = |y: V2, i: usize| atol + rtol * y[i].abs();
    // Initial step from the derivative magnitude.
    let d0 = (y[0] / scale(y, 0)).hypot(y[1] / scale(y, 1)) / 2f64.sqrt();
    let d1 = (k1[0] / scale(y, 0)).hypot(k1[1] / scale(y, 1)) / 2f64.sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    // Near fixed points the error estimate sees only round-off and would let
    // the step leave the stability region; bound it by the rate scale.
    let h_cap = 1.0 / (1.0 + p.lambda_rho + p.delta.abs());
    h = h.min(s_max).min(opts.sample_ds.max(1e-3) * 10.0).min(h_cap);

    while s < s_max {
        if meta.accepted_steps + meta.rejected_steps >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { s, h });
        }
        // Absorb slivers so the final step lands on s_max exactly.
        let last = s + h * (1.0 + 1e-9) >= s_max;
        if last {
            h = s_max - s;
        }
        if h <= 16.0 * f64::EPSILON * s.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { s, h });
        }
        let k2 = f(comb(y, h, &[(A21, k1)]), p);
        let k3 = f(comb(y, h, &[(A31, k1), (A32, k2)]), p);
        let k4 = f(comb(y, h, &[(A41, k1), (A42, k2), (A43, k3)]), p);
        let k5 = f(comb(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]), p);
        let y6 = comb(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        let k6 = f(y6, p);
        let ynew = comb(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let k7 = f(ynew, p);

        let mut err = 0.0;
        let mut finite = ynew[0].is_finite() && ynew[1].is_finite() && ynew[0].abs() < 1.0;
        for i in 0..2 {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        err = (err / 2.0).sqrt();
        if !err.is_finite() {
            finite = false;
        }

        if finite && err <= 1.0 {
            meta.accepted_steps += 1;
            meta.min_step = meta.min_step.min(h);
            meta.max_step = meta.max_step.max(h);
            let s_new = if last { s_max } else { s + h };
            let mut r5 = [0.0; 2];
            let mut r2 = [0.0; 2];
            let mut r3 = [0.0; 2];
            let mut r4 = [0.0; 2];
            for i in 0..2 {
                let dy = ynew[i] - y[i];
                let bspl = h * k1[i] - dy;
                r2[i] = dy;
                r3[i] = bspl;
                r4[i] = dy - h * k7[i] - bspl;
                r5[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            while next_index <= n_samples + 1 && sample_time(next_index) <= s_new {
                let st = sample_time(next_index);
                let t = (st - s) / h;
                let t1 = 1.0 - t;
                let mut ys = [0.0; 2];
                for i in 0..2 {
                    ys[i] = y[i] + t * (r2[i] + t1 * (r3[i] + t * (r4[i] + t1 * r5[i])));
                }
                if st == s_new {
                    ys = ynew;
                }
                push(&mut samples, &mut meta, st, ys);
                next_index += 1;
            }
            s = s_new;
            y = ynew;
            k1 = k7;
            if y[0].abs() >= 1.0 - SINGULAR_MARGIN {
                push(&mut samples, &mut meta, s, y);
                meta.singular = true;
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(h_cap);
        } else {
            meta.rejected_steps += 1;
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= fac;
        }
    }
    meta.s_end = s;
    Ok(Trajectory { samples, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(lr: f64, d: f64) -> SystemParams {
        SystemParams::new(lr, d)
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian(State::new(0.0, 0.0), &params(3.0, 0.0)).unwrap();
        assert_eq!(h, -1.0);
        let h = hamiltonian(State::new(0.6, 0.0), &params(10.0, 0.0)).unwrap();
        assert!((h - 1.0).abs() < 1e-15);
        let p = params(4.0, 0.7);
        for th in [0.0, 1.0, 2.5] {
            assert!((hamiltonian(State::new(1.0, th), &p).unwrap() - (2.0 + 0.7)).abs() < 1e-15);
            assert!((hamiltonian(State::new(-1.0, th), &p).unwrap() - (2.0 - 0.7)).abs() < 1e-15);
        }
        assert!(hamiltonian(State::new(1.01, 0.0), &p).is_err());
    }

    #[test]
    fn rhs_examples() {
        let p = params(5.0, 0.0);
        let (dz, dt) = rhs(State::new(0.0, FRAC_PI_2), &p).unwrap();
        assert_eq!(dz, -1.0);
        assert!(dt.abs() < 1e-16);
        assert_eq!(rhs(State::new(0.0, 0.0), &params(5.0, 1.5)).unwrap(), (0.0, 1.5));
        assert_eq!(rhs(State::new(1.0, 0.0), &p), Err(Error::Singular(1.0)));
    }

    #[test]
    fn rhs_is_symplectic_gradient() {
        let p = params(3.3, -0.8);
        let eps = 1e-6;
        for i in 0..20 {
            let z = -0.95 + 0.1 * i as f64;
            let th = 0.37 * i as f64;
            let h = |z: f64, th: f64| energy(z, th, &p);
            let dh_dz = (h(z + eps, th) - h(z - eps, th)) / (2.0 * eps);
            let dh_dt = (h(z, th + eps) - h(z, th - eps)) / (2.0 * eps);
            let (dz, dt) = rhs(State::new(z, th), &p).unwrap();
            assert!((dz + dh_dt).abs() < 1e-8);
            assert!((dt - dh_dz).abs() < 1e-8);
        }
    }

    #[test]
    fn rabi_oscillation() {
        let tr = integrate(&params(0.0, 0.0), 0.5, 0.0, PI, &IntegrateOptions::default()).unwrap();
        let last = tr.samples.last().unwrap();
        assert_eq!(last.s, PI);
        assert!((last.z + 0.5).abs() < 1e-8);
    }

    #[test]
    fn fixed_points_stay_put() {
        let z = -2.0 / 5f64.sqrt();
        let tr = integrate(&params(0.0, 2.0), z, 0.0, 30.0, &IntegrateOptions::default()).unwrap();
        assert!(tr.samples.iter().all(|s| (s.z - z).abs() < 1e-9));
        let tr = integrate(&params(7.0, 0.0), 0.0, 0.0, 30.0, &IntegrateOptions::default()).unwrap();
        assert!(tr.samples.iter().all(|s| s.z == 0.0 && s.theta == 0.0));
    }

    #[test]
    fn samples_are_uniform_and_increasing() {
        let tr = integrate(&params(2.0, 0.5), 0.3, 1.0, 1.005, &IntegrateOptions::default()).unwrap();
        assert_eq!(tr.samples.len(), 102);
        assert!(tr.samples.windows(2).all(|w| w[1].s > w[0].s));
        assert_eq!(tr.samples.last().unwrap().s, 1.005);
    }

    #[test]
    fn stops_at_the_pole() {
        let tr = integrate(&params(1.0, 0.0), 1.0, 0.0, 5.0, &IntegrateOptions::default()).unwrap();
        assert!(tr.meta.singular);
        assert_eq!(tr.samples.len(), 1);
    }

    #[test]
    fn current_matches_population_derivative() {
        let p = params(4.0, 0.3);
        let tr = integrate(&p, 0.2, 0.9, 5.0, &IntegrateOptions::default()).unwrap();
        let ds = 0.01;
        for w in tr.samples.windows(3).step_by(37) {
            let dz = (w[2].z - w[0].z) / (2.0 * ds);
            let i = josephson_current_ratio(State::new(w[1].z, w[1].theta));
            assert!((i + dz).abs() < 1e-3 * (1.0 + dz.abs()), "{i} vs {dz}");
        }
        assert_eq!(josephson_current(State::new(0.3, 0.0), 100.0, 2.0), 0.0);
        assert!((josephson_current(State::new(0.0, FRAC_PI_2), 100.0, 2.0) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let o = IntegrateOptions::default();
        assert!(integrate(&params(1.0, 0.0), 1.5, 0.0, 1.0, &o).is_err());
        assert!(integrate(&params(1.0, 0.0), 0.5, 0.0, -1.0, &o).is_err());
        let bad = IntegrateOptions { rel_tol: 0.1, ..o };
        assert!(integrate(&params(1.0, 0.0), 0.5, 0.0, 1.0, &bad).is_err());
        assert!(integrate(&params(-1.0, 0.0), 0.5, 0.0, 1.0, &o).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let tr = integrate(&params(0.0, 0.0), 0.5, 0.0, 0.02, &IntegrateOptions::default()).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("s_tilde,Z,Theta,H,H_drift"));
        assert_eq!(lines.count(), 3);
    }
}
