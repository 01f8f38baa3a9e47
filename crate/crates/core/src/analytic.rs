//! Closed-form solutions of the two-mode equations.
//!
//! Eliminating `Θ` gives `(dZ/ds̃)² = (λρ/2)² f(Z)` with the characteristic
//! quartic `f`. The regime is read off from `λρ`, `Δ` and either the elliptic
//! parameter (`Δ = 0`) or the discriminant of the Weierstrass invariants
//! (`Δ ≠ 0`).
//!
//! Time scales. Writing `S = √((λρ)² + 1 − 2H0λρ)`, the `Δ = 0` solutions are
//! `C·cn(√S·s̃, m)`, `C·sech(λρC s̃/2)` and `C·dn(λρC s̃/2, 1/m)`, with
//! `C² = 2(H0λρ − 1 + S)/(λρ)²` and `m = (H0λρ − 1 + S)/(2S)`. The Weierstrass
//! argument is `λρ(s̃ − s̃0)/2`, so the periods are `4K(m1)/(λρ√(e1−e3))` for
//! `δ > 0` and `4K(k2)/(λρ√H2)` for `δ < 0`. These are the forms that agree
//! with direct integration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elliptic::{
    ellint_f, ellint_k, jacobi_sn_cn_dn, weierstrass_reciprocal, CubicRoots, DiscriminantSign,
    WeierstrassInvariants, DEGENERATE_REL_TOL,
};
use crate::error::{domain, Error, Result};
use crate::meanfield::{deriv, energy};
use crate::poly;
use crate::quad;
use crate::setup::SystemParams;

/// Characteristic quartic `f(Z) = (2/λρ)²(1−Z²) − (Z² + 2ZΔ/λρ − 2H0/λρ)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartic {
    pub lambda_rho: f64,
    pub delta: f64,
    pub h0: f64,
    /// Coefficients of `f`, highest power first (`Z⁴` coefficient is −1).
    pub coeffs: [f64; 5],
    /// `a1..a4` of `f = −Z⁴ + 4a1Z³ + 6a2Z² + 4a3Z + a4`.
    pub a: [f64; 4],
}

impl Quartic {
    pub fn new(p: &SystemParams, h0: f64) -> Result<Self> {
        p.validate()?;
        if p.lambda_rho <= 0.0 {
            return Err(domain("lambda_rho", p.lambda_rho, "> 0 for the quartic"));
        }
        let (l, d) = (p.lambda_rho, p.delta);
        let l2 = l * l;
        let a = [
            -d / l,
            2.0 * (l * h0 - (d * d + 1.0)) / (3.0 * l2),
            2.0 * h0 * d / l2,
            4.0 * (1.0 - h0 * h0) / l2,
        ];
        let coeffs = [-1.0, 4.0 * a[0], 6.0 * a[1], 4.0 * a[2], a[3]];
        Ok(Quartic {
            lambda_rho: l,
            delta: d,
            h0,
            coeffs,
            a,
        })
    }

    pub fn from_initial(p: &SystemParams, z0: f64, theta0: f64) -> Result<Self> {
        check_initial(z0, theta0)?;
        Self::new(p, energy(z0, theta0, p))
    }

    pub fn f(&self, z: f64) -> f64 {
        poly::horner(&self.coeffs, z)
    }

    pub fn f_prime(&self, z: f64) -> f64 {
        let c = &self.coeffs;
        ((4.0 * c[0] * z + 3.0 * c[1]) * z + 2.0 * c[2]) * z + c[3]
    }

    pub fn f_double_prime(&self, z: f64) -> f64 {
        let c = &self.coeffs;
        (12.0 * c[0] * z + 6.0 * c[1]) * z + 2.0 * c[2]
    }

    /// The quartic in its unexpanded form; agrees with [`Quartic::f`].
    pub fn f_unexpanded(&self, z: f64) -> f64 {
        let l = self.lambda_rho;
        let b = z * z + 2.0 * z * self.delta / l - 2.0 * self.h0 / l;
        (2.0 / l).powi(2) * (1.0 - z * z) - b * b
    }

    pub fn invariants(&self) -> WeierstrassInvariants {
        let [a1, a2, a3, a4] = self.a;
        let g2 = -a4 - 4.0 * a1 * a3 + 3.0 * a2 * a2;
        let g3 = -a2 * a4 + 2.0 * a1 * a2 * a3 - a2 * a2 * a2 + a3 * a3 - a1 * a1 * a4;
        WeierstrassInvariants::new(g2, g3)
    }

    /// Real roots of `f`, ascending.
    pub fn roots(&self) -> Vec<f64> {
        poly::real_roots(&self.coeffs)
    }

    /// Maximal sub-intervals of `[−1, 1]` on which `f ≥ 0`. Pieces separated
    /// only by a double root are merged; isolated touching points are kept
    /// as zero-width intervals.
    pub fn allowed_intervals(&self) -> Vec<(f64, f64)> {
        let roots: Vec<f64> = self
            .roots()
            .into_iter()
            .filter(|r| r.abs() <= 1.0 + 1e-9)
            .map(|r| r.clamp(-1.0, 1.0))
            .collect();
        let mut breaks = vec![-1.0];
        breaks.extend(roots.iter().copied().filter(|r| r.abs() < 1.0));
        breaks.push(1.0);

        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a && self.f(0.5 * (a + b)) > 0.0 {
                match out.last_mut() {
                    Some(last) if a - last.1 <= 1e-7 => last.1 = b,
                    _ => out.push((a, b)),
                }
            }
        }
        for &r in &roots {
            let covered = out.iter().any(|&(a, b)| r >= a - 1e-7 && r <= b + 1e-7);
            if !covered && self.f(r) >= -1e-12 * scale {
                out.push((r, r));
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    /// The allowed interval containing `z` (or the nearest one).
    pub fn interval_containing(&self, z: f64) -> (f64, f64) {
        let intervals = self.allowed_intervals();
        let dist = |&(a, b): &(f64, f64)| {
            if z < a {
                a - z
            } else if z > b {
                z - b
            } else {
                0.0
            }
        };
        let (mut lo, mut hi) = intervals
            .iter()
            .copied()
            .min_by(|x, y| dist(x).total_cmp(&dist(y)))
            .unwrap_or((z, z));
        lo = lo.min(z);
        hi = hi.max(z);
        (lo, hi)
    }

    /// `q(Z) > 0` with `f(Z) = (Z − lo)(hi − Z)·q(Z)` for roots `lo`, `hi`.
    fn cofactor(&self, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
        let c = self.coeffs;
        let s = lo + hi;
        let p = lo * hi;
        let a = c[0];
        let b = c[1] + s * a;
        let cc = c[2] + s * b - p * a;
        move |z| -((a * z + b) * z + cc)
    }

    /// Time to travel between the turning points `lo` and `hi`,
    /// `(2/λρ) ∫ dZ/√f`.
    pub fn transit_time(&self, lo: f64, hi: f64) -> f64 {
        let q = self.cofactor(lo, hi);
        let w = hi - lo;
        let integral = quad::integrate(
            |psi: f64| 2.0 / q(lo + w * psi.sin().powi(2)).max(f64::MIN_POSITIVE).sqrt(),
            0.0,
            0.5 * PI,
            1e-13,
        );
        2.0 / self.lambda_rho * integral
    }

    /// Time average of `Z` over a full oscillation between `lo` and `hi`.
    pub fn time_average(&self, lo: f64, hi: f64) -> f64 {
        let q = self.cofactor(lo, hi);
        let w = hi - lo;
        let weight = |psi: f64| 1.0 / q(lo + w * psi.sin().powi(2)).max(f64::MIN_POSITIVE).sqrt();
        let num = quad::integrate(
            |psi: f64| (lo + w * psi.sin().powi(2)) * weight(psi),
            0.0,
            0.5 * PI,
            1e-14,
        );
        let den = quad::integrate(weight, 0.0, 0.5 * PI, 1e-14);
        num / den
    }

    /// `(2/λρ) ∫_{z1}^{z} dZ/√f` for a simple root `z1`, always ≥ 0.
    pub fn time_from_root(&self, z1: f64, z: f64) -> f64 {
        let g = poly::deflate(&self.coeffs, z1);
        let d = z - z1;
        if d == 0.0 {
            return 0.0;
        }
        let integral = quad::integrate(
            |psi: f64| {
                let zz = z1 + d * psi.sin().powi(2);
                let denom = (d * poly::horner(&g, zz)).max(f64::MIN_POSITIVE);
                2.0 * psi.cos() * d.abs() / denom.sqrt()
            },
            0.0,
            0.5 * PI,
            1e-13,
        );
        2.0 / self.lambda_rho * integral
    }
}

fn check_initial(z0: f64, theta0: f64) -> Result<()> {
    if !(z0.abs() <= 1.0) {
        return Err(domain("z0", z0, "|z0| <= 1"));
    }
    if !theta0.is_finite() {
        return Err(domain("theta0", theta0, "finite"));
    }
    Ok(())
}

/// Regime tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `λρ = 0`, vanishing determinant: `Z` constant.
    #[serde(rename = "LINEAR_D0")]
    LinearD0,
    /// `λρ = 0`, sinusoidal oscillation with angular frequency `√(1+Δ²)`.
    #[serde(rename = "LINEAR_Dpos")]
    LinearDpos,
    /// `0 < λρ ≤ 0.2`, `Δ = 0`: nearly sinusoidal, zero mean.
    #[serde(rename = "SMALL_LR")]
    SmallLr,
    #[serde(rename = "DELTA0_K_LT1")]
    Delta0KLt1,
    /// Separatrix: `Z → 0` as `sech`.
    #[serde(rename = "DELTA0_K_EQ1")]
    Delta0KEq1,
    /// Self-trapped `dn` oscillation.
    #[serde(rename = "DELTA0_K_GT1")]
    Delta0KGt1,
    #[serde(rename = "GEN_DELTA_NEG")]
    GenDeltaNeg,
    /// `δ = 0`, `g3 > 0`: trigonometric oscillation.
    #[serde(rename = "GEN_DELTA_ZERO_OSC")]
    GenDeltaZeroOsc,
    /// `δ = 0`, `g3 < 0`: exponential approach to a fixed value.
    #[serde(rename = "GEN_DELTA_ZERO_DECAY")]
    GenDeltaZeroDecay,
    #[serde(rename = "GEN_DELTA_POS")]
    GenDeltaPos,
    /// Stationary state or oscillation amplitude below threshold.
    #[serde(rename = "FROZEN_INF")]
    FrozenInf,
}

impl Branch {
    pub const ALL: [Branch; 11] = [
        Branch::LinearD0,
        Branch::LinearDpos,
        Branch::SmallLr,
        Branch::Delta0KLt1,
        Branch::Delta0KEq1,
        Branch::Delta0KGt1,
        Branch::GenDeltaNeg,
        Branch::GenDeltaZeroOsc,
        Branch::GenDeltaZeroDecay,
        Branch::GenDeltaPos,
        Branch::FrozenInf,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Branch::LinearD0 => "LINEAR_D0",
            Branch::LinearDpos => "LINEAR_Dpos",
            Branch::SmallLr => "SMALL_LR",
            Branch::Delta0KLt1 => "DELTA0_K_LT1",
            Branch::Delta0KEq1 => "DELTA0_K_EQ1",
            Branch::Delta0KGt1 => "DELTA0_K_GT1",
            Branch::GenDeltaNeg => "GEN_DELTA_NEG",
            Branch::GenDeltaZeroOsc => "GEN_DELTA_ZERO_OSC",
            Branch::GenDeltaZeroDecay => "GEN_DELTA_ZERO_DECAY",
            Branch::GenDeltaPos => "GEN_DELTA_POS",
            Branch::FrozenInf => "FROZEN_INF",
        }
    }

    pub fn is_constant(self) -> bool {
        matches!(self, Branch::LinearD0 | Branch::FrozenInf)
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Branch {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Branch::ALL
            .into_iter()
            .find(|b| b.tag() == s)
            .ok_or_else(|| format!("unknown branch tag {s:?}"))
    }
}

/// Which expression supplies the `Δ = 0` elliptic parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusForm {
    /// `m = ½[1 + (H0λρ−1)/√((λρ)²+1−2H0λρ)]`.
    #[default]
    Corrected,
    /// The square-root-free expression; kept as a negative control.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// `|δ| ≤ tol·max(|g2|³, 27g3²)` counts as `δ = 0`.
    pub degenerate_tol: f64,
    /// `|m − 1| ≤ tol` counts as the separatrix.
    pub separatrix_tol: f64,
    /// Oscillation amplitudes below this are reported as frozen.
    pub frozen_amplitude: f64,
    /// Upper end of the small-`λρ` tag for `Δ = 0`.
    pub small_lr_max: f64,
    pub modulus: ModulusForm,
    /// `|⟨Z⟩|` above this flags self-trapping.
    pub mqst_threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            degenerate_tol: DEGENERATE_REL_TOL,
            separatrix_tol: 1e-10,
            frozen_amplitude: 1e-12,
            small_lr_max: 0.2,
            modulus: ModulusForm::Corrected,
            mqst_threshold: 1e-3,
        }
    }
}

/// Flat classification record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub branch: Branch,
    pub lambda_rho: f64,
    pub delta: f64,
    pub z0: f64,
    pub theta0: f64,
    pub h0: f64,
    /// Elliptic parameter on the `Δ = 0` path.
    pub k: Option<f64>,
    /// `k` folded into `[0, 1]`: `k` below the separatrix, `1/k` above.
    pub k_tilde: Option<f64>,
    pub c_amp: Option<f64>,
    pub alpha_sq: Option<f64>,
    /// `ζ = S^{1/2}`; with `ζ²` taken as `S` the amplitude relations for `C²`
    /// and `α²` hold exactly.
    pub zeta: Option<f64>,
    pub g2: Option<f64>,
    pub g3: Option<f64>,
    pub discriminant: Option<f64>,
    pub discriminant_rel: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    pub e_im: Option<f64>,
    /// `1 − H0²/(1+Δ²)` on the linear path.
    pub determinant: Option<f64>,
    pub z1: Option<f64>,
    pub s0: Option<f64>,
    pub z_min: f64,
    pub z_max: f64,
    /// `None` when the motion is not periodic; see `period_infinite`.
    pub period: Option<f64>,
    pub period_infinite: bool,
    /// Angular frequency in `s̃` units.
    pub frequency: Option<f64>,
    /// Time average of `Z` (long-time limit for aperiodic branches).
    pub mean_z: f64,
    /// Midpoint between the turning points, where defined.
    pub midpoint_z: Option<f64>,
    pub mqst: bool,
    pub zc: Option<f64>,
}

/// Predicted period of a classified trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Period {
    Finite(f64),
    Infinite,
    NotOscillatory,
}

impl RegimeReport {
    pub fn period_value(&self) -> Period {
        match (self.period, self.period_infinite) {
            (Some(t), _) => Period::Finite(t),
            (None, true) => Period::Infinite,
            (None, false) => Period::NotOscillatory,
        }
    }
}

/// Period of the classified motion.
pub fn period(report: &RegimeReport) -> Period {
    report.period_value()
}

/// Evaluable closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        z: f64,
    },
    /// `mean − amp·sin(omega·s − phase)`.
    Sinusoid {
        mean: f64,
        amp: f64,
        omega: f64,
        phase: f64,
    },
    /// `c·cn(omega·s + phase, m)`.
    Cn {
        c: f64,
        omega: f64,
        m: f64,
        phase: f64,
    },
    /// `c·sech(rate·s + phase)`.
    Sech {
        c: f64,
        rate: f64,
        phase: f64,
    },
    /// `c·dn(rate·s + phase, mu)`.
    Dn {
        c: f64,
        rate: f64,
        mu: f64,
        phase: f64,
    },
    /// `z1 + fp4 / (℘(half_l·(s − s0)) − shift)`.
    Weierstrass {
        z1: f64,
        fp4: f64,
        shift: f64,
        half_l: f64,
        s0: f64,
        inv: WeierstrassInvariants,
        sign: DiscriminantSign,
    },
}

impl Profile {
    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(match *self {
            Profile::Constant { z } => z,
            Profile::Sinusoid {
                mean,
                amp,
                omega,
                phase,
            } => mean - amp * (omega * s - phase).sin(),
            Profile::Cn { c, omega, m, phase } => c * jacobi_sn_cn_dn(omega * s + phase, m)?.1,
            Profile::Sech { c, rate, phase } => c / (rate * s + phase).cosh(),
            Profile::Dn { c, rate, mu, phase } => c * jacobi_sn_cn_dn(rate * s + phase, mu)?.2,
            Profile::Weierstrass {
                z1,
                fp4,
                shift,
                half_l,
                s0,
                ref inv,
                sign,
            } => z1 + fp4 * weierstrass_reciprocal(half_l * (s - s0), inv, shift, sign)?,
        })
    }
}

/// Classification together with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub report: RegimeReport,
    pub profile: Profile,
}

impl Solution {
    pub fn eval(&self, s: f64) -> Result<f64> {
        self.profile.eval(s)
    }
}

/// Classifies the trajectory starting at `(z0, theta0)`.
pub fn classify(
    p: &SystemParams,
    z0: f64,
    theta0: f64,
    opts: &ClassifyOptions,
) -> Result<RegimeReport> {
    Ok(solve(p, z0, theta0, opts)?.report)
}

/// Classifies and builds the closed-form solution.
pub fn solve(p: &SystemParams, z0: f64, theta0: f64, opts: &ClassifyOptions) -> Result<Solution> {
    p.validate()?;
    check_initial(z0, theta0)?;
    let h0 = energy(z0, theta0, p);
    let mut report = RegimeReport {
        branch: Branch::FrozenInf,
        lambda_rho: p.lambda_rho,
        delta: p.delta,
        z0,
        theta0,
        h0,
        k: None,
        k_tilde: None,
        c_amp: None,
        alpha_sq: None,
        zeta: None,
        g2: None,
        g3: None,
        discriminant: None,
        discriminant_rel: None,
        e1: None,
        e2: None,
        e3: None,
        e_im: None,
        determinant: None,
        z1: None,
        s0: None,
        z_min: z0,
        z_max: z0,
        period: None,
        period_infinite: false,
        frequency: None,
        mean_z: z0,
        midpoint_z: None,
        mqst: false,
        zc: crate::mqst::critical_imbalance(p.lambda_rho, theta0).ok().flatten(),
    };

    let profile = if p.lambda_rho == 0.0 {
        linear(p, z0, theta0, &mut report)
    } else if is_stationary(p, z0, theta0) {
        frozen(z0, &mut report)
    } else if p.delta == 0.0 {
        delta_zero(p, z0, theta0, opts, &mut report)?
    } else {
        general(p, z0, theta0, opts, &mut report)?
    };

    if let Some(t) = report.period {
        report.frequency = Some(2.0 * PI / t);
    }
    report.mqst = report.mean_z.abs() > opts.mqst_threshold;
    Ok(Solution { report, profile })
}

fn is_stationary(p: &SystemParams, z0: f64, theta0: f64) -> bool {
    if z0.abs() >= 1.0 {
        return false;
    }
    let (dz, dt) = deriv(z0, theta0, p);
    dz.hypot(dt) <= 1e-12 * (1.0 + p.lambda_rho + p.delta.abs())
}

/// Width of the region where the quadratic model of `(λρ²/4) f` about `z0`
/// is non-negative. Built from `1 − Z² − P²` with `P = √(1−z0²) cos Θ0` at
/// `z0`, so it stays accurate when the quartic roots are ill-conditioned.
fn local_amplitude(p: &SystemParams, z0: f64, theta0: f64) -> f64 {
    let r = 1.0 - z0 * z0;
    let p0 = r.sqrt() * theta0.cos();
    let dp = p.lambda_rho * z0 + p.delta;
    let f0 = r * theta0.sin().powi(2);
    let f1 = -2.0 * z0 - 2.0 * p0 * dp;
    let f2 = -2.0 - 2.0 * dp * dp - 2.0 * p0 * p.lambda_rho;
    if f2 >= 0.0 {
        return f64::INFINITY;
    }
    2.0 * (f1 * f1 - 2.0 * f0 * f2).max(0.0).sqrt() / f2.abs()
}

fn frozen(z0: f64, report: &mut RegimeReport) -> Profile {
    report.branch = Branch::FrozenInf;
    report.mean_z = z0;
    report.z_min = z0;
    report.z_max = z0;
    Profile::Constant { z: z0 }
}

fn linear(p: &SystemParams, z0: f64, theta0: f64, report: &mut RegimeReport) -> Profile {
    let d = p.delta;
    let a2 = 1.0 + d * d;
    let a = a2.sqrt();
    let h0 = report.h0;
    let det = 1.0 - h0 * h0 / a2;
    report.determinant = Some(det);
    if det <= 1e-12 {
        report.branch = Branch::LinearD0;
        report.mean_z = z0;
        return Profile::Constant { z: z0 };
    }
    let b = d * h0 / a2;
    let amp = det.sqrt() / a;
    let phase = (a * (z0 - b)).atan2((1.0 - z0 * z0).sqrt() * theta0.sin());
    report.branch = Branch::LinearDpos;
    report.period = Some(2.0 * PI / a);
    report.mean_z = b;
    report.midpoint_z = Some(b);
    report.z_min = b - amp;
    report.z_max = b + amp;
    report.c_amp = Some(amp);
    Profile::Sinusoid {
        mean: b,
        amp,
        omega: a,
        phase,
    }
}

/// Sign for the phase offset: `+1` when `Z` starts moving towards zero
/// (`|Z|` decreasing), `−1` otherwise.
fn toward_zero(z0: f64, theta0: f64, sign: f64) -> f64 {
    let v0 = -(1.0 - z0 * z0).max(0.0).sqrt() * theta0.sin();
    if v0 * sign > 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn delta_zero(
    p: &SystemParams,
    z0: f64,
    theta0: f64,
    opts: &ClassifyOptions,
    report: &mut RegimeReport,
) -> Result<Profile> {
    let l = p.lambda_rho;
    let h0 = report.h0;
    let e = h0 * l - 1.0;
    let s2 = l * l + 1.0 - 2.0 * h0 * l;
    let s = s2.sqrt();
    let m_true = 0.5 * (1.0 + e / s);
    let m = match opts.modulus {
        ModulusForm::Corrected => m_true,
        ModulusForm::Printed => 0.5 * (1.0 + e / s2),
    };
    let c_sq = 2.0 * (e + s) / (l * l);
    let alpha_sq = 2.0 * (s - e) / (l * l);
    let c = c_sq.max(0.0).sqrt();
    report.k = Some(m);
    report.k_tilde = Some(if m <= 1.0 { m } else { 1.0 / m });
    report.c_amp = Some(c);
    report.alpha_sq = Some(alpha_sq);
    report.zeta = Some(s.sqrt());
    let sgn = if z0 < 0.0 { -1.0 } else { 1.0 };

    if (m - 1.0).abs() <= opts.separatrix_tol {
        report.branch = Branch::Delta0KEq1;
        report.period_infinite = true;
        report.mean_z = 0.0;
        report.z_min = if sgn > 0.0 { 0.0 } else { -c };
        report.z_max = if sgn > 0.0 { c } else { 0.0 };
        let u0 = (c / z0.abs()).max(1.0).acosh();
        return Ok(Profile::Sech {
            c: sgn * c,
            rate: 0.5 * l * c,
            phase: toward_zero(z0, theta0, sgn) * u0,
        });
    }

    if m < 1.0 {
        if c < opts.frozen_amplitude {
            return Ok(frozen(z0, report));
        }
        report.branch = if l <= opts.small_lr_max {
            Branch::SmallLr
        } else {
            Branch::Delta0KLt1
        };
        let omega = 0.5 * l * c / m.sqrt();
        let omega = if omega.is_finite() { omega } else { s.sqrt() };
        let u0 = ellint_f((z0 / c).clamp(-1.0, 1.0).acos(), m.max(0.0))?;
        report.period = Some(4.0 * ellint_k(m.max(0.0))? / omega);
        report.mean_z = 0.0;
        report.midpoint_z = Some(0.0);
        report.z_min = -c;
        report.z_max = c;
        return Ok(Profile::Cn {
            c,
            omega,
            m: m.max(0.0),
            phase: toward_zero_sign_cn(z0, theta0) * u0,
        });
    }

    let mu = 1.0 / m;
    let low = (-alpha_sq).max(0.0).sqrt();
    let amplitude = (c - low).max(0.0);
    if amplitude < opts.frozen_amplitude {
        return Ok(frozen(z0, report));
    }
    report.branch = Branch::Delta0KGt1;
    let rate = 0.5 * l * c;
    let sn2 = ((1.0 - (z0 / c).powi(2)) / mu).clamp(0.0, 1.0);
    let u0 = ellint_f(sn2.sqrt().asin(), mu)?;
    let k_mu = ellint_k(mu)?;
    report.period = Some(2.0 * k_mu / rate);
    report.mean_z = sgn * c * PI / (2.0 * k_mu);
    report.midpoint_z = Some(sgn * 0.5 * (c + low));
    report.z_min = if sgn > 0.0 { low } else { -c };
    report.z_max = if sgn > 0.0 { c } else { -low };
    Ok(Profile::Dn {
        c: sgn * c,
        rate,
        mu,
        phase: toward_zero(z0, theta0, sgn) * u0,
    })
}

/// `cn` is decreasing on `[0, 2K]`; start there when `Z` is decreasing.
fn toward_zero_sign_cn(z0: f64, theta0: f64) -> f64 {
    let v0 = -(1.0 - z0 * z0).max(0.0).sqrt() * theta0.sin();
    if v0 > 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn general(
    p: &SystemParams,
    z0: f64,
    theta0: f64,
    opts: &ClassifyOptions,
    report: &mut RegimeReport,
) -> Result<Profile> {
    let q = Quartic::new(p, report.h0)?;
    let inv = q.invariants();
    report.g2 = Some(inv.g2);
    report.g3 = Some(inv.g3);
    report.discriminant = Some(inv.delta);
    report.discriminant_rel = Some(inv.relative_delta());
    match inv.roots {
        CubicRoots::Real { e1, e2, e3 } => {
            report.e1 = Some(e1);
            report.e2 = Some(e2);
            report.e3 = Some(e3);
        }
        CubicRoots::Complex { e2, re, im } => {
            report.e1 = Some(re);
            report.e2 = Some(e2);
            report.e3 = Some(re);
            report.e_im = Some(im);
        }
    }

    let (lo, hi) = q.interval_containing(z0);
    if hi - lo < opts.frozen_amplitude
        || local_amplitude(p, z0, theta0) < opts.frozen_amplitude
    {
        return Ok(frozen(z0, report));
    }
    let sign = inv.sign(opts.degenerate_tol);
    let branch = match sign {
        DiscriminantSign::Positive => Branch::GenDeltaPos,
        DiscriminantSign::Negative => Branch::GenDeltaNeg,
        DiscriminantSign::Zero if inv.g3 > 0.0 => Branch::GenDeltaZeroOsc,
        DiscriminantSign::Zero => Branch::GenDeltaZeroDecay,
    };
    report.branch = branch;
    report.z_min = lo;
    report.z_max = hi;

    let (z1, s0) = if theta0.sin() == 0.0 || z0.abs() == 1.0 {
        (z0, 0.0)
    } else {
        // Start from a simple turning point; the far end of a decaying
        // branch is a double root that is only reached asymptotically.
        let z1 = if branch == Branch::GenDeltaZeroDecay {
            if q.f_prime(lo).abs() >= q.f_prime(hi).abs() {
                lo
            } else {
                hi
            }
        } else if (z0 - lo).abs() <= (hi - z0).abs() {
            lo
        } else {
            hi
        };
        let t = q.time_from_root(z1, z0);
        let v0 = -(1.0 - z0 * z0).sqrt() * theta0.sin();
        let away = (v0 > 0.0) == (z0 >= z1) || v0 == 0.0;
        (z1, if away { -t } else { t })
    };
    if !(q.f(z1).abs() <= 1e-6 * q.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))) {
        return Err(Error::NoRealRoot(z0));
    }
    let fp4 = 0.25 * q.f_prime(z1);
    let shift = q.f_double_prime(z1) / 24.0;
    report.z1 = Some(z1);
    report.s0 = Some(s0);

    let l = p.lambda_rho;
    match branch {
        Branch::GenDeltaPos => {
            if let CubicRoots::Real { e1, e2, e3 } = inv.roots {
                let m1 = ((e2 - e3) / (e1 - e3)).clamp(0.0, 1.0);
                report.k = Some(m1);
                report.period = Some(4.0 * ellint_k(m1)? / (l * (e1 - e3).sqrt()));
                report.midpoint_z = Some(z1 + fp4 / (2.0 * (e1 - shift)));
            }
            report.mean_z = q.time_average(lo, hi);
        }
        Branch::GenDeltaNeg => {
            let e2 = report.e2.unwrap_or(0.0);
            let h2 = (3.0 * e2 * e2 - inv.g2 / 4.0).sqrt();
            let k2 = (0.5 - 0.75 * e2 / h2).clamp(0.0, 1.0);
            report.k = Some(k2);
            report.period = Some(4.0 * ellint_k(k2)? / (l * h2.sqrt()));
            report.midpoint_z = Some(z1 + fp4 / (2.0 * (e2 - shift)));
            report.mean_z = q.time_average(lo, hi);
        }
        Branch::GenDeltaZeroOsc => {
            let c = inv.degenerate_scale();
            report.period = Some(2.0 * PI / (l * (3.0 * c).sqrt()));
            report.midpoint_z = Some(z1 + fp4 / (2.0 * (2.0 * c - shift)));
            report.mean_z = q.time_average(lo, hi);
        }
        _ => {
            let c = inv.degenerate_scale();
            report.period_infinite = true;
            report.mean_z = z1 + fp4 / (c - shift);
        }
    }

    Ok(Profile::Weierstrass {
        z1,
        fp4,
        shift,
        half_l: 0.5 * l,
        s0,
        inv,
        sign,
    })
}

/// `Z(s̃)` on the `λρ = 0` path.
pub fn solve_linear(p: &SystemParams, z0: f64, theta0: f64, s: f64) -> Result<f64> {
    if p.lambda_rho != 0.0 {
        return Err(domain("lambda_rho", p.lambda_rho, "= 0 for the linear solution"));
    }
    solve(p, z0, theta0, &ClassifyOptions::default())?.eval(s)
}

/// `Z(s̃)` on the `λρ > 0`, `Δ = 0` path.
pub fn solve_delta0(p: &SystemParams, z0: f64, theta0: f64, s: f64) -> Result<f64> {
    if !(p.lambda_rho > 0.0 && p.delta == 0.0) {
        return Err(domain("delta", p.delta, "= 0 with lambda_rho > 0"));
    }
    solve(p, z0, theta0, &ClassifyOptions::default())?.eval(s)
}

/// `Z(s̃)` on the `λρ > 0`, `Δ ≠ 0` path.
pub fn solve_general(p: &SystemParams, z0: f64, theta0: f64, s: f64) -> Result<f64> {
    if !(p.lambda_rho > 0.0 && p.delta != 0.0) {
        return Err(domain("delta", p.delta, "!= 0 with lambda_rho > 0"));
    }
    solve(p, z0, theta0, &ClassifyOptions::default())?.eval(s)
}

/// Ingredients of the small-`λρ` expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallLrForm {
    /// `k = Z0λρ(1 − (λρ/2)√(1−Z0²))`, `ω = 1 + (λρ/2)√(1−Z0²)`.
    Printed,
    /// Parameter from the quartic, frequency `1 + (λρ/2)√(1−Z0²)`.
    #[default]
    QuarticModulus,
    /// Parameter and frequency from the exact `cn` solution.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallLrValue {
    pub z: f64,
    pub k: f64,
    pub omega: f64,
    /// `λρ > 0.2`, `Δ ≠ 0` or `|z0| ≥ 1`: outside the expansion's range.
    pub out_of_range: bool,
}

/// Near-sinusoidal `Δ = 0` solution for `λρ ≪ 1`, started at rest (`Θ0 = 0`):
/// `Z0[cos u + (k/4)(u − sin u cos u) sin u]` with `u = ω s̃`.
pub fn small_lr_solution(p: &SystemParams, z0: f64, s: f64) -> Result<SmallLrValue> {
    small_lr_solution_with(p, z0, s, SmallLrForm::default())
}

pub fn small_lr_solution_with(
    p: &SystemParams,
    z0: f64,
    s: f64,
    form: SmallLrForm,
) -> Result<SmallLrValue> {
    p.validate()?;
    check_initial(z0, 0.0)?;
    let l = p.lambda_rho;
    let root = (1.0 - z0 * z0).sqrt();
    let printed_omega = 1.0 + 0.5 * l * root;
    let (k, omega) = match form {
        SmallLrForm::Printed => (z0 * l * (1.0 - 0.5 * l * root), printed_omega),
        SmallLrForm::QuarticModulus | SmallLrForm::Exact => {
            let h0 = 0.5 * l * z0 * z0 - root;
            let e = h0 * l - 1.0;
            let s_root = (l * l + 1.0 - 2.0 * h0 * l).sqrt();
            let m = (0.5 * (1.0 + e / s_root)).max(0.0);
            if form == SmallLrForm::Exact {
                (m, s_root.sqrt())
            } else {
                (m, printed_omega)
            }
        }
    };
    let u = omega * s;
    let (su, cu) = u.sin_cos();
    Ok(SmallLrValue {
        z: z0 * (cu + 0.25 * k * (u - su * cu) * su),
        k,
        omega,
        out_of_range: l > 0.2 || p.delta != 0.0,
    })
}

/// First-order small-`λρ` angular frequency for `Δ ≠ 0`:
/// `√(1+Δ²) + (Z0Δ − √(1−Z0²))(2Δ²−1)λρ / (2(1+Δ²)^{3/2})`.
pub fn small_lr_frequency(p: &SystemParams, z0: f64) -> f64 {
    let d2 = p.delta * p.delta;
    (1.0 + d2).sqrt()
        + (z0 * p.delta - (1.0 - z0 * z0).sqrt()) * (2.0 * d2 - 1.0) * p.lambda_rho
            / (2.0 * (1.0 + d2).powf(1.5))
}
