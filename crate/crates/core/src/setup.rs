//! Double-ring optical lattice geometry and the reduction from lattice
//! (Bose-Hubbard) parameters to the two-mode dynamical parameters.
//!
//! Formulas are written with ħ = 1. Any consistent choice of mass, length and
//! energy units works; [`inter_ring_tunneling`] scales as `g(b·m, a·d, V0/(b·a²))
//! = g(m, d, V0)/(b·a²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Beam geometry of the double-ring trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSetup {
    /// Intensity scale; the lattice depth is `V0 = 4·E0²`.
    pub e0_sq: f64,
    /// Azimuthal index of the Laguerre-Gauss mode, equal to the site count per ring.
    pub l: u32,
    pub k_lg: f64,
    pub wavelength: f64,
    pub focal_length: f64,
    /// Separation of the two Gaussian beams before the lens.
    pub beam_separation: f64,
    pub mass: f64,
    /// Beam waist.
    pub r0: f64,
}

impl OpticalSetup {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(domain("l", self.l as f64, "l >= 2"));
        }
        for (name, v) in [
            ("e0_sq", self.e0_sq),
            ("k_lg", self.k_lg),
            ("wavelength", self.wavelength),
            ("focal_length", self.focal_length),
            ("beam_separation", self.beam_separation),
            ("mass", self.mass),
            ("r0", self.r0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(name, v, "finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> f64 {
        4.0 * self.e0_sq
    }

    /// Effective wave vector of the interfering Gaussian beams, `2πD/(λf)`.
    pub fn k_g(&self) -> f64 {
        2.0 * PI * self.beam_separation / (self.wavelength * self.focal_length)
    }
}

/// Lattice (Bose-Hubbard ladder) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    pub t: f64,
    pub g: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub mu_a: f64,
    pub mu_b: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "N_T")]
    pub n_t: f64,
}

/// Reduced parameters of the two-mode equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub lambda_rho: f64,
    pub delta: f64,
    /// Rabi scale `2g`; dimensionless time is `s̃ = ω0·s` with ħ = 1.
    pub omega0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<MicroParams>,
}

impl SystemParams {
    pub fn new(lambda_rho: f64, delta: f64) -> Self {
        SystemParams {
            lambda_rho,
            delta,
            omega0: 1.0,
            provenance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_rho.is_finite() && self.lambda_rho >= 0.0) {
            return Err(domain("lambda_rho", self.lambda_rho, "finite and >= 0"));
        }
        if !self.delta.is_finite() {
            return Err(domain("delta", self.delta, "finite"));
        }
        Ok(())
    }
}

/// Radial profile of the `p = 0` Laguerre-Gauss mode,
/// `√(2/(π l!)) ε^l e^{-ε²}` with `ε = √2 r / r0`.
pub fn lg_profile(r: f64, l: u32, r0: f64) -> f64 {
    let eps = std::f64::consts::SQRT_2 * r / r0;
    (2.0 / (PI * factorial(l))).sqrt() * eps.powi(l as i32) * (-eps * eps).exp()
}

/// Radius where [`lg_profile`] peaks, `r0·√(l/2)/√2 = r0·√l / 2`.
pub fn lg_profile_peak(l: u32, r0: f64) -> f64 {
    0.5 * r0 * (l as f64).sqrt()
}

/// Relative depth of the azimuthal wells, `√(1/l!)`. Not used by the dynamics.
pub fn well_depth_scaling(l: u32) -> f64 {
    (1.0 / factorial(l)).sqrt()
}

fn factorial(l: u32) -> f64 {
    (1..=l).map(f64::from).product()
}

/// Optical potential of the double-ring trap at cylindrical `(r, φ, z)`.
pub fn lattice_potential(r: f64, phi: f64, z: f64, setup: &OpticalSetup) -> f64 {
    let fl = lg_profile(r, setup.l, setup.r0);
    let a = (setup.k_lg * z).cos();
    let b = (setup.k_g() * z).cos();
    setup.depth() * (fl * fl * a * a + b * b + 2.0 * fl * a * b * (setup.l as f64 * phi).cos())
}

/// Distance between neighbouring rings, `d = λf/D`.
pub fn ring_spacing(setup: &OpticalSetup) -> Result<f64> {
    spacing(setup.wavelength, setup.focal_length, setup.beam_separation)
}

/// [`ring_spacing`] from the three lengths alone.
pub fn spacing(wavelength: f64, focal_length: f64, beam_separation: f64) -> Result<f64> {
    if !(beam_separation > 0.0 && beam_separation.is_finite()) {
        return Err(domain("beam_separation", beam_separation, "finite and > 0"));
    }
    if !(wavelength > 0.0 && focal_length > 0.0) {
        return Err(domain("wavelength*focal_length", wavelength * focal_length, "> 0"));
    }
    Ok(wavelength * focal_length / beam_separation)
}

/// Recoil energy of the z-lattice, `k²/(2m)` with `k = π/d`.
pub fn recoil_energy(d: f64, mass: f64) -> f64 {
    let k = PI / d;
    k * k / (2.0 * mass)
}

/// Tunneling amplitude between neighbouring rings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tunneling {
    pub g: f64,
    pub recoil_energy: f64,
    /// `V0 < 5·E_r`: the deep-lattice approximation behind the formula is poor.
    pub shallow_warning: bool,
}

/// `g = 4 (1/√(2m))^{1/2} V0^{3/4} d^{-1/2} exp(-√(2 m V0) d / π)`.
pub fn inter_ring_tunneling(v0: f64, d: f64, mass: f64) -> Result<Tunneling> {
    for (name, v) in [("V0", v0), ("d", d), ("mass", mass)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(domain(name, v, "finite and > 0"));
        }
    }
    let g = 4.0 * (1.0 / (2.0 * mass).sqrt()).sqrt() * v0.powf(0.75) / d.sqrt()
        * (-(2.0 * mass * v0).sqrt() * d / PI).exp();
    let recoil = recoil_energy(d, mass);
    Ok(Tunneling {
        g,
        recoil_energy: recoil,
        shallow_warning: v0 < 5.0 * recoil,
    })
}

/// Maps lattice parameters to `(λρ, Δ, ω0)`.
pub fn reduce_params(micro: &MicroParams) -> Result<SystemParams> {
    if !(micro.g.is_finite() && micro.g > 0.0) {
        return Err(domain("g", micro.g, "finite and > 0"));
    }
    if micro.n < 2 {
        return Err(domain("N", micro.n as f64, "N >= 2"));
    }
    if !(micro.n_t > 0.0) {
        return Err(domain("N_T", micro.n_t, "> 0"));
    }
    let n = micro.n as f64;
    let two_g = 2.0 * micro.g;
    let delta = (2.0 * micro.t * ((micro.phi_a / n).cos() - (micro.phi_b / n).cos()) + micro.mu_b
        - micro.mu_a)
        / two_g;
    Ok(SystemParams {
        lambda_rho: micro.u / two_g * (micro.n_t / n),
        delta,
        omega0: two_g,
        provenance: Some(*micro),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> OpticalSetup {
        OpticalSetup {
            e0_sq: 1.0,
            l: 20,
            k_lg: 3.0,
            wavelength: 0.83,
            focal_length: 40_000.0,
            beam_separation: 10_000.0,
            mass: 1.0,
            r0: 5.0,
        }
    }

    fn micro() -> MicroParams {
        MicroParams {
            t: 1.0,
            g: 0.5,
            u: 0.02,
            mu_a: 0.0,
            mu_b: 0.0,
            phi_a: 0.3,
            phi_b: 0.3,
            n: 20,
            n_t: 1000.0,
        }
    }

    #[test]
    fn potential_at_origin_of_angles() {
        let s = setup();
        let r = lg_profile_peak(s.l, s.r0);
        let fl = lg_profile(r, s.l, s.r0);
        let v = lattice_potential(r, 0.0, 0.0, &s);
        assert!((v - 4.0 * (fl + 1.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn profile_peaks_where_claimed() {
        let r = lg_profile_peak(6, 2.0);
        let f = |x| lg_profile(x, 6, 2.0);
        assert!(f(r) > f(r * 0.999) && f(r) > f(r * 1.001));
    }

    #[test]
    fn equal_wave_vectors_collapse_z_dependence() {
        let mut s = setup();
        s.k_lg = s.k_g();
        let r = 3.0;
        let fl = lg_profile(r, s.l, s.r0);
        for i in 0..50 {
            let z = -2.0 + 0.08 * i as f64;
            let phi = 0.1 * i as f64;
            let c = (s.k_lg * z).cos();
            let expected = 4.0 * c * c * (fl * fl + 1.0 + 2.0 * fl * (20.0 * phi).cos());
            assert!((lattice_potential(r, phi, z, &s) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn spacing_halves_when_separation_doubles() {
        let d1 = spacing(0.83, 40.0, 5.0).unwrap();
        let d2 = spacing(0.83, 40.0, 10.0).unwrap();
        assert!((d1 - 2.0 * d2).abs() < 1e-15);
        assert!(spacing(0.83, 40.0, 0.0).is_err());
    }

    #[test]
    fn tunneling_ratio_on_doubling() {
        let (v0, d, m) = (30.0, 0.7, 1.3);
        let g1 = inter_ring_tunneling(v0, d, m).unwrap().g;
        let g2 = inter_ring_tunneling(v0, 2.0 * d, m).unwrap().g;
        let expected = (-(2.0 * m * v0).sqrt() * d / PI).exp() / 2f64.sqrt();
        assert!((g2 / g1 - expected).abs() < 1e-14);
    }

    #[test]
    fn tunneling_unit_scaling() {
        let (v0, d, m) = (40.0, 1.1, 0.8);
        let (a, b) = (2.5, 0.3);
        let g = inter_ring_tunneling(v0, d, m).unwrap().g;
        let scaled = inter_ring_tunneling(v0 / (b * a * a), a * d, b * m).unwrap().g;
        assert!((scaled - g / (b * a * a)).abs() <= 1e-12 * g.abs());
    }

    #[test]
    fn tunneling_rejects_nonpositive_and_warns_when_shallow() {
        assert!(inter_ring_tunneling(0.0, 1.0, 1.0).is_err());
        assert!(inter_ring_tunneling(1.0, -1.0, 1.0).is_err());
        let t = inter_ring_tunneling(1.0, 1.0, 1.0).unwrap();
        assert!(t.shallow_warning);
        let t = inter_ring_tunneling(100.0, 1.0, 1.0).unwrap();
        assert!(!t.shallow_warning);
    }

    #[test]
    fn symmetric_rings_have_no_drive() {
        let p = reduce_params(&micro()).unwrap();
        assert_eq!(p.delta, 0.0);
        assert!((p.lambda_rho - 1.0).abs() < 1e-15);
        assert_eq!(p.omega0, 1.0);
    }

    #[test]
    fn quarter_turn_flux_gives_t_over_g() {
        let mut m = micro();
        m.phi_a = 0.0;
        m.phi_b = PI * m.n as f64 / 2.0;
        let p = reduce_params(&m).unwrap();
        assert!((p.delta - m.t / m.g).abs() < 1e-14);
    }

    #[test]
    fn no_interaction_means_linear_regime() {
        let mut m = micro();
        m.u = 0.0;
        assert_eq!(reduce_params(&m).unwrap().lambda_rho, 0.0);
        m.g = 0.0;
        assert!(reduce_params(&m).is_err());
    }

    #[test]
    fn well_depth_scaling_values() {
        assert!((well_depth_scaling(3) - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }
}
