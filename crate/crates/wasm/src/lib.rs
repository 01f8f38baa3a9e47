//! Browser bindings. Each export returns a JSON string; the plain functions
//! below do the work so they can be tested natively.

use ring_ladder::analytic::{solve, ClassifyOptions};
use ring_ladder::meanfield::{integrate, IntegrateOptions};
use ring_ladder::mqst::{portrait as portrait_curves, PortraitOptions};
use ring_ladder::qubit::{find_minima, QubitParams};
use ring_ladder::setup::SystemParams;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_SPAN: f64 = 500.0;

fn text(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Integrated and analytic `Z(s̃)` on a common grid, plus the regime report.
pub fn trajectory_json(lambda_rho: f64, delta: f64, z0: f64, theta0: f64, s_max: f64) -> Result<String, String> {
    if !(s_max > 0.0 && s_max <= MAX_SPAN) {
        return Err(format!("s_max must lie in (0, {MAX_SPAN}]"));
    }
    let p = SystemParams::new(lambda_rho, delta);
    let sol = solve(&p, z0, theta0, &ClassifyOptions::default()).map_err(text)?;
    let opts = IntegrateOptions {
        sample_ds: (s_max / 1000.0).max(0.005),
        ..IntegrateOptions::default()
    };
    let traj = integrate(&p, z0, theta0, s_max, &opts).map_err(text)?;
    let s: Vec<f64> = traj.samples.iter().map(|x| x.s).collect();
    let z: Vec<f64> = traj.samples.iter().map(|x| x.z).collect();
    let theta: Vec<f64> = traj.samples.iter().map(|x| x.theta).collect();
    let analytic: Vec<Option<f64>> = s.iter().map(|&t| sol.eval(t).ok()).collect();
    Ok(json!({
        "s": s,
        "z": z,
        "theta": theta,
        "analytic": analytic,
        "max_drift": traj.meta.max_drift,
        "report": sol.report,
    })
    .to_string())
}

/// Phase-portrait curves for the given initial imbalances at a common phase.
pub fn portrait_json(lambda_rho: f64, delta: f64, z0_list: &[f64], theta0: f64) -> Result<String, String> {
    if z0_list.is_empty() || z0_list.len() > 40 {
        return Err("between 1 and 40 initial imbalances".into());
    }
    let p = SystemParams::new(lambda_rho, delta);
    let opts = PortraitOptions {
        points: 200,
        ..PortraitOptions::default()
    };
    let curves = portrait_curves(&p, z0_list, theta0, &opts).map_err(text)?;
    serde_json::to_string(&curves).map_err(text)
}

/// Potential grid, minima and barriers of the coupled-ring qubit.
pub fn landscape_json(ratio: f64, phi_diff: f64, n: u32, resolution: usize) -> Result<String, String> {
    if !(64..=256).contains(&resolution) {
        return Err("resolution must lie in [64, 256]".into());
    }
    let q = QubitParams::symmetric(1.0, ratio, phi_diff, n);
    let land = find_minima(&q, resolution).map_err(text)?;
    Ok(json!({
        "axis": land.axis,
        "grid": land.grid,
        "minima": land.minima,
        "barriers": land.barriers,
        "splitting": land.splitting(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn trajectory(lambda_rho: f64, delta: f64, z0: f64, theta0: f64, s_max: f64) -> Result<String, JsError> {
    trajectory_json(lambda_rho, delta, z0, theta0, s_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn portrait(lambda_rho: f64, delta: f64, z0_list: &[f64], theta0: f64) -> Result<String, JsError> {
    portrait_json(lambda_rho, delta, z0_list, theta0).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn landscape(ratio: f64, phi_diff: f64, n: u32, resolution: usize) -> Result<String, JsError> {
    landscape_json(ratio, phi_diff, n, resolution).map_err(|e| JsError::new(&e))
}
