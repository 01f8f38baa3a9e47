//! Run configuration: a JSON document whose blocks mirror the command-line
//! flags. Flags win over file values, file values over defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Keeps `self` where set, fills the rest from `fallback`.
pub trait Overlay {
    fn overlay(self, fallback: Self) -> Self;
}

macro_rules! overlay_fields {
    ($ty:ident { $($f:ident),* $(,)? }) => {
        impl Overlay for $ty {
            fn overlay(self, fallback: Self) -> Self {
                $ty { $($f: self.$f.or(fallback.$f)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemBlock {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
}
overlay_fields!(SystemBlock { lambda_rho, delta, z0, theta0 });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateBlock {
    #[arg(long, allow_hyphen_values = true)]
    pub s_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sample_ds: Option<f64>,
}
overlay_fields!(IntegrateBlock { s_max, rel_tol, abs_tol, sample_ds });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// One of z0, theta0, lambda_rho, delta.
    #[arg(long)]
    pub axis: Option<String>,
    /// Inclusive range, e.g. `--range 0,1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub range: Option<Vec<f64>>,
    #[arg(long)]
    pub steps: Option<usize>,
}
overlay_fields!(SweepBlock { axis, range, steps });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitBlock {
    #[arg(long = "e-j", allow_hyphen_values = true)]
    #[serde(rename = "E_J")]
    pub e_j: Option<f64>,
    #[arg(long = "e-jp-ratio", allow_hyphen_values = true)]
    #[serde(rename = "E_Jp_ratio")]
    pub e_jp_ratio: Option<f64>,
    #[arg(long = "phi-diff", allow_hyphen_values = true)]
    #[serde(rename = "Phi_diff")]
    pub phi_diff: Option<f64>,
    #[arg(long = "sites")]
    #[serde(rename = "N")]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub l_max: Option<usize>,
    /// Grid points per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
}
overlay_fields!(QubitBlock { e_j, e_jp_ratio, phi_diff, n, beta, l_max, resolution });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitBlock {
    /// Comma-separated initial imbalances.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub z0_list: Option<Vec<f64>>,
    /// Points per half of a closed curve.
    #[arg(long)]
    pub points: Option<usize>,
}
overlay_fields!(PortraitBlock { z0_list, points });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareBlock {
    #[arg(long, allow_hyphen_values = true)]
    pub max_abs: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub period_rel: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mean_abs: Option<f64>,
}
overlay_fields!(CompareBlock { max_abs, period_rel, mean_abs });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupBlock {
    /// Laser wavelength in metres.
    #[arg(long, allow_hyphen_values = true)]
    pub wavelength: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub focal_length: Option<f64>,
    /// Beam separation(s) before the lens, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub beam_separation: Option<Vec<f64>>,
}
overlay_fields!(SetupBlock { wavelength, focal_length, beam_separation });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyBlock {
    /// Relative discriminant below which `δ` counts as zero.
    #[arg(long, allow_hyphen_values = true)]
    pub degenerate_tol: Option<f64>,
    /// `|m − 1|` below which the orbit counts as the separatrix.
    #[arg(long, allow_hyphen_values = true)]
    pub separatrix_tol: Option<f64>,
}
overlay_fields!(ClassifyBlock { degenerate_tol, separatrix_tol });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Output file; standard output when absent.
    #[arg(long = "output", short = 'o')]
    pub path: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
overlay_fields!(OutputBlock { path, format });

/// Lattice parameters for `setup-params`; file only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicroBlock {
    pub t: Option<f64>,
    pub g: Option<f64>,
    #[serde(rename = "U")]
    pub u: Option<f64>,
    pub mu_a: Option<f64>,
    pub mu_b: Option<f64>,
    pub phi_a: Option<f64>,
    pub phi_b: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    #[serde(rename = "N_T")]
    pub n_t: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub integrate: IntegrateBlock,
    pub classify: ClassifyBlock,
    pub sweep: SweepBlock,
    pub qubit: QubitBlock,
    pub portrait: PortraitBlock,
    pub compare: CompareBlock,
    pub setup: SetupBlock,
    pub micro: Option<MicroBlock>,
    pub output: OutputBlock,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Collects every violation before reporting.
#[derive(Debug, Default)]
pub struct Violations(Vec<String>);

impl Violations {
    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    pub fn required<T: Copy>(&mut self, v: Option<T>, flag: &str) -> Option<T> {
        if v.is_none() {
            self.push(format!("missing required value --{flag}"));
        }
        v
    }

    pub fn check(&mut self, ok: bool, flag: &str, value: impl std::fmt::Debug, expected: &str) {
        if !ok {
            self.push(format!("--{flag} = {value:?} violates {expected}"));
        }
    }

    pub fn finish(self) -> Result<(), Failure> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Failure::Config(self.0))
        }
    }
}
