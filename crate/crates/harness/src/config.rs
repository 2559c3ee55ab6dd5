//! JSON run configuration.
//!
//! ```json
//! { "schema": 1, "case": "case6", "sim": { "n_segments": 100, "t_end": 10 } }
//! ```
//!
//! Every field except `case` (or `coefficients`) has a default.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use filament_core::coeffs::ModalCoeffs;
use filament_core::eigen::EigenBasis;
use filament_core::forcing::{library_case_with, traveling_wave, ForcingSpec, Normalization};
use filament_core::sim::SimConfig;
use filament_core::state::FilamentState;
use filament_core::trajectory::Method;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Initial shape, all starting at the origin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    #[default]
    Straight,
    Semicircle,
    /// Constant curvature.
    Bent {
        curvature: f64,
    },
}

impl Initial {
    pub fn build(self, n: usize) -> Result<FilamentState> {
        Ok(match self {
            Initial::Straight => FilamentState::straight(n)?,
            Initial::Semicircle => FilamentState::semicircle(n)?,
            Initial::Bent { curvature } => FilamentState::from_curvature(n, |_| curvature)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema: u32,
    /// `case1`..`case9`, `wave` (travelling wave) or `none` (unforced).
    #[serde(default)]
    pub case: Option<String>,
    /// Modal coefficient CSV (`m,k,a,b`). Required for `case8` and `case9`,
    /// and usable on its own. Relative paths resolve against the config file.
    #[serde(default)]
    pub coefficients: Option<PathBuf>,
    #[serde(default)]
    pub normalization: Normalization,
    /// Multiplies the forcing.
    #[serde(default = "unit")]
    pub amplitude: f64,
    /// Overrides the forcing frequency.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "method_a")]
    pub method: Method,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub seed: u64,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn unit() -> f64 {
    1.0
}

fn method_a() -> Method {
    Method::A
}

impl RunConfig {
    pub fn for_case(case: &str) -> Self {
        serde_json::from_value(serde_json::json!({ "case": case })).expect("defaults deserialize")
    }
}

/// A validated configuration with its forcing and initial state built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub forcing: ForcingSpec,
    pub initial: FilamentState,
    /// Absolute path of the coefficient file, if one was read.
    pub coefficient_file: Option<PathBuf>,
}

fn config_err(path: &str, message: impl ToString) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.to_string(),
    }
}

pub fn parse_config(path: &Path) -> Result<Resolved> {
    let text =
        std::fs::read_to_string(path).map_err(|e| config_err(&path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Parses and validates `text`; schema errors name the offending field.
pub fn parse_config_str(text: &str, base: &Path) -> Result<Resolved> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner())
    })?;
    resolve(config, base)
}

pub fn resolve(config: RunConfig, base: &Path) -> Result<Resolved> {
    if config.schema != SCHEMA_VERSION {
        return Err(config_err(
            "schema",
            format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                config.schema
            ),
        ));
    }
    config.sim.validate().map_err(|e| config_err("sim", e))?;
    if !config.amplitude.is_finite() {
        return Err(config_err("amplitude", "must be finite"));
    }
    if let Some(w) = config.omega {
        if !(w.is_finite() && w > 0.0) {
            return Err(config_err("omega", format!("must be positive, got {w}")));
        }
    }
    if let Initial::Bent { curvature } = config.initial {
        if !curvature.is_finite() {
            return Err(config_err("initial.curvature", "must be finite"));
        }
    }
    let coefficient_file = config.coefficients.as_ref().map(|p| base.join(p));
    let forcing = build_forcing(&config, coefficient_file.as_deref())?;
    let initial = config.initial.build(config.sim.n_segments)?;
    Ok(Resolved {
        config,
        forcing,
        initial,
        coefficient_file,
    })
}

fn build_forcing(config: &RunConfig, coefficients: Option<&Path>) -> Result<ForcingSpec> {
    let omega = config.omega.unwrap_or(2.0 * std::f64::consts::PI);
    let spec = match (config.case.as_deref(), coefficients) {
        (Some("case8" | "case9") | None, Some(file)) => {
            let c = ModalCoeffs::load(file).map_err(|e| config_err("coefficients", e))?;
            let basis =
                Arc::new(EigenBasis::new(c.k_max()).map_err(|e| config_err("coefficients", e))?);
            ForcingSpec::modal(omega, basis, &c)?
        }
        (Some(id @ ("case8" | "case9")), None) => {
            return Err(config_err(
                "coefficients",
                format!("{id} needs a coefficient file"),
            ));
        }
        (Some(_), Some(_)) => {
            return Err(config_err(
                "coefficients",
                "only case8 and case9 take a coefficient file",
            ));
        }
        (Some("wave"), None) => traveling_wave(),
        (Some("none"), None) => ForcingSpec::zero(),
        (Some(id), None) => {
            library_case_with(id, config.normalization).map_err(|e| config_err("case", e))?
        }
        (None, None) => {
            return Err(config_err(
                "case",
                "either case or coefficients is required",
            ))
        }
    };
    let spec = match config.omega {
        Some(w) => spec.with_omega(w)?,
        None => spec,
    };
    Ok(if config.amplitude == 1.0 {
        spec
    } else {
        spec.scaled(config.amplitude)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Resolved> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let r = parse(r#"{"case": "case6"}"#).unwrap();
        assert_eq!(r.config.sim, SimConfig::default());
        assert_eq!(r.config.sim.gamma, 1.0);
        assert_eq!(r.config.sim.n_segments, 100);
        assert_eq!(r.forcing.omega(), 2.0 * std::f64::consts::PI);
        assert_eq!(r.config.method, Method::A);
        assert_eq!(r.initial, FilamentState::straight(100).unwrap());
        assert_eq!(r.config, RunConfig::for_case("case6"));
    }

    #[test]
    fn three_segments_rejected() {
        let e = parse(r#"{"case": "case6", "sim": {"n_segments": 3}}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "sim"),
            "{e}"
        );
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(r#"{"case": "case6", "sim": {"dt": "small"}}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "sim.dt"),
            "{e}"
        );
        let e = parse(r#"{"case": "case6", "sim": {"n_segment": 50}}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "sim.n_segment"),
            "{e}"
        );
        let e = parse(r#"{"case": "case6", "initial": {"shape": "bent"}}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "initial"),
            "{e}"
        );
    }

    #[test]
    fn unknown_case_rejected() {
        let e = parse(r#"{"case": "case10"}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "case"),
            "{e}"
        );
        let e = parse(r#"{"case": "case8"}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "coefficients"),
            "{e}"
        );
        let e = parse(r#"{"schema": 2, "case": "case1"}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "schema"),
            "{e}"
        );
    }

    #[test]
    fn amplitude_and_shape_apply() {
        let r = parse(
            r#"{"case": "case6", "amplitude": 0.5, "initial": {"shape": "bent", "curvature": 0.1},
                "sim": {"n_segments": 20}}"#,
        )
        .unwrap();
        let full = library_case_with("case6", Normalization::Both).unwrap();
        assert!((r.forcing.kappa0(0.3, 0.2) - 0.5 * full.kappa0(0.3, 0.2)).abs() < 1e-15);
        for k in r.initial.recover_curvature() {
            assert!((k - 0.1).abs() < 1e-12);
        }
    }
}
