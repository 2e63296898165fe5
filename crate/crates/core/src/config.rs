//! Scenario configuration, presets and load-time validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cbf::{method1_threshold, CbfConfig, Method1Config};
use crate::controller::{ControllerGains, DerivativeMode};
use crate::emo::EmoParams;
use crate::error::{Error, Result};
use crate::reference::ReferenceSpec;
use crate::vessel::{VesselParams, VesselState};

/// Upper bound on `t_final / dt`; the trace is held in memory.
pub const MAX_STEPS: f64 = 5e7;

/// Surge-positivity mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Method {
    /// Raw controller output; relies on the sway-bound threshold.
    #[default]
    #[serde(rename = "1")]
    Method1,
    /// Controller output projected through the barrier filter.
    #[serde(rename = "2")]
    Method2,
    #[serde(rename = "none")]
    None,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1" => Some(Method::Method1),
            "2" => Some(Method::Method2),
            "none" => Some(Method::None),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Method1 => "1",
            Method::Method2 => "2",
            Method::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmoConfig {
    pub c_u: f64,
    pub c_psi: f64,
    /// Reference speed floor; the smallest reference speed when absent.
    pub u_m: Option<f64>,
}

impl Default for EmoConfig {
    fn default() -> Self {
        Self {
            c_u: 0.2,
            c_psi: 0.2,
            u_m: None,
        }
    }
}

/// Initial pose (heading in degrees) and body velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub x: f64,
    pub y: f64,
    pub psi_deg: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            x: 50.0,
            y: 5.0,
            psi_deg: 30.0,
            u: 1.0,
            v: 0.0,
            r: 0.0,
        }
    }
}

impl InitialState {
    pub fn to_state(&self) -> VesselState {
        VesselState::new(
            self.x,
            self.y,
            self.psi_deg.to_radians(),
            self.u,
            self.v,
            self.r,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub vessel: VesselParams,
    pub gains: ControllerGains,
    pub emo: EmoConfig,
    pub method: Method,
    pub cbf: CbfConfig,
    pub method1: Method1Config,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub initial: InitialState,
    /// Upper bound of the replacement surge speed used during start-up.
    pub delta_u: f64,
    pub derivative_mode: DerivativeMode,
    /// Replace `sigma` by the fixed point of `sigma = exp(-(sigma + 1))`.
    pub fixed_point_sigma: bool,
    /// Sample disturbances; when false the plant sees `d = 0` while the
    /// controller keeps its configured bounds.
    pub disturbance: bool,
    pub reference: ReferenceSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "custom".to_string(),
            vessel: VesselParams::default(),
            gains: ControllerGains::default(),
            emo: EmoConfig::default(),
            method: Method::default(),
            cbf: CbfConfig::default(),
            method1: Method1Config::default(),
            dt: 0.01,
            t_final: 120.0,
            seed: 0,
            initial: InitialState::default(),
            delta_u: 0.05,
            derivative_mode: DerivativeMode::default(),
            fixed_point_sigma: false,
            disturbance: true,
            reference: ReferenceSpec::standard(10.0),
        }
    }
}

/// Derived quantities reported alongside a validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kappa: f64,
    pub u_m: f64,
    /// Contraction rate `c`; the gain condition holds when positive.
    pub gain_margin: f64,
    /// Right-hand side of the sway-bound threshold at `u_m`.
    pub threshold_rhs: f64,
    pub threshold_satisfied: bool,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn u_m(&self) -> f64 {
        self.emo.u_m.unwrap_or_else(|| self.reference.min_speed())
    }

    pub fn emo_params(&self) -> EmoParams {
        EmoParams::new(self.emo.c_u, self.emo.c_psi, self.u_m())
    }

    /// Gains as used by the controller (sigma substituted if requested).
    pub fn effective_gains(&self) -> ControllerGains {
        if self.fixed_point_sigma {
            self.gains.with_fixed_point_sigma()
        } else {
            self.gains
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            out.push(format!("t_final must be > 0 (got {})", self.t_final));
        } else if self.t_final > self.reference.horizon() {
            out.push(format!(
                "t_final {} exceeds the reference horizon {}",
                self.t_final,
                self.reference.horizon()
            ));
        }
        if self.dt > 0.0 && self.t_final > 0.0 && self.t_final / self.dt > MAX_STEPS {
            out.push(format!(
                "t_final / dt = {:.3e} steps exceeds the limit of {MAX_STEPS:e}",
                self.t_final / self.dt
            ));
        }
        if !(self.delta_u > 0.0) {
            out.push(format!("delta_u must be > 0 (got {})", self.delta_u));
        }
        let init = self.initial;
        if ![init.x, init.y, init.psi_deg, init.u, init.v, init.r]
            .iter()
            .all(|v| v.is_finite())
        {
            out.push("initial state must be finite".to_string());
        }
        out.extend(self.vessel.violations());
        out.extend(self.gains.violations());
        out.extend(self.cbf.violations());
        out.extend(self.method1.violations());
        if !(self.emo.c_u > 0.0) {
            out.push(format!("emo.c_u must be > 0 (got {})", self.emo.c_u));
        }
        if !(self.emo.c_psi > 0.0) {
            out.push(format!("emo.c_psi must be > 0 (got {})", self.emo.c_psi));
        }
        let u_m = self.u_m();
        if !(u_m > 0.0) {
            out.push(format!("emo.u_m must be > 0 (got {u_m})"));
        }
        out.extend(self.reference.violations(u_m));
        if u_m > 0.0 && self.emo.c_u > 0.0 && self.emo.c_psi > 0.0 {
            let c = self.emo_params().contraction_rate();
            if !(c > 0.0) {
                out.push(format!(
                    "gain condition: c = min(c_u, c_psi u_m - 2 c_u kappa) = {c} must be > 0"
                ));
            }
        }
        out
    }

    /// Validates and reports derived quantities. The sway-bound threshold is
    /// a sufficient condition only; a violation is reported as a warning.
    pub fn validate(&self) -> Result<ValidationReport> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        let emo = self.emo_params();
        let rhs = method1_threshold(&self.method1, &emo, &self.effective_gains());
        let satisfied = emo.u_m >= rhs;
        let mut warnings = Vec::new();
        if self.method == Method::Method1 && !satisfied {
            warnings.push(format!(
                "u_m = {} is below the sway-bound threshold {rhs:.6}; surge positivity is not guaranteed",
                emo.u_m
            ));
        }
        Ok(ValidationReport {
            kappa: emo.kappa,
            u_m: emo.u_m,
            gain_margin: emo.contraction_rate(),
            threshold_rhs: rhs,
            threshold_satisfied: satisfied,
            method: self.method,
            warnings,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads, fills defaults and validates a JSON scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_json(&text)
}

/// Named scenarios differing only in reference speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2Nominal,
    Fig5Slow,
    Fig6Threshold,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2Nominal, Preset::Fig5Slow, Preset::Fig6Threshold];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2Nominal => "fig2-nominal",
            Preset::Fig5Slow => "fig5-slow",
            Preset::Fig6Threshold => "fig6-threshold",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn u_ld(&self) -> f64 {
        match self {
            Preset::Fig2Nominal => 10.0,
            Preset::Fig5Slow => 1.3,
            Preset::Fig6Threshold => 1.8,
        }
    }

    pub fn config(&self) -> ScenarioConfig {
        ScenarioConfig {
            name: self.name().to_string(),
            reference: ReferenceSpec::standard(self.u_ld()),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::SpeedProfile;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ScenarioConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.gains.k_psi, 40.0);
        assert_eq!(cfg.cbf.delta, 0.6);
        assert_eq!(cfg.u_m(), 10.0);
    }

    #[test]
    fn rejects_gain_condition() {
        let text = r#"{"emo": {"c_u": 10.0, "c_psi": 0.2, "u_m": 1.0}}"#;
        let msg = ScenarioConfig::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("gain condition"), "{msg}");
    }

    #[test]
    fn rejects_zero_reference_speed() {
        let mut cfg = ScenarioConfig::default();
        cfg.reference.segments[1].speed = SpeedProfile::Constant { value: 0.0 };
        cfg.emo.u_m = Some(1.0);
        assert!(matches!(cfg.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn aggregates_violations() {
        let cfg = ScenarioConfig {
            dt: 0.0,
            t_final: -1.0,
            delta_u: 0.0,
            ..Default::default()
        };
        match cfg.validate() {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_parse_error() {
        assert!(matches!(
            ScenarioConfig::from_json(r#"{"dtt": 1}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn slow_preset_warns_only() {
        let rep = Preset::Fig5Slow.config().validate().unwrap();
        assert!(!rep.threshold_satisfied);
        assert_eq!(rep.warnings.len(), 1);
        let rep = Preset::Fig6Threshold.config().validate().unwrap();
        assert!(rep.threshold_satisfied && rep.warnings.is_empty());
    }

    #[test]
    fn method_round_trip() {
        for m in [Method::Method1, Method::Method2, Method::None] {
            let s = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Method>(&s).unwrap(), m);
            assert_eq!(Method::parse(m.label()), Some(m));
        }
    }
}
